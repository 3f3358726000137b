//! Dense symmetric eigenvalue routines for the tiny matrices used here.
//!
//! Matrices are row-major `n × n` slices.

/// Result of [`power_iteration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_MAX_ITERATIONS: usize = 10_000;
pub const POWER_TOLERANCE: f64 = 1e-12;

/// Dominant eigenvalue of a symmetric positive semi-definite matrix.
///
/// Starts from the normalized all-ones vector and stops once successive
/// Rayleigh quotients agree to `POWER_TOLERANCE` relative.
pub fn power_iteration(sym: &[f64], n: usize) -> PowerEstimate {
    debug_assert_eq!(sym.len(), n * n);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut w = vec![0.0; n];
    let mut previous = rayleigh(sym, n, &v, &mut w);
    if previous == 0.0 && w.iter().all(|&x| x == 0.0) {
        // Either the zero matrix or a start vector in the null space.
        return PowerEstimate {
            eigenvalue: 0.0,
            iterations: 0,
            converged: sym.iter().all(|&x| x == 0.0),
        };
    }
    for it in 1..=POWER_MAX_ITERATIONS {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return PowerEstimate {
                eigenvalue: 0.0,
                iterations: it,
                converged: false,
            };
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let current = rayleigh(sym, n, &v, &mut w);
        if (current - previous).abs() <= POWER_TOLERANCE * current.abs() {
            return PowerEstimate {
                eigenvalue: current,
                iterations: it,
                converged: true,
            };
        }
        previous = current;
    }
    PowerEstimate {
        eigenvalue: previous,
        iterations: POWER_MAX_ITERATIONS,
        converged: false,
    }
}

/// `w = A v`, returns `vᵀ A v` for unit `v`.
fn rayleigh(sym: &[f64], n: usize, v: &[f64], w: &mut [f64]) -> f64 {
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = sym[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
    }
    v.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// sorted in decreasing order.
pub fn jacobi_eigenvalues(sym: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(sym.len(), n * n);
    let mut a = sym.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// `Cᵀ C` for a row-major `n × n` matrix.
pub fn gram(c: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|r| c[r * n + i] * c[r * n + j]).sum();
            g[i * n + j] = s;
            g[j * n + i] = s;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let a = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        assert_eq!(jacobi_eigenvalues(&a, 3), vec![3.0, 2.0, 1.0]);
        let p = power_iteration(&a, 3);
        assert!(p.converged);
        assert!((p.eigenvalue - 3.0).abs() < 1e-10);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let a = [2.0, 1.0, 1.0, 2.0];
        let e = jacobi_eigenvalues(&a, 2);
        assert!((e[0] - 3.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
        assert!((power_iteration(&a, 2).eigenvalue - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let p = power_iteration(&[0.0; 4], 2);
        assert_eq!(p.eigenvalue, 0.0);
        assert!(p.converged);
    }

    #[test]
    fn start_vector_in_null_space_is_flagged() {
        // Only eigenvector with nonzero eigenvalue is (1,-1)/√2, orthogonal to ones.
        let a = [1.0, -1.0, -1.0, 1.0];
        let p = power_iteration(&a, 2);
        assert!(!p.converged);
        assert!((jacobi_eigenvalues(&a, 2)[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gram_matches_definition() {
        let c = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(gram(&c, 2), vec![0.0, 0.0, 0.0, 1.0]);
    }
}
