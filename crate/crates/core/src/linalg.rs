//! Small dense Hermitian eigenvalue routine.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Eigenvalues of a real symmetric matrix (row-major, n×n) by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
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
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// Eigenvalues of a Hermitian m×m matrix via its real 2m×2m embedding, ascending.
pub fn hermitian_eigenvalues(g: &[Complex64], m: usize) -> Vec<f64> {
    let n = 2 * m;
    let mut a = vec![0.0; n * n];
    for i in 0..m {
        for j in 0..m {
            let z = g[i * m + j];
            a[i * n + j] = z.re;
            a[(i + m) * n + (j + m)] = z.re;
            a[i * n + (j + m)] = -z.im;
            a[(i + m) * n + j] = z.im;
        }
    }
    let ev = symmetric_eigenvalues(a, n);
    // each eigenvalue appears twice
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}
