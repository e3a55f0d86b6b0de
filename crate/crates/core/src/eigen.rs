//! Eigenvalues of dense real matrices.
//!
//! Balancing, orthogonal reduction to upper Hessenberg form, then the
//! Francis double-shift QR iteration with deflation. Eigenvalues only.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {iterations} iterations ({found} of {n} eigenvalues found)")]
    NoConvergence { iterations: usize, found: usize, n: usize },
}

/// All eigenvalues of `a`, sorted by real part descending (then imaginary
/// part descending). Complex eigenvalues come in exact conjugate pairs.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>, EigenError> {
    if !a.is_square() {
        return Err(EigenError::NotSquare(a.rows(), a.cols()));
    }
    if !a.is_finite() {
        return Err(EigenError::NonFinite);
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut eig = hessenberg_qr(&mut h)?;
    sort_eigenvalues(&mut eig);
    Ok(eig)
}

pub fn sort_eigenvalues(eig: &mut [Complex64]) {
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable. Exact in floating point.
fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- (I - 2vv'/v'v) A
        for j in k..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                a[(i, j)] -= f * v[i];
            }
        }
        // A <- A (I - 2vv'/v'v)
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                a[(i, j)] -= f * v[j];
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hessenberg_qr(a: &mut Matrix) -> Result<Vec<Complex64>, EigenError> {
    let n = a.rows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let max_iterations = 30 * n.max(1);
    let mut total = 0usize;
    let mut found = 0usize;
    let mut nn = n as isize - 1;
    let mut shift_acc = 0.0;

    while nn >= 0 {
        let mut its = 0;
        loop {
            // find the lowest negligible subdiagonal entry
            let mut l = nn;
            while l >= 1 {
                let (lu, lm) = (l as usize, l as usize - 1);
                let mut s = a[(lm, lm)].abs() + a[(lu, lu)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(lu, lm)].abs() <= f64::EPSILON * s {
                    a[(lu, lm)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            let mut x = a[(nu, nu)];
            if l == nn {
                wr[nu] = x + shift_acc;
                wi[nu] = 0.0;
                nn -= 1;
                found += 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift_acc;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = z;
                    wi[nu] = -z;
                }
                nn -= 2;
                found += 2;
                break;
            }

            if total >= max_iterations {
                return Err(EigenError::NoConvergence { iterations: total, found, n });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                shift_acc += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            // look for two consecutive small subdiagonal elements
            let lu = l as usize;
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }

            // double QR step on rows l..=nn, columns m..=nn
            let mut xk = 0.0;
            for k in m..nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if lu != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * xk;
                }
                p += s;
                let xx = p / s;
                let yy = q / s;
                let zz = r / s;
                q /= p;
                r /= p;
                for j in k..=nu {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k != nu - 1 {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * zz;
                    }
                    a[(k + 1, j)] -= pp * yy;
                    a[(k, j)] -= pp * xx;
                }
                let mmin = if nu < k + 3 { nu } else { k + 3 };
                for i in lu..=mmin {
                    let mut pp = xx * a[(i, k)] + yy * a[(i, k + 1)];
                    if k != nu - 1 {
                        pp += zz * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, re: f64, im: f64, tol: f64) -> bool {
        (a.re - re).abs() < tol && (a.im - im).abs() < tol
    }

    #[test]
    fn identity() {
        let e = eigenvalues(&Matrix::identity(2)).unwrap();
        assert_eq!(e, vec![Complex64::new(1.0, 0.0); 2]);
    }

    #[test]
    fn smooth_limiter_poles() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [-4.5, -0.4]]);
        let e = eigenvalues(&a).unwrap();
        let im = 4.46f64.sqrt();
        assert!(close(e[0], -0.2, im, 1e-12), "{e:?}");
        assert!(close(e[1], -0.2, -im, 1e-12), "{e:?}");
    }

    #[test]
    fn companion_cubic() {
        // (λ+1)(λ+2)(λ+3) = λ³ + 6λ² + 11λ + 6
        let a = Matrix::from_rows(&[[-6.0, -11.0, -6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let e = eigenvalues(&a).unwrap();
        for (got, want) in e.iter().zip([-1.0, -2.0, -3.0]) {
            assert!(close(*got, want, 0.0, 1e-9), "{e:?}");
        }
    }

    #[test]
    fn rotation_and_zero() {
        let a = Matrix::from_rows(&[[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let e = eigenvalues(&a).unwrap();
        assert!(close(e[0], 0.0, 1.0, 1e-14));
        assert!(close(e[1], 0.0, 0.0, 1e-14));
        assert!(close(e[2], 0.0, -1.0, 1e-14));
    }

    #[test]
    fn empty_and_errors() {
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
        assert_eq!(eigenvalues(&Matrix::zeros(2, 3)), Err(EigenError::NotSquare(2, 3)));
        let mut a = Matrix::identity(2);
        a[(0, 1)] = f64::NAN;
        assert_eq!(eigenvalues(&a), Err(EigenError::NonFinite));
    }

    #[test]
    fn triangular_diagonal_is_spectrum() {
        let a = Matrix::from_fn(6, 6, |i, j| if j >= i { (i + 1) as f64 + 0.1 * j as f64 } else { 0.0 });
        let e = eigenvalues(&a).unwrap();
        for (k, ev) in e.iter().enumerate() {
            let i = 5 - k;
            let want = (i + 1) as f64 + 0.1 * i as f64;
            assert!(close(*ev, want, 0.0, 1e-10), "{e:?}");
        }
    }
}
