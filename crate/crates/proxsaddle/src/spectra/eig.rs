//! Dense nonsymmetric eigenvalue computation for small matrices:
//! Householder reduction to upper Hessenberg form followed by the implicit
//! double-shift QR iteration (the classic EISPACK hqr scheme).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Maximum supported order.
pub const MAX_ORDER: usize = 64;

/// Full spectrum of a real square matrix of order ≤ 64.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Input(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    if n == 0 || n > MAX_ORDER {
        return Err(Error::Input(format!("order must be in 1..={MAX_ORDER}, got {n}")));
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    hqr(&mut h, 100 * n)
}

/// In-place Householder similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut Mat) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..(n - 1) {
        let mut scale = 0.0;
        for i in m..n {
            scale += a[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hsum = 0.0;
        for i in (m..n).rev() {
            ort[i] = a[(i, m - 1)] / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;
        // Apply (I − uuᵀ/h) from the left, then from the right.
        for j in m..n {
            let mut f = 0.0;
            for i in (m..n).rev() {
                f += ort[i] * a[(i, j)];
            }
            f /= hsum;
            for i in m..n {
                a[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let mut f = 0.0;
            for j in (m..n).rev() {
                f += ort[j] * a[(i, j)];
            }
            f /= hsum;
            for j in m..n {
                a[(i, j)] -= f * ort[j];
            }
        }
        a[(m, m - 1)] = scale * g;
        for i in (m + 1)..n {
            a[(i, m - 1)] = 0.0;
        }
    }
}

/// Double-shift QR eigenvalue iteration on an upper Hessenberg matrix.
/// Errors if the total sweep count exceeds `max_sweeps`.
fn hqr(h: &mut Mat, max_sweeps: usize) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }

    let mut sweeps = 0usize;
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nnu = nn as usize;
            // Look for a negligible subdiagonal element.
            let mut l = nnu;
            while l >= 1 {
                let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[(l, l - 1)].abs() <= eps * s {
                    h[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[(nnu, nnu)];
            if l == nnu {
                // One real root.
                wr[nnu] = x + t;
                wi[nnu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h[(nnu - 1, nnu - 1)];
            let mut w = h[(nnu, nnu - 1)] * h[(nnu - 1, nnu)];
            if l == nnu - 1 {
                // A 2x2 block: two real or a complex-conjugate pair.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nnu - 1] = x + z;
                    wr[nnu] = wr[nnu - 1];
                    if z != 0.0 {
                        wr[nnu] = x - w / z;
                    }
                    wi[nnu - 1] = 0.0;
                    wi[nnu] = 0.0;
                } else {
                    wr[nnu - 1] = x + p;
                    wr[nnu] = x + p;
                    wi[nnu - 1] = -z;
                    wi[nnu] = z;
                }
                nn -= 2;
                break;
            }
            // No root isolated yet: run one double-shift sweep.
            if sweeps >= max_sweeps || its >= 30 {
                return Err(Error::Numerical(format!(
                    "QR iteration did not converge within {max_sweeps} sweeps"
                )));
            }
            if its == 10 || its == 20 {
                // Exceptional shift to break cycling.
                t += x;
                for i in 0..=nnu {
                    let d = h[(i, i)];
                    h[(i, i)] = d - x;
                }
                let s = h[(nnu, nnu - 1)].abs() + h[(nnu - 1, nnu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            sweeps += 1;

            // Find two consecutive small subdiagonal elements.
            let mut m = nnu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - rr - ss;
                r = h[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nnu {
                h[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }
            // Double QR step on rows l..=nn, columns m..=nn.
            for k in m..nnu {
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if k != nnu - 1 { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                } else {
                    h[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nnu {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if k != nnu - 1 {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * z;
                    }
                    h[(k + 1, j)] -= pp * y;
                    h[(k, j)] -= pp * x;
                }
                let mmin = nnu.min(k + 3);
                for i in l..=mmin {
                    let mut pp = x * h[(i, k)] + y * h[(i, k + 1)];
                    if k != nnu - 1 {
                        pp += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k + 1)] -= pp * q;
                    h[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Residual `‖Mv − λv‖` of the eigenpair recovered by complex inverse
/// iteration around `lambda` (with `‖v‖ = 1`).
pub fn eigen_residual(m: &Mat, lambda: Complex64) -> Result<f64> {
    let n = m.nrows();
    let mut delta = 1e-11 * (1.0 + lambda.norm()) * (1.0 + m.max_abs());
    for _ in 0..6 {
        let shift = lambda + Complex64::new(delta, delta);
        let mut a: Vec<Complex64> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut v = Complex64::new(m[(i, j)], 0.0);
                if i == j {
                    v -= shift;
                }
                a.push(v);
            }
        }
        if let Some(lu) = complex_lu(a, n) {
            let mut v = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
            for _ in 0..4 {
                let w = lu_solve(&lu, &v, n);
                let norm = vec_norm(&w);
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                v = w.into_iter().map(|c| c / norm).collect();
            }
            let mut residual = 0.0f64;
            for i in 0..n {
                let mut acc = -lambda * v[i];
                for j in 0..n {
                    acc += m[(i, j)] * v[j];
                }
                residual += acc.norm_sqr();
            }
            return Ok(residual.sqrt());
        }
        delta *= 100.0;
    }
    Err(Error::Numerical("inverse iteration failed to factor shifted matrix".into()))
}

struct ComplexLu {
    data: Vec<Complex64>,
    pivots: Vec<usize>,
}

fn complex_lu(mut a: Vec<Complex64>, n: usize) -> Option<ComplexLu> {
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if a[i * n + k].norm_sqr() > a[piv * n + k].norm_sqr() {
                piv = i;
            }
        }
        if a[piv * n + k].norm_sqr() < 1e-300 {
            return None;
        }
        pivots[k] = piv;
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
        }
        let inv = a[k * n + k].inv();
        for i in (k + 1)..n {
            let factor = a[i * n + k] * inv;
            a[i * n + k] = factor;
            for j in (k + 1)..n {
                let sub = factor * a[k * n + j];
                a[i * n + j] -= sub;
            }
        }
    }
    Some(ComplexLu { data: a, pivots })
}

fn lu_solve(lu: &ComplexLu, b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut x = b.to_vec();
    for k in 0..n {
        x.swap(k, lu.pivots[k]);
        for i in (k + 1)..n {
            let sub = lu.data[i * n + k] * x[k];
            x[i] -= sub;
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let sub = lu.data[i * n + j] * x[j];
            x[i] -= sub;
        }
        x[i] /= lu.data[i * n + i];
    }
    x
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
