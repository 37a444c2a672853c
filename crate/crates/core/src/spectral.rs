//! Spectral radius of dense nonsymmetric matrices.
//!
//! Pipeline: isolate indices whose row or column is zero off the diagonal
//! (they contribute their diagonal entry as an eigenvalue), balance the
//! remainder, reduce it to upper Hessenberg form with Householder
//! reflections, then run the Francis double-shift QR iteration for all
//! eigenvalues. Growth matrices carry large dead history blocks and
//! dominant complex pairs, so power iteration is not an option.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::matrix::DenseMatrix;

/// Relative deflation threshold used unless a caller asks otherwise.
pub const DEFAULT_TOL: f64 = f64::EPSILON;

/// A timestep counts as stable when `rho < 1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// Total QR sweeps allowed per unit of dimension (with a floor of 10).
const ITERATIONS_PER_DIMENSION: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    /// Nondimensional timestep `nu dt_c / dx^2`.
    pub s: f64,
    pub rho: f64,
    pub stable: bool,
}

impl StabilityPoint {
    pub fn new(s: f64, rho: f64) -> Self {
        StabilityPoint {
            s,
            rho,
            stable: is_stable(rho),
        }
    }
}

pub fn is_stable(rho: f64) -> bool {
    rho < 1.0 - STABILITY_MARGIN
}

/// Analytic eigenvalues `(4/dx^2) sin^2(j pi / (2(M+1)))`, ascending.
pub fn tridiag_eigenvalues(dofs: usize, dx: f64) -> Result<Vec<f64>> {
    if dofs < 1 {
        return invalid("need at least one dof");
    }
    let denom = 2.0 * (dofs + 1) as f64;
    Ok((1..=dofs)
        .map(|j| {
            let s = (j as f64 * std::f64::consts::PI / denom).sin();
            4.0 * s * s / (dx * dx)
        })
        .collect())
}

pub fn spectral_radius(g: &DenseMatrix, tol: f64) -> Result<f64> {
    Ok(eigenvalues(g, tol)?
        .iter()
        .fold(0.0, |acc, z| acc.max(z.norm())))
}

/// All eigenvalues of `g`, in no particular order.
pub fn eigenvalues(g: &DenseMatrix, tol: f64) -> Result<Vec<Complex64>> {
    if !g.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            g.rows(),
            g.cols()
        )));
    }
    if !(tol > 0.0) {
        return invalid(format!("tolerance {tol} must be positive"));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite("eigenvalue input".into()));
    }
    let (mut values, active) = isolate(g);
    if !active.is_empty() {
        let n = active.len();
        let mut a = Vec::with_capacity(n * n);
        for &r in &active {
            let row = g.row(r);
            a.extend(active.iter().map(|&c| row[c]));
        }
        balance(&mut a, n);
        hessenberg(&mut a, n);
        values.extend(hessenberg_qr(&mut a, n, tol.max(f64::EPSILON))?);
    }
    Ok(values)
}

/// Repeatedly peels off indices whose off-diagonal row or column entries
/// (restricted to the remaining indices) all vanish. Returns the isolated
/// eigenvalues and the remaining indices.
fn isolate(g: &DenseMatrix) -> (Vec<Complex64>, Vec<usize>) {
    let n = g.rows();
    let mut row_count = vec![0usize; n];
    let mut col_count = vec![0usize; n];
    for r in 0..n {
        for (c, &v) in g.row(r).iter().enumerate() {
            if c != r && v != 0.0 {
                row_count[r] += 1;
                col_count[c] += 1;
            }
        }
    }
    let mut alive = vec![true; n];
    let mut queue: Vec<usize> = (0..n)
        .filter(|&i| row_count[i] == 0 || col_count[i] == 0)
        .collect();
    let mut values = Vec::new();
    while let Some(i) = queue.pop() {
        if !alive[i] {
            continue;
        }
        alive[i] = false;
        values.push(Complex64::new(g[(i, i)], 0.0));
        for j in 0..n {
            if j == i || !alive[j] {
                continue;
            }
            if g[(j, i)] != 0.0 {
                row_count[j] -= 1;
                if row_count[j] == 0 {
                    queue.push(j);
                }
            }
            if g[(i, j)] != 0.0 {
                col_count[j] -= 1;
                if col_count[j] == 0 {
                    queue.push(j);
                }
            }
        }
    }
    let active = (0..n).filter(|&i| alive[i]).collect();
    (values, active)
}

/// Parlett-Reinsch balancing by powers of two (exact in floating point).
fn balance(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
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
                let inv = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] *= inv;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x = |i: usize| a[(k + 1 + i) * n + k];
        let norm = (0..len).map(|i| x(i) * x(i)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = x(0);
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in 0..len {
            v[i] = x(i);
        }
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Left: rows k+1.., columns k..
        w[k..n].fill(0.0);
        for i in 0..len {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = &a[(k + 1 + i) * n..(k + 2 + i) * n];
            for j in k..n {
                w[j] += vi * row[j];
            }
        }
        for i in 0..len {
            let f = beta * v[i];
            if f == 0.0 {
                continue;
            }
            let row = &mut a[(k + 1 + i) * n..(k + 2 + i) * n];
            for j in k..n {
                row[j] -= f * w[j];
            }
        }

        // Right: all rows, columns k+1..
        for r in 0..n {
            let row = &mut a[r * n..(r + 1) * n];
            let dot: f64 = row[k + 1..].iter().zip(&v[..len]).map(|(p, q)| p * q).sum();
            if dot == 0.0 {
                continue;
            }
            let f = beta * dot;
            for (p, q) in row[k + 1..].iter_mut().zip(&v[..len]) {
                *p -= f * q;
            }
        }

        a[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            a[i * n + k] = 0.0;
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

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift
/// QR iteration (eigenvalues only; the active window shrinks as
/// eigenvalues deflate).
fn hessenberg_qr(a: &mut [f64], n: usize, tol: f64) -> Result<Vec<Complex64>> {
    let idx = |i: isize, j: isize| (i as usize) * n + j as usize;
    let mut out = Vec::with_capacity(n);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i * n + j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut shift_acc = 0.0;
    let mut total_iterations = 0usize;
    let budget = ITERATIONS_PER_DIMENSION * n.max(10);
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() <= tol * s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[idx(nn, nn)];
            if l == nn {
                out.push(Complex64::new(x + shift_acc, 0.0));
                nn -= 1;
                break;
            }
            let mut y = a[idx(nn - 1, nn - 1)];
            let mut w = a[idx(nn, nn - 1)] * a[idx(nn - 1, nn)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift_acc;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    let first = x + z;
                    let second = if z != 0.0 { x - w / z } else { first };
                    out.push(Complex64::new(first, 0.0));
                    out.push(Complex64::new(second, 0.0));
                } else {
                    out.push(Complex64::new(x + p, z));
                    out.push(Complex64::new(x + p, -z));
                }
                nn -= 2;
                break;
            }
            if total_iterations >= budget {
                return Err(Error::NoConvergence {
                    iterations: total_iterations,
                    remaining: (nn + 1) as usize,
                });
            }
            if its > 0 && its % 10 == 0 {
                shift_acc += x;
                for i in 0..=nn {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nn, nn - 1)].abs() + a[idx(nn - 1, nn - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_iterations += 1;

            let (mut p, mut q, mut r);
            let mut m = nn - 2;
            loop {
                let z = a[idx(m, m)];
                let r0 = x - z;
                let s0 = y - z;
                p = (r0 * s0 - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - r0 - s0;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v =
                    p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u <= tol * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[idx(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k <= nn - 1 {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = if k != nn - 1 {
                        a[idx(k + 2, k - 1)]
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                        if k != nn - 1 {
                            pp += r * a[idx(k + 2, j)];
                            a[idx(k + 2, j)] -= pp * z;
                        }
                        a[idx(k + 1, j)] -= pp * y;
                        a[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                        if k != nn - 1 {
                            pp += z * a[idx(i, k + 2)];
                            a[idx(i, k + 2)] -= pp * r;
                        }
                        a[idx(i, k + 1)] -= pp * q;
                        a[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
