//! Small dense/banded linear algebra kernels used by the solvers:
//! tridiagonal (Thomas) solves, a bordered tridiagonal solve for constrained
//! Newton steps, Sturm-sequence eigenvalue bisection for symmetric
//! tridiagonal operators, and two-parameter least squares.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solve a tridiagonal system with the Thomas algorithm (no pivoting).
///
/// `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` ignored), `sup[i]`
/// multiplies `x[i+1]` (`sup[n-1]` ignored). Intended for diagonally
/// dominant systems; fails on a vanishing pivot.
pub fn solve_tridiagonal<T: Scalar>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    rhs: &[T],
) -> Result<Vec<T>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut piv = diag[0];
    if piv == T::zero() {
        return Err(Error::Numerical("tridiagonal solve: zero pivot at row 0".into()));
    }
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv == T::zero() {
            return Err(Error::Numerical(format!(
                "tridiagonal solve: zero pivot at row {i}"
            )));
        }
        if i < n - 1 {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Ok(x)
}

/// Solve the bordered (arrowhead) system
///
/// ```text
/// | T  g | |x|   |b |        T tridiagonal (sub, diag, sup)
/// | cᵀ dy| |y| = |bn|
/// ```
///
/// with partial pivoting between adjacent band rows and a full-pivot trailing
/// 2×2 block. `T` may be nearly singular as long as the bordered matrix is
/// well conditioned (the usual situation for constrained Newton steps, where
/// the soft mode of `T` is fixed by the border).
#[allow(clippy::too_many_arguments)]
pub fn solve_bordered_tridiagonal<T: Scalar>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    g: &[T],
    c: &[T],
    dy: T,
    b: &[T],
    bn: T,
) -> Result<(Vec<T>, T)> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && g.len() == n && c.len() == n && b.len() == n);
    let mut s = sub.to_vec();
    let mut d = diag.to_vec();
    let mut e = sup.to_vec();
    let mut e2 = vec![T::zero(); n];
    let mut g = g.to_vec();
    let mut c = c.to_vec();
    let mut b = b.to_vec();
    let mut dy = dy;
    let mut bn = bn;

    for i in 0..n - 1 {
        if s[i + 1].abs() > d[i].abs() {
            // swap band rows i and i+1 (row i+1 has entries at i, i+1, i+2, y)
            let t = d[i];
            d[i] = s[i + 1];
            s[i + 1] = t;
            let t = e[i];
            e[i] = d[i + 1];
            d[i + 1] = t;
            let t = e2[i];
            e2[i] = e[i + 1];
            e[i + 1] = t;
            g.swap(i, i + 1);
            b.swap(i, i + 1);
        }
        let piv = d[i];
        if piv == T::zero() {
            return Err(Error::Numerical(format!(
                "bordered solve: zero pivot at column {i}"
            )));
        }
        let f = s[i + 1] / piv;
        d[i + 1] = d[i + 1] - f * e[i];
        e[i + 1] = e[i + 1] - f * e2[i];
        g[i + 1] = g[i + 1] - f * g[i];
        b[i + 1] = b[i + 1] - f * b[i];
        let f = c[i] / piv;
        c[i + 1] = c[i + 1] - f * e[i];
        if i + 2 < n {
            c[i + 2] = c[i + 2] - f * e2[i];
        }
        dy = dy - f * g[i];
        bn = bn - f * b[i];
    }

    // trailing 2x2 in (x[n-1], y) with full pivoting
    let (mut a11, mut a12, mut b1) = (d[n - 1], g[n - 1], b[n - 1]);
    let (mut a21, mut a22, mut b2) = (c[n - 1], dy, bn);
    if a21.abs() > a11.abs() {
        std::mem::swap(&mut a11, &mut a21);
        std::mem::swap(&mut a12, &mut a22);
        std::mem::swap(&mut b1, &mut b2);
    }
    if a11 == T::zero() {
        return Err(Error::Numerical("bordered solve: singular trailing block".into()));
    }
    let f = a21 / a11;
    let den = a22 - f * a12;
    if den == T::zero() {
        return Err(Error::Numerical("bordered solve: singular trailing block".into()));
    }
    let y = (b2 - f * b1) / den;
    let mut x = vec![T::zero(); n];
    x[n - 1] = (b1 - a12 * y) / a11;
    for i in (0..n - 1).rev() {
        let mut acc = b[i] - e[i] * x[i + 1] - g[i] * y;
        if i + 2 < n {
            acc = acc - e2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    Ok((x, y))
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(diag, off)`
/// strictly below `x`, via the Sturm sequence (LDLᵀ inertia count).
pub fn symtri_count_below<T: Scalar>(diag: &[T], off: &[T], x: T) -> usize {
    let n = diag.len();
    debug_assert_eq!(off.len(), n.saturating_sub(1));
    let tiny = T::min_positive_value();
    let mut count = 0usize;
    let mut d = diag[0] - x;
    if d < T::zero() {
        count += 1;
    }
    for i in 1..n {
        let mut denom = d;
        if denom.abs() < tiny {
            denom = if denom >= T::zero() { tiny } else { -tiny };
        }
        d = (diag[i] - x) - off[i - 1] * off[i - 1] / denom;
        if d < T::zero() {
            count += 1;
        }
    }
    count
}

/// `k`-th eigenvalue (ascending, 0-based) of a symmetric tridiagonal matrix
/// by Sturm bisection.
pub fn symtri_eigenvalue<T: Scalar>(diag: &[T], off: &[T], k: usize) -> Result<T> {
    let n = diag.len();
    if k >= n {
        return Err(Error::Usage(format!("eigenvalue index {k} out of range {n}")));
    }
    // Gershgorin bounds
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let mut radius = T::zero();
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let mut width = hi - lo;
    for _ in 0..4096 {
        let mid = T::half() * (lo + hi);
        if symtri_count_below(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        let new_width = hi - lo;
        if new_width <= T::epsilon() * (lo.abs() + hi.abs() + T::one()) || new_width >= width {
            break;
        }
        width = new_width;
    }
    Ok(T::half() * (lo + hi))
}

/// Smallest-magnitude eigenvalue of a symmetric tridiagonal matrix.
pub fn symtri_eigenvalue_nearest_zero<T: Scalar>(diag: &[T], off: &[T]) -> Result<T> {
    let n = diag.len();
    let below = symtri_count_below(diag, off, T::zero());
    let mut best: Option<T> = None;
    if below > 0 {
        let ev = symtri_eigenvalue(diag, off, below - 1)?;
        best = Some(ev);
    }
    if below < n {
        let ev = symtri_eigenvalue(diag, off, below)?;
        best = Some(match best {
            Some(b) if b.abs() <= ev.abs() => b,
            _ => ev,
        });
    }
    best.ok_or_else(|| Error::Numerical("empty operator".into()))
}

/// Least-squares fit of `y ≈ slope·x + intercept`.
///
/// Returns `(slope, intercept, rms_residual)`.
pub fn linear_fit<T: Scalar>(x: &[T], y: &[T]) -> Result<(T, T, T)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Usage(format!(
            "linear fit needs at least 2 matched samples, got {n}"
        )));
    }
    let nt = T::of_usize(n);
    let xm = x.iter().copied().sum::<T>() / nt;
    let ym = y.iter().copied().sum::<T>() / nt;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for i in 0..n {
        let dx = x[i] - xm;
        sxx += dx * dx;
        sxy += dx * (y[i] - ym);
    }
    if sxx == T::zero() {
        return Err(Error::Usage("linear fit: degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut ss = T::zero();
    for i in 0..n {
        let r = y[i] - slope * x[i] - intercept;
        ss += r * r;
    }
    Ok((slope, intercept, (ss / nt).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_recovers_known_solution() {
        let n = 64;
        let sub = vec![-1.0f64; n];
        let diag = vec![3.0f64; n];
        let sup = vec![-1.0f64; n];
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 3.0 * xs[i]
                - if i > 0 { xs[i - 1] } else { 0.0 }
                - if i + 1 < n { xs[i + 1] } else { 0.0 };
        }
        let got = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            assert!((got[i] - xs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bordered_solve_matches_dense_reference() {
        // pseudo-random but deterministic coefficients
        let n = 40;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut c = vec![0.0; n];
        for i in 0..n {
            sub[i] = rnd();
            diag[i] = 3.0 * rnd();
            sup[i] = rnd();
            g[i] = rnd();
            c[i] = rnd();
        }
        sub[0] = 0.0;
        sup[n - 1] = 0.0;
        let xs: Vec<f64> = (0..=n).map(|i| ((i * 7 + 3) as f64 * 0.11).cos()).collect();
        // rhs = A [xs]
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = diag[i] * xs[i] + g[i] * xs[n];
            if i > 0 {
                b[i] += sub[i] * xs[i - 1];
            }
            if i + 1 < n {
                b[i] += sup[i] * xs[i + 1];
            }
        }
        let bn: f64 = (0..n).map(|i| c[i] * xs[i]).sum();
        let (x, y) = solve_bordered_tridiagonal(&sub, &diag, &sup, &g, &c, 0.0, &b, bn).unwrap();
        for i in 0..n {
            assert!((x[i] - xs[i]).abs() < 1e-10, "x[{i}]");
        }
        assert!((y - xs[n]).abs() < 1e-10);
    }

    #[test]
    fn sturm_eigenvalues_of_discrete_laplacian() {
        // -u'' on unit interval, Dirichlet: eigenvalues 4 n^2 sin^2(k pi / (2(n+1))) / ... use exact formula
        let n = 100usize;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        for k in [0usize, 1, 5] {
            let exact = 4.0 / (h * h)
                * ((k as f64 + 1.0) * std::f64::consts::PI * h / 2.0).sin().powi(2);
            let got = symtri_eigenvalue(&diag, &off, k).unwrap();
            assert!(
                (got - exact).abs() < 1e-6 * exact,
                "k={k}: {got} vs {exact}"
            );
        }
        // smallest-magnitude equals the lowest eigenvalue here (all positive)
        let near = symtri_eigenvalue_nearest_zero(&diag, &off).unwrap();
        let e0 = symtri_eigenvalue(&diag, &off, 0).unwrap();
        assert_eq!(near, e0);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| 2.5 * t - 1.25).collect();
        let (s, c, r) = linear_fit(&x, &y).unwrap();
        assert!((s - 2.5).abs() < 1e-14);
        assert!((c + 1.25).abs() < 1e-14);
        assert!(r < 1e-14);
    }
}
