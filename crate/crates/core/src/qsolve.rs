//! The limit profile `Q`: the unique positive radial decaying solution of
//!
//! ```text
//! Q'' + (N-1) Q'/r - Q + r^{-b} Q^{1+2β²} = 0,   Q'(0) = 0,
//! ```
//!
//! computed by shooting on the central value. Trajectories either cross zero
//! (central value too large), turn back up (too small), or decay; bisection
//! pins the separatrix. The far tail is rebuilt by integrating the linear
//! far-field equation inward from the truncation radius (the decaying branch
//! is the stable direction inward), and the sampled profile is polished by a
//! tridiagonal Newton iteration on the grid so the discrete residual is at
//! rounding level and independent of the integrator path.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    self, grad_inner, integrate, l2_norm_sq, neg_laplacian_tridiagonal, Profile, RadialGrid,
    Weight,
};
use crate::linalg::{linear_fit, solve_tridiagonal};
use crate::params::Params;
use crate::scalar::Scalar;

/// How a shot trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotClass {
    /// `Q` reached zero while still descending: central value too large.
    CrossedZero,
    /// `Q'` became nonnegative while `Q > 0`: central value too small.
    TurnedUp,
    /// `|Q|` fell below the decay floor while descending, or reached the
    /// truncation radius below the floor.
    Decayed,
}

/// Outcome of one shot.
#[derive(Debug, Clone, Copy)]
pub struct ShotOutcome<T> {
    pub class: ShotClass,
    /// Radius at which the classification fired (`<= r_max`).
    pub radius: T,
    /// Terminal `(Q, Q')`.
    pub q: T,
    pub dq: T,
}

/// Shooting and polishing tolerances.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions<T> {
    /// Relative local error target of the adaptive integrator.
    pub ode_rtol: T,
    /// Relative bisection width on the central value.
    pub bisect_tol: T,
    /// `|Q| < decay_floor · Q(0)` with `Q' < 0` classifies as decayed.
    pub decay_floor: T,
    /// Switch to the rebuilt tail once `Q < switch · Q(0)`.
    pub tail_switch: T,
    /// Run the on-grid Newton polish after sampling.
    pub polish: bool,
    /// Fail `solve_q` if the identity deviations exceed this.
    pub identity_tol: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            ode_rtol: T::of(1e-11).max(T::epsilon() * T::of(100.0)),
            bisect_tol: T::of(1e-13).max(T::epsilon() * T::of(4.0)),
            decay_floor: T::of(1e-9),
            tail_switch: T::of(1e-4),
            polish: true,
            identity_tol: T::of(1e-3),
        }
    }
}

/// Converged limit profile with its scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QSolution<T> {
    pub params: Params<T>,
    #[serde(skip)]
    grid: Option<Arc<RadialGrid<T>>>,
    grid_spec: grid::GridSpec,
    pub profile: Profile<T>,
    /// Central value from the bisected shot (continuum `Q(0)`).
    pub central_value: T,
    /// `∫ Q² dx`.
    pub mass: T,
    /// `∫ |∇Q|² dx`.
    pub kinetic: T,
    /// `∫ |x|^{-b} Q^{2+2β²} dx`.
    pub interaction: T,
    /// Existence threshold `a* = ‖Q‖₂^{2β²}`.
    pub a_star: T,
    /// Fitted exponential decay rate of the tail.
    pub decay_rate: T,
    /// Wall-clock seconds of the solve.
    pub solve_seconds: f64,
}

/// The three integrals of the ground-state identities and their pairwise
/// relative deviations. The identities state
/// `∫|∇Q|² = (1/β²)∫Q² = (1/(1+β²))∫|x|^{-b}Q^{2+2β²}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IdentityReport<T> {
    pub kinetic: T,
    pub mass_term: T,
    pub interaction_term: T,
    pub dev_kinetic_mass: T,
    pub dev_kinetic_interaction: T,
    pub dev_mass_interaction: T,
}

impl<T: Scalar> IdentityReport<T> {
    pub fn max_deviation(&self) -> T {
        self.dev_kinetic_mass
            .max(self.dev_kinetic_interaction)
            .max(self.dev_mass_interaction)
    }
}

/// Series expansion of the regular solution near the origin:
/// `Q ≈ Q0 + A r^{2-b} + B r² + C r^{4-2b}`.
fn series_start<T: Scalar>(params: &Params<T>, q0: T, r: T) -> (T, T) {
    let n = T::of(params.dim() as f64);
    let b = params.b();
    let p = params.power();
    let two = T::two();
    let four = T::of(4.0);
    let a = -q0.powf(p) / ((two - b) * (n - b));
    let bq = q0 / (two * n);
    let c = -p * q0.powf(p - T::one()) * a / ((four - two * b) * (n + two - two * b));
    let q = q0 + a * r.powf(two - b) + bq * r * r + c * r.powf(four - two * b);
    let dq = a * (two - b) * r.powf(T::one() - b)
        + two * bq * r
        + c * (four - two * b) * r.powf(T::of(3.0) - two * b);
    (q, dq)
}

/// Right-hand side of the first-order system `(Q, Q')' = (Q', f)`.
#[inline]
fn rhs<T: Scalar>(params: &Params<T>, r: T, q: T, dq: T) -> (T, T) {
    let n1 = T::of(params.dim() as f64) - T::one();
    let f = q - q.abs().powf(params.power() - T::one()) * q * r.powf(-params.b())
        - n1 * dq / r;
    (dq, f)
}

/// One Dormand-Prince 5(4) step; returns `(q, dq, error_estimate)`.
#[allow(clippy::too_many_arguments)]
fn dopri_step<T: Scalar>(params: &Params<T>, r: T, q: T, dq: T, h: T) -> (T, T, T) {
    // Dormand-Prince coefficients
    let c = [
        0.0,
        0.2,
        0.3,
        0.8,
        8.0 / 9.0,
        1.0,
        1.0,
    ];
    let a: [&[f64]; 6] = [
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    let e = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut kq = [T::zero(); 7];
    let mut kd = [T::zero(); 7];
    let (k0q, k0d) = rhs(params, r, q, dq);
    kq[0] = k0q;
    kd[0] = k0d;
    for s in 1..7 {
        let mut yq = T::zero();
        let mut yd = T::zero();
        for (j, &aij) in a[s - 1].iter().enumerate() {
            let w = T::of(aij);
            yq += w * kq[j];
            yd += w * kd[j];
        }
        let rs = r + T::of(c[s]) * h;
        let (f1, f2) = rhs(params, rs, q + h * yq, dq + h * yd);
        kq[s] = f1;
        kd[s] = f2;
    }
    // 5th order solution = stage-7 evaluation point
    let mut yq = T::zero();
    let mut yd = T::zero();
    for (j, &aij) in a[5].iter().enumerate() {
        let w = T::of(aij);
        yq += w * kq[j];
        yd += w * kd[j];
    }
    let q5 = q + h * yq;
    let d5 = dq + h * yd;
    let mut eq = T::zero();
    let mut ed = T::zero();
    for j in 0..7 {
        let w = T::of(e[j]);
        eq += w * kq[j];
        ed += w * kd[j];
    }
    let err = (h * eq).abs().max((h * ed).abs());
    (q5, d5, err)
}

struct Integrator<'a, T: Scalar> {
    params: &'a Params<T>,
    rtol: T,
    atol: T,
    r: T,
    q: T,
    dq: T,
    h: T,
}

impl<'a, T: Scalar> Integrator<'a, T> {
    fn new(params: &'a Params<T>, rtol: T, scale: T, r0: T, q0: T, dq0: T) -> Self {
        Integrator {
            params,
            rtol,
            atol: rtol * scale * T::of(1e-2),
            r: r0,
            q: q0,
            dq: dq0,
            h: r0 * T::half(),
        }
    }

    /// Advance exactly to `r_target` with adaptive substeps.
    fn advance_to(&mut self, r_target: T) -> Result<()> {
        let mut guard = 0usize;
        while self.r < r_target {
            guard += 1;
            if guard > 2_000_000 {
                return Err(Error::Numerical(format!(
                    "shooting integrator stalled at r = {} (Q = {}, Q' = {})",
                    self.r, self.q, self.dq
                )));
            }
            let h = self.h.min(r_target - self.r);
            let (q5, d5, err) = dopri_step(self.params, self.r, self.q, self.dq, h);
            let tol = self.atol + self.rtol * self.q.abs().max(self.dq.abs());
            if err <= tol || h <= self.r * T::epsilon() * T::of(8.0) {
                self.r += h;
                self.q = q5;
                self.dq = d5;
                if !(self.q.is_finite() && self.dq.is_finite()) {
                    return Err(Error::Numerical(format!(
                        "shooting integrator produced non-finite state at r = {}",
                        self.r
                    )));
                }
                let grow = if err > T::zero() {
                    T::of(0.9) * (tol / err).powf(T::of(0.2))
                } else {
                    T::of(5.0)
                };
                self.h = h * grow.min(T::of(5.0)).max(T::of(0.2));
            } else {
                self.h = h * (T::of(0.9) * (tol / err).powf(T::of(0.2))).max(T::of(0.1));
            }
        }
        Ok(())
    }
}

fn classify<T: Scalar>(q: T, dq: T, r: T, floor: T) -> Option<ShotOutcome<T>> {
    if q <= T::zero() {
        return Some(ShotOutcome {
            class: ShotClass::CrossedZero,
            radius: r,
            q,
            dq,
        });
    }
    if q < floor && dq < T::zero() {
        return Some(ShotOutcome {
            class: ShotClass::Decayed,
            radius: r,
            q,
            dq,
        });
    }
    if dq >= T::zero() {
        return Some(ShotOutcome {
            class: ShotClass::TurnedUp,
            radius: r,
            q,
            dq,
        });
    }
    None
}

/// Integrate one trajectory from the series start and classify it.
pub fn shoot<T: Scalar>(
    params: &Params<T>,
    central_value: T,
    r_max: T,
    opts: &SolveOptions<T>,
) -> Result<ShotOutcome<T>> {
    if !(central_value > T::zero()) {
        return Err(Error::Usage(format!(
            "central value must be positive; got {central_value}"
        )));
    }
    let r0 = T::of(1e-8).max(T::epsilon().sqrt() * T::of(1e-2));
    let (q0, dq0) = series_start(params, central_value, r0);
    let floor = opts.decay_floor * central_value;
    if let Some(out) = classify(q0, dq0, r0, floor) {
        return Ok(out);
    }
    let mut it = Integrator::new(params, opts.ode_rtol, central_value, r0, q0, dq0);
    // march in moderate spans so events are localized
    let span = r_max * T::of(1e-3);
    while it.r < r_max {
        let target = (it.r + span).min(r_max);
        it.advance_to(target)?;
        if let Some(out) = classify(it.q, it.dq, it.r, floor) {
            return Ok(out);
        }
    }
    // reached truncation still positive and descending
    Ok(ShotOutcome {
        class: if it.q.abs() < floor {
            ShotClass::Decayed
        } else {
            ShotClass::TurnedUp
        },
        radius: r_max,
        q: it.q,
        dq: it.dq,
    })
}

/// Bisect the central value between a turned-up and a crossed-zero bracket.
fn bisect_central_value<T: Scalar>(
    params: &Params<T>,
    r_max: T,
    opts: &SolveOptions<T>,
) -> Result<T> {
    let mut lo = T::one();
    let mut found_lo = false;
    for _ in 0..60 {
        match shoot(params, lo, r_max, opts)?.class {
            ShotClass::TurnedUp => {
                found_lo = true;
                break;
            }
            ShotClass::Decayed => return Ok(lo),
            ShotClass::CrossedZero => lo = lo * T::half(),
        }
    }
    if !found_lo {
        return Err(Error::Numerical(
            "no turned-up bracket found while halving the central value".into(),
        ));
    }
    let mut hi = lo;
    let mut found_hi = false;
    for _ in 0..60 {
        hi = hi * T::two();
        match shoot(params, hi, r_max, opts)?.class {
            ShotClass::CrossedZero => {
                found_hi = true;
                break;
            }
            ShotClass::Decayed => return Ok(hi),
            ShotClass::TurnedUp => lo = hi,
        }
    }
    if !found_hi {
        return Err(Error::Numerical(
            "no crossed-zero bracket found while doubling the central value".into(),
        ));
    }
    while (hi - lo) > opts.bisect_tol * hi {
        let mid = T::half() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(params, mid, r_max, opts)?.class {
            ShotClass::CrossedZero => hi = mid,
            ShotClass::TurnedUp => lo = mid,
            ShotClass::Decayed => return Ok(mid),
        }
    }
    Ok(T::half() * (lo + hi))
}

/// Sample the bisected trajectory onto grid nodes up to the switch radius;
/// returns `(values up to and including index i_switch, i_switch)`.
fn sample_outward<T: Scalar>(
    params: &Params<T>,
    q0: T,
    grid: &RadialGrid<T>,
    opts: &SolveOptions<T>,
) -> Result<(Vec<T>, usize)> {
    let switch = opts.tail_switch * q0;
    let r0 = T::of(1e-8).max(T::epsilon().sqrt() * T::of(1e-2));
    let mut vals = vec![T::zero(); grid.len()];
    let mut i = 0;
    // nodes below the series start are filled from the series
    while i < grid.len() && grid.node(i) <= r0 {
        vals[i] = series_start(params, q0, grid.node(i)).0;
        i += 1;
    }
    let (qs, dqs) = series_start(params, q0, r0);
    let mut it = Integrator::new(params, opts.ode_rtol, q0, r0, qs, dqs);
    while i < grid.len() {
        it.advance_to(grid.node(i))?;
        vals[i] = it.q;
        if it.q < switch {
            if it.q <= T::zero() || it.dq >= T::zero() {
                return Err(Error::Numerical(
                    "trajectory left the decaying regime before the tail switch".into(),
                ));
            }
            return Ok((vals, i));
        }
        i += 1;
    }
    Err(Error::Numerical(format!(
        "trajectory never fell below the tail switch {switch}; truncation radius too small"
    )))
}

/// Far-field tail shape from the linear equation `v'' + (N-1)v'/r - v = 0`,
/// integrated inward from `R` (the decaying branch is inward-stable).
/// Returns tail values at nodes `i_switch..M`, normalized so the value at
/// `i_switch` is 1.
fn linear_tail<T: Scalar>(
    dim: u32,
    grid: &RadialGrid<T>,
    i_switch: usize,
    rtol: T,
) -> Result<Vec<T>> {
    let n1 = T::of(dim as f64) - T::one();
    let r_end = grid.radius();
    let count = grid.len() - i_switch;
    let mut vals = vec![T::zero(); count];
    // state (v, v') marching inward: use s = R - r as the forward variable
    let mut r = r_end;
    let mut v = T::one();
    let mut dv = -(T::one() + n1 / (T::two() * r_end));
    vals[count - 1] = v;
    let mut h = grid.gaps()[grid.len() - 2] * T::of(0.25);
    for idx in (0..count - 1).rev() {
        let target = grid.node(i_switch + idx);
        let mut guard = 0usize;
        while r > target {
            guard += 1;
            if guard > 1_000_000 {
                return Err(Error::Numerical("tail integrator stalled".into()));
            }
            let step = h.min(r - target);
            // RK4 on v'' = v - (N-1)v'/r, inward (negative step)
            let f = |r: T, v: T, dv: T| (dv, v - n1 * dv / r);
            let hs = -step;
            let (k1v, k1d) = f(r, v, dv);
            let (k2v, k2d) = f(r + hs * T::half(), v + hs * T::half() * k1v, dv + hs * T::half() * k1d);
            let (k3v, k3d) = f(r + hs * T::half(), v + hs * T::half() * k2v, dv + hs * T::half() * k2d);
            let (k4v, k4d) = f(r + hs, v + hs * k3v, dv + hs * k3d);
            let six = T::of(6.0);
            v += hs / six * (k1v + T::two() * k2v + T::two() * k3v + k4v);
            dv += hs / six * (k1d + T::two() * k2d + T::two() * k3d + k4d);
            r -= step;
            // error control is implicit: the tail grows like e^{R-r}, so keep
            // steps a fixed small fraction of the local scale
            h = (rtol.powf(T::of(0.25)) * T::of(2.0)).min(T::of(0.05)).max(T::of(1e-3));
        }
        vals[idx] = v;
    }
    let anchor = vals[0];
    if !(anchor > T::zero()) {
        return Err(Error::Numerical("tail integration lost positivity".into()));
    }
    for v in vals.iter_mut() {
        *v /= anchor;
    }
    Ok(vals)
}

/// Newton polish of the sampled profile on the grid: solve the discrete
/// equation `-Δq + q - veff q^p = 0` with Dirichlet at `R`.
fn newton_polish<T: Scalar>(
    params: &Params<T>,
    grid: &RadialGrid<T>,
    q: &mut [T],
) -> Result<()> {
    let m = grid.len();
    let n = m - 1;
    let p = params.power();
    let (lsub, ldiag, lsup) = neg_laplacian_tridiagonal(grid);
    let mut diag = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    let scale = q.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    for _iter in 0..30 {
        // residual F = -Δq + q - veff q^p on 0..n
        let mut fmax = T::zero();
        for i in 0..n {
            let mut lap = ldiag[i] * q[i];
            if i > 0 {
                lap += lsub[i] * q[i - 1];
            }
            if i + 1 < n {
                lap += lsup[i] * q[i + 1];
            }
            let veff = grid.singular_over_plain(i);
            let f = lap + q[i] - veff * q[i].abs().powf(p - T::one()) * q[i];
            rhs[i] = f;
            diag[i] = ldiag[i] + T::one() - p * veff * q[i].abs().powf(p - T::one());
            fmax = fmax.max(f.abs());
        }
        let dx = solve_tridiagonal(&lsub, &diag, &lsup, &rhs)?;
        let mut step = T::one();
        // keep the iterate strictly positive
        for _ in 0..40 {
            if (0..n).all(|i| q[i] - step * dx[i] > T::zero()) {
                break;
            }
            step = step * T::half();
        }
        let mut dmax = T::zero();
        for i in 0..n {
            q[i] -= step * dx[i];
            dmax = dmax.max(dx[i].abs());
        }
        if dmax <= scale * T::epsilon() * T::of(32.0) {
            break;
        }
    }
    q[m - 1] = T::zero();
    Ok(())
}

/// Least-squares exponential decay rate of `f` on the window `[R/2, 3R/4]`.
pub fn decay_fit<T: Scalar>(grid: &RadialGrid<T>, f: &Profile<T>) -> Result<T> {
    f.matches(grid)?;
    let lo = grid.radius() * T::half();
    let hi = grid.radius() * T::of(0.75);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let floor = T::min_positive_value() * T::of(1e6);
    for (i, &r) in grid.nodes().iter().enumerate() {
        if r >= lo && r <= hi {
            let v = f.values()[i];
            if v <= floor {
                return Err(Error::Numerical(
                    "decay fit window contains values below the floating-point floor".into(),
                ));
            }
            xs.push(r);
            ys.push(v.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::Usage("decay fit window contains too few nodes".into()));
    }
    let (slope, _, _) = linear_fit(&xs, &ys)?;
    Ok(slope)
}

/// Solve for the limit profile on the given grid.
pub fn solve_q<T: Scalar>(
    params: &Params<T>,
    grid: &Arc<RadialGrid<T>>,
    opts: &SolveOptions<T>,
) -> Result<QSolution<T>> {
    if grid.dim() != params.dim() || grid.b() != params.b() {
        return Err(Error::Usage(
            "grid (N, b) does not match problem parameters".into(),
        ));
    }
    let t0 = Instant::now();
    let q0 = bisect_central_value(params, grid.radius(), opts)?;
    let (mut vals, i_switch) = sample_outward(params, q0, grid, opts)?;
    let tail = linear_tail(params.dim(), grid, i_switch, opts.ode_rtol)?;
    let anchor = vals[i_switch];
    for (k, t) in tail.iter().enumerate() {
        vals[i_switch + k] = anchor * *t;
    }
    if opts.polish {
        newton_polish(params, grid, &mut vals)?;
    }
    let profile = Profile::new(grid, vals)?;

    let mass = l2_norm_sq(grid, &profile)?;
    let kinetic = grad_inner(grid, &profile, &profile)?;
    let interaction = {
        let p2 = T::two() + T::two() * params.beta_sq();
        let powed = Profile::new(
            grid,
            profile.values().iter().map(|&q| q.abs().powf(p2)).collect(),
        )?;
        integrate(grid, &powed, Weight::Singular)?
    };
    let a_star = mass.powf(params.beta_sq());
    let decay_rate = decay_fit(grid, &profile)?;

    let solution = QSolution {
        params: *params,
        grid: Some(grid.clone()),
        grid_spec: grid.spec(),
        profile,
        central_value: q0,
        mass,
        kinetic,
        interaction,
        a_star,
        decay_rate,
        solve_seconds: t0.elapsed().as_secs_f64(),
    };
    let report = verify_q_identities(&solution);
    if report.max_deviation() > opts.identity_tol {
        return Err(Error::Verification(format!(
            "ground-state identity deviations {:.3e} exceed tolerance {:.3e}",
            report.max_deviation().to_f64().unwrap_or(f64::NAN),
            opts.identity_tol.to_f64().unwrap_or(f64::NAN),
        )));
    }
    solution.check_shape()?;
    Ok(solution)
}

impl<T: Scalar> QSolution<T> {
    /// Grid accessor; present after `solve_q`, rebuilt on deserialization
    /// via [`QSolution::restore_grid`].
    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        self.grid
            .as_ref()
            .expect("grid not restored after deserialization")
    }

    pub fn grid_spec(&self) -> &grid::GridSpec {
        &self.grid_spec
    }

    /// Rebuild the grid after deserialization.
    pub fn restore_grid(&mut self) -> Result<()> {
        let spec = &self.grid_spec;
        let g = grid::build_grid(
            spec.dim,
            T::of(spec.b),
            T::of(spec.radius),
            spec.nodes,
            T::of(spec.clustering),
        )?;
        self.grid = Some(g);
        Ok(())
    }

    /// `‖Q‖₂`.
    pub fn l2_norm(&self) -> T {
        self.mass.sqrt()
    }

    /// Positivity and monotonicity of the radial ground state.
    fn check_shape(&self) -> Result<()> {
        let v = self.profile.values();
        let m = v.len();
        for (i, &x) in v[..m - 1].iter().enumerate() {
            if !(x > T::zero()) {
                return Err(Error::Verification(format!(
                    "profile not strictly positive at node {i}"
                )));
            }
        }
        let mut violations = 0usize;
        for i in 0..m - 1 {
            if v[i + 1] >= v[i] {
                violations += 1;
            }
        }
        // the last node is pinned to zero; everything before must descend
        if violations > 0 {
            return Err(Error::Verification(format!(
                "profile not monotone decreasing ({violations} violations)"
            )));
        }
        Ok(())
    }
}

/// Evaluate the ground-state identity triple on a solution.
pub fn verify_q_identities<T: Scalar>(q: &QSolution<T>) -> IdentityReport<T> {
    identity_report(q.params.beta_sq(), q.kinetic, q.mass, q.interaction)
}

/// Identity report for an arbitrary profile (recomputes the integrals);
/// lets detector tests confirm that perturbed profiles break the triple.
pub fn identity_report_for_profile<T: Scalar>(
    params: &Params<T>,
    grid: &RadialGrid<T>,
    profile: &Profile<T>,
) -> Result<IdentityReport<T>> {
    profile.matches(grid)?;
    let mass = l2_norm_sq(grid, profile)?;
    let kinetic = grad_inner(grid, profile, profile)?;
    let p2 = T::two() + T::two() * params.beta_sq();
    let powed = Profile::new(
        grid,
        profile.values().iter().map(|&q| q.abs().powf(p2)).collect(),
    )?;
    let interaction = integrate(grid, &powed, Weight::Singular)?;
    Ok(identity_report(params.beta_sq(), kinetic, mass, interaction))
}

fn identity_report<T: Scalar>(beta_sq: T, kinetic: T, mass: T, interaction: T) -> IdentityReport<T> {
    let t1 = kinetic;
    let t2 = mass / beta_sq;
    let t3 = interaction / (T::one() + beta_sq);
    let dev = |a: T, b: T| (a - b).abs() / a.abs().max(b.abs());
    IdentityReport {
        kinetic: t1,
        mass_term: t2,
        interaction_term: t3,
        dev_kinetic_mass: dev(t1, t2),
        dev_kinetic_interaction: dev(t1, t3),
        dev_mass_interaction: dev(t2, t3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn series_start_consistent_with_integration() {
        // the series at two radii must bracket the same regular solution:
        // start from the smaller radius, integrate outward, compare
        for (dim, b) in [(3u32, 1.0f64), (1, 0.5), (2, 0.7)] {
            let params = Params::<f64>::critical(dim, b).unwrap();
            let opts = SolveOptions::default();
            let q0 = 2.3;
            let r_lo = 1e-8;
            let r_hi = 1e-3;
            let (qs, dqs) = series_start(&params, q0, r_lo);
            let mut it = Integrator::new(&params, opts.ode_rtol, q0, r_lo, qs, dqs);
            it.advance_to(r_hi).unwrap();
            let (q_direct, dq_direct) = series_start(&params, q0, r_hi);
            // residual orders of the 4-term series: O(r^{4-b}) in q,
            // O(r^{3-b}) in q'
            assert!(
                (it.q - q_direct).abs() < 50.0 * q0 * r_hi.powf(4.0 - b),
                "N={dim} b={b}: q {} vs {q_direct}",
                it.q
            );
            assert!(
                (it.dq - dq_direct).abs() < 100.0 * q0 * r_hi.powf(3.0 - b),
                "N={dim} b={b}: dq {} vs {dq_direct}",
                it.dq
            );
        }
    }

    #[test]
    fn tiny_central_value_turns_up() {
        let params = Params::<f64>::critical(1, 0.5).unwrap();
        let opts = SolveOptions::default();
        let out = shoot(&params, 1e-3, 25.0, &opts).unwrap();
        assert_eq!(out.class, ShotClass::TurnedUp);
    }

    #[test]
    fn huge_central_value_crosses_zero() {
        let params = Params::<f64>::critical(1, 0.5).unwrap();
        let opts = SolveOptions::default();
        let out = shoot(&params, 20.0, 25.0, &opts).unwrap();
        assert_eq!(out.class, ShotClass::CrossedZero);
        assert!(out.radius <= 25.0);
    }

    #[test]
    fn decay_fit_synthetic_exponential() {
        let g = build_grid::<f64>(1, 0.5, 25.0, 2048, 2.0).unwrap();
        let f = Profile::from_fn(&g, |r| (-2.0 * r).exp()).unwrap();
        let rate = decay_fit(&g, &f).unwrap();
        assert!((rate + 2.0).abs() < 1e-6, "rate={rate}");
    }
}
