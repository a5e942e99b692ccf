//! Constrained minimization of the energy on the unit-mass sphere by a
//! normalized gradient flow with a bordered Newton finish.
//!
//! The flow step is linearly implicit: the Laplacian and trap are treated
//! implicitly (one tridiagonal solve along the radial line), the focusing
//! term explicitly, followed by exact renormalization to unit mass. Steps
//! that raise the energy or lose positivity are rejected and retried with a
//! halved step. Once the flow reaches the Newton basin, a bordered Newton
//! iteration on the Euler-Lagrange system `(u, μ)` drives the residual to
//! rounding level; this is what makes multi-seed runs agree to 1e-10.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{energy, interaction_integral, minimize_g, rescaled_q, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{
    self, l2_norm_sq, neg_laplacian_tridiagonal, residual_exclusion_radius, Profile, RadialGrid,
};
use crate::linalg::{solve_bordered_tridiagonal, solve_tridiagonal};
use crate::params::{Params, PotentialSpec};
use crate::qsolve::QSolution;
use crate::scalar::Scalar;

/// Flow and Newton controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowConfig<T> {
    /// Initial pseudo-time step.
    pub dt0: T,
    /// Step-size ceiling.
    pub dt_max: T,
    /// Flow iteration budget.
    pub max_iters: usize,
    /// Hand over to Newton once the excluded-origin residual falls below this.
    pub flow_tol: T,
    /// Final Euler-Lagrange residual target.
    pub residual_tol: T,
    /// Newton iteration budget.
    pub newton_max: usize,
}

impl<T: Scalar> Default for FlowConfig<T> {
    fn default() -> Self {
        FlowConfig {
            dt0: T::of(0.5),
            dt_max: T::of(20.0),
            max_iters: 40_000,
            flow_tol: T::of(1e-4),
            residual_tol: T::of(1e-9).max(T::epsilon() * T::of(1e4)),
            newton_max: 30,
        }
    }
}

/// A converged constrained minimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeResult<T> {
    pub params: Params<T>,
    pub pot: PotentialSpec<T>,
    grid_spec: grid::GridSpec,
    #[serde(skip)]
    grid: Option<Arc<RadialGrid<T>>>,
    /// Positive unit-mass minimizer.
    pub profile: Profile<T>,
    pub breakdown: EnergyBreakdown<T>,
    /// Lagrange multiplier `μ_a = e(a) - aβ²/(1+β²) ∫|x|^{-b}u^{2+2β²}`.
    pub mu: T,
    /// Gradient scale `ε_a = (∫|∇u|²)^{-1/2}`.
    pub eps: T,
    pub iterations: usize,
    /// Euler-Lagrange residual (plain-weighted L², origin excluded).
    pub residual: T,
    /// Advisory notes (untrapped runs, radial-ansatz reminder).
    pub notes: Vec<String>,
}

impl<T: Scalar> MinimizeResult<T> {
    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        self.grid
            .as_ref()
            .expect("grid not restored after deserialization")
    }

    pub fn grid_spec(&self) -> &grid::GridSpec {
        &self.grid_spec
    }

    pub fn restore_grid(&mut self) -> Result<()> {
        let spec = &self.grid_spec;
        self.grid = Some(grid::build_grid(
            spec.dim,
            T::of(spec.b),
            T::of(spec.radius),
            spec.nodes,
            T::of(spec.clustering),
        )?);
        Ok(())
    }

    /// `e(a)` of this solve.
    pub fn energy(&self) -> T {
        self.breakdown.total
    }

    /// Wrap an externally supplied profile as a result record, computing the
    /// breakdown, multiplier, gradient scale and residual for it. The profile
    /// need not solve anything; the residual says how far it is from doing so.
    pub fn from_profile(
        params: &Params<T>,
        pot: &PotentialSpec<T>,
        grid: &Arc<RadialGrid<T>>,
        profile: Profile<T>,
    ) -> Result<Self> {
        profile.matches(grid)?;
        let breakdown = energy(params, pot, grid, &profile)?;
        let raw_inter = interaction_integral(params, grid, &profile)?;
        let mu = multiplier(params, breakdown.total, raw_inter);
        let ws = Workspace::new(grid, pot);
        let res_vals = el_residual_values(params, &ws, &profile.values()[..ws.ldiag.len()], mu);
        let residual = residual_norm(grid, &res_vals);
        Ok(MinimizeResult {
            params: *params,
            pot: *pot,
            grid_spec: grid.spec(),
            grid: Some(grid.clone()),
            eps: T::one() / breakdown.kinetic.sqrt(),
            profile,
            breakdown,
            mu,
            iterations: 0,
            residual,
            notes: vec!["wrapped external profile".to_string()],
        })
    }

    /// Replace the stored multiplier (detector-calibration hook).
    pub fn with_multiplier(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }
}

struct Workspace<T> {
    lsub: Vec<T>,
    ldiag: Vec<T>,
    lsup: Vec<T>,
    vpot: Vec<T>,
    veff: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(grid: &RadialGrid<T>, pot: &PotentialSpec<T>) -> Self {
        let (lsub, ldiag, lsup) = neg_laplacian_tridiagonal(grid);
        let n = grid.len() - 1;
        let vpot: Vec<T> = (0..n).map(|i| pot.eval(grid.node(i))).collect();
        let veff: Vec<T> = (0..n).map(|i| grid.singular_over_plain(i)).collect();
        Workspace {
            lsub,
            ldiag,
            lsup,
            vpot,
            veff,
        }
    }
}

fn normalize<T: Scalar>(grid: &RadialGrid<T>, u: &mut Profile<T>) -> Result<()> {
    let mass = l2_norm_sq(grid, u)?;
    if !(mass > T::zero()) {
        return Err(Error::Numerical("flow state lost all mass".into()));
    }
    let inv = T::one() / mass.sqrt();
    for v in u.values_mut() {
        *v = *v * inv;
    }
    Ok(())
}

/// Lagrange multiplier from the energy relation; algebraically identical to
/// the Rayleigh quotient of the Euler-Lagrange operator at unit mass.
fn multiplier<T: Scalar>(params: &Params<T>, total: T, raw_interaction: T) -> T {
    total - params.a * params.beta_sq() / (T::one() + params.beta_sq()) * raw_interaction
}

/// Euler-Lagrange residual values on the interior unknowns.
fn el_residual_values<T: Scalar>(
    params: &Params<T>,
    ws: &Workspace<T>,
    u: &[T],
    mu: T,
) -> Vec<T> {
    let n = ws.ldiag.len();
    let p = params.power();
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        let mut lap = ws.ldiag[i] * u[i];
        if i > 0 {
            lap += ws.lsub[i] * u[i - 1];
        }
        if i + 1 < n {
            lap += ws.lsup[i] * u[i + 1];
        }
        out[i] = lap + ws.vpot[i] * u[i]
            - mu * u[i]
            - params.a * ws.veff[i] * u[i].abs().powf(p - T::one()) * u[i];
    }
    out
}

fn residual_norm<T: Scalar>(grid: &RadialGrid<T>, values: &[T]) -> T {
    let r0 = residual_exclusion_radius(grid);
    grid::weighted_norm_from(grid, values, r0)
}

/// One accepted semi-implicit flow step (internal; exposed for the
/// fixed-point test surface). Returns the new state and its energy.
#[allow(clippy::too_many_arguments)]
fn try_step<T: Scalar>(
    params: &Params<T>,
    grid: &RadialGrid<T>,
    ws: &Workspace<T>,
    u: &Profile<T>,
    dt: T,
) -> Result<Profile<T>> {
    let n = ws.ldiag.len();
    let p = params.power();
    let uv = u.values();
    let mut sub = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut sup = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    for i in 0..n {
        sub[i] = dt * ws.lsub[i];
        sup[i] = dt * ws.lsup[i];
        diag[i] = T::one() + dt * (ws.ldiag[i] + ws.vpot[i]);
        rhs[i] = uv[i]
            + dt * params.a * ws.veff[i] * uv[i].abs().powf(p - T::one()) * uv[i];
    }
    let x = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let mut vals = vec![T::zero(); grid.len()];
    vals[..n].copy_from_slice(&x);
    let mut next = Profile::new(grid, vals)?;
    normalize(grid, &mut next)?;
    Ok(next)
}

/// One normalized-gradient-flow step with step-size control: rejects steps
/// that increase the energy beyond slack or lose positivity, halving `dt`.
/// Returns `(state, dt_used, energy)`.
pub fn flow_step<T: Scalar>(
    params: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &RadialGrid<T>,
    u: &Profile<T>,
    config: &FlowConfig<T>,
    dt: T,
) -> Result<(Profile<T>, T, EnergyBreakdown<T>)> {
    u.matches(grid)?;
    let ws = Workspace::new(grid, pot);
    let e0 = energy(params, pot, grid, u)?;
    let mut dt = dt;
    for _ in 0..60 {
        let cand = try_step(params, grid, &ws, u, dt)?;
        let e1 = energy(params, pot, grid, &cand)?;
        let positive = cand.values()[..grid.len() - 1]
            .iter()
            .all(|&v| v > T::zero());
        let slack = T::of(1e-12) * (T::one() + e0.total.abs());
        if positive && e1.total <= e0.total + slack {
            return Ok((cand, dt, e1));
        }
        dt = dt * T::half();
        if dt < config.dt0 * T::of(1e-14) {
            break;
        }
    }
    Err(Error::Numerical(
        "flow step rejected at the minimum step size".into(),
    ))
}

/// Bordered Newton finish on the Euler-Lagrange system with the unit-mass
/// constraint. Returns the final residual norm and iteration count.
fn newton_finish<T: Scalar>(
    params: &Params<T>,
    grid: &RadialGrid<T>,
    ws: &Workspace<T>,
    u: &mut [T],
    mu: &mut T,
    config: &FlowConfig<T>,
) -> Result<(T, usize)> {
    let n = ws.ldiag.len();
    let p = params.power();
    let sphere = grid.sphere();
    let w = grid.plain_weights();
    let mut best = T::infinity();
    let mut iters = 0usize;
    for it in 0..config.newton_max {
        iters = it;
        let f1 = el_residual_values(params, ws, u, *mu);
        let rn = residual_norm(grid, &f1);
        let mass: T = (0..n).map(|i| w[i] * u[i] * u[i]).sum::<T>() * sphere;
        let f2 = T::half() * (mass - T::one());
        if rn <= config.residual_tol && f2.abs() <= T::of(64.0) * T::epsilon() {
            return Ok((rn, it));
        }
        // stagnation at the rounding floor of the residual evaluation
        if rn >= best * T::of(0.9) && it > 2 {
            return Ok((rn.min(best), it));
        }
        best = best.min(rn);
        let mut diag = vec![T::zero(); n];
        let mut g = vec![T::zero(); n];
        let mut c = vec![T::zero(); n];
        let mut rhs = vec![T::zero(); n];
        for i in 0..n {
            diag[i] = ws.ldiag[i] + ws.vpot[i]
                - *mu
                - params.a * p * ws.veff[i] * u[i].abs().powf(p - T::one());
            g[i] = -u[i];
            c[i] = sphere * w[i] * u[i];
            rhs[i] = -f1[i];
        }
        let (dx, dmu) =
            solve_bordered_tridiagonal(&ws.lsub, &diag, &ws.lsup, &g, &c, T::zero(), &rhs, -f2)?;
        for i in 0..n {
            u[i] += dx[i];
        }
        *mu += dmu;
    }
    let f1 = el_residual_values(params, ws, u, *mu);
    Ok((residual_norm(grid, &f1), iters))
}

/// Default initial profile: the ground state rescaled to the blow-up scale
/// predicted by the reduced energy, mass-normalized. Falls back to a unit
/// Gaussian when the trap is off or `a` is at the threshold regime edge.
pub fn default_init<T: Scalar>(
    params: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &Arc<RadialGrid<T>>,
    q: &QSolution<T>,
) -> Result<Profile<T>> {
    let mut u = if pot.is_trapping() && params.a < q.a_star && params.a > T::zero() {
        let (alpha, _) = minimize_g(params, pot, q)?;
        rescaled_q(q, grid, T::one() / q.l2_norm(), alpha)?
    } else {
        Profile::from_fn(grid, |r| (-r * r * T::half()).exp())?
    };
    let vals = u.values_mut();
    let m = vals.len();
    vals[m - 1] = T::zero();
    // interpolation can leave harmless negative dust in the tail
    for v in vals.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    let floor = T::min_positive_value().sqrt();
    for v in vals.iter_mut().take(m - 1) {
        if *v < floor {
            *v = floor;
        }
    }
    normalize(grid, &mut u)?;
    Ok(u)
}

/// Minimize the constrained energy; requires `a < a*`.
pub fn minimize<T: Scalar>(
    params: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &Arc<RadialGrid<T>>,
    init: &Profile<T>,
    a_star: T,
    config: &FlowConfig<T>,
) -> Result<MinimizeResult<T>> {
    if params.a >= a_star {
        return Err(Error::Domain(format!(
            "no minimizer exists for a = {} >= a* = {}; use the scaling probe to exhibit the collapse",
            params.a, a_star
        )));
    }
    init.matches(grid)?;
    let ws = Workspace::new(grid, pot);
    let mut u = init.clone();
    normalize(grid, &mut u)?;
    {
        let m = grid.len();
        u.values_mut()[m - 1] = T::zero();
    }
    let mut e = energy(params, pot, grid, &u)?;
    let mut dt = config.dt0;
    let mut iters = 0usize;
    let mut reached_flow_tol = false;
    while iters < config.max_iters {
        iters += 1;
        let cand = try_step(params, grid, &ws, &u, dt)?;
        let e1 = energy(params, pot, grid, &cand)?;
        let positive = cand.values()[..grid.len() - 1]
            .iter()
            .all(|&v| v > T::zero());
        let slack = T::of(1e-12) * (T::one() + e.total.abs());
        if !(positive && e1.total <= e.total + slack) {
            dt = dt * T::half();
            if dt < config.dt0 * T::of(1e-14) {
                return Err(Error::Numerical(
                    "flow stalled: steps rejected at the minimum step size".into(),
                ));
            }
            continue;
        }
        u = cand;
        e = e1;
        dt = (dt * T::of(1.1)).min(config.dt_max);
        if iters % 25 == 0 {
            let raw_inter = interaction_integral(params, grid, &u)?;
            let mu = multiplier(params, e.total, raw_inter);
            let res = el_residual_values(params, &ws, &u.values()[..], mu);
            if residual_norm(grid, &res) <= config.flow_tol {
                reached_flow_tol = true;
                break;
            }
        }
    }
    let raw_inter = interaction_integral(params, grid, &u)?;
    let mut mu = multiplier(params, e.total, raw_inter);
    let mut vals = u.into_values();
    let (residual, newton_iters) =
        newton_finish(params, grid, &ws, &mut vals[..], &mut mu, config)?;
    let m = grid.len();
    vals[m - 1] = T::zero();
    let mut u = Profile::new(grid, vals)?;
    // Newton preserves mass to rounding; renormalize exactly
    normalize(grid, &mut u)?;
    let breakdown = energy(params, pot, grid, &u)?;
    let raw_inter = interaction_integral(params, grid, &u)?;
    let mu = multiplier(params, breakdown.total, raw_inter);
    if residual > (config.residual_tol * T::of(1e3)).max(config.flow_tol) {
        return Err(Error::NonConverged {
            context: format!(
                "minimize at a = {} (flow tol reached: {reached_flow_tol})",
                params.a
            ),
            residual: residual.to_f64().unwrap_or(f64::NAN),
            iterations: iters + newton_iters,
        });
    }
    let positive = u.values()[..m - 1].iter().all(|&v| v > T::zero());
    if !positive {
        return Err(Error::Verification(
            "converged profile is not strictly positive".into(),
        ));
    }
    let mut notes = vec!["radial symmetry imposed by the discretization ansatz".to_string()];
    if !pot.is_trapping() {
        notes.push(
            "kappa = 0: no trapping potential, the truncation radius acts as an artificial box"
                .to_string(),
        );
    }
    Ok(MinimizeResult {
        params: *params,
        pot: *pot,
        grid_spec: grid.spec(),
        grid: Some(grid.clone()),
        eps: T::one() / breakdown.kinetic.sqrt(),
        profile: u,
        breakdown,
        mu,
        iterations: iters + newton_iters,
        residual,
        notes,
    })
}

/// Euler-Lagrange residual of a stored result (plain-weighted L² over the
/// origin-excluded interior).
pub fn el_residual<T: Scalar>(result: &MinimizeResult<T>) -> Result<T> {
    let grid = result.grid();
    let ws = Workspace::new(grid, &result.pot);
    let vals = el_residual_values(
        &result.params,
        &ws,
        &result.profile.values()[..],
        result.mu,
    );
    Ok(residual_norm(grid, &vals))
}

/// Outcome of a warm-started continuation sweep. When an entry fails, the
/// successfully converged prefix is retained together with the error marker.
#[derive(Debug)]
pub struct SweepOutcome<T> {
    pub results: Vec<MinimizeResult<T>>,
    /// `(index into the schedule, error)` of the first failed entry.
    pub aborted: Option<(usize, Error)>,
}

/// Solve along a strictly increasing coupling schedule, warm-starting each
/// entry from the previous minimizer.
pub fn continuation_sweep<T: Scalar>(
    base: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &Arc<RadialGrid<T>>,
    schedule: &[T],
    q: &QSolution<T>,
    config: &FlowConfig<T>,
) -> Result<SweepOutcome<T>> {
    if schedule.is_empty() {
        return Err(Error::Usage("empty coupling schedule".into()));
    }
    for pair in schedule.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Usage("coupling schedule must be strictly increasing".into()));
        }
    }
    if *schedule.last().unwrap() >= q.a_star {
        return Err(Error::Domain(format!(
            "schedule reaches a = {} >= a* = {}",
            schedule.last().unwrap(),
            q.a_star
        )));
    }
    let mut results: Vec<MinimizeResult<T>> = Vec::with_capacity(schedule.len());
    for (idx, &a) in schedule.iter().enumerate() {
        let params = base.with_coupling(a);
        let init = match results.last() {
            Some(prev) => prev.profile.clone(),
            None => default_init(&params, pot, grid, q)?,
        };
        match minimize(&params, pot, grid, &init, q.a_star, config) {
            Ok(r) => results.push(r),
            Err(e) => {
                return Ok(SweepOutcome {
                    results,
                    aborted: Some((idx, e)),
                })
            }
        }
    }
    Ok(SweepOutcome {
        results,
        aborted: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn flow_step_preserves_mass_exactly() {
        let params = Params::<f64>::new(1, 0.5, 0.2).unwrap();
        let pot = PotentialSpec::new(2.0, 1.0).unwrap();
        let grid = build_grid::<f64>(1, 0.5, 20.0, 512, 2.0).unwrap();
        let mut u = Profile::from_fn(&grid, |r| (-r * r / 2.0).exp()).unwrap();
        normalize(&grid, &mut u).unwrap();
        let cfg = FlowConfig::default();
        let (next, _, _) = flow_step(&params, &pot, &grid, &u, &cfg, 0.25).unwrap();
        let mass = l2_norm_sq(&grid, &next).unwrap();
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flow_step_decreases_harmonic_energy() {
        let params = Params::<f64>::new(1, 0.5, 0.0).unwrap();
        let pot = PotentialSpec::new(2.0, 1.0).unwrap();
        let grid = build_grid::<f64>(1, 0.5, 20.0, 512, 2.0).unwrap();
        let mut u = Profile::from_fn(&grid, |r| (-(r - 1.0) * (r - 1.0)).exp() + 0.1).unwrap();
        {
            let m = grid.len();
            u.values_mut()[m - 1] = 0.0;
        }
        normalize(&grid, &mut u).unwrap();
        let cfg = FlowConfig::default();
        let e0 = energy(&params, &pot, &grid, &u).unwrap().total;
        let (u1, _, e1) = flow_step(&params, &pot, &grid, &u, &cfg, 0.25).unwrap();
        assert!(e1.total <= e0 + 1e-12);
        let (_, _, e2) = flow_step(&params, &pot, &grid, &u1, &cfg, 0.25).unwrap();
        assert!(e2.total <= e1.total + 1e-12);
        assert!(e2.total >= 1.0 - 1e-6); // bounded below by the ground energy
    }
}
