//! Linearized-operator checks, the per-solution local virial (Pohozaev)
//! balance, and the multi-seed uniqueness probe.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    apply_laplacian, derivative, neg_laplacian_tridiagonal, residual_exclusion_radius,
    weighted_norm_from, Profile, RadialGrid,
};
use crate::interp::CubicInterp;
use crate::linalg::symtri_eigenvalue_nearest_zero;
use crate::minimize::{minimize, FlowConfig, MinimizeResult};
use crate::params::{Params, PotentialSpec};
use crate::qsolve::QSolution;
use crate::scalar::Scalar;

/// Discrete linearized operator `L = -Δ + 1 - (1+2β²)|x|^{-b}Q^{2β²}` on the
/// radial sector, assembled as a tridiagonal matrix on the interior unknowns
/// (Dirichlet at the truncation radius). Symmetric with respect to the
/// plain-weighted inner product by construction; the `r^{-b}` factor enters
/// through exact singular cell masses, never pointwise samples.
#[derive(Debug, Clone)]
pub struct LinearizedOperator<T> {
    grid: Arc<RadialGrid<T>>,
    sub: Vec<T>,
    diag: Vec<T>,
    sup: Vec<T>,
}

/// Assemble the linearized operator around a converged ground state.
pub fn build_linearized<T: Scalar>(q: &QSolution<T>) -> LinearizedOperator<T> {
    let grid = q.grid().clone();
    let (sub, mut diag, sup) = neg_laplacian_tridiagonal(&grid);
    let two_beta_sq = T::two() * q.params.beta_sq();
    let p_coef = T::one() + two_beta_sq;
    for i in 0..diag.len() {
        let veff = grid.singular_over_plain(i);
        let qv = q.profile.values()[i];
        diag[i] = diag[i] + T::one() - p_coef * veff * qv.abs().powf(two_beta_sq);
    }
    LinearizedOperator {
        grid,
        sub,
        diag,
        sup,
    }
}

impl<T: Scalar> LinearizedOperator<T> {
    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Apply to the interior values of a profile (the Dirichlet node is
    /// treated as zero). Returns interior-sized output.
    pub fn apply_interior(&self, u: &[T]) -> Vec<T> {
        let n = self.diag.len();
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            let mut acc = self.diag[i] * u[i];
            if i > 0 {
                acc += self.sub[i] * u[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * u[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    /// Shift the diagonal so that `v` becomes an exact kernel vector:
    /// `L' = L - diag((Lv)_i / v_i)`. Requires `v` nonvanishing on the
    /// interior; keeps the weighted symmetry and the tridiagonal structure.
    pub fn with_constructed_kernel(&self, v: &[T]) -> Result<LinearizedOperator<T>> {
        let n = self.diag.len();
        if v.len() < n {
            return Err(Error::Usage("kernel vector too short".into()));
        }
        let lv = self.apply_interior(&v[..n]);
        let mut shifted = self.clone();
        for i in 0..n {
            if v[i].abs() < T::min_positive_value().sqrt() {
                return Err(Error::Usage(
                    "kernel construction requires a nonvanishing vector".into(),
                ));
            }
            shifted.diag[i] = shifted.diag[i] - lv[i] / v[i];
        }
        Ok(shifted)
    }

    /// Similarity transform `W^{1/2} L W^{-1/2}` onto an ordinary symmetric
    /// tridiagonal matrix with the same spectrum.
    pub fn symmetrized(&self) -> (Vec<T>, Vec<T>) {
        let n = self.diag.len();
        let w = self.grid.plain_weights();
        let mut off = vec![T::zero(); n - 1];
        for i in 0..n - 1 {
            // equal to -kappa_i / (h_i sqrt(w_i w_{i+1})) up to sign symmetry
            off[i] = self.sup[i] * (w[i] / w[i + 1]).sqrt();
        }
        (self.diag.clone(), off)
    }
}

/// Smallest-magnitude eigenvalue of the radial-sector operator. A value
/// bounded away from zero is consistent with radial non-degeneracy; only
/// the radial sector is probed.
pub fn kernel_probe<T: Scalar>(op: &LinearizedOperator<T>) -> Result<T> {
    let (diag, off) = op.symmetrized();
    symtri_eigenvalue_nearest_zero(&diag, &off)
}

/// Residual of the scaling identity `L(N/2 Q + r Q') = -2Q`, measured in
/// the plain-weighted relative L² norm away from the origin cusp.
pub fn lemma_scaling_residual<T: Scalar>(q: &QSolution<T>) -> Result<T> {
    let grid = q.grid();
    let qp = derivative(grid, &q.profile)?;
    let n_half = T::of(q.params.dim() as f64) * T::half();
    let t = Profile::new(
        grid,
        q.profile
            .values()
            .iter()
            .zip(qp.values())
            .zip(grid.nodes())
            .map(|((&qv, &dv), &r)| n_half * qv + r * dv)
            .collect(),
    )?;
    let lap_t = apply_laplacian(grid, &t)?;
    let two_beta_sq = T::two() * q.params.beta_sq();
    let p_coef = T::one() + two_beta_sq;
    let m = grid.len();
    let mut res = vec![T::zero(); m];
    let mut den = vec![T::zero(); m];
    for i in 0..m {
        let veff = grid.singular_over_plain(i);
        let qv = q.profile.values()[i];
        let lt = -lap_t.values()[i] + t.values()[i]
            - p_coef * veff * qv.abs().powf(two_beta_sq) * t.values()[i];
        res[i] = lt + T::two() * qv;
        den[i] = T::two() * qv;
    }
    let r0 = residual_exclusion_radius(grid);
    let num = weighted_norm_from(grid, &res, r0);
    let denom = weighted_norm_from(grid, &den, r0);
    Ok(num / denom)
}

/// Itemized two-sided local virial balance over the ball of radius `δ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PohozaevReport<T> {
    pub delta: T,
    pub lhs: T,
    pub rhs: T,
    /// Kinetic flux through the sphere (enters the left side).
    pub boundary_kinetic: T,
    /// `(μ - V) u²` boundary term.
    pub boundary_mass: T,
    /// Interaction boundary term.
    pub boundary_interaction: T,
    /// `|L - R| / max(|L|, |R|, floor)`.
    pub mismatch: T,
}

/// Per-solution Pohozaev balance of a converged minimizer.
pub fn pohozaev_balance<T: Scalar>(
    result: &MinimizeResult<T>,
    delta: T,
) -> Result<PohozaevReport<T>> {
    pohozaev_balance_profile(
        &result.params,
        &result.pot,
        result.grid(),
        &result.profile,
        result.mu,
        delta,
    )
}

/// Pohozaev balance of an arbitrary profile: multiply the Euler-Lagrange
/// equation by `x·∇u`, integrate over `B_δ(0)`, and compare the two
/// assembled sides (they agree only when the profile actually solves the
/// equation with multiplier `μ`).
///
/// For radial profiles the balance reads
///
/// ```text
///   -½|S| δ^N u'(δ)² + (2-N)/2 K_δ
/// = ½|S| δ^N (μ-V(δ)) u(δ)² - ½ ∫_δ [N(μ-V) - rV'] u²
///   + a/(2+2β²) [ |S| δ^{N-b} u(δ)^{2+2β²} - (N-b) ∫_δ |x|^{-b} u^{2+2β²} ]
/// ```
///
/// with `K_δ` the kinetic integral over the ball.
pub fn pohozaev_balance_profile<T: Scalar>(
    params: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &Arc<RadialGrid<T>>,
    profile: &Profile<T>,
    mu: T,
    delta: T,
) -> Result<PohozaevReport<T>> {
    if !(delta > T::zero() && delta < grid.radius()) {
        return Err(Error::Usage(format!(
            "ball radius must lie inside (0, R); got {delta}"
        )));
    }
    profile.matches(grid)?;
    let dim = T::of(params.dim() as f64);
    let b = params.b();
    let sphere = grid.sphere();
    let u = profile.values();
    let p2 = T::two() + T::two() * params.beta_sq();

    // boundary values by cubic interpolation at r = δ
    let it = CubicInterp::new(grid, profile);
    let ud = it.eval(delta);
    let upd = it.eval_deriv(delta);

    // partial cell masses over [0, δ]
    let m = grid.len();
    let mut faces_lo = T::zero();
    let mut kinetic_ball = T::zero();
    let mut bulk_mass = T::zero();
    let mut bulk_inter = T::zero();
    for i in 0..m {
        let face_hi = if i + 1 < m {
            T::half() * (grid.node(i) + grid.node(i + 1))
        } else {
            grid.radius()
        };
        let lo = faces_lo;
        let hi = face_hi.min(delta);
        faces_lo = face_hi;
        if hi <= lo {
            break;
        }
        let wp = (hi.powf(dim) - lo.powf(dim)) / dim;
        let ws = (hi.powf(dim - b) - lo.powf(dim - b)) / (dim - b);
        let v_r = pot.eval(grid.node(i));
        let dv_r = pot.exponent * v_r; // r V'(r) = l V(r) for the homogeneous trap
        bulk_mass += wp * (dim * (mu - v_r) - dv_r) * u[i] * u[i];
        bulk_inter += ws * u[i].abs().powf(p2);
        if face_hi > delta {
            break;
        }
    }
    // kinetic integral over the ball with face-based gradients
    for i in 0..m - 1 {
        let mid = T::half() * (grid.node(i) + grid.node(i + 1));
        if mid > delta {
            break;
        }
        let h = grid.gaps()[i];
        let du = (u[i + 1] - u[i]) / h;
        kinetic_ball += grid.conductances()[i] * h * du * du;
    }
    kinetic_ball = kinetic_ball * sphere;
    bulk_mass = bulk_mass * sphere;
    bulk_inter = bulk_inter * sphere;

    let boundary_kinetic = -T::half() * sphere * delta.powf(dim) * upd * upd;
    let lhs = boundary_kinetic + (T::two() - dim) * T::half() * kinetic_ball;

    let boundary_mass =
        T::half() * sphere * delta.powf(dim) * (mu - pot.eval(delta)) * ud * ud;
    let boundary_interaction = params.a / p2
        * sphere
        * delta.powf(dim - b)
        * ud.abs().powf(p2);
    let rhs = boundary_mass - T::half() * bulk_mass + boundary_interaction
        - params.a / p2 * (dim - b) * bulk_inter;

    let floor = T::of(1e-30);
    let mismatch = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(floor);
    Ok(PohozaevReport {
        delta,
        lhs,
        rhs,
        boundary_kinetic,
        boundary_mass,
        boundary_interaction,
        mismatch,
    })
}

/// Multi-seed uniqueness probe: minimize from each seed and report the
/// maximum pairwise sup distance over the converged subset.
#[derive(Debug)]
pub struct UniquenessReport<T> {
    pub max_pairwise_sup: T,
    pub converged: usize,
    pub failures: Vec<(usize, Error)>,
    pub results: Vec<MinimizeResult<T>>,
}

pub fn uniqueness_probe<T: Scalar>(
    params: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &Arc<RadialGrid<T>>,
    seeds: &[Profile<T>],
    a_star: T,
    config: &FlowConfig<T>,
) -> Result<UniquenessReport<T>> {
    if seeds.is_empty() {
        return Err(Error::Usage("uniqueness probe needs at least one seed".into()));
    }
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        match minimize(params, pot, grid, seed, a_star, config) {
            Ok(r) => results.push(r),
            Err(e) => failures.push((i, e)),
        }
    }
    let mut max_sup = T::zero();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let a = results[i].profile.values();
            let b = results[j].profile.values();
            let mut sup = T::zero();
            for k in 0..a.len() {
                sup = sup.max((a[k] - b[k]).abs());
            }
            max_sup = max_sup.max(sup);
        }
    }
    Ok(UniquenessReport {
        max_pairwise_sup: max_sup,
        converged: results.len(),
        failures,
        results,
    })
}

/// Standard seed family for the probe: Gaussians of varied widths plus the
/// rescaled ground state.
pub fn standard_seeds<T: Scalar>(
    params: &Params<T>,
    pot: &PotentialSpec<T>,
    grid: &Arc<RadialGrid<T>>,
    q: &QSolution<T>,
    count: usize,
) -> Result<Vec<Profile<T>>> {
    let widths = [0.5, 1.0, 2.0, 4.0, 0.25, 3.0, 8.0];
    let mut seeds = Vec::with_capacity(count);
    seeds.push(crate::minimize::default_init(params, pot, grid, q)?);
    for &wdt in widths.iter().take(count.saturating_sub(1)) {
        let w = T::of(wdt);
        let mut s = Profile::from_fn(grid, |r| (-(r / w) * (r / w) * T::half()).exp())?;
        let m = grid.len();
        s.values_mut()[m - 1] = T::zero();
        seeds.push(s);
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, inner, Weight};

    #[test]
    fn zero_potential_operator_matches_closed_form() {
        // (-Δ + 1) e^{-r²} = (1 + 6 - 4r²) e^{-r²} in N = 3 (drop the Q term)
        let g = build_grid::<f64>(3, 1.0, 12.0, 2048, 1.5).unwrap();
        let f = Profile::from_fn(&g, |r| (-r * r).exp()).unwrap();
        let lap = apply_laplacian(&g, &f).unwrap();
        for i in 4..g.len() - 4 {
            let r = g.node(i);
            let got = -lap.values()[i] + f.values()[i];
            let exact = (1.0 + 6.0 - 4.0 * r * r) * (-r * r).exp();
            assert!((got - exact).abs() < 1e-4, "r={r}: {got} vs {exact}");
        }
    }

    #[test]
    fn symmetrized_off_diagonals_are_consistent() {
        // W L must be symmetric: w_i L_{i,i+1} = w_{i+1} L_{i+1,i}
        let g = build_grid::<f64>(2, 0.5, 8.0, 256, 2.0).unwrap();
        let (sub, _diag, sup) = neg_laplacian_tridiagonal(&g);
        let w = g.plain_weights();
        for i in 0..sub.len() - 1 {
            let a = w[i] * sup[i];
            let b = w[i + 1] * sub[i + 1];
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
                "row {i}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn weighted_symmetry_of_laplacian_quadratic_form() {
        let g = build_grid::<f64>(3, 1.0, 8.0, 256, 2.0).unwrap();
        let mut s = 99u64;
        let mut rnd = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s as f64 / u64::MAX as f64) - 0.5
        };
        let mut fv = vec![0.0; g.len()];
        let mut gv = vec![0.0; g.len()];
        for i in 0..g.len() - 1 {
            fv[i] = rnd();
            gv[i] = rnd();
        }
        let f = Profile::new(&g, fv).unwrap();
        let h = Profile::new(&g, gv).unwrap();
        let lf = apply_laplacian(&g, &f).unwrap();
        let lg = apply_laplacian(&g, &h).unwrap();
        let a = inner(&g, &lf, &h, Weight::Plain).unwrap();
        let b = inner(&g, &f, &lg, Weight::Plain).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0));
    }
}
