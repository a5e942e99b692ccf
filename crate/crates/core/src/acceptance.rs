//! Desk-scale verification suite.
//!
//! Twelve checks exercise the whole pipeline end to end at the default
//! configuration (N=1, b=0.5, l=2, κ=1, M=4096, R=25, with auxiliary runs
//! at N=3, b=1). Every threshold is pinned here; the `verify` CLI
//! subcommand and the `acceptance` integration test both run this module.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;

use crate::asymptotics::{
    fit_blowup_rate, fit_energy_rate, mu_limit_check, rescaled_profile_distance,
};
use crate::diagnostics::{
    build_linearized, kernel_probe, lemma_scaling_residual, pohozaev_balance,
    pohozaev_balance_profile, standard_seeds, uniqueness_probe,
};
use crate::energy::{
    gn_ratio, grid_for_dilation, lambda_const, random_bump, rescaled_q, scaling_probe,
};
use crate::error::Result;
use crate::grid::{build_grid, l2_norm_sq, RadialGrid};
use crate::linalg::linear_fit;
use crate::minimize::{continuation_sweep, minimize, default_init, FlowConfig, MinimizeResult};
use crate::params::{Params, PotentialSpec};
use crate::qsolve::{solve_q, verify_q_identities, QSolution, SolveOptions};

/// Outcome of one verification criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} [{}] {} — {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Resolution knobs for the suite.
#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    /// Grid size of the primary runs.
    pub nodes: usize,
    /// Grid size of the refinement companion (half of `nodes`).
    pub nodes_coarse: usize,
    /// Random bumps for the inequality sampling.
    pub bump_count: usize,
    /// Seeds in the uniqueness probe.
    pub seed_count: usize,
    /// Kernel-probe grid pair.
    pub kernel_nodes: (usize, usize),
}

impl VerifyConfig {
    pub fn full() -> Self {
        VerifyConfig {
            nodes: 4096,
            nodes_coarse: 2048,
            bump_count: 100,
            seed_count: 5,
            kernel_nodes: (1024, 2048),
        }
    }

    /// Reduced resolution; every threshold below remains attainable.
    pub fn quick() -> Self {
        VerifyConfig {
            nodes: 2048,
            nodes_coarse: 1024,
            bump_count: 40,
            seed_count: 3,
            kernel_nodes: (512, 1024),
        }
    }
}

const RADIUS: f64 = 25.0;
const CLUSTERING: f64 = 2.0;
const SWEEP_FRACTIONS: [f64; 5] = [0.9, 0.95, 0.98, 0.99, 0.995];

struct Lab {
    cfg: VerifyConfig,
    params1: Params<f64>,
    pot: PotentialSpec<f64>,
    grid1: Arc<RadialGrid<f64>>,
    q1: QSolution<f64>,
    q1_seconds: f64,
    params3: Params<f64>,
    grid3: Arc<RadialGrid<f64>>,
    q3: QSolution<f64>,
    sweep: Vec<MinimizeResult<f64>>,
}

fn flow_config() -> FlowConfig<f64> {
    FlowConfig {
        residual_tol: 1e-10,
        ..FlowConfig::default()
    }
}

impl Lab {
    fn build(cfg: VerifyConfig) -> Result<Lab> {
        let params1 = Params::new(1, 0.5, 0.0)?;
        let pot = PotentialSpec::new(2.0, 1.0)?;
        let grid1 = build_grid(1, 0.5, RADIUS, cfg.nodes, CLUSTERING)?;
        let opts = SolveOptions::default();
        let t0 = Instant::now();
        let q1 = solve_q(&params1, &grid1, &opts)?;
        let q1_seconds = t0.elapsed().as_secs_f64();
        let params3 = Params::new(3, 1.0, 0.0)?;
        let grid3 = build_grid(3, 1.0, RADIUS, cfg.nodes, CLUSTERING)?;
        let q3 = solve_q(&params3, &grid3, &opts)?;
        let schedule: Vec<f64> = SWEEP_FRACTIONS.iter().map(|f| f * q1.a_star).collect();
        let sweep_out = continuation_sweep(
            &params1,
            &pot,
            &grid1,
            &schedule,
            &q1,
            &flow_config(),
        )?;
        if let Some((idx, err)) = sweep_out.aborted {
            return Err(crate::error::Error::Numerical(format!(
                "sweep entry {idx} failed during verification: {err}"
            )));
        }
        Ok(Lab {
            cfg,
            params1,
            pot,
            grid1,
            q1,
            q1_seconds,
            params3,
            grid3,
            q3,
            sweep: sweep_out.results,
        })
    }
}

fn outcome(id: usize, name: &'static str, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
    }
}

fn c01_identities(lab: &Lab) -> CriterionOutcome {
    let report = verify_q_identities(&lab.q1);
    let dev = report.max_deviation();
    let time_ok = lab.q1_seconds < 5.0;
    outcome(
        1,
        "ground-state identities",
        dev < 1e-6 && time_ok,
        format!(
            "max pairwise deviation {:.3e} (tol 1e-6), solve {:.2}s (limit 5s)",
            dev, lab.q1_seconds
        ),
    )
}

fn c02_gn_sharpness(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64)> {
        let mut worst_family = 0.0f64;
        for (m, n) in [(1.0, 1.0), (2.0, 3.0), (0.5, 0.2)] {
            let grid = grid_for_dilation(&lab.q1, n)?;
            let u = rescaled_q(&lab.q1, &grid, m, n)?;
            let ratio = gn_ratio(&lab.params1, lab.q1.a_star, &grid, &u)?;
            worst_family = worst_family.max((ratio - 1.0).abs());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12345);
        let mut max_ratio = 0.0f64;
        for _ in 0..lab.cfg.bump_count {
            let u = random_bump(&lab.grid1, &mut rng)?;
            let ratio = gn_ratio(&lab.params1, lab.q1.a_star, &lab.grid1, &u)?;
            max_ratio = max_ratio.max(ratio);
        }
        Ok((worst_family, max_ratio))
    };
    match run() {
        Ok((family_dev, max_ratio)) => outcome(
            2,
            "sharp interpolation inequality",
            family_dev < 1e-6 && max_ratio <= 1.0 + 1e-8,
            format!(
                "optimizer-family deviation {:.3e} (tol 1e-6); max of {} random bumps {:.6} (limit 1+1e-8)",
                family_dev, lab.cfg.bump_count, max_ratio
            ),
        ),
        Err(e) => outcome(2, "sharp interpolation inequality", false, format!("error: {e}")),
    }
}

fn c03_harmonic(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64)> {
        let params = lab.params1.with_coupling(0.0);
        let init = default_init(&params, &lab.pot, &lab.grid1, &lab.q1)?;
        let res = minimize(
            &params,
            &lab.pot,
            &lab.grid1,
            &init,
            lab.q1.a_star,
            &flow_config(),
        )?;
        Ok((res.energy(), res.mu))
    };
    match run() {
        Ok((e, mu)) => outcome(
            3,
            "harmonic baseline",
            (e - 1.0).abs() < 1e-4 && (mu - 1.0).abs() < 1e-4,
            format!("e(0) = {e:.8} (target 1 ± 1e-4), mu = {mu:.8} (target 1 ± 1e-4)"),
        ),
        Err(e) => outcome(3, "harmonic baseline", false, format!("error: {e}")),
    }
}

fn c04_nonexistence(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64, bool)> {
        let a = 1.05 * lab.q1.a_star;
        let params = lab.params1.with_coupling(a);
        let taus = [5.0, 10.0, 20.0];
        let rows = scaling_probe(&params, &lab.pot, &lab.q1, &taus)?;
        let decreasing = rows.windows(2).all(|w| w[1].energy < w[0].energy);
        let xs: Vec<f64> = rows.iter().map(|r| r.tau * r.tau).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.energy).collect();
        let (coef, _, _) = linear_fit(&xs, &ys)?;
        let target = (1.0 - a / lab.q1.a_star) * lab.q1.kinetic / lab.q1.mass;
        Ok((coef, target, decreasing))
    };
    match run() {
        Ok((coef, target, decreasing)) => {
            let rel = ((coef - target) / target).abs();
            outcome(
                4,
                "supercritical collapse mechanism",
                rel < 0.05 && decreasing,
                format!(
                    "tau^2 coefficient {coef:.6} vs target {target:.6} (rel err {:.2}%, tol 5%); energies decreasing: {decreasing}",
                    rel * 100.0
                ),
            )
        }
        Err(e) => outcome(4, "supercritical collapse mechanism", false, format!("error: {e}")),
    }
}

fn c05_blowup_rate(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64)> {
        let lam = lambda_const(&lab.params1, &lab.pot, &lab.q1)?;
        let rep = fit_blowup_rate(&lab.sweep, &lab.q1, &lab.pot, lam)?;
        Ok((rep.rel_err_exponent, rep.rel_err_prefactor))
    };
    match run() {
        Ok((ee, ep)) => outcome(
            5,
            "gradient-scale blow-up rate",
            ee <= 0.05 && ep <= 0.10,
            format!(
                "exponent rel err {:.2}% (tol 5%), prefactor rel err {:.2}% (tol 10%)",
                ee * 100.0,
                ep * 100.0
            ),
        ),
        Err(e) => outcome(5, "gradient-scale blow-up rate", false, format!("error: {e}")),
    }
}

fn c06_energy_rate(lab: &Lab) -> CriterionOutcome {
    match fit_energy_rate(&lab.sweep, &lab.q1, &lab.pot) {
        Ok(rep) => outcome(
            6,
            "energy decay rate",
            rep.rel_err_exponent <= 0.05 && rep.rel_err_prefactor <= 0.10,
            format!(
                "exponent rel err {:.2}% (tol 5%), constant rel err {:.2}% (tol 10%)",
                rep.rel_err_exponent * 100.0,
                rep.rel_err_prefactor * 100.0
            ),
        ),
        Err(e) => outcome(6, "energy decay rate", false, format!("error: {e}")),
    }
}

fn c07_multiplier_limit(lab: &Lab) -> CriterionOutcome {
    match mu_limit_check(&lab.sweep, lab.params1.beta_sq()) {
        Ok(rows) => {
            let last = rows.last().unwrap().deviation;
            let monotone = rows.windows(2).all(|w| w[1].deviation < w[0].deviation);
            outcome(
                7,
                "multiplier limit",
                last < 0.05 && monotone,
                format!(
                    "deviation at closest coupling {:.3}% (tol 5%); monotone decreasing: {monotone}",
                    last * 100.0
                ),
            )
        }
        Err(e) => outcome(7, "multiplier limit", false, format!("error: {e}")),
    }
}

fn c08_profile_convergence(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, bool)> {
        let mut dists = Vec::new();
        for r in &lab.sweep {
            dists.push(rescaled_profile_distance(r, &lab.q1)?.sup);
        }
        let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
        Ok((*dists.last().unwrap(), decreasing))
    };
    match run() {
        Ok((last, decreasing)) => outcome(
            8,
            "rescaled profile convergence",
            last < 0.02 && decreasing,
            format!("sup distance at closest coupling {last:.5} (tol 0.02); decreasing: {decreasing}"),
        ),
        Err(e) => outcome(8, "rescaled profile convergence", false, format!("error: {e}")),
    }
}

fn c09_scaling_identity(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64, f64, f64)> {
        let res1 = lemma_scaling_residual(&lab.q1)?;
        let res3 = lemma_scaling_residual(&lab.q3)?;
        // refinement companions at half resolution
        let opts = SolveOptions::default();
        let g1c = build_grid(1, 0.5, RADIUS, lab.cfg.nodes_coarse, CLUSTERING)?;
        let q1c = solve_q(&lab.params1, &g1c, &opts)?;
        let g3c = build_grid(3, 1.0, RADIUS, lab.cfg.nodes_coarse, CLUSTERING)?;
        let q3c = solve_q(&lab.params3, &g3c, &opts)?;
        Ok((
            res1,
            res3,
            lemma_scaling_residual(&q1c)? / res1,
            lemma_scaling_residual(&q3c)? / res3,
        ))
    };
    match run() {
        Ok((r1, r3, order1, order3)) => outcome(
            9,
            "linearized scaling identity",
            r1 < 1e-4 && r3 < 1e-4 && order1 >= 3.0 && order3 >= 3.0,
            format!(
                "residuals {:.3e} (N=1), {:.3e} (N=3), tol 1e-4; refinement ratios {:.2}, {:.2} (>= 3 for 2nd order)",
                r1, r3, order1, order3
            ),
        ),
        Err(e) => outcome(9, "linearized scaling identity", false, format!("error: {e}")),
    }
}

fn c10_pohozaev(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64)> {
        let r95 = &lab.sweep[1]; // schedule entry at 0.95 a*
        let delta = 10.0 * r95.eps;
        let report = pohozaev_balance(r95, delta)?;
        // detector validity: a random non-solution profile must break it
        let mut bump = crate::grid::Profile::from_fn(&lab.grid1, |r| {
            (-(r - 2.0) * (r - 2.0)).exp() + 0.5 * (-(r - 0.5) * (r - 0.5) / 0.5).exp()
        })?;
        let mass = l2_norm_sq(&lab.grid1, &bump)?;
        let inv = 1.0 / mass.sqrt();
        for v in bump.values_mut() {
            *v *= inv;
        }
        let broken = pohozaev_balance_profile(
            &r95.params,
            &r95.pot,
            &lab.grid1,
            &bump,
            r95.mu,
            delta,
        )?;
        Ok((report.mismatch, broken.mismatch))
    };
    match run() {
        Ok((mis, broken)) => outcome(
            10,
            "local virial balance",
            mis < 1e-3 && broken > 0.1,
            format!(
                "mismatch {:.3e} (tol 1e-3) at delta = 10 eps; non-solution detector {:.3} (must exceed 0.1)",
                mis, broken
            ),
        ),
        Err(e) => outcome(10, "local virial balance", false, format!("error: {e}")),
    }
}

fn c11_uniqueness(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, usize)> {
        let a = 0.99 * lab.q3.a_star;
        let params = lab.params3.with_coupling(a);
        let seeds = standard_seeds(&params, &lab.pot, &lab.grid3, &lab.q3, lab.cfg.seed_count)?;
        let report = uniqueness_probe(
            &params,
            &lab.pot,
            &lab.grid3,
            &seeds,
            lab.q3.a_star,
            &flow_config(),
        )?;
        if !report.failures.is_empty() {
            return Err(crate::error::Error::Numerical(format!(
                "{} of {} seeds failed to converge",
                report.failures.len(),
                seeds.len()
            )));
        }
        Ok((report.max_pairwise_sup, report.converged))
    };
    match run() {
        Ok((sup, count)) => outcome(
            11,
            "near-threshold uniqueness",
            sup < 1e-6,
            format!("max pairwise sup distance {sup:.3e} over {count} seeds (tol 1e-6)"),
        ),
        Err(e) => outcome(11, "near-threshold uniqueness", false, format!("error: {e}")),
    }
}

fn c12_nondegeneracy(lab: &Lab) -> CriterionOutcome {
    let run = || -> Result<(f64, f64, f64)> {
        let opts = SolveOptions::default();
        let (m1, m2) = lab.cfg.kernel_nodes;
        let mut vals = Vec::new();
        for m in [m1, m2] {
            let g = build_grid(3, 1.0, RADIUS, m, CLUSTERING)?;
            let q = solve_q(&lab.params3, &g, &opts)?;
            let op = build_linearized(&q);
            vals.push(kernel_probe(&op)?.abs());
        }
        // reported (not asserted) for N = 1
        let op1 = build_linearized(&lab.q1);
        let n1_val = kernel_probe(&op1)?.abs();
        Ok((vals[0], vals[1], n1_val))
    };
    match run() {
        Ok((v1, v2, n1)) => {
            let stable = (v1 - v2).abs() / v2.abs().max(1e-300) < 1e-3;
            outcome(
                12,
                "radial non-degeneracy probe",
                v1 > 0.05 && v2 > 0.05 && stable,
                format!(
                    "smallest |eigenvalue| {v1:.6} / {v2:.6} at the two resolutions (floor 0.05, 3-digit stability: {stable}); N=1 sector reported: {n1:.6}"
                ),
            )
        }
        Err(e) => outcome(12, "radial non-degeneracy probe", false, format!("error: {e}")),
    }
}

/// Run the full suite; outcomes are ordered by criterion id.
pub fn run_all(cfg: VerifyConfig) -> Result<Vec<CriterionOutcome>> {
    let lab = Lab::build(cfg)?;
    Ok(vec![
        c01_identities(&lab),
        c02_gn_sharpness(&lab),
        c03_harmonic(&lab),
        c04_nonexistence(&lab),
        c05_blowup_rate(&lab),
        c06_energy_rate(&lab),
        c07_multiplier_limit(&lab),
        c08_profile_convergence(&lab),
        c09_scaling_identity(&lab),
        c10_pohozaev(&lab),
        c11_uniqueness(&lab),
        c12_nondegeneracy(&lab),
    ])
}
