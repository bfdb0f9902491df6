//! Check runners on solved instances. Each returns CSV rows plus the scalar
//! metrics the summary aggregates across ε.

use super::instance::{origin_slab, slab_solution, solve_instance, Instance, InstanceSpec};
use crate::analysis::checks::{check_rate, gradient_difference_l2};
use crate::analysis::iteration::HYPOTHESES;
use crate::analysis::{
    approximation_error, averaging_mt_spaced, build_profile, check_caccioppoli, check_excess_decay,
    check_large_scale_cz, check_lipschitz, check_reverse_holder, convexity_fit, iteration_verify, ladder,
    measure_c0, AnalysisConfig, BallIntegrator, BallRecord, CheckRow, IterationParams, IterationReport,
    SampledTriple, ScaleProfile,
};
use crate::error::{Error, Result};
use crate::geometry::{
    check_admissible, empirical_modulus, eps_star, AdmissibilityGrid, DomainSpec, ModulusFn, ModulusKind, Point,
    RoughDomain, Verdict,
};
use crate::mesh::{triangulate_region, Region};
use crate::pde::{solve_dirichlet, CoefficientField, DiscreteField, SolverOptions};
use crate::mesh::BoundaryTag;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Parameters shared by the checks; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// CZ exponent.
    pub p: f64,
    pub sigma: f64,
    /// Meyers improvement fed into `γ` for the approximation check.
    pub delta: f64,
    /// Excess-decay ratio.
    pub theta: f64,
    pub eps0: f64,
    /// `t = t_over_epsilon · ε` for the averaging radius.
    pub t_over_epsilon: f64,
    pub balls: usize,
    /// Ball centres `ε ξ` with `|ξ| ≤ xi_max` and radii `ε τ`, `τ ∈ tau_range`, for the local checks.
    pub xi_max: f64,
    pub tau_range: [f64; 2],
    /// Macro balls for the CZ check: radius in `cz_r_range`, centre within `cz_center_max`.
    pub cz_r_range: [f64; 2],
    pub cz_center_max: f64,
    /// Ladder ratio between consecutive profile scales.
    pub ladder_ratio: f64,
    /// Profile floor in units of ε.
    pub floor_over_epsilon: f64,
    /// Excess-decay records start at `decay_r_min_over_epsilon · ε`.
    pub decay_r_min_over_epsilon: f64,
    pub iteration_theta: f64,
    pub iteration_eps0: f64,
    pub iteration_points_per_decade: usize,
    pub rate_r: f64,
    pub approximation_r: f64,
    /// Cell-problem spacing for `Â`.
    pub cell_h: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            p: 4.0,
            sigma: 0.4,
            delta: 1.0,
            theta: 0.125,
            eps0: 0.3,
            t_over_epsilon: 4.0,
            balls: 50,
            xi_max: 8.0,
            tau_range: [1.0, 4.0],
            cz_r_range: [1.0 / 24.0, 1.0 / 16.0],
            cz_center_max: 0.25,
            ladder_ratio: 2f64.powf(0.25),
            floor_over_epsilon: 2.0,
            decay_r_min_over_epsilon: 16.0,
            iteration_theta: 0.2,
            iteration_eps0: 0.18,
            iteration_points_per_decade: 64,
            rate_r: 0.5,
            approximation_r: 0.1,
            cell_h: 1.0 / 128.0,
        }
    }
}

/// Rows of one check on one instance, with scalar metrics and an optional JSON artifact.
#[derive(Clone, Debug, Default)]
pub struct CheckOutcome {
    pub rows: Vec<CheckRow>,
    pub metrics: BTreeMap<String, f64>,
    pub artifact: Option<serde_json::Value>,
}

impl CheckOutcome {
    fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.into(), v);
        self
    }
}

pub struct CellContext<'a> {
    pub family: &'a str,
    pub instance: &'a Instance,
    pub settings: &'a AnalysisSettings,
    pub seed: u64,
}

impl CellContext<'_> {
    fn eps(&self) -> f64 {
        self.instance.spec.epsilon
    }

    fn radius(&self) -> f64 {
        self.instance.spec.radius
    }

    pub fn config(&self) -> Result<AnalysisConfig> {
        let s = self.settings;
        AnalysisConfig::new(2, s.p, s.delta, s.sigma, eps_star(&self.instance.domain)?, s.eps0, self.eps())
    }

    fn row(&self, r: f64, t: f64, quantity: &str, lhs: f64, rhs: f64) -> CheckRow {
        CheckRow::new(self.family, self.eps(), r, t, quantity, lhs, rhs)
    }

    fn ball_rows(&self, quantity: &str, records: &[BallRecord]) -> Vec<CheckRow> {
        records
            .iter()
            .map(|b| {
                let mut row = self.row(b.center[0].hypot(b.center[1]), b.t, quantity, b.lhs, b.rhs).flagged(&b.flags);
                row.ratio = b.ratio;
                row
            })
            .collect()
    }
}

/// Balls `(ε ξ, ε τ)` with `ξ` uniform in the disk of radius `xi_max`; the same sequence for every ε.
pub fn micro_balls(seed: u64, epsilon: f64, n: usize, xi_max: f64, tau: [f64; 2]) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (rho, phi) = (xi_max * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>());
            let t = tau[0] + (tau[1] - tau[0]) * rng.gen::<f64>();
            ([epsilon * rho * phi.cos(), epsilon * rho * phi.sin()], epsilon * t)
        })
        .collect()
}

/// Macro balls with centres in `B_center_max` and radii in `r_range`.
pub fn macro_balls(seed: u64, n: usize, center_max: f64, r_range: [f64; 2]) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n)
        .map(|_| {
            let (rho, phi) = (center_max * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>());
            let r = r_range[0] + (r_range[1] - r_range[0]) * rng.gen::<f64>();
            ([rho * phi.cos(), rho * phi.sin()], r)
        })
        .collect()
}

/// Profile scales `floor · ε ≤ r ≤ radius`.
pub fn profile_scales(ctx: &CellContext) -> Vec<f64> {
    let s = ctx.settings;
    ladder(s.floor_over_epsilon * ctx.eps(), ctx.radius(), s.ladder_ratio)
}

pub fn profile(ctx: &CellContext) -> Result<ScaleProfile> {
    let integ = BallIntegrator::new(&ctx.instance.u);
    build_profile(&integ, &ctx.instance.domain, &profile_scales(ctx))
}

pub fn lipschitz(ctx: &CellContext) -> Result<CheckOutcome> {
    let eps = ctx.eps();
    let scales: Vec<f64> = profile_scales(ctx).into_iter().filter(|&r| r > 2.0 * eps && r < 1.0).collect();
    if scales.is_empty() {
        return Err(Error::InsufficientLadder { found: 0, needed: 1 });
    }
    let integ = BallIntegrator::new(&ctx.instance.u);
    let res = check_lipschitz(&integ, &scales, ctx.radius())?;
    let rows = res
        .scales
        .iter()
        .zip(&res.ratios)
        .map(|(&r, &q)| {
            let mut row = ctx.row(r, f64::NAN, "lipschitz", q, 1.0);
            row.ratio = q;
            row
        })
        .collect();
    Ok(CheckOutcome { rows, ..Default::default() }.metric("sup_ratio", res.sup_ratio))
}

fn worst_clean(records: &[BallRecord]) -> f64 {
    crate::analysis::checks::worst_ratio(records).unwrap_or(f64::NAN)
}

pub fn caccioppoli(ctx: &CellContext) -> Result<CheckOutcome> {
    let s = ctx.settings;
    let balls = micro_balls(ctx.seed, ctx.eps(), s.balls, s.xi_max, s.tau_range);
    let integ = BallIntegrator::new(&ctx.instance.u);
    let recs = check_caccioppoli(&integ, &balls);
    let worst = worst_clean(&recs);
    Ok(CheckOutcome { rows: ctx.ball_rows("caccioppoli", &recs), ..Default::default() }
        .metric("max_ratio", worst)
        .metric("lambda", ctx.instance.spec.coeff.lambda()))
}

pub fn reverse_holder(ctx: &CellContext) -> Result<CheckOutcome> {
    let s = ctx.settings;
    let cfg = ctx.config()?;
    let balls = micro_balls(ctx.seed, ctx.eps(), s.balls, s.xi_max, s.tau_range);
    let integ = BallIntegrator::new(&ctx.instance.u);
    let recs = check_reverse_holder(&integ, &cfg, &balls);
    let worst = worst_clean(&recs);
    Ok(CheckOutcome { rows: ctx.ball_rows("reverse_holder", &recs), ..Default::default() }.metric("max_ratio", worst))
}

pub fn cz(ctx: &CellContext) -> Result<CheckOutcome> {
    let s = ctx.settings;
    let cfg = ctx.config()?;
    let eps = ctx.eps();
    let t = s.t_over_epsilon * eps;
    let (lo, hi) = cfg.cz_range(eps);
    if !(t > lo && t < hi) {
        return Err(Error::Precondition(format!("t = {t} outside (ε/ε0, ε0) = ({lo:.4}, {hi:.4})")));
    }
    let balls = macro_balls(ctx.seed, s.balls, s.cz_center_max, s.cz_r_range);
    let integ = BallIntegrator::new(&ctx.instance.u);
    // Spacing at most a quarter of the smallest ball radius so every B_r holds enough samples.
    let spacing = (t / 4.0).min(s.cz_r_range[0] / 4.0);
    let reach = s.cz_center_max + 20.0 * s.cz_r_range[1] + spacing;
    let mt = averaging_mt_spaced(&integ, &integ.grad_norm, t, cfg.p0, [0.0, 0.0], reach, spacing);
    let mut recs = Vec::with_capacity(balls.len());
    for &(c, r) in &balls {
        match check_large_scale_cz(&mt, &cfg, eps, t, c, r) {
            Ok(mut b) => {
                b.t = t;
                recs.push((r, b));
            }
            Err(e) => recs.push((r, BallRecord { center: c, t, lhs: f64::NAN, rhs: f64::NAN, ratio: f64::NAN, flags: vec![e.to_string()] })),
        }
    }
    let rows = recs
        .iter()
        .map(|(r, b)| {
            let mut row = ctx.row(*r, b.t, "cz", b.lhs, b.rhs).flagged(&b.flags);
            row.ratio = b.ratio;
            row
        })
        .collect();
    let worst = worst_clean(&recs.into_iter().map(|x| x.1).collect::<Vec<_>>());
    Ok(CheckOutcome { rows, ..Default::default() }
        .metric("max_ratio", worst)
        .metric("skipped_samples", mt.skipped.len() as f64))
}

pub fn excess_decay(ctx: &CellContext, prof: &ScaleProfile) -> Result<CheckOutcome> {
    let s = ctx.settings;
    let eps = ctx.eps();
    let res = check_excess_decay(prof, s.theta, s.sigma, eps, ctx.radius(), s.decay_r_min_over_epsilon * eps)?;
    let mut rows = Vec::new();
    for (d, q) in res.records.iter().zip(&res.ratios) {
        let flags: Vec<String> = if d.ceiling { vec!["ceiling".into()] } else { Vec::new() };
        let mut row = ctx.row(d.r, s.theta * d.r, "decay_ratio", d.lhs, 2.0 * d.half).flagged(&flags);
        row.ratio = *q;
        rows.push(row);
        rows.push(ctx.row(d.r, s.theta * d.r, "decay_bound", d.lhs, d.half + res.c_fit * d.weight).flagged(&flags));
    }
    let clean_max = res
        .records
        .iter()
        .zip(&res.ratios)
        .filter(|(d, _)| !d.ceiling)
        .map(|(_, q)| *q)
        .fold(f64::NAN, f64::max);
    let max_ratio = res.ratios.iter().cloned().fold(f64::NAN, f64::max);
    Ok(CheckOutcome { rows, ..Default::default() }
        .metric("c_fit", res.c_fit)
        .metric("max_decay_ratio", max_ratio)
        .metric("max_decay_ratio_below_ceiling", clean_max)
        .metric("records", res.records.len() as f64))
}

/// Roughness modulus `ζ(r, s) = C s` fitted at the origin.
pub fn fitted_roughness(domain: &RoughDomain, epsilon: f64, top: f64) -> Result<ModulusKind> {
    let scales = ladder(epsilon, top, 2f64.sqrt());
    let samples = empirical_modulus(domain, [0.0, 0.0], &scales)?;
    Ok(ModulusKind::fit_roughness(&samples, epsilon))
}

/// `(H, Φ, h)` on a log grid over `[ε, radius]` with the requested density.
pub fn harvest(ctx: &CellContext, per_decade: usize) -> Result<SampledTriple> {
    let eps = ctx.eps();
    let top = ctx.radius();
    let n = ((top / eps).log10() * per_decade as f64).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| eps * (top / eps).powf(k as f64 / n as f64)).collect();
    let integ = BallIntegrator::new(&ctx.instance.u);
    let p = build_profile(&integ, &ctx.instance.domain, &grid)?;
    Ok(SampledTriple { epsilon: eps, r: p.scales, excess: p.excess, phi: p.phi, slope: p.slope })
}

pub fn iteration(ctx: &CellContext) -> Result<CheckOutcome> {
    let s = ctx.settings;
    if (ctx.radius() - 2.0).abs() > 1e-12 {
        return Err(Error::Precondition("the iteration verifier needs data on (ε, 2]".into()));
    }
    let eps = ctx.eps();
    let triple = harvest(ctx, s.iteration_points_per_decade)?;
    let zeta = fitted_roughness(&ctx.instance.domain, eps, ctx.radius())?;
    let eta = ModulusFn::new(
        ModulusKind::IterationEta { zeta: Box::new(zeta), sigma: s.sigma, theta: s.iteration_theta },
        1.0,
    )?;
    let c0 = measure_c0(&triple, s.iteration_theta, s.iteration_eps0, &eta, 1.05);
    let params = IterationParams { theta: s.iteration_theta, eps0: s.iteration_eps0, c0 };
    let report = iteration_verify(&triple, &params, &eta)?;
    Ok(iteration_outcome(ctx.family, eps, &report).metric("c0", c0))
}

pub fn iteration_outcome(family: &str, eps: f64, report: &IterationReport) -> CheckOutcome {
    let mut rows = Vec::new();
    for name in HYPOTHESES {
        let h = &report.hypotheses[name];
        let flags: Vec<String> = if h.passed { Vec::new() } else { vec!["violated".into()] };
        let mut row = CheckRow::new(family, eps, h.worst_at, f64::NAN, &format!("iteration_{name}"), h.worst_slack, 1.0)
            .flagged(&flags);
        row.ratio = h.worst_slack;
        rows.push(row);
    }
    let rhs = report.conclusion_rhs.unwrap_or(f64::NAN);
    let flags: Vec<String> = report.failure.iter().cloned().collect();
    rows.push(CheckRow::new(family, eps, 1.0, f64::NAN, "iteration_conclusion", report.conclusion_lhs, rhs).flagged(&flags));
    let pass = matches!(report.verdict, crate::analysis::ConclusionVerdict::Pass);
    CheckOutcome {
        rows,
        metrics: BTreeMap::from([("pass".to_string(), if pass { 1.0 } else { 0.0 })]),
        artifact: serde_json::to_value(report).ok(),
    }
}

pub fn convexity(ctx: &CellContext) -> Result<CheckOutcome> {
    let eps = ctx.eps();
    let scales: Vec<f64> = profile_scales(ctx).into_iter().filter(|&r| r >= 4.0 * eps && r <= 1.0).collect();
    let integ = BallIntegrator::new(&ctx.instance.u);
    let (pts, fit) = convexity_fit(&integ, &scales)?;
    let top = integ.grad_power([0.0, 0.0], ctx.radius(), 2.0).sqrt();
    let rows = pts.iter().map(|&(r, v)| ctx.row(r, f64::NAN, "convexity", v, r * top)).collect();
    Ok(CheckOutcome { rows, ..Default::default() }.metric("exponent", fit.slope).metric("r_squared", fit.r_squared))
}

pub fn admissibility(ctx: &CellContext) -> Result<CheckOutcome> {
    admissibility_of(ctx.family, &ctx.instance.domain, ctx.eps(), ctx.settings)
}

/// Admissibility of the roughness modulus fitted at the origin; needs no solve.
pub fn admissibility_of(family: &str, domain: &RoughDomain, eps: f64, s: &AnalysisSettings) -> Result<CheckOutcome> {
    let zeta = fitted_roughness(domain, eps, 1.0)?;
    let modulus = ModulusFn::new(zeta, s.sigma)?;
    let rep = check_admissible(&modulus, &AdmissibilityGrid::default())?;
    let mut rows = Vec::new();
    for k in 0..rep.t.len() {
        rows.push(CheckRow::new(family, eps, rep.t[k], f64::NAN, "admissibility_flatness_sup", rep.flatness_sup[k], 0.05));
        rows.push(CheckRow::new(family, eps, rep.t[k], f64::NAN, "admissibility_dini_sup", rep.dini_sup[k], 0.05));
    }
    let pass = rep.verdict == Verdict::Pass;
    Ok(CheckOutcome { rows, artifact: serde_json::to_value(&rep).ok(), ..Default::default() }.metric("pass", if pass { 1.0 } else { 0.0 }))
}

pub fn approximation(ctx: &CellContext) -> Result<CheckOutcome> {
    let s = ctx.settings;
    let cfg = ctx.config()?;
    let r = s.approximation_r;
    let inst = ctx.instance;
    let fit = origin_slab(&inst.domain, r)?;
    let (w, _) = slab_solution(&inst.u, &fit, &inst.spec.coeff, ctx.eps(), inst.spec.h)?;
    let (iu, iw) = (BallIntegrator::new(&inst.u), BallIntegrator::new(&w));
    let rec = approximation_error(&iu, &iw, r, fit.zeta, &cfg, ctx.eps(), ctx.radius())?;
    let mut rows = vec![ctx.row(r, f64::NAN, "approximation_flatness", rec.lhs, rec.rhs_flatness).flagged(&rec.flags)];
    let mut out = CheckOutcome::default().metric("zeta", fit.zeta);
    if let Some(rhs) = rec.rhs_scale {
        rows.push(ctx.row(r, f64::NAN, "approximation_scale", rec.lhs, rhs));
        out = out.metric("k_scale", crate::analysis::checks::ratio(rec.lhs, rhs));
    }
    out.rows = rows;
    Ok(out)
}

/// `‖w_ε - w_0‖_{L^2(T_r^+)}` with `u` solved on `D_2r` at spacing `h`; returns the record inputs.
fn rate_at(
    domain: &DomainSpec,
    eps: f64,
    coeff: &CoefficientField,
    hom: &CoefficientField,
    r: f64,
    h: f64,
    curvature: f64,
) -> Result<(Instance, DiscreteField, DiscreteField)> {
    let inst = solve_instance(&InstanceSpec { domain: domain.clone(), epsilon: eps, coeff: coeff.clone(), h, radius: 2.0 * r, curvature })?;
    let fit = origin_slab(&inst.domain, r)?;
    let mesh = Arc::new(triangulate_region(&Region::upper_slab(&fit), h)?);
    let solve = |c: &CoefficientField| {
        solve_dirichlet(
            mesh.clone(),
            c,
            eps,
            |x, _, out| inst.u.value_at(x, out),
            &[BoundaryTag::Slab, BoundaryTag::Ball],
            &SolverOptions::default(),
        )
        .map(|(w, _)| w)
    };
    let w_eps = solve(coeff)?;
    let w_0 = solve(hom)?;
    Ok((inst, w_eps, w_0))
}

/// Homogenization-rate record at one ε; the FEM error is `|lhs_h - lhs_2h|`.
pub fn rate(
    family: &str,
    domain: &DomainSpec,
    eps: f64,
    coeff: &CoefficientField,
    hom: &CoefficientField,
    settings: &AnalysisSettings,
    h: f64,
    curvature: f64,
) -> Result<CheckOutcome> {
    let r = settings.rate_r;
    let lhs_at = |h: f64| -> Result<(f64, Option<crate::analysis::checks::RateRecord>)> {
        let (inst, w_eps, w_0) = rate_at(domain, eps, coeff, hom, r, h, curvature)?;
        let integ = BallIntegrator::new(&inst.u);
        let rec = check_rate(&integ, &w_eps, &w_0, r, eps, None)?;
        Ok((rec.lhs, Some(rec)))
    };
    let (coarse, _) = lhs_at(2.0 * h)?;
    let (_, rec) = lhs_at(h)?;
    let mut rec = rec.expect("fine record");
    let fem = (rec.lhs - coarse).abs();
    rec.fem_error = Some(fem);
    if fem > 0.2 * rec.lhs {
        rec.flags.push("fem_error_unreliable".into());
    }
    let mut row = CheckRow::new(family, eps, r, f64::NAN, "rate", rec.lhs, rec.normalized).flagged(&rec.flags);
    row.ratio = rec.normalized;
    Ok(CheckOutcome {
        rows: vec![row, CheckRow::new(family, eps, r, f64::NAN, "rate_fem_error", fem, rec.lhs)],
        metrics: BTreeMap::from([
            ("normalized".to_string(), rec.normalized),
            ("fem_error_ratio".to_string(), crate::analysis::checks::ratio(fem, rec.lhs)),
            ("lhs".to_string(), rec.lhs),
        ]),
        artifact: None,
    })
}

/// Nodal domination `w ≥ |u| - 10 h` on the nodes of `u`'s mesh, `w` solved on the envelope.
pub fn comparison(ctx: &CellContext, envelope: &DomainSpec) -> Result<CheckOutcome> {
    let inst = ctx.instance;
    let env = RoughDomain::new(envelope.clone(), ctx.eps())?;
    let mesh = Arc::new(super::instance::mesh_domain_ball(&env, ctx.radius(), inst.spec.h)?);
    let (w, _) = crate::pde::comparison_solution(mesh, &inst.spec.coeff, ctx.eps(), &inst.u, &SolverOptions::default())?;
    let w = w.with_extension([0.0, 0.0], ctx.radius());
    let mut worst = f64::NEG_INFINITY;
    for (k, &x) in inst.u.mesh.nodes.iter().enumerate() {
        let gap = inst.u.values[k].abs() - w.scalar_at(x)?;
        worst = worst.max(gap);
    }
    let tol = 10.0 * inst.spec.h;
    Ok(CheckOutcome { rows: vec![ctx.row(ctx.radius(), f64::NAN, "comparison", worst.max(0.0), tol)], ..Default::default() }
        .metric("max_violation", worst)
        .metric("pass", if worst <= tol { 1.0 } else { 0.0 }))
}

/// `(fint_{B_r} |∇u - ∇w|^2)^{1/2}` when `w` is not a slab solution, for identical-problem controls.
pub fn gradient_gap(u: &DiscreteField, w: &DiscreteField, r: f64) -> Result<f64> {
    Ok((gradient_difference_l2(&BallIntegrator::new(u), &BallIntegrator::new(w), r)? / (PI * r * r)).sqrt())
}
