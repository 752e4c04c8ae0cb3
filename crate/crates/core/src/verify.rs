//! Property suites with measured statistics. `Level::Full` uses the sizes
//! of the acceptance gate; `Level::Quick` shrinks sample counts so the whole
//! run fits in about a minute.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::dataset::{generate_planted, PlantedConfig};
use crate::error::Result;
use crate::geometry::LpSpace;
use crate::index::{auto_k_l, from_bytes, success_bound, to_bytes, IndexParams, LshIndex};
use crate::lab::{
    conditional_collision, estimate_collision_seeded, geometric_collision, geometric_collision_direct, rho_sweep,
    write_rho_csv, SweepConfig, RHO_TRIAL_BUDGET,
};
use crate::lattice::{compute_num_shifts, make_lattices, LatticeParams};
use crate::rng::{derive_seed, seeded};
use crate::scheme::{derive_params, SchemeConfig};
use crate::stable::{
    compute_threshold, fit_tail_constant, tail_flatness, tail_probability_bounds, validate_concentration, StableParams,
    TailFitStatus,
};
use crate::stats::{binomial_sigma, ks_two_sample, Z99_ONE_SIDED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(crate::Error::invalid(format!("unknown level {other:?} (quick|full)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geometry,
    Stability,
    Tail,
    Covering,
    Disjointness,
    Concentration,
    CollisionIdentities,
    Sensitivity,
    CrossEstimator,
    Recall,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Geometry,
        Suite::Stability,
        Suite::Tail,
        Suite::Covering,
        Suite::Disjointness,
        Suite::Concentration,
        Suite::CollisionIdentities,
        Suite::Sensitivity,
        Suite::CrossEstimator,
        Suite::Recall,
        Suite::Determinism,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Stability => "stability",
            Suite::Tail => "tail",
            Suite::Covering => "covering",
            Suite::Disjointness => "disjointness",
            Suite::Concentration => "concentration",
            Suite::CollisionIdentities => "collision_identities",
            Suite::Sensitivity => "sensitivity",
            Suite::CrossEstimator => "cross_estimator",
            Suite::Recall => "recall",
            Suite::Determinism => "determinism",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub seconds: f64,
    pub stats: BTreeMap<String, f64>,
    /// One line per failed check.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Collects statistics and check outcomes for one suite.
struct Recorder {
    stats: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Recorder {
    fn new() -> Self {
        Self {
            stats: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn stat(&mut self, key: impl Into<String>, value: f64) {
        self.stats.insert(key.into(), value);
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }
}

fn pick<T>(level: Level, quick: T, full: T) -> T {
    match level {
        Level::Quick => quick,
        Level::Full => full,
    }
}

pub fn run_suite(suite: Suite, level: Level, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rec = Recorder::new();
    let seed = derive_seed(seed, suite as u64);
    match suite {
        Suite::Geometry => geometry_suite(level, seed, &mut rec)?,
        Suite::Stability => stability_suite(level, seed, &mut rec)?,
        Suite::Tail => tail_suite(level, seed, &mut rec)?,
        Suite::Covering => covering_suite(seed, &mut rec)?,
        Suite::Disjointness => disjointness_suite(level, seed, &mut rec)?,
        Suite::Concentration => concentration_suite(level, seed, &mut rec)?,
        Suite::CollisionIdentities => collision_identity_suite(level, seed, &mut rec)?,
        Suite::Sensitivity => sensitivity_suite(level, seed, &mut rec)?,
        Suite::CrossEstimator => cross_estimator_suite(level, seed, &mut rec)?,
        Suite::Recall => recall_suite(level, seed, &mut rec)?,
        Suite::Determinism => determinism_suite(level, seed, &mut rec)?,
    }
    Ok(SuiteReport {
        suite,
        passed: rec.failures.is_empty(),
        seconds: start.elapsed().as_secs_f64(),
        stats: rec.stats,
        failures: rec.failures,
    })
}

pub fn run_all(level: Level, seed: u64) -> Result<VerifyReport> {
    let suites = Suite::ALL
        .iter()
        .map(|&s| run_suite(s, level, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport {
        level,
        seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

fn normal_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect()
}

/// Residuals on independent, nearly equal and nearly opposite pairs.
fn geometry_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let pairs = pick(level, 10_000, 100_000);
    let mut rng = seeded(seed);
    let mut worst = f64::INFINITY;
    for p in [1.25, 1.5, 1.75, 2.0] {
        for d in [2usize, 10, 100] {
            let space = LpSpace::new(p, d)?;
            let (mut min_s, mut min_c) = (f64::INFINITY, f64::INFINITY);
            for i in 0..pairs {
                let x = normal_vec(d, &mut rng);
                let noise = normal_vec(d, &mut rng);
                let y: Vec<f64> = match i % 4 {
                    0 | 1 => noise,
                    2 => x.iter().zip(&noise).map(|(a, b)| a + 1e-3 * b).collect(),
                    _ => x.iter().zip(&noise).map(|(a, b)| -a + 1e-3 * b).collect(),
                };
                min_s = min_s.min(space.smoothness_residual(&x, &y)?);
                min_c = min_c.min(space.convexity_residual(&x, &y)?);
            }
            rec.stat(format!("min_smoothness_p{p}_d{d}"), min_s);
            rec.stat(format!("min_convexity_p{p}_d{d}"), min_c);
            worst = worst.min(min_s).min(min_c);
            rec.check(min_s >= -1e-9 && min_c >= -1e-9, || {
                format!("p={p} d={d}: residuals {min_s:e} / {min_c:e} below -1e-9")
            });
        }
    }
    rec.stat("min_residual", worst);
    Ok(())
}

fn stability_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let draws = pick(level, 20_000, 100_000);
    let mut rng = seeded(seed);
    let d = 10;
    for p in [1.2, 1.5, 1.8] {
        let stable = StableParams::new(p)?;
        let space = LpSpace::new(p, d)?;
        let x = normal_vec(d, &mut rng);
        let norm = space.norm(&x)?;
        let ax: Vec<f64> = (0..draws)
            .map(|_| x.iter().map(|v| v * rng.sample(stable)).sum())
            .collect();
        let scaled: Vec<f64> = (0..draws).map(|_| norm * rng.sample(stable)).collect();
        let ks = ks_two_sample(&ax, &scaled);
        rec.stat(format!("ks_p_value_p{p}"), ks.p_value);
        rec.stat(format!("ks_statistic_p{p}"), ks.statistic);
        rec.check(ks.p_value >= 0.01, || format!("p={p}: KS p-value {:.4} < 0.01", ks.p_value));
    }
    let n = pick(level, 200_000, 1_000_000);
    let gauss = StableParams::new(2.0)?;
    let samples: Vec<f64> = (0..n).map(|_| rng.sample(gauss)).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    rec.stat("variance_p2", var);
    rec.check((var - 2.0).abs() <= 0.02, || format!("p=2 variance {var:.5} outside 2 ± 1%"));
    Ok(())
}

fn tail_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let n = pick(level, 1_000_000, 10_000_000);
    let stable = StableParams::new(1.5)?;
    let consts = fit_tail_constant(&stable, n, (10.0, 100.0), &mut seeded(seed))?;
    let flat = tail_flatness(&consts);
    rec.stat("a_hat", consts.a_hat);
    rec.stat("b_hat", consts.b_hat);
    rec.stat("flatness", flat);
    rec.check(consts.status == TailFitStatus::Ok, || format!("fit status {:?}", consts.status));
    rec.check(flat <= 0.15, || format!("M^p tail varies by {:.1}% (> 15%)", 100.0 * flat));
    let mut outside = 0;
    for g in &consts.grid {
        let b = tail_probability_bounds(g.level, &stable, &consts)?;
        if !(b.lower <= g.prob && g.prob <= b.upper) {
            outside += 1;
        }
    }
    rec.stat("grid_points_outside_bounds", outside as f64);
    rec.check(outside == 0, || format!("{outside} grid points outside the tail bounds"));
    Ok(())
}

fn covering_suite(seed: u64, rec: &mut Recorder) -> Result<()> {
    let trials = 10_000u64;
    let mut rng = seeded(seed);
    let (t, p, spacing, delta) = (2, 1.5, 4.0, 0.05);
    let shifts = compute_num_shifts(t, p, spacing, delta, 1_000_000)?;
    let params = LatticeParams {
        w: 1.0,
        spacing,
        t,
        failure_prob: delta,
        num_shifts: shifts.count,
        saturated: shifts.saturated,
    };
    let set = make_lattices(params, rng.random())?;
    let uncovered = 1.0 - set.covering_fraction(&LpSpace::new(p, t)?, trials, &mut rng)?;
    let limit = delta + 3.0 * binomial_sigma(delta, trials);
    rec.stat("t2_num_shifts", shifts.count as f64);
    rec.stat("t2_uncovered", uncovered);
    rec.check(uncovered <= limit, || format!("t=2 uncovered {uncovered:.4} > {limit:.4}"));

    let single = make_lattices(LatticeParams { t: 1, num_shifts: 1, ..params }, rng.random())?;
    let covered = single.covering_fraction(&LpSpace::new(p, 1)?, trials, &mut rng)?;
    let slack = 3.0 * binomial_sigma(0.5, trials);
    rec.stat("t1_single_shift_covered", covered);
    rec.check((covered - 0.5).abs() <= slack, || format!("t=1 single shift covers {covered:.4}, expected 0.5"));
    Ok(())
}

fn disjointness_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let points = pick(level, 2_000, 10_000);
    let lattices = 3u64;
    let mut rng = seeded(seed);
    let mut violations = 0u64;
    let mut mismatches = 0u64;
    for t in 1..=4usize {
        let space = LpSpace::new(1.5, t)?;
        let params = LatticeParams {
            w: 1.0,
            spacing: 4.0,
            t,
            failure_prob: 0.05,
            num_shifts: lattices,
            saturated: false,
        };
        let set = make_lattices(params, rng.random())?;
        for _ in 0..points {
            let x: Vec<f64> = (0..t).map(|_| rng.random_range(-50.0..50.0)).collect();
            for u in 1..=lattices {
                let hits = set.containing_balls(&x, u, &space)?;
                violations += (hits.len() > 1) as u64;
                mismatches += (set.locate(&x, u, &space)? != hits.first().cloned()) as u64;
            }
        }
    }
    rec.stat("violations", violations as f64);
    rec.stat("locate_mismatches", mismatches as f64);
    rec.check(violations == 0, || format!("{violations} points lie in two balls of one lattice"));
    rec.check(mismatches == 0, || format!("{mismatches} lookups disagree with the neighbourhood scan"));
    Ok(())
}

fn concentration_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let trials = pick(level, 300, 1_000);
    let samples = pick(level, 200_000, 1_000_000);
    let stable = StableParams::new(1.5)?;
    let eps = 64f64.ln().ln() / 64f64.ln();
    rec.stat("epsilon", eps);
    let mut rng = seeded(seed);
    let x = normal_vec(8, &mut rng);
    let mut lows = Vec::new();
    for t in [16usize, 64, 256] {
        let th = compute_threshold(t, eps, &stable, samples, derive_seed(seed, t as u64))?;
        let rep = validate_concentration(&x, &th, &stable, trials, &mut rng)?;
        rec.stat(format!("low_rate_t{t}"), rep.rate_low);
        rec.stat(format!("high_rate_t{t}"), rep.rate_high);
        if t == 64 {
            let limit = 0.5 + 3.0 * binomial_sigma(0.5, trials);
            rec.check(rep.rate_high <= limit, || {
                format!("t=64 high-event rate {:.3} > {limit:.3}", rep.rate_high)
            });
        }
        lows.push(rep.rate_low);
    }
    rec.check(lows[0] >= lows[1] && lows[1] >= lows[2] && lows[0] > lows[2], || {
        format!("low-event rates {lows:?} not decreasing in t")
    });
    Ok(())
}

fn collision_identity_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let geo_trials = pick(level, 20_000, 100_000);
    let mut rng = seeded(seed);
    let scheme = derive_params(&SchemeConfig {
        threshold_samples: 200_000,
        ..SchemeConfig::new(2.0, 1.5)
    })?;
    let zero = estimate_collision_seeded(&scheme, 8, 0.0, 2_000, rng.random())?;
    rec.stat("p_hat_distance_zero", zero.p_hat);
    rec.check(zero.collisions == zero.trials, || format!("distance 0 collides with rate {}", zero.p_hat));

    let line = LpSpace::new(1.5, 1)?;
    let mut worst_z: f64 = 0.0;
    for dist in [0.2, 0.6, 1.0, 1.4, 1.8] {
        let g = geometric_collision(&line, &[0.0], &[dist], 1.0, geo_trials, &mut rng)?;
        let exact = (2.0 - dist) / (2.0 + dist);
        let z = (g.value - exact) / g.std_err;
        worst_z = worst_z.max(z.abs());
        rec.check(z.abs() <= 3.0, || format!("t=1 dist {dist}: {:.5} vs exact {exact:.5}", g.value));
    }
    rec.stat("t1_max_abs_z", worst_z);

    let mut worst_z: f64 = 0.0;
    for t in 1..=3usize {
        let space = LpSpace::new(1.5, t)?;
        let dir = space.random_direction(&mut rng);
        let x = vec![0.0; t];
        let y: Vec<f64> = dir.iter().map(|v| 0.9 * v).collect();
        let a = geometric_collision(&space, &x, &y, 1.0, geo_trials, &mut rng)?;
        let b = geometric_collision_direct(&space, &x, &y, 1.0, geo_trials, &mut rng)?;
        let z = (a.value - b.value) / (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        worst_z = worst_z.max(z.abs());
        rec.stat(format!("t{t}_q_form"), a.value);
        rec.stat(format!("t{t}_direct"), b.value);
        rec.check(z.abs() <= 3.0, || format!("t={t}: q-form {:.5} vs direct {:.5}", a.value, b.value));
    }
    rec.stat("estimators_max_abs_z", worst_z);
    Ok(())
}

/// Scheme template of the ρ checks: default knobs, t = 4, at most 10^5
/// shifted lattices.
pub fn sensitivity_template(threshold_samples: usize) -> SchemeConfig {
    let mut cfg = SchemeConfig::new(2.0, 1.5);
    cfg.overrides.t = Some(4);
    cfg.shift_cap = 100_000;
    cfg.threshold_samples = threshold_samples;
    cfg
}

/// Sweep settings of the ρ checks.
pub fn sensitivity_sweep(level: Level, seed: u64) -> SweepConfig {
    SweepConfig {
        scheme: sensitivity_template(pick(level, 200_000, 1_000_000)),
        d: 8,
        trials: pick(level, 20_000, 100_000),
        budget: pick(level, 1_000_000, RHO_TRIAL_BUDGET),
        check_trials: pick(level, 2_000, 10_000),
        seed,
    }
}

fn sensitivity_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let cfg = sensitivity_sweep(level, seed);
    let reports = rho_sweep(&cfg, &[2.0, 5.0])?;
    for r in &reports {
        let c = r.c;
        rec.stat(format!("c{c}_t"), r.scheme.t as f64);
        rec.stat(format!("c{c}_U"), r.scheme.lattice.num_shifts as f64);
        rec.stat(format!("c{c}_p1"), r.p1.p_hat);
        rec.stat(format!("c{c}_p2"), r.p2.p_hat);
        rec.stat(format!("c{c}_rho_hat"), r.rho_hat);
        rec.stat(format!("c{c}_rho_hi"), r.rho_ci.1);
        rec.stat(format!("c{c}_fallback_rate"), r.fallback_rate);
        rec.check(r.scheme.t <= 32 && r.scheme.lattice.num_shifts <= 100_000, || {
            format!("c={c}: t={} U={} outside the tuned range", r.scheme.t, r.scheme.lattice.num_shifts)
        });
        rec.check(r.sensitive_at(Z99_ONE_SIDED), || {
            format!("c={c}: p1 {:.4} not above p2 {:.4} at 99%", r.p1.p_hat, r.p2.p_hat)
        });
        rec.check(r.rho_ci.1 < 1.0, || format!("c={c}: rho upper bound {:.4} >= 1", r.rho_ci.1));
    }
    let (r2, r5) = (&reports[0], &reports[1]);
    rec.check(r5.rho_hat < r2.rho_hat && r5.rho_ci.0 <= r2.rho_ci.1, || {
        format!("rho(c=5) {:.4} not below rho(c=2) {:.4}", r5.rho_hat, r2.rho_hat)
    });
    Ok(())
}

fn cross_estimator_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let configs = pick(level, 3, 10);
    let lattice_trials = pick(level, 5_000, 20_000);
    let geo_trials = pick(level, 20_000, 100_000);
    let scheme = derive_params(&SchemeConfig {
        threshold_samples: 200_000,
        ..SchemeConfig::new(2.0, 1.5)
    })?;
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for i in 0..configs {
        let distance = rng.random_range(0.3..1.5);
        let check = conditional_collision(&scheme, 8, distance, lattice_trials, geo_trials, &mut rng)?;
        worst = worst.max(check.z.abs());
        rec.stat(format!("config{i}_projected_distance"), check.projected_distance);
        rec.stat(format!("config{i}_pipeline"), check.pipeline.p_hat);
        rec.stat(format!("config{i}_geometric"), check.geometric.value);
        rec.check(check.agrees(3.0), || {
            format!(
                "config {i}: pipeline {:.4} vs geometric {:.4} (z = {:.2})",
                check.pipeline.p_hat, check.geometric.value, check.z
            )
        });
    }
    rec.stat("max_abs_z", worst);
    Ok(())
}

/// Scheme of the end-to-end recall check: c = 2, p = 1.5, κ_w = 0.96.
pub fn recall_scheme_config() -> SchemeConfig {
    let mut cfg = SchemeConfig::new(2.0, 1.5);
    cfg.knobs.kappa_w = 0.96;
    cfg.threshold_samples = 1_000_000;
    cfg
}

fn recall_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let d = pick(level, 32, 128);
    let queries = pick(level, 50, 100);
    let inst = generate_planted(&PlantedConfig {
        n: 10_000,
        d,
        p: 1.5,
        r: 1.0,
        c: 2.0,
        planted_count: queries,
        spread: 1.0,
        seed,
        max_attempts: 10_000,
    })?;
    let scheme = derive_params(&recall_scheme_config())?;
    let start = Instant::now();
    let auto = auto_k_l(&scheme, d, inst.data.len(), 3.0, pick(level, 50_000, 200_000), RHO_TRIAL_BUDGET, derive_seed(seed, 1))?;
    rec.stat("estimate_seconds", start.elapsed().as_secs_f64());
    let start = Instant::now();
    let index = LshIndex::build(&inst.data, &scheme, IndexParams::new(auto.k, auto.l, derive_seed(seed, 2)))?;
    rec.stat("build_seconds", start.elapsed().as_secs_f64());
    rec.stat("k", auto.k as f64);
    rec.stat("L", auto.l as f64);
    rec.stat("p1_hat", auto.estimate.p1.p_hat);
    rec.stat("p2_hat", auto.estimate.p2.p_hat);

    let space = LpSpace::new(1.5, d)?;
    let start = Instant::now();
    let (mut successes, mut inexact) = (0u64, 0u64);
    for (qi, (_, q)) in inst.queries.iter().enumerate() {
        let res = index.query(q)?;
        let Some(a) = res.answer else { continue };
        let pos = inst.data.ids().iter().position(|&id| id == a.id).expect("answer id is stored");
        let exact = space.distance(inst.data.point(pos), q)?;
        let (_, nn) = crate::index::linear_scan_nn(&inst.data, q, &space)?;
        inexact += (a.distance != exact || a.distance < nn) as u64;
        successes += (a.in_contract && a.id == inst.truth[qi]) as u64;
    }
    rec.stat("query_seconds", start.elapsed().as_secs_f64());
    let rate = successes as f64 / queries as f64;
    let bound = success_bound(auto.estimate.p1.p_hat, auto.k, auto.l);
    let sigma = binomial_sigma(bound, queries as u64);
    rec.stat("success_rate", rate);
    rec.stat("predicted_success", bound);
    rec.stat("inexact_answers", inexact as f64);
    rec.check(rate >= 0.9, || format!("success rate {rate:.2} < 0.9"));
    rec.check(rate >= bound - 3.0 * sigma, || {
        format!("success rate {rate:.2} below prediction {bound:.3} − 3σ ({sigma:.3})")
    });
    rec.check(inexact == 0, || format!("{inexact} answers with inexact distances"));
    Ok(())
}

fn determinism_suite(level: Level, seed: u64, rec: &mut Recorder) -> Result<()> {
    let inst = generate_planted(&PlantedConfig {
        n: pick(level, 500, 2_000),
        d: 8,
        planted_count: 100,
        seed,
        ..PlantedConfig::default()
    })?;
    let scheme = derive_params(&SchemeConfig {
        threshold_samples: 200_000,
        ..SchemeConfig::new(2.0, 1.5)
    })?;
    let params = IndexParams::new(3, 8, derive_seed(seed, 1));
    let a = to_bytes(&LshIndex::build(&inst.data, &scheme, params)?);
    let b = to_bytes(&LshIndex::build(&inst.data, &scheme, params)?);
    rec.stat("index_bytes", a.len() as f64);
    rec.check(a == b, || "rebuild with the same seed changed the index bytes".into());

    let index = LshIndex::build(&inst.data, &scheme, params)?;
    let loaded = from_bytes(&a)?;
    let mut differing = 0;
    for (_, q) in inst.queries.iter() {
        differing += (index.query(q)? != loaded.query(q)?) as u64;
    }
    rec.stat("round_trip_differences", differing as f64);
    rec.check(differing == 0, || format!("{differing} queries differ after save/load"));

    let mut sweep = sensitivity_sweep(Level::Quick, seed);
    sweep.trials = 2_000;
    sweep.budget = 20_000;
    sweep.check_trials = 0;
    let render = || -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_rho_csv(&mut buf, &rho_sweep(&sweep, &[2.0, 3.0])?, &[])?;
        Ok(buf)
    };
    rec.check(render()? == render()?, || "rho sweep CSV changed between runs".into());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_levels() {
        assert_eq!(Suite::ALL.len(), 11);
        assert_eq!(Suite::CollisionIdentities.name(), "collision_identities");
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert!("slow".parse::<Level>().is_err());
    }

    #[test]
    fn quick_cheap_suites_pass() {
        for s in [Suite::Covering, Suite::Disjointness, Suite::Geometry] {
            let r = run_suite(s, Level::Quick, 1).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
