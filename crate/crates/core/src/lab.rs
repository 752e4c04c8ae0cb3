//! Monte Carlo collision probabilities, the exponent ρ, and the geometric
//! collision of two equal ℓ_p balls.
//!
//! Trials are split into fixed-size chunks with per-trial derived seeds, so
//! every estimate depends only on its root seed and trial count.

use std::io::Write;
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{self, LpSpace};
use crate::lattice::make_lattices;
use crate::rng::{derive_seed, seeded};
use crate::scheme::{derive_params, sample_hash, SchemeConfig, SchemeParams};
use crate::stats::{wilson_interval, Z95};

pub const MIN_COLLISION_TRIALS: u64 = 1_000;
pub const MIN_GEOMETRIC_TRIALS: u64 = 10_000;
/// Far-collision target of the adaptive p2 estimate.
pub const MIN_FAR_COLLISIONS: u64 = 20;
/// Default cap on adaptive trials.
pub const RHO_TRIAL_BUDGET: u64 = 10_000_000;
/// Per-interval quantile giving joint 95% coverage for two intervals.
pub const Z_JOINT95: f64 = 2.241_402_727_604_947;

const CHUNK: u64 = 4096;

pub const RHO_CSV_HEADER: [&str; 19] = [
    "c",
    "p",
    "profile",
    "w",
    "t",
    "eps",
    "U",
    "saturated",
    "p1_hat",
    "p1_lo",
    "p1_hi",
    "p2_hat",
    "p2_lo",
    "p2_hi",
    "rho_hat",
    "inv_c",
    "inv_cp",
    "lncsq_over_cp",
    "fallback_rate",
];

/// x with standard normal coordinates and y = x + distance·(random unit
/// ℓ_p direction).
pub fn make_pair_at_distance<R: Rng + ?Sized>(space: &LpSpace, distance: f64, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::invalid(format!("pair distance must be finite and nonnegative, got {distance}")));
    }
    let x: Vec<f64> = (0..space.dim()).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    if distance == 0.0 {
        return Ok((x.clone(), x));
    }
    let dir = space.random_direction(rng);
    let y = x.iter().zip(&dir).map(|(a, b)| a + distance * b).collect();
    Ok((x, y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionEstimate {
    pub distance: f64,
    pub trials: u64,
    pub collisions: u64,
    pub p_hat: f64,
    /// 95% Wilson interval.
    pub ci95: (f64, f64),
    /// Trials where at least one point got the fallback value.
    pub fallbacks: u64,
    pub fallback_rate: f64,
}

impl CollisionEstimate {
    pub fn from_counts(distance: f64, trials: u64, collisions: u64, fallbacks: u64) -> Self {
        let n = trials.max(1) as f64;
        Self {
            distance,
            trials,
            collisions,
            p_hat: collisions as f64 / n,
            ci95: wilson_interval(collisions, trials, Z95),
            fallbacks,
            fallback_rate: fallbacks as f64 / n,
        }
    }

    /// Wilson interval at an arbitrary normal quantile.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.collisions, self.trials, z)
    }

    pub fn std_err(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials.max(1) as f64).sqrt()
    }
}

/// (collisions, fallbacks) over the given trial indices.
fn count_collisions(scheme: &SchemeParams, d: usize, distance: f64, root: u64, trials: Range<u64>) -> Result<(u64, u64)> {
    let space = LpSpace::new(scheme.p, d)?;
    let chunks: Vec<Range<u64>> = trials
        .clone()
        .step_by(CHUNK as usize)
        .map(|s| s..(s + CHUNK).min(trials.end))
        .collect();
    let partial = chunks
        .into_par_iter()
        .map(|range| {
            let (mut hits, mut falls) = (0u64, 0u64);
            for i in range {
                let mut rng = seeded(derive_seed(root, i));
                let h = sample_hash(scheme, d, rng.random())?;
                let (x, y) = make_pair_at_distance(&space, distance, &mut rng)?;
                let (hx, hy) = (h.eval(&x)?, h.eval(&y)?);
                hits += (hx == hy) as u64;
                falls += (hx.is_fallback() || hy.is_fallback()) as u64;
            }
            Ok((hits, falls))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(partial.into_iter().fold((0, 0), |(a, b), (h, f)| (a + h, b + f)))
}

/// Collision frequency over fresh hash functions and fresh pairs at the
/// given distance.
pub fn estimate_collision<R: Rng + ?Sized>(
    scheme: &SchemeParams,
    d: usize,
    distance: f64,
    trials: u64,
    rng: &mut R,
) -> Result<CollisionEstimate> {
    estimate_collision_seeded(scheme, d, distance, trials, rng.random())
}

pub fn estimate_collision_seeded(
    scheme: &SchemeParams,
    d: usize,
    distance: f64,
    trials: u64,
    seed: u64,
) -> Result<CollisionEstimate> {
    if trials < MIN_COLLISION_TRIALS {
        return Err(Error::invalid(format!("collision estimate needs at least {MIN_COLLISION_TRIALS} trials")));
    }
    let (hits, falls) = count_collisions(scheme, d, distance, seed, 0..trials)?;
    Ok(CollisionEstimate::from_counts(distance, trials, hits, falls))
}

/// Estimate of Vol(B(x,w) ∩ B(y,w)) / Vol(B(x,w) ∪ B(y,w)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricCollision {
    pub value: f64,
    pub std_err: f64,
    pub trials: u64,
}

fn check_geometric(space: &LpSpace, x: &[f64], y: &[f64], w: f64, trials: u64) -> Result<f64> {
    check_dim(space.dim(), x.len())?;
    check_dim(space.dim(), y.len())?;
    if !(w > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    if trials < MIN_GEOMETRIC_TRIALS {
        return Err(Error::invalid(format!("geometric estimate needs at least {MIN_GEOMETRIC_TRIALS} trials")));
    }
    let dist = space.distance(x, y)?;
    if !dist.is_finite() {
        return Err(Error::invalid("points must be finite"));
    }
    Ok(dist)
}

fn exact_geometric(dist: f64, w: f64, trials: u64) -> Option<GeometricCollision> {
    let value = if dist == 0.0 {
        1.0
    } else if dist >= 2.0 * w {
        0.0
    } else {
        return None;
    };
    Some(GeometricCollision {
        value,
        std_err: 0.0,
        trials,
    })
}

/// Estimates q = Pr_{z ~ U(B(x,w))}[z ∈ B(y,w)] and returns q/(2−q), which
/// equals ∩/∪ for equal-radius balls.
pub fn geometric_collision<R: Rng + ?Sized>(
    space: &LpSpace,
    x: &[f64],
    y: &[f64],
    w: f64,
    trials: u64,
    rng: &mut R,
) -> Result<GeometricCollision> {
    let dist = check_geometric(space, x, y, w, trials)?;
    if let Some(exact) = exact_geometric(dist, w, trials) {
        return Ok(exact);
    }
    let p = space.p();
    let mut inside = 0u64;
    for _ in 0..trials {
        let z = space.uniform_in_ball(x, w, rng)?;
        inside += (geometry::distance(&z, y, p) <= w) as u64;
    }
    let q = inside as f64 / trials as f64;
    let se_q = (q * (1.0 - q) / trials as f64).sqrt();
    Ok(GeometricCollision {
        value: q / (2.0 - q),
        std_err: 2.0 / (2.0 - q).powi(2) * se_q,
        trials,
    })
}

/// Direct ∩/∪ estimate: uniform points of the union by double rejection
/// (pick a ball, sample in it, keep points of the intersection with
/// probability ½), counting the fraction that land in both balls.
pub fn geometric_collision_direct<R: Rng + ?Sized>(
    space: &LpSpace,
    x: &[f64],
    y: &[f64],
    w: f64,
    trials: u64,
    rng: &mut R,
) -> Result<GeometricCollision> {
    let dist = check_geometric(space, x, y, w, trials)?;
    if let Some(exact) = exact_geometric(dist, w, trials) {
        return Ok(exact);
    }
    let p = space.p();
    let (mut accepted, mut both) = (0u64, 0u64);
    for _ in 0..trials {
        let (centre, other) = if rng.random::<bool>() { (x, y) } else { (y, x) };
        let z = space.uniform_in_ball(centre, w, rng)?;
        if geometry::distance(&z, other, p) <= w {
            if rng.random::<bool>() {
                accepted += 1;
                both += 1;
            }
        } else {
            accepted += 1;
        }
    }
    let v = both as f64 / accepted.max(1) as f64;
    Ok(GeometricCollision {
        value: v,
        std_err: (v * (1.0 - v) / accepted.max(1) as f64).sqrt(),
        trials: accepted,
    })
}

/// Full-pipeline collision with the projection held fixed, compared with
/// the geometric value at the realized projected distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalCheck {
    pub distance: f64,
    pub projected_distance: f64,
    /// Collisions among trials where neither point fell back.
    pub pipeline: CollisionEstimate,
    pub geometric: GeometricCollision,
    /// (pipeline − geometric) / combined standard error.
    pub z: f64,
}

impl ConditionalCheck {
    pub fn agrees(&self, sigmas: f64) -> bool {
        self.z.abs() <= sigmas
    }
}

/// One random configuration: a hash function (projection) and a pair at
/// `distance`, then `trials` fresh lattice sequences.
pub fn conditional_collision<R: Rng + ?Sized>(
    scheme: &SchemeParams,
    d: usize,
    distance: f64,
    trials: u64,
    geometric_trials: u64,
    rng: &mut R,
) -> Result<ConditionalCheck> {
    if trials < MIN_COLLISION_TRIALS {
        return Err(Error::invalid(format!("collision estimate needs at least {MIN_COLLISION_TRIALS} trials")));
    }
    let space = LpSpace::new(scheme.p, d)?;
    let h = sample_hash(scheme, d, rng.random())?;
    let (x, y) = make_pair_at_distance(&space, distance, rng)?;
    let (px, py) = (h.project(&x)?, h.project(&y)?);
    let reduced = scheme.reduced_space();
    let projected_distance = reduced.distance(&px, &py)?;
    let root: u64 = rng.random();
    let chunks: Vec<Range<u64>> = (0..trials).step_by(CHUNK as usize).map(|s| s..(s + CHUNK).min(trials)).collect();
    let (hits, valid) = chunks
        .into_par_iter()
        .map(|range| {
            let (mut hits, mut valid) = (0u64, 0u64);
            for i in range {
                let lattices = make_lattices(scheme.lattice, derive_seed(root, i))?;
                let hx = lattices.hash_point(&px, &reduced)?;
                let hy = lattices.hash_point(&py, &reduced)?;
                if !hx.is_fallback() && !hy.is_fallback() {
                    valid += 1;
                    hits += (hx == hy) as u64;
                }
            }
            Ok((hits, valid))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0), |(a, b), (h, v)| (a + h, b + v));
    let pipeline = CollisionEstimate::from_counts(distance, valid, hits, 0);
    let geometric = geometric_collision(&reduced, &px, &py, scheme.w, geometric_trials, rng)?;
    let se = (pipeline.std_err().powi(2) + geometric.std_err.powi(2)).sqrt();
    let diff = pipeline.p_hat - geometric.value;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ConditionalCheck {
        distance,
        projected_distance,
        pipeline,
        geometric,
        z,
    })
}

/// ln(1/p1) / ln(1/p2); equal inputs give 1.
pub fn rho_from(p1: f64, p2: f64) -> f64 {
    if p1 == p2 {
        return 1.0;
    }
    (1.0 / p1).ln() / (1.0 / p2).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoReport {
    pub c: f64,
    pub p: f64,
    pub scheme: SchemeParams,
    pub p1: CollisionEstimate,
    pub p2: CollisionEstimate,
    pub rho_hat: f64,
    /// Joint 95% interval from the two Wilson intervals.
    pub rho_ci: (f64, f64),
    /// No far collisions within the budget: `rho_hat` is the upper end of
    /// the interval, not a point estimate.
    pub upper_bounded_only: bool,
    pub baseline_inv_c: f64,
    pub lower_bound_inv_cp: f64,
    /// (ln c)² / c^p.
    pub log_bound_shape: f64,
    pub fallback_rate: f64,
    /// Conditional pipeline vs geometric collision at distance r.
    pub cross_check: Option<ConditionalCheck>,
}

impl RhoReport {
    /// p1 > p2 with one-sided confidence given by the normal quantile `z`.
    pub fn sensitive_at(&self, z: f64) -> bool {
        let se = (self.p1.std_err().powi(2) + self.p2.std_err().powi(2)).sqrt();
        self.p1.p_hat - self.p2.p_hat > z * se
    }

    pub fn csv_record(&self) -> Vec<String> {
        let s = &self.scheme;
        let f = |v: f64| format!("{v}");
        vec![
            f(self.c),
            f(self.p),
            s.profile.as_str().to_string(),
            f(s.w),
            s.t.to_string(),
            f(s.epsilon),
            s.lattice.num_shifts.to_string(),
            s.lattice.saturated.to_string(),
            f(self.p1.p_hat),
            f(self.p1.ci95.0),
            f(self.p1.ci95.1),
            f(self.p2.p_hat),
            f(self.p2.ci95.0),
            f(self.p2.ci95.1),
            f(self.rho_hat),
            f(self.baseline_inv_c),
            f(self.lower_bound_inv_cp),
            f(self.log_bound_shape),
            f(self.fallback_rate),
        ]
    }
}

fn rho_interval(p1: &CollisionEstimate, p2: &CollisionEstimate) -> (f64, f64) {
    let (p1_lo, p1_hi) = p1.interval(Z_JOINT95);
    let (p2_lo, p2_hi) = p2.interval(Z_JOINT95);
    let lo = if p2_lo <= 0.0 { 0.0 } else { rho_from(p1_hi, p2_lo).max(0.0) };
    let hi = if p1_lo <= 0.0 || p2_hi >= 1.0 { f64::INFINITY } else { rho_from(p1_lo, p2_hi) };
    (lo, hi)
}

/// p1 at distance r and p2 at c·r; the far estimate doubles its trial count
/// until it sees enough collisions or exhausts `budget`.
pub fn estimate_rho_with_budget<R: Rng + ?Sized>(
    scheme: &SchemeParams,
    d: usize,
    trials: u64,
    budget: u64,
    rng: &mut R,
) -> Result<RhoReport> {
    if trials < MIN_COLLISION_TRIALS {
        return Err(Error::invalid(format!("collision estimate needs at least {MIN_COLLISION_TRIALS} trials")));
    }
    let (c, p, r) = (scheme.c, scheme.p, scheme.r);
    let p1 = estimate_collision_seeded(scheme, d, r, trials, rng.random())?;
    let far_seed: u64 = rng.random();
    let (mut done, mut hits, mut falls) = (0u64, 0u64, 0u64);
    let mut next = trials;
    loop {
        let (h, f) = count_collisions(scheme, d, c * r, far_seed, done..next)?;
        hits += h;
        falls += f;
        done = next;
        if hits >= MIN_FAR_COLLISIONS || done >= budget {
            break;
        }
        next = (2 * done).min(budget.max(done));
    }
    let p2 = CollisionEstimate::from_counts(c * r, done, hits, falls);
    let rho_ci = rho_interval(&p1, &p2);
    let upper_bounded_only = p2.collisions == 0;
    let rho_hat = if upper_bounded_only || p1.collisions == 0 {
        rho_ci.1
    } else {
        rho_from(p1.p_hat, p2.p_hat)
    };
    Ok(RhoReport {
        c,
        p,
        scheme: scheme.clone(),
        p1,
        p2,
        rho_hat,
        rho_ci,
        upper_bounded_only,
        baseline_inv_c: 1.0 / c,
        lower_bound_inv_cp: c.powf(-p),
        log_bound_shape: c.ln().powi(2) / c.powf(p),
        fallback_rate: (p1.fallbacks + p2.fallbacks) as f64 / (p1.trials + p2.trials) as f64,
        cross_check: None,
    })
}

pub fn estimate_rho<R: Rng + ?Sized>(scheme: &SchemeParams, d: usize, trials: u64, rng: &mut R) -> Result<RhoReport> {
    estimate_rho_with_budget(scheme, d, trials, RHO_TRIAL_BUDGET, rng)
}

/// Sweep settings shared by every row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Template; `c` is replaced per row.
    pub scheme: SchemeConfig,
    pub d: usize,
    pub trials: u64,
    pub budget: u64,
    /// Lattice trials of the cross-check (0 disables it).
    pub check_trials: u64,
    pub seed: u64,
}

/// One [`RhoReport`] per c, each from its own derived seed.
pub fn rho_sweep(cfg: &SweepConfig, c_list: &[f64]) -> Result<Vec<RhoReport>> {
    if c_list.is_empty() {
        return Err(Error::invalid("c list must not be empty"));
    }
    c_list
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if !(c > 1.0) {
                return Err(Error::invalid(format!("every c must exceed 1, got {c}")));
            }
            let scheme = derive_params(&SchemeConfig { c, ..cfg.scheme.clone() })?;
            let mut rng = seeded(derive_seed(cfg.seed, i as u64));
            let mut report = estimate_rho_with_budget(&scheme, cfg.d, cfg.trials, cfg.budget, &mut rng)?;
            if cfg.check_trials > 0 {
                let geo = cfg.check_trials.max(MIN_GEOMETRIC_TRIALS);
                report.cross_check = Some(conditional_collision(&scheme, cfg.d, scheme.r, cfg.check_trials, geo, &mut rng)?);
            }
            Ok(report)
        })
        .collect()
}

/// Writes `# `-prefixed comment lines, the fixed header, and one row per
/// report.
pub fn write_rho_csv<W: Write>(out: W, reports: &[RhoReport], comments: &[String]) -> Result<()> {
    let mut out = out;
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RHO_CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        w.write_record(r.csv_record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}
