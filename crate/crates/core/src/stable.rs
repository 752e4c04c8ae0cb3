//! Symmetric p-stable random variables with characteristic function
//! exp(−|ξ|^p), and the statistics built on them: truncated moments, the
//! projection threshold T(t, ε), power-tail constants, and the empirical
//! concentration rates of ‖Ax‖_p^p.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{pow_sum, LpSpace};
use crate::rng::{derive_seed, seeded};
use crate::stats::{wilson_interval, Z95};

/// Samples per chunk in seeded parallel estimators. Fixed so that results do
/// not depend on the thread count.
const CHUNK: usize = 1 << 16;

/// Default Monte Carlo budget for the threshold.
pub const DEFAULT_THRESHOLD_SAMPLES: usize = 10_000_000;

/// Minimum sample count for a truncated-moment estimate.
pub const MIN_MOMENT_SAMPLES: usize = 10_000;

/// The standard symmetric p-stable law, scale 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    p: f64,
}

impl StableParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::invalid(format!("stable exponent must lie in (1, 2], got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Distribution<f64> for StableParams {
    /// Chambers–Mallows–Stuck: V uniform on (−π/2, π/2), W standard
    /// exponential,
    /// X = sin(pV)/cos(V)^{1/p} · (cos(V − pV)/W)^{(1−p)/p}.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = self.p;
        let u: f64 = Open01.sample(rng);
        let e: f64 = Open01.sample(rng);
        let v = PI * (u - 0.5);
        let w = -e.ln();
        let cos_v = v.cos();
        (p * v).sin() / cos_v.powf(1.0 / p) * ((v - p * v).cos() / w).powf((1.0 - p) / p)
    }
}

/// One draw; shorthand for `params.sample(rng)`.
pub fn sample_stable<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

/// Which moment of the truncated variable Z_M = min(|X|, M).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentOrder {
    /// E[Z_M^p]
    First,
    /// E[Z_M^{2p}]
    Second,
}

impl MomentOrder {
    fn exponent(self, p: f64) -> f64 {
        match self {
            MomentOrder::First => p,
            MomentOrder::Second => 2.0 * p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

fn check_truncation(level: f64, n_samples: usize) -> Result<()> {
    if !(level >= 1.0) {
        return Err(Error::invalid(format!("truncation level must be at least 1, got {level}")));
    }
    if n_samples < MIN_MOMENT_SAMPLES {
        return Err(Error::invalid(format!(
            "truncated moment needs at least {MIN_MOMENT_SAMPLES} samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of E[min(|X|, M)^{order·p}] from `rng`.
pub fn truncated_moment<R: Rng + ?Sized>(
    params: &StableParams,
    level: f64,
    order: MomentOrder,
    n_samples: usize,
    rng: &mut R,
) -> Result<MomentEstimate> {
    check_truncation(level, n_samples)?;
    let k = order.exponent(params.p);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let z = params.sample(rng).abs().min(level).powf(k);
        sum += z;
        sum_sq += z * z;
    }
    Ok(finish_moment(sum, sum_sq, n_samples))
}

/// Seeded, chunk-parallel variant of [`truncated_moment`]; the result
/// depends only on the arguments.
pub fn truncated_moment_seeded(
    params: &StableParams,
    level: f64,
    order: MomentOrder,
    n_samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    check_truncation(level, n_samples)?;
    let k = order.exponent(params.p);
    let chunks = n_samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seeded(derive_seed(seed, c as u64));
            let len = CHUNK.min(n_samples - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let z = params.sample(&mut rng).abs().min(level).powf(k);
                s += z;
                s2 += z * z;
            }
            (s, s2)
        })
        .collect();
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    Ok(finish_moment(sum, sum_sq, n_samples))
}

fn finish_moment(sum: f64, sum_sq: f64, n: usize) -> MomentEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    MomentEstimate {
        mean,
        std_err: (var / nf).sqrt(),
        samples: n,
    }
}

/// T(t, ε) = t · E[min(|X|, t^ε)^p] / 2, with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub std_err: f64,
    pub p: f64,
    pub t: usize,
    pub epsilon: f64,
    pub sample_count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct CacheKey {
    p_bits: u64,
    t: usize,
    eps_bits: u64,
    n_samples: usize,
    seed: u64,
}

impl CacheKey {
    fn new(p: f64, t: usize, epsilon: f64, n_samples: usize, seed: u64) -> Self {
        Self {
            p_bits: p.to_bits(),
            t,
            eps_bits: epsilon.to_bits(),
            n_samples,
            seed,
        }
    }
}

fn global_cache() -> &'static Mutex<ThresholdCache> {
    static CACHE: OnceLock<Mutex<ThresholdCache>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(ThresholdCache::default()))
}

/// Computes T(t, ε) by Monte Carlo, memoized per process on
/// (p, t, ε, n_samples, seed).
pub fn compute_threshold(t: usize, epsilon: f64, params: &StableParams, n_samples: usize, seed: u64) -> Result<Threshold> {
    if t < 2 {
        return Err(Error::invalid(format!("threshold needs t >= 2, got {t}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let key = CacheKey::new(params.p, t, epsilon, n_samples, seed);
    if let Some(th) = global_cache().lock().unwrap().entries.get(&key) {
        return Ok(*th);
    }
    let level = (t as f64).powf(epsilon);
    let m = truncated_moment_seeded(params, level, MomentOrder::First, n_samples, seed)?;
    let th = Threshold {
        value: t as f64 * m.mean / 2.0,
        std_err: t as f64 * m.std_err / 2.0,
        p: params.p,
        t,
        epsilon,
        sample_count: n_samples,
        seed,
    };
    global_cache().lock().unwrap().entries.insert(key, th);
    Ok(th)
}

/// Copies every memoized threshold into `cache`.
pub fn export_thresholds(cache: &mut ThresholdCache) {
    let g = global_cache().lock().unwrap();
    cache.entries.extend(g.entries.iter().map(|(k, v)| (*k, *v)));
}

/// Seeds the process memo from a loaded cache file.
pub fn preload_thresholds(cache: &ThresholdCache) {
    let mut g = global_cache().lock().unwrap();
    g.entries.extend(cache.entries.iter().map(|(k, v)| (*k, *v)));
}

const CACHE_MAGIC: &str = "lplsh-threshold-cache";
const CACHE_VERSION: u32 = 1;

/// Versioned key-value store of computed thresholds.
///
/// Text format, one record per line after the header:
/// `p=<f64> t=<int> eps=<f64> n_samples=<int> seed=<int> T=<f64> se=<f64>`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ThresholdCache {
    entries: BTreeMap<CacheKey, Threshold>,
}

impl ThresholdCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: f64, t: usize, epsilon: f64, n_samples: usize, seed: u64) -> Option<Threshold> {
        self.entries.get(&CacheKey::new(p, t, epsilon, n_samples, seed)).copied()
    }

    pub fn insert(&mut self, th: Threshold) {
        let key = CacheKey::new(th.p, th.t, th.epsilon, th.sample_count, th.seed);
        self.entries.insert(key, th);
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CACHE_MAGIC} {CACHE_VERSION}\n");
        for th in self.entries.values() {
            writeln!(
                out,
                "p={:?} t={} eps={:?} n_samples={} seed={} T={:?} se={:?}",
                th.p, th.t, th.epsilon, th.sample_count, th.seed, th.value, th.std_err
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty threshold cache".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(CACHE_MAGIC) {
            return Err(Error::Format("not a threshold cache file".into()));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format("missing cache version".into()))?;
        if version != CACHE_VERSION {
            return Err(Error::VersionMismatch {
                found: version as u16,
                expected: CACHE_VERSION as u16,
            });
        }
        let mut cache = ThresholdCache::default();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut fields = BTreeMap::new();
            for kv in line.split_whitespace() {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Format(format!("bad cache field {kv:?}")))?;
                fields.insert(k, v);
            }
            let get = |k: &str| -> Result<&str> {
                fields
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::Format(format!("cache record missing {k}")))
            };
            let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Format(format!("bad {k}"))) };
            let int = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| Error::Format(format!("bad {k}"))) };
            cache.insert(Threshold {
                p: num("p")?,
                t: int("t")? as usize,
                epsilon: num("eps")?,
                sample_count: int("n_samples")? as usize,
                seed: int("seed")?,
                value: num("T")?,
                std_err: num("se")?,
            });
        }
        Ok(cache)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Constants of the density sandwich a/x^{p+1} − b/x³ ≤ φ_p(x) ≤
/// 2^{(p+1)/2}a/x^{p+1} + b/x³, estimated from samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TailConstants {
    pub a_hat: f64,
    pub b_hat: f64,
    pub fit_range: (f64, f64),
    pub status: TailFitStatus,
    /// (M, P̂r[X > M], p·M^p·P̂r[X > M], exceedance count) on the fit grid.
    pub grid: Vec<TailPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPoint {
    pub level: f64,
    pub prob: f64,
    pub scaled: f64,
    pub count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailFitStatus {
    Ok,
    /// Too few exceedances somewhere in the range; constants are unreliable.
    InsufficientTail,
    /// The tail decays faster than any power (e.g. the Gaussian case p = 2).
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Integrated density sandwich at M:
/// lower = a/(pM^p) − b/(2M²), upper = 2^{(p+1)/2}a/(pM^p) + b/(2M²),
/// both clamped to [0, 1].
pub fn tail_probability_bounds(level: f64, params: &StableParams, consts: &TailConstants) -> Result<TailBounds> {
    if !(level >= 1.0) {
        return Err(Error::invalid(format!("tail bounds need M >= 1, got {level}")));
    }
    let p = params.p;
    let lead = consts.a_hat / (p * level.powf(p));
    let sub = consts.b_hat / (2.0 * level * level);
    Ok(TailBounds {
        lower: (lead - sub).clamp(0.0, 1.0),
        upper: (2f64.powf((p + 1.0) / 2.0) * lead + sub).clamp(0.0, 1.0),
    })
}

const TAIL_GRID_POINTS: usize = 16;
const MIN_TAIL_COUNT: u64 = 30;

/// Fits a and b so that p·M^p·P̂r[X > M] ≈ a over `fit_range` (geometric
/// mean, i.e. least squares on the log scale), with b the smallest
/// nonnegative value that keeps every grid point inside the bounds.
pub fn fit_tail_constant<R: Rng + ?Sized>(
    params: &StableParams,
    n_samples: usize,
    fit_range: (f64, f64),
    rng: &mut R,
) -> Result<TailConstants> {
    let (lo, hi) = fit_range;
    if !(lo >= 1.0 && hi > lo) {
        return Err(Error::invalid(format!("bad tail fit range [{lo}, {hi}]")));
    }
    let p = params.p;
    // |X| exceedances; Pr[X > M] = Pr[|X| > M] / 2 by symmetry.
    let mut tail: Vec<f64> = (0..n_samples)
        .map(|_| params.sample(rng).abs())
        .filter(|v| *v > lo)
        .collect();
    tail.sort_by(f64::total_cmp);
    let grid: Vec<TailPoint> = (0..TAIL_GRID_POINTS)
        .map(|i| {
            let frac = i as f64 / (TAIL_GRID_POINTS - 1) as f64;
            let level = lo * (hi / lo).powf(frac);
            let count = (tail.len() - tail.partition_point(|v| *v <= level)) as u64;
            let prob = count as f64 / (2.0 * n_samples as f64);
            TailPoint {
                level,
                prob,
                scaled: p * level.powf(p) * prob,
                count,
            }
        })
        .collect();

    let usable: Vec<&TailPoint> = grid.iter().filter(|g| g.count >= MIN_TAIL_COUNT).collect();
    let mut status = if usable.len() == grid.len() {
        TailFitStatus::Ok
    } else {
        TailFitStatus::InsufficientTail
    };
    if usable.len() < 2 {
        if grid[0].count >= MIN_TAIL_COUNT {
            // Plenty of mass at the start of the range but none further out.
            status = TailFitStatus::Degenerate;
        }
        return Ok(TailConstants {
            a_hat: usable.first().map_or(f64::MIN_POSITIVE, |g| g.scaled.max(f64::MIN_POSITIVE)),
            b_hat: 0.0,
            fit_range,
            status,
            grid,
        });
    }

    let xs: Vec<f64> = usable.iter().map(|g| g.level.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|g| g.scaled.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if slope < -1.0 {
        status = TailFitStatus::Degenerate;
    }

    let a_hat = my.exp();
    let widen = 2f64.powf((p + 1.0) / 2.0);
    let b_hat = usable
        .iter()
        .map(|g| {
            let lead = a_hat / (p * g.level.powf(p));
            let below = lead - g.prob;
            let above = g.prob - widen * lead;
            2.0 * g.level * g.level * below.max(above)
        })
        .fold(0.0f64, f64::max)
        * (1.0 + 1e-9);

    Ok(TailConstants {
        a_hat,
        b_hat,
        fit_range,
        status,
        grid,
    })
}

/// Largest relative deviation of p·M^p·P̂r[X > M] from its mean on the grid.
pub fn tail_flatness(consts: &TailConstants) -> f64 {
    let vals: Vec<f64> = consts.grid.iter().map(|g| g.scaled).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    vals.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max)
}

/// Empirical frequencies of the two concentration events for ‖Ax‖_p^p.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub t: usize,
    pub epsilon: f64,
    pub trials: u64,
    /// Threshold for the low event, T‖x‖_p^p.
    pub low_cut: f64,
    /// Threshold for the high event, 2^{(4+p)/2} ε^{-1} T ‖x‖_p^p.
    pub high_cut: f64,
    pub rate_low: f64,
    pub rate_high: f64,
    pub ci_low: (f64, f64),
    pub ci_high: (f64, f64),
}

pub const MIN_CONCENTRATION_TRIALS: u64 = 200;

/// Draws `trials` fresh t×d matrices A with i.i.d. stable entries and counts
/// how often ‖Ax‖_p^p < T‖x‖_p^p and ‖Ax‖_p^p > 2^{(4+p)/2}ε^{-1}T‖x‖_p^p.
pub fn validate_concentration<R: Rng + ?Sized>(
    x: &[f64],
    threshold: &Threshold,
    params: &StableParams,
    trials: u64,
    rng: &mut R,
) -> Result<ConcentrationReport> {
    if trials < MIN_CONCENTRATION_TRIALS {
        return Err(Error::invalid(format!(
            "concentration check needs at least {MIN_CONCENTRATION_TRIALS} trials"
        )));
    }
    let p = params.p;
    let space = LpSpace::new(p, x.len().max(1))?;
    let x_pow = space.norm_pow(x)?;
    if x_pow == 0.0 {
        return Err(Error::invalid("concentration test vector must be nonzero"));
    }
    let t = threshold.t;
    let low_cut = threshold.value * x_pow;
    let high_cut = 2f64.powf((4.0 + p) / 2.0) / threshold.epsilon * threshold.value * x_pow;
    let (mut low, mut high) = (0u64, 0u64);
    let mut row = vec![0.0; x.len()];
    let mut image = vec![0.0; t];
    for _ in 0..trials {
        for slot in image.iter_mut() {
            row.iter_mut().for_each(|a| *a = params.sample(rng));
            *slot = row.iter().zip(x).map(|(a, v)| a * v).sum();
        }
        let s = pow_sum(&image, p);
        if s < low_cut {
            low += 1;
        }
        if s > high_cut {
            high += 1;
        }
    }
    let n = trials as f64;
    Ok(ConcentrationReport {
        t,
        epsilon: threshold.epsilon,
        trials,
        low_cut,
        high_cut,
        rate_low: low as f64 / n,
        rate_high: high as f64 / n,
        ci_low: wilson_interval(low, trials, Z95),
        ci_high: wilson_interval(high, trials, Z95),
    })
}
