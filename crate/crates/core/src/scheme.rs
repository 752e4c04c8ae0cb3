//! The full hash family: p-stable projection to R^t scaled by T^{−1/p},
//! followed by the first-covering-ball lookup in a sequence of shifted ball
//! lattices.
//!
//! All Θ(·) constants of the parameter choice are exposed as multiplicative
//! knobs, and every derived value can be overridden for desk-scale runs.

use rand::distr::Distribution;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::geometry::LpSpace;
use crate::lattice::{compute_num_shifts, make_lattices, HashValue, LatticeParams, ShiftedLatticeSet};
use crate::lattice::{DEFAULT_SHIFT_CAP, DEFAULT_SPACING};
use crate::rng::{derive_seed, seeded, tags};
use crate::stable::{compute_threshold, StableParams, DEFAULT_THRESHOLD_SAMPLES};

/// Parameter profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// w = κ_w·c·ln c, t = ⌈κ_t·w^p⌉, ε = κ_ε·ln ln t / ln t.
    Main,
    /// w = κ_w·c, t = ⌈κ_t·w^p⌉, ε = κ_ε / ln t.
    Remark,
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Main => "main",
            Profile::Remark => "remark",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "main" => Ok(Profile::Main),
            "remark" => Ok(Profile::Remark),
            other => Err(Error::invalid(format!("unknown profile {other:?} (main|remark)"))),
        }
    }
}

/// Multipliers for the asymptotic parameter choices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knobs {
    pub kappa_w: f64,
    pub kappa_t: f64,
    pub kappa_eps: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            kappa_w: 1.0,
            kappa_t: 1.0,
            kappa_eps: 1.0,
        }
    }
}

/// Direct replacements for derived values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub w: Option<f64>,
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub failure_prob: Option<f64>,
    pub num_shifts: Option<u64>,
    pub threshold: Option<f64>,
}

impl Overrides {
    /// Names of the fields that are set.
    pub fn applied(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.w.is_some() {
            out.push("w");
        }
        if self.t.is_some() {
            out.push("t");
        }
        if self.epsilon.is_some() {
            out.push("eps");
        }
        if self.failure_prob.is_some() {
            out.push("delta");
        }
        if self.num_shifts.is_some() {
            out.push("U");
        }
        if self.threshold.is_some() {
            out.push("T");
        }
        out
    }
}

/// Everything `derive_params` needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub c: f64,
    pub p: f64,
    pub profile: Profile,
    pub knobs: Knobs,
    pub overrides: Overrides,
    pub spacing: f64,
    pub shift_cap: u64,
    pub threshold_samples: usize,
    pub threshold_seed: u64,
}

impl SchemeConfig {
    pub fn new(c: f64, p: f64) -> Self {
        Self {
            c,
            p,
            profile: Profile::Main,
            knobs: Knobs::default(),
            overrides: Overrides::default(),
            spacing: DEFAULT_SPACING,
            shift_cap: DEFAULT_SHIFT_CAP,
            threshold_samples: DEFAULT_THRESHOLD_SAMPLES,
            threshold_seed: 0,
        }
    }
}

/// Fully derived constants of one hash family.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeParams {
    pub c: f64,
    pub p: f64,
    /// Inner radius; 1 after scaling the data.
    pub r: f64,
    pub w: f64,
    pub t: usize,
    pub epsilon: f64,
    pub failure_prob: f64,
    /// Projection threshold T; the matrix is scaled by T^{−1/p}.
    pub threshold: f64,
    pub lattice: LatticeParams,
    pub requested_profile: Profile,
    /// Profile actually used (Main falls back to Remark for c < e).
    pub profile: Profile,
    pub knobs: Knobs,
    pub overrides: Overrides,
    pub threshold_samples: usize,
    pub threshold_seed: u64,
}

impl SchemeParams {
    /// The reduced space (R^t, ‖·‖_p).
    pub fn reduced_space(&self) -> LpSpace {
        LpSpace::new(self.p, self.t).expect("validated at derivation")
    }

    /// `key=value` lines with every derived value.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("c".into(), format!("{:?}", self.c)),
            ("p".into(), format!("{:?}", self.p)),
            ("r".into(), format!("{:?}", self.r)),
            ("profile".into(), self.profile.as_str().into()),
            ("requested_profile".into(), self.requested_profile.as_str().into()),
            ("kappa_w".into(), format!("{:?}", self.knobs.kappa_w)),
            ("kappa_t".into(), format!("{:?}", self.knobs.kappa_t)),
            ("kappa_eps".into(), format!("{:?}", self.knobs.kappa_eps)),
            ("w".into(), format!("{:?}", self.w)),
            ("t".into(), self.t.to_string()),
            ("eps".into(), format!("{:?}", self.epsilon)),
            ("delta".into(), format!("{:?}", self.failure_prob)),
            ("T".into(), format!("{:?}", self.threshold)),
            ("U".into(), self.lattice.num_shifts.to_string()),
            ("saturated".into(), self.lattice.saturated.to_string()),
            ("spacing".into(), format!("{:?}", self.lattice.spacing)),
            ("threshold_samples".into(), self.threshold_samples.to_string()),
            ("threshold_seed".into(), self.threshold_seed.to_string()),
        ];
        v.push(("overrides".into(), self.overrides.applied().join("+")));
        v
    }
}

/// Derives w, t, ε, δ, U and T from (c, p), knobs and overrides.
pub fn derive_params(cfg: &SchemeConfig) -> Result<SchemeParams> {
    let (c, p) = (cfg.c, cfg.p);
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::invalid(format!("approximation factor must exceed 1, got {c}")));
    }
    let stable = StableParams::new(p)?;
    let k = cfg.knobs;
    if !(k.kappa_w > 0.0 && k.kappa_t > 0.0 && k.kappa_eps > 0.0) {
        return Err(Error::invalid("knobs must be positive"));
    }
    let profile = match cfg.profile {
        Profile::Main if c < std::f64::consts::E => Profile::Remark,
        other => other,
    };
    let ov = cfg.overrides;

    let w = ov.w.unwrap_or_else(|| match profile {
        Profile::Main => k.kappa_w * c * c.ln(),
        Profile::Remark => k.kappa_w * c,
    });
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("ball radius must be positive, got {w}")));
    }
    let t = match ov.t {
        Some(t) => t,
        None => (k.kappa_t * w.powf(p)).ceil() as usize,
    };
    if t < 2 {
        return Err(Error::invalid(format!(
            "derived dimension t = {t} < 2; raise kappa_t or override t"
        )));
    }
    let tf = t as f64;
    let epsilon = ov.epsilon.unwrap_or_else(|| match profile {
        Profile::Main => k.kappa_eps * tf.ln().ln() / tf.ln(),
        Profile::Remark => k.kappa_eps / tf.ln(),
    });
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "derived epsilon = {epsilon} outside (0, 1); adjust kappa_eps or override eps"
        )));
    }
    let failure_prob = ov.failure_prob.unwrap_or_else(|| (-tf).exp());
    let shifts = compute_num_shifts(t, p, cfg.spacing, failure_prob, cfg.shift_cap)?;
    let (num_shifts, saturated) = match ov.num_shifts {
        Some(u) => (u, shifts.count > u),
        None => (shifts.count, shifts.saturated),
    };
    let lattice = LatticeParams {
        w,
        spacing: cfg.spacing,
        t,
        failure_prob,
        num_shifts,
        saturated,
    };
    lattice.validate()?;
    let threshold = match ov.threshold {
        Some(th) => th,
        None => compute_threshold(t, epsilon, &stable, cfg.threshold_samples, cfg.threshold_seed)?.value,
    };
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
    }
    Ok(SchemeParams {
        c,
        p,
        r: 1.0,
        w,
        t,
        epsilon,
        failure_prob,
        threshold,
        lattice,
        requested_profile: cfg.profile,
        profile,
        knobs: k,
        overrides: ov,
        threshold_samples: cfg.threshold_samples,
        threshold_seed: cfg.threshold_seed,
    })
}

/// Divides every coordinate by r, turning the (r, cr) regime into (1, c).
pub fn scale_to_unit(points: &Dataset, r: f64) -> Result<Dataset> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("scale radius must be positive, got {r}")));
    }
    Ok(points.scaled(1.0 / r))
}

/// One sampled hash function h: x ↦ first covering ball of A′x.
#[derive(Clone, Debug, PartialEq)]
pub struct HashFunction {
    d: usize,
    space: LpSpace,
    /// A′ = T^{−1/p}A, t×d row-major.
    projection: Vec<f64>,
    lattices: ShiftedLatticeSet,
    seed: u64,
}

/// Samples A with i.i.d. p-stable entries and the lattice shifts, each from
/// its own sub-seed of `seed`.
pub fn sample_hash(scheme: &SchemeParams, d: usize, seed: u64) -> Result<HashFunction> {
    if d == 0 {
        return Err(Error::invalid("input dimension must be at least 1"));
    }
    let stable = StableParams::new(scheme.p)?;
    let scale = scheme.threshold.powf(-1.0 / scheme.p);
    let mut rng = seeded(derive_seed(seed, tags::PROJECTION));
    let projection = (0..scheme.t * d).map(|_| scale * stable.sample(&mut rng)).collect();
    let lattices = make_lattices(scheme.lattice, derive_seed(seed, tags::SHIFTS))?;
    Ok(HashFunction {
        d,
        space: scheme.reduced_space(),
        projection,
        lattices,
        seed,
    })
}

impl HashFunction {
    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn reduced_dim(&self) -> usize {
        self.space.dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lattices(&self) -> &ShiftedLatticeSet {
        &self.lattices
    }

    /// Row-major t×d matrix A′.
    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    /// The same projection with a different lattice sequence.
    pub fn with_lattices(&self, lattices: ShiftedLatticeSet) -> Result<Self> {
        check_dim(self.space.dim(), lattices.params().t)?;
        Ok(Self {
            lattices,
            ..self.clone()
        })
    }

    /// x′ = A′x.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        let mut out = vec![0.0; self.space.dim()];
        self.project_into(x, &mut out);
        Ok(out)
    }

    #[inline]
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for (row, slot) in self.projection.chunks_exact(self.d).zip(out.iter_mut()) {
            *slot = row.iter().zip(x).map(|(a, v)| a * v).sum();
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<HashValue> {
        Ok(self.eval_traced(x)?.0)
    }

    /// Hash value plus the number of lattices probed.
    pub fn eval_traced(&self, x: &[f64]) -> Result<(HashValue, u64)> {
        check_dim(self.d, x.len())?;
        let mut buf = vec![0.0; self.space.dim()];
        self.project_into(x, &mut buf);
        Ok(self.lattices.hash_point_traced(&buf, self.space.p()))
    }
}

/// h(x) for a sampled hash function.
pub fn eval_hash(h: &HashFunction, x: &[f64]) -> Result<HashValue> {
    h.eval(x)
}

/// Cost of one hash evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    /// Multiply-adds of the dense projection, t·d.
    pub projection_flops: u64,
    /// Worst-case lattice probes, U.
    pub lattice_probes: u64,
    /// Mean probes over a measured workload, if any.
    pub measured_probes: Option<f64>,
    /// Fraction of measured evaluations that fell back.
    pub measured_fallback: Option<f64>,
}

pub fn evaluation_cost(scheme: &SchemeParams, d: usize) -> CostReport {
    CostReport {
        projection_flops: (scheme.t * d) as u64,
        lattice_probes: scheme.lattice.num_shifts,
        measured_probes: None,
        measured_fallback: None,
    }
}

/// Cost report with probe counts measured on `samples` evaluations of
/// fresh hash functions at random Gaussian points.
pub fn measure_evaluation_cost<R: Rng + ?Sized>(
    scheme: &SchemeParams,
    d: usize,
    samples: usize,
    rng: &mut R,
) -> Result<CostReport> {
    let mut report = evaluation_cost(scheme, d);
    if samples == 0 {
        return Ok(report);
    }
    let normal = rand_distr::StandardNormal;
    let (mut probes, mut fallbacks) = (0u64, 0u64);
    for _ in 0..samples {
        let h = sample_hash(scheme, d, rng.random())?;
        let x: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
        let (v, n) = h.eval_traced(&x)?;
        probes += n;
        fallbacks += v.is_fallback() as u64;
    }
    report.measured_probes = Some(probes as f64 / samples as f64);
    report.measured_fallback = Some(fallbacks as f64 / samples as f64);
    Ok(report)
}
