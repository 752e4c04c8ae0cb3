//! ℓ_p norms, distances, ball-volume ratios and the uniform smoothness /
//! convexity residuals of ℓ_p for 1 < p ≤ 2.
//!
//! Vectors are plain `&[f64]` slices; the owning [`LpSpace`] checks their
//! length. Norms use a max-rescaled form so that large lattice coordinates
//! do not overflow when raised to the p-th power.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance for the residual inequalities.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// The ambient metric space (R^dim, ‖·‖_p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpSpace {
    p: f64,
    dim: usize,
}

impl LpSpace {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::invalid(format!("exponent p must lie in (1, 2], got {p}")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(Self { p, dim })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same exponent, different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.p, dim)
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        Ok(norm(v, self.p))
    }

    /// Σ|v_i|^p, i.e. ‖v‖_p^p.
    pub fn norm_pow(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        Ok(pow_sum(v, self.p))
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        Ok(distance(x, y, self.p))
    }

    /// ‖(x+y)/2‖_p^p + ‖(x−y)/2‖_p^p − (‖x‖_p^p + ‖y‖_p^p)/2, nonnegative by
    /// p-uniform smoothness.
    pub fn smoothness_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let p = self.p;
        let (half_sum, half_diff) = midpoints(x, y);
        Ok(pow_sum(&half_sum, p) + pow_sum(&half_diff, p) - 0.5 * (pow_sum(x, p) + pow_sum(y, p)))
    }

    /// (‖x‖_p² + ‖y‖_p²)/2 − ‖(x+y)/2‖_p² − (p−1)‖(x−y)/2‖_p², nonnegative by
    /// 2-uniform convexity.
    pub fn convexity_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let p = self.p;
        let (half_sum, half_diff) = midpoints(x, y);
        let sq = |v: &[f64]| norm(v, p).powi(2);
        Ok(0.5 * (sq(x) + sq(y)) - sq(&half_sum) - (p - 1.0) * sq(&half_diff))
    }

    /// A point on the unit ℓ_p sphere: coordinates drawn with density
    /// ∝ exp(−|u|^p), then normalized (cone measure of the ℓ_p ball).
    pub fn random_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let v = generalized_gaussian(self.dim, self.p, rng);
            let n = norm(&v, self.p);
            if n > 0.0 && n.is_finite() {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    /// A uniform point of the ball B_p(center, radius).
    pub fn uniform_in_ball<R: Rng + ?Sized>(&self, center: &[f64], radius: f64, rng: &mut R) -> Result<Vec<f64>> {
        check_dim(self.dim, center.len())?;
        let dir = self.random_direction(rng);
        let u: f64 = rng.random();
        let scale = radius * u.powf(1.0 / self.dim as f64);
        Ok(center.iter().zip(&dir).map(|(c, d)| c + scale * d).collect())
    }
}

/// Vol(B(·, αw)) / Vol(B(·, w)) in R^t, i.e. α^t.
pub fn ball_volume_ratio(alpha: f64, t: u32) -> f64 {
    debug_assert!(alpha >= 0.0);
    alpha.powi(t as i32)
}

/// A ball B_p(center, radius).
#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::invalid(format!("ball radius must be nonnegative, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, space: &LpSpace, x: &[f64]) -> Result<bool> {
        Ok(space.distance(&self.center, x)? <= self.radius)
    }
}

#[inline]
pub(crate) fn pow_sum(v: &[f64], p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum()
}

pub(crate) fn norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

pub(crate) fn distance(x: &[f64], y: &[f64], p: f64) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm(&diff, p)
}

fn midpoints(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter().zip(y).map(|(a, b)| (0.5 * (a + b), 0.5 * (a - b))).unzip()
}

pub(crate) fn generalized_gaussian<R: Rng + ?Sized>(dim: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(1.0 / p, 1.0).expect("shape 1/p is positive");
    (0..dim)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let mag = g.powf(1.0 / p);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect()
}
