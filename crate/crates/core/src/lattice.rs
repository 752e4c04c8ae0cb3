//! Shifted lattices of ℓ_p balls in R^t.
//!
//! Lattice u is the set of balls of radius w centred at s_u + Δw·Z^t. With
//! Δ > 2 the balls of one lattice are disjoint, so a point lies in at most one
//! ball of each lattice and that ball's centre is the coordinatewise-nearest
//! lattice point. A point hashes to the first lattice that covers it.
//!
//! Shifts are not stored: coordinate i of shift u is drawn at position
//! (u−1)·t + i of a counter-based stream keyed by the lattice seed, so
//! lookups can touch shift 10^6 without materializing the others.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::geometry::LpSpace;
use crate::rng::{splitmix64, uniform_at};

/// Default cap on the number of shifted lattices.
pub const DEFAULT_SHIFT_CAP: u64 = 1_000_000;
/// Spacing multiplier Δ.
pub const DEFAULT_SPACING: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NumShifts {
    pub count: u64,
    /// The covering formula asked for more than the cap.
    pub saturated: bool,
}

/// U_t = ⌈Δ^t · t^{t/p+1} · ln(Δt/δ)⌉, capped at `cap`.
pub fn compute_num_shifts(t: usize, p: f64, spacing: f64, failure_prob: f64, cap: u64) -> Result<NumShifts> {
    if t == 0 {
        return Err(Error::invalid("lattice dimension must be at least 1"));
    }
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(Error::invalid(format!("failure probability must lie in (0, 1), got {failure_prob}")));
    }
    if cap == 0 {
        return Err(Error::invalid("shift cap must be positive"));
    }
    let tf = t as f64;
    let log_factor = (spacing * tf / failure_prob).ln();
    let log_u = tf * spacing.ln() + (tf / p + 1.0) * tf.ln() + log_factor.ln();
    if log_u > (cap as f64).ln() + 1e-9 {
        return Ok(NumShifts {
            count: cap,
            saturated: true,
        });
    }
    let raw = spacing.powf(tf) * tf.powf(tf / p + 1.0) * log_factor;
    let count = (raw.ceil() as u64).max(1);
    Ok(if count > cap {
        NumShifts {
            count: cap,
            saturated: true,
        }
    } else {
        NumShifts {
            count,
            saturated: false,
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeParams {
    /// Ball radius w.
    pub w: f64,
    /// Spacing multiplier Δ; centres of one lattice are Δw apart.
    pub spacing: f64,
    pub t: usize,
    /// Coverage failure probability δ the shift count was sized for.
    pub failure_prob: f64,
    pub num_shifts: u64,
    pub saturated: bool,
}

impl LatticeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {}", self.w)));
        }
        if !(self.spacing >= 3.0) {
            return Err(Error::invalid(format!("lattice spacing must be at least 3, got {}", self.spacing)));
        }
        if self.t == 0 {
            return Err(Error::invalid("lattice dimension must be at least 1"));
        }
        if self.num_shifts == 0 {
            return Err(Error::invalid("need at least one shifted lattice"));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(Error::invalid("failure probability must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Side of the fundamental cube, Δw.
    pub fn cell(&self) -> f64 {
        self.spacing * self.w
    }
}

/// Hash of a point in R^t: the first covering lattice `u` (1-based) and the
/// integer coordinates of the ball centre, or the fallback (0, 0⃗).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HashValue {
    pub u: u64,
    pub coords: Vec<i64>,
}

impl HashValue {
    pub fn fallback(t: usize) -> Self {
        Self { u: 0, coords: vec![0; t] }
    }

    pub fn is_fallback(&self) -> bool {
        self.u == 0
    }
}

/// U random shifts of the lattice Δw·Z^t, reproducible from `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedLatticeSet {
    params: LatticeParams,
    seed: u64,
    source: ShiftSource,
    active: u64,
}

#[derive(Clone, Debug, PartialEq)]
enum ShiftSource {
    Stream { key: u64 },
    /// Row-major U×t table, for hand-built examples.
    Explicit(Vec<f64>),
}

/// Shifts s_u, u = 1..=U, i.i.d. uniform on [0, Δw]^t.
pub fn make_lattices(params: LatticeParams, seed: u64) -> Result<ShiftedLatticeSet> {
    params.validate()?;
    Ok(ShiftedLatticeSet {
        params,
        seed,
        source: ShiftSource::Stream {
            key: splitmix64(seed ^ 0x5348_4946_5453),
        },
        active: params.num_shifts,
    })
}

impl ShiftedLatticeSet {
    /// Lattices with the given shifts (row-major, one row of t per lattice).
    /// `params.num_shifts` is taken from the table.
    pub fn from_shifts(mut params: LatticeParams, shifts: Vec<f64>) -> Result<Self> {
        if params.t == 0 || shifts.len() % params.t != 0 {
            return Err(Error::invalid("shift table length must be a multiple of t"));
        }
        params.num_shifts = (shifts.len() / params.t) as u64;
        params.validate()?;
        let cell = params.cell();
        if shifts.iter().any(|s| !(0.0..=cell).contains(s)) {
            return Err(Error::invalid("shift coordinates must lie in [0, Δw]"));
        }
        Ok(Self {
            params,
            seed: 0,
            source: ShiftSource::Explicit(shifts),
            active: params.num_shifts,
        })
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of lattices consulted by lookups.
    pub fn len(&self) -> u64 {
        self.active
    }

    pub fn is_empty(&self) -> bool {
        self.active == 0
    }

    /// The same shift sequence restricted to its first `count` lattices.
    pub fn prefix(&self, count: u64) -> Self {
        Self {
            active: count.min(self.params.num_shifts),
            ..self.clone()
        }
    }

    /// Coordinate `i` of shift `u` (1-based).
    #[inline]
    pub fn shift_coord(&self, u: u64, i: usize) -> f64 {
        let t = self.params.t as u64;
        match &self.source {
            ShiftSource::Stream { key } => uniform_at(*key, (u - 1) * t + i as u64) * self.params.cell(),
            ShiftSource::Explicit(table) => table[((u - 1) * t) as usize + i],
        }
    }

    pub fn shift(&self, u: u64) -> Vec<f64> {
        (0..self.params.t).map(|i| self.shift_coord(u, i)).collect()
    }

    fn check(&self, x: &[f64], space: &LpSpace) -> Result<()> {
        check_dim(self.params.t, space.dim())?;
        check_dim(self.params.t, x.len())
    }

    /// Centre coordinates of the ball of lattice `u` containing `x`, if any.
    pub fn locate(&self, x: &[f64], u: u64, space: &LpSpace) -> Result<Option<Vec<i64>>> {
        self.check(x, space)?;
        if u == 0 || u > self.active {
            return Err(Error::invalid(format!("lattice index {u} outside 1..={}", self.active)));
        }
        let mut coords = vec![0; self.params.t];
        Ok(self.locate_into(x, u, space.p(), &mut coords).then_some(coords))
    }

    /// Every ball of lattice `u` containing `x`, found by checking the 3^t
    /// centres around the nearest one. Independent of [`locate`](Self::locate).
    pub fn containing_balls(&self, x: &[f64], u: u64, space: &LpSpace) -> Result<Vec<Vec<i64>>> {
        self.check(x, space)?;
        let t = self.params.t;
        if t > 12 {
            return Err(Error::invalid("neighbourhood scan is limited to t <= 12"));
        }
        let cell = self.params.cell();
        let s = self.shift(u);
        let base: Vec<i64> = (0..t).map(|i| ((x[i] - s[i]) / cell).floor() as i64).collect();
        let mut hits = Vec::new();
        let mut centre = vec![0.0; t];
        for code in 0..3usize.pow(t as u32) {
            let mut c = code;
            let a: Vec<i64> = base
                .iter()
                .map(|b| {
                    let off = (c % 3) as i64 - 1;
                    c /= 3;
                    b + off
                })
                .collect();
            for i in 0..t {
                centre[i] = s[i] + cell * a[i] as f64;
            }
            if space.distance(x, &centre)? <= self.params.w {
                hits.push(a);
            }
        }
        Ok(hits)
    }

    /// Writes a = round_half_even((x − s_u)/(Δw)) into `coords` and reports
    /// whether ‖x − (s_u + Δw·a)‖_p ≤ w. Bails out as soon as the partial
    /// p-th power sum exceeds w^p.
    #[inline]
    fn locate_into(&self, x: &[f64], u: u64, p: f64, coords: &mut [i64]) -> bool {
        let cell = self.params.cell();
        let w = self.params.w;
        let limit = w.powf(p);
        let mut acc = 0.0;
        for (i, (xi, slot)) in x.iter().zip(coords.iter_mut()).enumerate() {
            let s = self.shift_coord(u, i);
            let a = ((xi - s) / cell).round_ties_even();
            *slot = a as i64;
            let gap = (xi - (s + cell * a)).abs();
            if gap > w {
                return false;
            }
            acc += gap.powf(p);
            if acc > limit {
                return false;
            }
        }
        true
    }

    /// Smallest u whose lattice covers `x`, with its centre coordinates.
    pub fn hash_point(&self, x: &[f64], space: &LpSpace) -> Result<HashValue> {
        self.check(x, space)?;
        Ok(self.hash_point_traced(x, space.p()).0)
    }

    /// Unchecked lookup returning the hash and the number of lattices probed.
    pub(crate) fn hash_point_traced(&self, x: &[f64], p: f64) -> (HashValue, u64) {
        let mut coords = vec![0; self.params.t];
        for u in 1..=self.active {
            if self.locate_into(x, u, p, &mut coords) {
                return (HashValue { u, coords }, u);
            }
        }
        (HashValue::fallback(self.params.t), self.active)
    }

    /// Fraction of uniform points of the fundamental cube [0, Δw]^t that
    /// receive a non-fallback hash. Covering the cube covers R^t.
    pub fn covering_fraction<R: Rng + ?Sized>(&self, space: &LpSpace, trials: u64, rng: &mut R) -> Result<f64> {
        if trials < 1000 {
            return Err(Error::invalid("covering estimate needs at least 1000 trials"));
        }
        check_dim(self.params.t, space.dim())?;
        if self.active == 0 {
            return Ok(0.0);
        }
        let cell = self.params.cell();
        let mut x = vec![0.0; self.params.t];
        let mut covered = 0u64;
        for _ in 0..trials {
            x.iter_mut().for_each(|v| *v = rng.random::<f64>() * cell);
            if !self.hash_point_traced(&x, space.p()).0.is_fallback() {
                covered += 1;
            }
        }
        Ok(covered as f64 / trials as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::binomial_sigma;

    fn params(t: usize, w: f64, u: u64) -> LatticeParams {
        LatticeParams {
            w,
            spacing: 4.0,
            t,
            failure_prob: 0.05,
            num_shifts: u,
            saturated: false,
        }
    }

    #[test]
    fn num_shifts_examples() {
        let n = compute_num_shifts(1, 1.5, 4.0, 0.04, DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(n, NumShifts { count: 19, saturated: false });
        let n = compute_num_shifts(2, 2.0, 4.0, 0.08, DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(n, NumShifts { count: 295, saturated: false });
    }

    #[test]
    fn num_shifts_near_one_failure_prob_stays_positive() {
        let n = compute_num_shifts(1, 1.5, 4.0, 0.999_999, DEFAULT_SHIFT_CAP).unwrap();
        // 4 · ln(4/δ) → 4 ln 4 ≈ 5.545
        assert_eq!(n.count, 6);
    }

    #[test]
    fn num_shifts_saturates() {
        let n = compute_num_shifts(20, 1.5, 4.0, 0.01, DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(n, NumShifts { count: DEFAULT_SHIFT_CAP, saturated: true });
        let n = compute_num_shifts(2, 1.5, 4.0, 0.05, 100).unwrap();
        assert!(n.saturated && n.count == 100);
        assert!(compute_num_shifts(2, 1.5, 4.0, 0.0, 100).is_err());
        assert!(compute_num_shifts(0, 1.5, 4.0, 0.5, 100).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(params(2, 1.0, 10).validate().is_ok());
        assert!(LatticeParams { spacing: 2.5, ..params(2, 1.0, 10) }.validate().is_err());
        assert!(params(2, 0.0, 10).validate().is_err());
        assert!(params(2, 1.0, 0).validate().is_err());
    }

    #[test]
    fn shifts_are_in_range_and_reproducible() {
        let a = make_lattices(params(3, 1.5, 10_000), 99).unwrap();
        let b = make_lattices(params(3, 1.5, 10_000), 99).unwrap();
        let c = make_lattices(params(3, 1.5, 10_000), 100).unwrap();
        assert_eq!(a.shift(17), b.shift(17));
        assert_ne!(a.shift(17), c.shift(17));
        let mut sum = 0.0;
        for u in 1..=10_000 {
            for v in a.shift(u) {
                assert!((0.0..=6.0).contains(&v));
                sum += v;
            }
        }
        let n = 30_000.0;
        let mean = sum / n;
        // uniform on [0, 6]: sd 6/sqrt(12), sd of mean ≈ 0.01
        let se = 6.0 / 12f64.sqrt() / f64::sqrt(n);
        assert!((mean - 3.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn locate_examples() {
        let space = LpSpace::new(1.5, 1).unwrap();
        let set = ShiftedLatticeSet::from_shifts(params(1, 1.0, 1), vec![0.5]).unwrap();
        assert_eq!(set.locate(&[0.5], 1, &space).unwrap(), Some(vec![0]));
        assert_eq!(set.locate(&[0.8], 1, &space).unwrap(), Some(vec![0]));
        assert_eq!(set.locate(&[2.4], 1, &space).unwrap(), None);
        assert_eq!(set.locate(&[4.6], 1, &space).unwrap(), Some(vec![1]));
        assert_eq!(set.locate(&[-3.2], 1, &space).unwrap(), Some(vec![-1]));

        assert!(set.locate(&[0.5], 0, &space).is_err());
        assert!(set.locate(&[0.5], 2, &space).is_err());
        let plane = LpSpace::new(1.5, 2).unwrap();
        assert!(set.locate(&[0.5, 0.5], 1, &plane).is_err());
    }

    #[test]
    fn seeded_shift_centre_is_located() {
        let space = LpSpace::new(1.5, 2).unwrap();
        let set = make_lattices(params(2, 1.0, 3), 5).unwrap();
        for u in 1..=3 {
            let s = set.shift(u);
            assert_eq!(set.locate(&s, u, &space).unwrap(), Some(vec![0, 0]));
        }
    }

    #[test]
    fn explicit_shifts_are_validated() {
        assert!(ShiftedLatticeSet::from_shifts(params(2, 1.0, 1), vec![0.5]).is_err());
        assert!(ShiftedLatticeSet::from_shifts(params(1, 1.0, 1), vec![4.5]).is_err());
        assert!(ShiftedLatticeSet::from_shifts(params(1, 1.0, 1), vec![]).is_err());
    }

    #[test]
    fn round_half_even_on_ties() {
        let space = LpSpace::new(2.0, 1).unwrap();
        // x − s = 2 = cell/2 exactly: tie between a = 0 and a = 1; both
        // candidate centres are 2 away, outside radius 1.
        let set = ShiftedLatticeSet::from_shifts(params(1, 1.0, 1), vec![0.0]).unwrap();
        assert_eq!(set.locate(&[2.0], 1, &space).unwrap(), None);
        // (x − s)/cell = 2.5 rounds to 2, not 3
        let wide = ShiftedLatticeSet::from_shifts(
            LatticeParams { spacing: 4.0, ..params(1, 1.0, 1) },
            vec![0.0],
        )
        .unwrap();
        let mut coords = [0i64];
        assert!(!wide.locate_into(&[10.0], 1, 2.0, &mut coords));
        assert_eq!(coords, [2]);
        assert!(!wide.locate_into(&[14.0], 1, 2.0, &mut coords));
        assert_eq!(coords, [4]);
    }

    #[test]
    fn hash_point_prefers_smallest_u() {
        let space = LpSpace::new(1.5, 2).unwrap();
        let set = make_lattices(params(2, 1.0, 50), 7).unwrap();
        let centre = set.shift(1);
        let h = set.hash_point(&centre, &space).unwrap();
        assert_eq!(h.u, 1);
        assert_eq!(h.coords, vec![0, 0]);
        assert_eq!(h, set.hash_point(&centre, &space).unwrap());
    }

    #[test]
    fn empty_prefix_covers_nothing_and_falls_back() {
        let space = LpSpace::new(1.5, 2).unwrap();
        let set = make_lattices(params(2, 1.0, 50), 7).unwrap().prefix(0);
        let mut rng = seeded(1);
        assert_eq!(set.covering_fraction(&space, 1000, &mut rng).unwrap(), 0.0);
        assert!(set.hash_point(&[0.3, 0.2], &space).unwrap().is_fallback());
    }

    #[test]
    fn single_shift_one_dimension_covers_half() {
        let space = LpSpace::new(1.5, 1).unwrap();
        let set = make_lattices(params(1, 1.0, 1), 3).unwrap();
        let mut rng = seeded(2);
        let n = 20_000;
        let f = set.covering_fraction(&space, n, &mut rng).unwrap();
        assert!((f - 0.5).abs() < 3.0 * binomial_sigma(0.5, n), "{f}");
    }

    #[test]
    fn formula_shift_count_covers_the_cube() {
        let space = LpSpace::new(1.5, 2).unwrap();
        let n = compute_num_shifts(2, 1.5, 4.0, 0.05, DEFAULT_SHIFT_CAP).unwrap();
        let set = make_lattices(params(2, 1.0, n.count), 11).unwrap();
        let mut rng = seeded(3);
        let trials = 10_000;
        let f = set.covering_fraction(&space, trials, &mut rng).unwrap();
        assert!(1.0 - f <= 0.05 + 3.0 * binomial_sigma(0.05, trials));
    }

    #[test]
    fn covering_is_monotone_in_prefix_length() {
        let space = LpSpace::new(1.5, 3).unwrap();
        let set = make_lattices(params(3, 1.0, 200), 13).unwrap();
        let mut last = 0.0;
        for u in [0, 1, 5, 20, 80, 200] {
            // same sample points for every prefix
            let f = set.prefix(u).covering_fraction(&space, 5_000, &mut seeded(4)).unwrap();
            assert!(f >= last, "{u}: {f} < {last}");
            last = f;
        }
    }

    #[test]
    fn at_most_one_ball_per_lattice_and_locate_matches_brute_force() {
        let mut rng = seeded(5);
        for t in 1..=4usize {
            let space = LpSpace::new(1.5, t).unwrap();
            let set = make_lattices(params(t, 1.3, 8), 21 + t as u64).unwrap();
            let cell = set.params().cell();
            for _ in 0..2_000 {
                let x: Vec<f64> = (0..t).map(|_| rng.random_range(-20.0..20.0)).collect();
                for u in 1..=8u64 {
                    let s = set.shift(u);
                    let base: Vec<i64> = (0..t).map(|i| ((x[i] - s[i]) / cell).round() as i64).collect();
                    let mut hits = Vec::new();
                    for code in 0..3usize.pow(t as u32) {
                        let mut c = code;
                        let a: Vec<i64> = base
                            .iter()
                            .map(|b| {
                                let off = (c % 3) as i64 - 1;
                                c /= 3;
                                b + off
                            })
                            .collect();
                        let centre: Vec<f64> = (0..t).map(|i| s[i] + cell * a[i] as f64).collect();
                        if space.distance(&x, &centre).unwrap() <= set.params().w {
                            hits.push(a);
                        }
                    }
                    assert!(hits.len() <= 1);
                    assert_eq!(set.locate(&x, u, &space).unwrap(), hits.pop());
                }
            }
        }
    }

    #[test]
    fn hashing_is_equivariant_under_lattice_translation() {
        let space = LpSpace::new(1.7, 3).unwrap();
        let set = make_lattices(params(3, 1.0, 400), 17).unwrap();
        let cell = set.params().cell();
        let mut rng = seeded(6);
        for _ in 0..2_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
            let h = set.hash_point(&x, &space).unwrap();
            if h.is_fallback() {
                continue;
            }
            for i in 0..3 {
                let mut y = x.clone();
                y[i] += cell;
                let g = set.hash_point(&y, &space).unwrap();
                assert_eq!(g.u, h.u);
                let mut expected = h.coords.clone();
                expected[i] += 1;
                assert_eq!(g.coords, expected);
            }
        }
    }
}
