//! Multi-table LSH index: k concatenated hashes per table, L tables, exact
//! re-ranking of the colliding candidates.
//!
//! Points are expected in the unit-radius scale (see
//! [`scale_to_unit`](crate::scheme::scale_to_unit)); `radius` only records
//! the factor that was divided out so front ends can convert back.

mod ladder;
mod persist;

pub use ladder::{LadderResult, RadiusLadder};
pub use persist::{from_bytes, load_index, save_index, to_bytes, FORMAT_VERSION, MAGIC};

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{self, LpSpace};
use crate::lab::{estimate_rho_with_budget, RhoReport};
use crate::lattice::HashValue;
use crate::rng::{derive_seed, seeded, splitmix64, tags};
use crate::scheme::{sample_hash, HashFunction, SchemeParams};

/// Amplification parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexParams {
    /// Hashes concatenated per table.
    pub k: usize,
    /// Number of tables.
    pub l: usize,
    pub seed: u64,
    /// Stop probing further tables once this many distinct candidates have
    /// been examined. `None` means 3L.
    pub max_candidates: Option<usize>,
}

impl IndexParams {
    pub fn new(k: usize, l: usize, seed: u64) -> Self {
        Self {
            k,
            l,
            seed,
            max_candidates: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::invalid(format!("k and L must be positive, got k={} L={}", self.k, self.l)));
        }
        Ok(())
    }

    /// The effective probe budget.
    pub fn budget(&self) -> usize {
        self.max_candidates.unwrap_or(3 * self.l)
    }
}

/// k = max(1, ⌈ln n / ln(1/p2)⌉), L = ⌈safety · n^ρ̂⌉ with ρ̂ = ln(1/p1)/ln(1/p2).
pub fn choose_k_l(n: usize, p1_hat: f64, p2_hat: f64, safety: f64) -> Result<(usize, usize)> {
    if n < 2 {
        return Err(Error::invalid("choose_k_l needs n >= 2"));
    }
    if !(p2_hat > 0.0 && p1_hat < 1.0) {
        return Err(Error::invalid(format!(
            "collision estimates must satisfy 0 < p2 < p1 < 1, got p1={p1_hat} p2={p2_hat}"
        )));
    }
    if p1_hat <= p2_hat {
        return Err(Error::invalid(format!(
            "family is not sensitive: p1={p1_hat} <= p2={p2_hat}"
        )));
    }
    if !(safety > 0.0) {
        return Err(Error::invalid("safety factor must be positive"));
    }
    // Ceilings ignore rounding noise so that exact integers stay put.
    let ceil = |x: f64| (x - 1e-9).ceil().max(1.0) as usize;
    let nf = n as f64;
    let k = ceil(nf.ln() / (1.0 / p2_hat).ln());
    let rho = (1.0 / p1_hat).ln() / (1.0 / p2_hat).ln();
    let l = ceil(safety * nf.powf(rho));
    Ok((k, l))
}

/// (k, L) chosen from Monte Carlo estimates of p1 and p2 for `scheme`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoKl {
    pub k: usize,
    pub l: usize,
    pub estimate: RhoReport,
}

/// Estimates p1 at r and p2 at c·r with `trials` fresh hash functions each
/// (p2 doubling up to `budget` if it sees too few collisions), then applies
/// [`choose_k_l`].
pub fn auto_k_l(scheme: &SchemeParams, d: usize, n: usize, safety: f64, trials: u64, budget: u64, seed: u64) -> Result<AutoKl> {
    let mut rng = seeded(seed);
    let estimate = estimate_rho_with_budget(scheme, d, trials, budget, &mut rng)?;
    let p2 = if estimate.upper_bounded_only { estimate.p2.ci95.1 } else { estimate.p2.p_hat };
    let (k, l) = choose_k_l(n.max(2), estimate.p1.p_hat, p2, safety)?;
    Ok(AutoKl { k, l, estimate })
}

/// Success probability 1 − (1 − p1^k)^L of finding a near neighbor.
pub fn success_bound(p1: f64, k: usize, l: usize) -> f64 {
    1.0 - (1.0 - p1.powi(k as i32)).powi(l as i32)
}

/// The best candidate of a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Answer {
    pub id: u64,
    /// Exact ℓ_p distance to the query.
    pub distance: f64,
    /// Whether the distance is within c·r.
    pub in_contract: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryResult {
    pub answer: Option<Answer>,
    pub candidates_examined: usize,
    pub tables_probed: usize,
}

/// Buckets of one table: fingerprint → dataset positions, ascending.
pub(crate) type Table = HashMap<u64, Vec<u32>>;

#[derive(Clone, Debug)]
pub struct LshIndex {
    scheme: SchemeParams,
    params: IndexParams,
    radius: f64,
    metadata: String,
    data: Dataset,
    space: LpSpace,
    /// `hashes[j * k + i]` is hash i of table j.
    hashes: Vec<HashFunction>,
    tables: Vec<Table>,
}

/// Seed of hash `i` in table `j`.
fn hash_seed(root: u64, k: usize, j: usize, i: usize) -> u64 {
    derive_seed(derive_seed(root, tags::HASH_FAMILY), (j * k + i) as u64)
}

fn mix_value(mut h: u64, v: &HashValue) -> u64 {
    h = splitmix64(h ^ v.u);
    for &c in &v.coords {
        h = splitmix64(h.wrapping_add(c as u64));
    }
    splitmix64(h ^ 0x5bd1_e995)
}

/// 64-bit fingerprint of a composite key.
pub fn fingerprint(values: &[HashValue]) -> u64 {
    values.iter().fold(0x243f_6a88_85a3_08d3, mix_value)
}

fn sample_hashes(scheme: &SchemeParams, params: &IndexParams, d: usize) -> Result<Vec<HashFunction>> {
    (0..params.l * params.k)
        .map(|idx| sample_hash(scheme, d, hash_seed(params.seed, params.k, idx / params.k, idx % params.k)))
        .collect()
}

fn check_unique_ids(data: &Dataset) -> Result<()> {
    let mut seen = HashSet::with_capacity(data.len());
    for &id in data.ids() {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(())
}

impl LshIndex {
    /// Samples L·k hash functions and inserts every point once per table.
    pub fn build(points: &Dataset, scheme: &SchemeParams, params: IndexParams) -> Result<Self> {
        Self::build_inner(points, scheme, params, false)
    }

    /// Like [`build`](Self::build) but keeps the full composite keys while
    /// inserting and fails if two different keys share a fingerprint.
    pub fn build_with_key_audit(points: &Dataset, scheme: &SchemeParams, params: IndexParams) -> Result<Self> {
        Self::build_inner(points, scheme, params, true)
    }

    fn build_inner(points: &Dataset, scheme: &SchemeParams, params: IndexParams, audit: bool) -> Result<Self> {
        params.validate()?;
        if points.len() > u32::MAX as usize {
            return Err(Error::invalid("at most 2^32 - 1 points per index"));
        }
        check_unique_ids(points)?;
        let d = points.dim();
        let space = LpSpace::new(scheme.p, d)?;
        let hashes = sample_hashes(scheme, &params, d)?;
        let k = params.k;
        let tables = (0..params.l)
            .into_par_iter()
            .map(|j| {
                let funcs = &hashes[j * k..(j + 1) * k];
                let mut table: Table = HashMap::new();
                let mut keys: HashMap<u64, Vec<HashValue>> = HashMap::new();
                let mut composite = Vec::with_capacity(k);
                for pos in 0..points.len() {
                    composite.clear();
                    for h in funcs {
                        composite.push(h.eval(points.point(pos))?);
                    }
                    let fp = fingerprint(&composite);
                    if audit {
                        match keys.get(&fp) {
                            Some(existing) if existing != &composite => {
                                return Err(Error::FingerprintCollision { table: j });
                            }
                            Some(_) => {}
                            None => {
                                keys.insert(fp, composite.clone());
                            }
                        }
                    }
                    table.entry(fp).or_default().push(pos as u32);
                }
                Ok(table)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scheme: scheme.clone(),
            params,
            radius: 1.0,
            metadata: String::new(),
            data: points.clone(),
            space,
            hashes,
            tables,
        })
    }

    /// Reassembles an index from its stored parts, regenerating the hash
    /// functions from the seed.
    pub(crate) fn from_parts(
        scheme: SchemeParams,
        params: IndexParams,
        radius: f64,
        metadata: String,
        data: Dataset,
        tables: Vec<Table>,
    ) -> Result<Self> {
        params.validate()?;
        let d = data.dim();
        let space = LpSpace::new(scheme.p, d)?;
        let hashes = sample_hashes(&scheme, &params, d)?;
        if tables.len() != params.l {
            return Err(Error::Format(format!("expected {} tables, found {}", params.l, tables.len())));
        }
        Ok(Self {
            scheme,
            params,
            radius,
            metadata,
            data,
            space,
            hashes,
            tables,
        })
    }

    pub fn scheme(&self) -> &SchemeParams {
        &self.scheme
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Scale radius that was divided out of the data before building.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn set_radius(&mut self, radius: f64) {
        self.radius = radius;
    }

    /// Free-form text stored in the file header.
    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn set_metadata(&mut self, metadata: impl Into<String>) {
        self.metadata = metadata.into();
    }

    pub fn set_max_candidates(&mut self, max_candidates: Option<usize>) {
        self.params.max_candidates = max_candidates;
    }

    pub(crate) fn tables(&self) -> &[Table] {
        &self.tables
    }

    /// Number of stored (table, point) entries.
    pub fn total_entries(&self) -> usize {
        self.tables.iter().map(|t| t.values().map(Vec::len).sum::<usize>()).sum()
    }

    pub fn bucket_count(&self) -> usize {
        self.tables.iter().map(HashMap::len).sum()
    }

    /// Composite key fingerprint of `x` in table `j`.
    pub fn table_key(&self, j: usize, x: &[f64]) -> Result<u64> {
        check_dim(self.dim(), x.len())?;
        let k = self.params.k;
        let composite = self.hashes[j * k..(j + 1) * k]
            .iter()
            .map(|h| h.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(fingerprint(&composite))
    }

    /// Probes the query's bucket table by table, re-ranks candidates by exact
    /// distance and returns the closest (ties to the smallest id). Tables are
    /// probed whole; probing stops once the budget is reached.
    pub fn query(&self, q: &[f64]) -> Result<QueryResult> {
        check_dim(self.dim(), q.len())?;
        let mut result = QueryResult {
            answer: None,
            candidates_examined: 0,
            tables_probed: 0,
        };
        if self.is_empty() {
            return Ok(result);
        }
        let budget = self.params.budget();
        let mut seen: HashSet<u32> = HashSet::new();
        let mut best: Option<(f64, u64)> = None;
        for j in 0..self.params.l {
            if result.candidates_examined >= budget {
                break;
            }
            result.tables_probed += 1;
            let key = self.table_key(j, q)?;
            let Some(bucket) = self.tables[j].get(&key) else { continue };
            for &pos in bucket {
                if !seen.insert(pos) {
                    continue;
                }
                result.candidates_examined += 1;
                let dist = geometry::distance(self.data.point(pos as usize), q, self.space.p());
                let id = self.data.id(pos as usize);
                if best.is_none_or(|b| (dist, id) < b) {
                    best = Some((dist, id));
                }
            }
        }
        let far = self.scheme.c * self.scheme.r;
        result.answer = best.map(|(distance, id)| Answer {
            id,
            distance,
            in_contract: distance <= far,
        });
        Ok(result)
    }
}

/// Exact nearest neighbor by linear scan; ties go to the smallest id.
pub fn linear_scan_nn(points: &Dataset, q: &[f64], space: &LpSpace) -> Result<(u64, f64)> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(space.dim(), points.dim())?;
    check_dim(space.dim(), q.len())?;
    let mut best: Option<(f64, u64)> = None;
    for (id, x) in points.iter() {
        let dist = geometry::distance(x, q, space.p());
        if best.is_none_or(|b| (dist, id) < b) {
            best = Some((dist, id));
        }
    }
    let (dist, id) = best.expect("nonempty");
    Ok((id, dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{derive_params, Profile, SchemeConfig};
    use rand::Rng;

    pub(crate) fn small_scheme() -> SchemeParams {
        let mut cfg = SchemeConfig::new(2.0, 1.5);
        cfg.profile = Profile::Remark;
        cfg.threshold_samples = 100_000;
        cfg.threshold_seed = 3;
        derive_params(&cfg).unwrap()
    }

    fn random_data(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = crate::rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        Dataset::from_rows(d, rows).unwrap()
    }

    #[test]
    fn choose_k_l_examples() {
        let (k, _) = choose_k_l(10_000, 0.9, 0.5, 1.0).unwrap();
        assert_eq!(k, 14);
        let (_, l) = choose_k_l(10_000, 0.9, 0.5, 1.0).unwrap();
        assert_eq!(l, 5);
        let (_, l) = choose_k_l(10_000, 1.0 - 1e-12, 0.5, 1.0).unwrap();
        assert_eq!(l, 1);
        assert!(choose_k_l(10_000, 0.4, 0.5, 1.0).is_err());
        assert!(choose_k_l(10_000, 0.5, 0.5, 1.0).is_err());
        assert!(choose_k_l(1, 0.9, 0.5, 1.0).is_err());
        assert!(choose_k_l(100, 0.9, 0.0, 1.0).is_err());
    }

    #[test]
    fn empty_index_answers_nothing() {
        let s = small_scheme();
        let idx = LshIndex::build(&Dataset::new(4), &s, IndexParams::new(2, 3, 1)).unwrap();
        let r = idx.query(&[0.0; 4]).unwrap();
        assert!(r.answer.is_none());
        assert_eq!(r.candidates_examined, 0);
        assert_eq!(idx.total_entries(), 0);
    }

    #[test]
    fn stored_points_are_found_with_distance_zero() {
        let s = small_scheme();
        let data = random_data(300, 6, 1);
        let idx = LshIndex::build(&data, &s, IndexParams::new(3, 4, 9)).unwrap();
        assert_eq!(idx.total_entries(), 300 * 4);
        for (id, x) in data.iter() {
            for j in 0..4 {
                let key = idx.table_key(j, x).unwrap();
                assert!(idx.tables()[j][&key].contains(&(id as u32)));
            }
            let ans = idx.query(x).unwrap().answer.unwrap();
            assert_eq!((ans.id, ans.distance), (id, 0.0));
            assert!(ans.in_contract);
        }
    }

    #[test]
    fn every_id_in_exactly_one_bucket_per_table() {
        let s = small_scheme();
        let data = random_data(200, 3, 2);
        let idx = LshIndex::build_with_key_audit(&data, &s, IndexParams::new(2, 5, 4)).unwrap();
        for table in idx.tables() {
            let mut all: Vec<u32> = table.values().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..200).collect::<Vec<_>>());
            for bucket in table.values() {
                assert!(bucket.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        let s = small_scheme();
        let mut data = Dataset::new(2);
        data.push(5, &[0.0, 1.0]).unwrap();
        data.push(5, &[1.0, 1.0]).unwrap();
        assert!(matches!(
            LshIndex::build(&data, &s, IndexParams::new(1, 1, 0)),
            Err(Error::DuplicateId(5))
        ));
        let data = random_data(5, 2, 3);
        assert!(LshIndex::build(&data, &s, IndexParams::new(0, 1, 0)).is_err());
        let idx = LshIndex::build(&data, &s, IndexParams::new(1, 1, 0)).unwrap();
        assert!(matches!(idx.query(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reported_distance_is_exact() {
        let s = small_scheme();
        let data = random_data(500, 4, 5);
        let idx = LshIndex::build(&data, &s, IndexParams::new(1, 6, 2)).unwrap();
        let space = LpSpace::new(1.5, 4).unwrap();
        let queries = random_data(50, 4, 6);
        for (_, q) in queries.iter() {
            if let Some(a) = idx.query(q).unwrap().answer {
                let pos = data.ids().iter().position(|&i| i == a.id).unwrap();
                assert_eq!(a.distance, space.distance(data.point(pos), q).unwrap());
                let (_, nn) = linear_scan_nn(&data, q, &space).unwrap();
                assert!(a.distance >= nn);
            }
        }
    }

    #[test]
    fn budget_stops_after_whole_tables() {
        let s = small_scheme();
        let data = random_data(400, 2, 7);
        let mut idx = LshIndex::build(&data, &s, IndexParams::new(1, 8, 3)).unwrap();
        idx.set_max_candidates(Some(1));
        let r = idx.query(data.point(0)).unwrap();
        assert_eq!(r.tables_probed, 1);
        assert_eq!(r.answer.unwrap().id, 0);
        idx.set_max_candidates(Some(usize::MAX));
        assert_eq!(idx.query(data.point(0)).unwrap().tables_probed, 8);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn linear_scan_matches_double_loop() {
        let data = random_data(100, 5, 8);
        let space = LpSpace::new(1.3, 5).unwrap();
        let queries = random_data(30, 5, 9);
        for (_, q) in queries.iter() {
            let mut best_id = 0u64;
            let mut best = f64::INFINITY;
            for i in 0..data.len() {
                let mut acc = 0.0;
                for j in 0..5 {
                    acc += (data.point(i)[j] - q[j]).abs().powf(1.3);
                }
                let dist = acc.powf(1.0 / 1.3);
                if dist < best {
                    best = dist;
                    best_id = data.id(i);
                }
            }
            let (id, dist) = linear_scan_nn(&data, q, &space).unwrap();
            assert_eq!(id, best_id);
            assert!((dist - best).abs() < 1e-12 * best.max(1.0));
        }
    }

    #[test]
    fn linear_scan_edge_cases() {
        let space = LpSpace::new(1.5, 2).unwrap();
        assert!(matches!(linear_scan_nn(&Dataset::new(2), &[0.0, 0.0], &space), Err(Error::EmptyDataset)));
        let single = Dataset::from_rows(2, [[3.0, 4.0]]).unwrap();
        assert_eq!(linear_scan_nn(&single, &[0.0, 0.0], &space).unwrap().0, 0);
        let mut tie = Dataset::new(2);
        tie.push(9, &[1.0, 0.0]).unwrap();
        tie.push(4, &[-1.0, 0.0]).unwrap();
        assert_eq!(linear_scan_nn(&tie, &[0.0, 0.0], &space).unwrap(), (4, 1.0));
        assert_eq!(linear_scan_nn(&tie, &[1.0, 0.0], &space).unwrap(), (9, 0.0));
    }

    #[test]
    fn success_bound_limits() {
        assert_eq!(success_bound(1.0, 5, 3), 1.0);
        assert_eq!(success_bound(0.0, 5, 3), 0.0);
        assert!((success_bound(0.5, 1, 2) - 0.75).abs() < 1e-15);
    }
}
