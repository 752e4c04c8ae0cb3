//! Point sets, their on-disk formats, and planted near-neighbor instances.
//!
//! Formats:
//! * fvecs: per record a little-endian i32 dimension followed by that many
//!   little-endian f32 values.
//! * CSV: optional `#` comment lines, a header row, then one vector per line.
//!
//! Ids are the record positions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, Error, Result};
use crate::geometry::LpSpace;
use crate::rng::{derive_seed, seeded, tags};

/// Points of R^dim with integer ids, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    ids: Vec<u64>,
    coords: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            coords: Vec::new(),
        }
    }

    /// Rows get ids 0, 1, 2, ...
    pub fn from_rows<I>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[f64]>,
    {
        let mut ds = Self::new(dim);
        for (i, row) in rows.into_iter().enumerate() {
            ds.push(i as u64, row.as_ref())?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, id: u64, point: &[f64]) -> Result<()> {
        check_dim(self.dim, point.len())?;
        self.ids.push(id);
        self.coords.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn id(&self, pos: usize) -> u64 {
        self.ids[pos]
    }

    pub fn point(&self, pos: usize) -> &[f64] {
        &self.coords[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (u64, &[f64])> + '_ {
        (0..self.len()).map(move |i| (self.ids[i], self.point(i)))
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            ids: self.ids.clone(),
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }
}

pub fn read_fvecs(path: &Path) -> Result<Dataset> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_fvecs(&bytes)
}

pub fn parse_fvecs(bytes: &[u8]) -> Result<Dataset> {
    let mut pos = 0;
    let mut ds: Option<Dataset> = None;
    let mut row = Vec::new();
    while pos < bytes.len() {
        let head = bytes
            .get(pos..pos + 4)
            .ok_or_else(|| Error::Truncated(format!("fvecs record header at byte {pos}")))?;
        let dim = i32::from_le_bytes(head.try_into().unwrap());
        if dim <= 0 {
            return Err(Error::Format(format!("fvecs record at byte {pos} has dimension {dim}")));
        }
        let dim = dim as usize;
        pos += 4;
        let body = bytes
            .get(pos..pos + 4 * dim)
            .ok_or_else(|| Error::Truncated(format!("fvecs record body at byte {pos}")))?;
        pos += 4 * dim;
        row.clear();
        row.extend(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64),
        );
        let ds = ds.get_or_insert_with(|| Dataset::new(dim));
        if ds.dim != dim {
            return Err(Error::Format(format!(
                "fvecs record {} has dimension {dim}, expected {}",
                ds.len(),
                ds.dim
            )));
        }
        let id = ds.len() as u64;
        ds.push(id, &row)?;
    }
    Ok(ds.unwrap_or_else(|| Dataset::new(0)))
}

pub fn write_fvecs(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (_, p) in data.iter() {
        out.write_all(&(data.dim as i32).to_le_bytes())?;
        for v in p {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_path(path)
        .map_err(csv_error)?;
    parse_csv(reader)
}

fn parse_csv<R: Read>(mut reader: csv::Reader<R>) -> Result<Dataset> {
    let dim = reader.headers().map_err(csv_error)?.len();
    let mut ds = Dataset::new(dim);
    let mut row = Vec::with_capacity(dim);
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        row.clear();
        for field in rec.iter() {
            row.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {}: bad number {field:?}", i + 1)))?,
            );
        }
        ds.push(i as u64, &row)
            .map_err(|_| Error::Format(format!("row {} has {} fields, header has {dim}", i + 1, row.len())))?;
    }
    Ok(ds)
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(e.to_string())
    }
}

/// Writes a CSV dataset; each `comments` entry becomes a leading `# ` line.
pub fn write_csv(path: &Path, data: &Dataset, comments: &[String]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let header: Vec<String> = (0..data.dim).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for (_, p) in data.iter() {
        let line: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetFormat {
    Fvecs,
    Csv,
}

impl DatasetFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("fvecs") => Ok(Self::Fvecs),
            Some("csv") => Ok(Self::Csv),
            _ => Err(Error::Format(format!(
                "cannot infer dataset format of {} (use .fvecs or .csv)",
                path.display()
            ))),
        }
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    match DatasetFormat::from_path(path)? {
        DatasetFormat::Fvecs => read_fvecs(path),
        DatasetFormat::Csv => read_csv(path),
    }
}

/// Writes by extension. fvecs has no room for comments; they are dropped.
pub fn write_dataset(path: &Path, data: &Dataset, comments: &[String]) -> Result<()> {
    match DatasetFormat::from_path(path)? {
        DatasetFormat::Fvecs => write_fvecs(path, data),
        DatasetFormat::Csv => write_csv(path, data, comments),
    }
}

/// Parameters of a planted instance: every query has exactly one data point
/// at ℓ_p distance `r` and all other data points at distance ≥ c·r.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub r: f64,
    pub c: f64,
    pub planted_count: usize,
    /// Standard deviation of background coordinates.
    pub spread: f64,
    pub seed: u64,
    /// Rejection attempts per point before giving up.
    pub max_attempts: usize,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            d: 16,
            p: 1.5,
            r: 1.0,
            c: 2.0,
            planted_count: 10,
            spread: 1.0,
            seed: 0,
            max_attempts: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedInstance {
    pub data: Dataset,
    pub queries: Dataset,
    /// Id of the planted neighbor of each query.
    pub truth: Vec<u64>,
}

/// True iff ‖x − y‖_p < bound, stopping early once the partial sum passes it.
fn closer_than(x: &[f64], y: &[f64], p: f64, bound: f64) -> bool {
    let limit = bound.powf(p);
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        acc += (a - b).abs().powf(p);
        if acc >= limit {
            return false;
        }
    }
    acc < limit
}

pub fn generate_planted(cfg: &PlantedConfig) -> Result<PlantedInstance> {
    if cfg.n == 0 || cfg.d == 0 {
        return Err(Error::invalid("planted instance needs n >= 1 and d >= 1"));
    }
    if cfg.planted_count > cfg.n {
        return Err(Error::invalid(format!(
            "cannot plant {} neighbors among {} points",
            cfg.planted_count, cfg.n
        )));
    }
    if !(cfg.r > 0.0 && cfg.c > 1.0 && cfg.spread > 0.0) {
        return Err(Error::invalid("planted instance needs r > 0, c > 1, spread > 0"));
    }
    let space = LpSpace::new(cfg.p, cfg.d)?;
    let p = cfg.p;
    let far = cfg.c * cfg.r;
    let mut rng = seeded(derive_seed(cfg.seed, tags::DATA));
    let normal = Normal::new(0.0, cfg.spread).expect("positive spread");
    let draw = |rng: &mut crate::rng::SeededRng| -> Vec<f64> { (0..cfg.d).map(|_| normal.sample(rng)).collect() };

    let mut queries: Vec<Vec<f64>> = Vec::with_capacity(cfg.planted_count);
    let mut planted: Vec<Vec<f64>> = Vec::with_capacity(cfg.planted_count);
    for j in 0..cfg.planted_count {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > cfg.max_attempts {
                return Err(Error::InfeasibleGeometry(format!(
                    "could not place query {j} with its planted neighbor isolated at c*r = {far}"
                )));
            }
            let q = draw(&mut rng);
            let dir = space.random_direction(&mut rng);
            let pt: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + cfg.r * b).collect();
            // the new planted point must be far from earlier queries, and the
            // earlier planted points far from the new query
            let clash = queries.iter().any(|oq| closer_than(&pt, oq, p, far))
                || planted.iter().any(|op| closer_than(op, &q, p, far));
            if !clash {
                queries.push(q);
                planted.push(pt);
                break;
            }
        }
    }

    let background = cfg.n - cfg.planted_count;
    let mut others: Vec<Vec<f64>> = Vec::with_capacity(background);
    for i in 0..background {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > cfg.max_attempts {
                return Err(Error::InfeasibleGeometry(format!(
                    "background point {i} keeps landing within c*r = {far} of a query; \
                     increase spread or reduce c*r"
                )));
            }
            let x = draw(&mut rng);
            if !queries.iter().any(|q| closer_than(&x, q, p, far)) {
                others.push(x);
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.shuffle(&mut rng);
    // order[pos] < planted_count marks a planted point
    let mut rows: Vec<&[f64]> = Vec::with_capacity(cfg.n);
    let mut truth = vec![0u64; cfg.planted_count];
    for (pos, &src) in order.iter().enumerate() {
        if src < cfg.planted_count {
            truth[src] = pos as u64;
            rows.push(&planted[src]);
        } else {
            rows.push(&others[src - cfg.planted_count]);
        }
    }
    Ok(PlantedInstance {
        data: Dataset::from_rows(cfg.d, rows)?,
        queries: Dataset::from_rows(cfg.d, &queries)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_accessors_and_scaling() {
        let ds = Dataset::from_rows(2, [[1.0, 2.0], [3.0, -4.0]]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.point(1), &[3.0, -4.0]);
        assert_eq!(ds.ids(), &[0, 1]);
        let half = ds.scaled(0.5);
        assert_eq!(half.point(1), &[1.5, -2.0]);
        let back = half.scaled(2.0);
        assert_eq!(back, ds);
        let mut ds = ds;
        assert!(ds.push(9, &[1.0]).is_err());
    }

    #[test]
    fn fvecs_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.fvecs");
        let ds = Dataset::from_rows(3, [[1.0, 2.5, -3.0], [0.0, 0.125, 7.0]]).unwrap();
        write_fvecs(&path, &ds).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 2 * (4 + 12));
        assert_eq!(&bytes[..4], &3i32.to_le_bytes());
        assert_eq!(read_fvecs(&path).unwrap(), ds);

        assert!(matches!(parse_fvecs(&bytes[..bytes.len() - 2]), Err(Error::Truncated(_))));
        let mut bad = bytes.clone();
        bad[16..20].copy_from_slice(&2i32.to_le_bytes());
        assert!(matches!(parse_fvecs(&bad), Err(Error::Format(_)) | Err(Error::Truncated(_))));
        assert!(parse_fvecs(&[]).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let ds = Dataset::from_rows(2, [[0.1, 0.2], [1e-3, -5.0]]).unwrap();
        write_csv(&path, &ds, &["made by a test".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# made by a test\nx0,x1\n"));
        assert_eq!(read_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x0,x1\n1,2\n3\n").unwrap();
        assert!(read_csv(&path).is_err());
        std::fs::write(&path, "x0,x1\n1,zz\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Format(_))));
    }

    #[test]
    fn format_by_extension() {
        assert_eq!(DatasetFormat::from_path(Path::new("x.fvecs")).unwrap(), DatasetFormat::Fvecs);
        assert_eq!(DatasetFormat::from_path(Path::new("x.csv")).unwrap(), DatasetFormat::Csv);
        assert!(DatasetFormat::from_path(Path::new("x.bin")).is_err());
    }

    #[test]
    fn planted_instance_is_valid_by_linear_scan() {
        let cfg = PlantedConfig {
            n: 300,
            d: 8,
            p: 1.5,
            r: 1.0,
            c: 2.0,
            planted_count: 12,
            spread: 2.0,
            seed: 3,
            max_attempts: 10_000,
        };
        let inst = generate_planted(&cfg).unwrap();
        let space = LpSpace::new(1.5, 8).unwrap();
        for (j, (_, q)) in inst.queries.iter().enumerate() {
            for (id, x) in inst.data.iter() {
                let d = space.distance(q, x).unwrap();
                if id == inst.truth[j] {
                    assert!((d - 1.0).abs() < 1e-12);
                } else {
                    assert!(d >= 2.0, "query {j} point {id} at {d}");
                }
            }
        }
        assert_eq!(generate_planted(&cfg).unwrap(), inst);
    }

    #[test]
    fn trivial_planted_instance() {
        let cfg = PlantedConfig {
            n: 1,
            planted_count: 1,
            ..Default::default()
        };
        let inst = generate_planted(&cfg).unwrap();
        assert_eq!(inst.truth, vec![0]);
        let space = LpSpace::new(cfg.p, cfg.d).unwrap();
        let d = space.distance(inst.queries.point(0), inst.data.point(0)).unwrap();
        assert!((d - cfg.r).abs() < 1e-12);
    }

    #[test]
    fn infeasible_geometry_is_reported() {
        let cfg = PlantedConfig {
            n: 50,
            d: 1,
            p: 1.5,
            r: 1.0,
            c: 50.0,
            planted_count: 5,
            spread: 1.0,
            seed: 1,
            max_attempts: 200,
        };
        assert!(matches!(generate_planted(&cfg), Err(Error::InfeasibleGeometry(_))));
    }
}
