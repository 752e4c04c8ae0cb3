//! Binary index files.
//!
//! Layout (little-endian): magic `LPLSH`, u16 format version, u64 total file
//! length, header (metadata string, scheme constants, knobs, overrides,
//! index parameters, scale radius), ids and raw f64 points, then for each
//! table its buckets in ascending fingerprint order, and finally a CRC-64
//! of everything before it. Projection matrices and shifts are not stored;
//! they are regenerated from the seeds on load.

use std::fs;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use super::{IndexParams, LshIndex, Table};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::scheme::{Knobs, Overrides, Profile, SchemeParams};

pub const MAGIC: &[u8; 5] = b"LPLSH";
pub const FORMAT_VERSION: u16 = 1;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);
/// magic + version + length field.
const PREAMBLE: usize = 5 + 2 + 8;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn opt_f64(&mut self, v: Option<f64>) {
        self.u8(v.is_some() as u8);
        self.f64(v.unwrap_or(0.0));
    }
    fn opt_u64(&mut self, v: Option<u64>) {
        self.u8(v.is_some() as u8);
        self.u64(v.unwrap_or(0));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Truncated(format!("file ends inside {what}")))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::Format(format!("{what} does not fit in memory")))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn bool(&mut self, what: &str) -> Result<bool> {
        match self.u8(what)? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Format(format!("bad flag {b} in {what}"))),
        }
    }
    fn str(&mut self, what: &str) -> Result<String> {
        let n = self.usize(what)?;
        let bytes = self.take(n, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
    fn opt_f64(&mut self, what: &str) -> Result<Option<f64>> {
        let set = self.bool(what)?;
        let v = self.f64(what)?;
        Ok(set.then_some(v))
    }
    fn opt_u64(&mut self, what: &str) -> Result<Option<u64>> {
        let set = self.bool(what)?;
        let v = self.u64(what)?;
        Ok(set.then_some(v))
    }
}

fn profile_code(p: Profile) -> u8 {
    match p {
        Profile::Main => 0,
        Profile::Remark => 1,
    }
}

fn profile_from(code: u8) -> Result<Profile> {
    match code {
        0 => Ok(Profile::Main),
        1 => Ok(Profile::Remark),
        b => Err(Error::Format(format!("unknown profile code {b}"))),
    }
}

/// Serializes the index to bytes.
pub fn to_bytes(index: &LshIndex) -> Vec<u8> {
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    w.u64(0); // patched below
    w.str(index.metadata());

    let s = index.scheme();
    for v in [s.c, s.p, s.r, s.w] {
        w.f64(v);
    }
    w.u64(s.t as u64);
    for v in [s.epsilon, s.failure_prob, s.threshold, s.lattice.spacing] {
        w.f64(v);
    }
    w.u64(s.lattice.num_shifts);
    w.u8(s.lattice.saturated as u8);
    w.u8(profile_code(s.requested_profile));
    w.u8(profile_code(s.profile));
    for v in [s.knobs.kappa_w, s.knobs.kappa_t, s.knobs.kappa_eps] {
        w.f64(v);
    }
    let o = &s.overrides;
    w.opt_f64(o.w);
    w.opt_u64(o.t.map(|t| t as u64));
    w.opt_f64(o.epsilon);
    w.opt_f64(o.failure_prob);
    w.opt_u64(o.num_shifts);
    w.opt_f64(o.threshold);
    w.u64(s.threshold_samples as u64);
    w.u64(s.threshold_seed);

    let ip = index.params();
    w.u64(ip.k as u64);
    w.u64(ip.l as u64);
    w.u64(ip.seed);
    w.opt_u64(ip.max_candidates.map(|m| m as u64));
    w.f64(index.radius());

    let data = index.data();
    w.u64(data.dim() as u64);
    w.u64(data.len() as u64);
    for &id in data.ids() {
        w.u64(id);
    }
    for &x in data.coords() {
        w.f64(x);
    }

    for table in index.tables() {
        let mut keys: Vec<u64> = table.keys().copied().collect();
        keys.sort_unstable();
        w.u64(keys.len() as u64);
        for key in keys {
            let bucket = &table[&key];
            w.u64(key);
            w.u32(bucket.len() as u32);
            for &pos in bucket {
                w.u32(pos);
            }
        }
    }

    let total = (w.buf.len() + 8) as u64;
    w.buf[7..15].copy_from_slice(&total.to_le_bytes());
    let crc = CRC64.checksum(&w.buf);
    w.u64(crc);
    w.buf
}

/// Parses bytes written by [`to_bytes`]. The checksum is verified before
/// anything else is interpreted.
pub fn from_bytes(bytes: &[u8]) -> Result<LshIndex> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        if bytes.len() < MAGIC.len() && MAGIC.starts_with(bytes) {
            return Err(Error::Truncated("file ends inside the magic".into()));
        }
        return Err(Error::Format("not an index file (bad magic)".into()));
    }
    if bytes.len() < PREAMBLE + 8 {
        return Err(Error::Truncated(format!("{} bytes is shorter than any index", bytes.len())));
    }
    let declared = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    if (bytes.len() as u64) < declared {
        return Err(Error::Truncated(format!("expected {declared} bytes, found {}", bytes.len())));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = CRC64.checksum(body);
    if stored != computed || declared != bytes.len() as u64 {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    let version = u16::from_le_bytes(bytes[5..7].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }

    let mut r = Reader { buf: body, pos: PREAMBLE };
    let metadata = r.str("metadata")?;
    let c = r.f64("c")?;
    let p = r.f64("p")?;
    let r_unit = r.f64("r")?;
    let w = r.f64("w")?;
    let t = r.usize("t")?;
    let epsilon = r.f64("eps")?;
    let failure_prob = r.f64("delta")?;
    let threshold = r.f64("T")?;
    let spacing = r.f64("spacing")?;
    let num_shifts = r.u64("U")?;
    let saturated = r.bool("saturated")?;
    let requested_profile = profile_from(r.u8("profile")?)?;
    let profile = profile_from(r.u8("profile")?)?;
    let knobs = Knobs {
        kappa_w: r.f64("knobs")?,
        kappa_t: r.f64("knobs")?,
        kappa_eps: r.f64("knobs")?,
    };
    let overrides = Overrides {
        w: r.opt_f64("overrides")?,
        t: r.opt_u64("overrides")?.map(|t| t as usize),
        epsilon: r.opt_f64("overrides")?,
        failure_prob: r.opt_f64("overrides")?,
        num_shifts: r.opt_u64("overrides")?,
        threshold: r.opt_f64("overrides")?,
    };
    let threshold_samples = r.usize("threshold samples")?;
    let threshold_seed = r.u64("threshold seed")?;
    let lattice = LatticeParams {
        w,
        spacing,
        t,
        failure_prob,
        num_shifts,
        saturated,
    };
    lattice.validate()?;
    let scheme = SchemeParams {
        c,
        p,
        r: r_unit,
        w,
        t,
        epsilon,
        failure_prob,
        threshold,
        lattice,
        requested_profile,
        profile,
        knobs,
        overrides,
        threshold_samples,
        threshold_seed,
    };

    let k = r.usize("k")?;
    let l = r.usize("L")?;
    let seed = r.u64("seed")?;
    let max_candidates = r.opt_u64("max_candidates")?.map(|m| m as usize);
    let params = IndexParams {
        k,
        l,
        seed,
        max_candidates,
    };
    let radius = r.f64("radius")?;

    let d = r.usize("dimension")?;
    let n = r.usize("point count")?;
    let ids = (0..n).map(|_| r.u64("ids")).collect::<Result<Vec<_>>>()?;
    let mut data = Dataset::new(d);
    let mut row = vec![0.0; d];
    for &id in &ids {
        for slot in row.iter_mut() {
            *slot = r.f64("points")?;
        }
        data.push(id, &row)?;
    }

    let mut tables = Vec::with_capacity(l.min(1 << 20));
    for _ in 0..l {
        let buckets = r.usize("bucket count")?;
        let mut table = Table::with_capacity(buckets.min(n));
        for _ in 0..buckets {
            let key = r.u64("bucket key")?;
            let len = r.u32("bucket length")? as usize;
            let bucket = (0..len).map(|_| r.u32("bucket")).collect::<Result<Vec<_>>>()?;
            if bucket.iter().any(|&pos| pos as usize >= n) {
                return Err(Error::Format("bucket refers to a missing point".into()));
            }
            table.insert(key, bucket);
        }
        tables.push(table);
    }
    if r.pos != body.len() {
        return Err(Error::Format(format!("{} trailing bytes", body.len() - r.pos)));
    }
    LshIndex::from_parts(scheme, params, radius, metadata, data, tables)
}

pub fn save_index(index: &LshIndex, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(index))?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<LshIndex> {
    from_bytes(&fs::read(path)?)
}
