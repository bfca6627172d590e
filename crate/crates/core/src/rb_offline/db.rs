use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::reffem::{harmonic_liftings, RefTriangulation, SectorForms};

use super::bricks::{precompute_bricks, BrickDb};
use super::pod::{pod_compress, PodTarget, RbSpace};
use super::sampling::{compute_snapshots, sample_parameter_space_with, SamplingOptions};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"RBVEMDB\0";

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineConfig {
    pub n: usize,
    pub l: usize,
    pub target: PodTarget,
    pub level: u32,
    pub seed: u64,
    pub sampling: SamplingOptions,
}

impl OfflineConfig {
    pub fn new(n: usize, m: usize) -> Self {
        OfflineConfig {
            n,
            l: 100,
            target: PodTarget::Modes(m),
            level: 5,
            seed: 0,
            sampling: SamplingOptions::default(),
        }
    }
}

/// Everything the online stage needs for one vertex count.
#[derive(Clone, Debug)]
pub struct OfflineDb {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub level: u32,
    pub seed: u64,
    pub rb: RbSpace,
    /// `Θ̂_j`, full nodal vectors
    pub liftings: Vec<Vec<f64>>,
    pub bricks: BrickDb,
    pub format_version: u32,
}

pub fn build_offline_db(cfg: &OfflineConfig) -> Result<OfflineDb> {
    let t0 = Instant::now();
    let tri = RefTriangulation::new(cfg.n, cfg.level)?;
    let forms = SectorForms::assemble(&tri)?;
    let liftings = harmonic_liftings(&tri, &forms)?;
    let samples = sample_parameter_space_with(cfg.n, cfg.l, cfg.seed, &cfg.sampling)?;
    let snapshots = compute_snapshots(&tri, &forms, &liftings, &samples)?;
    let rb = pod_compress(&snapshots, &forms.laplacian(), cfg.target)?;
    drop(snapshots);
    let bricks = precompute_bricks(&tri, &forms, &rb, &liftings)?;
    log::info!(
        "offline N={} L={} M={} level={} built in {:.2?}",
        cfg.n,
        cfg.l,
        rb.m,
        cfg.level,
        t0.elapsed()
    );
    Ok(OfflineDb {
        n: cfg.n,
        m: rb.m,
        l: cfg.l,
        level: cfg.level,
        seed: cfg.seed,
        rb,
        liftings,
        bricks,
        format_version: FORMAT_VERSION,
    })
}

impl OfflineDb {
    /// The database restricted to the first `m` POD modes of every index.
    pub fn truncate(&self, m: usize) -> Result<OfflineDb> {
        let bricks = self.bricks.truncate(m)?;
        let mut rb = self.rb.clone();
        for (b, s) in rb.modes.iter_mut().zip(rb.singular_values.iter_mut()) {
            b.truncate(m);
            s.truncate(m);
        }
        rb.m = m;
        rb.degenerate = m == 0;
        Ok(OfflineDb {
            m,
            rb,
            bricks,
            liftings: self.liftings.clone(),
            ..*self
        })
    }

    pub fn triangulation(&self) -> Result<RefTriangulation> {
        RefTriangulation::new(self.n, self.level)
    }

    pub fn n_nodes(&self) -> usize {
        self.liftings.first().map_or(0, Vec::len)
    }

    pub fn check_n(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::Dimension(format!(
                "offline database is for N = {}, element has N = {n}",
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OfflineDbHeader {
    n: usize,
    m: usize,
    l: usize,
    level: u32,
    seed: u64,
    n_nodes: usize,
    degenerate: bool,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    fn mat(&mut self, a: &DMatrix<f64>) {
        // column-major, as stored
        self.f64s(a.as_slice());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, k: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::Format("unexpected end of data".into()));
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("size overflow".into()))
    }
    fn f64s(&mut self, k: usize) -> Result<Vec<f64>> {
        let bytes = self.take(k.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn mat(&mut self, r: usize, c: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_vec(r, c, self.f64s(r * c)?))
    }
}

/// Serializes to the little-endian binary layout with a trailing SHA-256.
pub fn encode_offline_db(db: &OfflineDb) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(db.n as u64);
    w.u64(db.m as u64);
    w.u64(db.l as u64);
    w.u32(db.level);
    w.u64(db.seed);
    w.u64(db.n_nodes() as u64);
    w.u32(db.rb.degenerate as u32);
    for j in 0..db.n {
        for mode in &db.rb.modes[j] {
            w.f64s(mode);
        }
        w.f64s(&db.rb.singular_values[j]);
        w.u64(db.rb.gram_eigenvalues[j].len() as u64);
        w.f64s(&db.rb.gram_eigenvalues[j]);
    }
    for lift in &db.liftings {
        w.f64s(lift);
    }
    let b = &db.bricks;
    for arr in [&b.axx, &b.axt, &b.att, &b.mxx, &b.mxt, &b.mtt, &b.fan_x, &b.fan_t] {
        for a in arr.iter() {
            w.mat(a);
        }
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

pub fn decode_offline_db(bytes: &[u8]) -> Result<OfflineDb> {
    if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not an offline database".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }
    let mut r = Reader {
        buf: body,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let h = OfflineDbHeader {
        n: r.usize()?,
        m: r.usize()?,
        l: r.usize()?,
        level: r.u32()?,
        seed: r.u64()?,
        n_nodes: r.usize()?,
        degenerate: r.u32()? != 0,
    };
    if h.n < 3 || h.m > h.l {
        return Err(Error::Format(format!("inconsistent header {h:?}")));
    }
    let (n, m, nm) = (h.n, h.m, h.n * h.m);
    let mut modes = Vec::with_capacity(n);
    let mut svs = Vec::with_capacity(n);
    let mut grams = Vec::with_capacity(n);
    for _ in 0..n {
        modes.push((0..m).map(|_| r.f64s(h.n_nodes)).collect::<Result<Vec<_>>>()?);
        svs.push(r.f64s(m)?);
        let k = r.usize()?;
        grams.push(r.f64s(k)?);
    }
    let liftings = (0..n).map(|_| r.f64s(h.n_nodes)).collect::<Result<Vec<_>>>()?;
    let mut read = |count: usize, rows: usize, cols: usize| -> Result<Vec<DMatrix<f64>>> {
        (0..count).map(|_| r.mat(rows, cols)).collect()
    };
    let bricks = BrickDb {
        n,
        m,
        axx: read(4 * n, nm, nm)?,
        axt: read(4 * n, nm, n)?,
        att: read(4 * n, n, n)?,
        mxx: read(n, nm, nm)?,
        mxt: read(n, nm, n)?,
        mtt: read(n, n, n)?,
        fan_x: read(n, n + 1, nm)?,
        fan_t: read(n, n + 1, n)?,
    };
    if r.pos != body.len() {
        return Err(Error::Format(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(OfflineDb {
        n,
        m,
        l: h.l,
        level: h.level,
        seed: h.seed,
        rb: RbSpace {
            n,
            m,
            modes,
            singular_values: svs,
            gram_eigenvalues: grams,
            degenerate: h.degenerate,
        },
        liftings,
        bricks,
        format_version: version,
    })
}

pub fn save_offline_db(db: &OfflineDb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_offline_db(db)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_offline_db(path: impl AsRef<Path>) -> Result<OfflineDb> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_offline_db(&bytes)
}

/// Directory of cached databases keyed by their build configuration.
#[derive(Clone, Debug)]
pub struct DbStore {
    dir: PathBuf,
}

impl DbStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DbStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, cfg: &OfflineConfig) -> PathBuf {
        let target = match cfg.target {
            PodTarget::Modes(m) => format!("M{m}"),
            PodTarget::Energy(t) => format!("E{t:e}"),
        };
        let s = &cfg.sampling;
        let mut name = format!(
            "rbvem_N{}_L{}_{}_lev{}_seed{}",
            cfg.n, cfg.l, target, cfg.level, cfg.seed
        );
        if *s != SamplingOptions::default() {
            name.push_str(&format!("_r{}_j{}_t{}", s.r_min, s.angle_jitter, s.max_tries));
        }
        self.dir.join(name + ".rbdb")
    }

    /// Loads the cached database for `cfg`, building and saving it if absent
    /// or unreadable.
    pub fn get_or_build(&self, cfg: &OfflineConfig) -> Result<OfflineDb> {
        let path = self.path_for(cfg);
        if path.exists() {
            match load_offline_db(&path) {
                Ok(db) if db.n == cfg.n && db.level == cfg.level => return Ok(db),
                Ok(_) => log::warn!("{} does not match its key, rebuilding", path.display()),
                Err(e) => log::warn!("discarding {}: {e}", path.display()),
            }
        }
        let db = build_offline_db(cfg)?;
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        save_offline_db(&db, &path)?;
        Ok(db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OfflineDb {
        let cfg = OfflineConfig {
            l: 6,
            level: 2,
            ..OfflineConfig::new(4, 2)
        };
        build_offline_db(&cfg).unwrap()
    }

    fn bits(a: &[DMatrix<f64>]) -> Vec<u64> {
        a.iter().flat_map(|m| m.iter().map(|v| v.to_bits())).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let db = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.rbdb");
        save_offline_db(&db, &path).unwrap();
        let back = load_offline_db(&path).unwrap();
        assert_eq!((back.n, back.m, back.l, back.level, back.seed), (4, 2, 6, 2, 0));
        assert_eq!(back.bricks, db.bricks);
        assert_eq!(bits(&back.bricks.axx), bits(&db.bricks.axx));
        assert_eq!(back.liftings, db.liftings);
        assert_eq!(back.rb.modes, db.rb.modes);
        assert_eq!(back.rb.gram_eigenvalues, db.rb.gram_eigenvalues);
        assert_eq!(encode_offline_db(&back), encode_offline_db(&db));
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode_offline_db(&small());
        assert!(matches!(
            decode_offline_db(&bytes[..bytes.len() - 100]),
            Err(Error::Checksum)
        ));
        let mut flipped = bytes.clone();
        flipped[200] ^= 1;
        assert!(matches!(decode_offline_db(&flipped), Err(Error::Checksum)));
        // a newer version with a valid checksum
        let mut body = bytes[..bytes.len() - 32].to_vec();
        body[8..12].copy_from_slice(&2u32.to_le_bytes());
        let d = Sha256::digest(&body);
        body.extend_from_slice(&d);
        assert!(matches!(
            decode_offline_db(&body),
            Err(Error::Version { found: 2, expected: 1 })
        ));
        assert!(matches!(decode_offline_db(b"garbage"), Err(Error::Format(_))));
        assert!(small().check_n(5).is_err());
    }

    #[test]
    fn truncate_matches_direct_build() {
        let cfg = OfflineConfig {
            l: 6,
            level: 2,
            ..OfflineConfig::new(4, 3)
        };
        let big = build_offline_db(&cfg).unwrap();
        let direct = small();
        let t = big.truncate(2).unwrap();
        assert_eq!(t.rb.modes, direct.rb.modes);
        for (a, b) in t.bricks.axx.iter().zip(&direct.bricks.axx) {
            assert!((a - b).abs().max() < 1e-13);
        }
    }

    #[test]
    fn store_caches_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let store = DbStore::new(dir.path());
        let cfg = OfflineConfig {
            l: 4,
            level: 1,
            ..OfflineConfig::new(3, 1)
        };
        let a = store.get_or_build(&cfg).unwrap();
        assert!(store.path_for(&cfg).exists());
        let b = store.get_or_build(&cfg).unwrap();
        assert_eq!(a.bricks, b.bricks);
    }
}
