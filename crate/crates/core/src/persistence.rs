//! On-disk formats: binary matrix files, TOML run manifests and CSV
//! iteration traces. All writers are deterministic.
//!
//! Matrix file layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       6     magic "FRMAT1"
//! 6       1     element kind (1 = f64)
//! 7       1     layout (0 = row-major)
//! 8       8     rows (u64)
//! 16      8     cols (u64)
//! 24      8*rows*cols payload
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::hash::Hasher;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::CustomProblem;
use crate::fom::Trajectory;
use crate::inverse::{IdentificationResult, TraceRow};

pub const MAGIC: &[u8; 6] = b"FRMAT1";
pub const HEADER_LEN: usize = 24;
const KIND_F64: u8 = 1;
const LAYOUT_ROW_MAJOR: u8 = 0;

pub const TRACE_HEADER: &str = "k,beta,objective,step,backtracks";

/// 64-bit FNV-1a of a byte string.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn file_checksum(path: &Path) -> Result<u64> {
    Ok(fnv1a(&fs::read(path)?))
}

/// Serialized bytes of a matrix file.
pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * rows * cols);
    out.extend_from_slice(MAGIC);
    out.push(KIND_F64);
    out.push(LAYOUT_ROW_MAJOR);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for i in 0..rows {
        for j in 0..cols {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>> {
    let bad = |reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..6] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    if bytes[6] != KIND_F64 {
        return Err(bad(format!("unsupported element kind {}", bytes[6])));
    }
    if bytes[7] != LAYOUT_ROW_MAJOR {
        return Err(bad(format!("unsupported layout {}", bytes[7])));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"));
    let (rows, cols) = (word(8), word(16));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| bad(format!("{rows}x{cols} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(bad(format!(
            "payload is {} bytes, {rows}x{cols} needs {expected}",
            payload.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}

/// Writes `m` and returns the FNV-1a checksum of the file contents.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<u64> {
    let bytes = encode_matrix(m);
    fs::write(path, &bytes)?;
    Ok(fnv1a(&bytes))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    decode_matrix(&fs::read(path)?, path)
}

/// Reads a matrix file after checking it against a recorded checksum.
pub fn read_matrix_checked(path: &Path, expected: u64) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path)?;
    let found = fnv1a(&bytes);
    if found != expected {
        return Err(Error::ChecksumMismatch {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    decode_matrix(&bytes, path)
}

/// Trajectory as an `N x (M+1)` matrix, one time level per column.
pub fn trajectory_matrix(t: &Trajectory) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, t.len(), |i, m| t.states[m][i])
}

/// Single-column matrix holding 1-based indices.
pub fn index_matrix(indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_iterator(indices.len(), 1, indices.iter().map(|&i| (i + 1) as f64))
}

/// Inverse of [`index_matrix`]; returns 0-based indices.
pub fn indices_from_matrix(m: &DMatrix<f64>) -> Result<Vec<usize>> {
    m.iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v < 9.0e15 {
                Ok(v as usize - 1)
            } else {
                Err(Error::Manifest(format!("{v} is not a 1-based index")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub dim: usize,
    /// Interior nodes per axis.
    pub n: usize,
    /// Time steps.
    pub steps: usize,
    pub h: f64,
    pub dt: f64,
    pub final_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRecord {
    pub newton: f64,
    pub newton_max_iter: usize,
    pub pcg: f64,
    pub rom_newton: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the manifest's directory.
    pub path: String,
    /// FNV-1a as 16 hex digits.
    pub checksum: String,
}

impl FileRecord {
    pub fn checksum_value(&self) -> Result<u64> {
        u64::from_str_radix(&self.checksum, 16)
            .map_err(|_| Error::Manifest(format!("bad checksum `{}` for {}", self.checksum, self.path)))
    }
}

/// Description of an offline run and the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Benchmark case name or `custom`.
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomProblem>,
    pub grid: GridRecord,
    pub samples: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deim_points: Option<usize>,
    pub tolerances: ToleranceRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub files: BTreeMap<String, FileRecord>,
}

impl RunManifest {
    pub fn new(problem: impl Into<String>, grid: GridRecord, samples: Vec<f64>, tolerances: ToleranceRecord) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            problem: problem.into(),
            custom: None,
            grid,
            samples,
            rank: None,
            deim_points: None,
            tolerances,
            seed: None,
            files: BTreeMap::new(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    /// Parses the manifest and checks every referenced file.
    pub fn read(path: &Path) -> Result<Self> {
        let m = Self::from_toml(&fs::read_to_string(path)?)?;
        m.verify(base_dir(path))?;
        Ok(m)
    }

    /// Every referenced file exists and matches its checksum.
    pub fn verify(&self, base: &Path) -> Result<()> {
        for rec in self.files.values() {
            let p = base.join(&rec.path);
            if !p.is_file() {
                return Err(Error::Manifest(format!("referenced file {} is missing", p.display())));
            }
            let expected = rec.checksum_value()?;
            let found = file_checksum(&p)?;
            if found != expected {
                return Err(Error::ChecksumMismatch {
                    path: p,
                    expected,
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn record(&mut self, name: impl Into<String>, relative_path: impl Into<String>, checksum: u64) {
        self.files.insert(
            name.into(),
            FileRecord {
                path: relative_path.into(),
                checksum: format!("{checksum:016x}"),
            },
        );
    }

    /// Writes `m` next to the manifest and records it under `name`.
    pub fn store_matrix(&mut self, base: &Path, name: &str, m: &DMatrix<f64>) -> Result<PathBuf> {
        let file = format!("{name}.frmat");
        let path = base.join(&file);
        let sum = write_matrix(&path, m)?;
        self.record(name, file, sum);
        Ok(path)
    }

    /// Reads the matrix recorded under `name`, verifying its checksum.
    pub fn load_matrix(&self, base: &Path, name: &str) -> Result<DMatrix<f64>> {
        let rec = self
            .files
            .get(name)
            .ok_or_else(|| Error::Manifest(format!("manifest has no `{name}` entry")))?;
        read_matrix_checked(&base.join(&rec.path), rec.checksum_value()?)
    }

    pub fn has(&self, name: &str) -> bool {
        self.files.contains_key(name)
    }
}

/// Directory that relative manifest paths are resolved against.
pub fn base_dir(manifest: &Path) -> &Path {
    match manifest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

pub fn format_trace(rows: &[TraceRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "a trace holds at least the initial point".into(),
        ));
    }
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{}\n",
            r.k, r.beta, r.objective, r.step, r.backtracks
        ));
    }
    Ok(s)
}

pub fn write_trace(path: &Path, result: &IdentificationResult) -> Result<()> {
    let text = format_trace(&result.trace)?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let bad = |line: usize, reason: &str| Error::MalformedFile {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == TRACE_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 2, "expected 5 fields"));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 2, "bad integer"));
        rows.push(TraceRow {
            k: int(f[0])?,
            beta: float(f[1])?,
            objective: float(f[2])?,
            step: float(f[3])?,
            backtracks: int(f[4])?,
        });
    }
    if rows.is_empty() {
        return Err(bad(2, "empty trace"));
    }
    Ok(rows)
}

/// Plain vector as a single-column matrix file.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<u64> {
    write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 && m.nrows() != 1 {
        return Err(Error::MalformedFile {
            path: path.to_path_buf(),
            reason: format!("{}x{} is not a vector", m.nrows(), m.ncols()),
        });
    }
    Ok(m.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn empty_matrix_is_header_only() {
        let bytes = encode_matrix(&DMatrix::zeros(0, 0));
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[..6], b"FRMAT1");
    }

    #[test]
    fn payload_is_row_major_little_endian() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let bytes = encode_matrix(&m);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[HEADER_LEN + 8..HEADER_LEN + 16], &2.0f64.to_le_bytes());
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.frmat");
        let m = DMatrix::from_fn(63, 256, |i, j| {
            ((i * 7 + j * 13) as f64).sin() / 3.0 + f64::EPSILON * j as f64
        });
        let sum = write_matrix(&p, &m).unwrap();
        let back = read_matrix_checked(&p, sum).unwrap();
        assert_eq!(m.shape(), back.shape());
        assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_and_corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.frmat");
        let sum = write_matrix(&p, &DMatrix::from_element(3, 3, 1.5)).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::MalformedFile { .. })));
        assert!(matches!(
            read_matrix_checked(&p, sum),
            Err(Error::ChecksumMismatch { .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(decode_matrix(&bytes, &p), Err(Error::MalformedFile { .. })));
        assert!(matches!(
            decode_matrix(&bytes[..10], &p),
            Err(Error::MalformedFile { .. })
        ));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    fn manifest() -> RunManifest {
        RunManifest::new(
            "test1",
            GridRecord {
                dim: 1,
                n: 63,
                steps: 64,
                h: 1.0 / 64.0,
                dt: 1.0 / 64.0,
                final_time: 1.0,
            },
            vec![0.2, 0.4, 0.6, 0.8],
            ToleranceRecord {
                newton: 1e-10,
                newton_max_iter: 50,
                pcg: 1e-10,
                rom_newton: 1e-11,
            },
        )
    }

    #[test]
    fn manifest_roundtrip_and_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest();
        m.rank = Some(2);
        m.seed = Some(7);
        m.store_matrix(dir.path(), "basis", &DMatrix::identity(4, 2)).unwrap();
        let path = dir.path().join("run.toml");
        m.write(&path).unwrap();
        let back = RunManifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.load_matrix(dir.path(), "basis").unwrap(), DMatrix::identity(4, 2));

        write_matrix(&dir.path().join("basis.frmat"), &DMatrix::identity(4, 3)).unwrap();
        assert!(matches!(RunManifest::read(&path), Err(Error::ChecksumMismatch { .. })));
        fs::remove_file(dir.path().join("basis.frmat")).unwrap();
        assert!(matches!(RunManifest::read(&path), Err(Error::Manifest(_))));
    }

    #[test]
    fn manifest_text_is_deterministic() {
        let mut a = manifest();
        a.record("z", "z.frmat", 1);
        a.record("a", "a.frmat", 2);
        let mut b = manifest();
        b.record("a", "a.frmat", 2);
        b.record("z", "z.frmat", 1);
        assert_eq!(a.to_toml().unwrap(), b.to_toml().unwrap());
    }

    #[test]
    fn trace_roundtrip() {
        let result = IdentificationResult {
            beta_inv: 0.75,
            iterations: 1,
            converged: true,
            trace: vec![
                TraceRow {
                    k: 0,
                    beta: 0.1,
                    objective: 1.0 / 3.0,
                    step: 0.0,
                    backtracks: 0,
                },
                TraceRow {
                    k: 1,
                    beta: 0.75,
                    objective: 1e-300,
                    step: 0.65,
                    backtracks: 2,
                },
            ],
            wall_time: Duration::ZERO,
            forward_solves: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        write_trace(&p, &result).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("k,beta,objective,step,backtracks\n"));
        assert_eq!(read_trace(&p).unwrap(), result.trace);
    }

    #[test]
    fn empty_trace_is_rejected() {
        assert!(format_trace(&[]).is_err());
    }

    #[test]
    fn indices_roundtrip_one_based() {
        let m = index_matrix(&[0, 5, 3]);
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(indices_from_matrix(&m).unwrap(), vec![0, 5, 3]);
        assert!(indices_from_matrix(&DMatrix::from_element(1, 1, 0.5)).is_err());
    }
}
