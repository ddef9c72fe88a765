//! Prime scans for a fixed `d`: per-prime verdicts, density tables, CSV/JSON
//! output and a resumable checkpoint log.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{primes_in_range, ArithError, SquarefreeD};
use crate::construction::LegendreConfig;
use crate::criterion::{evaluate, q_value_via_construction, EvalOptions, PrimeVerdict};
use crate::qfclassgroup::verify_hypotheses;

pub const SCHEMA_VERSION: u32 = 1;
const CHECKPOINT_MAGIC: &[u8; 8] = b"UIDXCKPT";
const CHECKPOINT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("config: {0}")]
    Config(String),
    #[error("d = {d} fails the hypotheses: {failures}")]
    Hypotheses { d: u64, failures: String },
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

pub type Result<T> = std::result::Result<T, ScanError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(ScanError::Config(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub d: u64,
    pub x: u64,
    pub m_filter: Option<BTreeSet<usize>>,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
    /// Fraction of `m = t-2` members re-checked through the explicit `β`.
    pub construction_rate: f64,
    /// Width of the prime ranges handed to workers.
    pub chunk: u64,
    /// Stop after this many chunks have been written (for interrupted runs).
    pub max_chunks: Option<usize>,
}

impl ScanConfig {
    pub fn new(d: u64, x: u64) -> Self {
        ScanConfig {
            d,
            x,
            m_filter: None,
            workers: 1,
            out: None,
            format: Format::Csv,
            checkpoint: None,
            seed: 0,
            construction_rate: 0.01,
            chunk: 50_000,
            max_chunks: None,
        }
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ScanError::Config(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| ScanError::Config(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "d" => self.d = num(key, value)?,
            "X" | "x" => self.x = num(key, value)?,
            "m" => {
                let set = value
                    .split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<BTreeSet<usize>>>()?;
                self.m_filter = (!set.is_empty()).then_some(set);
            }
            "workers" => self.workers = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            "construction_rate" => self.construction_rate = num(key, value)?,
            "chunk" => self.chunk = num(key, value)?,
            _ => return Err(ScanError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = ScanConfig::new(0, 0);
        cfg.apply_kv(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<SquarefreeD> {
        if self.x < 5 {
            return Err(ScanError::Config(format!("X must be at least 5, got {}", self.x)));
        }
        if self.workers == 0 || self.chunk == 0 {
            return Err(ScanError::Config("workers and chunk must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.construction_rate) {
            return Err(ScanError::Config("construction_rate must lie in [0, 1]".into()));
        }
        let d = SquarefreeD::new(self.d).map_err(|e| ScanError::Config(format!("d: {e}")))?;
        let report = verify_hypotheses(&d);
        if !report.passed() {
            return Err(ScanError::Hypotheses { d: self.d, failures: report.failures.join("; ") });
        }
        Ok(d)
    }

    fn keeps(&self, m: usize) -> bool {
        self.m_filter.as_ref().is_none_or(|s| s.contains(&m))
    }
}

/// One row of the density table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub m: usize,
    pub n_total: u64,
    pub n_in_p: u64,
    pub n_e_real: u64,
    pub n_q2: u64,
    pub freq_q2: Option<f64>,
    pub theory_q2: Option<f64>,
    pub freq_e_real: Option<f64>,
    pub theory_e_real: f64,
    /// `E` reality over every scanned prime with this `m`, members or not.
    pub n_e_real_all: u64,
    pub freq_e_real_all: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub d: u64,
    pub x: u64,
    pub t: usize,
    pub rows: Vec<DensityRow>,
    pub alarms: u64,
}

impl DensitySummary {
    pub fn row(&self, m: usize) -> Option<&DensityRow> {
        self.rows.iter().find(|r| r.m == m)
    }

    /// Frequencies are over members of the family with the given `m`; the
    /// `m = t` row only counts primes.
    pub fn from_records(cfg: &ScanConfig, t: usize, records: &[PrimeVerdict]) -> Self {
        let mut rows: BTreeMap<usize, DensityRow> = BTreeMap::new();
        for m in (0..=t).filter(|&m| cfg.keeps(m)) {
            rows.insert(
                m,
                DensityRow {
                    m,
                    n_total: 0,
                    n_in_p: 0,
                    n_e_real: 0,
                    n_q2: 0,
                    freq_q2: None,
                    theory_q2: (m + 1 == t || m + 2 == t).then(|| 0.5f64.powi(t as i32 - 1)),
                    freq_e_real: None,
                    theory_e_real: 0.5f64.powi(m as i32),
                    n_e_real_all: 0,
                    freq_e_real_all: None,
                },
            );
        }
        let mut alarms = 0;
        for r in records {
            alarms += r.alarms.len() as u64;
            let Some(row) = rows.get_mut(&r.m) else { continue };
            row.n_total += 1;
            row.n_e_real_all += u64::from(r.e_totally_real == Some(true));
            if r.in_p {
                row.n_in_p += 1;
                row.n_e_real += u64::from(r.e_totally_real == Some(true));
                row.n_q2 += u64::from(r.q_direct == Some(2));
            }
        }
        for row in rows.values_mut() {
            if row.n_total > 0 {
                row.freq_e_real_all = Some(row.n_e_real_all as f64 / row.n_total as f64);
            }
            if row.n_in_p > 0 {
                let n = row.n_in_p as f64;
                row.freq_e_real = Some(row.n_e_real as f64 / n);
                if row.theory_q2.is_some() {
                    row.freq_q2 = Some(row.n_q2 as f64 / n);
                }
            }
        }
        DensitySummary { d: cfg.d, x: cfg.x, t, rows: rows.into_values().collect(), alarms }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "m",
            "n_total",
            "n_in_P",
            "n_E_real",
            "n_Q2",
            "freq_Q2",
            "theory_Q2",
            "freq_E_real",
            "theory_E_real",
            "n_E_real_all",
            "freq_E_real_all",
        ])?;
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                r.m.to_string(),
                r.n_total.to_string(),
                r.n_in_p.to_string(),
                r.n_e_real.to_string(),
                r.n_q2.to_string(),
                f(r.freq_q2),
                f(r.theory_q2),
                f(r.freq_e_real),
                f(Some(r.theory_e_real)),
                r.n_e_real_all.to_string(),
                f(r.freq_e_real_all),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for DensitySummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "d = {}, X = {}, t = {}", self.d, self.x, self.t)?;
        writeln!(
            f,
            "{:>3} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "m", "primes", "in_P", "E_real", "Q=2", "freq_Q2", "theory", "freq_E", "theory", "E_all"
        )?;
        let g = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            let tag = if r.m == self.t { " (m = t)" } else { "" };
            writeln!(
                f,
                "{:>3} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}{tag}",
                r.m,
                r.n_total,
                r.n_in_p,
                r.n_e_real,
                r.n_q2,
                g(r.freq_q2),
                g(r.theory_q2),
                g(r.freq_e_real),
                g(Some(r.theory_e_real)),
                g(r.freq_e_real_all),
            )?;
        }
        write!(f, "alarms: {}", self.alarms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub summary: DensitySummary,
    pub records: Vec<PrimeVerdict>,
    /// False when the scan stopped early at `max_chunks`.
    pub complete: bool,
}

fn sampled(seed: u64, p: u64, rate: f64) -> bool {
    rate > 0.0 && ChaCha8Rng::seed_from_u64(seed ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15)).gen_bool(rate)
}

fn scan_prime(d: &SquarefreeD, p: u64, cfg: &ScanConfig) -> PrimeVerdict {
    let mut v = evaluate(d, p, &EvalOptions::default());
    if v.in_p && v.m + 2 == v.t && v.q_direct.is_some() && sampled(cfg.seed, p, cfg.construction_rate)
    {
        let lc = LegendreConfig { height: 20, descent: true };
        match q_value_via_construction(d, p, &lc) {
            Ok(Some(q)) if Some(q) != v.q_direct => {
                v.alarms.push(format!("construction gives Q = {q}"))
            }
            Ok(_) => {}
            Err(e) => v.alarms.push(format!("construction: {e}")),
        }
    }
    v
}

fn scan_chunk(d: &SquarefreeD, lo: u64, hi: u64, cfg: &ScanConfig) -> Vec<PrimeVerdict> {
    primes_in_range(lo, hi)
        .filter(|&p| p % 4 == 1 && !d.d.is_multiple_of(p))
        .map(|p| scan_prime(d, p, cfg))
        .filter(|v| cfg.keeps(v.m))
        .collect()
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    let d = cfg.validate()?;
    let mut records = Vec::new();
    let mut start = 2u64;
    let mut log = match &cfg.checkpoint {
        Some(path) => {
            let (log, done) = Checkpoint::open(path, cfg)?;
            if let Some(last) = done.last() {
                start = last.p + 1;
            }
            records = done;
            Some(log)
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| ScanError::Config(e.to_string()))?;
    let chunks: Vec<(u64, u64)> = (start..=cfg.x)
        .step_by(cfg.chunk as usize)
        .map(|lo| (lo, (lo + cfg.chunk - 1).min(cfg.x)))
        .collect();
    let batch = (cfg.workers * 2).max(1);
    let mut written = 0usize;
    let mut complete = true;
    for group in chunks.chunks(batch) {
        let group = match cfg.max_chunks {
            Some(max) if written + group.len() > max => {
                complete = false;
                &group[..max - written]
            }
            _ => group,
        };
        let parts: Vec<Vec<PrimeVerdict>> = pool.install(|| {
            group.par_iter().map(|&(lo, hi)| scan_chunk(&d, lo, hi, cfg)).collect()
        });
        for part in parts {
            if let Some(log) = log.as_mut() {
                log.append(&part)?;
            }
            records.extend(part);
        }
        written += group.len();
        if !complete {
            break;
        }
    }
    let summary = DensitySummary::from_records(cfg, d.t(), &records);
    Ok(ScanResult { summary, records, complete })
}

/// Column order of the per-prime table.
pub const CSV_HEADER: [&str; 10] =
    ["p", "m", "in_P", "reason", "E_real", "Q_direct", "Q_governing", "a", "b", "alarms"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(v: bool) -> String {
    (v as u8).to_string()
}

pub fn csv_row(v: &PrimeVerdict) -> [String; 10] {
    [
        v.p.to_string(),
        v.m.to_string(),
        flag(v.in_p),
        v.reason.to_string(),
        opt(v.e_totally_real.map(flag)),
        opt(v.q_direct),
        opt(v.q_governing),
        opt(v.decomposition.as_ref().map(|x| x.a)),
        opt(v.decomposition.as_ref().map(|x| x.b)),
        v.alarms.join("; "),
    ]
}

pub fn write_csv<W: Write>(records: &[PrimeVerdict], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record(csv_row(r))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    p: u64,
    m: usize,
    #[serde(rename = "in_P")]
    in_p: bool,
    reason: &'a str,
    #[serde(rename = "E_real")]
    e_real: Option<bool>,
    #[serde(rename = "Q_direct")]
    q_direct: Option<u8>,
    #[serde(rename = "Q_governing")]
    q_governing: Option<u8>,
    a: Option<u64>,
    b: Option<u64>,
    alarms: &'a [String],
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    d: u64,
    #[serde(rename = "X")]
    x: u64,
    summary: &'a DensitySummary,
    records: Vec<JsonRecord<'a>>,
}

pub fn write_json<W: Write>(result: &ScanResult, w: W) -> Result<()> {
    let records = result
        .records
        .iter()
        .map(|v| JsonRecord {
            p: v.p,
            m: v.m,
            in_p: v.in_p,
            reason: v.reason.as_str(),
            e_real: v.e_totally_real,
            q_direct: v.q_direct,
            q_governing: v.q_governing,
            a: v.decomposition.as_ref().map(|x| x.a),
            b: v.decomposition.as_ref().map(|x| x.b),
            alarms: &v.alarms,
        })
        .collect();
    let report = JsonReport {
        schema_version: SCHEMA_VERSION,
        d: result.summary.d,
        x: result.summary.x,
        summary: &result.summary,
        records,
    };
    let mut w = BufWriter::new(w);
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(())
}

/// Writes the records to `out` in the configured format, plus
/// `<out>.summary.csv` for CSV output.
pub fn report(cfg: &ScanConfig, result: &ScanResult, out: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(out)?);
    match cfg.format {
        Format::Csv => {
            write_csv(&result.records, file)?;
            let mut name = out.as_os_str().to_owned();
            name.push(".summary.csv");
            result.summary.write_csv(BufWriter::new(File::create(PathBuf::from(name))?))?;
        }
        Format::Json => write_json(result, file)?,
    }
    Ok(())
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct CheckpointMeta {
    d: u64,
    m_filter: Option<BTreeSet<usize>>,
    seed: u64,
    construction_rate: f64,
}

/// Append-only log: magic, version byte, `[u32 len][meta JSON]`, then frames
/// `[u32 len][u64 p][verdict JSON]`. A torn final frame is dropped on open.
struct Checkpoint {
    file: File,
}

impl Checkpoint {
    fn open(path: &Path, cfg: &ScanConfig) -> Result<(Self, Vec<PrimeVerdict>)> {
        let meta = CheckpointMeta {
            d: cfg.d,
            m_filter: cfg.m_filter.clone(),
            seed: cfg.seed,
            construction_rate: cfg.construction_rate,
        };
        let err = |msg: String| ScanError::Checkpoint { path: path.to_owned(), msg };
        let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        if bytes.is_empty() {
            let body = serde_json::to_vec(&meta)?;
            file.write_all(CHECKPOINT_MAGIC)?;
            file.write_all(&[CHECKPOINT_VERSION])?;
            file.write_all(&(body.len() as u32).to_le_bytes())?;
            file.write_all(&body)?;
            file.sync_data()?;
            return Ok((Checkpoint { file }, Vec::new()));
        }
        if bytes.len() < 13 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(err("not a checkpoint file".into()));
        }
        if bytes[8] != CHECKPOINT_VERSION {
            return Err(err(format!("unsupported version {}", bytes[8])));
        }
        let mlen = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let body = bytes.get(13..13 + mlen).ok_or_else(|| err("truncated header".into()))?;
        let stored: CheckpointMeta = serde_json::from_slice(body)?;
        if stored != meta {
            return Err(err(format!("written for {stored:?}, not {meta:?}")));
        }
        let mut pos = 13 + mlen;
        let mut records = Vec::new();
        while pos + 12 <= bytes.len() {
            let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            let p = u64::from_le_bytes(bytes[pos + 4..pos + 12].try_into().unwrap());
            let Some(body) = bytes.get(pos + 12..pos + 12 + len) else { break };
            let Ok(v) = serde_json::from_slice::<PrimeVerdict>(body) else { break };
            if v.p != p || records.last().is_some_and(|r: &PrimeVerdict| r.p >= p) {
                return Err(err(format!("corrupt frame at offset {pos}")));
            }
            records.push(v);
            pos += 12 + len;
        }
        file.set_len(pos as u64)?;
        file.seek(SeekFrom::Start(pos as u64))?;
        Ok((Checkpoint { file }, records))
    }

    fn append(&mut self, records: &[PrimeVerdict]) -> Result<()> {
        let mut buf = Vec::new();
        for r in records {
            let body = serde_json::to_vec(r)?;
            buf.extend_from_slice(&(body.len() as u32).to_le_bytes());
            buf.extend_from_slice(&r.p.to_le_bytes());
            buf.extend_from_slice(&body);
        }
        self.file.write_all(&buf)?;
        self.file.sync_data()?;
        Ok(())
    }
}
