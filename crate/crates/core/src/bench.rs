//! Trace persistence, multi-seed experiment configs, and summaries.
//!
//! Trace files are named `<family>__rho<ρ>__seed<s>.csv`; `summarize`
//! recovers the grouping from the name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::al::{DualState, KktResidual};
use crate::dpalm::{dpalm_run, DresMode, IterationRecord, RunResult, SolverConfig, Status};
use crate::error::{param, Error, Result};
use crate::instances::{lcqp_doc, qcqp_doc, rnls_doc, InstanceDoc, RNLS_Q_SHIFT};

pub const TRACE_HEADER: &str = "k,beta,v,alpha,pres,dres,cs,inner_iters,grad_evals,wall_ms";
const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "beta",
    "v",
    "alpha",
    "pres",
    "dres",
    "cs",
    "inner_iters",
    "grad_evals",
    "wall_ms",
];

/// Renders the trace; floats carry 17 significant digits so they read back exactly.
pub fn trace_to_csv(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            r.k, r.beta, r.v, r.alpha, r.pres, r.dres, r.cs, r.inner_iters, r.grad_evals, r.wall_ms
        );
    }
    out
}

/// Writes `contents` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("trace");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_trace(path: impl AsRef<Path>, records: &[IterationRecord]) -> Result<()> {
    write_atomic(path.as_ref(), &trace_to_csv(records))
}

fn schema(path: &Path, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Parses a trace by header name; a missing column is a schema error naming the file.
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<IterationRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let mut idx = [0usize; 10];
    for (slot, col) in idx.iter_mut().zip(TRACE_COLUMNS) {
        *slot = header
            .iter()
            .position(|&h| h == col)
            .ok_or_else(|| schema(path, format!("missing column {col:?}")))?;
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(schema(
                path,
                format!("line {}: expected {} fields, got {}", lineno + 2, header.len(), cells.len()),
            ));
        }
        let f = |c: usize| -> Result<f64> {
            cells[idx[c]]
                .trim()
                .parse()
                .map_err(|_| schema(path, format!("line {}: bad {} value {:?}", lineno + 2, TRACE_COLUMNS[c], cells[idx[c]])))
        };
        let u = |c: usize| -> Result<usize> {
            cells[idx[c]]
                .trim()
                .parse()
                .map_err(|_| schema(path, format!("line {}: bad {} value {:?}", lineno + 2, TRACE_COLUMNS[c], cells[idx[c]])))
        };
        records.push(IterationRecord {
            k: u(0)?,
            beta: f(1)?,
            v: f(2)?,
            alpha: f(3)?,
            pres: f(4)?,
            dres: f(5)?,
            cs: f(6)?,
            inner_iters: u(7)?,
            grad_evals: u(8)?,
            wall_ms: f(9)?,
        });
    }
    Ok(records)
}

pub fn trace_file_name(family: &str, rho: f64, seed: u64) -> String {
    format!("{family}__rho{rho}__seed{seed}.csv")
}

/// Inverse of [`trace_file_name`].
pub fn parse_trace_name(path: &Path) -> Result<(String, f64, u64)> {
    let bad = || schema(path, "file name is not <family>__rho<ρ>__seed<s>.csv");
    let stem = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_suffix(".csv"))
        .ok_or_else(bad)?;
    let parts: Vec<&str> = stem.split("__").collect();
    let [family, rho, seed] = parts[..] else { return Err(bad()) };
    let rho = rho.strip_prefix("rho").and_then(|r| r.parse().ok()).ok_or_else(bad)?;
    let seed = seed.strip_prefix("seed").and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    Ok((family.to_string(), rho, seed))
}

/// Mean and population variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.max(0.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub var: f64,
}

impl Stat {
    fn of(xs: &[f64]) -> Self {
        let (mean, var) = mean_var(xs);
        Self { mean, var }
    }
}

/// Per-(family, ρ) aggregate over seeds of final-row residuals and totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: String,
    pub rho: f64,
    pub runs: usize,
    pub pres: Stat,
    pub dres: Stat,
    pub cs: Stat,
    /// Total wall time in milliseconds.
    pub time: Stat,
    pub grad_evals: Stat,
    /// Share of instances where this method was best; no baselines are run.
    pub best_share: Option<f64>,
}

pub const SUMMARY_HEADER: &str = "family,rho,runs,pres_mean,pres_var,dres_mean,dres_var,cs_mean,cs_var,time_mean,time_var,grad_evals_mean,grad_evals_var,best_share";

pub fn summarize(paths: &[PathBuf]) -> Result<Vec<SummaryRow>> {
    // (family, ρ bits) → final rows
    let mut groups: BTreeMap<(String, u64), Vec<IterationRecord>> = BTreeMap::new();
    for path in paths {
        let (family, rho, _) = parse_trace_name(path)?;
        let trace = read_trace(path)?;
        let last = *trace.last().ok_or_else(|| schema(path, "trace has no rows"))?;
        groups.entry((family, rho.to_bits())).or_default().push(last);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((family, bits), last)| {
            let col = |f: fn(&IterationRecord) -> f64| Stat::of(&last.iter().map(f).collect::<Vec<_>>());
            SummaryRow {
                family,
                rho: f64::from_bits(bits),
                runs: last.len(),
                pres: col(|r| r.pres),
                dres: col(|r| r.dres),
                cs: col(|r| r.cs),
                time: col(|r| r.wall_ms),
                grad_evals: col(|r| r.grad_evals as f64),
                best_share: None,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.family.cmp(&b.family).then(a.rho.total_cmp(&b.rho)));
    Ok(rows)
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.family,
            r.rho,
            r.runs,
            r.pres.mean,
            r.pres.var,
            r.dres.mean,
            r.dres.var,
            r.cs.mean,
            r.cs.var,
            r.time.mean,
            r.time.var,
            r.grad_evals.mean,
            r.grad_evals.var,
            r.best_share.map(|s| s.to_string()).unwrap_or_default()
        );
    }
    out
}

/// Generator recipe. `rho` is the weak-convexity constant for LCQP/QCQP;
/// for NLLS it is derived from the data and the sweep value is ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum FamilySpec {
    Lcqp { n: usize, d: usize },
    Qcqp { m: usize, d: usize },
    Rnls { m: usize, n: usize, d: usize },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Lcqp { .. } => "lcqp",
            FamilySpec::Qcqp { .. } => "qcqp",
            FamilySpec::Rnls { .. } => "rnls",
        }
    }

    pub fn generate(&self, rho: f64, seed: u64) -> Result<InstanceDoc> {
        match *self {
            FamilySpec::Lcqp { n, d } => lcqp_doc(n, d, rho, seed),
            FamilySpec::Qcqp { m, d } => qcqp_doc(m, d, rho, seed),
            FamilySpec::Rnls { m, n, d } => rnls_doc(m, n, d, RNLS_Q_SHIFT, seed),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub family: FamilySpec,
    /// Weak-convexity sweep; empty means a single run at the generator's own ρ.
    #[serde(default)]
    pub rho: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub solver: SolverConfig<f64>,
    pub out_dir: PathBuf,
    /// Solves per (ρ, seed); the trace with the smallest total wall time is kept.
    #[serde(default = "one")]
    pub repetitions: usize,
}

/// One (ρ, seed) cell of an experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Job {
    pub rho: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| schema(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(param("experiment needs at least one seed"));
        }
        if self.repetitions == 0 {
            return Err(param("repetitions must be at least 1"));
        }
        if self.rho.is_empty() && !matches!(self.family, FamilySpec::Rnls { .. }) {
            return Err(param(format!("{} experiments need a rho sweep", self.family.name())));
        }
        self.solver.validate()
    }

    pub fn jobs(&self) -> Vec<Job> {
        let rhos = if self.rho.is_empty() { vec![f64::NAN] } else { self.rho.clone() };
        rhos.iter()
            .flat_map(|&rho| self.seeds.iter().map(move |&seed| Job { rho, seed }))
            .collect()
    }

    /// Generates, solves, and writes the trace of one job. Returns the trace path.
    pub fn run_job(&self, job: Job) -> Result<(PathBuf, RunResult<f64>)> {
        let doc = self.family.generate(job.rho, job.seed)?;
        let inst = doc.build::<f64>()?;
        let mut best: Option<RunResult<f64>> = None;
        for _ in 0..self.repetitions {
            let run = dpalm_run(&inst, &self.solver)?;
            let time = |r: &RunResult<f64>| r.trace.last().map_or(0.0, |t| t.wall_ms);
            if best.as_ref().is_none_or(|b| time(&run) < time(b)) {
                best = Some(run);
            }
        }
        let run = best.expect("at least one repetition");
        let path = self.out_dir.join(trace_file_name(self.family.name(), doc.rho, job.seed));
        write_trace(&path, &run.trace)?;
        Ok((path, run))
    }
}

/// Result document written next to a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: Status,
    pub k_final: usize,
    pub residuals: KktResidual<f64>,
    pub dres_mode: DresMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualState<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(run: &RunResult<f64>, with_x: bool, with_dual: bool) -> Self {
        Self {
            status: run.status,
            k_final: run.k_final(),
            residuals: run.residuals,
            dres_mode: run.dres_mode,
            x: with_x.then(|| run.x.clone()),
            dual: with_dual.then(|| run.multipliers.clone()),
            error: run.error.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, grad_evals: usize) -> IterationRecord {
        IterationRecord {
            k,
            beta: 1.0 / 3.0,
            v: f64::INFINITY,
            alpha: 0.1 + 0.2,
            pres: 1e-300,
            dres: 7.0e-4,
            cs: 0.0,
            inner_iters: 5,
            grad_evals,
            wall_ms: 0.25,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(trace_to_csv(&[]), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let recs = vec![rec(1, 10), rec(2, 30)];
        write_trace(&path, &recs).unwrap();
        assert_eq!(read_trace(&path).unwrap(), recs);
        // no temp file left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn summary_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join(trace_file_name("lcqp", 1.0, 1));
        let b = dir.path().join(trace_file_name("lcqp", 1.0, 2));
        let c = dir.path().join(trace_file_name("lcqp", 0.1, 1));
        write_trace(&a, &[rec(1, 20), rec(2, 100)]).unwrap();
        write_trace(&b, &[rec(1, 300)]).unwrap();
        write_trace(&c, &[rec(1, 300)]).unwrap();
        let rows = summarize(&[a, b, c]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].rho, rows[0].runs, rows[0].grad_evals.var), (0.1, 1, 0.0));
        assert_eq!(rows[1].grad_evals, Stat { mean: 200.0, var: 10000.0 });
        assert!(summary_to_csv(&rows).starts_with(SUMMARY_HEADER));
    }

    #[test]
    fn missing_column_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(trace_file_name("qcqp", 1.0, 3));
        fs::write(&path, "k,beta,v,alpha,pres,dres,inner_iters,grad_evals,wall_ms\n").unwrap();
        let err = summarize(std::slice::from_ref(&path)).unwrap_err();
        assert!(matches!(&err, Error::Schema { path: p, .. } if *p == path));
        assert!(err.to_string().contains("cs"));
    }

    #[test]
    fn trace_names_parse_back() {
        let name = trace_file_name("rnls", 12.649110640673518, 42);
        let (f, r, s) = parse_trace_name(Path::new(&name)).unwrap();
        assert_eq!((f.as_str(), r, s), ("rnls", 12.649110640673518, 42));
        assert!(parse_trace_name(Path::new("x.csv")).is_err());
    }

    #[test]
    fn experiment_config_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"family":"lcqp","n":2,"d":6,"rho":[1.0],"seeds":[1,2],"out_dir":"o"}"#).unwrap();
        assert_eq!(cfg.family, FamilySpec::Lcqp { n: 2, d: 6 });
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.jobs().len(), 2);
        cfg.validate().unwrap();
    }
}
