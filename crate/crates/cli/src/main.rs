use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dpalm::bench::{summarize, summary_to_csv, trace_file_name, write_atomic, write_trace, ExperimentConfig, FamilySpec, RunReport};
use dpalm::dpalm::DEFAULT_C4;
use dpalm::{dpalm_run, Case, Config, Error, InstanceDoc, ScheduleRule, Status, StopMetric, TolerancePolicy};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "dpalm", version, about = "Damped proximal augmented Lagrangian solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it as JSON.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance, from a file or a generator spec.
    Solve {
        /// Instance JSON file.
        #[arg(long, conflicts_with = "family")]
        instance: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for the trace CSV and the result JSON.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Include the final iterate in the result JSON.
        #[arg(long)]
        save_x: bool,
        /// Include the final multipliers in the result JSON.
        #[arg(long)]
        save_dual: bool,
    },
    /// Run a multi-seed sweep described by an experiment config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write zeros in the wall_ms column.
        #[arg(long)]
        no_timing: bool,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Fold trace files (or directories of them) into a summary CSV.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lcqp,
    Qcqp,
    Rnls,
}

#[derive(Args)]
#[command(next_help_heading = "Generator")]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Number of equality constraints.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    d: usize,
    /// Number of inequality constraints (QCQP) or residuals (NLLS).
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weak-convexity constant. Generator input for LCQP/QCQP; a solver override otherwise.
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
}

impl GenArgs {
    fn spec(&self) -> Option<FamilySpec> {
        let (n, d, m) = (self.n, self.d, self.m);
        self.family.map(|f| match f {
            Family::Lcqp => FamilySpec::Lcqp { n, d },
            Family::Qcqp => FamilySpec::Qcqp { m, d },
            Family::Rnls => FamilySpec::Rnls { m, n, d },
        })
    }

    fn generates_rho(&self) -> bool {
        matches!(self.family, Some(Family::Lcqp | Family::Qcqp))
    }

    fn doc(&self) -> Result<InstanceDoc, Error> {
        let spec = self.spec().ok_or_else(|| Error::Usage("--family is required".into()))?;
        spec.generate(self.rho.unwrap_or(1.0), self.seed)
    }
}

#[derive(Args)]
#[command(next_help_heading = "Solver")]
struct SolverArgs {
    /// Base solver config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta0: Option<f64>,
    /// Damping constant; `inf` gives the undamped dual step.
    #[arg(long, allow_negative_numbers = true)]
    v0: Option<f64>,
    /// sqrt-default | sqrt-plain | full-dual-alt
    #[arg(long)]
    schedule: Option<ScheduleRule>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// I | II | III (default: from the objective).
    #[arg(long)]
    case: Option<Case>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    /// theory[:c4] | fixed[:eps_bar]
    #[arg(long)]
    tol_policy: Option<String>,
    /// full-kkt | nlls-metric
    #[arg(long)]
    metric: Option<StopMetric>,
    #[arg(long)]
    no_timing: bool,
}

fn parse_tol_policy(s: &str, eps: f64) -> Result<TolerancePolicy<f64>, Error> {
    let (kind, val) = match s.split_once(':') {
        Some((k, v)) => {
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Parameter(format!("bad --tol-policy value {v:?}")))?;
            (k, Some(v))
        }
        None => (s, None),
    };
    match kind {
        "theory" => Ok(TolerancePolicy::Theory {
            c4: val.unwrap_or(DEFAULT_C4),
        }),
        "fixed" => Ok(TolerancePolicy::Fixed {
            eps_bar: val.unwrap_or(eps / 8.0),
        }),
        _ => Err(Error::Parameter(format!(
            "--tol-policy must be theory[:c4] or fixed[:eps_bar], got {s:?}"
        ))),
    }
}

impl SolverArgs {
    fn build(&self, rho: Option<f64>) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)?;
                serde_json::from_str(&text).map_err(|e| Error::Schema {
                    path: p.clone(),
                    msg: e.to_string(),
                })?
            }
            None => Config::default(),
        };
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.beta0 {
            cfg.schedule.beta0 = v;
        }
        if let Some(v) = self.v0 {
            cfg.schedule.v0 = v;
        }
        if let Some(v) = self.schedule {
            cfg.schedule.rule = v;
        }
        if let Some(v) = self.max_outer {
            cfg.max_outer = v;
        }
        if let Some(v) = self.case {
            cfg.case = Some(v);
        }
        if let Some(v) = self.nu {
            cfg.nu = v;
        }
        if let Some(v) = self.metric {
            cfg.metric = v;
        }
        if let Some(s) = &self.tol_policy {
            cfg.tol_policy = Some(parse_tol_policy(s, cfg.eps)?);
        }
        if rho.is_some() {
            cfg.rho = rho;
        }
        if self.no_timing {
            cfg.timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report_path(trace: &Path) -> PathBuf {
    trace.with_extension("json")
}

fn write_report(trace: &Path, report: &RunReport) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(report)?;
    write_atomic(&report_path(trace), &(json + "\n"))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Command::Gen { gen, out } => {
            let doc = gen.doc()?;
            emit(&(doc.to_json()? + "\n"), out.as_deref())?;
            Ok(0)
        }
        Command::Solve {
            instance,
            gen,
            solver,
            out,
            save_x,
            save_dual,
        } => {
            let (doc, seed) = match &instance {
                Some(p) => (InstanceDoc::load(p)?, None),
                None => (gen.doc()?, Some(gen.seed)),
            };
            let rho_override = if instance.is_none() && gen.generates_rho() {
                None
            } else {
                gen.rho
            };
            let cfg = solver.build(rho_override)?;
            let inst = doc.build::<f64>()?;
            let result = dpalm_run(&inst, &cfg)?;
            let rho = cfg.rho.unwrap_or(doc.rho);
            let trace = match (&instance, seed) {
                (Some(p), _) => {
                    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
                    out.join(format!("{stem}.csv"))
                }
                (None, seed) => out.join(trace_file_name(&doc.family, rho, seed.unwrap_or(0))),
            };
            write_trace(&trace, &result.trace)?;
            let report = RunReport::new(&result, save_x, save_dual);
            write_report(&trace, &report)?;
            println!(
                "{} k={} pres={:.3e} dres={:.3e} cs={:.3e} trace={}",
                result.status,
                result.k_final(),
                result.residuals.pres,
                result.residuals.dres,
                result.residuals.cs,
                trace.display()
            );
            if let Some(e) = &result.error {
                eprintln!("inner solver error: {e}");
            }
            Ok(if result.status == Status::InnerError { EXIT_FAILURE } else { 0 })
        }
        Command::Bench {
            config,
            out,
            no_timing,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if no_timing {
                cfg.solver.timing = false;
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Usage(e.to_string()))?;
            let jobs = cfg.jobs();
            let results: Vec<_> = pool.install(|| {
                jobs.par_iter()
                    .map(|&job| {
                        let (trace, run) = cfg.run_job(job)?;
                        write_report(&trace, &RunReport::new(&run, false, false))?;
                        Ok::<_, Error>((trace, run.status))
                    })
                    .collect()
            });
            let mut failed = false;
            for (job, res) in jobs.iter().zip(results) {
                match res {
                    Ok((trace, status)) => {
                        failed |= status == Status::InnerError;
                        println!("{status} {}", trace.display());
                    }
                    Err(e) => {
                        failed = true;
                        eprintln!("seed {} rho {}: {e}", job.seed, job.rho);
                    }
                }
            }
            Ok(if failed { EXIT_FAILURE } else { 0 })
        }
        Command::Summarize { traces, out } => {
            let mut files = Vec::new();
            for p in traces {
                if p.is_dir() {
                    let mut inner: Vec<PathBuf> = fs::read_dir(&p)?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                        .collect();
                    inner.sort();
                    files.extend(inner);
                } else {
                    files.push(p);
                }
            }
            let rows = summarize(&files)?;
            emit(&summary_to_csv(&rows), out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Parameter(_) | Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            })
        }
    }
}
