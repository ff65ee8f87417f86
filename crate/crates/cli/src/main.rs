//! `oneshot` command-line tool.
//!
//! Every failure prints exactly one line of the form `error[kind]: message`
//! to stderr. Budget constraint violations and out-of-range parameters exit
//! with status 2; everything else (bad files, unreadable input, resource caps)
//! exits with status 1.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oneshot::asymptotics::{divergence_series, entropy_series, ConvergenceSeries};
use oneshot::format::{sig, write_csv};
use oneshot::region::{achievable_pair, frontier_csv, frontier_search, EpsilonBudget, RatePair};
use oneshot::sim::{simulate_with, CodebookMode, SimConfig};
use oneshot::smooth::{smooth_conditional_h0, smooth_max_divergence};
use oneshot::{Channel, Error, JointPmf, Pmf};

#[derive(Parser)]
#[command(
    name = "oneshot",
    version,
    about = "One-shot smooth entropies and source coding with a helper"
)]
struct Cli {
    /// Cap on worker threads used by the library (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for anything randomized.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional smooth max entropy H0^eps(X|U) of a joint over X×U.
    Entropy {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Where to write the smoothing witness.
        #[arg(long, default_value = "entropy_witness.json")]
        out: PathBuf,
    },
    /// Smooth max divergence D∞^eps(P‖Q).
    Divergence {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Where to write the smoothing witness φ.
        #[arg(long, default_value = "divergence_witness.json")]
        out: PathBuf,
    },
    /// Achievable rate pair for one helper channel and budget.
    Region {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Optional JSON dump of the rate pair and its witness.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pareto frontier over a grid of helper channels.
    Frontier {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Explicit eps1; with --eps11 this replaces the default budget grid.
        #[arg(long, requires = "eps11")]
        eps1: Option<f64>,
        #[arg(long, requires = "eps1")]
        eps11: Option<f64>,
        /// Helper output alphabet size (default |Y| + 1).
        #[arg(long)]
        u_size: Option<usize>,
        /// Grid resolution: each channel row takes values in multiples of 1/(grid-1).
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long, default_value = "frontier.csv")]
        out: PathBuf,
    },
    /// Monte-Carlo simulation of the random binning and covering code.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Mode::Resampled)]
        mode: Mode,
        /// Override the source rate instead of using the achievable pair.
        #[arg(long)]
        r1: Option<f64>,
        /// Override the helper rate instead of using the achievable pair.
        #[arg(long)]
        r2: Option<f64>,
        #[arg(long, default_value = "simulation.json")]
        out: PathBuf,
    },
    /// Per-symbol convergence series for plotting.
    Converge {
        #[command(subcommand)]
        series: Series,
    },
}

#[derive(Subcommand)]
enum Series {
    /// (1/n) D∞^eps(P^n‖Q^n) for n = 1..n_max.
    Divergence {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value = "divergence_series.csv")]
        out: PathBuf,
    },
    /// (1/n) H0^eps(X^n|Y^n) for n = 1..n_max.
    Entropy {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value = "entropy_series.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Joint pmf over X×Y.
    #[arg(long)]
    joint: PathBuf,
    /// Helper channel P_{U|Y}.
    #[arg(long)]
    helper: PathBuf,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    eps1: f64,
    #[arg(long)]
    eps11: f64,
}

impl BudgetArgs {
    fn budget(&self) -> EpsilonBudget {
        EpsilonBudget::new(self.eps, self.eps1, self.eps11)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Resampled,
    Fixed,
}

/// A failure ready to print: a short machine-readable kind and one line of text.
struct Failure {
    kind: &'static str,
    message: String,
    status: u8,
}

impl Failure {
    fn io(path: &Path, err: io::Error) -> Self {
        Failure {
            kind: "io",
            message: format!("{}: {err}", path.display()),
            status: 1,
        }
    }

    /// Attributes a library error to the file it came from, when known.
    fn from_error(err: Error, file: Option<&Path>) -> Self {
        let prefix = file.map(|p| format!("{}: ", p.display())).unwrap_or_default();
        let (kind, status, message) = match err {
            Error::Constraint(diagnostics) => ("constraint", 2, diagnostics.join("; ")),
            Error::Epsilon(e) => ("constraint", 2, format!("epsilon must lie in [0, 1), got {e}")),
            Error::Usage(m) => ("usage", 1, format!("{prefix}{m}")),
            Error::InvalidDistribution(m) => ("invalid", 1, format!("{prefix}{m}")),
            e @ Error::SupportViolation { .. } => ("domain", 1, format!("{prefix}{e}")),
            Error::Resource { what, required, cap } => {
                ("resource", 1, format!("{what} needs {required} cells, cap is {cap}"))
            }
            Error::Io { path, source } => ("io", 1, format!("{path}: {source}")),
            Error::Parse { path, source } => ("parse", 1, format!("{path}: {source}")),
        };
        Failure {
            kind,
            message: message.replace('\n', " "),
            status,
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::from_error(err, None)
    }
}

type Outcome = Result<(), Failure>;

fn load<T>(path: &Path, loader: fn(&Path) -> oneshot::Result<T>) -> Result<T, Failure> {
    loader(path).map_err(|e| Failure::from_error(e, Some(path)))
}

fn load_pmf(path: &Path) -> Result<Pmf, Failure> {
    load(path, |p| Pmf::load(p))
}

fn load_joint(path: &Path) -> Result<JointPmf, Failure> {
    load(path, |p| JointPmf::load(p))
}

fn load_channel(path: &Path) -> Result<Channel, Failure> {
    load(path, |p| Channel::load(p))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    let mut out = create(path)?;
    writeln!(out, "{text}")
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(path, e))
}

fn write_table(path: &Path, (header, rows): (Vec<String>, Vec<Vec<String>>)) -> Outcome {
    let mut out = create(path)?;
    write_csv(&mut out, &header, &rows)
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(path, e))
}

fn print_rates(rates: &RatePair) {
    println!("r1_bits {}", sig(rates.r1_bits));
    println!("r2_bits {}", sig(rates.r2_bits));
    println!("h0_bits {}", sig(rates.witness.h0_bits));
    println!("max_support {}", rates.witness.max_support);
    println!("divergence_bits {}", sig(rates.witness.divergence_bits));
}

fn print_series(series: &ConvergenceSeries) {
    for e in &series.entries {
        println!("n {} value_bits {}", e.n, sig(e.value_bits));
    }
    println!("target_bits {}", sig(series.target_bits));
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Entropy { joint, eps, out } => {
            let p = load_joint(&joint)?;
            let r = smooth_conditional_h0(&p, eps)?;
            println!("value_bits {}", sig(r.value_bits));
            println!("max_support {}", r.max_support);
            write_json(&out, &r)
        }
        Command::Divergence { p, q, eps, out } => {
            let (pm, qm) = (load_pmf(&p)?, load_pmf(&q)?);
            let r = smooth_max_divergence(&pm, &qm, eps)?;
            println!("value_bits {}", sig(r.value_bits));
            write_json(&out, &r)
        }
        Command::Region { source, budget, out } => {
            let (p, w) = (load_joint(&source.joint)?, load_channel(&source.helper)?);
            let rates = achievable_pair(&p, &w, &budget.budget())?;
            print_rates(&rates);
            match out {
                Some(path) => write_json(&path, &rates),
                None => Ok(()),
            }
        }
        Command::Frontier {
            joint,
            eps,
            eps1,
            eps11,
            u_size,
            grid,
            out,
        } => {
            let p = load_joint(&joint)?;
            let budgets = match (eps1, eps11) {
                (Some(e1), Some(e11)) => vec![EpsilonBudget::new(eps, e1, e11)],
                _ => EpsilonBudget::default_grid(eps),
            };
            let u_size = u_size.unwrap_or(p.shape().get(1).copied().unwrap_or(0) + 1);
            let points = frontier_search(&p, u_size, grid, &budgets)?;
            println!("points {}", points.len());
            write_table(&out, frontier_csv(&points))
        }
        Command::Simulate {
            source,
            budget,
            trials,
            mode,
            r1,
            r2,
            out,
        } => {
            let (p, w) = (load_joint(&source.joint)?, load_channel(&source.helper)?);
            let budget = budget.budget();
            let mut rates = achievable_pair(&p, &w, &budget)?;
            rates.r1_bits = r1.unwrap_or(rates.r1_bits);
            rates.r2_bits = r2.unwrap_or(rates.r2_bits);
            let mode = match mode {
                Mode::Resampled => CodebookMode::Resampled,
                Mode::Fixed => CodebookMode::Fixed,
            };
            let config = SimConfig::new(trials, cli.seed).with_mode(mode);
            let report = simulate_with(&p, &w, &budget, &rates, &config)?;
            println!("empirical_error {}", sig(report.empirical_error));
            println!("errors {} of {}", report.errors_total, report.trials);
            println!("within_eps {}", report.within_eps);
            let mut file = create(&out)?;
            writeln!(file, "{}", report.to_json())
                .and_then(|_| file.flush())
                .map_err(|e| Failure::io(&out, e))
        }
        Command::Converge { series } => {
            let (s, out) = match series {
                Series::Divergence { p, q, eps, n_max, out } => {
                    (divergence_series(&load_pmf(&p)?, &load_pmf(&q)?, eps, n_max)?, out)
                }
                Series::Entropy { joint, eps, n_max, out } => (entropy_series(&load_joint(&joint)?, eps, n_max)?, out),
            };
            print_series(&s);
            write_table(&out, s.csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let body = text.split("\n\n").next().unwrap_or("invalid arguments");
            let line = body.split_whitespace().collect::<Vec<_>>().join(" ");
            eprintln!("error[usage]: {}", line.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[usage]: --threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message);
            ExitCode::from(f.status)
        }
    }
}
