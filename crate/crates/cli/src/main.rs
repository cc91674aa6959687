//! `ktu`: separation bounds, Monte Carlo checks, correctors and experiments.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ktu::bounds::{quotient_max_m, quotient_min_theta, QuotientBoundQuery, DEFAULT_GRID_RESOLUTION};
use ktu::harness::{
    emit_bound_curve, mc_compare, report_from, run_experiment, CurveConfig, ExperimentConfig, KeyValues,
    ReportConfig,
};
use ktu::io::{read_bool_column, read_feature_file, to_json_string, CsvTable};
use ktu::mc::{run_trials, SeparatorKind, TrialConfig, TrialDistribution};
use ktu::numeric::fmt17;
use ktu::sampling::{CoordinateLaw, VarianceSpec};
use ktu::transfer::{build_cascade, build_single, Action, Algorithm, Corrector, FitConfig, LabeledStates};
use ktu::{p1_ball_lower, p1_corr_lower, BallBoundQuery, BoundResult, CorrBoundQuery};

#[derive(Parser)]
#[command(name = "ktu", version, about = "Stochastic separation bounds and one-shot correctors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability lower bounds for separating k points from M others.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Monte Carlo estimates of separation probabilities.
    #[command(subcommand)]
    Mc(McCmd),
    /// Fit, apply and unlearn correctors.
    #[command(subcommand)]
    Transfer(TransferCmd),
    /// Synthetic teacher/student experiments.
    #[command(subcommand)]
    Exp(ExpCmd),
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Uniform-ball bound.
    Ball {
        #[arg(long)]
        n: usize,
        #[arg(long = "M")]
        background: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        grid: usize,
    },
    /// Bound for one correlated cluster of size m.
    Corr {
        #[arg(long)]
        n: usize,
        #[arg(long = "M")]
        background: u64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta1: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta2: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        grid: usize,
    },
    /// Quotient-space bound for product distributions in the cube.
    Quotient {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        sigma0: f64,
        /// Failure probability; prints the largest covered M.
        #[arg(long, conflicts_with = "background", required_unless_present = "background")]
        theta: Option<f64>,
        /// Background size; prints the smallest covered failure probability.
        #[arg(long = "M")]
        background: Option<u64>,
    },
    /// Bound as a function of k, as CSV.
    Curve {
        #[arg(long, value_enum)]
        kind: CurveKind,
        #[arg(long)]
        n: usize,
        #[arg(long = "M")]
        background: u64,
        /// Inclusive range `A:B`.
        #[arg(long)]
        k_range: String,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        grid: usize,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        beta1: f64,
        /// One series per value (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        beta2: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveKind {
    Ball,
    Corr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Ball,
    Cube,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum McCmd {
    /// Run trials for one configuration.
    Run {
        #[arg(long, value_enum, default_value = "ball")]
        dist: Dist,
        /// Coordinate variance for cube samples (uniform law by default).
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long = "M")]
        background: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "lp")]
        separator: SeparatorKind,
        #[arg(long, value_enum, default_value = "json")]
        out: Format,
    },
    /// Join Monte Carlo estimates with bounds over a configuration grid.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TransferCmd {
    Fit(FitArgs),
    /// Evaluate a corrector on every row of a feature CSV.
    Apply {
        #[arg(long)]
        corrector: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove units by position.
    Unlearn {
        #[arg(long)]
        corrector: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        units: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Fit a corrector to labelled student states.
#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// A CSV whose first column flags errors, or a column of `--data`.
    #[arg(long, default_value = "is_error")]
    errors: String,
    #[arg(long, default_value = "single")]
    algo: Algorithm,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1e6)]
    kappa_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    eig_floor: f64,
    #[arg(long)]
    aggressive: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "swap-label")]
    action: Action,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ExpCmd {
    /// Run an experiment described by a key = value file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Serialize)]
struct BoundJson {
    p_lower: f64,
    log_p_lower: f64,
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    delta_value: Option<f64>,
    empty_feasible_set: bool,
}

impl From<BoundResult> for BoundJson {
    fn from(r: BoundResult) -> Self {
        Self {
            p_lower: r.p_lower,
            log_p_lower: r.log_p_lower,
            eps: r.eps,
            delta: r.delta,
            delta_value: r.delta_value,
            empty_feasible_set: r.empty_feasible_set,
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = s.split_once(':').context("k range must look like A:B")?;
    Ok(a.trim().parse()?..=b.trim().parse()?)
}

fn bounds(cmd: BoundsCmd) -> Result<()> {
    match cmd {
        BoundsCmd::Ball { n, background, k, grid } => {
            let r = p1_ball_lower(&BallBoundQuery::new(n, background, k).with_grid(grid))?;
            emit(None, &(to_json_string(&BoundJson::from(r))? + "\n"))
        }
        BoundsCmd::Corr {
            n,
            background,
            k,
            m,
            beta1,
            beta2,
            grid,
        } => {
            let r = p1_corr_lower(&CorrBoundQuery::new(n, background, k, m, beta1, beta2).with_grid(grid))?;
            emit(None, &(to_json_string(&BoundJson::from(r))? + "\n"))
        }
        BoundsCmd::Quotient {
            n,
            k,
            sigma0,
            theta,
            background,
        } => {
            let text = match (theta, background) {
                (Some(theta), _) => {
                    #[derive(Serialize)]
                    struct Out {
                        max_m: Option<u64>,
                    }
                    to_json_string(&Out {
                        max_m: quotient_max_m(&QuotientBoundQuery { n, k, sigma0, theta })?,
                    })?
                }
                (None, Some(m)) => {
                    #[derive(Serialize)]
                    struct Out {
                        theta_min: f64,
                    }
                    to_json_string(&Out {
                        theta_min: quotient_min_theta(n, k, sigma0, m)?,
                    })?
                }
                (None, None) => bail!("one of --theta or --M is required"),
            };
            emit(None, &(text + "\n"))
        }
        BoundsCmd::Curve {
            kind,
            n,
            background,
            k_range,
            grid,
            beta1,
            beta2,
            out,
        } => {
            let config = match kind {
                CurveKind::Ball => CurveConfig::Ball { n, background, grid },
                CurveKind::Corr => CurveConfig::Corr {
                    n,
                    background,
                    grid,
                    settings: beta2.iter().map(|&b2| (beta1, b2)).collect(),
                },
            };
            let table = emit_bound_curve(&config, parse_range(&k_range)?)?;
            emit(out.as_deref(), &table.render())
        }
    }
}

fn distribution(dist: Dist, sigma2: Option<f64>) -> Result<TrialDistribution> {
    Ok(match dist {
        Dist::Ball => TrialDistribution::Ball,
        Dist::Cube => TrialDistribution::Cube(VarianceSpec::Iid(match sigma2 {
            None => CoordinateLaw::Uniform,
            Some(v) => CoordinateLaw::with_variance(v)?,
        })),
    })
}

fn mc(cmd: McCmd) -> Result<()> {
    match cmd {
        McCmd::Run {
            dist,
            sigma2,
            n,
            background,
            k,
            trials,
            seed,
            separator,
            out,
        } => {
            let r = run_trials(&TrialConfig {
                distribution: distribution(dist, sigma2)?,
                n,
                background,
                k,
                trials,
                seed,
                separator,
            })?;
            let text = match out {
                Format::Json => to_json_string(&r)? + "\n",
                Format::Csv => {
                    let mut t = CsvTable::new(&["trials", "successes", "p_hat", "ci_low", "ci_high", "excluded"]);
                    t.push(vec![
                        r.trials.to_string(),
                        r.successes.to_string(),
                        fmt17(r.p_hat),
                        fmt17(r.ci_low),
                        fmt17(r.ci_high),
                        r.excluded.to_string(),
                    ]);
                    t.render()
                }
            };
            emit(None, &text)
        }
        McCmd::Compare { config, out } => {
            let kv = KeyValues::read(&config)?;
            let separator: SeparatorKind = kv.get_or("separator", SeparatorKind::Lp)?;
            let cfg = report_from(
                &kv,
                "",
                ReportConfig {
                    separators: vec![separator],
                    ..ReportConfig::default()
                },
            )?;
            kv.reject_unused()?;
            emit(out.as_deref(), &mc_compare(&cfg)?.render())
        }
    }
}

fn transfer(cmd: TransferCmd) -> Result<()> {
    match cmd {
        TransferCmd::Fit(a) => {
            let errors_file = Path::new(&a.errors);
            let (features, mask) = if errors_file.is_file() {
                let table = read_feature_file(&a.data, "")?;
                let mask = read_bool_column(BufReader::new(File::open(errors_file)?))?;
                (table.features, mask)
            } else {
                let table = read_feature_file(&a.data, &a.errors)?;
                let mask = table
                    .flags
                    .with_context(|| format!("{} has no column {:?}", a.data.display(), a.errors))?;
                (table.features, mask)
            };
            let data = LabeledStates::new(features, mask)?;
            let config = FitConfig {
                kappa_max: a.kappa_max,
                eig_floor: a.eig_floor,
                aggressive: a.aggressive,
                seed: a.seed,
                action: a.action,
            };
            let corrector = match a.algo {
                Algorithm::Single => build_single(&data, a.p, &config)?,
                Algorithm::Cascade => build_cascade(&data, a.p, &config)?,
            };
            corrector.save(&a.out)?;
            eprintln!(
                "fitted {} unit(s) on {} states ({} errors), reduced dimension {}",
                corrector.units.len(),
                data.len(),
                data.error_count(),
                corrector.reduced_dim()
            );
            Ok(())
        }
        TransferCmd::Apply { corrector, data, out } => {
            let c = Corrector::load(&corrector)?;
            let table = read_feature_file(&data, "is_error")?;
            let mut t = CsvTable::new(&["row", "triggered", "unit"]);
            for (r, a) in c.apply_rows(&table.features)?.into_iter().enumerate() {
                t.push(vec![
                    r.to_string(),
                    (a.triggered as u8).to_string(),
                    a.unit.map(|u| u.to_string()).unwrap_or_default(),
                ]);
            }
            emit(out.as_deref(), &t.render())
        }
        TransferCmd::Unlearn { corrector, units, out } => {
            let c = Corrector::load(&corrector)?.unlearn(&units)?;
            c.save(&out)?;
            Ok(())
        }
    }
}

fn exp(cmd: ExpCmd) -> Result<()> {
    match cmd {
        ExpCmd::Run { config, out_dir } => {
            let cfg = ExperimentConfig::read(&config).map_err(|e| match e {
                ktu::Error::Io(io) => ktu::Error::Config {
                    line: 0,
                    message: format!("cannot read {}: {io}", config.display()),
                },
                other => other,
            })?;
            let out = run_experiment(&cfg, &out_dir)?;
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

/// 2 for configuration errors, 3 for numerical failures, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ktu::Error>() {
        Some(ktu::Error::Config { .. }) => 2,
        Some(e) if e.is_numerical() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(c) => bounds(c),
        Command::Mc(c) => mc(c),
        Command::Transfer(c) => transfer(c),
        Command::Exp(c) => exp(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
