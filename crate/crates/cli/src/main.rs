//! `liouville`: fit, inspect and run occupation-kernel Liouville DMD models.

mod config;
mod verify;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use liouville_dmd::datagen::SystemDocument;
use liouville_dmd::eigen_dmd::{fit_eigen, predict_eigen};
use liouville_dmd::model_io::{data_ref, load_model, save_document, EigenDocument, Model, ModelDocument, SingularDocument};
use liouville_dmd::singular_dmd::{fit_singular, reconstruct_singular};
use liouville_dmd::spectrum_lab::Hardy3Weights;
use liouville_dmd::trajdata::{load_snapshots, load_trajectories, window_snapshots, write_trajectories};
use liouville_dmd::{sample_trajectory_bundle, EigenOptions, Error, SingularOptions, SystemSpec, TrajectorySet};

use config::{Method, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "liouville", version, about = "Occupation-kernel Liouville operator DMD")]
struct Cli {
    /// TOML file with run settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Window a snapshot CSV into a trajectory CSV.
    Ingest {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
        /// Snapshot spacing.
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit a singular or eigen decomposition to trajectory data.
    Fit {
        /// Trajectory CSV.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        settings: RunConfig,
        /// Model JSON to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Closed-form prediction from an eigen model.
    Predict {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Vector-field reconstruction from a singular model.
    Reconstruct {
        #[command(flatten)]
        run: RunArgs,
        /// Number of singular triplets in the vector field.
        #[arg(long)]
        top_k: Option<usize>,
        /// Stop once the state norm exceeds this bound.
        #[arg(long)]
        blowup_bound: Option<f64>,
    },
    /// Write singular values or eigenvalues with their modes as CSV.
    Modes {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the numerical self-checks.
    Verify {
        /// Use m³ instead of (m+1)³ weights for H²₃, which must fail.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Simulate a known system from random initial conditions.
    Simulate {
        /// System description (TOML or JSON).
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Initial-condition box, one `lo:hi` per coordinate.
        #[arg(long = "box", value_parser = parse_interval, allow_hyphen_values = true, required = true)]
        x0_box: Vec<(f64, f64)>,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    model: PathBuf,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    x0: Vec<f64>,
    #[arg(long)]
    t_max: f64,
    #[arg(long)]
    dt: f64,
    /// Trajectory CSV to write.
    #[arg(long)]
    output: PathBuf,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number {hi:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("need finite lo <= hi, got {s:?}"));
    }
    Ok((lo, hi))
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

const EXIT_USAGE: u8 = 2;
const EXIT_FIT: u8 = 3;
const EXIT_BLOWUP: u8 = 4;
const EXIT_VERIFY: u8 = 5;

impl Failure {
    fn usage(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }

    fn fit(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_FIT, message: message.to_string() }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Ingest { snapshots, window, stride, dt, t0, output } => {
            let flags = RunConfig { window, stride, ..Default::default() };
            let cfg = RunConfig::resolve(flags, file).map_err(Failure::usage)?;
            ingest(&snapshots, &cfg, dt, t0, &output)
        }
        Command::Fit { data, settings, output } => {
            let cfg = RunConfig::resolve(settings, file).map_err(Failure::usage)?;
            fit(&data, &cfg, &output)
        }
        Command::Predict { run } => predict(&run),
        Command::Reconstruct { run, top_k, blowup_bound } => {
            let flags = RunConfig { top_k, ..Default::default() };
            let cfg = RunConfig::resolve(flags, file).map_err(Failure::usage)?;
            reconstruct(&run, cfg.top_k, blowup_bound)
        }
        Command::Modes { model, output } => modes(&model, output.as_deref()),
        Command::Verify { inject_fault } => {
            let weights = if inject_fault { Hardy3Weights::Cubes } else { Hardy3Weights::ShiftedCubes };
            run_verify(weights)
        }
        Command::Simulate { system, count, x0_box, t_max, dt, seed, output } => {
            let flags = RunConfig { seed, ..Default::default() };
            let cfg = RunConfig::resolve(flags, file).map_err(Failure::usage)?;
            simulate(&system, count, &x0_box, t_max, dt, cfg.seed.unwrap_or(0), &output)
        }
    }
}

fn ingest(snapshots: &Path, cfg: &RunConfig, dt: f64, t0: f64, output: &Path) -> Outcome {
    let window = cfg.window.ok_or_else(|| Failure::usage("--window is required (flag or config)"))?;
    let stride = cfg.stride.unwrap_or(1);
    let data = load_snapshots(snapshots).map_err(Failure::usage)?;
    let set = window_snapshots(data.as_ref(), t0, dt, window, stride).map_err(Failure::usage)?;
    let meta = vec![
        ("source".to_string(), snapshots.display().to_string()),
        ("dt".to_string(), dt.to_string()),
        ("t0".to_string(), t0.to_string()),
        ("window".to_string(), window.to_string()),
        ("stride".to_string(), stride.to_string()),
    ];
    write_trajectories(output, &set, &meta).map_err(Failure::usage)?;
    println!("{} trajectories of {} samples in dimension {}", set.len(), window, set.dim());
    Ok(())
}

fn fit(data: &Path, cfg: &RunConfig, output: &Path) -> Outcome {
    let pair = cfg.pair().map_err(Failure::usage)?;
    let set = load_trajectories(data).map_err(Failure::usage)?;
    let reference = data_ref(data).map_err(Failure::usage)?;
    info!("fitting {:?} on {} trajectories (n = {})", cfg.method(), set.len(), set.dim());
    let mut summary = Vec::new();
    let doc = match cfg.method() {
        Method::Singular => {
            let opts = SingularOptions {
                rule: cfg.rule(),
                rel_floor: cfg.rel_floor.unwrap_or(liouville_dmd::gram::DEFAULT_REL_FLOOR),
                top_k: cfg.top_k,
            };
            let model = fit_singular(&pair, &set, &opts).map_err(Failure::fit)?;
            summary.push(format!("singular decomposition: rank {}", model.rank()));
            if model.is_zero_operator() {
                summary.push("zero operator (all trajectories closed)".into());
            }
            summary.extend(model.sigma().iter().enumerate().map(|(j, s)| format!("sigma[{j}] = {s:.12e}")));
            ModelDocument::Singular(SingularDocument::from_model(&model, reference, cfg.to_json()))
        }
        Method::Eigen => {
            let opts = EigenOptions {
                rule: cfg.rule(),
                jitter_rel: cfg.jitter_rel.unwrap_or(liouville_dmd::gram::DEFAULT_JITTER_REL),
                ..EigenOptions::default()
            };
            let model = fit_eigen(&pair, &set, &opts).map_err(Failure::fit)?;
            summary.push(format!("eigen decomposition: rank {}", model.lambda().len()));
            summary.extend(
                model.lambda().iter().enumerate().map(|(j, l)| format!("lambda[{j}] = {:.12e} {:+.12e}i", l.re, l.im)),
            );
            ModelDocument::Eigen(EigenDocument::from_model(&model, reference, cfg.to_json()))
        }
    };
    save_document(&doc, output).map_err(Failure::usage)?;
    let mut out = std::io::stdout().lock();
    for line in summary {
        // A closed stdout is not a fit failure; the model is already saved.
        if writeln!(out, "{line}").is_err() {
            break;
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<Model, Failure> {
    load_model(path).map_err(Failure::usage)
}

fn single(traj: liouville_dmd::Trajectory) -> Result<TrajectorySet, Failure> {
    TrajectorySet::new(vec![traj]).map_err(Failure::usage)
}

fn predict(run: &RunArgs) -> Outcome {
    let Model::Eigen(model) = load(&run.model)? else {
        return Err(Failure::usage("predict needs an eigen model; use reconstruct for singular models"));
    };
    let pred = match predict_eigen(&model, &run.x0, run.t_max, run.dt) {
        Ok(p) => p,
        Err(e @ Error::BlowUp { .. }) => return Err(Failure { code: EXIT_BLOWUP, message: e.to_string() }),
        Err(e) => return Err(Failure::usage(e)),
    };
    let mut meta = vec![
        ("method".to_string(), "eigen".to_string()),
        ("model".to_string(), run.model.display().to_string()),
        ("imaginary_residue".to_string(), format!("{:e}", pred.imaginary_residue)),
    ];
    if let Some(w) = &pred.warning {
        meta.push(("warning".to_string(), w.clone()));
        warn!("{w}");
    }
    write_trajectories(&run.output, &single(pred.trajectory)?, &meta).map_err(Failure::usage)
}

fn reconstruct(run: &RunArgs, top_k: Option<usize>, blowup_bound: Option<f64>) -> Outcome {
    let Model::Singular(model) = load(&run.model)? else {
        return Err(Failure::usage("reconstruct needs a singular model; use predict for eigen models"));
    };
    let rec = reconstruct_singular(&model, &run.x0, run.t_max, run.dt, top_k, blowup_bound).map_err(Failure::usage)?;
    let mut meta = vec![
        ("method".to_string(), "singular".to_string()),
        ("model".to_string(), run.model.display().to_string()),
        ("top_k".to_string(), top_k.unwrap_or(model.rank()).min(model.rank()).to_string()),
        ("blow_up".to_string(), rec.blow_up.is_some().to_string()),
    ];
    if let Some(e) = &rec.blow_up {
        meta.push(("blow_up_detail".to_string(), e.to_string()));
    }
    write_trajectories(&run.output, &single(rec.trajectory)?, &meta).map_err(Failure::usage)?;
    match rec.blow_up {
        Some(e) => Err(Failure { code: EXIT_BLOWUP, message: format!("{e}; partial trajectory written") }),
        None => Ok(()),
    }
}

fn modes(path: &Path, output: Option<&Path>) -> Outcome {
    let mut buf = Vec::new();
    write_modes(&mut buf, &load(path)?).map_err(Failure::usage)?;
    match output {
        Some(out) => std::fs::write(out, buf).map_err(|e| Failure::usage(format!("cannot write {}: {e}", out.display()))),
        None => std::io::stdout().write_all(&buf).map_err(Failure::usage),
    }
}

fn write_modes(out: &mut impl Write, model: &Model) -> std::io::Result<()> {
    match model {
        Model::Singular(m) => {
            write!(out, "index,sigma")?;
            for i in 0..m.dim() {
                write!(out, ",xi{i}")?;
            }
            writeln!(out)?;
            // Rank-zero and Gaussian models carry no modes; only the values are listed.
            let xi = m.singular_modes().ok();
            for (j, s) in m.sigma().iter().enumerate() {
                write!(out, "{j},{s:.16e}")?;
                for i in 0..m.dim() {
                    match xi {
                        Some(xi) => write!(out, ",{:.16e}", xi[(i, j)])?,
                        None => write!(out, ",")?,
                    }
                }
                writeln!(out)?;
            }
        }
        Model::Eigen(m) => {
            write!(out, "index,lambda_re,lambda_im")?;
            for i in 0..m.dim() {
                write!(out, ",xi{i}_re,xi{i}_im")?;
            }
            writeln!(out)?;
            let xi = m.modes();
            for (j, l) in m.lambda().iter().enumerate() {
                write!(out, "{j},{:.16e},{:.16e}", l.re, l.im)?;
                for i in 0..m.dim() {
                    write!(out, ",{:.16e},{:.16e}", xi[(i, j)].re, xi[(i, j)].im)?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

fn run_verify(weights: Hardy3Weights) -> Outcome {
    let checks = verify::run(weights);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for c in &checks {
        writeln!(out, "{c}").map_err(Failure::usage)?;
    }
    writeln!(out, "verify: {} passed, {} failed", checks.len() - failed, failed).map_err(Failure::usage)?;
    out.flush().map_err(Failure::usage)?;
    if failed > 0 {
        return Err(Failure { code: EXIT_VERIFY, message: format!("{failed} check(s) failed") });
    }
    Ok(())
}

fn read_system(path: &Path) -> Result<SystemSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: SystemDocument = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid system {}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::usage(format!("invalid system {}: {e}", path.display())))?
    };
    SystemSpec::try_from(doc).map_err(Failure::usage)
}

fn simulate(system: &Path, count: usize, x0_box: &[(f64, f64)], t_max: f64, dt: f64, seed: u64, output: &Path) -> Outcome {
    let spec = read_system(system)?;
    let set = match sample_trajectory_bundle(&spec, x0_box, count, t_max, dt, seed) {
        Ok(s) => s,
        Err(e @ Error::BlowUp { .. }) => return Err(Failure { code: EXIT_BLOWUP, message: e.to_string() }),
        Err(e) => return Err(Failure::usage(e)),
    };
    let meta = vec![
        ("system".to_string(), system.display().to_string()),
        ("count".to_string(), count.to_string()),
        ("t_max".to_string(), t_max.to_string()),
        ("dt".to_string(), dt.to_string()),
        ("seed".to_string(), seed.to_string()),
    ];
    write_trajectories(output, &set, &meta).map_err(Failure::usage)?;
    println!("{} trajectories written to {}", set.len(), output.display());
    Ok(())
}
