use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kksketch::bounds::{
    analyse_factorization, bernstein_tail, borell_tail, c4_constant, chernoff_rate, chernoff_tail_bounds, entropy_u,
    ChernoffParams, PsiOneParams,
};
use kksketch::experiments::{
    blm_experiment, kahane_ratio, parameter_plan, run_experiment, AdversarialConfig, AverageMode, BlmConfig,
    ExperimentConfig, FrameConfig, PlanConstants,
};
use kksketch::nets::{covering_check, greedy_net, GreedyNetConfig, RadialSampler};
use kksketch::norms::{Exponent, NormKind, NormOracle};
use kksketch::seed::stream_rng;
use kksketch::sketch::Sketch;
use kksketch::Error;

#[derive(Parser)]
#[command(name = "kksketch", version, about = "Empirical norms over log-concave samples")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the parameter chain for (delta, n).
    Plan {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the distortion experiment described by --config.
    Distortion {
        /// Include wall-clock runtime in the report (breaks byte-reproducibility).
        #[arg(long)]
        timing: bool,
    },
    /// L1 vs Lp averages of random sign sums at a random x.
    Kahane {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        p: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Random sign-vector sketches against the exact Rademacher average.
    Blm {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        #[arg(long, default_value_t = 500.0)]
        c_eps: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 50)]
        probes: usize,
    },
    /// Closed-form bound values.
    Bounds {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Greedy theta-net on the unit sphere of an l_p norm.
    Net {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// l_p exponent of the metric ("inf" accepted).
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value_t = 100_000)]
        max_points: usize,
        #[arg(long, default_value_t = 10_000)]
        probes: usize,
    },
    /// Draw a sketch of `rows` coefficient vectors from the config's measure.
    Sketch {
        #[arg(long)]
        rows: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum BoundCommand {
    Chernoff {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        trials: Option<u64>,
    },
    Entropy {
        #[arg(long)]
        beta: f64,
    },
    Factorization {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        trials: u64,
    },
    Bernstein {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 0.125)]
        c: f64,
        #[arg(long)]
        trials: u64,
    },
    Borell {
        #[arg(long)]
        t: f64,
    },
    C4,
    UpperConstant {
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 0.125)]
        c: f64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.global.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::Runtime(e.to_string())),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(g: &Global) -> Result<Option<ExperimentConfig>, Failure> {
    let Some(path) = &g.config else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(Some(cfg))
}

fn emit(g: &Global, text: &str) -> Result<(), Failure> {
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let config = load_config(g)?;
    let seed = g.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    match &cli.command {
        Command::Plan { delta, n } => {
            let delta = delta.or(config.as_ref().map(|c| c.delta)).ok_or_else(|| Failure::Config("--delta required".into()))?;
            let n = n.or(config.as_ref().map(|c| c.n)).ok_or_else(|| Failure::Config("--n required".into()))?;
            let constants = config.as_ref().map_or_else(PlanConstants::default, |c| c.constants);
            let plan = parameter_plan(delta, n, constants)?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            emit(g, &json(&plan)?)
        }
        Command::Distortion { timing } => {
            let mut cfg = config.ok_or_else(|| Failure::Config("distortion needs --config".into()))?;
            if let Some(out) = &g.out {
                cfg.output = Some(out.clone());
            }
            let out = cfg.output.take();
            let start = Instant::now();
            let mut report = run_experiment(&cfg)?;
            let elapsed = start.elapsed();
            eprintln!("{} trials in {:.2?}", cfg.trials, elapsed);
            if *timing {
                report.runtime_ms = Some(elapsed.as_millis() as u64);
            }
            let text = match g.format {
                Format::Json => report.to_json().map_err(Failure::from)? + "\n",
                Format::Csv => report.trials_csv(),
            };
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
                None => emit(g, &text),
            }
        }
        Command::Kahane { n, p, mode, budget } => {
            let (frame_cfg, norm) = frame_and_norm(config.as_ref(), NormKind::Lp { p: Exponent::TWO });
            let n = config.as_ref().map_or(*n, |c| c.n);
            let frame = frame_cfg.build(n, &norm)?;
            let mut rng = stream_rng(seed, 0);
            let x: Vec<f64> = (0..n).map(|_| rand::Rng::sample(&mut rng, rand_distr::StandardNormal)).collect();
            let mode = match mode {
                Mode::Exact => AverageMode::Exact,
                Mode::Mc => AverageMode::MonteCarlo,
            };
            let rows = p
                .iter()
                .map(|&p| kahane_ratio(&frame, &x, p, mode, *budget, seed))
                .collect::<Result<Vec<_>, _>>()?;
            emit(g, &json(&serde_json::json!({ "n": n, "x": x, "ratios": rows }))?)
        }
        Command::Blm { n, epsilon, c_eps, trials, probes } => {
            let (frame_cfg, norm) = frame_and_norm(config.as_ref(), NormKind::Lp { p: Exponent::TWO });
            let n = config.as_ref().map_or(*n, |c| c.n);
            let frame = frame_cfg.build(n, &norm)?;
            let cfg = BlmConfig {
                epsilon: *epsilon,
                c_eps: *c_eps,
                trials: *trials,
                probes: *probes,
                seed,
                adversarial: config.as_ref().map_or(AdversarialConfig { enabled: false, ..Default::default() }, |c| c.adversarial),
                ..Default::default()
            };
            let report = blm_experiment(&frame, &cfg)?;
            emit(g, &json(&report)?)
        }
        Command::Bounds { which } => emit(g, &json(&bound_value(which)?)?),
        Command::Net { n, theta, p, max_points, probes } => {
            let exponent: Exponent = serde_json::from_value(serde_json::Value::String(p.clone()))
                .map_err(|e| Failure::Config(format!("bad exponent {p:?}: {e}")))?;
            let metric = NormOracle::new(NormKind::Lp { p: exponent }, *n)?;
            let sampler = RadialSampler::new(&metric);
            let mut net_cfg = GreedyNetConfig::new(*theta);
            net_cfg.max_points = *max_points;
            let net = greedy_net(&metric, &sampler, net_cfg, seed)?;
            match g.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    net.write_csv(&mut buf)?;
                    emit(g, &String::from_utf8_lossy(&buf))
                }
                Format::Json => {
                    let covering = covering_check(&net, &metric, &sampler, *probes, seed ^ 1)?;
                    let bound = (1.0 + 2.0 / theta).powi(*n as i32);
                    emit(
                        g,
                        &json(&serde_json::json!({
                            "n": n,
                            "theta": theta,
                            "size": net.len(),
                            "packing_bound": bound,
                            "truncated": net.truncated,
                            "min_separation": net.min_separation(&metric),
                            "covering": covering,
                            "points": net.points,
                        }))?,
                    )
                }
            }
        }
        Command::Sketch { rows } => {
            let cfg = config.ok_or_else(|| Failure::Config("sketch needs --config".into()))?;
            let measure = cfg.measure.build(cfg.n)?;
            let frame = cfg.frame.build(cfg.n, &cfg.norm)?;
            let rows = rows.unwrap_or_else(|| kksketch::experiments::oversampled_rows(cfg.delta, cfg.n));
            let sketch = Sketch::from_measure(&measure, Arc::clone(&frame), rows, seed)?;
            match g.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    sketch.write_csv(&mut buf)?;
                    emit(g, &String::from_utf8_lossy(&buf))
                }
                Format::Json => {
                    let rows: Vec<&[f64]> = (0..sketch.rows()).map(|j| sketch.row(j)).collect();
                    emit(
                        g,
                        &json(&serde_json::json!({
                            "n": sketch.n(),
                            "rows": sketch.rows(),
                            "seed": sketch.seed(),
                            "law": sketch.law(),
                            "coefficients": rows,
                        }))?,
                    )
                }
            }
        }
    }
}

fn frame_and_norm(config: Option<&ExperimentConfig>, default_norm: NormKind) -> (FrameConfig, NormKind) {
    match config {
        Some(c) => (c.frame.clone(), c.norm.clone()),
        None => (FrameConfig::StandardBasis, default_norm),
    }
}

fn bound_value(which: &BoundCommand) -> Result<serde_json::Value, Failure> {
    use serde_json::json;
    Ok(match *which {
        BoundCommand::Chernoff { beta, p, trials } => {
            let rate = chernoff_rate(beta, p)?;
            match trials {
                Some(n) => json!({
                    "rate": rate,
                    "bounds": chernoff_tail_bounds(ChernoffParams::new(beta, p, n)?),
                }),
                None => json!({ "rate": rate }),
            }
        }
        BoundCommand::Entropy { beta } => json!({ "u": entropy_u(beta)? }),
        BoundCommand::Factorization { beta, p, trials } => {
            let f = analyse_factorization(ChernoffParams::new(beta, p, trials)?);
            json!({ "log_exact": f.log_exact, "log_upper": f.log_upper, "exact": f.exact(), "upper": f.upper() })
        }
        BoundCommand::Bernstein { t, b, c, trials } => {
            json!({ "bound": bernstein_tail(t, PsiOneParams::new(b, c)?, trials)? })
        }
        BoundCommand::Borell { t } => json!({ "bound": borell_tail(t)? }),
        BoundCommand::C4 => json!(c4_constant()),
        BoundCommand::UpperConstant { b, c } => {
            let psi = PsiOneParams::new(b, c)?;
            json!({ "net_level": psi.net_level(), "upper_constant": psi.upper_constant() })
        }
    })
}
