use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use refinet::instance::{breakpoint_cap, Instance, Mode};
use refinet::io::{network_from_json, network_to_json, parse_rule_file, NetworkMeta};
use refinet::verify::{
    default_resolution, sample_network, sample_oracle, sample_parameters, to_csv, to_svg, verify, verify_network,
    VerifySettings,
};
use refinet::{Config, Error, Network};

/// Compile refinement rules on piecewise-linear curves into exact ReLU networks.
#[derive(Parser)]
#[command(name = "refinet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a stage-n network and write it as JSON.
    Build {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        stage: usize,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a compiled (or loaded) network with the oracle curve.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        stage: usize,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Verify this network file instead of compiling one.
        #[arg(long)]
        net: Option<PathBuf>,
        /// Write the machine-readable report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Draw the stage-n curve as an SVG polyline.
    Render {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Write stage-n samples `t, y1..yp` as CSV.
    Sample {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Print width, depth and coeff_max of a network file, or a growth table over a stage range.
    Stats {
        #[arg(long)]
        net: Option<PathBuf>,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        mode: Option<String>,
        /// Stage range `a..b` (inclusive).
        #[arg(long)]
        stages: Option<String>,
    },
}

#[derive(Args)]
struct Source {
    /// Refinement rule file.
    #[arg(long, visible_alias = "spec", conflicts_with = "example")]
    rule: Option<PathBuf>,
    /// Gallery example: koch, levy, heighway, hilbert_type, hilbert, gosper, morton, hilbert_rp.
    #[arg(long)]
    example: Option<String>,
    /// Dimension for morton and hilbert_rp.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 3)]
    stage: usize,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_enum, default_value_t = Backend::Oracle)]
    backend: Backend,
    /// Number of parameter intervals; defaults to 4·L·M^n.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Oracle,
    Network,
}

fn load_instance(source: &Source) -> Result<Instance<f64>> {
    match (&source.rule, &source.example) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("rule");
            Ok(Instance::from_rule_file(name, parse_rule_file(&text)?))
        }
        (None, Some(name)) => Ok(Instance::example(name, source.dim)?),
        _ => Err(Error::Parse("give exactly one of --rule and --example".into()).into()),
    }
}

fn mode_for(instance: &Instance<f64>, mode: &Option<String>) -> Result<Mode> {
    match mode {
        Some(m) => Ok(m.parse()?),
        None => Ok(instance.default_mode()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_network(path: &Path) -> Result<(Network, NetworkMeta)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(network_from_json(&text)?)
}

fn samples(instance: &Instance<f64>, s: &Sampling) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mode = mode_for(instance, &s.mode)?;
    let count = s.resolution.unwrap_or_else(|| default_resolution(instance.m(), s.stage, instance.window()));
    let ts = sample_parameters(instance.window(), count);
    let values = match s.backend {
        Backend::Oracle => sample_oracle(&instance.oracle(s.stage, mode, breakpoint_cap())?, &ts),
        Backend::Network => {
            let compiled = instance.compile(s.stage, mode, &Config::new(instance.m(), s.stage.max(1)))?;
            sample_network(&compiled.net, &ts)?
        }
    };
    Ok((ts, values))
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text.split_once("..").ok_or_else(|| Error::Parse(format!("stage range {text:?} is not a..b")))?;
    let a: usize = a.trim().parse().map_err(|_| Error::Parse(format!("bad stage {a:?}")))?;
    let b: usize = b.trim().parse().map_err(|_| Error::Parse(format!("bad stage {b:?}")))?;
    if a > b {
        bail!(Error::Parse(format!("empty stage range {text}")));
    }
    Ok((a, b))
}

fn growth_table(instance: &Instance<f64>, mode: Mode, a: usize, b: usize) -> Result<()> {
    let mut rows = Vec::new();
    for n in a..=b {
        let c = instance.compile(n, mode, &Config::new(instance.m(), n.max(1)))?;
        rows.push((n, c.stats));
    }
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>14}", "n", "width", "depth", "d1", "d2", "log coeff_max");
    for (i, (n, s)) in rows.iter().enumerate() {
        let d1 = (i >= 1).then(|| s.depth as i64 - rows[i - 1].1.depth as i64);
        let d2 = (i >= 2).then(|| s.depth as i64 - 2 * rows[i - 1].1.depth as i64 + rows[i - 2].1.depth as i64);
        let show = |v: Option<i64>| v.map_or("-".to_string(), |v| v.to_string());
        println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>14.6}", n, s.width, s.depth, show(d1), show(d2), s.coeff_max.ln());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Build { source, stage, mode, out } => {
            let instance = load_instance(&source)?;
            let mode = mode_for(&instance, &mode)?;
            let compiled = instance.compile(stage, mode, &Config::new(instance.m(), stage.max(1)))?;
            let meta = NetworkMeta::new(compiled.stats, &compiled.builder, &compiled.params);
            write(&out, &network_to_json(&compiled.net, &meta)?)?;
            println!(
                "wrote {} (builder {}, width {}, depth {}, coeff_max {:.6e})",
                out.display(),
                meta.builder,
                meta.width,
                meta.depth,
                meta.coeff_max
            );
            Ok(true)
        }
        Command::Verify { source, stage, mode, grid, tol, net, out, json } => {
            let instance = load_instance(&source)?;
            let mode = mode_for(&instance, &mode)?;
            let settings = VerifySettings { stage, mode, grid, tol, cap: breakpoint_cap() };
            let cfg = Config::new(instance.m(), stage.max(1));
            let report = match net {
                Some(path) => {
                    let started = Instant::now();
                    let (net, _) = load_network(&path)?;
                    verify_network(&instance, &net, &settings, &cfg, started)?
                }
                None => verify(&instance, &settings, &cfg)?,
            };
            if let Some(path) = out {
                write(&path, &report.to_json())?;
            }
            if json {
                println!("{}", report.to_json());
            } else {
                println!("{report}");
            }
            Ok(report.pass)
        }
        Command::Render { source, sampling } => {
            let instance = load_instance(&source)?;
            let (ts, values) = samples(&instance, &sampling)?;
            write(&sampling.out, &to_svg(&ts, &values))?;
            println!("wrote {} ({} samples)", sampling.out.display(), ts.len());
            Ok(true)
        }
        Command::Sample { source, sampling } => {
            let instance = load_instance(&source)?;
            let (ts, values) = samples(&instance, &sampling)?;
            write(&sampling.out, &to_csv(&ts, &values))?;
            println!("wrote {} ({} rows)", sampling.out.display(), ts.len());
            Ok(true)
        }
        Command::Stats { net, source, mode, stages } => {
            if let Some(path) = net {
                let (net, meta) = load_network(&path)?;
                let s = net.stats();
                println!("builder   {}", meta.builder);
                println!("width     {}", s.width);
                println!("depth     {}", s.depth);
                println!("coeff_max {:.6e}", s.coeff_max);
                return Ok(true);
            }
            let instance = load_instance(&source)?;
            let mode = mode_for(&instance, &mode)?;
            let (a, b) = parse_range(stages.as_deref().ok_or_else(|| anyhow!("stats needs --net or --stages a..b"))?)?;
            growth_table(&instance, mode, a, b)?;
            Ok(true)
        }
    }
}

/// 0 success, 1 verification failure, 2 parse or input error, 3 precondition error, 4 cap exceeded.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_)) => 2,
        Some(Error::CapExceeded { .. }) => 4,
        Some(_) => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
