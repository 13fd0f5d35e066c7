use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use semiweak_core::config::{RunConfig, SweepSpec, SweepVariable};
use semiweak_core::discriminate::{
    exact_weak_strategy, standard_weak_strategy, strong_strategy, Decision, Run, Source, Streams,
    TrialRecord, Verdict, WeakSetup,
};
use semiweak_core::pipeline::{
    aav_report, distribution, overlap_report, strong_config, sweep_row, weak_config, SweepRow,
};
use semiweak_core::presets::{self, preset};
use semiweak_core::Distribution;

macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "semiweak", version, about = "Exact pointer distributions for Stern-Gerlach weak and semiweak measurements")]
struct Cli {
    /// Run configuration (JSON). Overrides --preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset used when no --config is given.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory; falls back to the config's `out_dir`, then `out`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact and AAV densities, peaks, I, η and the weak value.
    Distribution,
    /// One summary row per value of a swept parameter.
    Sweep(SweepArgs),
    /// Run Bob's strategy on one source.
    Discriminate(DiscriminateArgs),
    /// Closed-form branch overlap and regime.
    Overlap,
    /// First-order weak-value prediction.
    Aav,
    /// Regenerate every output for a figure preset.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
        name: String,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    variable: VariableArg,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    count: usize,
    /// Space the points geometrically.
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariableArg {
    B,
    Tau,
    Delta,
    Theta,
}

impl From<VariableArg> for SweepVariable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::B => SweepVariable::B,
            VariableArg::Tau => SweepVariable::Tau,
            VariableArg::Delta => SweepVariable::Delta,
            VariableArg::Theta => SweepVariable::Theta,
        }
    }
}

#[derive(Args, Debug)]
struct DiscriminateArgs {
    #[arg(long, value_enum)]
    source: SourceArg,
    #[arg(long, value_enum)]
    strategy: Strategy,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_particles: Option<u64>,
    /// Run index within the seed's stream family.
    #[arg(long, default_value_t = 0)]
    run: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SourceArg {
    Xi,
    Zeta,
}

impl From<SourceArg> for Source {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Xi => Source::Xi,
            SourceArg::Zeta => Source::Zeta,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Strategy {
    Strong,
    ExactWeak,
    StandardWeak,
}

#[derive(Serialize)]
struct DecisionOut {
    source: SourceArg,
    strategy: Strategy,
    seed: u64,
    run: u64,
    #[serde(flatten)]
    decision: Decision,
}

#[derive(Serialize)]
struct SweepOut<'a> {
    spec: &'a SweepSpec,
    rows: &'a [SweepRow],
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::from_path(path)?,
        (None, Some(name)) => preset(name).with_context(|| {
            format!("unknown preset `{name}` (expected one of {})", presets::NAMES.join(", "))
        })?,
        (None, None) => bail!("either --config or --preset is required"),
    };
    apply_overrides(cli, &mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.grid_points {
        cfg.grid.points = n;
    }
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_density(dir: &Path, stem: &str, d: &Distribution, format: Format) -> Result<()> {
    match format {
        Format::Csv => write(&dir.join(format!("{stem}.csv")), &d.to_csv()),
        Format::Json => write(&dir.join(format!("{stem}.json")), &d.to_json()),
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Distribution => {
            let cfg = load_config(cli)?;
            cmd_distribution(&cfg, &out_dir(cli, &cfg), cli.format)?;
        }
        Command::Sweep(args) => {
            let cfg = load_config(cli)?;
            let spec = SweepSpec {
                variable: args.variable.into(),
                from: args.from,
                to: args.to,
                count: args.count,
                log: args.log,
            };
            cmd_sweep(&cfg, &spec, &out_dir(cli, &cfg), cli.format)?;
        }
        Command::Discriminate(args) => {
            let cfg = load_config(cli)?;
            let verdict = cmd_discriminate(&cfg, args, &out_dir(cli, &cfg), "")?;
            if verdict == Verdict::Undecided {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Overlap => {
            let cfg = load_config(cli)?;
            let report = overlap_report(&cfg)?;
            write_json(&out_dir(cli, &cfg).join("overlap.json"), &report)?;
            say!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Aav => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, &cfg);
            let report = aav_report(&cfg)?;
            write_json(&dir.join("aav.json"), &report)?;
            write_density(&dir, "aav_momentum", &report.distribution, cli.format)?;
            say!(
                "weak value {:+.6}{:+.6}i, eta {:.4} ({}), P(chi_f) {:.6}",
                report.weak_value_re,
                report.weak_value_im,
                report.eta,
                if report.valid { "valid" } else { "outside first-order validity" },
                report.prob
            );
        }
        Command::Reproduce { name } => {
            let mut cfg = preset(name).expect("value parser restricts names");
            if cli.config.is_some() {
                bail!("reproduce takes a preset name, not --config");
            }
            apply_overrides(cli, &mut cfg);
            let dir = out_dir(cli, &cfg).join(name);
            write(&dir.join("config.json"), &(cfg.to_json() + "\n"))?;
            cmd_distribution(&cfg, &dir, cli.format)?;
            write_json(&dir.join("overlap.json"), &overlap_report(&cfg)?)?;
            if cfg.discrimination.is_some() {
                for source in [SourceArg::Xi, SourceArg::Zeta] {
                    for strategy in [Strategy::Strong, Strategy::ExactWeak, Strategy::StandardWeak] {
                        let args = DiscriminateArgs {
                            source,
                            strategy,
                            alpha: None,
                            max_particles: None,
                            run: 0,
                        };
                        let stem = format!(
                            "{}_{}_",
                            serde_json::to_value(source)?.as_str().unwrap_or_default(),
                            serde_json::to_value(strategy)?.as_str().unwrap_or_default()
                        );
                        cmd_discriminate(&cfg, &args, &dir, &stem)?;
                    }
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_distribution(cfg: &RunConfig, dir: &Path, format: Format) -> Result<()> {
    let out = distribution(cfg)?;
    write_json(&dir.join("report.json"), &out.report)?;
    write_density(dir, "exact_momentum", &out.exact_momentum, format)?;
    write_density(dir, "exact_position", &out.exact_position, format)?;
    if let Some(d) = &out.aav_momentum {
        write_density(dir, "aav_momentum", d, format)?;
    }
    if let Some(d) = &out.aav_position {
        write_density(dir, "aav_position", d, format)?;
    }
    let r = &out.report;
    let peaks: Vec<String> = r
        .peaks_exact
        .iter()
        .map(|p| match p.location_p_prime {
            Some(u) => format!("{u:.4}"),
            None => format!("{:.4e}", p.location),
        })
        .collect();
    say!(
        "{}: I = {:.6} ({:?}), exact peaks [{}] p', weak value {}, written to {}",
        r.label.as_deref().unwrap_or("run"),
        r.overlap,
        r.regime,
        peaks.join(", "),
        r.weak_value_re.map_or("undefined".to_string(), |w| format!("{w:.4}")),
        dir.display()
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, spec: &SweepSpec, dir: &Path, format: Format) -> Result<()> {
    let values = spec.values()?;
    let rows = values
        .par_iter()
        .map(|&v| sweep_row(&spec.apply(cfg, v), spec.variable, v))
        .collect::<semiweak_core::Result<Vec<_>>>()?;
    match format {
        Format::Json => write_json(&dir.join("sweep.json"), &SweepOut { spec, rows: &rows })?,
        Format::Csv => {
            fs::create_dir_all(dir)?;
            let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
            w.write_record([
                "variable",
                "value",
                "I",
                "regime",
                "weak_value_re",
                "weak_value_im",
                "eta",
                "postselect_prob",
                "n_peaks",
                "peaks_p_prime",
                "l1",
                "linf",
                "ks",
            ])?;
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            for r in &rows {
                let variable = serde_json::to_value(r.variable)?;
                let regime = serde_json::to_value(r.regime)?;
                let peaks: Vec<String> = r.peaks_p_prime.iter().map(|p| p.to_string()).collect();
                w.write_record([
                    variable.as_str().unwrap_or_default().to_string(),
                    r.value.to_string(),
                    r.overlap.to_string(),
                    regime.as_str().unwrap_or_default().to_string(),
                    opt(r.weak_value_re),
                    opt(r.weak_value_im),
                    opt(r.eta),
                    r.postselect_prob.to_string(),
                    r.n_peaks.to_string(),
                    peaks.join(";"),
                    opt(r.l1),
                    opt(r.linf),
                    opt(r.ks),
                ])?;
            }
            w.flush()?;
        }
    }
    say!("{} sweep points written to {}", rows.len(), dir.display());
    Ok(())
}

fn cmd_discriminate(
    cfg: &RunConfig,
    args: &DiscriminateArgs,
    dir: &Path,
    stem: &str,
) -> Result<Verdict> {
    let spec = cfg.discrimination.clone().unwrap_or_default();
    let alpha = args.alpha.unwrap_or(spec.alpha);
    let max = args.max_particles.unwrap_or(spec.max_particles);
    let streams = Streams::new(cfg.seed, args.run);
    let source = Source::from(args.source);
    let Run { decision, trials } = match args.strategy {
        Strategy::Strong => strong_strategy(source, &strong_config(cfg)?, max, alpha, streams)?,
        Strategy::ExactWeak => {
            exact_weak_strategy(source, &WeakSetup::new(weak_config(cfg)?)?, max, alpha, streams)?
        }
        Strategy::StandardWeak => {
            standard_weak_strategy(source, &WeakSetup::new(weak_config(cfg)?)?, max, alpha, streams)?
        }
    };
    let out = DecisionOut { source: args.source, strategy: args.strategy, seed: cfg.seed, run: args.run, decision };
    write_json(&dir.join(format!("{stem}decision.json")), &out)?;
    write_trials(&dir.join(format!("{stem}trials.csv")), &trials)?;
    say!(
        "{stem}verdict {:?} after {} particles (statistic {:.3e}, alpha {})",
        decision.verdict, decision.particles_used, decision.statistic, alpha
    );
    Ok(decision.verdict)
}

fn write_trials(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "parity", "postselected", "label", "sample"])?;
    for t in trials {
        let parity = serde_json::to_value(t.parity)?;
        w.write_record([
            t.index.to_string(),
            parity.as_str().unwrap_or_default().to_string(),
            t.postselected.to_string(),
            t.label.map(|l| l.as_str().to_string()).unwrap_or_default(),
            t.sample.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
