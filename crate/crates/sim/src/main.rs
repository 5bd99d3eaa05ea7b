use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cellfree_core::experiment::{variant_frame, CrosscorrPreset, ExperimentConfig, Figure, Variant};
use cellfree_sim::config::{parse_pairs, Settings};
use cellfree_sim::output::{self, Format};
use cellfree_sim::{runner, SimError};

#[derive(Parser)]
#[command(name = "cellfree", version, about = "Uplink pilot estimation in cell-free MIMO with asynchronous reception")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a config file and flags.
    Sweep(RunArgs),
    /// Run a figure preset (fig3, fig6, fig7, fig8, fig9).
    Figure {
        id: String,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        xc: CrosscorrArgs,
    },
    /// Pilot cross-correlation against pilot length.
    Crosscorr {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        xc: CrosscorrArgs,
    },
    /// Write one AP's received pilot frame as a binary dump.
    DumpFrame {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 0)]
        ap: usize,
        /// Variant name, e.g. dft_ext_upng.
        #[arg(long, default_value = "dft_upng")]
        variant: String,
        /// Index into the sweep values.
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// 0.1 km^2 with the same AP and UE densities.
    #[arg(long)]
    desk_scale: bool,
    /// Output path; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write per-link diagnostics here.
    #[arg(long)]
    links: Option<PathBuf>,
    /// `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone, Default)]
struct CrosscorrArgs {
    /// Fixed arrival offset between the two pilots, in samples.
    #[arg(long)]
    delay: Option<usize>,
    /// DFT index pairs to average over: all or adjacent.
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    tau_p_min: Option<usize>,
    #[arg(long)]
    tau_p_max: Option<usize>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, SimError> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        for kv in &self.set {
            s.set(kv)?;
        }
        Ok(s)
    }

    fn format(&self) -> Result<Format, SimError> {
        self.format.parse()
    }

    fn experiment(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig, SimError> {
        if self.desk_scale {
            cfg.apply_desk_scale();
            cfg.trials = ExperimentConfig::desk().trials;
        }
        self.settings()?.apply(&mut cfg)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if self.workers == Some(0) {
            return Err(SimError::config("--workers", "must be at least 1"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, SimError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| SimError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sweep(run: &RunArgs, base: ExperimentConfig) -> Result<(), SimError> {
    let cfg = run.experiment(base)?;
    let format = run.format()?;
    let acc = runner::run_trials(&cfg, run.workers, run.links.is_some())?;
    let result = acc.finish(&cfg)?;
    output::write_results(&result, format, open_out(&run.out)?)?;
    if let Some(path) = &run.links {
        output::write_links(&acc, &cfg, format, open_out(&Some(path.clone()))?)?;
    }
    Ok(())
}

fn crosscorr(run: &RunArgs, xc: &CrosscorrArgs) -> Result<(), SimError> {
    let mut preset = CrosscorrPreset::default();
    run.settings()?.apply_crosscorr(&mut preset)?;
    if let Some(d) = xc.delay {
        preset.delay = d;
    }
    if let Some(p) = &xc.pairs {
        preset.convention = parse_pairs(p)?;
    }
    if xc.tau_p_min.is_some() || xc.tau_p_max.is_some() {
        let lo = xc.tau_p_min.unwrap_or(preset.tau_ps[0]);
        let hi = xc.tau_p_max.unwrap_or(*preset.tau_ps.last().unwrap_or(&lo));
        if lo == 0 || lo > hi {
            return Err(SimError::config("--tau-p-min", "need 1 <= tau_p_min <= tau_p_max"));
        }
        preset.tau_ps = (lo..=hi).collect();
    }
    if let Some(seed) = run.seed {
        preset.seed = seed;
    }
    if let Some(trials) = run.trials {
        preset.trials = trials;
    }
    let table = preset.run()?;
    output::write_crosscorr(&table, run.format()?, open_out(&run.out)?)
}

fn dump_frame(run: &RunArgs, trial: u64, ap: usize, variant: &str, point: usize) -> Result<(), SimError> {
    let variant = Variant::parse(variant).ok_or_else(|| SimError::config("--variant", format!("unknown variant `{variant}`")))?;
    let mut cfg = run.experiment(ExperimentConfig::full())?;
    cfg.variants = vec![variant];
    if point >= cfg.sweep.values.len() {
        return Err(SimError::config("--point", "beyond the sweep values"));
    }
    let frame = variant_frame(&cfg, trial, point, variant)?;
    let ap_frame = frame
        .aps
        .get(ap)
        .ok_or_else(|| SimError::config("--ap", format!("network has {} APs", frame.aps.len())))?;
    let out = run.out.as_ref().ok_or_else(|| SimError::config("--out", "dump-frame needs an output path"))?;
    output::write_frame_dump(ap_frame, open_out(&Some(out.clone()))?)
}

fn dispatch(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Sweep(run) => sweep(&run, ExperimentConfig::full()),
        Command::Figure { id, run, xc } => {
            let fig = Figure::parse(&id).ok_or_else(|| SimError::config("figure", format!("unknown preset `{id}`")))?;
            match fig.preset() {
                Some(cfg) => sweep(&run, cfg),
                None => crosscorr(&run, &xc),
            }
        }
        Command::Crosscorr { run, xc } => crosscorr(&run, &xc),
        Command::DumpFrame {
            run,
            trial,
            ap,
            variant,
            point,
        } => dump_frame(&run, trial, ap, &variant, point),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
