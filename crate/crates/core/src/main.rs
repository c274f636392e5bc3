#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plasmomech::config::{load_config, Config};
use plasmomech::error::Error;
use plasmomech::gaussian::nats_to_bits;
use plasmomech::output::{emit_csv, emit_svg, plot_csv, write_csv};
use plasmomech::sweep::{
    evaluate_point, parse_outputs, run_spectrum, run_voltage_sweep, Control, SweepResult, SweepSpec,
};

/// Fano-controlled plasmomechanics: spectra, voltage sweeps and squeezing.
#[derive(Parser)]
#[command(name = "plasmomech", version)]
struct Cli {
    /// Config file with `section.key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set mech.g_single=0.1`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file (CSV for sweeps, SVG for `plot`). Sweeps print to stdout without it.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Logarithmic y axis for SVG plots.
    #[arg(long, global = true)]
    log_y: bool,
    /// Number of sweep points.
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct SweepArgs {
    /// First control value.
    #[arg(long)]
    start: Option<f64>,
    /// Last control value.
    #[arg(long)]
    stop: Option<f64>,
    /// Comma-separated outputs: intensity, displacement_zpf, displacement_fm,
    /// min_variance, ep, g_eff, stable.
    #[arg(long)]
    outputs: Option<String>,
    /// Also write an SVG plot of `--column` here.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Column to plot.
    #[arg(long, default_value = "intensity")]
    column: String,
}

#[derive(Subcommand)]
enum Verb {
    /// Plasmon intensity against drive wavelength (nm).
    Spectrum {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Skip the extra points around the emitter resonance.
        #[arg(long)]
        no_refine: bool,
    },
    /// Full pipeline against gate voltage (V) or emitter resonance (eV).
    Vsweep {
        #[command(flatten)]
        sweep: SweepArgs,
        /// `voltage` or `emitter_resonance`.
        #[arg(long, default_value = "voltage")]
        control: String,
    },
    /// Evaluate every observable at the configured parameters.
    Point {
        /// Drive wavelength in nm instead of `drive.omega`.
        #[arg(long)]
        wavelength: Option<f64>,
        /// Report the entanglement potential in bits.
        #[arg(long)]
        log2: bool,
    },
    /// Plot one column of a sweep CSV as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "intensity")]
        column: String,
    },
}

fn resolve_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => Config::defaults(),
    };
    for o in &cli.overrides {
        cfg.set_override(o)?;
    }
    Ok(cfg.validate()?)
}

fn apply(spec: &mut SweepSpec, cli: &Cli, args: &SweepArgs) -> Result<(), Error> {
    if let Some(s) = args.start {
        spec.start = s;
    }
    if let Some(s) = args.stop {
        spec.stop = s;
    }
    if let Some(n) = cli.points {
        spec.points = n;
    }
    if let Some(list) = &args.outputs {
        spec.outputs = parse_outputs(list)?;
    }
    spec.jobs = cli.jobs;
    Ok(())
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn deliver(r: &SweepResult, cli: &Cli, args: &SweepArgs) -> Result<(), Error> {
    match &cli.out {
        Some(path) => {
            emit_csv(r, path)?;
            std::fs::write(meta_path(path), r.meta.to_text()).map_err(|source| {
                plasmomech::output::OutputError::Io {
                    path: meta_path(path).display().to_string(),
                    source,
                }
            })?;
        }
        None => write_csv(r, std::io::stdout().lock())?,
    }
    if let Some(svg) = &args.svg {
        emit_svg(r, svg, &args.column, cli.log_y)?;
    }
    let unstable = r.rows.iter().filter(|row| !row.stable).count();
    if unstable > 0 {
        eprintln!("{unstable} of {} points unstable or unconverged", r.rows.len());
    }
    if !r.meta.warnings.is_empty() {
        eprintln!("{} warnings (see metadata)", r.meta.warnings.len());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.verb {
        Verb::Spectrum { sweep, no_refine } => {
            let cfg = resolve_config(cli)?;
            let mut spec = SweepSpec::spectrum();
            spec.refine = !no_refine;
            apply(&mut spec, cli, sweep)?;
            let r = run_spectrum(&cfg, &spec)?;
            deliver(&r, cli, sweep)
        }
        Verb::Vsweep { sweep, control } => {
            let cfg = resolve_config(cli)?;
            let mut spec = SweepSpec::voltage();
            spec.control = control.parse()?;
            if spec.control == Control::EmitterResonance {
                let v = cfg.voltage;
                spec.start = v.omega_qe_0 + v.kappa_v * spec.start;
                spec.stop = v.omega_qe_0 + v.kappa_v * spec.stop;
            }
            apply(&mut spec, cli, sweep)?;
            let r = run_voltage_sweep(&cfg, &spec)?;
            deliver(&r, cli, sweep)
        }
        Verb::Point { wavelength, log2 } => {
            let cfg = resolve_config(cli)?;
            let mut p = cfg.params;
            if let Some(nm) = wavelength {
                if !(*nm > 0.0) {
                    return Err(Error::Usage(format!("wavelength must be positive, got {nm}")));
                }
                p.drive.omega = p.scale.nm_to_scaled(*nm);
            }
            let mut rep = evaluate_point(&p, true);
            if *log2 {
                rep.ep = rep.ep.map(nats_to_bits);
            }
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "drive_omega       {:.10e}", p.drive.omega);
            let _ = writeln!(out, "{rep}");
            if *log2 {
                let _ = writeln!(out, "ep_units          bits");
            }
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            match steady_state_error(&p) {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Verb::Plot { csv, column } => {
            let out = cli.out.clone().unwrap_or_else(|| csv.with_extension("svg"));
            plot_csv(csv, &out, column, cli.log_y)?;
            Ok(())
        }
    }
}

/// Non-convergence is a physics failure for a single-point evaluation.
fn steady_state_error(p: &plasmomech::SystemParams) -> Option<Error> {
    plasmomech::steady_state(p).err().map(Error::from)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
