//! `dmasim`: rate experiments, beam patterns, element responses and the
//! invariant suite from the command line.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dma_core::beampattern::{angle_grid, peak_sidelobe_db};
use dma_core::element::half_power_bandwidth;
use dma_core::experiment::{run_experiment, Architecture, ExperimentSpec, Preset};
use dma_core::validate::run_invariant_suite;
use dma_core::{
    array_factor, holographic_tuning, normalized_response_curve, ArrayGeometry, Error, FeasibleSet, LorentzianTuning,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "dmasim", version, about = "Dynamic metasurface antenna link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo uplink sum-rates per architecture and SNR (CSV).
    Rates(RatesArgs),
    /// Far-field pattern of one holographically tuned microstrip (CSV).
    Pattern(PatternArgs),
    /// Normalized Lorentzian element response curves (CSV).
    ElementResponse(ElementArgs),
    /// Run the randomized invariant suite.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct RatesArgs {
    /// JSON experiment spec.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated architectures, e.g. dma-lorentzian,digital-N.
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Print the resolved spec as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct PatternArgs {
    /// Steering target in degrees.
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    theta: f64,
    /// lorentzian-phase, binary-amplitude, unit-modulus or unconstrained.
    #[arg(long, default_value = "lorentzian-phase")]
    set: String,
    #[arg(long, default_value_t = 32)]
    elements: usize,
    /// Element spacing in carrier wavelengths.
    #[arg(long, default_value_t = 0.2)]
    spacing: f64,
    /// Guided wavenumber relative to free space.
    #[arg(long, default_value_t = 1.4)]
    guide_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    attenuation: f64,
    #[arg(long, default_value_t = 3.5e9)]
    carrier: f64,
    /// Angular grid step in degrees.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ElementArgs {
    /// Comma-separated resonance frequencies in Hz.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3.3e9, 3.5e9, 3.7e9])]
    resonance: Vec<f64>,
    #[arg(long, default_value_t = 1e8)]
    damping: f64,
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    #[arg(long, default_value_t = 3.0e9)]
    fmin: f64,
    #[arg(long, default_value_t = 4.0e9)]
    fmax: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random instances per check.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn rates(args: RatesArgs) -> anyhow::Result<()> {
    let mut spec = match (&args.config, args.preset) {
        (Some(path), _) => ExperimentSpec::from_json_file(path)?,
        (None, Some(PresetArg::Paper)) => ExperimentSpec::preset(Preset::Paper),
        (None, _) => ExperimentSpec::preset(Preset::Desk),
    };
    if let Some(seed) = args.seed {
        spec.scenario.rng_seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.scenario.num_trials = trials;
    }
    if let Some(list) = &args.arch {
        spec.architectures = list.iter().map(|s| s.parse::<Architecture>()).collect::<Result<_, _>>()?;
    }
    if let Some(out) = args.out {
        spec.output_path = out;
    }
    spec.validate()?;
    if args.print_config {
        println!("{}", spec.to_json());
        return Ok(());
    }
    if let Some(w) = spec.geometry.spacing_warning() {
        eprintln!("warning: {w}");
    }
    let outcome = run_experiment(&spec, args.workers)?;
    let revived: usize = outcome.diagnostics.iter().map(|d| d.revived_elements).sum();
    if revived > 0 {
        eprintln!("note: {revived} DMA elements were revived after all-off microstrip projections");
    }
    let unconverged = outcome.diagnostics.iter().filter(|d| !d.converged).count();
    if unconverged > 0 {
        eprintln!("note: {unconverged} DMA optimizations stopped at max_iters");
    }
    println!("{:<18} {:>7} {:>12} {:>9}", "architecture", "snr_db", "mean_bpshz", "ci95");
    for r in &outcome.results {
        println!(
            "{:<18} {:>7.1} {:>12.4} {:>9.4}",
            r.architecture, r.snr_db, r.mean_rate, r.ci95_halfwidth
        );
    }
    eprintln!("wrote {}", spec.output_path.display());
    Ok(())
}

fn pattern(args: PatternArgs) -> anyhow::Result<()> {
    let set: FeasibleSet = args.set.parse()?;
    let base = ArrayGeometry::with_defaults(1, args.elements, args.carrier)?;
    let geo = ArrayGeometry {
        element_spacing: args.spacing * base.wavelength(),
        guide_wavenumber: args.guide_ratio * base.wavenumber(),
        waveguide_attenuation: args.attenuation,
        ..base
    };
    geo.validate()?;
    if let Some(w) = geo.spacing_warning() {
        eprintln!("warning: {w}");
    }
    let weights = holographic_tuning(&geo, args.theta, set)?;
    let result = array_factor(&geo, &weights, &angle_grid(args.step)?)?;
    let mut csv = csv::Writer::from_writer(output(args.out.as_deref())?);
    csv.write_record(["angle_deg", "magnitude_db"])?;
    for (a, m) in result.angles.iter().zip(&result.magnitudes_db) {
        csv.write_record([a.to_string(), m.to_string()])?;
    }
    csv.flush()?;
    eprintln!(
        "peak {:.2} deg, half-power beamwidth {:.2} deg, peak sidelobe {}",
        result.peak_angle,
        result.half_power_beamwidth,
        peak_sidelobe_db(&result).map_or("none".into(), |s| format!("{s:.2} dB"))
    );
    Ok(())
}

fn element_response(args: ElementArgs) -> anyhow::Result<()> {
    if args.points < 1 || args.fmax.is_nan() || args.fmin.is_nan() || args.fmax <= args.fmin {
        return Err(Error::Config("need points >= 1 and fmax > fmin".into()).into());
    }
    let step = if args.points > 1 {
        (args.fmax - args.fmin) / (args.points - 1) as f64
    } else {
        0.0
    };
    let grid: Vec<f64> = (0..args.points).map(|i| args.fmin + i as f64 * step).collect();
    let mut csv = csv::Writer::from_writer(output(args.out.as_deref())?);
    csv.write_record(["resonance_hz", "frequency_hz", "normalized_magnitude"])?;
    for &f0 in &args.resonance {
        let tuning = LorentzianTuning::new(args.strength, args.damping, f0)?;
        let curve = normalized_response_curve(&tuning, &grid)?;
        for (f, m) in grid.iter().zip(&curve) {
            csv.write_record([f0.to_string(), f.to_string(), m.to_string()])?;
        }
        eprintln!(
            "resonance {f0:.4e} Hz: half-power bandwidth {:.4e} Hz",
            half_power_bandwidth(&grid, &curve)?
        );
    }
    csv.flush()?;
    Ok(())
}

fn validate(args: ValidateArgs) -> anyhow::Result<bool> {
    let reports = run_invariant_suite(args.seed, args.trials)?;
    let mut ok = true;
    for r in &reports {
        println!("{:<4} {:<24} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    Ok(ok)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => EXIT_IO,
                e if e.is_numerical() => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            if e.is_io_error() {
                return EXIT_IO;
            }
        }
    }
    EXIT_CONFIG
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rates(a) => rates(a).context("rates"),
        Command::Pattern(a) => pattern(a).context("pattern"),
        Command::ElementResponse(a) => element_response(a).context("element-response"),
        Command::Validate(a) => match validate(a).context("validate") {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_NUMERICAL),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
