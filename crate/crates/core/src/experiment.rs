//! Seeded Monte Carlo sum-rate experiments over architectures and SNR points.
//!
//! Every trial draws one channel that all architectures and all SNR points
//! share, so architecture comparisons are paired. Trials run on a worker pool
//! but each one owns its random sub-streams and results are reduced in trial
//! order, which makes the output independent of the number of workers.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::channel::{generate_trial_channel, ScenarioConfig};
use crate::element::FeasibleSet;
use crate::error::{Error, Result};
use crate::optimizer::{optimize_dma, optimize_phase_shifter_hybrid, refine_dma, OptimizerOptions};
use crate::rate::{digital_subarray_capacity, fully_digital_sum_capacity, mean_and_ci95, uplink_sum_rate, RateResult};
use crate::rng::SeedSequence;
use crate::CMatrix;

/// Absolute slack allowed on the data-processing inequality.
pub const DATA_PROCESSING_TOL: f64 = 1e-9;

/// Receive front-ends compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "dma-lorentzian")]
    DmaLorentzian,
    #[serde(rename = "dma-binary")]
    DmaBinary,
    #[serde(rename = "dma-unconstrained")]
    DmaUnconstrained,
    /// Fully connected phase-shifter network.
    #[serde(rename = "hybrid-full")]
    HybridFull,
    /// One RF chain per element.
    #[serde(rename = "digital-N")]
    DigitalN,
    /// An M-antenna digital array.
    #[serde(rename = "digital-M")]
    DigitalM,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::DmaLorentzian,
        Architecture::DmaBinary,
        Architecture::DmaUnconstrained,
        Architecture::HybridFull,
        Architecture::DigitalN,
        Architecture::DigitalM,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Architecture::DmaLorentzian => "dma-lorentzian",
            Architecture::DmaBinary => "dma-binary",
            Architecture::DmaUnconstrained => "dma-unconstrained",
            Architecture::HybridFull => "hybrid-full",
            Architecture::DigitalN => "digital-N",
            Architecture::DigitalM => "digital-M",
        }
    }

    fn dma_set(self) -> Option<FeasibleSet> {
        match self {
            Architecture::DmaLorentzian => Some(FeasibleSet::LorentzianPhase),
            Architecture::DmaBinary => Some(FeasibleSet::BinaryAmplitude),
            Architecture::DmaUnconstrained => Some(FeasibleSet::Unconstrained),
            _ => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown architecture '{s}'")))
    }
}

fn default_output_path() -> PathBuf {
    PathBuf::from("rates.csv")
}

fn default_architectures() -> Vec<Architecture> {
    Architecture::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub geometry: ArrayGeometry,
    #[serde(default = "default_architectures")]
    pub architectures: Vec<Architecture>,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default = "default_output_path")]
    pub output_path: PathBuf,
}

/// Named experiment configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// N = 32 (8 x 4), K = 8, 200 trials.
    Desk,
    /// N = 160 (16 x 10), K = 64, 20 trials.
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        let (m, l, k, trials) = match preset {
            Preset::Desk => (8, 4, 8, 200),
            Preset::Paper => (16, 10, 64, 20),
        };
        let carrier = 3.5e9;
        Self {
            scenario: ScenarioConfig {
                num_users: k,
                cell_radius: 400.0,
                min_distance: 10.0,
                pathloss_exponent: 3.0,
                reference_distance: 1.0,
                snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
                num_trials: trials,
                rng_seed: 42,
                carrier_frequency: carrier,
            },
            geometry: ArrayGeometry::with_defaults(m, l, carrier).expect("preset geometry is valid"),
            architectures: default_architectures(),
            optimizer: OptimizerOptions::default(),
            output_path: default_output_path(),
        }
    }

    /// Parses a JSON spec; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::InvalidArgument(msg) => Error::Config(msg),
            other => other,
        };
        self.scenario.validate().map_err(as_config)?;
        self.geometry.validate().map_err(as_config)?;
        self.optimizer.validate().map_err(as_config)?;
        if self.architectures.is_empty() {
            return Err(Error::Config("at least one architecture is required".into()));
        }
        if self.scenario.carrier_frequency != self.geometry.carrier_frequency {
            return Err(Error::Config(format!(
                "scenario carrier {} Hz differs from geometry carrier {} Hz",
                self.scenario.carrier_frequency, self.geometry.carrier_frequency
            )));
        }
        Ok(())
    }
}

/// Per-trial optimizer notes for one DMA architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDiagnostics {
    pub trial: usize,
    pub architecture: Architecture,
    pub iterations: usize,
    pub converged: bool,
    pub revived_elements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// One entry per architecture x SNR, architectures in spec order.
    pub results: Vec<RateResult>,
    pub diagnostics: Vec<TrialDiagnostics>,
    pub seed: u64,
}

impl ExperimentOutcome {
    pub fn get(&self, arch: Architecture, snr_db: f64) -> Option<&RateResult> {
        self.results
            .iter()
            .find(|r| r.architecture == arch.label() && r.snr_db == snr_db)
    }
}

/// Mean and 95% half-width of the per-trial difference `a - b` over paired trials.
pub fn paired_difference(a: &RateResult, b: &RateResult) -> (f64, f64) {
    let diffs: Vec<f64> = a
        .per_trial_rates
        .iter()
        .zip(&b.per_trial_rates)
        .map(|(x, y)| x - y)
        .collect();
    mean_and_ci95(&diffs)
}

struct TrialOutcome {
    /// rates[architecture][snr]
    rates: Vec<Vec<f64>>,
    diagnostics: Vec<TrialDiagnostics>,
}

fn run_trial(spec: &ExperimentSpec, seeds: &SeedSequence, trial: usize) -> Result<TrialOutcome> {
    let channel = generate_trial_channel(&spec.scenario, &spec.geometry, seeds, trial as u64)?;
    let h = &channel.matrix;
    let snrs: Vec<(f64, f64)> = spec
        .scenario
        .snr_grid_db
        .iter()
        .map(|&db| (db, 10f64.powf(db / 10.0)))
        .collect();
    let bound = snrs
        .iter()
        .map(|&(_, s)| fully_digital_sum_capacity(h, s))
        .collect::<Result<Vec<_>>>()?;
    let m = spec.geometry.num_microstrips;
    let opts = &spec.optimizer;

    let mut rates = Vec::with_capacity(spec.architectures.len());
    let mut diagnostics = Vec::new();
    for &arch in &spec.architectures {
        let row: Vec<f64> = match arch {
            Architecture::DigitalN => bound.clone(),
            Architecture::DigitalM => snrs
                .iter()
                .map(|&(_, s)| digital_subarray_capacity(h, m, s))
                .collect::<Result<_>>()?,
            Architecture::HybridFull => {
                if opts.refine_grid == 0 {
                    let a = optimize_phase_shifter_hybrid(h, m, opts)?;
                    snrs.iter().map(|&(_, s)| uplink_sum_rate(&a, h, s)).collect::<Result<_>>()?
                } else {
                    snrs.iter()
                        .map(|&(db, s)| {
                            let per_snr = OptimizerOptions {
                                refine_snr_db: db,
                                ..*opts
                            };
                            uplink_sum_rate(&optimize_phase_shifter_hybrid(h, m, &per_snr)?, h, s)
                        })
                        .collect::<Result<_>>()?
                }
            }
            dma => {
                let set = dma.dma_set().expect("remaining architectures are DMAs");
                let base_opts = OptimizerOptions {
                    refine_grid: 0,
                    ..*opts
                };
                let base = optimize_dma(h, &spec.geometry, set, &base_opts)?;
                diagnostics.push(TrialDiagnostics {
                    trial,
                    architecture: dma,
                    iterations: base.diagnostics.iterations,
                    converged: base.diagnostics.converged,
                    revived_elements: base.diagnostics.revived.len(),
                });
                let evaluate = |a: &CMatrix, s: f64| uplink_sum_rate(a, h, s);
                if opts.refine_grid == 0 {
                    snrs.iter()
                        .map(|&(_, s)| evaluate(base.combiner.matrix(), s))
                        .collect::<Result<_>>()?
                } else {
                    snrs.iter()
                        .map(|&(_, s)| {
                            let refined = refine_dma(h, base.clone(), s, opts.refine_grid, opts.refine_max_sweeps)?;
                            evaluate(refined.combiner.matrix(), s)
                        })
                        .collect::<Result<_>>()?
                }
            }
        };
        for (i, (&rate, &(snr_db, _))) in row.iter().zip(&snrs).enumerate() {
            if rate > bound[i] + DATA_PROCESSING_TOL {
                return Err(Error::DataProcessingViolation {
                    trial,
                    architecture: arch.label().to_string(),
                    snr_db,
                    rate,
                    bound: bound[i],
                });
            }
        }
        rates.push(row);
    }
    Ok(TrialOutcome { rates, diagnostics })
}

/// Runs all trials on `workers` threads (0 picks the available parallelism)
/// and aggregates the per-cell statistics. Nothing is written to disk.
pub fn compute_rates(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let seeds = SeedSequence::new(spec.scenario.rng_seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let trials: Vec<TrialOutcome> = pool.install(|| {
        (0..spec.scenario.num_trials)
            .into_par_iter()
            .map(|t| run_trial(spec, &seeds, t))
            .collect::<Result<_>>()
    })?;

    let mut results = Vec::new();
    for (a, arch) in spec.architectures.iter().enumerate() {
        for (s, &snr_db) in spec.scenario.snr_grid_db.iter().enumerate() {
            let samples = trials.iter().map(|t| t.rates[a][s]).collect();
            results.push(RateResult::from_samples(arch.label(), snr_db, samples)?);
        }
    }
    let diagnostics = trials.into_iter().flat_map(|t| t.diagnostics).collect();
    Ok(ExperimentOutcome {
        results,
        diagnostics,
        seed: spec.scenario.rng_seed,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    architecture: &'a str,
    snr_db: f64,
    mean_rate_bpshz: f64,
    ci95: f64,
    trials: usize,
    seed: u64,
}

/// Writes `architecture,snr_db,mean_rate_bpshz,ci95,trials,seed` rows.
pub fn write_rates_csv<W: Write>(writer: W, outcome: &ExperimentOutcome) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Io {
        path: PathBuf::from("<csv>"),
        source: std::io::Error::other(e),
    };
    for r in &outcome.results {
        csv.serialize(CsvRow {
            architecture: &r.architecture,
            snr_db: r.snr_db,
            mean_rate_bpshz: r.mean_rate,
            ci95: r.ci95_halfwidth,
            trials: r.per_trial_rates.len(),
            seed: outcome.seed,
        })
        .map_err(wrap)?;
    }
    csv.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<csv>"),
        source,
    })
}

/// Runs the experiment and writes the CSV to `spec.output_path`. The output
/// file is created before any computation so that an unwritable path fails fast.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let path = &spec.output_path;
    let io_err = |source| Error::Io {
        path: path.clone(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let outcome = compute_rates(spec, workers)?;
    write_rates_csv(std::io::BufWriter::new(file), &outcome).map_err(|e| match e {
        Error::Io { source, .. } => io_err(source),
        other => other,
    })?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::preset(Preset::Desk);
        spec.geometry = ArrayGeometry::with_defaults(2, 2, 3.5e9).unwrap();
        spec.scenario.num_users = 2;
        spec.scenario.num_trials = 6;
        spec.scenario.snr_grid_db = vec![0.0, 10.0];
        spec
    }

    #[test]
    fn architecture_names_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(a.label().parse::<Architecture>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.label()));
        }
        assert!("digital-n".parse::<Architecture>().is_err());
    }

    #[test]
    fn presets_are_valid() {
        let desk = ExperimentSpec::preset(Preset::Desk);
        desk.validate().unwrap();
        assert_eq!(desk.geometry.num_elements(), 32);
        let paper = ExperimentSpec::preset(Preset::Paper);
        paper.validate().unwrap();
        assert_eq!(paper.geometry.num_elements(), 160);
        assert_eq!(paper.scenario.num_users, 64);
        assert!("laptop".parse::<Preset>().is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let spec = tiny_spec();
        let back = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
        let mut value: serde_json::Value = serde_json::from_str(&spec.to_json()).unwrap();
        value["scenario"]["bogus"] = serde_json::json!(1);
        assert!(matches!(
            ExperimentSpec::from_json(&value.to_string()),
            Err(Error::Config(_))
        ));
        let mut value: serde_json::Value = serde_json::from_str(&spec.to_json()).unwrap();
        value["architectures"] = serde_json::json!([]);
        assert!(ExperimentSpec::from_json(&value.to_string()).is_err());
        let mut value: serde_json::Value = serde_json::from_str(&spec.to_json()).unwrap();
        value["geometry"]["carrier_frequency"] = serde_json::json!(2.4e9);
        assert!(ExperimentSpec::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn results_cover_every_cell_and_respect_bound() {
        let spec = tiny_spec();
        let out = compute_rates(&spec, 2).unwrap();
        assert_eq!(out.results.len(), 6 * 2);
        for snr in [0.0, 10.0] {
            let bound = out.get(Architecture::DigitalN, snr).unwrap();
            for arch in Architecture::ALL {
                let r = out.get(arch, snr).unwrap();
                assert_eq!(r.per_trial_rates.len(), 6);
                for (x, b) in r.per_trial_rates.iter().zip(&bound.per_trial_rates) {
                    assert!(*x <= b + DATA_PROCESSING_TOL);
                }
            }
        }
        assert_eq!(out.diagnostics.len(), 6 * 3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let spec = tiny_spec();
        assert_eq!(compute_rates(&spec, 1).unwrap(), compute_rates(&spec, 3).unwrap());
    }

    #[test]
    fn unwritable_output_fails_before_work() {
        let mut spec = tiny_spec();
        spec.output_path = PathBuf::from("/nonexistent-dir/for/sure/rates.csv");
        assert!(matches!(run_experiment(&spec, 1), Err(Error::Io { .. })));
    }

    #[test]
    fn csv_layout() {
        let mut spec = tiny_spec();
        spec.architectures = vec![Architecture::DigitalN];
        spec.scenario.snr_grid_db = vec![0.0];
        let out = compute_rates(&spec, 1).unwrap();
        let mut buf = Vec::new();
        write_rates_csv(&mut buf, &out).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "architecture,snr_db,mean_rate_bpshz,ci95,trials,seed");
        let row = lines.next().unwrap();
        assert!(row.starts_with("digital-N,0.0,"));
        assert!(row.ends_with(",6,42"));
        assert!(lines.next().is_none());
    }

    #[test]
    fn paired_difference_of_identical_results_is_zero() {
        let r = RateResult::from_samples("a", 0.0, vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(paired_difference(&r, &r), (0.0, 0.0));
    }
}
