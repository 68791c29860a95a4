//! Front-end configuration for a given channel realization.
//!
//! The uplink rate is invariant to left-multiplication of the front-end by an
//! invertible matrix, and the rank-M optimum is `B` = the conjugated top-M left
//! singular vectors of `H`. The DMA tuning therefore minimizes
//! `||B - T A||_F` jointly over an invertible `T` and a structured `A`. With
//! `A` fixed, `T` is a least-squares solve against the diagonal `A A^H`. With
//! `T` fixed the objective splits into one scalar problem per element whose
//! minimizer is the Euclidean projection of the unconstrained solution onto
//! the feasible set. Both half-steps are exact, so the objective never grows.
//!
//! Coordinate ascent on the actual sum-rate can optionally polish either the
//! DMA weights or the phase-shifter baseline.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::array::{assemble_combiner, propagation_gains, AnalogCombiner, ArrayGeometry};
use crate::element::{lorentzian_phase_weight, project_weight, ElementWeight, FeasibleSet};
use crate::error::{Error, Result};
use crate::rate::uplink_sum_rate;
use crate::{CMatrix, C64};

fn default_max_iters() -> usize {
    100
}

fn default_rel_tol() -> f64 {
    1e-6
}

fn default_refine_snr_db() -> f64 {
    10.0
}

fn default_refine_max_sweeps() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOptions {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop once an iteration lowers the objective by less than this fraction.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Candidate phases per entry for coordinate ascent on the sum-rate;
    /// 0 disables the refinement.
    #[serde(default)]
    pub refine_grid: usize,
    /// SNR (dB) at which the refinement measures the rate.
    #[serde(default = "default_refine_snr_db")]
    pub refine_snr_db: f64,
    #[serde(default = "default_refine_max_sweeps")]
    pub refine_max_sweeps: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            rel_tol: default_rel_tol(),
            refine_grid: 0,
            refine_snr_db: default_refine_snr_db(),
            refine_max_sweeps: default_refine_max_sweeps(),
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        if !self.refine_snr_db.is_finite() {
            return Err(Error::invalid("refine_snr_db must be finite"));
        }
        Ok(())
    }

    fn refine_snr(&self) -> f64 {
        10f64.powf(self.refine_snr_db / 10.0)
    }
}

/// An element forced back on after its whole microstrip projected to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RevivedElement {
    pub iteration: usize,
    pub microstrip: usize,
    pub element: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerDiagnostics {
    /// Full alternating iterations performed.
    pub iterations: usize,
    /// Whether the relative-decrease criterion was met before `max_iters`.
    pub converged: bool,
    /// `||B - T A||_F` after every half-step, T-update first.
    pub objective_history: Vec<f64>,
    pub revived: Vec<RevivedElement>,
    /// Coordinate-ascent sweeps and the rate they reached, when enabled.
    pub refine_sweeps: usize,
    pub refined_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmaSolution {
    pub combiner: AnalogCombiner,
    pub diagnostics: OptimizerDiagnostics,
}

/// Rate-optimal rank-`m` front-end: rows are the conjugate-transposed top-`m`
/// left singular vectors of `h`.
pub fn unconstrained_combiner(h: &CMatrix, m: usize) -> Result<CMatrix> {
    let n = h.nrows();
    if m == 0 || m > n {
        return Err(Error::invalid(format!("number of RF chains {m} must lie in 1..={n}")));
    }
    // Pad to a square matrix so the SVD yields a full left basis even when
    // there are fewer users than RF chains.
    let padded = if h.ncols() < n {
        let mut p = CMatrix::zeros(n, n);
        p.columns_mut(0, h.ncols()).copy_from(h);
        p
    } else {
        h.clone()
    };
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    Ok(u.columns(0, m).adjoint())
}

/// Per-microstrip working state shared by the alternating solver.
struct Structure {
    strips: usize,
    per_strip: usize,
    gains: Vec<C64>,
}

impl Structure {
    fn entry(&self, q: &[C64], n: usize) -> C64 {
        q[n] * self.gains[n % self.per_strip]
    }

    /// Least-squares `T = B A^H (A A^H)^-1`, column by column.
    fn solve_transform(&self, b: &CMatrix, q: &[C64]) -> CMatrix {
        let mut t = CMatrix::zeros(b.nrows(), self.strips);
        for m in 0..self.strips {
            let cols = m * self.per_strip..(m + 1) * self.per_strip;
            let power: f64 = cols.clone().map(|n| self.entry(q, n).norm_sqr()).sum();
            if power == 0.0 {
                continue;
            }
            let mut col = t.column_mut(m);
            for n in cols {
                col.axpy(self.entry(q, n).conj() / power, &b.column(n), C64::new(1.0, 0.0));
            }
        }
        t
    }

    fn objective(&self, b: &CMatrix, t: &CMatrix, q: &[C64]) -> f64 {
        let mut total = 0.0;
        for n in 0..b.ncols() {
            let a = self.entry(q, n);
            let tm = t.column(n / self.per_strip);
            total += b
                .column(n)
                .iter()
                .zip(tm.iter())
                .map(|(bi, ti)| (bi - ti * a).norm_sqr())
                .sum::<f64>();
        }
        total.sqrt()
    }
}

fn revive(z: C64, set: FeasibleSet) -> Result<ElementWeight> {
    let p = project_weight(z, set)?;
    if p.value().norm() > 0.0 {
        Ok(p)
    } else {
        ElementWeight::new(set.radiating_state(), set)
    }
}

/// Configures DMA element weights in `set` for channel `h` (N x K).
pub fn optimize_dma(h: &CMatrix, geo: &ArrayGeometry, set: FeasibleSet, opts: &OptimizerOptions) -> Result<DmaSolution> {
    geo.validate()?;
    opts.validate()?;
    let n_elems = geo.num_elements();
    if h.nrows() != n_elems {
        return Err(Error::invalid(format!(
            "channel has {} rows but the array has {n_elems} elements",
            h.nrows()
        )));
    }
    let b = unconstrained_combiner(h, geo.num_microstrips)?;
    let st = Structure {
        strips: geo.num_microstrips,
        per_strip: geo.elements_per_microstrip,
        gains: propagation_gains(geo),
    };

    let init = ElementWeight::new(set.radiating_state(), set)?;
    let mut weights = vec![init; n_elems];
    let mut q: Vec<C64> = weights.iter().map(|w| w.value()).collect();
    let mut diag = OptimizerDiagnostics::default();
    let mut previous: Option<f64> = None;

    for iteration in 0..opts.max_iters {
        diag.iterations = iteration + 1;
        let t = st.solve_transform(&b, &q);
        diag.objective_history.push(st.objective(&b, &t, &q));

        for m in 0..st.strips {
            let tm = t.column(m);
            let t_power = tm.norm_squared();
            if t_power == 0.0 {
                continue;
            }
            let mut candidates = Vec::with_capacity(st.per_strip);
            for l in 0..st.per_strip {
                let n = m * st.per_strip + l;
                let g = st.gains[l];
                let target = if g.norm() == 0.0 {
                    q[n]
                } else {
                    tm.dotc(&b.column(n)) / (g * t_power)
                };
                candidates.push(target);
                weights[n] = project_weight(target, set)?;
            }
            let strip = m * st.per_strip..(m + 1) * st.per_strip;
            if weights[strip.clone()].iter().all(|w| w.value().norm() == 0.0) {
                let (l, _) = candidates
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
                weights[strip.start + l] = revive(candidates[l], set)?;
                diag.revived.push(RevivedElement {
                    iteration,
                    microstrip: m,
                    element: l,
                });
            }
            for n in strip {
                q[n] = weights[n].value();
            }
        }
        let objective = st.objective(&b, &t, &q);
        diag.objective_history.push(objective);

        if objective == 0.0 {
            diag.converged = true;
            break;
        }
        if let Some(prev) = previous {
            if prev - objective < opts.rel_tol * prev {
                diag.converged = true;
                break;
            }
        }
        previous = Some(objective);
    }

    let combiner = assemble_combiner(geo, &weights)?;
    let mut solution = DmaSolution {
        combiner,
        diagnostics: diag,
    };
    if opts.refine_grid > 0 {
        solution = refine_dma(h, solution, opts.refine_snr(), opts.refine_grid, opts.refine_max_sweeps)?;
    }
    Ok(solution)
}

fn refine_candidates(set: FeasibleSet, grid: usize, current: &ElementWeight) -> Result<Vec<ElementWeight>> {
    let phases = (0..grid).map(|k| TAU * k as f64 / grid as f64);
    match set {
        FeasibleSet::BinaryAmplitude => Ok(vec![
            ElementWeight::new(C64::new(0.0, 0.0), set)?,
            ElementWeight::new(C64::new(1.0, 0.0), set)?,
        ]),
        FeasibleSet::LorentzianPhase => phases.map(lorentzian_phase_weight).collect(),
        FeasibleSet::UnitModulus => phases.map(|p| ElementWeight::new(C64::from_polar(1.0, p), set)).collect(),
        FeasibleSet::Unconstrained => {
            let r = current.value().norm();
            phases.map(|p| ElementWeight::new(C64::from_polar(r, p), set)).collect()
        }
    }
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate > current + 1e-12 * current.abs().max(1.0)
}

/// Coordinate ascent on the sum-rate at linear `snr`, one element at a time
/// over `grid` candidate states, until a sweep brings no gain. Microstrips
/// are never switched fully off.
pub fn refine_dma(h: &CMatrix, solution: DmaSolution, snr: f64, grid: usize, max_sweeps: usize) -> Result<DmaSolution> {
    let DmaSolution {
        combiner,
        mut diagnostics,
    } = solution;
    let geo = *combiner.geometry();
    let set = combiner.set();
    let per_strip = geo.elements_per_microstrip;
    let gains = propagation_gains(&geo);
    let mut weights = combiner.weights().to_vec();
    let mut a = combiner.into_matrix();
    let mut rate = uplink_sum_rate(&a, h, snr)?;

    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for n in 0..weights.len() {
            let m = n / per_strip;
            let strip = m * per_strip..(m + 1) * per_strip;
            let current = weights[n];
            let mut best = (rate, current);
            for cand in refine_candidates(set, grid, &current)? {
                if cand.value() == current.value() {
                    continue;
                }
                if cand.value().norm() == 0.0 && strip.clone().all(|i| i == n || weights[i].value().norm() == 0.0) {
                    continue;
                }
                a[(m, n)] = cand.value() * gains[n % per_strip];
                if let Ok(r) = uplink_sum_rate(&a, h, snr) {
                    if improves(r, best.0) {
                        best = (r, cand);
                    }
                }
            }
            a[(m, n)] = best.1.value() * gains[n % per_strip];
            if best.1.value() != current.value() {
                weights[n] = best.1;
                rate = best.0;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    diagnostics.refine_sweeps = sweeps;
    diagnostics.refined_rate = Some(rate);
    Ok(DmaSolution {
        combiner: assemble_combiner(&geo, &weights)?,
        diagnostics,
    })
}

/// Entry-wise phase `exp(j angle(b))`; zero entries take phase 0.
pub fn phase_only(b: &CMatrix) -> CMatrix {
    b.map(|z| if z.norm() == 0.0 { C64::new(1.0, 0.0) } else { z / z.norm() })
}

/// Fully connected phase-shifter front-end: the entry-wise phase of the
/// rate-optimal combiner, optionally polished by coordinate ascent over
/// `refine_grid` phases per entry.
pub fn optimize_phase_shifter_hybrid(h: &CMatrix, m: usize, opts: &OptimizerOptions) -> Result<CMatrix> {
    opts.validate()?;
    let mut a = phase_only(&unconstrained_combiner(h, m)?);
    if opts.refine_grid == 0 {
        return Ok(a);
    }
    let snr = opts.refine_snr();
    let phases: Vec<C64> = (0..opts.refine_grid)
        .map(|k| C64::from_polar(1.0, TAU * k as f64 / opts.refine_grid as f64))
        .collect();
    let mut rate = uplink_sum_rate(&a, h, snr)?;
    for _ in 0..opts.refine_max_sweeps {
        let mut improved = false;
        for col in 0..a.ncols() {
            for row in 0..a.nrows() {
                let current = a[(row, col)];
                let mut best = (rate, current);
                for &p in &phases {
                    a[(row, col)] = p;
                    if let Ok(r) = uplink_sum_rate(&a, h, snr) {
                        if improves(r, best.0) {
                            best = (r, p);
                        }
                    }
                }
                a[(row, col)] = best.1;
                if best.1 != current {
                    rate = best.0;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(a)
}
