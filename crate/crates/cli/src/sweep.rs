//! Win-frequency tables over parameter planes.
//!
//! A plane has an uncoupled axis (`beta1`) and a coupled axis (`gamma` or
//! `beta2`). Each replicate of an uncoupled cell runs every value of the
//! coupled axis at once through [`run_ladder`], so along that axis the
//! replicates share their clocks and the win frequencies are monotone
//! pathwise, not just in expectation.

use std::io::{self, Write};

use allelo_core::coupling::{run_ladder, CouplingAxis};
use allelo_core::engine::sample_initial_with;
use allelo_core::{classify_outcome, simulate, Lattice, ModelParams, OutcomeLabel, Purpose, SampleSpec, StreamKey};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ModelParams,
    /// `Gamma` for the `(beta1, gamma)` plane, `Beta2` for `(beta1, beta2)`.
    pub axis: CouplingAxis,
    pub beta1: Vec<f64>,
    pub ladder: Vec<f64>,
    pub p1: f64,
    pub p2: f64,
    pub replicates: u32,
    pub horizon: f64,
    pub seed: u64,
}

impl SweepSpec {
    /// The outcome whose frequency the coupled axis pushes up.
    pub fn favored(&self) -> OutcomeLabel {
        match self.axis {
            CouplingAxis::Beta2 => OutcomeLabel::Species2Wins,
            _ => OutcomeLabel::Species1Wins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub replicates: u32,
    /// Counts in [`OutcomeLabel::ALL`] order.
    pub counts: [u32; 4],
}

impl CellResult {
    pub fn frequency(&self, label: OutcomeLabel) -> f64 {
        let k = OutcomeLabel::ALL.iter().position(|&l| l == label).expect("known label");
        self.counts[k] as f64 / self.replicates as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalEstimate {
    pub beta1: f64,
    pub axis: &'static str,
    pub label: &'static str,
    /// Midpoint of the steepest step of the favored win frequency.
    pub estimate: f64,
    /// Half the grid spacing at that step.
    pub uncertainty: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinTable {
    pub spec: SweepSpec,
    /// `beta1`-major, ladder-minor.
    pub cells: Vec<CellResult>,
    /// Per `beta1` value and replicate, the outcome at every ladder level.
    pub outcomes: Vec<Vec<Vec<OutcomeLabel>>>,
    pub violations: usize,
}

impl WinTable {
    pub fn cell(&self, i: usize, k: usize) -> &CellResult {
        &self.cells[i * self.spec.ladder.len() + k]
    }

    /// Favored win frequency along the ladder for `beta1` index `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.spec.ladder.len()).map(|k| self.cell(i, k).frequency(self.spec.favored())).collect()
    }

    pub fn critical_estimates(&self) -> Vec<CriticalEstimate> {
        let axis = axis_name(self.spec.axis);
        let mut out = Vec::new();
        for (i, &b1) in self.spec.beta1.iter().enumerate() {
            let f = self.column(i);
            let best = f.windows(2).enumerate().map(|(k, w)| (k, (w[1] - w[0]).abs())).fold(
                None,
                |acc: Option<(usize, f64)>, (k, d)| match acc {
                    Some((_, bd)) if bd >= d => acc,
                    _ => Some((k, d)),
                },
            );
            if let Some((k, d)) = best.filter(|b| b.1 > 0.0) {
                let (lo, hi) = (self.spec.ladder[k], self.spec.ladder[k + 1]);
                out.push(CriticalEstimate {
                    beta1: b1,
                    axis,
                    label: self.spec.favored().name(),
                    estimate: 0.5 * (lo + hi),
                    uncertainty: 0.5 * (hi - lo),
                    jump: d,
                });
            }
        }
        out
    }

    /// CSV `beta1,beta2,gamma,replicates,species1_wins,species2_wins,both_extinct,coexist_at_horizon`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "beta1,beta2,gamma,replicates")?;
        for l in OutcomeLabel::ALL {
            write!(w, ",{}", l.name())?;
        }
        writeln!(w)?;
        for c in &self.cells {
            write!(w, "{},{},{},{}", c.beta1, c.beta2, c.gamma, c.replicates)?;
            for l in OutcomeLabel::ALL {
                write!(w, ",{}", c.frequency(l))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// CSV `beta1,axis,label,estimate,uncertainty,jump` of empirical critical values.
    pub fn write_critical_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "beta1,axis,label,estimate,uncertainty,jump")?;
        for e in self.critical_estimates() {
            writeln!(w, "{},{},{},{},{},{}", e.beta1, e.axis, e.label, e.estimate, e.uncertainty, e.jump)?;
        }
        Ok(())
    }
}

pub fn axis_name(axis: CouplingAxis) -> &'static str {
    match axis {
        CouplingAxis::Gamma => "gamma",
        CouplingAxis::Beta1 => "beta1",
        CouplingAxis::Beta2 => "beta2",
    }
}

/// Stream keys of replicate `r` in cell `cell`: initial state and clocks.
pub fn replicate_keys(cell: u32, r: u32) -> (StreamKey, StreamKey) {
    (StreamKey::new(cell, r, Purpose::Initial), StreamKey::new(cell, r, Purpose::Events))
}

pub fn phase_sweep(spec: &SweepSpec) -> Result<WinTable> {
    if spec.beta1.is_empty() || spec.ladder.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    if spec.axis == CouplingAxis::Beta1 {
        return Err(CliError::Config("the coupled sweep axis must be gamma or beta2".into()));
    }
    if spec.beta1.len() > StreamKey::MAX_CELL as usize + 1 {
        return Err(CliError::Config("too many sweep cells".into()));
    }
    let lattice = Lattice::for_params(&spec.base)?;
    let reps = spec.replicates;
    let jobs: Vec<(usize, u32)> = (0..spec.beta1.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let results: Vec<(Vec<OutcomeLabel>, usize)> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let params = ModelParams { beta1: spec.beta1[i], ..spec.base };
            let (ik, ek) = replicate_keys(i as u32, r);
            let init = sample_initial_with(params.side, params.dim, spec.p1, spec.p2, spec.seed, ik)?;
            let out = run_ladder(
                &init,
                &lattice,
                &params,
                spec.axis,
                &spec.ladder,
                spec.horizon,
                spec.seed,
                &[spec.horizon],
                ek,
            )?;
            let labels = out.series.iter().map(classify_outcome).collect();
            Ok((labels, out.report.violations))
        })
        .collect::<std::result::Result<_, allelo_core::Error>>()?;

    let mut outcomes = vec![Vec::with_capacity(reps as usize); spec.beta1.len()];
    let mut violations = 0;
    for (&(i, _), (labels, v)) in jobs.iter().zip(results) {
        outcomes[i].push(labels);
        violations += v;
    }
    let mut cells = Vec::new();
    for (i, &b1) in spec.beta1.iter().enumerate() {
        for (k, &v) in spec.ladder.iter().enumerate() {
            let p = spec.axis.with_value(&ModelParams { beta1: b1, ..spec.base }, v);
            let mut counts = [0u32; 4];
            for rep in &outcomes[i] {
                counts[OutcomeLabel::ALL.iter().position(|&l| l == rep[k]).expect("known label")] += 1;
            }
            cells.push(CellResult { beta1: p.beta1, beta2: p.beta2, gamma: p.gamma, replicates: reps, counts });
        }
    }
    Ok(WinTable { spec: spec.clone(), cells, outcomes, violations })
}

/// Independent runs of one parameter point with the same stream keys a sweep
/// cell would use.
#[allow(clippy::too_many_arguments)]
pub fn simulate_batch(
    params: &ModelParams,
    p1: f64,
    p2: f64,
    replicates: u32,
    horizon: f64,
    seed: u64,
    cell: u32,
) -> Result<Vec<OutcomeLabel>> {
    let lattice = Lattice::for_params(params)?;
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let (ik, ek) = replicate_keys(cell, r);
            let init = sample_initial_with(params.side, params.dim, p1, p2, seed, ik)?;
            let out = simulate(&init, &lattice, params, horizon, seed, &SampleSpec::endpoints(horizon).key(ek))?;
            Ok(classify_outcome(&out.series))
        })
        .collect::<std::result::Result<_, allelo_core::Error>>()
        .map_err(CliError::from)
}
