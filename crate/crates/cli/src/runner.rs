//! Config-driven experiment execution.

use std::path::{Path, PathBuf};

use allelo_core::coupling::{couple_gbt, run_ladder, CouplingAxis};
use allelo_core::duality::{
    ancestor_path, check_duality_with, forward_at, predict_with, renewal_scan, AncestorPrediction, DualIndex, DualTree,
};
use allelo_core::engine::{sample_initial_with, write_ppm};
use allelo_core::events::{generate_log, Channel, EventKind, EventLog, LogSpec};
use allelo_core::meanfield::{
    basin_map, classify, integrate, BasinLabel, DensityPair, IntegratorOptions, MeanFieldParams,
};
use allelo_core::percolation::{estimate_theta, percolate, PercSpec, ThetaEstimate};
use allelo_core::{
    classify_outcome, simulate, Lattice, ModelParams, OutcomeLabel, Purpose, SampleSpec, SiteState, StreamKey,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config, CliError, Result};
use crate::manifest::{Manifest, OutputDir};
use crate::sweep::{phase_sweep, replicate_keys, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Ppm,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    pub format: Format,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub out: PathBuf,
    pub manifest: Manifest,
    pub summary: Value,
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(config("--workers must be at least 1"));
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?.install(f))
}

fn csv<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Validate `cfg`, run it and write outputs plus a manifest. On failure the
/// output directory is marked with a `FAILED` sentinel.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunResult> {
    cfg.validate()?;
    if opts.format == Format::Ppm && !(cfg.kind == ExperimentKind::Simulate && cfg.model.dim == 2) {
        return Err(config("--format ppm needs a simulate experiment with dim = 2"));
    }
    let root =
        opts.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.name()));
    let mut dir = OutputDir::open(&root, &format!("{} seed {}", cfg.kind.name(), cfg.seed))?;
    let result = with_workers(opts.workers, || execute(cfg, opts.format, &mut dir)).and_then(|r| r);
    match result {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary)? + "\n";
            dir.write("summary.json", text.as_bytes())?;
            dir.write("config.toml", cfg.to_toml().as_bytes())?;
            let manifest = dir.finish(Manifest {
                tool: "allelo".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                kind: cfg.kind.name().into(),
                seed: cfg.seed,
                config_sha256: cfg.digest(),
                config: cfg.to_toml(),
                files: Vec::new(),
            })?;
            Ok(RunResult { out: root, manifest, summary })
        }
        Err(e) => {
            dir.fail(&e.to_string())?;
            Err(e)
        }
    }
}

fn execute(cfg: &ExperimentConfig, format: Format, dir: &mut OutputDir) -> Result<Value> {
    match cfg.kind {
        ExperimentKind::Simulate => run_simulate(cfg, format, dir),
        ExperimentKind::Meanfield => run_meanfield(cfg, dir),
        ExperimentKind::Basin => run_basin(cfg, dir),
        ExperimentKind::SweepGamma => run_sweep(cfg, CouplingAxis::Gamma, dir),
        ExperimentKind::SweepBeta => run_sweep(cfg, CouplingAxis::Beta2, dir),
        ExperimentKind::GbtCouple => run_gbt(cfg, dir),
        ExperimentKind::MonoCouple => run_mono(cfg, dir),
        ExperimentKind::DualityCheck => run_duality(cfg, dir),
        ExperimentKind::AncestorCheck => run_ancestor(cfg, dir),
        ExperimentKind::Percolation => run_percolation(cfg, dir),
    }
}

fn initial_for(cfg: &ExperimentConfig, r: u32) -> Result<allelo_core::SpatialConfig> {
    let (ik, _) = replicate_keys(0, r);
    Ok(sample_initial_with(cfg.model.side, cfg.model.dim, cfg.initial.p1, cfg.initial.p2, cfg.seed, ik)?)
}

fn outcome_counts(labels: &[OutcomeLabel]) -> Value {
    let mut m = serde_json::Map::new();
    for l in OutcomeLabel::ALL {
        m.insert(l.name().into(), json!(labels.iter().filter(|&&x| x == l).count()));
    }
    Value::Object(m)
}

fn run_simulate(cfg: &ExperimentConfig, format: Format, dir: &mut OutputDir) -> Result<Value> {
    let lattice = Lattice::for_params(&cfg.model)?;
    let h = cfg.run.horizon;
    let outs = (0..cfg.run.replicates)
        .into_par_iter()
        .map(|r| {
            let init = initial_for(cfg, r)?;
            let (_, ek) = replicate_keys(0, r);
            let mut spec = SampleSpec::uniform(h, cfg.run.samples).key(ek);
            if format == Format::Ppm {
                spec = spec.snapshots(if cfg.run.snapshots.is_empty() { vec![h] } else { cfg.run.snapshots.clone() });
            }
            Ok(simulate(&init, &lattice, &cfg.model, h, cfg.seed, &spec)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut labels = Vec::new();
    let mut reps = Vec::new();
    for (r, out) in outs.iter().enumerate() {
        dir.write(&format!("series_r{r:04}.csv"), &csv(|w| out.series.write_csv(w))?)?;
        for s in &out.series.snapshots {
            let mut buf = Vec::new();
            write_ppm(&s.config, &mut buf)?;
            dir.write(&format!("snapshot_r{r:04}_t{}.ppm", s.time), &buf)?;
        }
        let label = classify_outcome(&out.series);
        labels.push(label);
        reps.push(json!({
            "replicate": r,
            "outcome": label.name(),
            "final_counts": out.series.final_counts,
            "extinction_times": out.series.extinction,
        }));
    }
    Ok(json!({
        "kind": "simulate",
        "outcomes": outcome_counts(&labels),
        "replicates": reps,
    }))
}

/// Pixmaps of replicate 0 at `times`, named `snapshot_t{time}.ppm`.
pub fn snapshot_figure(cfg: &ExperimentConfig, times: &[f64], dir: &mut OutputDir) -> Result<Vec<String>> {
    if cfg.model.dim != 2 {
        return Err(config(format!("snapshot figures need dim = 2, got {}", cfg.model.dim)));
    }
    cfg.model.validate()?;
    let lattice = Lattice::for_params(&cfg.model)?;
    let init = initial_for(cfg, 0)?;
    let h = times.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (_, ek) = replicate_keys(0, 0);
    let spec = SampleSpec::endpoints(h).snapshots(times.to_vec()).key(ek);
    let out = simulate(&init, &lattice, &cfg.model, h, cfg.seed, &spec)?;
    let mut names = Vec::new();
    for s in &out.series.snapshots {
        let mut buf = Vec::new();
        write_ppm(&s.config, &mut buf)?;
        let name = format!("snapshot_t{}.ppm", s.time);
        dir.write(&name, &buf)?;
        names.push(name);
    }
    Ok(names)
}

fn mf_params(m: &ModelParams) -> MeanFieldParams {
    MeanFieldParams::new(m.beta1, m.beta2, m.gamma)
}

fn run_meanfield(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let p = mf_params(&cfg.model);
    let c = classify(&p);
    dir.write("fixed_points.csv", &csv(|w| c.report.write_csv(w))?)?;
    let mut trajs = Vec::new();
    for (k, s) in cfg.meanfield.starts.iter().enumerate() {
        let tr = integrate(DensityPair::new(s[0], s[1]), &p, cfg.meanfield.t_max, &IntegratorOptions::default())?;
        dir.write(&format!("trajectory_{k}.csv"), &csv(|w| tr.write_csv(w))?)?;
        trajs.push(json!({
            "start": s,
            "terminal": [tr.terminal.u1, tr.terminal.u2],
            "nearest": tr.nearest.name(),
            "distance": tr.nearest_dist,
            "converged": tr.converged(),
        }));
    }
    Ok(json!({
        "kind": "meanfield",
        "in_b0": c.in_b0,
        "in_b1": c.in_b1,
        "in_b2": c.in_b2,
        "marginal": c.marginal,
        "predicted": format!("{:?}", c.predicted),
        "saddle_det": c.saddle_det,
        "trajectories": trajs,
    }))
}

fn run_basin(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let p = mf_params(&cfg.model);
    let map = basin_map(&p, cfg.basin.resolution, cfg.basin.t_max)?;
    dir.write("basin.csv", &csv(|w| map.write_csv(w))?)?;
    let mut areas = serde_json::Map::new();
    for l in [BasinLabel::P0, BasinLabel::P1, BasinLabel::P2, BasinLabel::P12, BasinLabel::Undecided] {
        areas.insert(l.name().into(), json!(map.area(l)));
    }
    Ok(json!({"kind": "basin", "cells": map.cells.len(), "areas": areas}))
}

pub fn sweep_spec(cfg: &ExperimentConfig, axis: CouplingAxis) -> SweepSpec {
    SweepSpec {
        base: cfg.model,
        axis,
        beta1: cfg.sweep_beta1(),
        ladder: cfg.sweep.ladder.clone(),
        p1: cfg.initial.p1,
        p2: cfg.initial.p2,
        replicates: cfg.run.replicates,
        horizon: cfg.run.horizon,
        seed: cfg.seed,
    }
}

fn run_sweep(cfg: &ExperimentConfig, axis: CouplingAxis, dir: &mut OutputDir) -> Result<Value> {
    let table = phase_sweep(&sweep_spec(cfg, axis))?;
    dir.write("win_frequency.csv", &csv(|w| table.write_csv(w))?)?;
    dir.write("critical.csv", &csv(|w| table.write_critical_csv(w))?)?;
    if table.violations > 0 {
        return Err(CliError::Invariant(format!("{} coupling violations in the sweep", table.violations)));
    }
    Ok(json!({
        "kind": cfg.kind.name(),
        "cells": table.cells,
        "critical_estimates_empirical": table.critical_estimates(),
    }))
}

fn run_gbt(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let lattice = Lattice::for_params(&cfg.model)?;
    let times = SampleSpec::uniform(cfg.run.horizon, cfg.run.samples).times;
    let outs = (0..cfg.run.replicates)
        .into_par_iter()
        .map(|r| {
            let init = initial_for(cfg, r)?;
            let (_, ek) = replicate_keys(0, r);
            Ok(couple_gbt(&init, &lattice, &cfg.model, cfg.run.horizon, cfg.seed, &times, ek)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = 0;
    let mut outside = 0;
    let mut dominated = true;
    for (r, o) in outs.iter().enumerate() {
        dir.write(&format!("coupling_r{r:04}.csv"), &csv(|w| o.report.write_csv(w))?)?;
        violations += o.report.violations;
        outside += o.report.outside_closed_set;
        dominated &= o.susceptible_dominates.iter().all(|&d| d);
    }
    if violations > 0 || !dominated {
        return Err(CliError::Invariant(format!(
            "grass-bush-tree coupling: {violations} ordering violations, {outside} states outside the closed set, domination {dominated}"
        )));
    }
    Ok(json!({
        "kind": "gbt-couple",
        "replicates": outs.len(),
        "violations": violations,
        "outside_closed_set": outside,
        "susceptible_dominates": dominated,
    }))
}

fn run_mono(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let lattice = Lattice::for_params(&cfg.model)?;
    let axis: CouplingAxis = cfg.couple.axis.into();
    let times = SampleSpec::uniform(cfg.run.horizon, cfg.run.samples).times;
    let outs = (0..cfg.run.replicates)
        .into_par_iter()
        .map(|r| {
            let init = initial_for(cfg, r)?;
            let (_, ek) = replicate_keys(0, r);
            Ok(run_ladder(
                &init,
                &lattice,
                &cfg.model,
                axis,
                &cfg.couple.levels,
                cfg.run.horizon,
                cfg.seed,
                &times,
                ek,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = 0;
    for (r, o) in outs.iter().enumerate() {
        dir.write(&format!("coupling_r{r:04}.csv"), &csv(|w| o.report.write_csv(w))?)?;
        violations += o.report.violations;
    }
    if violations > 0 {
        return Err(CliError::Invariant(format!("{violations} ordering violations in the monotone coupling")));
    }
    Ok(json!({
        "kind": "mono-couple",
        "axis": crate::sweep::axis_name(axis),
        "levels": cfg.couple.levels,
        "replicates": outs.len(),
        "violations": violations,
    }))
}

/// Log of the symmetric model: one birth label at rate `beta`, no kills.
pub fn symmetric_log(params: &ModelParams, lattice: &Lattice, horizon: f64, seed: u64, r: u32) -> Result<EventLog> {
    let channels = [Channel::new(EventKind::Cross, 1.0), Channel::new(EventKind::Birth1, params.beta1)];
    Ok(generate_log(
        params,
        lattice,
        &channels,
        LogSpec::new(horizon, seed).key(StreamKey::new(0, r, Purpose::Events)),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DualityTally {
    pub checks: usize,
    pub mismatches: usize,
    pub occupied: usize,
}

/// Duality check of every site of one realization.
pub fn duality_realization(cfg: &ExperimentConfig, lattice: &Lattice, r: u32) -> Result<DualityTally> {
    let t = cfg.dual_time();
    let log = symmetric_log(&cfg.model, lattice, cfg.run.horizon, cfg.seed, r)?;
    let init = initial_for(cfg, r)?;
    let index = DualIndex::new(&log)?;
    let fwd = forward_at(&init, &log, t);
    let mut tally = DualityTally::default();
    for x in 0..lattice.sites() {
        tally.checks += 1;
        if !check_duality_with(&index, &init, &fwd, x, t)? {
            tally.mismatches += 1;
        }
        tally.occupied += fwd.get(x).is_occupied() as usize;
    }
    Ok(tally)
}

fn run_duality(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let lattice = Lattice::for_params(&cfg.model)?;
    let tallies = (0..cfg.dual.realizations)
        .into_par_iter()
        .map(|r| duality_realization(cfg, &lattice, r))
        .collect::<Result<Vec<_>>>()?;
    let bytes = csv(|w| {
        use std::io::Write;
        writeln!(w, "realization,sites,occupied,mismatches")?;
        for (r, t) in tallies.iter().enumerate() {
            writeln!(w, "{r},{},{},{}", t.checks, t.occupied, t.mismatches)?;
        }
        Ok(())
    })?;
    dir.write("duality.csv", &bytes)?;
    let checks: usize = tallies.iter().map(|t| t.checks).sum();
    let mismatches: usize = tallies.iter().map(|t| t.mismatches).sum();
    if mismatches > 0 {
        return Err(CliError::Invariant(format!("duality failed at {mismatches} of {checks} points")));
    }
    Ok(json!({"kind": "duality-check", "checks": checks, "mismatches": mismatches}))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AncestorTally {
    pub determined: usize,
    pub matched: usize,
    /// Dual alive but landing on an empty site.
    pub undetermined: usize,
    pub dual_extinct: usize,
    /// Dual extinct and the site vacant.
    pub extinct_vacant: usize,
}

impl AncestorTally {
    pub fn add(&mut self, o: &AncestorTally) {
        self.determined += o.determined;
        self.matched += o.matched;
        self.undetermined += o.undetermined;
        self.dual_extinct += o.dual_extinct;
        self.extinct_vacant += o.extinct_vacant;
    }

    pub fn exact(&self) -> bool {
        self.determined == self.matched && self.dual_extinct == self.extinct_vacant
    }
}

pub fn ancestor_realization(cfg: &ExperimentConfig, lattice: &Lattice, r: u32) -> Result<AncestorTally> {
    let t = cfg.dual_time();
    let log = symmetric_log(&cfg.model, lattice, cfg.run.horizon, cfg.seed, r)?;
    let init = initial_for(cfg, r)?;
    let index = DualIndex::new(&log)?;
    let fwd = forward_at(&init, &log, t);
    let mut tally = AncestorTally::default();
    for x in 0..lattice.sites() {
        match predict_with(&index, &init, x, t)? {
            AncestorPrediction::Determined(s) => {
                tally.determined += 1;
                tally.matched += (s == fwd.get(x)) as usize;
            }
            AncestorPrediction::Undetermined { dual_alive: true } => tally.undetermined += 1,
            AncestorPrediction::Undetermined { dual_alive: false } => {
                tally.dual_extinct += 1;
                tally.extinct_vacant += (fwd.get(x) == SiteState::Empty) as usize;
            }
        }
    }
    Ok(tally)
}

fn run_ancestor(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let lattice = Lattice::for_params(&cfg.model)?;
    let tallies = (0..cfg.dual.realizations)
        .into_par_iter()
        .map(|r| ancestor_realization(cfg, &lattice, r))
        .collect::<Result<Vec<_>>>()?;
    let bytes = csv(|w| {
        use std::io::Write;
        writeln!(w, "realization,determined,matched,undetermined,dual_extinct,extinct_vacant")?;
        for (r, t) in tallies.iter().enumerate() {
            writeln!(
                w,
                "{r},{},{},{},{},{}",
                t.determined, t.matched, t.undetermined, t.dual_extinct, t.extinct_vacant
            )?;
        }
        Ok(())
    })?;
    dir.write("ancestor.csv", &bytes)?;

    // distinguished particle of site 0 in realization 0, with renewal flags
    let log = symmetric_log(&cfg.model, &lattice, cfg.run.horizon, cfg.seed, 0)?;
    let tree = DualTree::build(&DualIndex::new(&log)?, 0, cfg.run.horizon)?;
    let path = ancestor_path(&tree);
    let scan = renewal_scan(&path, &log, &lattice, cfg.dual.lookahead)?;
    dir.write("ancestor_path.csv", &csv(|w| path.write_csv(&lattice, Some(&scan), w))?)?;

    let mut total = AncestorTally::default();
    for t in &tallies {
        total.add(t);
    }
    if !total.exact() {
        return Err(CliError::Invariant(format!(
            "first-ancestor prediction: {} of {} determined cases matched, {} of {} extinct duals vacant",
            total.matched, total.determined, total.extinct_vacant, total.dual_extinct
        )));
    }
    Ok(json!({
        "kind": "ancestor-check",
        "determined": total.determined,
        "matched": total.matched,
        "undetermined": total.undetermined,
        "dual_extinct": total.dual_extinct,
        "path_jumps": path.jumps().count(),
        "renewal_points": scan.points.iter().filter(|p| p.flagged == Some(true)).count(),
        "renewal_lookahead": cfg.dual.lookahead,
    }))
}

fn run_percolation(cfg: &ExperimentConfig, dir: &mut OutputDir) -> Result<Value> {
    let s = &cfg.percolation;
    let rows =
        s.p.iter().map(|&p| Ok(estimate_theta(p, s.dim, s.n_max, s.reps, cfg.seed)?)).collect::<Result<Vec<_>>>()?;
    dir.write("theta.csv", &csv(|w| ThetaEstimate::write_csv(&rows, w))?)?;
    let mut closed = Vec::new();
    for &p in &s.p {
        let sizes = (0..s.cluster_samples as u32)
            .into_par_iter()
            .map(|r| {
                let spec = PercSpec { replicate: r, ..PercSpec::new(p, s.dim, s.n_max, cfg.seed) };
                Ok(percolate(&spec)?.closed_cluster_size())
            })
            .collect::<Result<Vec<_>>>()?;
        closed.push((p, sizes));
    }
    let bytes = csv(|w| {
        use std::io::Write;
        writeln!(w, "p,samples,mean_closed_cluster_size,max_closed_cluster_size")?;
        for (p, sizes) in &closed {
            let mean = sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64;
            writeln!(w, "{p},{},{mean},{}", sizes.len(), sizes.iter().max().copied().unwrap_or(0))?;
        }
        Ok(())
    })?;
    dir.write("closed_clusters.csv", &bytes)?;
    Ok(json!({"kind": "percolation", "theta": rows}))
}

/// Run a config file.
pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunResult> {
    run(&ExperimentConfig::load(path)?, opts)
}
