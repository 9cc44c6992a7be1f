//! The acceptance suite: every criterion at its stated tolerance, with one
//! pass/fail line each. Each criterion also produces a byte string of its
//! primary results; the determinism criterion reruns the suite with another
//! worker count and compares their digests.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use allelo_core::coupling::{
    couple_birthrate, couple_gamma, couple_gbt, gbt_table_lookup, gbt_transition, CouplingAxis, PairState, CLOSED_SET,
    GBT_KINDS,
};
use allelo_core::engine::sample_initial_with;
use allelo_core::meanfield::{
    basin_map, classify, determinant, dulac_divergence, dulac_divergence_numeric, integrate, jacobian, rhs, BasinLabel,
    DensityPair, FixedPoint, IntegratorOptions, MeanFieldParams, Stability,
};
use allelo_core::percolation::{estimate_theta, percolate, PercSpec};
use allelo_core::stream_rng;
use allelo_core::{
    simulate, Lattice, ModelParams, OutcomeLabel, Purpose, SampleSpec, SiteState, SpatialConfig, StreamKey,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, InitialDensities};
use crate::error::Result;
use crate::manifest::sha256_hex;
use crate::oracles::{ring_law, total_variation};
use crate::runner::{ancestor_realization, duality_realization, with_workers, AncestorTally};
use crate::sweep::{phase_sweep, SweepSpec};

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
    /// SHA-256 of the primary output bytes.
    pub digest: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        let limit = self.limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        format!(
            "{} {:02} {}: {} ({:.1} s{limit})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Workers for the main pass; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Workers for the determinism rerun.
    pub rerun_workers: usize,
    /// Restrict to these criterion ids (the determinism criterion reruns only these).
    pub only: Option<Vec<u32>>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { workers: None, rerun_workers: 1, only: None }
    }
}

struct Check {
    passed: bool,
    detail: String,
    primary: Vec<u8>,
}

type CriterionFn = fn() -> Result<Check>;

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Option<u64>,
    run: CriterionFn,
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, title: "mean-field fixed points", limit: Some(5), run: c01_fixed_points },
    Criterion { id: 2, title: "stability vs regions", limit: Some(5), run: c02_stability },
    Criterion { id: 3, title: "bistability and basins", limit: Some(120), run: c03_bistability },
    Criterion { id: 4, title: "Dulac negativity", limit: Some(30), run: c04_dulac },
    Criterion { id: 5, title: "exact CTMC oracle", limit: Some(120), run: c05_ctmc },
    Criterion { id: 6, title: "coupling exactness", limit: Some(60), run: c06_couplings },
    Criterion { id: 7, title: "grass-bush-tree table and domination", limit: None, run: c07_gbt_table },
    Criterion { id: 8, title: "duality", limit: Some(60), run: c08_duality },
    Criterion { id: 9, title: "first ancestor", limit: Some(120), run: c09_first_ancestor },
    Criterion { id: 10, title: "directional phase checks", limit: Some(1800), run: c10_phase },
    Criterion { id: 11, title: "percolation", limit: Some(60), run: c11_percolation },
];

fn timed(c: &Criterion) -> CriterionOutcome {
    let start = Instant::now();
    let res = (c.run)();
    let elapsed = start.elapsed();
    let limit = c.limit.map(Duration::from_secs);
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let (passed, mut detail, digest) = match res {
        Ok(ch) => (ch.passed && in_time, ch.detail, sha256_hex(&ch.primary)),
        Err(e) => (false, format!("error: {e}"), String::new()),
    };
    if !in_time {
        detail.push_str("; over the runtime limit");
    }
    CriterionOutcome { id: c.id, title: c.title, passed, detail, elapsed, limit, digest }
}

/// Run the suite, calling `report` after each criterion.
pub fn run_suite(opts: &SuiteOptions, mut report: impl FnMut(&CriterionOutcome)) -> Result<Vec<CriterionOutcome>> {
    let selected: Vec<&Criterion> =
        CRITERIA.iter().filter(|c| opts.only.as_ref().is_none_or(|o| o.contains(&c.id))).collect();
    let mut outcomes = Vec::new();
    for c in &selected {
        let o = with_workers(opts.workers, || timed(c))?;
        report(&o);
        outcomes.push(o);
    }
    if opts.only.as_ref().is_none_or(|o| o.contains(&12)) {
        let start = Instant::now();
        let mut mismatched = Vec::new();
        for (c, first) in selected.iter().zip(&outcomes) {
            let again = with_workers(Some(opts.rerun_workers), || timed(c))?;
            if again.digest != first.digest || first.digest.is_empty() {
                mismatched.push(c.id);
            }
        }
        let o = CriterionOutcome {
            id: 12,
            title: "determinism",
            passed: mismatched.is_empty(),
            detail: if mismatched.is_empty() {
                format!("{} criteria byte-identical with {} worker(s)", selected.len(), opts.rerun_workers)
            } else {
                format!("outputs differ for criteria {mismatched:?}")
            },
            elapsed: start.elapsed(),
            limit: None,
            digest: String::new(),
        };
        report(&o);
        outcomes.push(o);
    }
    Ok(outcomes)
}

/// `n` parameter draws with beta1, beta2 in (0, 5] and gamma in (0, 10].
pub fn parameter_draws(n: usize, seed: u64) -> Vec<MeanFieldParams> {
    let mut rng = stream_rng(seed, StreamKey::replicate(0, Purpose::Misc));
    (0..n)
        .map(|_| {
            let mut u = || 1.0 - rng.random::<f64>();
            MeanFieldParams::new(5.0 * u(), 5.0 * u(), 10.0 * u())
        })
        .collect()
}

const DRAW_SEED: u64 = 0x5eed_0001;

fn c01_fixed_points() -> Result<Check> {
    let draws = parameter_draws(10_000, DRAW_SEED);
    let mut worst: f64 = 0.0;
    let mut worst_inside_f64: f64 = 0.0;
    let mut membership_errors = 0;
    let mut primary = String::new();
    for p in &draws {
        let r = allelo_core::meanfield::fixed_points(p);
        for f in r.all() {
            worst = worst.max(f.residual);
            if f.in_simplex {
                let (a, b) = rhs(f.location, p);
                worst_inside_f64 = worst_inside_f64.max(a.hypot(b));
            }
        }
        let p12 = r.p12.expect("gamma > 0 and beta1 > 0");
        let expected = p.beta1 < p.beta2 && p.beta2 < (1.0 + p.gamma) * p.beta1 - p.gamma;
        membership_errors += (p12.in_simplex != expected) as usize;
        writeln!(primary, "{},{},{}", p12.location.u1, p12.location.u2, p12.in_simplex as u8).ok();
    }
    let tol = 1e-12;
    Ok(Check {
        passed: worst <= tol && worst_inside_f64 <= tol && membership_errors == 0,
        detail: format!(
            "10000 draws, max residual {worst:.2e} (in-simplex points in plain f64: {worst_inside_f64:.2e}) <= 1e-12, {membership_errors} membership mismatches"
        ),
        primary: primary.into_bytes(),
    })
}

fn stable_inside(f: Option<&FixedPoint>) -> bool {
    f.is_some_and(|f| f.in_simplex && f.stability == Stability::Stable)
}

fn c02_stability() -> Result<Check> {
    let draws = parameter_draws(10_000, DRAW_SEED);
    let (mut checked, mut marginal, mut mismatches, mut interior, mut bad_det) = (0, 0, 0, 0, 0);
    let mut primary = String::new();
    for p in &draws {
        let c = classify(p);
        if c.marginal {
            marginal += 1;
            continue;
        }
        checked += 1;
        let by_eigen = [
            c.report.p0.stability == Stability::Stable,
            stable_inside(c.report.p1.as_ref()),
            stable_inside(c.report.p2.as_ref()),
        ];
        if by_eigen != [c.in_b0, c.in_b1, c.in_b2] {
            mismatches += 1;
        }
        let p12 = c.report.p12.expect("defined");
        if p12.in_simplex {
            interior += 1;
            let det = determinant(&jacobian(p12.location, p));
            if !(det < 0.0 && c.saddle_det.is_some_and(|d| d < 0.0)) {
                bad_det += 1;
            }
        }
        writeln!(primary, "{},{},{},{:?}", c.in_b0 as u8, c.in_b1 as u8, c.in_b2 as u8, c.predicted).ok();
    }
    Ok(Check {
        passed: mismatches == 0 && bad_det == 0,
        detail: format!(
            "{checked} non-marginal draws ({marginal} marginal skipped), {mismatches} region mismatches; det J(p12) < 0 on {}/{interior} interior cases",
            interior - bad_det
        ),
        primary: primary.into_bytes(),
    })
}

fn c03_bistability() -> Result<Check> {
    let p = MeanFieldParams::new(2.0, 2.5, 4.0);
    let opts = IntegratorOptions { record: false, ..Default::default() };
    let a = integrate(DensityPair::new(0.4, 0.05), &p, 500.0, &opts)?;
    let b = integrate(DensityPair::new(0.05, 0.4), &p, 500.0, &opts)?;
    let da = a.terminal.dist(&DensityPair::new(0.5, 0.0));
    let db = b.terminal.dist(&DensityPair::new(0.0, 0.6));
    let m4 = basin_map(&p, 200, 2000.0)?;
    let m8 = basin_map(&MeanFieldParams::new(2.0, 2.5, 8.0), 200, 2000.0)?;
    let (a4, a8) = (m4.area(BasinLabel::P1), m8.area(BasinLabel::P1));
    let mut primary = format!("{},{}\n{},{}\n", a.terminal.u1, a.terminal.u2, b.terminal.u1, b.terminal.u2);
    for m in [&m4, &m8] {
        for c in &m.cells {
            primary.push_str(c.label.name());
            primary.push(',');
        }
        primary.push('\n');
    }
    Ok(Check {
        passed: da <= 1e-6 && db <= 1e-6 && a8 >= a4,
        detail: format!(
            "|u(500) - p1| = {da:.1e}, |u(500) - p2| = {db:.1e} (<= 1e-6); p1 basin area {a8:.4} at gamma = 8 vs {a4:.4} at gamma = 4 ({} and {} undecided cells)",
            m8.cells.iter().filter(|c| c.label == BasinLabel::Undecided).count(),
            m4.cells.iter().filter(|c| c.label == BasinLabel::Undecided).count()
        ),
        primary: primary.into_bytes(),
    })
}

fn c04_dulac() -> Result<Check> {
    let draws = parameter_draws(50, 0x5eed_0004);
    let (mut points, mut nonneg) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    for p in &draws {
        for i in 0..100 {
            for j in 0..100 {
                let u = DensityPair::new((i as f64 + 0.5) / 100.0, (j as f64 + 0.5) / 100.0);
                if u.u1 + u.u2 >= 1.0 {
                    continue;
                }
                points += 1;
                let d = dulac_divergence(u, p)?;
                nonneg += (d >= 0.0) as usize;
                worst = worst.max((dulac_divergence_numeric(u, p, 1e-4)? - d).abs());
            }
        }
    }
    Ok(Check {
        passed: nonneg == 0 && worst <= 1e-6,
        detail: format!("{points} grid points over 50 draws: {nonneg} non-negative, max |finite difference - closed form| = {worst:.1e} (<= 1e-6)"),
        primary: format!("{points},{nonneg},{worst:e}\n").into_bytes(),
    })
}

fn c05_ctmc() -> Result<Check> {
    let (b1, b2, g, t) = (1.5, 2.0, 1.0, 1.0);
    let initial = [1u8, 0, 2, 0];
    let exact = ring_law(b1, b2, g, 4, 1, &initial, t);
    let params = ModelParams::new(b1, b2, g, 1.0, 1, 4);
    let lattice = Lattice::for_params(&params)?;
    let init =
        SpatialConfig::from_states(1, 4, initial.iter().map(|&v| SiteState::from_u8(v).expect("state")).collect())?;
    let reps = 100_000u32;
    let codes = (0..reps)
        .into_par_iter()
        .map(|r| {
            let spec = SampleSpec::endpoints(t).key(StreamKey::replicate(r, Purpose::Events));
            let out = simulate(&init, &lattice, &params, t, 0x5eed_0005, &spec)?;
            Ok(out.final_config.states().iter().rev().fold(0usize, |acc, s| 3 * acc + s.index()))
        })
        .collect::<std::result::Result<Vec<usize>, allelo_core::Error>>()?;
    let mut hist = vec![0u32; 81];
    for c in codes {
        hist[c] += 1;
    }
    let empirical: Vec<f64> = hist.iter().map(|&h| h as f64 / reps as f64).collect();
    let tv = total_variation(&empirical, &exact);
    let primary = hist.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",") + "\n";
    Ok(Check {
        passed: tv < 0.01,
        detail: format!("total variation {tv:.4} < 0.01 over 81 states, {reps} replicates"),
        primary: primary.into_bytes(),
    })
}

fn coupling_setup() -> Result<(ModelParams, Lattice)> {
    let p = ModelParams::new(2.0, 3.0, 1.0, 1.0, 1, 50);
    let lat = Lattice::for_params(&p)?;
    Ok((p, lat))
}

fn coupling_initial(seed: u64) -> allelo_core::Result<SpatialConfig> {
    sample_initial_with(50, 1, 0.25, 0.25, seed, StreamKey::replicate(0, Purpose::Initial))
}

const COUPLING_TIMES: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];

fn c06_couplings() -> Result<Check> {
    let (p, lat) = coupling_setup()?;
    let rows = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let init = coupling_initial(seed)?;
            let g = couple_gamma(&init, &lat, &p, 0.5, 2.0, 20.0, seed, &COUPLING_TIMES)?;
            let b = couple_birthrate(&init, &lat, &p, 2.0, 3.0, 20.0, seed, &COUPLING_TIMES)?;
            let t = couple_gbt(&init, &lat, &p, 20.0, seed, &COUPLING_TIMES, StreamKey::replicate(0, Purpose::Events))?;
            Ok([g.violations, b.violations, t.report.violations, t.report.outside_closed_set])
        })
        .collect::<std::result::Result<Vec<[usize; 4]>, allelo_core::Error>>()?;
    let total = rows.iter().fold([0; 4], |acc, r| [acc[0] + r[0], acc[1] + r[1], acc[2] + r[2], acc[3] + r[3]]);
    let primary: String = rows.iter().map(|r| format!("{},{},{},{}\n", r[0], r[1], r[2], r[3])).collect();
    Ok(Check {
        passed: total == [0; 4],
        detail: format!(
            "100 seeds: gamma 0.5 vs 2 {} violations, beta2 2 vs 3 {}, grass-bush-tree {} violations and {} departures from S",
            total[0], total[1], total[2], total[3]
        ),
        primary: primary.into_bytes(),
    })
}

fn c07_gbt_table() -> Result<Check> {
    let mut disagreements = 0;
    let mut inputs = 0;
    for tail in CLOSED_SET {
        for head in CLOSED_SET {
            for kind in GBT_KINDS {
                inputs += 1;
                if gbt_table_lookup(tail, head, kind)? != gbt_transition(tail, head, kind)? {
                    disagreements += 1;
                }
            }
        }
    }
    let outside_rejected = (0..3u8)
        .flat_map(|a| (0..3u8).map(move |g| PairState::new(a, g)))
        .filter(|p| !p.in_closed_set())
        .all(|p| gbt_transition(p, CLOSED_SET[0], GBT_KINDS[0]).is_err());

    let (p, lat) = coupling_setup()?;
    let dominated = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let init = coupling_initial(seed)?;
            let t = couple_gbt(&init, &lat, &p, 20.0, seed, &COUPLING_TIMES, StreamKey::replicate(0, Purpose::Events))?;
            Ok(t.susceptible_dominates.iter().filter(|&&d| d).count())
        })
        .collect::<std::result::Result<Vec<usize>, allelo_core::Error>>()?;
    let samples = 100 * COUPLING_TIMES.len();
    let ok_samples: usize = dominated.iter().sum();
    Ok(Check {
        passed: disagreements == 0 && inputs == 144 && outside_rejected && ok_samples == samples,
        detail: format!(
            "table equals rules on {inputs} inputs ({disagreements} disagreements); 2s dominated at {ok_samples}/{samples} sample times"
        ),
        primary: format!("{disagreements},{ok_samples}\n").into_bytes(),
    })
}

fn dual_config(p1: f64, p2: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::example(ExperimentKind::DualityCheck);
    cfg.seed = 0x5eed_0008;
    cfg.model = ModelParams::new(4.0, 4.0, 0.0, 1.0, 1, 20);
    cfg.initial = InitialDensities { p1, p2 };
    cfg.run.horizon = 5.0;
    cfg.dual.time = Some(5.0);
    cfg.dual.realizations = 1000;
    cfg
}

fn c08_duality() -> Result<Check> {
    let cfg = dual_config(0.3, 0.0);
    let lat = Lattice::for_params(&cfg.model)?;
    let tallies = (0..cfg.dual.realizations)
        .into_par_iter()
        .map(|r| duality_realization(&cfg, &lat, r))
        .collect::<Result<Vec<_>>>()?;
    let checks: usize = tallies.iter().map(|t| t.checks).sum();
    let mismatches: usize = tallies.iter().map(|t| t.mismatches).sum();
    let primary: String = tallies.iter().map(|t| format!("{},{}\n", t.occupied, t.mismatches)).collect();
    Ok(Check {
        passed: mismatches == 0 && checks == 20_000,
        detail: format!("{checks} space-time points over 1000 realizations, {mismatches} exceptions"),
        primary: primary.into_bytes(),
    })
}

fn c09_first_ancestor() -> Result<Check> {
    let cfg = dual_config(0.15, 0.15);
    let lat = Lattice::for_params(&cfg.model)?;
    let tallies = (0..cfg.dual.realizations)
        .into_par_iter()
        .map(|r| ancestor_realization(&cfg, &lat, r))
        .collect::<Result<Vec<_>>>()?;
    let mut total = AncestorTally::default();
    let mut primary = String::new();
    for t in &tallies {
        total.add(t);
        writeln!(primary, "{},{},{},{}", t.determined, t.matched, t.undetermined, t.dual_extinct).ok();
    }
    Ok(Check {
        passed: total.exact() && total.determined > 0,
        detail: format!(
            "{}/{} determined cases match; {}/{} extinct duals at vacant sites; {} undetermined",
            total.matched, total.determined, total.extinct_vacant, total.dual_extinct, total.undetermined
        ),
        primary: primary.into_bytes(),
    })
}

/// Initial densities used by the phase checks.
pub const PHASE_DENSITIES: (f64, f64) = (0.25, 0.25);

fn phase_spec(beta1: f64, beta2: f64, gamma: f64, axis: CouplingAxis, ladder: Vec<f64>, seed: u64) -> SweepSpec {
    SweepSpec {
        base: ModelParams::new(beta1, beta2, gamma, 1.0, 2, 100),
        axis,
        beta1: vec![beta1],
        ladder,
        p1: PHASE_DENSITIES.0,
        p2: PHASE_DENSITIES.1,
        replicates: 20,
        horizon: 200.0,
        seed,
    }
}

fn c10_phase() -> Result<Check> {
    let a = phase_sweep(&phase_spec(4.0, 3.0, 0.0, CouplingAxis::Gamma, vec![0.0], 0x5eed_000a))?;
    let b = phase_sweep(&phase_spec(3.0, 3.0, 0.25, CouplingAxis::Gamma, vec![0.25, 1.0], 0x5eed_000b))?;
    let c = phase_sweep(&phase_spec(3.0, 3.0, 2.0, CouplingAxis::Beta2, vec![3.0, 6.0, 12.0], 0x5eed_000c))?;
    let fa = a.cell(0, 0).frequency(OutcomeLabel::Species1Wins);
    let fb = b.column(0);
    let fc = c.column(0);
    let ok_a = fa >= 0.9;
    let ok_b = fb[1] >= fb[0];
    let ok_c = fc.windows(2).all(|w| w[0] <= w[1]);
    let violations = a.violations + b.violations + c.violations;
    let mut primary = Vec::new();
    for t in [&a, &b, &c] {
        t.write_csv(&mut primary)?;
    }
    Ok(Check {
        passed: ok_a && ok_b && ok_c && violations == 0,
        detail: format!(
            "(a) species-1 wins {fa:.2} >= 0.9; (b) species-1 wins {:.2} at gamma = 1 vs {:.2} at 0.25; (c) species-2 wins {:?} for beta2 = 3, 6, 12; {violations} coupling violations",
            fb[1], fb[0], fc
        ),
        primary,
    })
}

fn c11_percolation() -> Result<Check> {
    let one = estimate_theta(1.0, 1, 200, 500, 0x5eed_0011)?;
    let zero = estimate_theta(0.0, 1, 200, 500, 0x5eed_0011)?;
    let lo = estimate_theta(0.6, 1, 200, 500, 0x5eed_0011)?;
    let hi = estimate_theta(0.8, 1, 200, 500, 0x5eed_0011)?;
    let nested = (0..500u32)
        .into_par_iter()
        .map(|r| {
            let spec = |p| PercSpec { replicate: r, ..PercSpec::new(p, 1, 200, 0x5eed_0011) };
            let a = percolate(&spec(0.6))?;
            let b = percolate(&spec(0.8))?;
            Ok(a.wet_flags().iter().zip(b.wet_flags()).all(|(&x, &y)| !x || y))
        })
        .collect::<std::result::Result<Vec<bool>, allelo_core::Error>>()?;
    let nested_ok = nested.iter().filter(|&&n| n).count();
    let mut primary = Vec::new();
    allelo_core::percolation::ThetaEstimate::write_csv(&[one, zero, lo, hi], &mut primary)?;
    Ok(Check {
        passed: one.theta_hat == 1.0 && zero.theta_hat == 0.0 && nested_ok == 500 && hi.theta_hat > lo.theta_hat,
        detail: format!(
            "theta(1) = {}, theta(0) = {}; wet(0.6) within wet(0.8) on {nested_ok}/500 seeds; theta(0.8) = {:.3} > theta(0.6) = {:.3}",
            one.theta_hat, zero.theta_hat, hi.theta_hat, lo.theta_hat
        ),
        primary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_in_range_and_repeatable() {
        let a = parameter_draws(1000, 3);
        assert_eq!(a, parameter_draws(1000, 3));
        for p in &a {
            assert!(p.beta1 > 0.0 && p.beta1 <= 5.0);
            assert!(p.beta2 > 0.0 && p.beta2 <= 5.0);
            assert!(p.gamma > 0.0 && p.gamma <= 10.0);
        }
    }

    #[test]
    fn criterion_ids_are_sequential() {
        for (k, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.id as usize, k + 1);
        }
    }
}
