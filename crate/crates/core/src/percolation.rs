//! Oriented site percolation on `{(m, n) : m1 + ... + md + n even}` with
//! arrows `(m, n) -> (m', n + 1)` for `|m - m'|_1 = 1`.
//!
//! Site `(m, n)` is open iff its uniform is below `p`. The uniforms are drawn
//! in a fixed order from the replicate's stream, so samples at different `p`
//! with the same seed are coupled and wet sets are monotone in `p`.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose, SimRng, StreamKey};

/// Largest number of stored sites in one sample.
pub const MAX_CELLS: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialWet {
    /// Only the origin, if open.
    Origin,
    /// Every open even site of level 0.
    AllEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercSpec {
    pub p: f64,
    pub dim: usize,
    pub n_max: usize,
    /// Half-width of the box; `None` means `n_max + 1`.
    pub width: Option<usize>,
    pub seed: u64,
    pub replicate: u32,
    pub initial: InitialWet,
}

impl PercSpec {
    pub fn new(p: f64, dim: usize, n_max: usize, seed: u64) -> Self {
        Self { p, dim, n_max, width: None, seed, replicate: 0, initial: InitialWet::AllEven }
    }

    pub fn half_width(&self) -> usize {
        self.width.unwrap_or(self.n_max + 1)
    }

    fn validate(&self) -> Result<Geometry> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::config(format!("open probability {} outside [0, 1]", self.p)));
        }
        Geometry::new(self.dim, self.half_width(), self.n_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Geometry {
    dim: usize,
    width: usize,
    side: usize,
    per_level: usize,
    n_max: usize,
}

impl Geometry {
    fn new(dim: usize, width: usize, n_max: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("percolation dimension must be at least 1"));
        }
        let side = 2 * width + 1;
        let per_level = u32::try_from(dim).ok().and_then(|d| side.checked_pow(d)).ok_or(Error::SizeCap {
            what: "percolation box",
            size: usize::MAX,
            cap: MAX_CELLS,
        })?;
        let total = per_level.saturating_mul(n_max + 1);
        if total > MAX_CELLS {
            return Err(Error::SizeCap { what: "percolation box", size: total, cap: MAX_CELLS });
        }
        Ok(Self { dim, width, side, per_level, n_max })
    }

    fn coords(&self, mut i: usize) -> Vec<i64> {
        let mut m = vec![0; self.dim];
        for c in m.iter_mut() {
            *c = (i % self.side) as i64 - self.width as i64;
            i /= self.side;
        }
        m
    }

    fn index(&self, m: &[i64]) -> Option<usize> {
        let w = self.width as i64;
        let mut i = 0;
        for &c in m.iter().rev() {
            if c < -w || c > w {
                return None;
            }
            i = i * self.side + (c + w) as usize;
        }
        Some(i)
    }

    fn even(&self, i: usize, n: usize) -> bool {
        let s: i64 = self.coords(i).iter().sum::<i64>() + n as i64;
        s.rem_euclid(2) == 0
    }

    fn origin(&self) -> usize {
        self.index(&vec![0; self.dim]).expect("origin in box")
    }

    /// In-box out-neighbors of `i` (one level up).
    fn successors(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut stride = 1;
        let mut rest = i;
        for _ in 0..self.dim {
            let c = rest % self.side;
            rest /= self.side;
            if c > 0 {
                out.push(i - stride);
            }
            if c + 1 < self.side {
                out.push(i + stride);
            }
            stride *= self.side;
        }
    }

    /// Open flags of one level, drawing one uniform per lattice site in index order.
    fn draw_level(&self, rng: &mut SimRng, n: usize, p: f64, out: &mut [bool]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.even(i, n) && rng.random::<f64>() < p;
        }
    }
}

/// One realization on levels `0..=n_max` inside the box `[-w, w]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PercSample {
    pub dim: usize,
    pub n_max: usize,
    pub width: usize,
    pub p: f64,
    open: Vec<bool>,
    wet: Vec<bool>,
    cluster: Vec<bool>,
    initial: InitialWet,
    geom: Geometry,
}

impl PercSample {
    fn at(&self, m: &[i64], n: usize) -> Option<usize> {
        (n <= self.n_max).then(|| self.geom.index(m)).flatten().map(|i| n * self.geom.per_level + i)
    }

    pub fn in_lattice(&self, m: &[i64], n: usize) -> bool {
        (m.iter().sum::<i64>() + n as i64).rem_euclid(2) == 0
    }

    pub fn is_open(&self, m: &[i64], n: usize) -> bool {
        self.at(m, n).is_some_and(|k| self.open[k])
    }

    pub fn is_wet(&self, m: &[i64], n: usize) -> bool {
        self.at(m, n).is_some_and(|k| self.wet[k])
    }

    pub fn in_cluster(&self, m: &[i64], n: usize) -> bool {
        self.at(m, n).is_some_and(|k| self.cluster[k])
    }

    fn level<'a>(&self, flags: &'a [bool], n: usize) -> &'a [bool] {
        &flags[n * self.geom.per_level..(n + 1) * self.geom.per_level]
    }

    pub fn wet_count(&self, n: usize) -> usize {
        self.level(&self.wet, n).iter().filter(|&&w| w).count()
    }

    pub fn cluster_count(&self, n: usize) -> usize {
        self.level(&self.cluster, n).iter().filter(|&&w| w).count()
    }

    /// Wet sites per lattice site at level `n`.
    pub fn wet_density(&self, n: usize) -> f64 {
        let lattice_sites = (0..self.geom.per_level).filter(|&i| self.geom.even(i, n)).count();
        self.wet_count(n) as f64 / lattice_sites as f64
    }

    pub fn cluster_size(&self) -> usize {
        self.cluster.iter().filter(|&&c| c).count()
    }

    /// The origin cluster contains a site at level `n_max`.
    pub fn cluster_reaches_top(&self) -> bool {
        self.cluster_count(self.n_max) > 0
    }

    /// Size of the directed closed cluster of the origin.
    pub fn closed_cluster_size(&self) -> usize {
        let closed: Vec<bool> = self
            .open
            .iter()
            .enumerate()
            .map(|(k, &o)| !o && self.geom.even(k % self.geom.per_level, k / self.geom.per_level))
            .collect();
        let mut seed = vec![false; self.geom.per_level];
        seed[self.geom.origin()] = true;
        spread(&self.geom, &closed, &seed).iter().filter(|&&c| c).count()
    }

    /// Recompute the wet flags from the open flags.
    pub fn recompute_wet(&self) -> Vec<bool> {
        spread(&self.geom, &self.open, &initial_level(&self.geom, self.initial))
    }

    pub fn wet_flags(&self) -> &[bool] {
        &self.wet
    }

    pub fn cluster_flags(&self) -> &[bool] {
        &self.cluster
    }

    /// Every wet site is open and is at level 0 or has a wet in-neighbor,
    /// and only lattice sites are open.
    pub fn check_invariants(&self) -> bool {
        let mut succ = Vec::new();
        let mut fed = vec![false; self.wet.len()];
        for n in 0..self.n_max {
            for i in 0..self.geom.per_level {
                if self.wet[n * self.geom.per_level + i] {
                    self.geom.successors(i, &mut succ);
                    for &j in &succ {
                        fed[(n + 1) * self.geom.per_level + j] = true;
                    }
                }
            }
        }
        (0..self.wet.len()).all(|k| {
            let (n, i) = (k / self.geom.per_level, k % self.geom.per_level);
            (!self.open[k] || self.geom.even(i, n)) && (!self.wet[k] || (self.open[k] && (n == 0 || fed[k])))
        })
    }
}

fn initial_level(geom: &Geometry, initial: InitialWet) -> Vec<bool> {
    match initial {
        InitialWet::Origin => {
            let mut v = vec![false; geom.per_level];
            v[geom.origin()] = true;
            v
        }
        InitialWet::AllEven => (0..geom.per_level).map(|i| geom.even(i, 0)).collect(),
    }
}

/// Sites reachable from `seed & open[level 0]` along directed open paths.
fn spread(geom: &Geometry, open: &[bool], seed: &[bool]) -> Vec<bool> {
    let pl = geom.per_level;
    let mut out = vec![false; open.len()];
    for i in 0..pl {
        out[i] = seed[i] && open[i];
    }
    let mut succ = Vec::new();
    for n in 0..geom.n_max {
        for i in 0..pl {
            if out[n * pl + i] {
                geom.successors(i, &mut succ);
                for &j in &succ {
                    let k = (n + 1) * pl + j;
                    out[k] = open[k];
                }
            }
        }
    }
    out
}

pub fn percolate(spec: &PercSpec) -> Result<PercSample> {
    let geom = spec.validate()?;
    let mut rng = stream_rng(spec.seed, StreamKey::replicate(spec.replicate, Purpose::Percolation));
    let mut open = vec![false; geom.per_level * (spec.n_max + 1)];
    for (n, chunk) in open.chunks_mut(geom.per_level).enumerate() {
        geom.draw_level(&mut rng, n, spec.p, chunk);
    }
    let wet = spread(&geom, &open, &initial_level(&geom, spec.initial));
    let cluster = spread(&geom, &open, &initial_level(&geom, InitialWet::Origin));
    Ok(PercSample {
        dim: spec.dim,
        n_max: spec.n_max,
        width: geom.width,
        p: spec.p,
        open,
        wet,
        cluster,
        initial: spec.initial,
        geom,
    })
}

/// Does the origin cluster reach level `n_max`? Uses the same uniforms as
/// [`percolate`] but keeps only two levels.
fn origin_reaches_top(geom: &Geometry, p: f64, seed: u64, replicate: u32) -> bool {
    let mut rng = stream_rng(seed, StreamKey::replicate(replicate, Purpose::Percolation));
    let mut open = vec![false; geom.per_level];
    let mut cur = vec![false; geom.per_level];
    let mut next = vec![false; geom.per_level];
    geom.draw_level(&mut rng, 0, p, &mut open);
    let o = geom.origin();
    cur[o] = open[o];
    let mut succ = Vec::new();
    for n in 1..=geom.n_max {
        if !cur.iter().any(|&c| c) {
            return false;
        }
        geom.draw_level(&mut rng, n, p, &mut open);
        next.fill(false);
        for i in (0..geom.per_level).filter(|&i| cur[i]) {
            geom.successors(i, &mut succ);
            for &j in &succ {
                next[j] = open[j];
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.iter().any(|&c| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub p: f64,
    pub reps: usize,
    pub n_max: usize,
    pub hits: usize,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ThetaEstimate {
    pub const CSV_HEADER: &'static str = "p,reps,n_max,theta_hat,ci_lo,ci_hi";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.p, self.reps, self.n_max, self.theta_hat, self.ci_lo, self.ci_hi)
    }

    pub fn write_csv<W: Write>(rows: &[ThetaEstimate], mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in rows {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

/// 95% Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n_f = n as f64;
    let phat = hits as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let centre = (phat + z * z / (2.0 * n_f)) / denom;
    let half = z * (phat * (1.0 - phat) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of replicates `0..reps` whose origin cluster reaches `n_max`.
pub fn estimate_theta(p: f64, dim: usize, n_max: usize, reps: usize, seed: u64) -> Result<ThetaEstimate> {
    if reps == 0 {
        return Err(Error::config("percolation needs at least one replicate"));
    }
    let spec = PercSpec { width: Some(n_max), ..PercSpec::new(p, dim, n_max, seed) };
    let geom = spec.validate()?;
    let hits = (0..reps as u32).into_par_iter().filter(|&r| origin_reaches_top(&geom, p, seed, r)).count();
    let (ci_lo, ci_hi) = wilson_interval(hits, reps);
    Ok(ThetaEstimate { p, reps, n_max, hits, theta_hat: hits as f64 / reps as f64, ci_lo, ci_hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_open_wets_every_site() {
        let s = percolate(&PercSpec::new(1.0, 1, 30, 1)).unwrap();
        for n in 0..=30 {
            for m in -31..=31i64 {
                assert_eq!(s.is_wet(&[m], n), s.in_lattice(&[m], n), "({m}, {n})");
            }
        }
        assert!(s.cluster_reaches_top());
        assert_eq!(s.cluster_count(30), 31);
        assert!(s.check_invariants());
    }

    #[test]
    fn all_closed_is_dry() {
        let s = percolate(&PercSpec::new(0.0, 2, 10, 1)).unwrap();
        assert_eq!(s.wet_flags().iter().filter(|&&w| w).count(), 0);
        assert_eq!(s.cluster_size(), 0);
        assert!(s.closed_cluster_size() > 0);
    }

    #[test]
    fn wet_recomputation_is_idempotent() {
        for seed in 0..5 {
            let s = percolate(&PercSpec::new(0.65, 1, 40, seed)).unwrap();
            assert_eq!(s.recompute_wet(), s.wet_flags());
            assert!(s.check_invariants());
        }
    }

    #[test]
    fn origin_cluster_inside_wet_set() {
        let s = percolate(&PercSpec::new(0.7, 2, 12, 4)).unwrap();
        assert!(s.cluster_flags().iter().zip(s.wet_flags()).all(|(&c, &w)| !c || w));
    }

    #[test]
    fn theta_extremes() {
        assert_eq!(estimate_theta(1.0, 1, 50, 20, 1).unwrap().theta_hat, 1.0);
        assert_eq!(estimate_theta(0.0, 1, 50, 20, 1).unwrap().theta_hat, 0.0);
        assert!(estimate_theta(0.5, 1, 50, 0, 1).is_err());
        assert!(estimate_theta(1.5, 1, 50, 1, 1).is_err());
    }

    #[test]
    fn streaming_survival_matches_stored_sample() {
        for r in 0..20 {
            let spec = PercSpec { replicate: r, width: Some(25), ..PercSpec::new(0.66, 1, 25, 8) };
            let s = percolate(&spec).unwrap();
            let geom = spec.validate().unwrap();
            assert_eq!(origin_reaches_top(&geom, 0.66, 8, r), s.cluster_reaches_top());
        }
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(10, 10);
        assert!(lo > 0.69 && (hi - 1.0).abs() < 1e-12);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_cap_rejected() {
        let err = percolate(&PercSpec::new(0.5, 3, 1000, 1)).unwrap_err();
        assert!(matches!(err, Error::SizeCap { .. }));
    }
}
