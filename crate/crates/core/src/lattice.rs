//! Torus geometry, site states, neighborhoods and the per-site transition
//! rates of the allelopathic model.
//!
//! Sites of the torus `(Z/L)^d` are addressed by a flat index
//! `x = c_0 + c_1 L + ... + c_{d-1} L^{d-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Birth rates, kill rate and geometry of one model instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    /// Dispersal range `M` (Euclidean).
    pub range: f64,
    pub dim: usize,
    pub side: usize,
}

impl ModelParams {
    pub fn new(beta1: f64, beta2: f64, gamma: f64, range: f64, dim: usize, side: usize) -> Self {
        Self { beta1, beta2, gamma, range, dim, side }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        check_geometry(self.dim, self.range, self.side)
    }

    /// Total clock rate attached to one site: one cross plus the outgoing
    /// arrows of every label.
    pub fn rate_per_site(&self) -> f64 {
        1.0 + self.beta1 + self.beta2 + self.gamma
    }

    pub fn sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Expected number of graphical events on `[0, horizon]`.
    pub fn expected_events(&self, horizon: f64) -> f64 {
        self.sites() as f64 * self.rate_per_site() * horizon
    }
}

fn check_geometry(dim: usize, range: f64, side: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::config("dimension must be >= 1"));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::config(format!("range must be positive, got {range}")));
    }
    let reach = range.ceil() as usize;
    if side <= 2 * reach {
        return Err(Error::config(format!(
            "side {side} must exceed 2*ceil(range) = {} so neighborhoods do not wrap",
            2 * reach
        )));
    }
    if (side as f64).powi(dim as i32) > u32::MAX as f64 {
        return Err(Error::config("lattice too large for 32-bit site indices"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum SiteState {
    Empty = 0,
    Inhibitory = 1,
    Susceptible = 2,
}

impl SiteState {
    pub const ALL: [SiteState; 3] = [SiteState::Empty, SiteState::Inhibitory, SiteState::Susceptible];

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(SiteState::Empty),
            1 => Some(SiteState::Inhibitory),
            2 => Some(SiteState::Susceptible),
            _ => None,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn is_occupied(self) -> bool {
        self != SiteState::Empty
    }

    /// Exchange the two species labels.
    pub fn swapped(self) -> Self {
        match self {
            SiteState::Empty => SiteState::Empty,
            SiteState::Inhibitory => SiteState::Susceptible,
            SiteState::Susceptible => SiteState::Inhibitory,
        }
    }
}

/// Integer offsets `y` with `0 < ||y|| <= M`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodTemplate {
    pub dim: usize,
    pub range: f64,
    pub offsets: Vec<Vec<i64>>,
}

impl NeighborhoodTemplate {
    /// Common neighborhood size `N`.
    pub fn size(&self) -> usize {
        self.offsets.len()
    }
}

/// Enumerate the neighborhood of the origin. The ball is closed at `range`.
pub fn build_neighborhood(dim: usize, range: f64, side: usize) -> Result<NeighborhoodTemplate> {
    check_geometry(dim, range, side)?;
    let reach = range.ceil() as i64;
    let r2 = range * range;
    let mut offsets = Vec::new();
    let mut cur = vec![-reach; dim];
    loop {
        let norm2: i64 = cur.iter().map(|c| c * c).sum();
        if norm2 > 0 && (norm2 as f64) <= r2 {
            offsets.push(cur.clone());
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == dim {
                return Ok(NeighborhoodTemplate { dim, range, offsets });
            }
            cur[k] += 1;
            if cur[k] <= reach {
                break;
            }
            cur[k] = -reach;
            k += 1;
        }
    }
}

/// The torus together with a precomputed neighbor table.
#[derive(Debug, Clone)]
pub struct Lattice {
    dim: usize,
    side: usize,
    sites: usize,
    template: NeighborhoodTemplate,
    neighbors: Vec<u32>,
}

impl Lattice {
    pub fn new(dim: usize, range: f64, side: usize) -> Result<Self> {
        let template = build_neighborhood(dim, range, side)?;
        let sites = side.pow(dim as u32);
        let n = template.size();
        let mut neighbors = Vec::with_capacity(sites * n);
        let mut coords = vec![0usize; dim];
        for x in 0..sites {
            decompose(x, side, &mut coords);
            for off in &template.offsets {
                let mut y = 0usize;
                let mut stride = 1usize;
                for k in 0..dim {
                    let c = (coords[k] as i64 + off[k]).rem_euclid(side as i64) as usize;
                    y += c * stride;
                    stride *= side;
                }
                neighbors.push(y as u32);
            }
        }
        Ok(Self { dim, side, sites, template, neighbors })
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        Self::new(params.dim, params.range, params.side)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    /// Neighborhood size `N`.
    #[inline]
    pub fn degree(&self) -> usize {
        self.template.size()
    }

    #[inline]
    pub fn neighbors(&self, x: usize) -> &[u32] {
        let n = self.degree();
        &self.neighbors[x * n..(x + 1) * n]
    }

    /// The `k`-th neighbor of `x`, in template order.
    #[inline]
    pub fn neighbor(&self, x: usize, k: usize) -> usize {
        self.neighbors[x * self.degree() + k] as usize
    }

    pub fn coords(&self, x: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        decompose(x, self.side, &mut c);
        c
    }

    pub fn index(&self, coords: &[i64]) -> usize {
        let mut y = 0usize;
        let mut stride = 1usize;
        for &c in coords {
            y += c.rem_euclid(self.side as i64) as usize * stride;
            stride *= self.side;
        }
        y
    }

    /// Translate site `x` by an arbitrary integer vector.
    pub fn shift(&self, x: usize, by: &[i64]) -> usize {
        let c: Vec<i64> = self.coords(x).iter().zip(by).map(|(&a, &b)| a as i64 + b).collect();
        self.index(&c)
    }

    /// Minimal-image displacement from `from` to `to`.
    pub fn displacement(&self, from: usize, to: usize) -> Vec<i64> {
        let l = self.side as i64;
        self.coords(from)
            .iter()
            .zip(self.coords(to))
            .map(|(&a, b)| {
                let mut d = (b as i64 - a as i64).rem_euclid(l);
                if d > l / 2 {
                    d -= l;
                }
                d
            })
            .collect()
    }

    /// Whether `head - tail` is a neighborhood offset.
    pub fn is_edge(&self, tail: usize, head: usize) -> bool {
        self.neighbors(tail).iter().any(|&y| y as usize == head)
    }
}

fn decompose(mut x: usize, side: usize, out: &mut [usize]) {
    for c in out.iter_mut() {
        *c = x % side;
        x /= side;
    }
}

/// Lattice state with incrementally maintained species counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpatialConfig {
    dim: usize,
    side: usize,
    states: Vec<SiteState>,
    counts: [usize; 3],
}

impl SpatialConfig {
    pub fn empty(dim: usize, side: usize) -> Self {
        Self::filled(dim, side, SiteState::Empty)
    }

    pub fn filled(dim: usize, side: usize, state: SiteState) -> Self {
        let sites = side.pow(dim as u32);
        let mut counts = [0; 3];
        counts[state.index()] = sites;
        Self { dim, side, states: vec![state; sites], counts }
    }

    pub fn from_states(dim: usize, side: usize, states: Vec<SiteState>) -> Result<Self> {
        if states.len() != side.pow(dim as u32) {
            return Err(Error::config(format!("expected {} site states, got {}", side.pow(dim as u32), states.len())));
        }
        let mut counts = [0; 3];
        for s in &states {
            counts[s.index()] += 1;
        }
        Ok(Self { dim, side, states, counts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SiteState] {
        &self.states
    }

    #[inline]
    pub fn get(&self, x: usize) -> SiteState {
        self.states[x]
    }

    /// Overwrite one site, returning the previous state.
    #[inline]
    pub fn set(&mut self, x: usize, s: SiteState) -> SiteState {
        let old = std::mem::replace(&mut self.states[x], s);
        self.counts[old.index()] -= 1;
        self.counts[s.index()] += 1;
        old
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    #[inline]
    pub fn count(&self, s: SiteState) -> usize {
        self.counts[s.index()]
    }

    pub fn densities(&self) -> [f64; 3] {
        let n = self.sites() as f64;
        self.counts.map(|c| c as f64 / n)
    }

    /// Configuration with both species labels exchanged.
    pub fn swapped(&self) -> Self {
        let states = self.states.iter().map(|s| s.swapped()).collect();
        Self::from_states(self.dim, self.side, states).expect("same shape")
    }

    /// Configuration translated by `by`: the new state at `x + by` is the old state at `x`.
    pub fn translated(&self, lattice: &Lattice, by: &[i64]) -> Self {
        let mut states = vec![SiteState::Empty; self.sites()];
        for (x, &s) in self.states.iter().enumerate() {
            states[lattice.shift(x, by)] = s;
        }
        Self::from_states(self.dim, self.side, states).expect("same shape")
    }

    /// Recount from scratch; used to check the incremental counts.
    pub fn recount(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in &self.states {
            c[s.index()] += 1;
        }
        c
    }
}

/// Fraction of the neighbors of `x` in state `species`.
pub fn local_fraction(config: &SpatialConfig, lattice: &Lattice, x: usize, species: SiteState) -> f64 {
    let nb = lattice.neighbors(x);
    let hits = nb.iter().filter(|&&y| config.get(y as usize) == species).count();
    hits as f64 / nb.len() as f64
}

/// Rates of the three possible flips at one site. Only the entries
/// reachable from the current state are nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SiteRates {
    pub to_empty: f64,
    pub to_inhibitory: f64,
    pub to_susceptible: f64,
}

impl SiteRates {
    pub fn total(&self) -> f64 {
        self.to_empty + self.to_inhibitory + self.to_susceptible
    }

    pub fn rate_to(&self, s: SiteState) -> f64 {
        match s {
            SiteState::Empty => self.to_empty,
            SiteState::Inhibitory => self.to_inhibitory,
            SiteState::Susceptible => self.to_susceptible,
        }
    }
}

pub fn site_rates(config: &SpatialConfig, lattice: &Lattice, x: usize, params: &ModelParams) -> SiteRates {
    match config.get(x) {
        SiteState::Empty => SiteRates {
            to_inhibitory: params.beta1 * local_fraction(config, lattice, x, SiteState::Inhibitory),
            to_susceptible: params.beta2 * local_fraction(config, lattice, x, SiteState::Susceptible),
            ..Default::default()
        },
        SiteState::Inhibitory => SiteRates { to_empty: 1.0, ..Default::default() },
        SiteState::Susceptible => SiteRates {
            to_empty: 1.0 + params.gamma * local_fraction(config, lattice, x, SiteState::Inhibitory),
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_count(dim: usize, range: f64) -> usize {
        // all integer points in a generous box
        let r = range.ceil() as i64 + 1;
        let mut n = 0;
        let total = (2 * r + 1).pow(dim as u32);
        for mut k in 0..total {
            let mut norm2 = 0i64;
            for _ in 0..dim {
                let c = k % (2 * r + 1) - r;
                k /= 2 * r + 1;
                norm2 += c * c;
            }
            if norm2 > 0 && (norm2 as f64).sqrt() <= range {
                n += 1;
            }
        }
        n
    }

    #[test]
    fn neighborhood_sizes() {
        let t = build_neighborhood(1, 1.0, 5).unwrap();
        assert_eq!(t.offsets, vec![vec![-1], vec![1]]);
        assert_eq!(build_neighborhood(2, 1.0, 5).unwrap().size(), 4);
        assert_eq!(build_neighborhood(2, 1.5, 5).unwrap().size(), 8);
        for (d, m) in [(1, 3.0), (2, 2.0), (2, 2.5), (3, 1.0), (3, 1.8)] {
            assert_eq!(build_neighborhood(d, m, 20).unwrap().size(), brute_count(d, m), "d={d} M={m}");
        }
    }

    #[test]
    fn closed_at_range() {
        // (1,1) has norm sqrt(2); M = 2 includes (2,0) at exactly the range
        let t = build_neighborhood(2, 2.0, 9).unwrap();
        assert!(t.offsets.contains(&vec![2, 0]));
        assert_eq!(t.size(), 12);
    }

    #[test]
    fn rejects_self_wrapping_torus() {
        assert!(matches!(build_neighborhood(1, 1.0, 2), Err(Error::Config(_))));
        assert!(matches!(build_neighborhood(2, 1.5, 4), Err(Error::Config(_))));
        assert!(build_neighborhood(2, 1.5, 5).is_ok());
        assert!(build_neighborhood(1, 0.0, 5).is_err());
    }

    #[test]
    fn fractions_on_a_ring() {
        let lat = Lattice::new(1, 1.0, 5).unwrap();
        let cfg = SpatialConfig::from_states(
            1,
            5,
            vec![SiteState::Inhibitory, SiteState::Empty, SiteState::Susceptible, SiteState::Empty, SiteState::Empty],
        )
        .unwrap();
        // neighbors of site 1 are sites 0 and 2
        assert_eq!(local_fraction(&cfg, &lat, 1, SiteState::Inhibitory), 0.5);
        assert_eq!(local_fraction(&cfg, &lat, 1, SiteState::Susceptible), 0.5);
        let empty = SpatialConfig::empty(1, 5);
        assert_eq!(local_fraction(&empty, &lat, 3, SiteState::Inhibitory), 0.0);
        let full = SpatialConfig::filled(1, 5, SiteState::Susceptible);
        assert_eq!(local_fraction(&full, &lat, 3, SiteState::Susceptible), 1.0);
    }

    #[test]
    fn rates_follow_the_local_rules() {
        let lat = Lattice::new(1, 1.0, 5).unwrap();
        let p = ModelParams::new(1.5, 2.0, 4.0, 1.0, 1, 5);
        let cfg = SpatialConfig::from_states(
            1,
            5,
            vec![SiteState::Inhibitory, SiteState::Susceptible, SiteState::Empty, SiteState::Empty, SiteState::Empty],
        )
        .unwrap();
        assert_eq!(site_rates(&cfg, &lat, 0, &p).to_empty, 1.0);
        // site 1: f1 = 0.5, death rate 1 + 4 * 0.5
        assert_eq!(site_rates(&cfg, &lat, 1, &p).to_empty, 3.0);
        let r2 = site_rates(&cfg, &lat, 2, &p);
        assert_eq!((r2.to_inhibitory, r2.to_susceptible), (0.0, 1.0));
        let r3 = site_rates(&cfg, &lat, 3, &p);
        assert_eq!(r3.total(), 0.0);
    }

    #[test]
    fn count_tracking() {
        let mut cfg = SpatialConfig::empty(2, 4);
        cfg.set(3, SiteState::Inhibitory);
        cfg.set(5, SiteState::Susceptible);
        cfg.set(3, SiteState::Susceptible);
        assert_eq!(cfg.counts(), [14, 0, 2]);
        assert_eq!(cfg.counts(), cfg.recount());
    }

    fn arb_config(side: usize) -> impl Strategy<Value = SpatialConfig> {
        proptest::collection::vec(0u8..3, side * side).prop_map(move |v| {
            let s = v.into_iter().map(|b| SiteState::from_u8(b).unwrap()).collect();
            SpatialConfig::from_states(2, side, s).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fractions_sum_to_one(cfg in arb_config(7), x in 0usize..49) {
            let lat = Lattice::new(2, 1.5, 7).unwrap();
            let s: f64 = SiteState::ALL.iter().map(|&i| local_fraction(&cfg, &lat, x, i)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rates_are_translation_invariant(cfg in arb_config(7), dx in -7i64..7, dy in -7i64..7, gamma in 0.0..5.0f64) {
            let lat = Lattice::new(2, 1.5, 7).unwrap();
            let p = ModelParams::new(2.0, 3.0, gamma, 1.5, 2, 7);
            let moved = cfg.translated(&lat, &[dx, dy]);
            for x in 0..49 {
                let y = lat.shift(x, &[dx, dy]);
                prop_assert_eq!(site_rates(&cfg, &lat, x, &p), site_rates(&moved, &lat, y, &p));
            }
        }

        #[test]
        fn template_is_symmetric(d in 1usize..4, m in 0.5..2.6f64) {
            let t = build_neighborhood(d, m, 8).unwrap();
            let positive = t.offsets.iter()
                .filter(|o| o.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
                .count();
            prop_assert_eq!(t.size(), 2 * positive);
            for o in &t.offsets {
                let neg: Vec<i64> = o.iter().map(|c| -c).collect();
                prop_assert!(t.offsets.contains(&neg));
            }
        }

        #[test]
        fn zero_gamma_gives_contact_process_rates(cfg in arb_config(6), x in 0usize..36) {
            let lat = Lattice::new(2, 1.0, 6).unwrap();
            let p = ModelParams::new(2.0, 3.0, 0.0, 1.0, 2, 6);
            let r = site_rates(&cfg, &lat, x, &p);
            match cfg.get(x) {
                SiteState::Empty => {
                    prop_assert_eq!(r.to_empty, 0.0);
                }
                _ => prop_assert_eq!(r, SiteRates { to_empty: 1.0, ..Default::default() }),
            }
        }
    }
}
