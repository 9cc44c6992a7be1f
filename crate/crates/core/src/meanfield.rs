//! Mean-field dynamics of the two species densities.
//!
//! ```text
//! u1' = beta1 u1 (1 - u1 - u2) - u1
//! u2' = beta2 u2 (1 - u1 - u2) - (1 + gamma u1) u2
//! ```

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the region inequalities below which parameters are marginal.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Distance to a fixed point counted as converged.
pub const CONVERGED_DIST: f64 = 1e-6;
/// Field speed counted as converged.
pub const CONVERGED_SPEED: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldParams {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
}

impl MeanFieldParams {
    pub fn new(beta1: f64, beta2: f64, gamma: f64) -> Self {
        Self { beta1, beta2, gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPair {
    pub u1: f64,
    pub u2: f64,
}

impl DensityPair {
    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn in_simplex(&self, tol: f64) -> bool {
        self.u1 >= -tol && self.u2 >= -tol && self.u1 + self.u2 <= 1.0 + tol
    }

    pub fn dist(&self, o: &DensityPair) -> f64 {
        (self.u1 - o.u1).hypot(self.u2 - o.u2)
    }
}

pub fn rhs(u: DensityPair, p: &MeanFieldParams) -> (f64, f64) {
    let free = 1.0 - u.u1 - u.u2;
    (p.beta1 * u.u1 * free - u.u1, p.beta2 * u.u2 * free - (1.0 + p.gamma * u.u1) * u.u2)
}

fn speed(u: DensityPair, p: &MeanFieldParams) -> f64 {
    let (a, b) = rhs(u, p);
    a.hypot(b)
}

/// Row-major 2x2 Jacobian of [`rhs`].
pub fn jacobian(u: DensityPair, p: &MeanFieldParams) -> [[f64; 2]; 2] {
    let (u1, u2) = (u.u1, u.u2);
    [
        [p.beta1 * (1.0 - 2.0 * u1 - u2) - 1.0, -p.beta1 * u1],
        [-(p.beta2 + p.gamma) * u2, p.beta2 * (1.0 - u1 - 2.0 * u2) - 1.0 - p.gamma * u1],
    ]
}

/// Eigenvalues of a real 2x2 matrix as `(re, im)` pairs.
pub fn eigenvalues(m: &[[f64; 2]; 2]) -> [(f64, f64); 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [(tr / 2.0 - r, 0.0), (tr / 2.0 + r, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [(tr / 2.0, -r), (tr / 2.0, r)]
    }
}

pub fn determinant(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    /// An eigenvalue with real part within tolerance of zero.
    Marginal,
}

pub fn stability_of(eig: &[(f64, f64); 2]) -> Stability {
    let tol = MARGINAL_TOL;
    if eig.iter().any(|e| e.0.abs() <= tol) {
        Stability::Marginal
    } else if eig.iter().all(|e| e.0 < 0.0) {
        Stability::Stable
    } else if eig.iter().all(|e| e.0 > 0.0) {
        Stability::Unstable
    } else {
        Stability::Saddle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedPointId {
    P0,
    P1,
    P2,
    P12,
}

impl FixedPointId {
    pub fn name(self) -> &'static str {
        match self {
            FixedPointId::P0 => "p0",
            FixedPointId::P1 => "p1",
            FixedPointId::P2 => "p2",
            FixedPointId::P12 => "p12",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub id: FixedPointId,
    pub location: DensityPair,
    pub in_simplex: bool,
    pub eigenvalues: [(f64, f64); 2],
    pub stability: Stability,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub params: MeanFieldParams,
    pub p0: FixedPoint,
    pub p1: Option<FixedPoint>,
    pub p2: Option<FixedPoint>,
    /// `None` when undefined (gamma = 0 or beta1 = 0).
    pub p12: Option<FixedPoint>,
}

impl FixedPointReport {
    pub fn all(&self) -> impl Iterator<Item = &FixedPoint> {
        std::iter::once(&self.p0).chain(self.p1.as_ref()).chain(self.p2.as_ref()).chain(self.p12.as_ref())
    }

    pub fn get(&self, id: FixedPointId) -> Option<&FixedPoint> {
        self.all().find(|f| f.id == id)
    }

    /// CSV `point,u1,u2,in_simplex,eig1_re,eig1_im,eig2_re,eig2_im,stability,residual`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "point,u1,u2,in_simplex,eig1_re,eig1_im,eig2_re,eig2_im,stability,residual")?;
        for f in self.all() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{:?},{:e}",
                f.id.name(),
                f.location.u1,
                f.location.u2,
                f.in_simplex,
                f.eigenvalues[0].0,
                f.eigenvalues[0].1,
                f.eigenvalues[1].0,
                f.eigenvalues[1].1,
                f.stability,
                f.residual
            )?;
        }
        Ok(())
    }
}

/// Double-double number `hi + lo`, used to evaluate the field at the exact
/// fixed points. Far outside the simplex the coordinates reach `1e4` and
/// more, and rounding the location to `f64` alone moves the field by far more
/// than the residual tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::norm(s, err + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::norm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::norm(q1, q2).add(Dd::from(q3))
    }
}

fn rhs_dd(u1: Dd, u2: Dd, p: &MeanFieldParams) -> (f64, f64) {
    let one = Dd::from(1.0);
    let free = one.sub(u1).sub(u2);
    let f1 = Dd::from(p.beta1).mul(u1).mul(free).sub(u1);
    let f2 = Dd::from(p.beta2).mul(u2).mul(free).sub(one.add(Dd::from(p.gamma).mul(u1)).mul(u2));
    (f1.hi, f2.hi)
}

fn point(id: FixedPointId, exact: (Dd, Dd), in_simplex: bool, p: &MeanFieldParams) -> FixedPoint {
    let u = DensityPair::new(exact.0.hi, exact.1.hi);
    let eig = eigenvalues(&jacobian(u, p));
    let (f1, f2) = rhs_dd(exact.0, exact.1, p);
    FixedPoint { id, location: u, in_simplex, eigenvalues: eig, stability: stability_of(&eig), residual: f1.hypot(f2) }
}

fn interior_dd(p: &MeanFieldParams) -> Option<(Dd, Dd)> {
    if p.gamma == 0.0 || p.beta1 == 0.0 {
        return None;
    }
    let one = Dd::from(1.0);
    let b1 = Dd::from(p.beta1);
    let u1 = Dd::from(p.beta2).div(b1).sub(one).div(Dd::from(p.gamma));
    let u2 = one.sub(one.div(b1)).sub(u1);
    Some((u1, u2))
}

/// Interior fixed point coordinates, if defined.
pub fn interior_point(p: &MeanFieldParams) -> Option<DensityPair> {
    interior_dd(p).map(|(a, b)| DensityPair::new(a.hi, b.hi))
}

/// The four fixed points. `residual` is the field at the exact location,
/// evaluated in double-double arithmetic.
pub fn fixed_points(p: &MeanFieldParams) -> FixedPointReport {
    let zero = Dd::from(0.0);
    let one = Dd::from(1.0);
    let p0 = point(FixedPointId::P0, (zero, zero), true, p);
    let p1 =
        (p.beta1 > 0.0).then(|| point(FixedPointId::P1, (one.sub(one.div(Dd::from(p.beta1))), zero), p.beta1 > 1.0, p));
    let p2 =
        (p.beta2 > 0.0).then(|| point(FixedPointId::P2, (zero, one.sub(one.div(Dd::from(p.beta2)))), p.beta2 > 1.0, p));
    let p12 = interior_dd(p).map(|(a, b)| {
        let u = DensityPair::new(a.hi, b.hi);
        let inside = u.u1 > 0.0 && u.u2 > 0.0 && u.u1 + u.u2 < 1.0;
        point(FixedPointId::P12, (a, b), inside, p)
    });
    FixedPointReport { params: *p, p0, p1, p2, p12 }
}

/// Long-run behavior predicted from the stability regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicted {
    /// Region B0: the population dies out.
    Extinction,
    /// B1 minus B2.
    Species1,
    /// B2 minus B1.
    Species2,
    /// B1 intersect B2: convergence to p1 or p2 depending on the start.
    Bistable,
    /// Outside all three regions (a boundary case with non-strict inequalities).
    None,
    /// Some defining inequality holds only within tolerance.
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub in_b0: bool,
    pub in_b1: bool,
    pub in_b2: bool,
    pub marginal: bool,
    pub predicted: Predicted,
    /// `det J(p12)` from the closed form, when p12 is defined.
    pub saddle_det: Option<f64>,
    pub report: FixedPointReport,
}

/// Closed-form determinant of the Jacobian at the interior point.
pub fn saddle_determinant(p: &MeanFieldParams) -> Option<f64> {
    interior_point(p).map(|u| -u.u1 * ((1.0 + p.gamma) * p.beta1 - p.gamma - p.beta2))
}

pub fn classify(p: &MeanFieldParams) -> Classification {
    let bound = (1.0 + p.gamma) * p.beta1 - p.gamma;
    // signed margins of each region's inequalities (positive = holds)
    let regions =
        [[1.0 - p.beta1, 1.0 - p.beta2], [p.beta1 - 1.0, bound - p.beta2], [p.beta2 - 1.0, p.beta2 - p.beta1]];
    // a region is marginal when no inequality clearly fails but one is within tolerance
    let marginal =
        regions.iter().any(|r| r.iter().all(|&m| m >= -MARGINAL_TOL) && r.iter().any(|&m| m.abs() <= MARGINAL_TOL));
    let [in_b0, in_b1, in_b2] = regions.map(|r| r.iter().all(|&m| m > 0.0));
    let predicted = if marginal {
        Predicted::Marginal
    } else {
        match (in_b0, in_b1, in_b2) {
            (true, _, _) => Predicted::Extinction,
            (false, true, false) => Predicted::Species1,
            (false, false, true) => Predicted::Species2,
            (false, true, true) => Predicted::Bistable,
            (false, false, false) => Predicted::None,
        }
    };
    Classification {
        in_b0,
        in_b1,
        in_b2,
        marginal,
        predicted,
        saddle_det: saddle_determinant(p),
        report: fixed_points(p),
    }
}

/// Dulac divergence `-beta1 / u2 - beta2 / u1` for `phi = 1 / (u1 u2)`.
pub fn dulac_divergence(u: DensityPair, p: &MeanFieldParams) -> Result<f64> {
    if !(u.u1 > 0.0 && u.u2 > 0.0) {
        return Err(Error::BoundaryPoint(u.u1, u.u2));
    }
    Ok(-p.beta1 / u.u2 - p.beta2 / u.u1)
}

/// Divergence of `(phi F1, phi F2)` by central differences.
pub fn dulac_divergence_numeric(u: DensityPair, p: &MeanFieldParams, h: f64) -> Result<f64> {
    if !(u.u1 > h && u.u2 > h) {
        return Err(Error::BoundaryPoint(u.u1, u.u2));
    }
    let scaled = |v: DensityPair| {
        let (f1, f2) = rhs(v, p);
        let phi = 1.0 / (v.u1 * v.u2);
        (phi * f1, phi * f2)
    };
    let d1 = (scaled(DensityPair::new(u.u1 + h, u.u2)).0 - scaled(DensityPair::new(u.u1 - h, u.u2)).0) / (2.0 * h);
    let d2 = (scaled(DensityPair::new(u.u1, u.u2 + h)).1 - scaled(DensityPair::new(u.u1, u.u2 - h)).1) / (2.0 * h);
    Ok(d1 + d2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Stop as soon as the state is converged to a fixed point.
    pub stop_when_converged: bool,
    /// Keep every accepted step in the trajectory.
    pub record: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: 1e-3, h_min: 1e-14, h_max: 5.0, stop_when_converged: false, record: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityPair>,
    pub terminal: DensityPair,
    pub terminal_time: f64,
    pub nearest: FixedPointId,
    pub nearest_dist: f64,
    pub terminal_speed: f64,
    /// Largest excursion outside the simplex along the way.
    pub simplex_excess: f64,
}

impl Trajectory {
    pub fn converged(&self) -> bool {
        self.nearest_dist < CONVERGED_DIST && self.terminal_speed < CONVERGED_SPEED
    }

    /// CSV `t,u1,u2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,u1,u2")?;
        for (t, u) in self.times.iter().zip(&self.states) {
            writeln!(w, "{t},{},{}", u.u1, u.u2)?;
        }
        Ok(())
    }
}

fn nearest_fixed_point(u: DensityPair, report: &FixedPointReport) -> (FixedPointId, f64) {
    report.all().map(|f| (f.id, f.location.dist(&u))).min_by(|a, b| a.1.total_cmp(&b.1)).expect("p0 always present")
}

// Dormand-Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type V = [f64; 2];

fn f(u: V, p: &MeanFieldParams) -> V {
    let (a, b) = rhs(DensityPair::new(u[0], u[1]), p);
    [a, b]
}

fn axpy(u: V, h: f64, terms: &[(f64, V)]) -> V {
    let mut out = u;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Adaptive Dormand-Prince integration from `u0` over `[0, horizon]`.
pub fn integrate(u0: DensityPair, p: &MeanFieldParams, horizon: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    if !u0.in_simplex(0.0) {
        return Err(Error::config(format!("initial point ({}, {}) outside the simplex", u0.u1, u0.u2)));
    }
    let report = fixed_points(p);
    let mut t = 0.0;
    let mut u: V = [u0.u1, u0.u2];
    let mut h = opts.h0.min(horizon);
    let mut times = vec![0.0];
    let mut states = vec![u0];
    let mut excess: f64 = 0.0;
    let mut k1 = f(u, p);
    while t < horizon {
        if opts.stop_when_converged {
            let cur = DensityPair::new(u[0], u[1]);
            let (_, d) = nearest_fixed_point(cur, &report);
            if d < CONVERGED_DIST && speed(cur, p) < CONVERGED_SPEED {
                break;
            }
        }
        h = h.min(horizon - t);
        let k2 = f(axpy(u, h, &[(A21, k1)]), p);
        let k3 = f(axpy(u, h, &[(A31, k1), (A32, k2)]), p);
        let k4 = f(axpy(u, h, &[(A41, k1), (A42, k2), (A43, k3)]), p);
        let k5 = f(axpy(u, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]), p);
        let k6 = f(axpy(u, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]), p);
        let next = axpy(u, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = f(next, p);
        let err = axpy([0.0, 0.0], h, &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)]);
        let mut norm: f64 = 0.0;
        for i in 0..2 {
            let sc = opts.atol + opts.rtol * u[i].abs().max(next[i].abs());
            norm = norm.max((err[i] / sc).abs());
        }
        if !norm.is_finite() {
            return Err(Error::StepFailure { time: t, reason: "non-finite error estimate".into() });
        }
        if norm <= 1.0 {
            t += h;
            u = next;
            k1 = k7;
            excess = excess.max(-u[0]).max(-u[1]).max(u[0] + u[1] - 1.0);
            if opts.record {
                times.push(t);
                states.push(DensityPair::new(u[0], u[1]));
            }
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.h_max);
        if h < opts.h_min && t < horizon {
            return Err(Error::StepFailure { time: t, reason: format!("step size {h:e} below minimum") });
        }
    }
    let terminal = DensityPair::new(u[0], u[1]);
    if !opts.record {
        times.push(t);
        states.push(terminal);
    }
    let (nearest, nearest_dist) = nearest_fixed_point(terminal, &report);
    Ok(Trajectory {
        times,
        states,
        terminal,
        terminal_time: t,
        nearest,
        nearest_dist,
        terminal_speed: speed(terminal, p),
        simplex_excess: excess.max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasinLabel {
    P0,
    P1,
    P2,
    P12,
    Undecided,
}

impl BasinLabel {
    pub fn name(self) -> &'static str {
        match self {
            BasinLabel::P0 => "p0",
            BasinLabel::P1 => "p1",
            BasinLabel::P2 => "p2",
            BasinLabel::P12 => "p12",
            BasinLabel::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinCell {
    pub u: DensityPair,
    pub label: BasinLabel,
    /// Time at which the cell was declared converged.
    pub t_converge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinMap {
    pub resolution: usize,
    pub t_max: f64,
    pub cells: Vec<BasinCell>,
}

impl BasinMap {
    /// Fraction of cells carrying `label`.
    pub fn area(&self, label: BasinLabel) -> f64 {
        self.cells.iter().filter(|c| c.label == label).count() as f64 / self.cells.len() as f64
    }

    /// CSV `u1,u2,label,t_converge`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "u1,u2,label,t_converge")?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{}", c.u.u1, c.u.u2, c.label.name(), c.t_converge)?;
        }
        Ok(())
    }
}

/// Limit label of every cell center `((i + 1/2) / n, (j + 1/2) / n)` strictly
/// inside the simplex. The invariant axes are excluded.
pub fn basin_map(p: &MeanFieldParams, resolution: usize, t_max: f64) -> Result<BasinMap> {
    if resolution == 0 {
        return Err(Error::config("basin resolution must be positive"));
    }
    let n = resolution as f64;
    let centers: Vec<DensityPair> = (0..resolution)
        .flat_map(|i| (0..resolution).map(move |j| DensityPair::new((i as f64 + 0.5) / n, (j as f64 + 0.5) / n)))
        .filter(|u| u.u1 + u.u2 < 1.0)
        .collect();
    let opts = IntegratorOptions { stop_when_converged: true, record: false, ..Default::default() };
    let cells = centers
        .par_iter()
        .map(|&u| {
            let traj = integrate(u, p, t_max, &opts)?;
            let label = if traj.converged() {
                match traj.nearest {
                    FixedPointId::P0 => BasinLabel::P0,
                    FixedPointId::P1 => BasinLabel::P1,
                    FixedPointId::P2 => BasinLabel::P2,
                    FixedPointId::P12 => BasinLabel::P12,
                }
            } else {
                BasinLabel::Undecided
            };
            Ok(BasinCell { u, label, t_converge: traj.terminal_time })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasinMap { resolution, t_max, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BISTABLE: MeanFieldParams = MeanFieldParams { beta1: 2.0, beta2: 2.5, gamma: 4.0 };

    #[test]
    fn rhs_values() {
        assert_eq!(rhs(DensityPair::new(0.0, 0.0), &BISTABLE), (0.0, 0.0));
        let (a, b) = rhs(DensityPair::new(0.25, 0.25), &MeanFieldParams::new(2.0, 3.0, 4.0));
        assert!(a.abs() < 1e-15 && (b + 0.125).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_locations() {
        let r = fixed_points(&BISTABLE);
        assert_eq!(r.p1.unwrap().location, DensityPair::new(0.5, 0.0));
        let p12 = r.p12.unwrap();
        assert!((p12.location.u1 - 0.0625).abs() < 1e-15);
        assert!((p12.location.u2 - 0.4375).abs() < 1e-15);
        assert!(p12.in_simplex);
        assert_eq!(p12.stability, Stability::Saddle);
        for f in r.all() {
            assert!(f.residual <= 1e-12, "{f:?}");
        }
        // 2.5 > (1 + 0.4) * 2 - 0.4 = 2.4: the interior point leaves the simplex
        let r = fixed_points(&MeanFieldParams::new(2.0, 2.5, 0.4));
        assert!(!r.p12.unwrap().in_simplex);
        assert!(r.p12.unwrap().location.u2 < 0.0);
        assert!(fixed_points(&MeanFieldParams::new(2.0, 2.5, 0.0)).p12.is_none());
    }

    #[test]
    fn triangular_jacobians() {
        let r = fixed_points(&BISTABLE);
        let j0 = jacobian(r.p0.location, &BISTABLE);
        assert_eq!(j0, [[1.0, 0.0], [0.0, 1.5]]);
        assert_eq!(jacobian(r.p1.unwrap().location, &BISTABLE)[1][0], 0.0);
        assert_eq!(jacobian(r.p2.unwrap().location, &BISTABLE)[0][1], 0.0);
        // first row entries coincide at p12
        let u = r.p12.unwrap().location;
        let j = jacobian(u, &BISTABLE);
        assert!((j[0][0] - j[0][1]).abs() < 1e-14);
        assert!((j[0][1] + BISTABLE.beta1 * u.u1).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = 1e-6;
        let mut s = 0x1234_5678_u64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let p = MeanFieldParams::new(5.0 * next(), 5.0 * next(), 10.0 * next());
            let u = DensityPair::new(next(), next());
            let j = jacobian(u, &p);
            let (a, b) = rhs(DensityPair::new(u.u1 + h, u.u2), &p);
            let (c, d) = rhs(DensityPair::new(u.u1 - h, u.u2), &p);
            let (e, f) = rhs(DensityPair::new(u.u1, u.u2 + h), &p);
            let (g, k) = rhs(DensityPair::new(u.u1, u.u2 - h), &p);
            let fd = [[(a - c) / (2.0 * h), (e - g) / (2.0 * h)], [(b - d) / (2.0 * h), (f - k) / (2.0 * h)]];
            for r in 0..2 {
                for col in 0..2 {
                    assert!((fd[r][col] - j[r][col]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn region_examples() {
        let c = classify(&MeanFieldParams::new(0.5, 0.5, 1.0));
        assert!(c.in_b0);
        assert_eq!(c.predicted, Predicted::Extinction);
        let c = classify(&BISTABLE);
        assert!(c.in_b1 && c.in_b2);
        assert_eq!(c.predicted, Predicted::Bistable);
        assert!((c.saddle_det.unwrap() + 0.21875).abs() < 1e-15);
        let c = classify(&MeanFieldParams::new(2.0, 3.0, 0.4));
        assert!(!c.in_b1 && c.in_b2);
        assert_eq!(c.predicted, Predicted::Species2);
        // p12 collides with p1
        let c = classify(&MeanFieldParams::new(2.0, 2.4, 0.4));
        assert!(c.marginal);
        assert_eq!(c.predicted, Predicted::Marginal);
    }

    #[test]
    fn saddle_determinant_agrees_with_eigenvalues() {
        let c = classify(&BISTABLE);
        let p12 = c.report.p12.unwrap();
        let prod = p12.eigenvalues[0].0 * p12.eigenvalues[1].0;
        assert!((prod - c.saddle_det.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dulac_values() {
        let p = MeanFieldParams::new(2.0, 3.0, 1.0);
        assert_eq!(dulac_divergence(DensityPair::new(0.25, 0.25), &p).unwrap(), -20.0);
        assert!(dulac_divergence(DensityPair::new(0.0, 0.25), &p).is_err());
        let num = dulac_divergence_numeric(DensityPair::new(0.25, 0.25), &p, 1e-5).unwrap();
        assert!((num + 20.0).abs() < 1e-6);
    }

    #[test]
    fn fixed_points_are_stationary() {
        let r = fixed_points(&BISTABLE);
        for fp in [r.p0, r.p1.unwrap(), r.p2.unwrap(), r.p12.unwrap()] {
            let tr = integrate(fp.location, &BISTABLE, 50.0, &IntegratorOptions::default()).unwrap();
            assert!(tr.terminal.dist(&fp.location) < 1e-9, "{:?} {:?}", fp.id, tr.terminal);
        }
    }

    #[test]
    fn bistable_trajectories() {
        let opts = IntegratorOptions::default();
        let a = integrate(DensityPair::new(0.4, 0.05), &BISTABLE, 500.0, &opts).unwrap();
        assert_eq!(a.nearest, FixedPointId::P1);
        assert!(a.terminal.dist(&DensityPair::new(0.5, 0.0)) < 1e-6);
        let b = integrate(DensityPair::new(0.05, 0.4), &BISTABLE, 500.0, &opts).unwrap();
        assert_eq!(b.nearest, FixedPointId::P2);
        assert!(b.terminal.dist(&DensityPair::new(0.0, 0.6)) < 1e-6);
        assert!(a.simplex_excess < 1e-9 && b.simplex_excess < 1e-9);
        assert!(a.converged() && b.converged());
    }

    #[test]
    fn rejects_start_outside_simplex() {
        assert!(integrate(DensityPair::new(0.8, 0.5), &BISTABLE, 1.0, &IntegratorOptions::default()).is_err());
    }

    #[test]
    fn basin_for_dominant_species_one() {
        // beta2 < beta1: B1 only
        let p = MeanFieldParams::new(3.0, 2.0, 1.0);
        let m = basin_map(&p, 20, 2000.0).unwrap();
        assert!(m.cells.iter().all(|c| c.label == BasinLabel::P1));
    }
}
