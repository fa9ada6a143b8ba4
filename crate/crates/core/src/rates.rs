//! Rate of change of the mean atomic energy, split by mechanism (vacuum
//! fluctuations / radiation reaction), part (boundary / unbounded), channel
//! and component pair.
//!
//! Entry values are stored per unit `e²`; [`RateEntry::rate`] multiplies by
//! the coupling recorded in the breakdown.
//!
//! Boundary entries, with `W = P_ii` (diagonal) or `W = 2 P_xz` (the xz and
//! zx terms together) and `n` the Planck factor at `|ω|`:
//!
//! ```text
//! vf = ± ω⁴ W f_ij (1 + 2n) / 32π      (+ de-excitation, − excitation)
//! rr = + ω⁴ W f_ij / 32π               (both channels)
//! ```
//!
//! The unbounded part is only known as a total:
//! `−ω⁴ P_ii (1 + a²/ω²)(1 + n)/3π` for de-excitation and
//! `+ω⁴ P_ii (1 + a²/ω²) n/3π` for excitation.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::atom::{ensure_valid, transitions_from, AtomSpec, Transition};
use crate::error::{ensure_positive, Error, Result};
use crate::special::{planck_n, EvalPolicy, Pair, ReducedPoint};

/// `e² = 4π α` in Lorentz–Heaviside units.
pub const DEFAULT_COUPLING: f64 = 4.0 * PI / 137.035999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Mechanism {
    #[serde(rename = "vf")]
    VacuumFluctuations,
    #[serde(rename = "rr")]
    RadiationReaction,
    /// vf + rr, for the unbounded part whose split is not computed here.
    #[serde(rename = "total")]
    Total,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::VacuumFluctuations => "vf",
            Mechanism::RadiationReaction => "rr",
            Mechanism::Total => "total",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Boundary,
    Unbounded,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Boundary => "boundary",
            Part::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// `ω_bd > 0`. Degenerate transitions (`ω_bd = 0`) are filed here too;
    /// all their entries are zero.
    Deexcitation,
    /// `ω_bd < 0`.
    Excitation,
}

impl Channel {
    pub fn of(omega: f64) -> Self {
        if omega < 0.0 {
            Channel::Excitation
        } else {
            Channel::Deexcitation
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Deexcitation => "deexcitation",
            Channel::Excitation => "excitation",
        }
    }
}

macro_rules! display_via_as_str {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )*};
}
display_via_as_str!(Mechanism, Part, Channel);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub partner: String,
    pub omega: f64,
    pub pair: Pair,
    pub mechanism: Mechanism,
    pub part: Part,
    pub channel: Channel,
    /// Rate per unit `e²`.
    pub per_e2: f64,
    coupling: f64,
}

impl RateEntry {
    pub fn rate(&self) -> f64 {
        self.coupling * self.per_e2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBreakdown {
    pub coupling: f64,
    pub state: String,
    pub z: Option<f64>,
    pub accel: f64,
    /// Ordered by transition (level id), then pair, then
    /// boundary vf, boundary rr, unbounded total.
    pub entries: Vec<RateEntry>,
    /// Boundary vf + rr per transition and pair, evaluated from the thermal
    /// factor directly so that `2n` survives when `n ≪ ε`.
    pub boundary_totals: Vec<BoundaryTotal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryTotal {
    pub partner: String,
    pub omega: f64,
    pub pair: Pair,
    pub channel: Channel,
    pub per_e2: f64,
}

impl RateBreakdown {
    /// Sum of every entry in order.
    pub fn total(&self) -> f64 {
        self.entries.iter().map(RateEntry::rate).sum()
    }

    pub fn total_per_e2(&self) -> f64 {
        self.entries.iter().map(|e| e.per_e2).sum()
    }

    pub fn sum_where(&self, keep: impl Fn(&RateEntry) -> bool) -> f64 {
        self.entries.iter().filter(|e| keep(e)).map(RateEntry::rate).sum()
    }

    pub fn part_total(&self, part: Part) -> f64 {
        self.sum_where(|e| e.part == part)
    }

    pub fn pair_total(&self, pair: Pair) -> f64 {
        self.sum_where(|e| e.pair == pair)
    }

    pub fn find(&self, partner: &str, pair: Pair, mechanism: Mechanism, part: Part) -> Option<&RateEntry> {
        self.entries.iter().find(|e| {
            e.partner == partner && e.pair == pair && e.mechanism == mechanism && e.part == part
        })
    }

    /// Boundary total (vf + rr) for one transition and pair.
    pub fn boundary_total(&self, partner: &str, pair: Pair) -> Option<f64> {
        self.boundary_totals
            .iter()
            .find(|t| t.partner == partner && t.pair == pair)
            .map(|t| self.coupling * t.per_e2)
    }

    /// Largest entry magnitude, used to scale cancellation checks.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.rate().abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub coupling: f64,
    pub policy: EvalPolicy,
}

impl Default for RateModel {
    fn default() -> Self {
        Self { coupling: DEFAULT_COUPLING, policy: EvalPolicy::default() }
    }
}

/// Weight of a component pair in `Σ_ij P_ij f_ij`.
pub fn pair_weight(t: &Transition, pair: Pair) -> f64 {
    let (i, j) = pair.indices();
    if pair.is_diagonal() {
        t.polarization[i][i]
    } else {
        t.polarization[i][j] + t.polarization[j][i]
    }
}

impl RateModel {
    pub fn with_coupling(coupling: f64) -> Self {
        Self { coupling, ..Default::default() }
    }

    fn entry(&self, t: &Transition, pair: Pair, mechanism: Mechanism, part: Part, per_e2: f64) -> RateEntry {
        RateEntry {
            partner: t.partner.clone(),
            omega: t.omega,
            pair,
            mechanism,
            part,
            channel: Channel::of(t.omega),
            // normalizes −0
            per_e2: per_e2 + 0.0,
            coupling: self.coupling,
        }
    }

    /// Shared assembly for `a ≥ 0`; `a = 0` is the inertial atom (without
    /// the xz pair unless `pairs` asks for it).
    fn assemble(&self, spec: &AtomSpec, b: &str, z: Option<f64>, accel: f64, pairs: &[Pair]) -> Result<RateBreakdown> {
        let transitions = transitions_from(spec, b)?;
        let mut entries = Vec::with_capacity(transitions.len() * pairs.len() * 3);
        let mut boundary_totals = Vec::new();
        for t in &transitions {
            let w = t.omega.abs();
            let w4 = t.omega.powi(4);
            let n = if w > 0.0 { planck_n(w, accel)? } else { 0.0 };
            let excitation = Channel::of(t.omega) == Channel::Excitation;
            for &pair in pairs {
                let weight = pair_weight(t, pair);
                if let Some(z) = z {
                    let base = if w > 0.0 {
                        let p = ReducedPoint::from_physical(w, z, accel)?;
                        w4 * weight * self.policy.f_accel(pair, p)? / (32.0 * PI)
                    } else {
                        0.0
                    };
                    let vf = if excitation { -base * (1.0 + 2.0 * n) } else { base * (1.0 + 2.0 * n) };
                    entries.push(self.entry(t, pair, Mechanism::VacuumFluctuations, Part::Boundary, vf));
                    entries.push(self.entry(t, pair, Mechanism::RadiationReaction, Part::Boundary, base));
                    let total = if excitation { -2.0 * base * n } else { 2.0 * base * (1.0 + n) };
                    boundary_totals.push(BoundaryTotal {
                        partner: t.partner.clone(),
                        omega: t.omega,
                        pair,
                        channel: Channel::of(t.omega),
                        per_e2: total + 0.0,
                    });
                }
                let unbounded = if pair.is_diagonal() && w > 0.0 {
                    let nonthermal = 1.0 + accel * accel / (w * w);
                    if excitation {
                        w4 * weight * nonthermal * n / (3.0 * PI)
                    } else {
                        -w4 * weight * nonthermal * (1.0 + n) / (3.0 * PI)
                    }
                } else {
                    0.0
                };
                entries.push(self.entry(t, pair, Mechanism::Total, Part::Unbounded, unbounded));
            }
        }
        Ok(RateBreakdown { coupling: self.coupling, state: b.to_string(), z, accel, entries, boundary_totals })
    }

    pub fn rate_inertial(&self, spec: &AtomSpec, b: &str, z: f64) -> Result<RateBreakdown> {
        ensure_positive("z", z)?;
        self.assemble(spec, b, Some(z), 0.0, &Pair::DIAGONAL)
    }

    pub fn rate_accelerated(&self, spec: &AtomSpec, b: &str, z: f64, accel: f64) -> Result<RateBreakdown> {
        ensure_positive("z", z)?;
        ensure_positive("acceleration", accel)?;
        self.assemble(spec, b, Some(z), accel, &Pair::ALL)
    }

    /// Accelerated assembly that also accepts `a = 0` (xz entries are then
    /// zero). Keeps the row layout fixed across an acceleration sweep.
    pub fn rate_accelerated_or_rest(&self, spec: &AtomSpec, b: &str, z: f64, accel: f64) -> Result<RateBreakdown> {
        ensure_positive("z", z)?;
        if !(accel >= 0.0 && accel.is_finite()) {
            return Err(Error::Domain(format!("acceleration must be non-negative, got {accel}")));
        }
        self.assemble(spec, b, Some(z), accel, &Pair::ALL)
    }

    /// Unbounded (Minkowski vacuum) part only.
    pub fn unbounded_rate(&self, spec: &AtomSpec, b: &str, accel: f64) -> Result<RateBreakdown> {
        ensure_valid(spec)?;
        if !(accel >= 0.0 && accel.is_finite()) {
            return Err(Error::Domain(format!("acceleration must be non-negative, got {accel}")));
        }
        let pairs: &[Pair] = if accel > 0.0 { &Pair::ALL } else { &Pair::DIAGONAL };
        self.assemble(spec, b, None, accel, pairs)
    }
}

pub fn rate_inertial(spec: &AtomSpec, b: &str, z: f64) -> Result<RateBreakdown> {
    RateModel::default().rate_inertial(spec, b, z)
}

pub fn rate_accelerated(spec: &AtomSpec, b: &str, z: f64, accel: f64) -> Result<RateBreakdown> {
    RateModel::default().rate_accelerated(spec, b, z, accel)
}

pub fn unbounded_rate(spec: &AtomSpec, b: &str, accel: f64) -> Result<RateBreakdown> {
    RateModel::default().unbounded_rate(spec, b, accel)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingResult {
    pub component: Pair,
    pub roots: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Grid points per oscillation period `π/ω` of the boundary functions.
const CROSSING_GRID_PER_PERIOD: f64 = 64.0;

/// Distances `z` at which the nonthermal part of the rate vanishes for a
/// polarization along `component`:
/// `g(z) = a²/ω² − (3/16) f_ii(ω, z, a) = 0`.
pub fn nonthermal_crossing(
    omega: f64,
    accel: f64,
    component: Pair,
    z_range: (f64, f64),
    max_roots: usize,
) -> Result<CrossingResult> {
    nonthermal_crossing_with(&EvalPolicy::default(), omega, accel, component, z_range, max_roots)
}

pub fn nonthermal_crossing_with(
    policy: &EvalPolicy,
    omega: f64,
    accel: f64,
    component: Pair,
    (z_lo, z_hi): (f64, f64),
    max_roots: usize,
) -> Result<CrossingResult> {
    ensure_positive("omega", omega)?;
    ensure_positive("acceleration", accel)?;
    ensure_positive("z_lo", z_lo)?;
    if !(z_hi > z_lo) || !z_hi.is_finite() {
        return Err(Error::Domain(format!("z range must satisfy z_lo < z_hi, got ({z_lo}, {z_hi})")));
    }
    if !component.is_diagonal() {
        return Err(Error::Domain("crossing search needs a diagonal component".into()));
    }

    let ratio = accel * accel / (omega * omega);
    let g = |z: f64| -> Result<f64> {
        let p = ReducedPoint::from_physical(omega, z, accel)?;
        Ok(ratio - 3.0 / 16.0 * policy.f_accel(component, p)?)
    };
    let tol = 1e-10 * ratio.max(1.0);

    let step = PI / (CROSSING_GRID_PER_PERIOD * omega);
    let n = (((z_hi - z_lo) / step).ceil() as usize).max(CROSSING_GRID_PER_PERIOD as usize);
    let grid: Vec<f64> = (0..=n).map(|k| z_lo + (z_hi - z_lo) * k as f64 / n as f64).collect();

    let mut roots = Vec::new();
    let mut residuals = Vec::new();
    let mut prev = (grid[0], g(grid[0])?);
    if prev.1 == 0.0 {
        roots.push(prev.0);
        residuals.push(0.0);
    }
    for &zk in &grid[1..] {
        if roots.len() >= max_roots {
            break;
        }
        let cur = (zk, g(zk)?);
        if cur.1 == 0.0 {
            roots.push(cur.0);
            residuals.push(0.0);
        } else if prev.1 != 0.0 && prev.1.signum() != cur.1.signum() {
            let (root, res) = bisect(&g, prev, cur, tol)?;
            roots.push(root);
            residuals.push(res);
        }
        prev = cur;
    }
    roots.truncate(max_roots);
    residuals.truncate(max_roots);
    Ok(CrossingResult { component, roots, residuals })
}

/// Bisection on a sign-changing bracket; returns the best point and `|g|`.
fn bisect(
    g: &impl Fn(f64) -> Result<f64>,
    (mut lo, mut g_lo): (f64, f64),
    (mut hi, _): (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    let mut best = (lo, g_lo.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid)?;
        if g_mid.abs() < best.1 {
            best = (mid, g_mid.abs());
        }
        if g_mid.abs() <= tol {
            break;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::TwoLevelState;
    use crate::special::f_z;

    fn z_atom(state: TwoLevelState, r: f64) -> AtomSpec {
        AtomSpec::two_level_real(1.0, [0.0, 0.0, r], state)
    }

    #[test]
    fn ground_state_inertial_cancels() {
        let spec = AtomSpec::two_level_real(1.0, [0.3, -0.2, 0.5], TwoLevelState::Ground);
        for z in [1e-3, 0.4, 2.0, 50.0] {
            let r = rate_inertial(&spec, "g", z).unwrap();
            assert_eq!(r.total(), 0.0);
            for pair in Pair::DIAGONAL {
                let vf = r.find("e", pair, Mechanism::VacuumFluctuations, Part::Boundary).unwrap();
                let rr = r.find("e", pair, Mechanism::RadiationReaction, Part::Boundary).unwrap();
                assert_eq!(vf.per_e2, -rr.per_e2);
                assert!(rr.per_e2 != 0.0);
            }
        }
    }

    #[test]
    fn excited_normal_dipole_at_quarter_period() {
        let r = 0.4;
        let spec = z_atom(TwoLevelState::Excited, r);
        let br = RateModel::with_coupling(0.25).rate_inertial(&spec, "e", PI / 2.0).unwrap();
        let expect = -(0.25 / (3.0 * PI)) * r * r * (1.0 + 3.0 / (PI * PI));
        let got = br.pair_total(Pair::Zz);
        assert!((got - expect).abs() < 1e-14 * expect.abs(), "{got} vs {expect}");
    }

    #[test]
    fn normal_dipole_doubles_near_plane() {
        let spec = z_atom(TwoLevelState::Excited, 1.0);
        let br = rate_inertial(&spec, "e", 1e-6).unwrap();
        let ratio = br.pair_total(Pair::Zz) / br.sum_where(|e| e.part == Part::Unbounded && e.pair == Pair::Zz);
        assert!((ratio - 2.0).abs() < 1e-10, "{ratio}");
        let f = f_z(1e-6).unwrap();
        assert!((ratio - (1.0 - 3.0 / 16.0 * f)).abs() < 1e-14);
    }

    #[test]
    fn accelerated_boundary_detailed_balance() {
        let w = 1.0;
        let a = 1.0;
        let up = rate_accelerated(&z_atom(TwoLevelState::Ground, 1.0), "g", 0.8, a).unwrap();
        let down = rate_accelerated(&z_atom(TwoLevelState::Excited, 1.0), "e", 0.8, a).unwrap();
        let ex = up.part_total(Part::Boundary);
        let de = down.part_total(Part::Boundary);
        let kms = (-2.0 * PI * w / a).exp();
        assert!((-ex / de - kms).abs() < 1e-12 * kms);
    }

    #[test]
    fn unbounded_rates() {
        let r = 0.3;
        let e2 = DEFAULT_COUPLING;
        let un = unbounded_rate(&z_atom(TwoLevelState::Excited, r), "e", 0.0).unwrap();
        let expect = -(e2 / (3.0 * PI)) * r * r;
        assert!((un.total() - expect).abs() < 1e-15);

        let a = 0.7;
        let n = planck_n(1.0, a).unwrap();
        let ground = unbounded_rate(&z_atom(TwoLevelState::Ground, r), "g", a).unwrap();
        let expect = (e2 / (3.0 * PI)) * r * r * (1.0 + a * a) * n;
        assert!(ground.total() > 0.0);
        assert!((ground.total() - expect).abs() < 1e-15 * expect);

        let iso = r / 3f64.sqrt();
        let iso_atom = AtomSpec::two_level_real(1.0, [iso, iso, iso], TwoLevelState::Excited);
        let iso_total = unbounded_rate(&iso_atom, "e", a).unwrap().total();
        let z_total = unbounded_rate(&z_atom(TwoLevelState::Excited, r), "e", a).unwrap().total();
        assert!((iso_total - z_total).abs() < 1e-14 * z_total.abs());
    }

    #[test]
    fn degenerate_transition_contributes_nothing() {
        let mut spec = z_atom(TwoLevelState::Excited, 1.0);
        spec.levels[1].energy = 1.0;
        let br = rate_accelerated(&spec, "e", 1.0, 0.5).unwrap();
        assert!(br.entries.iter().all(|e| e.per_e2 == 0.0));
        assert_eq!(br.entries.len(), 12);
    }

    #[test]
    fn errors() {
        let spec = z_atom(TwoLevelState::Excited, 1.0);
        assert!(rate_inertial(&spec, "e", 0.0).is_err());
        assert!(rate_accelerated(&spec, "e", 1.0, 0.0).is_err());
        assert!(rate_inertial(&spec, "q", 1.0).is_err());
        assert!(rate_inertial(&spec.with_initial_state("q"), "e", 1.0).is_err());
        assert!(unbounded_rate(&spec, "e", -1.0).is_err());
        assert!(nonthermal_crossing(1.0, 0.1, Pair::Zz, (1.0, 1.0), 4).is_err());
        assert!(nonthermal_crossing(1.0, 0.1, Pair::Xz, (0.1, 1.0), 4).is_err());
    }

    #[test]
    fn bisection_meets_tolerance() {
        let g = |x: f64| -> Result<f64> { Ok(x.cos() - 0.3) };
        let (root, res) = bisect(&g, (0.0, g(0.0).unwrap()), (2.0, g(2.0).unwrap()), 1e-12).unwrap();
        assert!(res <= 1e-12);
        assert!((root - 0.3f64.acos()).abs() < 1e-11);
    }
}
