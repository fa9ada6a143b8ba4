//! Verification grid: quadrature reports over a fixed set of reduced-variable
//! points, series probes of the small-acceleration and small-distance
//! expansions, and verdicts on the competing published coefficients.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::probe::{series_probe, Direction, ProbeConfig, TaylorCoefficient};
use super::{verify_rate, OracleReport, QuadratureConfig};
use crate::atom::{AtomSpec, TwoLevelState};
use crate::correlations::Trajectory;
use crate::error::{Error, Result};
use crate::special::{
    f_accel, printed_small_a_coefficient, printed_xz_small_z_slope, small_a_correction, xz_small_z_slope, Pair,
    ReducedPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPreset {
    /// σ ∈ {0.3, 1, 3} × η/σ ∈ {0, 0.2, 1}, both channels, plus probes.
    Default,
    /// One point (σ = 1, η = 0.2) and one probe of each kind.
    Smoke,
}

impl FromStr for GridPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(GridPreset::Default),
            "smoke" => Ok(GridPreset::Smoke),
            other => Err(Error::Parse(format!("unknown grid preset `{other}` (expected default|smoke)"))),
        }
    }
}

impl GridPreset {
    fn points(self) -> Vec<(f64, f64)> {
        match self {
            GridPreset::Default => {
                let mut v = Vec::new();
                for sigma in [0.3, 1.0, 3.0] {
                    for ratio in [0.0, 0.2, 1.0] {
                        v.push((sigma, ratio));
                    }
                }
                v
            }
            GridPreset::Smoke => vec![(1.0, 0.2)],
        }
    }

    fn probe_sigmas(self) -> &'static [f64] {
        match self {
            GridPreset::Default => &[0.5, 1.0, 2.0],
            GridPreset::Smoke => &[1.0],
        }
    }

    fn probe_accels(self) -> &'static [f64] {
        match self {
            GridPreset::Default => &[0.5, 1.0],
            GridPreset::Smoke => &[1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub quadrature: QuadratureConfig,
    /// Report tolerances; a row passes iff
    /// `|closed − oracle| ≤ max(abs_tol, rel_tol·|closed|)`.
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { quadrature: QuadratureConfig::default(), abs_tol: 1e-9, rel_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictCandidate {
    pub label: String,
    pub value: f64,
    pub consistent: bool,
}

/// Outcome of a probe that arbitrates between competing expressions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub question: String,
    pub probe: f64,
    pub probe_error: f64,
    pub candidates: Vec<VerdictCandidate>,
}

impl Verdict {
    fn new(question: String, probe: TaylorCoefficient, candidates: Vec<(String, f64)>) -> Self {
        let slack = (10.0 * probe.error).max(1e-6 * probe.value.abs());
        Self {
            question,
            probe: probe.value,
            probe_error: probe.error,
            candidates: candidates
                .into_iter()
                .map(|(label, value)| VerdictCandidate { label, consistent: (value - probe.value).abs() <= slack, value })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub reports: Vec<OracleReport>,
    pub verdicts: Vec<Verdict>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(OracleReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OracleReport> {
        self.reports.iter().filter(|r| !r.passed())
    }

    /// Whitespace-separated table with columns
    /// `quantity_id closed_form oracle abs_err rel_err status`, followed by
    /// the verdicts.
    pub fn to_table(&self) -> String {
        let width = self.reports.iter().map(|r| r.quantity_id.len()).max().unwrap_or(11).max(11);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>24}  {:>24}  {:>10}  {:>10}  status",
            "quantity_id", "closed_form", "oracle", "abs_err", "rel_err"
        );
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{:<width$}  {:>24.16e}  {:>24.16e}  {:>10.3e}  {:>10.3e}  {}",
                r.quantity_id,
                r.closed_form,
                r.oracle,
                r.abs_err(),
                r.rel_err(),
                r.status.as_str()
            );
        }
        for v in &self.verdicts {
            let _ = writeln!(out, "verdict: {} -> probe {:.12e} (+/- {:.1e})", v.question, v.probe, v.probe_error);
            for c in &v.candidates {
                let tag = if c.consistent { "consistent" } else { "rejected" };
                let _ = writeln!(out, "  {:<40} {:>22.12e}  {tag}", c.label, c.value);
            }
        }
        out
    }
}

/// Leading small-acceleration Taylor coefficient of `a ↦ f_ij(ω, z, a)` at
/// `a = 0` (order 2 for diagonal pairs, 1 for xz), with `z = σ/ω`.
pub fn small_a_probe(pair: Pair, sigma: f64, omega: f64) -> Result<TaylorCoefficient> {
    let z = sigma / omega;
    let f = |a: f64| {
        let v = f_accel(pair, ReducedPoint::new(sigma, a.abs() * z)?)?;
        Ok(if pair.is_diagonal() { v } else { a.signum() * v })
    };
    let cfg = ProbeConfig { h0: 0.1 / z, levels: 5 };
    let order = if pair.is_diagonal() { 2 } else { 1 };
    Ok(series_probe(f, 0.0, 4, Direction::Central, &cfg)?[order])
}

/// Linear coefficient of `z ↦ f_xz(ω, z, a)` at the plane.
pub fn small_z_xz_probe(omega: f64, accel: f64) -> Result<TaylorCoefficient> {
    let f = |z: f64| f_accel(Pair::Xz, ReducedPoint::from_physical(omega, z, accel)?);
    let cfg = ProbeConfig { h0: 0.05 / omega.max(accel), levels: 5 };
    Ok(series_probe(f, 0.0, 3, Direction::Forward, &cfg)?[1])
}

fn grid_reports(preset: GridPreset, cfg: &VerifyConfig) -> Result<Vec<OracleReport>> {
    let omega = 1.0;
    let dipole = [1.0, 1.0, 1.0];
    let cells: Vec<(f64, f64, TwoLevelState)> = preset
        .points()
        .into_iter()
        .flat_map(|(s, r)| [(s, r, TwoLevelState::Excited), (s, r, TwoLevelState::Ground)])
        .collect();
    let chunks = cells
        .par_iter()
        .map(|&(sigma, ratio, state)| {
            let z = sigma / omega;
            let accel = ratio * omega;
            let traj = if accel == 0.0 { Trajectory::inertial(z, 0.0)? } else { Trajectory::accelerated(z, accel)? };
            let spec = AtomSpec::two_level_real(omega, dipole, state);
            let b = spec.initial_state.clone();
            let mut rows = verify_rate(&spec, &b, &traj, &cfg.quadrature, cfg.abs_tol, cfg.rel_tol)?;
            for r in &mut rows {
                r.quantity_id = format!("sigma={sigma},eta={}|{}", (sigma * ratio * 1e9).round() / 1e9, r.quantity_id);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn probe_reports(preset: GridPreset, cfg: &VerifyConfig) -> Result<(Vec<OracleReport>, Vec<Verdict>)> {
    let omega = 1.0;
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    for &sigma in preset.probe_sigmas() {
        for pair in Pair::ALL {
            let probe = small_a_probe(pair, sigma, omega)?;
            let closed = small_a_correction(pair, sigma, omega)?;
            let power = if pair.is_diagonal() { 2 } else { 1 };
            reports.push(OracleReport::new(
                format!("probe:small_a:{pair}:a^{power}:sigma={sigma}"),
                closed,
                probe.value,
                Vec::new(),
                probe.error,
                cfg.abs_tol,
                cfg.rel_tol,
            ));
            if matches!(pair, Pair::Yy | Pair::Xz) {
                verdicts.push(Verdict::new(
                    format!("small-a a^{power} coefficient of f_{pair} at sigma={sigma}"),
                    probe,
                    vec![
                        ("closed-form expansion".into(), closed),
                        ("printed expansion".into(), printed_small_a_coefficient(pair, sigma, omega)?),
                    ],
                ));
            }
        }
    }
    for &accel in preset.probe_accels() {
        let probe = small_z_xz_probe(omega, accel)?;
        let derived = xz_small_z_slope(omega, accel);
        reports.push(OracleReport::new(
            format!("probe:small_z:xz:z^1:a={accel}"),
            derived,
            probe.value,
            Vec::new(),
            probe.error,
            cfg.abs_tol,
            cfg.rel_tol,
        ));
        verdicts.push(Verdict::new(
            format!("small-z slope of f_xz at a/omega={accel}"),
            probe,
            vec![
                ("32a/3 + 32a^3/(3 omega^2)".into(), derived),
                ("32a/3 + 32a^3/omega^3 (printed)".into(), printed_xz_small_z_slope(omega, accel)),
            ],
        ));
    }
    Ok((reports, verdicts))
}

/// Runs the quadrature grid and the series probes for a preset.
pub fn run_verification(preset: GridPreset, cfg: &VerifyConfig) -> Result<VerificationReport> {
    cfg.quadrature.validate()?;
    let mut reports = grid_reports(preset, cfg)?;
    let (probes, verdicts) = probe_reports(preset, cfg)?;
    reports.extend(probes);
    Ok(VerificationReport { reports, verdicts })
}
