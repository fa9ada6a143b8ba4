//! Independent numerical checks of the closed forms: ε-regularized Fourier
//! integrals of the field kernels, extrapolated to ε → 0, and numerical
//! Taylor probes.

mod grid;
mod probe;
mod quadrature;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::atom::{transitions_from, AtomSpec};
use crate::correlations::{kernel_parts, Kinematics, Source, Trajectory};
use crate::error::{ensure_finite, Error, Result};
use crate::rates::{pair_weight, Mechanism, Part, RateModel};
use crate::special::Pair;

pub use grid::{run_verification, small_a_probe, small_z_xz_probe, GridPreset, Verdict, VerdictCandidate, VerificationReport, VerifyConfig};
pub use probe::{series_probe, Direction, ProbeConfig, TaylorCoefficient};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Regulator values in units of `1/|ω|`, strictly decreasing.
    pub eps_ladder: Vec<f64>,
    /// Fixed half range of the `u` integral. `None` picks it from the tail
    /// of the kernel.
    pub half_range: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            eps_ladder: vec![0.02, 0.01, 0.005],
            half_range: None,
            abs_tol: 1e-10,
            rel_tol: 1e-6,
            max_subdivisions: 200_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_ladder.len() < 3 {
            return Err(Error::Domain("epsilon ladder needs at least three values".into()));
        }
        if self.eps_ladder.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Domain("epsilon ladder values must be positive".into()));
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain("epsilon ladder must be strictly decreasing".into()));
        }
        if let Some(l) = self.half_range {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Domain(format!("half range must be positive, got {l}")));
            }
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Boundary Hadamard function.
    Hadamard,
    /// Boundary Pauli–Jordan function.
    PauliJordan,
    /// Hadamard part of the free-space Wightman function.
    FreeHadamard,
    /// Pauli–Jordan part of the free-space Wightman function.
    FreePauliJordan,
}

impl KernelKind {
    fn source(self) -> Source {
        match self {
            KernelKind::Hadamard | KernelKind::PauliJordan => Source::Boundary,
            KernelKind::FreeHadamard | KernelKind::FreePauliJordan => Source::Free,
        }
    }

    fn is_hadamard(self) -> bool {
        matches!(self, KernelKind::Hadamard | KernelKind::FreeHadamard)
    }
}

/// `∫ K(u; ε) e^{iωu} du` extrapolated to `ε → 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierValue {
    pub value: f64,
    /// Quadrature error plus the spread between quadratic and linear
    /// extrapolation.
    pub error: f64,
    /// `(ε, real part)` for each rung of the ladder.
    pub curve: Vec<(f64, f64)>,
    /// Largest imaginary part seen on the ladder.
    pub imag_residual: f64,
}

/// Tail criterion for the auto-selected half range.
const TAIL_FRACTION: f64 = 1e-8;
/// Half width of the finely resolved window around each kernel peak, in
/// units of ε.
const PEAK_WINDOW: f64 = 50.0;
const MAX_HALF_RANGE_OMEGA: f64 = 1e8;

struct Layout {
    fine: Vec<(f64, f64)>,
    fine_width: f64,
    coarse_width: f64,
}

impl Layout {
    fn new(peaks: &[f64], eps: f64, omega: f64, half_range: f64) -> Self {
        let oscillation = PI / (8.0 * omega.abs());
        let mut fine: Vec<(f64, f64)> = peaks
            .iter()
            .map(|p| ((p - PEAK_WINDOW * eps).max(-half_range), (p + PEAK_WINDOW * eps).min(half_range)))
            .filter(|(lo, hi)| hi > lo)
            .collect();
        fine.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for w in fine {
            match merged.last_mut() {
                Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
                _ => merged.push(w),
            }
        }
        Self { fine: merged, fine_width: (eps / 10.0).min(oscillation), coarse_width: oscillation }
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = vec![lo];
        let push_span = |out: &mut Vec<f64>, a: f64, b: f64, width: f64| {
            if b <= a {
                return;
            }
            let n = ((b - a) / width).ceil().max(1.0) as usize;
            for k in 1..n {
                out.push(a + (b - a) * k as f64 / n as f64);
            }
            out.push(b);
        };
        let mut cursor = lo;
        for &(a, b) in &self.fine {
            let (a, b) = (a.max(lo), b.min(hi));
            if b <= a {
                continue;
            }
            push_span(&mut out, cursor, a, self.coarse_width);
            push_span(&mut out, a.max(cursor), b, self.fine_width);
            cursor = b;
        }
        push_span(&mut out, cursor, hi, self.coarse_width);
        out.dedup();
        out
    }
}

fn peaks(traj: &Trajectory, kind: KernelKind) -> Vec<f64> {
    match kind.source() {
        Source::Free => vec![0.0],
        Source::Boundary => {
            let u0 = traj.image_peak();
            vec![-u0, u0]
        }
    }
}

fn initial_half_range(traj: &Trajectory, omega: f64, eps_max: f64) -> f64 {
    let margin = traj.image_peak() + 2.0 * PEAK_WINDOW * eps_max;
    let base = match traj.kind() {
        Kinematics::Inertial { .. } => (8.0 * traj.z()).max(40.0 / omega.abs()),
        Kinematics::UniformAcceleration { accel } => 2.0 / accel * (5.0 + (accel * traj.z()).asinh()),
    };
    base.max(margin)
}

fn integrand(traj: Trajectory, pair: Pair, omega: f64, kind: KernelKind, eps: f64) -> impl Fn(f64) -> Complex64 {
    move |u| {
        let (c, pj) = kernel_parts(kind.source(), &traj, pair, u, eps);
        let (s, co) = (omega * u).sin_cos();
        if kind.is_hadamard() {
            Complex64::new(c * co, c * s)
        } else {
            // (i pj) e^{iωu}
            Complex64::new(-pj * s, pj * co)
        }
    }
}

fn integrate_at(
    traj: &Trajectory,
    pair: Pair,
    omega: f64,
    kind: KernelKind,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<quadrature::Integral> {
    let f = integrand(*traj, pair, omega, kind, eps);
    let peaks = peaks(traj, kind);
    let eps_max = cfg.eps_ladder[0] / omega.abs();
    let mut half = cfg.half_range.unwrap_or_else(|| initial_half_range(traj, omega, eps_max));
    let layout = Layout::new(&peaks, eps, omega, half);
    let run = |lo: f64, hi: f64| {
        quadrature::integrate(&f, &layout.breakpoints(lo, hi), cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions)
    };
    let mut total = run(-half, half)?;

    let algebraic_tail = cfg.half_range.is_none() && matches!(traj.kind(), Kinematics::Inertial { .. });
    if algebraic_tail {
        // |K| ~ u⁻⁴, so ∫_L^∞ |K| ≤ |K(L)| L / 3 on each side
        loop {
            let k = kernel_parts(kind.source(), traj, pair, half, eps);
            let tail = 2.0 * k.0.abs().max(k.1.abs()) * half / 3.0;
            if tail <= TAIL_FRACTION * total.value.norm() {
                break;
            }
            if half * omega.abs() > MAX_HALF_RANGE_OMEGA {
                return Err(Error::Quadrature(format!("kernel tail still {tail:.3e} at u = {half:.3e}")));
            }
            total = total + run(-2.0 * half, -half)? + run(half, 2.0 * half)?;
            half *= 2.0;
        }
    }
    Ok(total)
}

/// Quadratic least-squares fit in ε evaluated at ε = 0, and the linear
/// extrapolation through the two smallest ε.
fn extrapolate(curve: &[(f64, f64)], scale: f64) -> Result<(f64, f64)> {
    let n = curve.len();
    let design = DMatrix::from_fn(n, 3, |r, c| (curve[r].0 * scale).powi(c as i32));
    let values = DVector::from_iterator(n, curve.iter().map(|p| p.1));
    let fit = design
        .svd(true, true)
        .solve(&values, f64::EPSILON)
        .map_err(|e| Error::Quadrature(format!("epsilon fit failed: {e}")))?;
    let (e1, v1) = curve[n - 2];
    let (e2, v2) = curve[n - 1];
    let linear = v2 - (v1 - v2) * e2 / (e1 - e2);
    Ok((fit[0], linear))
}

/// Fourier transform `∫ K_pair(u; ε) e^{iωu} du` of a kernel, computed on
/// each rung of the ε ladder and extrapolated to ε → 0.
pub fn fourier_kernel(
    traj: &Trajectory,
    pair: Pair,
    omega: f64,
    kind: KernelKind,
    cfg: &QuadratureConfig,
) -> Result<FourierValue> {
    cfg.validate()?;
    ensure_finite("omega", omega)?;
    if omega == 0.0 {
        return Err(Error::Domain("Fourier frequency must be nonzero".into()));
    }
    let w = omega.abs();
    let mut curve = Vec::with_capacity(cfg.eps_ladder.len());
    let mut quad_error: f64 = 0.0;
    let mut imag_residual: f64 = 0.0;
    for &e in &cfg.eps_ladder {
        let eps = e / w;
        let r = integrate_at(traj, pair, omega, kind, eps, cfg)?;
        let floor = quadrature::ROUNDOFF_FACTOR * r.l1;
        if r.value.im.abs() > cfg.abs_tol.max(floor) {
            return Err(Error::Quadrature(format!(
                "imaginary part {:.3e} of a real transform exceeds tolerance ({pair}, ε = {eps:.3e})",
                r.value.im
            )));
        }
        imag_residual = imag_residual.max(r.value.im.abs());
        quad_error = quad_error.max(r.error);
        curve.push((eps, r.value.re));
    }
    let (value, linear) = extrapolate(&curve, w)?;
    Ok(FourierValue { value, error: quad_error + (value - linear).abs(), curve, imag_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub quantity_id: String,
    pub closed_form: f64,
    pub oracle: f64,
    /// `(ε, value)` for quadrature rows, `(h, estimate)` for probe rows.
    pub extrapolation_curve: Vec<(f64, f64)>,
    pub abs_error_estimate: f64,
    pub status: Status,
}

impl OracleReport {
    pub fn new(
        quantity_id: String,
        closed_form: f64,
        oracle: f64,
        extrapolation_curve: Vec<(f64, f64)>,
        abs_error_estimate: f64,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Self {
        let pass = (closed_form - oracle).abs() <= abs_tol.max(rel_tol * closed_form.abs());
        Self {
            quantity_id,
            closed_form,
            oracle,
            extrapolation_curve,
            abs_error_estimate,
            status: if pass { Status::Pass } else { Status::Fail },
        }
    }

    pub fn abs_err(&self) -> f64 {
        (self.closed_form - self.oracle).abs()
    }

    pub fn rel_err(&self) -> f64 {
        if self.closed_form == 0.0 {
            if self.oracle == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_err() / self.closed_form.abs()
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Whether `|value(ε_k) − oracle|` shrinks along the ladder.
    pub fn ladder_monotone(&self) -> bool {
        let d: Vec<f64> = self.extrapolation_curve.iter().map(|&(_, v)| (v - self.oracle).abs()).collect();
        d.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Oracle versions of every entry of the rate breakdown for state `b`, one
/// report per (transition, pair, mechanism, part). Values are per unit `e²`.
/// The inertial case also emits the (identically zero) xz rows.
pub fn verify_rate(
    spec: &AtomSpec,
    b: &str,
    traj: &Trajectory,
    cfg: &QuadratureConfig,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Vec<OracleReport>> {
    cfg.validate()?;
    let model = RateModel::default();
    let closed = model.rate_accelerated_or_rest(spec, b, traj.z(), traj.accel())?;
    let mut reports = Vec::new();
    for t in transitions_from(spec, b)? {
        for pair in Pair::ALL {
            let weight = pair_weight(&t, pair);
            let rows = [
                (Mechanism::VacuumFluctuations, Part::Boundary, &[KernelKind::Hadamard][..]),
                (Mechanism::RadiationReaction, Part::Boundary, &[KernelKind::PauliJordan][..]),
                (Mechanism::Total, Part::Unbounded, &[KernelKind::FreeHadamard, KernelKind::FreePauliJordan][..]),
            ];
            for (mechanism, part, kinds) in rows {
                let closed_value = closed
                    .find(&t.partner, pair, mechanism, part)
                    .map(|e| e.per_e2)
                    .ok_or_else(|| Error::Domain(format!("no closed-form entry for {pair}")))?;
                let id = format!("{b}->{}:{pair}:{part}:{mechanism}", t.partner);
                let skip = t.omega == 0.0 || weight == 0.0 || (part == Part::Unbounded && !pair.is_diagonal());
                if skip {
                    reports.push(OracleReport::new(id, closed_value, 0.0, Vec::new(), 0.0, abs_tol, rel_tol));
                    continue;
                }
                let prefactor = -t.omega * weight;
                let mut value = 0.0;
                let mut error = 0.0;
                let mut curve: Vec<(f64, f64)> = Vec::new();
                for &kind in kinds {
                    let fv = fourier_kernel(traj, pair, t.omega, kind, cfg)?;
                    value += prefactor * fv.value;
                    error += prefactor.abs() * fv.error;
                    if curve.is_empty() {
                        curve = fv.curve.iter().map(|&(e, v)| (e, prefactor * v)).collect();
                    } else {
                        for (c, &(_, v)) in curve.iter_mut().zip(&fv.curve) {
                            c.1 += prefactor * v;
                        }
                    }
                }
                reports.push(OracleReport::new(id, closed_value, value, curve, error, abs_tol, rel_tol));
            }
        }
    }
    Ok(reports)
}

/// `−(1/3π) ω⁴ P_ii × factor` is the unbounded de-excitation rate; this
/// returns the factor the quadrature reproduces, to be compared with
/// `(1 + a²/ω²)(1 + n)`.
pub fn unbounded_factor(traj: &Trajectory, omega: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let c = fourier_kernel(traj, Pair::Zz, omega, KernelKind::FreeHadamard, cfg)?;
    let x = fourier_kernel(traj, Pair::Zz, omega, KernelKind::FreePauliJordan, cfg)?;
    let rate = -omega * (c.value + x.value);
    let unit = -omega.powi(4) / (3.0 * PI);
    Ok((rate / unit, (c.error + x.error) * omega.abs() / unit.abs()))
}
