//! Oscillatory boundary functions `f_x`, `f_z`, `f_ij` and the Planck factor.
//!
//! Every boundary function has the shape
//!
//! ```text
//! f(σ, η) = A(η) cos X / σ² + (N₀(η) + N₂(η) σ²) sin X / σ³,   X = σ s(η),
//! ```
//!
//! with `σ = |ω| z`, `η = a z` and `s(η) = 2 asinh(η)/η`. For `σ` below the
//! switchover threshold the two `1/σ²` pieces cancel to many digits, so the
//! small-`σ` branch evaluates the algebraically identical form
//!
//! ```text
//! f = H(η)/σ² − (A s²/2) sinc²(X/2) + N₀ s³ q(X) + N₂ sin X / σ,
//! ```
//!
//! where `H = A + N₀ s` is taken from its Taylor series for small `η` and
//! `q(X) = (sinc X − 1)/X²` from its Taylor series.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Component pair of the field statistical functions. Only these four (and
/// `zx = xz`) are nonzero for the plane geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    Xx,
    Yy,
    Zz,
    Xz,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::Xx, Pair::Yy, Pair::Zz, Pair::Xz];
    pub const DIAGONAL: [Pair; 3] = [Pair::Xx, Pair::Yy, Pair::Zz];

    /// Spatial indices `(i, j)`.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Pair::Xx => (0, 0),
            Pair::Yy => (1, 1),
            Pair::Zz => (2, 2),
            Pair::Xz => (0, 2),
        }
    }

    pub fn is_diagonal(self) -> bool {
        self != Pair::Xz
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pair::Xx => "xx",
            Pair::Yy => "yy",
            Pair::Zz => "zz",
            Pair::Xz => "xz",
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xx" => Ok(Pair::Xx),
            "yy" => Ok(Pair::Yy),
            "zz" => Ok(Pair::Zz),
            "xz" | "zx" => Ok(Pair::Xz),
            other => Err(Error::Parse(format!("unknown component pair `{other}`"))),
        }
    }
}

/// Dimensionless point `σ = |ω| z`, `η = a z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPoint {
    sigma: f64,
    eta: f64,
}

impl ReducedPoint {
    pub fn new(sigma: f64, eta: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        ensure_finite("eta", eta)?;
        if eta < 0.0 {
            return Err(Error::Domain(format!("eta must be non-negative, got {eta}")));
        }
        Ok(Self { sigma, eta })
    }

    /// Reduce physical `(ω, z, a)`; the sign of `ω` is irrelevant because
    /// every boundary function is even in `ω`.
    pub fn from_physical(omega: f64, z: f64, accel: f64) -> Result<Self> {
        ensure_finite("omega", omega)?;
        ensure_positive("z", z)?;
        Self::new(omega.abs() * z, accel * z)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    pub series_threshold_sigma: f64,
    pub series_threshold_eta: f64,
    /// Number of retained Taylor terms in the helper expansions.
    pub series_order: usize,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self {
            series_threshold_sigma: 1e-2,
            series_threshold_eta: 1e-2,
            series_order: 8,
        }
    }
}

// Taylor coefficients of H(η) = A(η) + N₀(η) s(η), listed from the first
// nonzero power upward in steps of η².
const H_XX: [f64; 10] = [
    16.0 / 3.0,
    -256.0 / 15.0,
    1152.0 / 35.0,
    -16384.0 / 315.0,
    51200.0 / 693.0,
    -98304.0 / 1001.0,
    802816.0 / 6435.0,
    -16777216.0 / 109395.0,
    42467328.0 / 230945.0,
    -209715200.0 / 969969.0,
];
const H_YY: [f64; 10] = [
    16.0 / 3.0,
    -32.0 / 5.0,
    256.0 / 35.0,
    -512.0 / 63.0,
    2048.0 / 231.0,
    -4096.0 / 429.0,
    65536.0 / 6435.0,
    -131072.0 / 12155.0,
    524288.0 / 46189.0,
    -1048576.0 / 88179.0,
];
const H_ZZ: [f64; 10] = [
    -16.0 / 3.0,
    96.0 / 5.0,
    -256.0 / 7.0,
    512.0 / 9.0,
    -6144.0 / 77.0,
    4096.0 / 39.0,
    -65536.0 / 495.0,
    393216.0 / 2431.0,
    -524288.0 / 2717.0,
    1048576.0 / 4641.0,
];
const H_XZ: [f64; 10] = [
    32.0 / 3.0,
    -128.0 / 5.0,
    1536.0 / 35.0,
    -4096.0 / 63.0,
    20480.0 / 231.0,
    -16384.0 / 143.0,
    917504.0 / 6435.0,
    -2097152.0 / 12155.0,
    9437184.0 / 46189.0,
    -20971520.0 / 88179.0,
];

// asinh(η)/η = Σ c_k η^{2k}
const ASINH_OVER: [f64; 10] = [
    1.0,
    -1.0 / 6.0,
    3.0 / 40.0,
    -5.0 / 112.0,
    35.0 / 1152.0,
    -63.0 / 2816.0,
    231.0 / 13312.0,
    -143.0 / 10240.0,
    6435.0 / 557056.0,
    -12155.0 / 1245184.0,
];

/// Closed-form coefficients at fixed `η`.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    a: f64,
    n0: f64,
    n2: f64,
}

fn coefficients(pair: Pair, eta: f64) -> Coefficients {
    let e2 = eta * eta;
    let d = 1.0 + e2;
    let d32 = d * d.sqrt();
    let d52 = d * d32;
    match pair {
        Pair::Xx => Coefficients {
            a: 2.0 * (1.0 + 4.0 * e2) / (d * d),
            n0: -(1.0 + 2.0 * e2 + 4.0 * e2 * e2) / d52,
            n2: 4.0 / d32,
        },
        Pair::Yy => Coefficients {
            a: 2.0 * (1.0 + 2.0 * e2) / d,
            n0: -1.0 / d32,
            n2: 4.0 / d.sqrt(),
        },
        Pair::Zz => Coefficients {
            a: 2.0 * (2.0 + e2 + 2.0 * e2 * e2) / (d * d),
            n0: -(2.0 + 5.0 * e2) / d52,
            n2: 4.0 * e2 / d32,
        },
        Pair::Xz => Coefficients {
            a: 2.0 * eta * (2.0 * e2 - 1.0) / (d * d),
            n0: eta * (1.0 + 4.0 * e2) / d52,
            n2: 4.0 * eta / d32,
        },
    }
}

fn horner_even(coeffs: &[f64], x2: f64, terms: usize) -> f64 {
    coeffs[..terms.min(coeffs.len())]
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * x2 + c)
}

impl EvalPolicy {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_unit(self.series_threshold_sigma) || !in_unit(self.series_threshold_eta) {
            return Err(Error::Domain("series thresholds must lie in (0, 1)".into()));
        }
        if self.series_order < 4 {
            return Err(Error::Domain("series_order must be at least 4".into()));
        }
        Ok(())
    }

    fn terms(&self) -> usize {
        self.series_order.min(ASINH_OVER.len())
    }

    /// `s(η) = 2 asinh(η)/η`, so that the phase is `X = σ s(η)`.
    fn phase_rate(&self, eta: f64) -> f64 {
        if eta == 0.0 {
            2.0
        } else if eta < self.series_threshold_eta {
            2.0 * horner_even(&ASINH_OVER, eta * eta, self.terms())
        } else {
            2.0 * eta.asinh() / eta
        }
    }

    /// `H(η) = A + N₀ s`, the residual `1/σ²` coefficient.
    fn residual(&self, pair: Pair, eta: f64, c: &Coefficients, s: f64) -> f64 {
        if eta < self.series_threshold_eta {
            let e2 = eta * eta;
            let (table, lead) = match pair {
                Pair::Xx => (&H_XX, e2),
                Pair::Yy => (&H_YY, e2),
                Pair::Zz => (&H_ZZ, e2),
                Pair::Xz => (&H_XZ, e2 * eta),
            };
            lead * horner_even(table, e2, self.terms())
        } else {
            c.a + c.n0 * s
        }
    }

    fn evaluate(&self, pair: Pair, sigma: f64, eta: f64) -> f64 {
        let c = coefficients(pair, eta);
        let s = self.phase_rate(eta);
        let x = sigma * s;
        if sigma >= self.series_threshold_sigma {
            let s2 = sigma * sigma;
            c.a * x.cos() / s2 + (c.n0 + c.n2 * s2) * x.sin() / (s2 * sigma)
        } else {
            let h = self.residual(pair, eta, &c, s);
            let half = 0.5 * x;
            let sinc_half = half.sin() / half;
            let q = horner_even(&SINC_MINUS_ONE, x * x, self.terms());
            h / (sigma * sigma) - 0.5 * c.a * s * s * sinc_half * sinc_half
                + c.n0 * s * s * s * q
                + c.n2 * x.sin() / sigma
        }
    }

    /// Inertial boundary function for tangential polarization; also `f_y`.
    pub fn f_x(&self, sigma: f64) -> Result<f64> {
        ensure_positive("sigma", sigma)?;
        Ok(self.evaluate(Pair::Xx, sigma, 0.0))
    }

    pub fn f_y(&self, sigma: f64) -> Result<f64> {
        self.f_x(sigma)
    }

    /// Inertial boundary function for normal polarization.
    pub fn f_z(&self, sigma: f64) -> Result<f64> {
        ensure_positive("sigma", sigma)?;
        Ok(self.evaluate(Pair::Zz, sigma, 0.0))
    }

    /// Accelerated boundary function `f_ij(σ, η)`; reduces to the inertial
    /// functions at `η = 0`.
    pub fn f_accel(&self, pair: Pair, p: ReducedPoint) -> Result<f64> {
        if p.eta == 0.0 {
            return match pair {
                Pair::Xx | Pair::Yy => self.f_x(p.sigma),
                Pair::Zz => self.f_z(p.sigma),
                Pair::Xz => Ok(0.0),
            };
        }
        Ok(self.evaluate(pair, p.sigma, p.eta))
    }

    /// Closed form only, no switchover. Used to test branch continuity.
    pub fn closed_form(&self, pair: Pair, p: ReducedPoint) -> f64 {
        let c = coefficients(pair, p.eta);
        let x = p.sigma * self.phase_rate(p.eta);
        let s2 = p.sigma * p.sigma;
        c.a * x.cos() / s2 + (c.n0 + c.n2 * s2) * x.sin() / (s2 * p.sigma)
    }
}

// (sinc X − 1)/X² = Σ (−1)^k X^{2k−2}/(2k+1)!, k ≥ 1
const SINC_MINUS_ONE: [f64; 10] = [
    -1.0 / 6.0,
    1.0 / 120.0,
    -1.0 / 5040.0,
    1.0 / 362880.0,
    -1.0 / 39916800.0,
    1.0 / 6227020800.0,
    -1.0 / 1307674368000.0,
    1.0 / 355687428096000.0,
    -1.0 / 121645100408832000.0,
    1.0 / 51090942171709440000.0,
];

pub fn f_x(sigma: f64) -> Result<f64> {
    EvalPolicy::default().f_x(sigma)
}

pub fn f_y(sigma: f64) -> Result<f64> {
    EvalPolicy::default().f_y(sigma)
}

pub fn f_z(sigma: f64) -> Result<f64> {
    EvalPolicy::default().f_z(sigma)
}

pub fn f_accel(pair: Pair, p: ReducedPoint) -> Result<f64> {
    EvalPolicy::default().f_accel(pair, p)
}

/// Triangle-inequality bound `|A|/σ² + |N₀ + N₂σ²|/σ³` on `|f(σ, η)|`.
pub fn envelope_bound(pair: Pair, p: ReducedPoint) -> f64 {
    let c = coefficients(pair, p.eta);
    let s2 = p.sigma * p.sigma;
    c.a.abs() / s2 + (c.n0 + c.n2 * s2).abs() / (s2 * p.sigma)
}

/// Exponent above which `e^x − 1` is treated as infinite.
const PLANCK_OVERFLOW: f64 = 700.0;

/// Planck factor `1/(e^{2πω/a} − 1)`; exactly zero for `a = 0` or when the
/// exponent is beyond the overflow threshold.
pub fn planck_n(omega: f64, accel: f64) -> Result<f64> {
    ensure_positive("omega", omega)?;
    ensure_finite("accel", accel)?;
    if accel < 0.0 {
        return Err(Error::Domain(format!("acceleration must be non-negative, got {accel}")));
    }
    if accel == 0.0 {
        return Ok(0.0);
    }
    let x = 2.0 * PI * omega / accel;
    if x > PLANCK_OVERFLOW {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

/// Leading small-acceleration coefficient of `f_ij` at `σ = ωz`: the `a²`
/// coefficient for the diagonal pairs, the `a¹` coefficient for `xz`. These
/// are the Taylor coefficients of the closed forms evaluated by
/// [`EvalPolicy::f_accel`].
pub fn small_a_correction(pair: Pair, sigma: f64, omega: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    ensure_positive("omega", omega)?;
    let (c, s) = ((2.0 * sigma).cos(), (2.0 * sigma).sin());
    let w2 = omega * omega;
    let s2 = sigma * sigma;
    Ok(match pair {
        Pair::Xx => (13.0 - 4.0 * s2) / (3.0 * w2) * c + (3.0 - 32.0 * s2) / (6.0 * sigma * w2) * s,
        Pair::Yy => (7.0 - 4.0 * s2) / (3.0 * w2) * c + (9.0 - 8.0 * s2) / (6.0 * sigma * w2) * s,
        Pair::Zz => 16.0 * sigma / (3.0 * w2) * s - 16.0 / (3.0 * w2) * c,
        Pair::Xz => (4.0 * s2 + 1.0) / (s2 * omega) * s - 2.0 / (sigma * omega) * c,
    })
}

/// The small-acceleration coefficients in their commonly quoted form. The
/// `yy` and `xz` entries disagree
/// with the closed forms (see [`small_a_correction`]); they are kept for
/// the verification report.
pub fn printed_small_a_coefficient(pair: Pair, sigma: f64, omega: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    ensure_positive("omega", omega)?;
    let (c, s) = ((2.0 * sigma).cos(), (2.0 * sigma).sin());
    let w2 = omega * omega;
    let s2 = sigma * sigma;
    Ok(match pair {
        Pair::Yy => (7.0 - 4.0 * s2) / (3.0 * w2) * c + (9.0 - 32.0 * s2) / (6.0 * sigma * w2) * s,
        Pair::Xz => (4.0 * s2 - 1.0) / (s2 * omega) * s - 2.0 / (sigma * omega) * c,
        _ => small_a_correction(pair, sigma, omega)?,
    })
}

/// Linear small-`z` coefficient of `f_xz`: `32a/3 + 32a³/(3ω²)`.
pub fn xz_small_z_slope(omega: f64, accel: f64) -> f64 {
    32.0 * accel / 3.0 * (1.0 + accel * accel / (omega * omega))
}

/// The printed variant `32a/3 + 32a³/ω³` (dimensionally inconsistent).
pub fn printed_xz_small_z_slope(omega: f64, accel: f64) -> f64 {
    32.0 * accel / 3.0 + 32.0 * accel.powi(3) / omega.powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn f_x_at_quarter_period() {
        let v = f_x(PI / 2.0).unwrap();
        assert!(rel(v, -8.0 / (PI * PI)) < 1e-14, "{v}");
    }

    #[test]
    fn f_z_at_quarter_period() {
        let v = f_z(PI / 2.0).unwrap();
        assert!(rel(v, -16.0 / (PI * PI)) < 1e-14, "{v}");
    }

    #[test]
    fn plane_limits() {
        assert!(rel(f_x(1e-9).unwrap(), 16.0 / 3.0) < 1e-14);
        assert!(rel(f_z(1e-9).unwrap(), -16.0 / 3.0) < 1e-14);
        let doubling = 1.0 - 3.0 / 16.0 * f_z(1e-9).unwrap();
        assert!((doubling - 2.0).abs() < 1e-14);
    }

    #[test]
    fn far_field_envelope() {
        let s = 1e6;
        let v = f_x(s).unwrap();
        let bound = 2.0 / (s * s) + (4.0 * s * s - 1.0).abs() / (s * s * s);
        assert!(v.abs() <= bound && bound <= 5e-6);
        assert!(f_z(1e8).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eta_zero_delegates() {
        let p = ReducedPoint::new(0.7, 0.0).unwrap();
        assert_eq!(f_accel(Pair::Xx, p).unwrap(), f_x(0.7).unwrap());
        assert_eq!(f_accel(Pair::Yy, p).unwrap(), f_x(0.7).unwrap());
        assert_eq!(f_accel(Pair::Zz, p).unwrap(), f_z(0.7).unwrap());
        assert_eq!(f_accel(Pair::Xz, p).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(f_x(f64::NAN).is_err());
        assert!(f_x(0.0).is_err());
        assert!(f_z(f64::INFINITY).is_err());
        assert!(ReducedPoint::new(1.0, -0.1).is_err());
        assert!(planck_n(0.0, 1.0).is_err());
        assert!(planck_n(1.0, -1.0).is_err());
        assert!(EvalPolicy { series_order: 3, ..Default::default() }.validate().is_err());
        assert!(EvalPolicy { series_threshold_sigma: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn planck_values() {
        let w = 1.3;
        assert!(rel(planck_n(w, 2.0 * PI * w / 2f64.ln()).unwrap(), 1.0) < 1e-14);
        assert_eq!(planck_n(w, 0.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!(rel(planck_n(w, 2.0 * PI * w).unwrap(), 1.0 / (e - 1.0)) < 1e-14);
        assert!((planck_n(w, 2.0 * PI * w).unwrap() - 0.5819767).abs() < 1e-7);
        assert_eq!(planck_n(1.0, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn small_a_reference_points() {
        let w = 1.7;
        let sigma = PI / 2.0;
        let xx = small_a_correction(Pair::Xx, sigma, w).unwrap();
        assert!(rel(xx, -(13.0 - PI * PI) / (3.0 * w * w)) < 1e-13);
        let zz = small_a_correction(Pair::Zz, sigma, w).unwrap();
        assert!(rel(zz, 16.0 / (3.0 * w * w)) < 1e-13);
    }

    #[test]
    fn pair_parsing() {
        assert_eq!("ZX".parse::<Pair>().unwrap(), Pair::Xz);
        assert!("xy".parse::<Pair>().is_err());
    }
}
