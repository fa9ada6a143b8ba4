//! Numerical Taylor coefficients by polynomial interpolation on a shrinking
//! ladder of step sizes, followed by Richardson extrapolation in the step.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Which side of `t0` the sample nodes lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Nodes `t0 + j h`, `j = −m..=m`.
    Central,
    /// Nodes `t0 + j h`, `j = 1..=order+1`; `t0` itself is never evaluated.
    Forward,
    /// Mirror image of `Forward`.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Largest step.
    pub h0: f64,
    /// Number of halvings, the ladder is `h0, h0/2, …`.
    pub levels: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { h0: 0.1, levels: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorCoefficient {
    pub order: usize,
    pub value: f64,
    pub error: f64,
}

/// Relative size (against the largest scaled coefficient) under which an
/// error bar is treated as consistent with a zero coefficient.
const ZERO_FLOOR: f64 = 1e-4;

fn nodes(order: usize, direction: Direction) -> Vec<i64> {
    match direction {
        Direction::Central => {
            let m = order.div_ceil(2).max(1) as i64;
            (-m..=m).collect()
        }
        Direction::Forward => (1..=order as i64 + 1).collect(),
        Direction::Backward => (1..=order as i64 + 1).map(|j| -j).collect(),
    }
}

/// Solves `V c = y` with `V_jk = x_j^k`.
fn vandermonde_solve(xs: &[i64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    let v = DMatrix::from_fn(n, n, |j, k| (xs[j] as f64).powi(k as i32));
    v.lu()
        .solve(&DVector::from_column_slice(ys))
        .map(|c| c.iter().copied().collect())
        .ok_or_else(|| Error::IllConditioned("singular interpolation matrix".into()))
}

/// Estimates the Taylor coefficients `c_0..=c_order` of `f` about `t0`.
pub fn series_probe(
    f: impl Fn(f64) -> Result<f64>,
    t0: f64,
    order: usize,
    direction: Direction,
    cfg: &ProbeConfig,
) -> Result<Vec<TaylorCoefficient>> {
    ensure_finite("t0", t0)?;
    ensure_positive("h0", cfg.h0)?;
    if cfg.levels < 2 {
        return Err(Error::Domain("probe ladder needs at least two levels".into()));
    }
    let xs = nodes(order, direction);
    let degree = xs.len() - 1;

    // ladder[m][k] = interpolated c_k at step h0 / 2^m
    let mut ladder = Vec::with_capacity(cfg.levels);
    for m in 0..cfg.levels {
        let h = cfg.h0 / f64::powi(2.0, m as i32);
        let ys = xs.iter().map(|&j| f(t0 + j as f64 * h)).collect::<Result<Vec<_>>>()?;
        if let Some(bad) = ys.iter().find(|y| !y.is_finite()) {
            return Err(Error::Domain(format!("probe sample is not finite ({bad})")));
        }
        let scaled = vandermonde_solve(&xs, &ys)?;
        ladder.push(scaled.iter().enumerate().map(|(k, c)| c / h.powi(k as i32)).collect::<Vec<_>>());
    }

    let mut out = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let column: Vec<f64> = ladder.iter().map(|row| row[k]).collect();
        let (value, error) = richardson(&column, degree + 1 - k.min(degree));
        out.push(TaylorCoefficient { order: k, value, error });
    }

    let scale = out.iter().map(|c| c.value.abs() * cfg.h0.powi(c.order as i32)).fold(0.0, f64::max);
    for c in &out {
        let floor = ZERO_FLOOR * scale / cfg.h0.powi(c.order as i32);
        if !c.error.is_finite() || (c.error > c.value.abs() && c.error > floor) {
            return Err(Error::IllConditioned(format!(
                "coefficient {}: estimate {:.6e} with error {:.3e}",
                c.order, c.value, c.error
            )));
        }
    }
    Ok(out)
}

/// Richardson table for a sequence at steps `h0/2^m` whose error expands in
/// powers `h^p, h^{p+1}, …`. Returns the entry whose distance to both of its
/// parents is smallest, and that distance as the error bar.
fn richardson(column: &[f64], first_power: usize) -> (f64, f64) {
    let n = column.len();
    let mut best = (*column.last().unwrap_or(&0.0), f64::INFINITY);
    let mut prev = column.to_vec();
    for j in 1..n {
        let factor = f64::powi(2.0, (first_power + j - 1) as i32) - 1.0;
        let next: Vec<f64> = (1..prev.len()).map(|m| prev[m] + (prev[m] - prev[m - 1]) / factor).collect();
        for (m, &v) in next.iter().enumerate() {
            let err = (v - prev[m]).abs().max((v - prev[m + 1]).abs());
            if err < best.1 {
                best = (v, err);
            }
        }
        prev = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_recovered_exactly() {
        let c = series_probe(|t| Ok(t * t * t), 0.0, 4, Direction::Central, &ProbeConfig::default()).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0, 0.0];
        for (got, want) in c.iter().zip(expect) {
            assert!((got.value - want).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn exponential_coefficients() {
        let cfg = ProbeConfig { h0: 0.2, levels: 5 };
        let c = series_probe(|t| Ok(t.exp()), 0.5, 5, Direction::Forward, &cfg).unwrap();
        let e = 0.5f64.exp();
        for (k, fact) in [1.0, 1.0, 2.0, 6.0].iter().enumerate() {
            let dev = (c[k].value - e / fact).abs();
            assert!(dev < 1e-6, "{k}: {:?}", c[k]);
            assert!(dev <= c[k].error.max(1e-12) && c[k].error < 1e-5, "{k}: {:?}", c[k]);
        }
        let b = series_probe(|t| Ok(t.exp()), 0.5, 3, Direction::Backward, &cfg).unwrap();
        assert!((b[1].value - e).abs() < 1e-8);
    }

    #[test]
    fn forward_probe_never_touches_origin() {
        let f = |t: f64| if t == 0.0 { Err(Error::Domain("origin".into())) } else { Ok(t.sin() / t) };
        let c = series_probe(f, 0.0, 2, Direction::Forward, &ProbeConfig::default()).unwrap();
        assert!((c[0].value - 1.0).abs() < 1e-9);
        assert!((c[2].value + 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn noise_is_flagged() {
        let mut state = 1u64;
        let noisy = move |t: f64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            Ok(t + 1e-3 * ((state >> 11) as f64 / (1u64 << 53) as f64))
        };
        let cell = std::cell::RefCell::new(noisy);
        let r = series_probe(|t| (cell.borrow_mut())(t), 0.0, 3, Direction::Central, &ProbeConfig::default());
        assert!(matches!(r, Err(Error::IllConditioned(_))));
    }
}
