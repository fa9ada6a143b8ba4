//! Adaptive 21-point Gauss–Kronrod quadrature of complex integrands over a
//! caller-supplied panel layout.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208756982252,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// 10-point Gauss weights on the odd-indexed Kronrod nodes
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    l1: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut l1 = fc.norm() * WGK[10];
    for j in 0..10 {
        let x = h * XGK[j];
        let (lo, hi) = (f(c - x), f(c + x));
        kronrod += (lo + hi) * WGK[j];
        l1 += (lo.norm() + hi.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (lo + hi) * WG[j / 2];
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).norm(),
        l1: l1 * h.abs(),
    }
}

/// Compensated (Neumaier) sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Integral {
    pub value: Complex64,
    pub error: f64,
    /// `∫|f|`, the scale for the roundoff floor.
    pub l1: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral { value: self.value + o.value, error: self.error + o.error, l1: self.l1 + o.l1 }
    }
}

/// Roundoff floor of an integral, relative to `∫|f|`.
pub(crate) const ROUNDOFF_FACTOR: f64 = 64.0 * f64::EPSILON;

/// Integrates over consecutive panels `[p_k, p_{k+1}]`, bisecting the panel
/// with the largest error estimate until the summed estimate meets
/// `max(abs_tol, rel_tol·|I|)` or the roundoff floor of the integrand.
pub(crate) fn integrate(
    f: impl Fn(f64) -> Complex64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    if breakpoints.len() < 2 {
        return Err(Error::Quadrature("need at least one panel".into()));
    }
    let mut heap: BinaryHeap<Segment> =
        breakpoints.windows(2).map(|w| gauss_kronrod(&f, w[0], w[1])).collect();
    let mut subdivisions = 0;
    loop {
        let (value, error, l1) = totals(heap.iter());
        let tol = abs_tol.max(rel_tol * value.norm()).max(ROUNDOFF_FACTOR * l1);
        if error <= tol {
            break;
        }
        if subdivisions >= max_subdivisions {
            return Err(Error::Quadrature(format!(
                "no convergence after {max_subdivisions} subdivisions (error {error:.3e}, target {tol:.3e})"
            )));
        }
        // refine a batch of the worst panels before re-summing
        let batch = (heap.len() / 16).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                return Err(Error::Quadrature(format!("panel at {} cannot be split further", worst.a)));
            }
            heap.push(gauss_kronrod(&f, worst.a, mid));
            heap.push(gauss_kronrod(&f, mid, worst.b));
            subdivisions += 1;
        }
    }
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let (value, error, l1) = totals(segments.iter());
    Ok(Integral { value, error, l1 })
}

fn totals<'a>(segments: impl Iterator<Item = &'a Segment>) -> (Complex64, f64, f64) {
    let (mut re, mut im, mut err, mut l1) =
        (Neumaier::default(), Neumaier::default(), Neumaier::default(), Neumaier::default());
    for s in segments {
        re.add(s.value.re);
        im.add(s.value.im);
        err.add(s.error);
        l1.add(s.l1);
    }
    (Complex64::new(re.value(), im.value()), err.value(), l1.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Complex64::new(x.powi(8), 0.0), &[0.0, 1.0], 1e-14, 1e-14, 10).unwrap();
        assert!((r.value.re - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn lorentzian_peak() {
        let eps = 1e-4;
        let f = |x: f64| Complex64::new(eps / (x * x + eps * eps), 0.0);
        let r = integrate(f, &[-1.0, 0.3, 1.0], 1e-12, 1e-12, 10_000).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((r.value.re - exact).abs() < 1e-10, "{}", r.value.re - exact);
    }

    #[test]
    fn oscillatory_complex() {
        let w = 7.0;
        let f = |x: f64| Complex64::new(0.0, w * x).exp();
        let bp: Vec<f64> = (0..=16).map(|k| k as f64 * PI / 16.0).collect();
        let r = integrate(f, &bp, 1e-13, 1e-13, 1000).unwrap();
        let exact = (Complex64::new(0.0, w * PI).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn gives_up_when_budget_exhausted() {
        let f = |x: f64| Complex64::new((1.0 / x).sin(), 0.0);
        assert!(integrate(f, &[1e-6, 1.0], 1e-15, 1e-15, 5).is_err());
    }

    #[test]
    fn compensated_sum() {
        let mut s = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
