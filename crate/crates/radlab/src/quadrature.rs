//! Adaptive Gauss–Kronrod (7/15) quadrature with helpers for algebraic
//! endpoint singularities, points of blow-up just beyond the range, and
//! semi-infinite ranges.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, max_intervals: 20_000 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-10, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

impl QuadResult {
    fn zero() -> Self {
        QuadResult { value: 0.0, abs_err: 0.0, evals: 0 }
    }

    fn add(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_err: self.abs_err + other.abs_err,
            evals: self.evals + other.evals,
        }
    }

    fn scale(self, s: f64) -> QuadResult {
        QuadResult { value: s * self.value, abs_err: s.abs() * self.abs_err, evals: self.evals }
    }
}

/// One 15-point Kronrod panel; returns (integral, |Kronrod − Gauss|).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive bisection: the panel with the largest error estimate
/// is split until the summed estimate meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::zero());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    panels.push((a, b, v, e));
    let mut evals = 15;
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if err <= target {
            return Ok(QuadResult { value: total, abs_err: err, evals });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "estimate {err:.3e} above target {target:.3e} after {} panels on [{a}, {b}]",
                panels.len()
            )));
        }
        let (idx, _) =
            panels.iter().enumerate().fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, perr) = panels[idx];
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            // Panel cannot be split further; accept if its share is negligible.
            if perr <= target {
                return Ok(QuadResult { value: total, abs_err: err, evals });
            }
            return Err(Error::Quadrature(format!("panel underflow near {lo} with error {perr:.3e}")));
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        panels[idx] = (lo, mid, v1, e1);
        panels.push((mid, hi, v2, e2));
    }
}

/// ∫_a^b f with f ~ (t−a)^{−e} near `a`, 0 ≤ e < 1. The change of variables
/// t = a + u^n with n = 1/(1−e) gives a bounded integrand. `f` receives the
/// point and its exact distance to `a`.
pub fn integrate_left_singular<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    e: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    let n = 1.0 / (1.0 - e);
    let umax = (b - a).powf(1.0 / n);
    integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let un1 = u.powf(n - 1.0);
            let d = un1 * u;
            f(a + d, d) * n * un1
        },
        0.0,
        umax,
        tol,
    )
}

/// ∫_a^b f with f ~ (b−t)^{−e} near `b`, 0 ≤ e < 1. `f` receives the point
/// and its exact distance to `b`.
pub fn integrate_right_singular<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    e: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    integrate_left_singular(|t, d| f(a + b - t, d), a, b, e, tol)
}

/// ∫_a^b f for a < b < c when f grows without bound as t → c. The map
/// t = c − (c−a)e^{−v} turns the approach into an exponential tail in v.
/// `f` receives the point and its exact distance to `c`.
pub fn integrate_toward_pole<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    c: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    let d = c - a;
    let vmax = (d / (c - b)).ln();
    integrate(
        |v| {
            let gap = d * (-v).exp();
            f(c - gap, gap) * gap
        },
        0.0,
        vmax,
        tol,
    )
}

/// ∫_a^∞ f for a > 0 through s = a·e^v, accumulated on panels of growing
/// width until a panel contributes less than 10⁻¹⁶ of the running total.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<QuadResult> {
    if !(a > 0.0) {
        return Err(Error::Quadrature(format!("semi-infinite range needs a > 0, got {a}")));
    }
    let mut g = |v: f64| {
        let s = a * v.exp();
        if s.is_infinite() {
            0.0
        } else {
            f(s) * s
        }
    };
    let mut acc = QuadResult::zero();
    let mut v0 = 0.0;
    let mut width = 1.0;
    let mut quiet = 0;
    while v0 < 745.0 {
        let part = integrate(&mut g, v0, v0 + width, tol)?;
        acc = acc.add(part);
        if part.value.abs() <= 1e-16 * acc.value.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        v0 += width;
        width *= 2.0;
    }
    if acc.value.is_finite() {
        Ok(acc)
    } else {
        Err(Error::Quadrature("semi-infinite integral did not settle".into()))
    }
}

/// Integral over [a, b] in either orientation.
pub fn integrate_oriented<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if b >= a {
        integrate(f, a, b, tol)
    } else {
        integrate(f, b, a, tol).map(|r| r.scale(-1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|x| (10.0 * x).sin(), 0.0, 3.0, Tolerance::new(1e-13, 1e-13)).unwrap();
        let exact = (1.0 - (30.0f64).cos()) / 10.0;
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn left_singularity() {
        // ∫_0^1 x^{-0.7} dx = 1/0.3
        let r = integrate_left_singular(|_, d| d.powf(-0.7), 0.0, 1.0, 0.7, Tolerance::new(1e-14, 1e-13)).unwrap();
        assert!((r.value - 1.0 / 0.3).abs() < 1e-11);
    }

    #[test]
    fn right_singularity() {
        // ∫_0^1 (1-x)^{-0.5} dx = 2
        let r = integrate_right_singular(|_, d| d.powf(-0.5), 0.0, 1.0, 0.5, Tolerance::new(1e-14, 1e-13)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn toward_pole() {
        // ∫_0^b (1-x)^{-1} dx = −ln(1 − b)
        let b = 1.0 - 1e-9;
        let r = integrate_toward_pole(|_, d| 1.0 / d, 0.0, b, 1.0, Tolerance::new(1e-14, 1e-13)).unwrap();
        assert!((r.value + (1.0 - b).ln()).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|s| s.powf(-2.5), 2.0, Tolerance::new(1e-15, 1e-13)).unwrap();
        let exact = 2f64.powf(-1.5) / 1.5;
        assert!((r.value - exact).abs() < 1e-12 * exact);
        let r = integrate_to_infinity(|s| (-s).exp(), 1e-3, Tolerance::new(1e-15, 1e-13)).unwrap();
        assert!((r.value - (-1e-3f64).exp()).abs() < 1e-12);
    }
}
