//! First integrals of the radial Riccati equation −v″ − ((N−1)/r)v′ + m|v′|^q = 0.
//!
//! With w = r^{N−1}v′ the equation becomes w′ = m r^{(1−q)(N−1)}|w|^q, so
//! |w|^{1−q} is an explicit function of r. Everything below is a quadrature
//! of that identity. Write κ = N − q(N−1) and
//! G(s) = m(q−1)(s^κ − r₀^κ)/κ (m(q−1)ln(s/r₀) when κ = 0). For slope
//! X = v′(r₀) and W₀ = r₀^{N−1}|X|:
//!
//! * increasing branch: r^{N−1}v′ = (W₀^{1−q} − G(r))^{−1/(q−1)},
//! * decreasing branch: −r^{N−1}v′ = (W₀^{1−q} + G(r))^{−1/(q−1)}.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::{compare, riccati_constant, Comparison, Params};
use crate::quadrature::{
    integrate, integrate_left_singular, integrate_right_singular, integrate_to_infinity, integrate_toward_pole,
    QuadResult, Tolerance,
};

/// Tolerance for every closed-form quadrature.
pub const CF_TOL: Tolerance = Tolerance::new(0.0, 1e-12);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub params: Params,
    pub r0: f64,
    /// Signed initial slope v′(r₀).
    #[serde(rename = "X")]
    pub x: f64,
}

impl QuadratureSpec {
    pub fn new(params: Params, r0: f64, x: f64) -> Self {
        QuadratureSpec { params, r0, x }
    }

    pub fn direction(&self) -> Direction {
        if self.x > 0.0 {
            Direction::Increasing
        } else if self.x < 0.0 {
            Direction::Decreasing
        } else {
            Direction::Constant
        }
    }
}

/// Appendix case of the increasing branch, by the sign of κ = N − q(N−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiccatiCase {
    /// κ > 0: every increasing solution blows up at r_X.
    Subcritical,
    /// κ = 0, q = N/(N−1): blow-up at r*_X.
    Borderline,
    /// κ < 0: blow-up at r̃_X only above the threshold slope X₀.
    Supercritical,
}

pub fn riccati_case(params: &Params) -> RiccatiCase {
    let n = params.nf();
    if params.n >= 2 && compare(params.q, n / (n - 1.0)) == Comparison::At {
        return RiccatiCase::Borderline;
    }
    if params.kappa() > 0.0 {
        RiccatiCase::Subcritical
    } else {
        RiccatiCase::Supercritical
    }
}

/// Shared state for the closed-form maps of one (params, r₀).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Riccati {
    n: f64,
    q: f64,
    m: f64,
    r0: f64,
    kappa: f64,
    case: RiccatiCase,
}

impl Riccati {
    pub(crate) fn new(params: &Params, r0: f64) -> Result<Self> {
        if !(params.m > 0.0) {
            return domain("m > 0 for the Riccati first integrals");
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return domain("r0 > 0");
        }
        let case = riccati_case(params);
        let kappa = if case == RiccatiCase::Borderline { 0.0 } else { params.kappa() };
        Ok(Riccati { n: params.nf(), q: params.q, m: params.m, r0, kappa, case })
    }

    fn e(&self) -> f64 {
        1.0 / (self.q - 1.0)
    }

    /// (s^κ − t^κ)/κ for s, t > 0, continuous through κ = 0.
    fn pow_diff(&self, s: f64, t: f64) -> f64 {
        let l = (s / t).ln();
        if self.kappa == 0.0 {
            l
        } else {
            t.powf(self.kappa) * (self.kappa * l).exp_m1() / self.kappa
        }
    }

    /// Same quantity with s = t + d, accurate for small d.
    fn pow_diff_gap(&self, t: f64, d: f64) -> f64 {
        let l = (d / t).ln_1p();
        if self.kappa == 0.0 {
            l
        } else {
            t.powf(self.kappa) * (self.kappa * l).exp_m1() / self.kappa
        }
    }

    pub(crate) fn g(&self, s: f64) -> f64 {
        self.m * (self.q - 1.0) * self.pow_diff(s, self.r0)
    }

    pub(crate) fn w0_pow(&self, x: f64) -> f64 {
        (self.r0.powf(self.n - 1.0) * x.abs()).powf(1.0 - self.q)
    }

    /// Blow-up radius of the increasing branch, `None` when global.
    pub(crate) fn blowup_radius(&self, x: f64) -> Option<f64> {
        let z = self.w0_pow(x);
        let c = self.m * (self.q - 1.0);
        match self.case {
            RiccatiCase::Subcritical => Some((self.kappa * z / c + self.r0.powf(self.kappa)).powf(1.0 / self.kappa)),
            RiccatiCase::Borderline => Some(self.r0 * (z / c).exp()),
            RiccatiCase::Supercritical => {
                let k = -self.kappa;
                let t = k * z / (c * self.r0.powf(self.kappa));
                (t < 1.0).then(|| self.r0 * (1.0 - t).powf(-1.0 / k))
            }
        }
    }

    /// Threshold slope X₀ of the supercritical case.
    pub(crate) fn x0(&self) -> Option<f64> {
        (self.case == RiccatiCase::Supercritical)
            .then(|| (-self.kappa / (self.m * (self.q - 1.0) * self.r0)).powf(self.e()))
    }

    /// r^{N−1}|v′| on the increasing branch.
    pub(crate) fn w_inc(&self, x: f64, r: f64) -> f64 {
        match self.blowup_radius(x) {
            Some(rb) => self.w_inc_gap(r, rb - r),
            None => (self.w0_pow(x) - self.g(r)).powf(-self.e()),
        }
    }

    /// Same, written through the distance d to the blow-up radius.
    fn w_inc_gap(&self, s: f64, d: f64) -> f64 {
        (self.m * (self.q - 1.0) * self.pow_diff_gap(s, d)).powf(-self.e())
    }

    /// r^{N−1}|v′| on the decreasing branch.
    pub(crate) fn w_dec(&self, x: f64, r: f64) -> f64 {
        (self.w0_pow(x) + self.g(r)).powf(-self.e())
    }

    fn radial(&self, s: f64) -> f64 {
        s.powf(1.0 - self.n)
    }

    /// ∫_{a}^{b} of a smooth radial integrand, in the variable ln s.
    fn log_integral<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<QuadResult> {
        integrate(
            |v| {
                let s = v.exp();
                f(s) * s
            },
            a.ln(),
            b.ln(),
            CF_TOL,
        )
    }

    /// T_X(r) = v(r) − v(r₀) on the increasing branch, for r₀ ≤ a < b below blow-up.
    pub(crate) fn t_between(&self, x: f64, a: f64, b: f64) -> Result<QuadResult> {
        match self.blowup_radius(x) {
            None => {
                let z = self.w0_pow(x);
                self.log_integral(|s| self.radial(s) * (z - self.g(s)).powf(-self.e()), a, b)
            }
            Some(rb) if rb.is_infinite() => {
                let z = self.w0_pow(x);
                self.log_integral(|s| self.radial(s) * (z - self.g(s)).powf(-self.e()), a, b)
            }
            Some(rb) => {
                if b >= rb {
                    return domain("r below the blow-up radius of the increasing branch");
                }
                let split = a + 0.5 * (rb - a);
                if b <= split {
                    self.log_integral(|s| self.radial(s) * self.w_inc_gap(s, rb - s), a, b)
                } else {
                    let head = self.log_integral(|s| self.radial(s) * self.w_inc_gap(s, rb - s), a, split)?;
                    let tail =
                        integrate_toward_pole(|s, d| self.radial(s) * self.w_inc_gap(s, d), split, b, rb, CF_TOL)?;
                    Ok(sum(head, tail))
                }
            }
        }
    }

    /// Accumulated drop on the decreasing branch over [a, b], integrated in
    /// ln(s − r₀) so the layer of width z/G′(r₀) at r₀ is resolved.
    pub(crate) fn d_between(&self, x: f64, a: f64, b: f64) -> Result<QuadResult> {
        let z = self.w0_pow(x);
        let gd = |d: f64| self.m * (self.q - 1.0) * self.pow_diff_gap(self.r0, d);
        let near = |d: f64| (self.r0 + d).powf(1.0 - self.n) * (z + gd(d)).powf(-self.e());
        let in_log = |lo: f64, hi: f64| {
            integrate(
                |v| {
                    let d = v.exp();
                    near(d) * d
                },
                lo.ln(),
                hi.ln(),
                CF_TOL,
            )
        };
        let (da, db) = (a - self.r0, b - self.r0);
        if da > 0.0 {
            return in_log(da, db);
        }
        let ell = z / (self.m * (self.q - 1.0) * self.r0.powf(self.kappa - 1.0));
        let d_lo = (1e-8 * ell).min(1e-8 * db);
        let head = integrate(near, 0.0, d_lo, CF_TOL)?;
        Ok(sum(head, in_log(d_lo, db)?))
    }
}

fn sum(a: QuadResult, b: QuadResult) -> QuadResult {
    QuadResult { value: a.value + b.value, abs_err: a.abs_err + b.abs_err, evals: a.evals + b.evals }
}

/// T_X(r): increase of the increasing Riccati solution with v′(r₀) = X > 0.
pub fn riccati_increasing_map(spec: &QuadratureSpec, r: f64) -> Result<f64> {
    riccati_increasing_map_full(spec, r).map(|q| q.value)
}

pub fn riccati_increasing_map_full(spec: &QuadratureSpec, r: f64) -> Result<QuadResult> {
    if !(spec.x > 0.0) {
        return domain("X > 0 for the increasing map");
    }
    let rc = Riccati::new(&spec.params, spec.r0)?;
    if r < spec.r0 {
        return domain("r >= r0");
    }
    rc.t_between(spec.x, spec.r0, r)
}

/// S_X(r) = gap − (v(r₀) − v(r)) for the decreasing solution with
/// v′(r₀) = X < 0. S_X(τ) = 0 characterizes a boundary-value solution.
pub fn riccati_decreasing_map(spec: &QuadratureSpec, r: f64, gap: f64) -> Result<f64> {
    if !(spec.x < 0.0) {
        return domain("X < 0 for the decreasing map");
    }
    if !(gap > 0.0) {
        return domain("gap = a - b > 0 for the decreasing map");
    }
    let rc = Riccati::new(&spec.params, spec.r0)?;
    if r < spec.r0 {
        return domain("r >= r0");
    }
    Ok(gap - rc.d_between(spec.x, spec.r0, r)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupKind {
    FiniteRadiusGradientBlowup,
    Global,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub case: RiccatiCase,
    pub kind: BlowupKind,
    pub radius: Option<f64>,
    #[serde(rename = "X0")]
    pub x0: Option<f64>,
    /// lim T_X(r) as r → ∞ for global solutions (N ≥ 3, X ≤ X₀).
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    /// r₀X/(N−2)·[1 − (X/X₀)^{q−1}]^{−1/(q−1)}, an upper bound for C₁.
    #[serde(rename = "C1_bound")]
    pub c1_bound: Option<f64>,
    /// Value reached at the blow-up radius, finite for q > 2.
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
}

pub fn blowup_report(spec: &QuadratureSpec) -> Result<BlowupReport> {
    if !(spec.x > 0.0) {
        return domain("X > 0 for the blow-up analysis");
    }
    let rc = Riccati::new(&spec.params, spec.r0)?;
    let (n, q) = (rc.n, rc.q);
    let x0 = rc.x0();
    let mut report = BlowupReport {
        case: rc.case,
        kind: BlowupKind::FiniteRadiusGradientBlowup,
        radius: None,
        x0,
        c1: None,
        c1_bound: None,
        c2: None,
    };
    if let Some(x0v) = x0 {
        let side = compare(spec.x, x0v);
        if side != Comparison::Above {
            report.kind = if side == Comparison::At { BlowupKind::Threshold } else { BlowupKind::Global };
            if spec.params.n >= 3 {
                let c1 = if side == Comparison::At && q >= 2.0 {
                    f64::INFINITY
                } else if side == Comparison::At {
                    // Exact integrand: const·s^{−1/(q−1)}.
                    let c = (rc.m * (q - 1.0) / -rc.kappa).powf(-rc.e());
                    c * spec.r0.powf(1.0 - rc.e()) / (rc.e() - 1.0)
                } else {
                    let z = rc.w0_pow(spec.x);
                    integrate_to_infinity(|s| rc.radial(s) * (z - rc.g(s)).powf(-rc.e()), spec.r0, CF_TOL)?.value
                };
                report.c1 = Some(c1);
                let ratio = (spec.x / x0v).powf(q - 1.0);
                report.c1_bound = Some(if ratio >= 1.0 {
                    f64::INFINITY
                } else {
                    spec.r0 * spec.x / (n - 2.0) * (1.0 - ratio).powf(-rc.e())
                });
            }
            return Ok(report);
        }
    }
    let rb = rc.blowup_radius(spec.x).expect("finite blow-up above threshold");
    report.radius = Some(rb);
    if q > 2.0 && rc.case == RiccatiCase::Supercritical {
        report.c2 = Some(c2_value(&rc, rb)?);
    }
    Ok(report)
}

/// C₂ through the scaled form
/// (|κ|/(m(q−1)))^{1/(q−1)} r̃^{(q−2)/(q−1)} ∫_{r₀/r̃}^1 (t^κ − 1)^{−1/(q−1)} t^{1−N} dt.
fn c2_value(rc: &Riccati, rb: f64) -> Result<f64> {
    let e = rc.e();
    let k = rc.kappa;
    let pref = (-k / (rc.m * (rc.q - 1.0))).powf(e) * rb.powf((rc.q - 2.0) / (rc.q - 1.0));
    let lo = rc.r0 / rb;
    let integral = integrate_right_singular(
        |t, d| {
            // t^κ − 1 with t = 1 − d.
            let tk1 = (k * (-d).ln_1p()).exp_m1();
            tk1.powf(-e) * t.powf(1.0 - rc.n)
        },
        lo,
        1.0,
        e,
        CF_TOL,
    )?;
    Ok(pref * integral.value)
}

/// C₂(X) for X above the threshold X₀ in the supercritical case with q > 2.
pub fn c2(params: &Params, r0: f64, x: f64) -> Result<f64> {
    let rc = Riccati::new(params, r0)?;
    if !(params.q > 2.0) {
        return domain("q > 2 for a finite value at the blow-up radius");
    }
    match rc.blowup_radius(x) {
        Some(rb) if rc.case == RiccatiCase::Supercritical && x > 0.0 => c2_value(&rc, rb),
        _ => domain("X > X0 in the case q > N/(N-1)"),
    }
}

/// Slope X_τ at which the increasing branch blows up exactly at τ.
pub fn blowup_slope_for_radius(params: &Params, r0: f64, tau: f64) -> Result<f64> {
    let rc = Riccati::new(params, r0)?;
    if !(tau > r0) {
        return domain("tau > r0");
    }
    let c = rc.m * (rc.q - 1.0);
    // W₀^{1−q} = G(τ), the blow-up condition.
    let z = c * rc.pow_diff(tau, r0);
    let w0 = z.powf(-rc.e());
    Ok(w0 / r0.powf(rc.n - 1.0))
}

/// τ* = r̃_{X*} with C₂(X*) = gap: the smallest outer radius for which the
/// increasing problem with q > 2 reaches the prescribed rise.
pub fn tau_star(params: &Params, r0: f64, gap: f64) -> Result<f64> {
    let rc = Riccati::new(params, r0)?;
    if !(params.q > 2.0) {
        return domain("q > 2 for the critical radius tau*");
    }
    if rc.case != RiccatiCase::Supercritical {
        return domain("q > N/(N-1) for the critical radius tau*");
    }
    if !(gap > 0.0) {
        return domain("b - a > 0 for the critical radius tau*");
    }
    let x0 = rc.x0().unwrap();
    // C₂ decreases from its limit at X₀⁺ to 0 as X → ∞.
    let f = |lx: f64| c2_value(&rc, rc.blowup_radius(lx.exp()).unwrap()).map(|v| v - gap);
    let mut hi = x0 * 2.0;
    while f(hi.ln())? > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return domain("finite tau* for the requested rise");
        }
    }
    let mut lo = x0 * (1.0 + 1e-12);
    if f(lo.ln())? < 0.0 {
        return Err(crate::error::Error::Existence {
            condition: "rise below the supremum of C2 (values attainable near X0)".into(),
            threshold: f(lo.ln())? + gap,
        });
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    lo = (0.5 * (a + b)).exp();
    Ok(rc.blowup_radius(lo).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaCap {
    pub value: f64,
    pub abs_err: f64,
}

/// Θ(τ) = (|κ|/(m(q−1)))^{1/(q−1)} r₀^{(q−2)/(q−1)} ∫₁^{τ/r₀} t^{1−N}(1 − t^κ)^{−1/(q−1)} dt,
/// the supremum of a − b over decreasing solutions on [r₀, τ] (q > 2).
/// `tau` may be infinite.
pub fn theta_cap(params: &Params, r0: f64, tau: f64) -> Result<ThetaCap> {
    if !(params.q > 2.0) {
        return domain("q > 2 for the cap Theta");
    }
    if params.n < 2 {
        return domain("N >= 2 for the cap Theta (needs q(N-1) - N > 0)");
    }
    let rc = Riccati::new(params, r0)?;
    if !(tau > r0) {
        if tau == r0 {
            return Ok(ThetaCap { value: 0.0, abs_err: 0.0 });
        }
        return domain("tau > r0");
    }
    let (n, q, k, e) = (rc.n, rc.q, rc.kappa, rc.e());
    if tau.is_infinite() && params.n == 2 {
        return Ok(ThetaCap { value: f64::INFINITY, abs_err: 0.0 });
    }
    let pref = (-k / (rc.m * (q - 1.0))).powf(e) * r0.powf((q - 2.0) / (q - 1.0));
    let top = tau / r0;
    let near = |t: f64, d: f64| t.powf(1.0 - n) * (-(k * d.ln_1p()).exp_m1()).powf(-e);
    let far = |t: f64| t.powf(1.0 - n) * (-(k * t.ln()).exp_m1()).powf(-e);
    let split = top.min(2.0);
    let mut res = integrate_left_singular(near, 1.0, split, e, CF_TOL)?;
    if top > split {
        let tail = if top.is_infinite() {
            integrate_to_infinity(far, split, CF_TOL)?
        } else {
            integrate(
                |v| {
                    let t = v.exp();
                    far(t) * t
                },
                split.ln(),
                top.ln(),
                CF_TOL,
            )?
        };
        res = sum(res, tail);
    }
    Ok(ThetaCap { value: pref * res.value, abs_err: pref * res.abs_err })
}

/// |S^{N−1}| = 2π^{N/2}/Γ(N/2).
pub fn sphere_area(n: u32) -> f64 {
    // Γ(N/2) by the half-integer recurrence.
    let mut g = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / g
}

/// 1/((N−2)|S^{N−1}|), the normalization of the fundamental solution.
pub fn default_c_n(n: u32) -> f64 {
    1.0 / ((n as f64 - 2.0) * sphere_area(n))
}

/// Singular solution of the Riccati equation in the exterior of the origin
/// with mass k at 0 (k = ∞ gives ξ_m r^{−β}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularRiccati {
    pub params: Params,
    pub k: f64,
    #[serde(rename = "cN")]
    pub c_n: f64,
}

impl SingularRiccati {
    pub fn new(params: Params, k: f64) -> Self {
        SingularRiccati { params, k, c_n: default_c_n(params.n) }
    }

    /// Additive constant K in (m(q−1)/κ·s^κ + K)^{−1/(q−1)}, chosen so that
    /// r^{N−2}u → c_N k at the origin.
    pub fn bracket_constant(&self) -> f64 {
        if self.k.is_infinite() {
            0.0
        } else {
            ((self.params.nf() - 2.0) * self.c_n * self.k).powf(1.0 - self.params.q)
        }
    }
}

/// (u_k*(r), u_k*′(r)).
pub fn singular_riccati_profile(sr: &SingularRiccati, r: f64) -> Result<(f64, f64)> {
    let p = &sr.params;
    let xi = riccati_constant(p)?;
    if !(sr.k > 0.0) {
        return domain("k > 0 for the singular Riccati profile");
    }
    if !(r > 0.0) {
        return domain("r > 0");
    }
    let (n, q) = (p.nf(), p.q);
    let beta = p.beta();
    if sr.k.is_infinite() {
        let u = xi * r.powf(-beta);
        return Ok((u, -beta * u / r));
    }
    if !(sr.c_n > 0.0) {
        return domain("c_N > 0");
    }
    let a = p.m * (q - 1.0) / p.kappa();
    let kk = sr.bracket_constant();
    let e = 1.0 / (q - 1.0);
    let flux = |s: f64| s.powf(1.0 - n) * (a * s.powf(p.kappa()) + kk).powf(-e);
    let u = integrate_to_infinity(flux, r, Tolerance::new(0.0, 1e-13))?.value;
    Ok((u, -flux(r)))
}
