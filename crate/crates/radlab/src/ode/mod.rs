//! Adaptive integration of the radial equation
//! −v″ − ((N−1)/r)v′ + m|v′|^q − S(r, v) = 0 and its reductions.
//!
//! Two coordinates are supported. `RadialR` integrates (v, v′) in r.
//! `LogT` integrates (V, V_t) with V = r^α v and t = ln r, in which the
//! equation reads
//!
//! ```text
//! V_tt + (N−2−2α)V_t + α(α+2−N)V − m e^{(α+2−(α+1)q)t}|V_t − αV|^q + e^{(α+2)t}S = 0.
//! ```
//!
//! Steps are Dormand–Prince 5(4) with PI control; events are located by
//! bisection on the cubic Hermite interpolant of each accepted step.

mod dopri;
pub mod monitor;
pub mod shoot;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::profile::{hermite, ProfileMeta, RadialProfile};
use dopri::State;

/// Active operators of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub diffusion: bool,
    pub gradient: bool,
    pub source: bool,
}

impl Terms {
    pub const FULL: Terms = Terms { diffusion: true, gradient: true, source: true };
    pub const RICCATI: Terms = Terms { diffusion: true, gradient: true, source: false };
    pub const LANE_EMDEN: Terms = Terms { diffusion: true, gradient: false, source: true };
    pub const EIKONAL: Terms = Terms { diffusion: false, gradient: true, source: true };
    pub const LAPLACE: Terms = Terms { diffusion: true, gradient: false, source: false };

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.diffusion {
            parts.push("diffusion");
        }
        if self.gradient {
            parts.push("gradient");
        }
        if self.source {
            parts.push("source");
        }
        parts.join("+")
    }

    /// Parses "full", "riccati", "lane-emden", "eikonal", "laplace" or a
    /// '+'-separated list of operator names.
    pub fn parse(s: &str) -> Option<Terms> {
        match s {
            "full" => return Some(Terms::FULL),
            "riccati" => return Some(Terms::RICCATI),
            "lane-emden" | "lane_emden" => return Some(Terms::LANE_EMDEN),
            "eikonal" => return Some(Terms::EIKONAL),
            "laplace" => return Some(Terms::LAPLACE),
            _ => {}
        }
        let mut t = Terms { diffusion: false, gradient: false, source: false };
        for part in s.split('+') {
            match part.trim() {
                "diffusion" => t.diffusion = true,
                "gradient" => t.gradient = true,
                "source" => t.source = true,
                _ => return None,
            }
        }
        Some(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    RadialR,
    LogT,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The reaction term S(r, v).
#[derive(Clone)]
pub enum Source {
    /// |v|^{p−1}v.
    Power,
    /// A prescribed function of r (frozen right-hand side).
    Forcing(ScalarFn),
    /// A function of v.
    Map(ScalarFn),
}

impl Source {
    fn eval(&self, p: f64, r: f64, v: f64) -> f64 {
        match self {
            Source::Power => v.abs().powf(p - 1.0) * v,
            Source::Forcing(g) => g(r),
            Source::Map(f) => f(v),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Source::Power => "power",
            Source::Forcing(_) => "forcing",
            Source::Map(_) => "map",
        }
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub params: Params,
    pub terms: Terms,
    pub coordinate: Coordinate,
    /// (start, end) radii; end < start integrates inward.
    pub span: (f64, f64),
    pub source: Source,
}

impl OdeProblem {
    pub fn new(params: Params, terms: Terms, span: (f64, f64)) -> Self {
        OdeProblem { params, terms, coordinate: Coordinate::RadialR, span, source: Source::Power }
    }

    pub fn with_coordinate(mut self, c: Coordinate) -> Self {
        self.coordinate = c;
        self
    }

    pub fn with_source(mut self, s: Source) -> Self {
        self.source = s;
        self
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let t = self.terms;
        if !t.diffusion && !(t.gradient && t.source) {
            return Err(Error::Problem(
                "without diffusion only the eikonal reduction {gradient, source} is meaningful".into(),
            ));
        }
        if self.coordinate == Coordinate::LogT {
            if !t.diffusion {
                return Err(Error::Problem("coordinate log_t requires the diffusion operator".into()));
            }
            if self.params.p <= 1.0 {
                return Err(Error::Problem("coordinate log_t requires p > 1 (alpha = 2/(p-1))".into()));
            }
        }
        let (a, b) = self.span;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Problem("span radii must be positive and finite".into()));
        }
        if a == b {
            return Err(Error::Problem("empty span".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step as a fraction of r (RadialR) or in t (LogT).
    pub max_step_frac: f64,
    /// |u′| above which a collapsing step declares gradient blow-up.
    pub du_cap: f64,
    /// Step floor relative to |r| (absolute in t).
    pub step_floor: f64,
    pub value_cap: f64,
    pub max_steps: usize,
    pub stop_on_zero_crossing: bool,
    pub stop_on_derivative_zero: bool,
    /// Stop when |u| ≤ floor·max|u| (disabled at 0).
    pub vanish_floor: f64,
    /// Extra radii sampled from the dense output.
    pub extra_points: Vec<f64>,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            rtol: 1e-10,
            atol: 1e-14,
            max_step_frac: 0.02,
            du_cap: 1e12,
            step_floor: 1e-14,
            value_cap: 1e100,
            max_steps: 5_000_000,
            stop_on_zero_crossing: true,
            stop_on_derivative_zero: false,
            vanish_floor: 0.0,
            extra_points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    ReachedEnd,
    GradientBlowup,
    SolutionVanished,
    SolutionCrossedZero,
    DerivativeCrossedZero,
    ValueExceededCap,
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeKind::ReachedEnd => "reached_end",
            OutcomeKind::GradientBlowup => "gradient_blowup",
            OutcomeKind::SolutionVanished => "solution_vanished",
            OutcomeKind::SolutionCrossedZero => "solution_crossed_zero",
            OutcomeKind::DerivativeCrossedZero => "derivative_crossed_zero",
            OutcomeKind::ValueExceededCap => "value_exceeded_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootOutcome {
    pub kind: OutcomeKind,
    /// Radius at which integration ended (extrapolated for blow-up).
    pub location: f64,
    pub profile: RadialProfile,
    pub diagnostic: Option<String>,
}

/// Right-hand side and coordinate maps for one problem.
struct System<'a> {
    prob: &'a OdeProblem,
    n: f64,
    p: f64,
    q: f64,
    m: f64,
    alpha: f64,
    /// Sign of u′ on the eikonal branch.
    eik_sign: f64,
}

/// |x|^q, clamped to 0 for |x| below 10⁻³⁰⁰.
fn abs_pow(x: f64, q: f64) -> f64 {
    let a = x.abs();
    if a < 1e-300 {
        0.0
    } else {
        a.powf(q)
    }
}

impl<'a> System<'a> {
    fn new(prob: &'a OdeProblem) -> Self {
        let p = &prob.params;
        System {
            prob,
            n: p.nf(),
            p: p.p,
            q: p.q,
            m: p.m,
            alpha: if p.p > 1.0 { 2.0 / (p.p - 1.0) } else { f64::NAN },
            eik_sign: 1.0,
        }
    }

    fn log(&self) -> bool {
        self.prob.coordinate == Coordinate::LogT
    }

    fn src(&self, r: f64, v: f64) -> f64 {
        self.prob.source.eval(self.p, r, v)
    }

    fn eikonal_slope(&self, r: f64, v: f64) -> f64 {
        self.eik_sign * (self.src(r, v).max(0.0) / self.m).powf(1.0 / self.q)
    }

    fn rhs(&self, x: f64, y: &State) -> State {
        let t = self.prob.terms;
        if !t.diffusion {
            return [self.eikonal_slope(x, y[0]), 0.0];
        }
        if self.log() {
            let a = self.alpha;
            let (v, w) = (y[0], y[1]);
            let mut acc = -(self.n - 2.0 - 2.0 * a) * w - a * (a + 2.0 - self.n) * v;
            if t.gradient {
                let e = (a + 2.0 - (a + 1.0) * self.q) * x;
                acc += self.m * e.exp() * abs_pow(w - a * v, self.q);
            }
            if t.source {
                acc -= match self.prob.source {
                    Source::Power => v.abs().powf(self.p - 1.0) * v,
                    _ => {
                        let r = x.exp();
                        ((a + 2.0) * x).exp() * self.src(r, (-a * x).exp() * v)
                    }
                };
            }
            [w, acc]
        } else {
            let (v, dv) = (y[0], y[1]);
            let mut acc = -(self.n - 1.0) * dv / x;
            if t.gradient {
                acc += self.m * abs_pow(dv, self.q);
            }
            if t.source {
                acc -= self.src(x, v);
            }
            [dv, acc]
        }
    }

    fn x_of_r(&self, r: f64) -> f64 {
        if self.log() {
            r.ln()
        } else {
            r
        }
    }

    fn r_of_x(&self, x: f64) -> f64 {
        if self.log() {
            x.exp()
        } else {
            x
        }
    }

    fn to_ru(&self, x: f64, y: &State) -> (f64, f64, f64) {
        if self.log() {
            let a = self.alpha;
            let r = x.exp();
            let u = (-a * x).exp() * y[0];
            let du = (-(a + 1.0) * x).exp() * (y[1] - a * y[0]);
            (r, u, du)
        } else if !self.prob.terms.diffusion {
            (x, y[0], self.eikonal_slope(x, y[0]))
        } else {
            (x, y[0], y[1])
        }
    }

    fn from_ru(&self, r: f64, u: f64, du: f64) -> (f64, State) {
        if self.log() {
            let a = self.alpha;
            let x = r.ln();
            let v = r.powf(a) * u;
            let w = r.powf(a) * (a * u + r * du);
            (x, [v, w])
        } else {
            (r, [u, du])
        }
    }

    /// Signed u and u′ for event functions.
    fn event_values(&self, x: f64, y: &State) -> (f64, f64) {
        let (_, u, du) = self.to_ru(x, y);
        (u, du)
    }

    /// Distance to the point where |r^{N−1}u′|^{1−q} vanishes, from the
    /// local linear trend of that quantity; `None` if it is not decreasing.
    fn blowup_extrapolation(&self, r: f64, u: f64, du: f64, dir: f64) -> Option<f64> {
        let t = self.prob.terms;
        if !(t.gradient && t.diffusion) || du == 0.0 {
            return None;
        }
        let w = r.powf(self.n - 1.0) * du;
        let z = w.abs().powf(1.0 - self.q);
        let src = if t.source { self.src(r, u) } else { 0.0 };
        let dw = r.powf(self.n - 1.0) * (self.m * abs_pow(du, self.q) - src);
        let dz = (1.0 - self.q) * w.abs().powf(-self.q) * w.signum() * dw;
        let along = dz * dir;
        if along < 0.0 && z.is_finite() {
            Some(-z / dz)
        } else {
            None
        }
    }
}

struct Recorder {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
}

impl Recorder {
    fn push(&mut self, (r, u, du): (f64, f64, f64)) {
        self.r.push(r);
        self.u.push(u);
        self.du.push(du);
    }
}

/// Integrates from (u0, du0) at span.0 toward span.1.
pub fn integrate(problem: &OdeProblem, initial: (f64, f64), controls: &Controls) -> Result<ShootOutcome> {
    problem.validate()?;
    let (u0, du0) = initial;
    if !(u0 > 0.0) && problem.terms.source && matches!(problem.source, Source::Power) {
        return Err(Error::Problem("u0 > 0 for a power source".into()));
    }
    if !(u0.is_finite() && du0.is_finite()) {
        return Err(Error::Problem("finite initial data".into()));
    }
    let mut sys = System::new(problem);
    if !problem.terms.diffusion {
        if problem.params.m <= 0.0 {
            return Err(Error::Problem("the eikonal reduction requires m > 0".into()));
        }
        sys.eik_sign = if du0 < 0.0 { -1.0 } else { 1.0 };
        let expect = sys.eikonal_slope(problem.span.0, u0);
        if (expect - du0).abs() > 1e-8 * expect.abs().max(du0.abs()).max(1e-300) {
            return Err(Error::Problem(format!(
                "eikonal initial slope must equal ±(S(u0)/m)^(1/q) = {expect}, got {du0}"
            )));
        }
    }
    let (x0, mut y) = sys.from_ru(problem.span.0, u0, du0);
    let x_end = sys.x_of_r(problem.span.1);
    let dir = if x_end > x0 { 1.0 } else { -1.0 };

    let mut extra: Vec<f64> = controls
        .extra_points
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| sys.x_of_r(r))
        .filter(|&x| (x - x0) * dir > 0.0 && (x_end - x) * dir >= 0.0)
        .collect();
    extra.sort_by(|a, b| (dir * a).partial_cmp(&(dir * b)).unwrap());
    let mut extra_idx = 0;

    let mut rec = Recorder { r: Vec::new(), u: Vec::new(), du: Vec::new() };
    rec.push(sys.to_ru(x0, &y));
    let mut x = x0;
    let mut f = sys.rhs(x, &y);
    let max_step = |x: f64| {
        if sys.log() {
            controls.max_step_frac
        } else {
            controls.max_step_frac * x.abs()
        }
    };
    let floor = |x: f64| {
        if sys.log() {
            controls.step_floor
        } else {
            controls.step_floor * x.abs()
        }
    };
    let mut h = dir * (0.01 * max_step(x)).min((x_end - x).abs());
    let mut err_prev: f64 = 1e-4;
    let mut umax = u0.abs();
    let mut steps = 0usize;

    let finish = |kind: OutcomeKind, location: f64, rec: Recorder, diagnostic: Option<String>| ShootOutcome {
        kind,
        location,
        profile: RadialProfile::new(
            rec.r,
            rec.u,
            rec.du,
            ProfileMeta {
                params: Some(problem.params),
                terms: Some(problem.terms.label()),
                origin: format!(
                    "integrate/{}/{}",
                    match problem.coordinate {
                        Coordinate::RadialR => "radial_r",
                        Coordinate::LogT => "log_t",
                    },
                    problem.source.label()
                ),
                termination: Some(kind.label().to_string()),
                location: Some(location),
            },
        ),
        diagnostic,
    };

    loop {
        if (x_end - x) * dir <= 0.0 {
            let r_end = sys.r_of_x(x);
            return Ok(finish(OutcomeKind::ReachedEnd, r_end, rec, None));
        }
        steps += 1;
        if steps > controls.max_steps {
            return Err(Error::Shooting(format!("step budget exhausted at r = {}", sys.r_of_x(x))));
        }
        let last_step = (x_end - x).abs() <= h.abs() * (1.0 + 1e-12);
        if last_step {
            h = x_end - x;
        }
        let st = dopri::step(&mut |xx, yy| sys.rhs(xx, yy), x, &y, &f, h, controls.rtol, controls.atol);
        let bad = !(st.err.is_finite() && st.y.iter().all(|v| v.is_finite()));
        if bad || st.err > 1.0 {
            let shrink = if bad { 0.25 } else { (0.9 * st.err.powf(-0.2)).clamp(0.2, 0.9) };
            h *= shrink;
            if h.abs() < floor(x) {
                let (r, u, du) = sys.to_ru(x, &y);
                let loc = r + sys.blowup_extrapolation(r, u, du, dir).unwrap_or(0.0);
                let diag = if du.abs() > controls.du_cap {
                    None
                } else {
                    Some(format!("step underflow with |du| = {:.3e} below the cap", du.abs()))
                };
                return Ok(finish(OutcomeKind::GradientBlowup, loc, rec, diag));
            }
            continue;
        }

        // Accepted step [x, xn].
        let xn = if last_step { x_end } else { x + h };
        let yn = st.y;
        let fnew = st.f;
        let interp = |xi: f64| -> State {
            let a = hermite(x, xn, y[0], yn[0], f[0], fnew[0], xi).0;
            let b = hermite(x, xn, y[1], yn[1], f[1], fnew[1], xi).0;
            [a, b]
        };

        // Events.
        let (u_old, du_old) = sys.event_values(x, &y);
        let (u_new, du_new) = sys.event_values(xn, &yn);
        let mut event: Option<(f64, OutcomeKind)> = None;
        let mut consider = |g_old: f64, g_new: f64, kind: OutcomeKind, which: usize| {
            if g_old != 0.0 && g_old * g_new <= 0.0 {
                let (mut a, mut b) = (x, xn);
                let tol = 1e-10 * x.abs().max(1.0);
                while (b - a).abs() > tol {
                    let mid = 0.5 * (a + b);
                    let ym = interp(mid);
                    let (um, dum) = sys.event_values(mid, &ym);
                    let g = if which == 0 { um } else { dum };
                    if g * g_old > 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let xe = 0.5 * (a + b);
                if event.map_or(true, |(xo, _)| (xe - xo) * dir < 0.0) {
                    event = Some((xe, kind));
                }
            }
        };
        if controls.stop_on_zero_crossing {
            consider(u_old, u_new, OutcomeKind::SolutionCrossedZero, 0);
        }
        if controls.stop_on_derivative_zero {
            consider(du_old, du_new, OutcomeKind::DerivativeCrossedZero, 1);
        }

        // Dense samples inside the step, up to an event if any.
        let stop_x = event.map_or(xn, |(xe, _)| xe);
        while extra_idx < extra.len() && (stop_x - extra[extra_idx]) * dir > 0.0 {
            let xi = extra[extra_idx];
            rec.push(sys.to_ru(xi, &interp(xi)));
            extra_idx += 1;
        }

        if let Some((xe, kind)) = event {
            let ye = interp(xe);
            let (re, ue, due) = sys.to_ru(xe, &ye);
            if kind == OutcomeKind::DerivativeCrossedZero && ue > 0.0 {
                rec.push((re, ue, due));
            }
            return Ok(finish(kind, re, rec, None));
        }

        x = xn;
        y = yn;
        f = fnew;
        let (r, u, du) = sys.to_ru(x, &y);
        rec.push((r, u, du));
        umax = umax.max(u.abs());

        if !(u.abs() <= controls.value_cap) || !du.is_finite() {
            return Ok(finish(OutcomeKind::ValueExceededCap, r, rec, None));
        }
        if controls.vanish_floor > 0.0 && u.abs() <= controls.vanish_floor * umax {
            return Ok(finish(OutcomeKind::SolutionVanished, r, rec, None));
        }

        // PI step-size update.
        let err = st.err.max(1e-10);
        let fac = (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
        err_prev = err;
        h = dir * (h.abs() * fac).min(max_step(x));
        if du.abs() > controls.du_cap && h.abs() < floor(x) {
            let loc = r + sys.blowup_extrapolation(r, u, du, dir).unwrap_or(0.0);
            return Ok(finish(OutcomeKind::GradientBlowup, loc, rec, None));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_fundamental_solution() {
        // u = r^{−1} in N = 3.
        let p = Params::new(3, 2.0, 1.5, 0.0).unwrap();
        let prob = OdeProblem::new(p, Terms::LAPLACE, (1.0, 10.0));
        let out = integrate(&prob, (1.0, -1.0), &Controls::default()).unwrap();
        assert_eq!(out.kind, OutcomeKind::ReachedEnd);
        let u_end = *out.profile.u.last().unwrap();
        assert!((u_end - 0.1).abs() < 1e-10);
    }

    #[test]
    fn zero_crossing_is_located() {
        // u = 2 − r in N = 1 (u″ = 0).
        let p = Params::new(1, 2.0, 1.5, 0.0).unwrap();
        let prob = OdeProblem::new(p, Terms::LAPLACE, (1.0, 3.0));
        let out = integrate(&prob, (1.0, -1.0), &Controls::default()).unwrap();
        assert_eq!(out.kind, OutcomeKind::SolutionCrossedZero);
        assert!((out.location - 2.0).abs() < 1e-9);
        assert!(out.profile.u.iter().all(|&u| u > 0.0));
    }

    #[test]
    fn rejects_meaningless_terms() {
        let p = Params::new(3, 2.0, 1.5, 1.0).unwrap();
        let only_grad = Terms { diffusion: false, gradient: true, source: false };
        assert!(integrate(&OdeProblem::new(p, only_grad, (1.0, 2.0)), (1.0, 0.0), &Controls::default()).is_err());
        let eik_log = OdeProblem::new(p, Terms::EIKONAL, (1.0, 2.0)).with_coordinate(Coordinate::LogT);
        assert!(integrate(&eik_log, (1.0, 1.0), &Controls::default()).is_err());
    }

    #[test]
    fn terms_parse_round_trip() {
        for t in [Terms::FULL, Terms::RICCATI, Terms::LANE_EMDEN, Terms::EIKONAL] {
            assert_eq!(Terms::parse(&t.label()), Some(t));
        }
        assert_eq!(Terms::parse("riccati"), Some(Terms::RICCATI));
        assert_eq!(Terms::parse("bogus"), None);
    }
}
