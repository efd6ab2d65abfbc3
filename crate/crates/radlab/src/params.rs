//! Problem parameters, critical exponents, regime comparisons and the
//! closed-form constants of the separable profiles.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::roots::{bisect_log, golden_extremum};

/// Relative tolerance under which a comparison against a threshold is a tie.
pub const TIE_RTOL: f64 = 1e-12;

/// Parameters of −Δu + m|∇u|^q − u^p = 0 in dimension N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub m: f64,
}

impl Params {
    pub fn new(n: u32, p: f64, q: f64, m: f64) -> Result<Self> {
        let params = Params { n, p, q, m };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return domain("N >= 1");
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return domain("p > 0");
        }
        if !(self.q.is_finite() && self.q > 1.0) {
            return domain("q > 1");
        }
        if !(self.m.is_finite() && self.m >= 0.0) {
            return domain("m >= 0");
        }
        Ok(())
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// N − q(N−1). Its sign selects the Riccati case: positive below the
    /// removability exponent N/(N−1), zero on it, negative above.
    pub fn kappa(&self) -> f64 {
        let n = self.nf();
        n - self.q * (n - 1.0)
    }

    /// 2/(p−1); requires p > 1.
    pub fn alpha(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// (2−q)/(q−1).
    pub fn beta(&self) -> f64 {
        (2.0 - self.q) / (self.q - 1.0)
    }

    pub fn critical_q(&self) -> f64 {
        2.0 * self.p / (self.p + 1.0)
    }

    pub fn on_critical_line(&self) -> bool {
        compare(self.q, self.critical_q()) == Comparison::At
    }

    /// N/(N−2), defined for N ≥ 3.
    pub fn serrin(&self) -> Option<f64> {
        (self.n >= 3).then(|| self.nf() / (self.nf() - 2.0))
    }

    /// (N+2)/(N−2), defined for N ≥ 3.
    pub fn sobolev(&self) -> Option<f64> {
        (self.n >= 3).then(|| (self.nf() + 2.0) / (self.nf() - 2.0))
    }

    /// N/(N−1), defined for N ≥ 2.
    pub fn removability(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.nf() / (self.nf() - 1.0))
    }
}

/// Outcome of comparing a quantity with a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Below,
    At,
    Above,
}

/// Compares `x` with `threshold`, reporting a tie within [`TIE_RTOL`].
pub fn compare(x: f64, threshold: f64) -> Comparison {
    let scale = x.abs().max(threshold.abs());
    if (x - threshold).abs() <= TIE_RTOL * scale {
        Comparison::At
    } else if x < threshold {
        Comparison::Below
    } else {
        Comparison::Above
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub alpha: f64,
    pub beta: f64,
    /// q/(p−q); `None` when p = q.
    pub gamma: Option<f64>,
    pub sigma: f64,
}

pub fn compute_exponents(params: &Params) -> Result<ExponentSet> {
    if params.p <= 1.0 {
        return domain("p > 1 for the exponent set");
    }
    let (p, q) = (params.p, params.q);
    let gamma = match compare(q, p) {
        Comparison::At => None,
        _ => Some(q / (p - q)),
    };
    Ok(ExponentSet { alpha: params.alpha(), beta: params.beta(), gamma, sigma: (p + 1.0) * q - 2.0 * p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// q against 2p/(p+1).
    pub q_vs_critical: Comparison,
    /// q against p.
    pub q_vs_p: Comparison,
    /// p against N/(N−2); `None` when N ≤ 2.
    pub p_vs_serrin: Option<Comparison>,
    /// p against (N+2)/(N−2); `None` when N ≤ 2.
    pub p_vs_sobolev: Option<Comparison>,
    /// q against N/(N−1); `None` when N = 1.
    pub q_vs_removability: Option<Comparison>,
    pub q_vs_two: Comparison,
}

pub fn classify_regime(params: &Params) -> RegimeReport {
    RegimeReport {
        q_vs_critical: compare(params.q, params.critical_q()),
        q_vs_p: compare(params.q, params.p),
        p_vs_serrin: params.serrin().map(|s| compare(params.p, s)),
        p_vs_sobolev: params.sobolev().map(|s| compare(params.p, s)),
        q_vs_removability: params.removability().map(|s| compare(params.q, s)),
        q_vs_two: compare(params.q, 2.0),
    }
}

/// ω₀ = (α(N−2−α))^{1/(p−1)}, the constant of the singular Lane-Emden
/// profile ω₀ r^{−α}.
pub fn lane_emden_constant(params: &Params) -> Result<f64> {
    let Some(serrin) = params.serrin() else {
        return domain("N >= 3 for the Lane-Emden constant");
    };
    if compare(params.p, serrin) != Comparison::Above {
        return domain("p > N/(N-2) for the Lane-Emden constant");
    }
    let a = params.alpha();
    Ok((a * (params.nf() - 2.0 - a)).powf(1.0 / (params.p - 1.0)))
}

/// The same constant through the form α((N−2)p−N)/(p−1).
pub fn lane_emden_constant_alt(params: &Params) -> Result<f64> {
    lane_emden_constant(params)?;
    let (n, p) = (params.nf(), params.p);
    let base = params.alpha() * ((n - 2.0) * p - n) / (p - 1.0);
    Ok(base.powf(1.0 / (p - 1.0)))
}

/// ξ_m = (1/β)((N − q(N−1))/(m(q−1)))^{1/(q−1)}, the constant of the
/// singular Riccati profile ξ_m r^{−β}.
pub fn riccati_constant(params: &Params) -> Result<f64> {
    if params.n < 3 {
        return domain("N >= 3 for the Riccati constant");
    }
    let rem = params.removability().unwrap_or(f64::INFINITY);
    if compare(params.q, rem) != Comparison::Below {
        return domain("1 < q < N/(N-1) for the Riccati constant");
    }
    if params.m <= 0.0 {
        return domain("m > 0 for the Riccati constant");
    }
    let q = params.q;
    let base = params.kappa() / (params.m * (q - 1.0));
    Ok(base.powf(1.0 / (q - 1.0)) / params.beta())
}

/// X_m = (m|γ|^q)^{1/(p−q)}, the constant of the eikonal profile X_m r^{|γ|}.
pub fn eikonal_constant(params: &Params) -> Result<f64> {
    let (p, q, m) = (params.p, params.q, params.m);
    if compare(p, q) == Comparison::At {
        return domain("p != q for the eikonal constant");
    }
    if m <= 0.0 {
        return domain("m > 0 for the eikonal constant");
    }
    let g = (q / (p - q)).abs();
    Ok((m * g.powf(q)).powf(1.0 / (p - q)))
}

/// μ* = (p+1)((N−(N−2)p)/(2p))^{p/(p+1)}: below this mass no positive
/// constant-in-angle separable solution exists on the critical line.
pub fn critical_mass_threshold(params: &Params) -> Result<f64> {
    if !params.on_critical_line() {
        return domain("q = 2p/(p+1) (critical line) for the critical mass");
    }
    let (n, p) = (params.nf(), params.p);
    let ok = match params.n {
        2 => p > 1.0,
        k if k >= 3 => p > 1.0 && compare(p, n / (n - 2.0)) == Comparison::Below,
        _ => false,
    };
    if !ok {
        return domain("N = 2 with p > 1, or N >= 3 with 1 < p < N/(N-2), for the critical mass");
    }
    Ok((p + 1.0) * ((n - (n - 2.0) * p) / (2.0 * p)).powf(p / (p + 1.0)))
}

/// Left side of the constant-solution equation for u = x r^{−α} on the
/// critical line, together with the largest term magnitude.
pub fn constant_solution_map(params: &Params, x: f64) -> (f64, f64) {
    let a = params.alpha();
    let p = params.p;
    let lin = -a * (a + 2.0 - params.nf()) * x;
    let grad = params.m * (a * a * x * x).powf(p / (p + 1.0));
    let src = x.powf(p);
    (lin + grad - src, lin.abs().max(grad).max(src))
}

/// Positive constants x with u = x r^{−α} solving the full equation on the
/// critical line, sorted ascending. A tangential (double) root is reported
/// once.
pub fn constant_solution_roots(params: &Params) -> Result<Vec<f64>> {
    if !params.on_critical_line() {
        return domain("q = 2p/(p+1) (critical line) for constant solutions");
    }
    if params.p <= 1.0 {
        return domain("p > 1 for constant solutions");
    }
    const NGRID: usize = 10_000;
    const TANGENT_RTOL: f64 = 1e-10;
    let (lo, hi) = (1e-8f64.ln(), 1e8f64.ln());
    let xs: Vec<f64> = (0..NGRID).map(|i| (lo + (hi - lo) * i as f64 / (NGRID - 1) as f64).exp()).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| constant_solution_map(params, x).0).collect();
    let g = |x: f64| constant_solution_map(params, x).0;

    let mut roots = Vec::new();
    let mut consumed = vec![false; NGRID];

    // Interior extrema that fail to change sign on the grid: either a
    // tangency or a pair of close roots between neighbouring samples.
    for i in 1..NGRID - 1 {
        let is_max = gs[i] >= gs[i - 1] && gs[i] >= gs[i + 1] && gs[i] < 0.0;
        let is_min = gs[i] <= gs[i - 1] && gs[i] <= gs[i + 1] && gs[i] > 0.0;
        if !(is_max || is_min) || gs[i - 1] == gs[i] && gs[i] == gs[i + 1] {
            continue;
        }
        let (la, lb) = (xs[i - 1].ln(), xs[i + 1].ln());
        let (le, ge) = golden_extremum(|l| g(l.exp()), la, lb, is_max, 200);
        let xe = le.exp();
        let scale = constant_solution_map(params, xe).1;
        if ge.abs() <= TANGENT_RTOL * scale {
            roots.push(xe);
            consumed[i - 1] = true;
            consumed[i] = true;
        } else if (ge > 0.0) == is_max {
            roots.push(bisect_log(g, xs[i - 1], xe, 200));
            roots.push(bisect_log(g, xe, xs[i + 1], 200));
            consumed[i - 1] = true;
            consumed[i] = true;
        }
    }
    for i in 0..NGRID - 1 {
        if consumed[i] {
            continue;
        }
        if gs[i] == 0.0 {
            roots.push(xs[i]);
        } else if gs[i] * gs[i + 1] < 0.0 {
            roots.push(bisect_log(g, xs[i], xs[i + 1], 200));
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    Ok(roots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub omega0: Option<f64>,
    pub xi_m: Option<f64>,
    #[serde(rename = "X_m")]
    pub x_m: Option<f64>,
    pub mu_star: Option<f64>,
    pub x_const_roots: Vec<f64>,
    pub theta_cap: Option<f64>,
}

/// Every constant whose validity regime holds for `params`. Θ is evaluated
/// only when a window (r₀, τ) is supplied.
pub fn constants_report(params: &Params, theta_window: Option<(f64, f64)>) -> ConstantsReport {
    ConstantsReport {
        omega0: lane_emden_constant(params).ok(),
        xi_m: riccati_constant(params).ok(),
        x_m: eikonal_constant(params).ok(),
        mu_star: critical_mass_threshold(params).ok(),
        x_const_roots: constant_solution_roots(params).unwrap_or_default(),
        theta_cap: theta_window
            .and_then(|(r0, tau)| crate::closed_forms::theta_cap(params, r0, tau).ok())
            .map(|t| t.value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationVariant {
    /// A_n = (A_{n−1}+1)q/p with cap β.
    Suit,
    /// θ_n = min{λ₂, min{pθ_{n−1}, qθ_{n−1} − σ/(p−1)}}, for 1 < p < N/(N−2).
    Si31,
    /// Same recursion capped by λ₁ = α, for N/(N−2) < p < (N+2)/(N−2).
    Si34,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationTermination {
    FixedPoint,
    CapReached,
    MaxSteps,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentIteration {
    pub schedule: Vec<f64>,
    pub limit: f64,
    pub converged: bool,
    pub n_steps: usize,
    pub cap: f64,
    pub termination: IterationTermination,
}

pub const ITERATION_TOL: f64 = 1e-10;
pub const ITERATION_MAX_STEPS: usize = 10_000;

pub fn exponent_iteration(
    params: &Params,
    variant: IterationVariant,
    start: f64,
    tol: f64,
    max_steps: usize,
) -> Result<ExponentIteration> {
    if !(start > 0.0 && start.is_finite()) {
        return domain("a positive finite start value");
    }
    let (p, q) = (params.p, params.q);
    match variant {
        IterationVariant::Suit => {
            if compare(p, q) == Comparison::At {
                return domain("q != p for the (A_n) iteration");
            }
            let cap = params.beta();
            let side = (start - cap).signum();
            Ok(run_iteration(start, tol, max_steps, cap, |a| {
                let next = (a + 1.0) * q / p;
                let crossed = side != 0.0 && (next - cap).signum() != side;
                (next, crossed)
            }))
        }
        IterationVariant::Si31 | IterationVariant::Si34 => {
            if p <= 1.0 {
                return domain("p > 1 for the (theta_n) iteration");
            }
            let (Some(serrin), Some(sobolev)) = (params.serrin(), params.sobolev()) else {
                return domain("N >= 3 for the (theta_n) iteration");
            };
            let alpha = params.alpha();
            let cap = if variant == IterationVariant::Si31 {
                if compare(p, serrin) != Comparison::Below {
                    return domain("1 < p < N/(N-2) for the capped iteration with lambda_2");
                }
                alpha + 2.0 - params.nf()
            } else {
                if compare(p, serrin) != Comparison::Above || compare(p, sobolev) != Comparison::Below {
                    return domain("N/(N-2) < p < (N+2)/(N-2) for the capped iteration with lambda_1");
                }
                alpha
            };
            let shift = ((p + 1.0) * q - 2.0 * p) / (p - 1.0);
            Ok(run_iteration(start, tol, max_steps, cap, |theta| {
                let delta = (p * theta).min(q * theta - shift);
                if delta >= cap {
                    (cap, true)
                } else {
                    (delta, false)
                }
            }))
        }
    }
}

fn run_iteration<F: FnMut(f64) -> (f64, bool)>(
    start: f64,
    tol: f64,
    max_steps: usize,
    cap: f64,
    mut step: F,
) -> ExponentIteration {
    let mut schedule = vec![start];
    let mut termination = IterationTermination::MaxSteps;
    let mut prev = start;
    for _ in 0..max_steps {
        let (next, capped) = step(prev);
        schedule.push(next);
        if !next.is_finite() {
            termination = IterationTermination::Diverged;
            break;
        }
        if capped {
            termination = IterationTermination::CapReached;
            break;
        }
        if (next - prev).abs() < tol {
            termination = IterationTermination::FixedPoint;
            break;
        }
        prev = next;
    }
    let limit = *schedule.last().unwrap();
    ExponentIteration {
        n_steps: schedule.len() - 1,
        converged: matches!(termination, IterationTermination::FixedPoint | IterationTermination::CapReached),
        schedule,
        limit,
        cap,
        termination,
    }
}
