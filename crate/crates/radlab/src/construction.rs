//! Two-point problems for the Riccati operator and the monotone iteration
//! that builds radial solutions of −Δv + m|v′|^q = f(v) below a
//! supersolution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_forms::{tau_star, Riccati};
use crate::error::{domain, Error, Result};
use crate::ode::shoot::{shoot_near, solve_two_point, MultipleShooting, Target};
use crate::ode::{Controls, OdeProblem, Source, Terms};
use crate::params::Params;
use crate::profile::{ProfileMeta, RadialProfile};

/// Dirichlet data v(r₀) = a, v(τ) = b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpSpec {
    pub params: Params,
    pub r0: f64,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
}

impl BvpSpec {
    pub fn new(params: Params, r0: f64, tau: f64, a: f64, b: f64) -> Self {
        BvpSpec { params, r0, tau, a, b }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return domain("r0 > 0");
        }
        if !(self.tau > self.r0 && self.tau.is_finite()) {
            return domain("tau > r0");
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return domain("a > 0");
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return domain("b >= 0");
        }
        if !(self.params.m > 0.0) {
            return domain("m > 0 for the Riccati boundary-value problem");
        }
        Ok(())
    }
}

/// Radii on [r₀, τ]: a uniform part plus geometric clusters at both ends.
pub fn bvp_grid(r0: f64, tau: f64, n: usize) -> Vec<f64> {
    let len = tau - r0;
    let mut pts: Vec<f64> = (0..=n).map(|i| r0 + len * i as f64 / n as f64).collect();
    let k = n / 4;
    for i in 0..k {
        let frac = 10f64.powf(-12.0 + 11.0 * i as f64 / k as f64) * 0.5;
        pts.push(r0 + len * frac);
        pts.push(tau - len * frac);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    pts[0] = r0;
    let last = pts.len() - 1;
    pts[last] = tau;
    pts
}

const BVP_GRID: usize = 400;
/// Relative distance below the blow-up slope X_τ at which the increasing
/// problem is considered saturated.
const SATURATION_GAP: f64 = 1e-13;
/// Largest |X| relative to (a − b)/(τ − r₀) tried on the decreasing branch.
const MAX_SLOPE_FACTOR: f64 = 1e40;

/// Bisection in ln X for a continuous increasing F; F(lo) < 0 < F(hi).
fn bisect_log_slope<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid.exp())? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Unique monotone solution of −v″ − ((N−1)/r)v′ + m|v′|^q = 0 with
/// v(r₀) = a, v(τ) = b, by inversion of the closed-form maps in the slope.
///
/// Existence is decided by saturation of the slope search: on the decreasing
/// branch with q > 2 the drop is capped by Θ(τ); on the increasing branch
/// with q > 2 the rise is capped by the value reached at the blow-up radius.
pub fn solve_riccati_bvp(spec: &BvpSpec) -> Result<RadialProfile> {
    spec.validate()?;
    let BvpSpec { params, r0, tau, a, b } = *spec;
    let rc = Riccati::new(&params, r0)?;
    let grid = bvp_grid(r0, tau, BVP_GRID);
    let n = params.nf();
    let (m, q) = (params.m, params.q);
    let meta = |origin: &str| ProfileMeta {
        params: Some(params),
        terms: Some(Terms::RICCATI.label()),
        origin: origin.to_string(),
        termination: Some("reached_end".into()),
        location: Some(tau),
    };
    if a == b {
        let k = grid.len();
        let mut p = RadialProfile::new(grid, vec![a; k], vec![0.0; k], meta("riccati_bvp/constant"));
        p.d2u = Some(vec![0.0; k]);
        return Ok(p);
    }
    let gap = (b - a).abs();
    let x = if b > a {
        let x_tau = crate::closed_forms::blowup_slope_for_radius(&params, r0, tau)?;
        let rise = |x: f64| rc.t_between(x, r0, tau).map(|v| v.value - gap);
        let hi = x_tau * (1.0 - SATURATION_GAP);
        let top = rise(hi)?;
        if top < 0.0 {
            if q > 2.0 {
                let threshold = tau_star(&params, r0, gap).unwrap_or(top + gap);
                return Err(Error::Existence {
                    condition: format!(
                        "tau >= tau* for the increasing problem with q > 2 (largest attainable rise at tau is {:.12e})",
                        top + gap
                    ),
                    threshold,
                });
            }
            return Err(Error::Shooting(format!(
                "rise {gap:e} needs a slope within {SATURATION_GAP:e} of the blow-up slope {x_tau:e}"
            )));
        }
        let mut lo = hi * 0.5;
        while rise(lo)? >= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Shooting("no slope below the prescribed rise".into()));
            }
        }
        bisect_log_slope(rise, lo.ln(), hi.ln())?
    } else {
        let drop = |x: f64| rc.d_between(-x, r0, tau).map(|v| v.value - gap);
        let base = gap / (tau - r0);
        let lo = base;
        let mut hi = base * 10.0;
        let mut top = drop(hi)?;
        while top < 0.0 {
            hi *= 10.0;
            if hi > base * MAX_SLOPE_FACTOR {
                if q > 2.0 {
                    return Err(Error::Existence {
                        condition: format!(
                            "a - b < Theta(tau) for the decreasing problem with q > 2 (largest attainable drop is {:.12e})",
                            top + gap
                        ),
                        threshold: top + gap,
                    });
                }
                return Err(Error::Shooting(format!("drop {gap:e} not reached for slopes up to {hi:e}")));
            }
            top = drop(hi)?;
        }
        -bisect_log_slope(drop, lo.ln(), hi.ln())?
    };

    // Cumulative profile on the grid.
    let mut u = Vec::with_capacity(grid.len());
    let mut du = Vec::with_capacity(grid.len());
    let mut d2u = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    for (i, &r) in grid.iter().enumerate() {
        if i > 0 {
            let piece = if x > 0.0 {
                rc.t_between(x, grid[i - 1], r)?.value
            } else {
                let d = if i == 1 { rc.d_between(x, r0, r)? } else { rc.d_between(x, grid[i - 1], r)? };
                -d.value
            };
            acc += piece;
        }
        let w = if x > 0.0 { rc.w_inc(x, r) } else { -rc.w_dec(x, r) };
        let v1 = w / r.powf(n - 1.0);
        u.push(a + acc);
        du.push(v1);
        d2u.push(-(n - 1.0) * v1 / r + m * v1.abs().powf(q));
    }
    du[0] = x;
    let mut p = RadialProfile::new(grid, u, du, meta("riccati_bvp/closed_form"));
    p.d2u = Some(d2u);
    Ok(p)
}

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub k: usize,
    #[serde(skip)]
    pub v_k: RadialProfile,
    /// sup |v_k − v_{k−1}| / max(1, sup |v_k|) on the comparison grid.
    pub sup_gap: f64,
    pub monotone_ok: bool,
    /// Largest relative amount by which v_k falls below v_{k−1}.
    pub monotone_violation: f64,
    /// Largest relative amount by which v_k exceeds the supersolution.
    pub super_violation: f64,
    pub du0: f64,
    pub boundary: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub tol: f64,
    pub max_k: usize,
    pub monotone_tol: f64,
    /// Samples of the comparison grid.
    pub grid_points: usize,
    pub controls: Controls,
    pub multiple_shooting: MultipleShooting,
    /// Start from this subsolution instead of the Riccati solution.
    #[serde(skip)]
    pub subsolution_start: Option<RadialProfile>,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            tol: 1e-8,
            max_k: 200,
            monotone_tol: 1e-8,
            grid_points: 400,
            controls: Controls { max_step_frac: 0.002, ..Controls::default() },
            multiple_shooting: MultipleShooting::default(),
            subsolution_start: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationResult {
    pub limit: RadialProfile,
    pub trace: Vec<IterationState>,
    /// Sup of |−v″ − ((N−1)/r)v′ + m|v′|^q − f(v)| / (largest term) on the limit.
    pub limit_residual: f64,
    /// sup_gap failed to decrease at some step after the first.
    pub gap_nonmonotone: bool,
}

/// Normalized residual of −v″ − ((N−1)/r)v′ + m|v′|^q − f(v); u″ from the
/// profile (exact or five-point). Returns the pointwise trace.
pub fn source_residual(profile: &RadialProfile, params: &Params, f: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let d2 = profile.second_derivative();
    let n = params.nf();
    (0..profile.len())
        .map(|i| {
            let (r, u, du) = (profile.r[i], profile.u[i], profile.du[i]);
            let parts = [-d2[i], -(n - 1.0) * du / r, params.m * du.abs().powf(params.q), -f(u)];
            let scale = parts.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let raw: f64 = parts.iter().sum();
            if scale > 0.0 {
                raw / scale
            } else {
                0.0
            }
        })
        .collect()
}

fn comparison_grid(r0: f64, tau: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| r0 + (tau - r0) * i as f64 / (n - 1) as f64).collect()
}

/// Monotone iteration −v_k″ − ((N−1)/r)v_k′ + m|v_k′|^q = f(v_{k−1}) with
/// v_k(r₀) = a, v_k(τ) = b, started from the Riccati solution (k = 0) or
/// from a given subsolution. Each step solves the frozen-source problem by
/// multiple shooting warm-started at v_{k−1}, with single shooting as the
/// fallback.
pub fn monotone_iterate(
    spec: &BvpSpec,
    f: ScalarMap,
    supersolution: &RadialProfile,
    opts: &IterateOptions,
) -> Result<IterationResult> {
    spec.validate()?;
    let BvpSpec { params, r0, tau, a, b } = *spec;
    if f(0.0) != 0.0 {
        return domain("f(0) = 0");
    }
    let sup = supersolution.ascending();
    if sup.is_empty() || sup.r_min() > r0 * (1.0 + 1e-12) || sup.r_max() < tau * (1.0 - 1e-12) {
        return domain("supersolution sampled over [r0, tau]");
    }
    // Supersolution inequality on the samples inside the window.
    let inside: Vec<usize> = (0..sup.len()).filter(|&i| sup.r[i] >= r0 && sup.r[i] <= tau).collect();
    let sres = source_residual(&sup, &params, &*f);
    if let Some(&i) = inside.iter().find(|&&i| sres[i] < -1e-6) {
        return Err(Error::Hypothesis(format!(
            "supersolution inequality fails at r = {} (normalized residual {:.3e})",
            sup.r[i], sres[i]
        )));
    }
    let (s0, _) = sup.interpolate(r0);
    let (st, _) = sup.interpolate(tau);
    if a > s0 * (1.0 + 1e-12) || b > st * (1.0 + 1e-12) {
        return domain("boundary data below the supersolution (a <= S(r0), b <= S(tau))");
    }

    let grid = comparison_grid(r0, tau, opts.grid_points.max(3));
    let sup_on: Vec<f64> = grid.iter().map(|&r| sup.interpolate(r).0).collect();
    let v0 = match &opts.subsolution_start {
        None => solve_riccati_bvp(spec)?,
        Some(sub) => check_subsolution(sub, spec, &*f)?,
    };
    let on_grid = |p: &RadialProfile| -> Vec<f64> { grid.iter().map(|&r| p.interpolate(r).0).collect() };
    let mut prev_vals = on_grid(&v0);
    let norm = |v: &[f64]| v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut trace = vec![IterationState {
        k: 0,
        sup_gap: prev_vals.iter().fold(0.0f64, |m, x| m.max(x.abs())) / norm(&prev_vals),
        monotone_ok: true,
        monotone_violation: 0.0,
        super_violation: super_violation(&prev_vals, &sup_on),
        du0: v0.du[0],
        boundary: (a, b),
        v_k: v0.clone(),
    }];
    let mut prev = v0;
    let mut du_guess = prev.du[0];
    let mut gap_nonmonotone = false;

    for k in 1..=opts.max_k {
        let frozen = prev.clone();
        let fc = f.clone();
        let forcing: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |r| fc(frozen.interpolate(r).0));
        let problem = OdeProblem::new(params, Terms::FULL, (r0, tau)).with_source(Source::Forcing(forcing));
        let mut ctl = opts.controls.clone();
        ctl.extra_points = grid.clone();
        let res = match solve_two_point(&problem, a, b, &prev, &ctl, &opts.multiple_shooting) {
            Ok(r) => r,
            Err(_) => {
                let width = 1e-3 * du_guess.abs().max((b - a).abs() / (tau - r0)).max(1e-12);
                shoot_near(&problem, a, du_guess, width, Target::Value(b), &ctl)?
            }
        };
        let mut vk = res.outcome.profile;
        vk.meta.origin = format!("monotone_iterate/k={k}");
        let vals = on_grid(&vk);
        let scale = norm(&vals);
        let gap = vals.iter().zip(&prev_vals).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale;
        let mviol = vals.iter().zip(&prev_vals).map(|(x, y)| (y - x).max(0.0)).fold(0.0, f64::max) / scale;
        let sviol = super_violation(&vals, &sup_on);
        let monotone_ok = mviol <= opts.monotone_tol;
        if k > 1 && gap > trace.last().unwrap().sup_gap {
            gap_nonmonotone = true;
        }
        trace.push(IterationState {
            k,
            v_k: vk.clone(),
            sup_gap: gap,
            monotone_ok,
            monotone_violation: mviol,
            super_violation: sviol,
            du0: res.du0,
            boundary: (a, b),
        });
        if !monotone_ok {
            return Err(Error::Monotonicity {
                k,
                detail: format!(
                    "v_k below v_(k-1) by {mviol:.3e} (relative), above tolerance {:.1e}",
                    opts.monotone_tol
                ),
            });
        }
        du_guess = res.du0;
        prev_vals = vals;
        prev = vk;
        if gap < opts.tol {
            let fres = source_residual(&prev, &params, &*f);
            let limit_residual = fres.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            return Ok(IterationResult { limit: prev, trace, limit_residual, gap_nonmonotone });
        }
    }
    Err(Error::NoConvergence { steps: opts.max_k, last_gap: trace.last().unwrap().sup_gap })
}

/// Subsolution restricted to [r₀, τ]: residual ≤ 0 up to 1e-6 (normalized)
/// and below the boundary data.
fn check_subsolution(sub: &RadialProfile, spec: &BvpSpec, f: &dyn Fn(f64) -> f64) -> Result<RadialProfile> {
    let BvpSpec { params, r0, tau, a, b } = *spec;
    let s = sub.ascending();
    if s.is_empty() || s.r_min() > r0 * (1.0 + 1e-12) || s.r_max() < tau * (1.0 - 1e-12) {
        return domain("subsolution sampled over [r0, tau]");
    }
    let res = source_residual(&s, &params, f);
    if let Some(i) = (0..s.len()).find(|&i| s.r[i] >= r0 && s.r[i] <= tau && res[i] > 1e-6) {
        return Err(Error::Hypothesis(format!(
            "subsolution inequality fails at r = {} (normalized residual {:.3e})",
            s.r[i], res[i]
        )));
    }
    let (s0, _) = s.interpolate(r0);
    let (st, _) = s.interpolate(tau);
    if s0 > a * (1.0 + 1e-12) || st > b * (1.0 + 1e-12) {
        return domain("subsolution below the boundary data (S(r0) <= a, S(tau) <= b)");
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s.r[i] >= r0 && s.r[i] <= tau).collect();
    let mut r: Vec<f64> = keep.iter().map(|&i| s.r[i]).collect();
    let mut u: Vec<f64> = keep.iter().map(|&i| s.u[i]).collect();
    let mut du: Vec<f64> = keep.iter().map(|&i| s.du[i]).collect();
    if r.first() != Some(&r0) {
        let (u0, d0) = s.interpolate(r0);
        r.insert(0, r0);
        u.insert(0, u0);
        du.insert(0, d0);
    }
    if r.last() != Some(&tau) {
        let (ut, dt) = s.interpolate(tau);
        r.push(tau);
        u.push(ut);
        du.push(dt);
    }
    let mut out = s.clone();
    out.r = r;
    out.u = u;
    out.du = du;
    out.d2u = None;
    Ok(out)
}

fn super_violation(vals: &[f64], sup: &[f64]) -> f64 {
    vals.iter().zip(sup).map(|(v, s)| (v - s).max(0.0) / s.abs().max(1.0)).fold(0.0, f64::max)
}

/// Boundary value prescribed at the outer radius τ of each window.
#[derive(Clone)]
pub enum OuterData {
    Constant(f64),
    Function(ScalarMap),
}

impl OuterData {
    fn at(&self, tau: f64) -> f64 {
        match self {
            OuterData::Constant(b) => *b,
            OuterData::Function(g) => g(tau),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitBehavior {
    /// u increases to +∞.
    Unbounded,
    /// u decreases toward 0.
    Vanishing,
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExteriorResult {
    pub profile: RadialProfile,
    pub taus: Vec<f64>,
    /// sup relative difference of successive limits on their common window.
    pub window_gaps: Vec<f64>,
    pub stabilized: bool,
    /// Largest relative violation of v_τ ≤ v_τ′ (τ < τ′) when a ≥ b.
    pub tau_monotone_violation: f64,
    pub behavior: LimitBehavior,
}

/// Solves on [r₀, τ] for τ = τ₀, 2τ₀, 4τ₀, … and stops when successive
/// solutions agree on their common window to `opts.tol`.
pub fn exterior_limit(
    params: Params,
    r0: f64,
    a: f64,
    outer: OuterData,
    f: ScalarMap,
    supersolution: &RadialProfile,
    tau0: Option<f64>,
    doublings: usize,
    opts: &IterateOptions,
) -> Result<ExteriorResult> {
    let mut tau = tau0.unwrap_or(2.0 * r0);
    if let OuterData::Constant(b) = &outer {
        if params.q > 2.0 && *b > a {
            if let Ok(ts) = tau_star(&params, r0, b - a) {
                tau = tau.max(ts);
            }
        }
    }
    let mut taus = Vec::new();
    let mut gaps = Vec::new();
    let mut prev: Option<RadialProfile> = None;
    let mut tau_viol: f64 = 0.0;
    let mut last = None;
    for _ in 0..=doublings {
        let b = outer.at(tau);
        let spec = BvpSpec::new(params, r0, tau, a, b);
        let res = monotone_iterate(&spec, f.clone(), supersolution, opts)?;
        taus.push(tau);
        let cur = res.limit;
        if let Some(p) = &prev {
            let hi = p.r_max();
            let pts = comparison_grid(r0, hi, opts.grid_points.max(3));
            let scale = pts.iter().fold(1.0f64, |m, &r| m.max(cur.interpolate(r).0.abs()));
            let mut gap: f64 = 0.0;
            for &r in &pts {
                let (x, y) = (cur.interpolate(r).0, p.interpolate(r).0);
                gap = gap.max((x - y).abs() / scale);
                if a >= b {
                    tau_viol = tau_viol.max((y - x) / scale);
                }
            }
            gaps.push(gap);
            if gap < opts.tol {
                last = Some(cur);
                break;
            }
        }
        prev = Some(cur.clone());
        last = Some(cur);
        tau *= 2.0;
    }
    let profile = last.expect("at least one window");
    let stabilized = gaps.last().is_some_and(|g| *g < opts.tol);
    let behavior = classify_limit(&profile);
    Ok(ExteriorResult {
        profile,
        taus,
        window_gaps: gaps,
        stabilized,
        tau_monotone_violation: tau_viol.max(0.0),
        behavior,
    })
}

/// Increasing with positive slope on the outer half: unbounded; decreasing
/// there: vanishing.
fn classify_limit(p: &RadialProfile) -> LimitBehavior {
    let asc = p.ascending();
    let mid = 0.5 * (asc.r_min() + asc.r_max());
    let outer: Vec<usize> = (0..asc.len()).filter(|&i| asc.r[i] >= mid).collect();
    if outer.is_empty() {
        return LimitBehavior::Undetermined;
    }
    if outer.iter().all(|&i| asc.du[i] > 0.0) {
        LimitBehavior::Unbounded
    } else if outer.iter().all(|&i| asc.du[i] <= 0.0) {
        LimitBehavior::Vanishing
    } else {
        LimitBehavior::Undetermined
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::theta_cap;

    #[test]
    fn equal_data_gives_constant() {
        let p = Params::new(3, 2.0, 1.5, 1.0).unwrap();
        let sol = solve_riccati_bvp(&BvpSpec::new(p, 1.0, 2.0, 0.7, 0.7)).unwrap();
        assert!(sol.u.iter().all(|&u| u == 0.7) && sol.du.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn grid_is_strictly_increasing() {
        let g = bvp_grid(1.0, 3.0, 100);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!((g[0], *g.last().unwrap()), (1.0, 3.0));
    }

    #[test]
    fn increasing_bvp_meets_both_ends() {
        let p = Params::new(3, 2.0, 1.5, 1.0).unwrap();
        let sol = solve_riccati_bvp(&BvpSpec::new(p, 1.0, 2.0, 1.0, 3.0)).unwrap();
        assert!((sol.u.last().unwrap() - 3.0).abs() < 1e-9);
        assert!(sol.du.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn decreasing_bvp_meets_both_ends() {
        let p = Params::new(3, 2.0, 3.0, 1.0).unwrap();
        let th = theta_cap(&p, 1.0, 2.0).unwrap().value;
        let sol = solve_riccati_bvp(&BvpSpec::new(p, 1.0, 2.0, 2.0, 2.0 - 0.9 * th)).unwrap();
        assert!((sol.u.last().unwrap() - (2.0 - 0.9 * th)).abs() < 1e-9);
        let err = solve_riccati_bvp(&BvpSpec::new(p, 1.0, 2.0, 2.0, 2.0 - 1.01 * th)).unwrap_err();
        assert!(matches!(err, Error::Existence { .. }));
    }
}
