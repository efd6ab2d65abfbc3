//! Slope matching: find v′(start) so the trajectory meets a terminal condition.

use serde::{Deserialize, Serialize};

use super::{integrate, Controls, OdeProblem, OutcomeKind, ShootOutcome};
use crate::error::{Error, Result};
use crate::profile::RadialProfile;

/// Condition imposed at the end of the span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Value(f64),
}

pub const SHOOT_RTOL: f64 = 1e-9;
const MAX_ITER: usize = 400;

/// Signed terminal mismatch of one trajectory.
///
/// A zero crossing before the end is continued linearly from the crossing,
/// which keeps the mismatch continuous where the crossing reaches the end.
/// Blow-up or overflow counts as ±∞ by the sign of the escaping derivative.
pub fn mismatch(out: &ShootOutcome, end: f64, target: Target) -> f64 {
    let Target::Value(b) = target;
    let last = out.profile.len() - 1;
    let du = out.profile.du[last];
    match out.kind {
        OutcomeKind::ReachedEnd => out.profile.u[last] - b,
        OutcomeKind::SolutionCrossedZero => {
            let (_, du_c) = out.profile.interpolate(out.location);
            let slope = if du_c != 0.0 { du_c } else { du };
            slope * (end - out.location) - b
        }
        OutcomeKind::SolutionVanished => -b.abs().max(f64::MIN_POSITIVE),
        OutcomeKind::GradientBlowup | OutcomeKind::ValueExceededCap | OutcomeKind::DerivativeCrossedZero => {
            let dir = (end - out.profile.r[0]).signum();
            if du * dir >= 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    pub du0: f64,
    pub mismatch: f64,
    pub iterations: usize,
    pub outcome: ShootOutcome,
}

/// Bisection with safeguarded secant (Illinois) steps on du0 ∈ bracket.
pub fn shoot(
    problem: &OdeProblem,
    u0: f64,
    bracket: (f64, f64),
    target: Target,
    controls: &Controls,
) -> Result<ShootResult> {
    let mut ctl = controls.clone();
    ctl.stop_on_zero_crossing = true;
    ctl.stop_on_derivative_zero = false;
    let end = problem.span.1;
    let Target::Value(b) = target;
    let tol = SHOOT_RTOL * b.abs().max(u0.abs()).max(f64::MIN_POSITIVE);
    let eval = |s: f64| -> Result<(f64, ShootOutcome)> {
        let out = integrate(problem, (u0, s), &ctl)?;
        Ok((mismatch(&out, end, target), out))
    };

    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let (mut f_lo, out_lo) = eval(lo)?;
    if f_lo.abs() <= tol {
        return Ok(ShootResult { du0: lo, mismatch: f_lo, iterations: 0, outcome: out_lo });
    }
    let (mut f_hi, out_hi) = eval(hi)?;
    if f_hi.abs() <= tol {
        return Ok(ShootResult { du0: hi, mismatch: f_hi, iterations: 0, outcome: out_hi });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket(format!(
            "terminal mismatch has the same sign at du0 = {lo} ({f_lo:e}) and du0 = {hi} ({f_hi:e})"
        )));
    }

    let mut best: Option<(f64, f64, ShootOutcome)> = None;
    let mut side = 0i32;
    for it in 1..=MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let s = if f_lo.is_finite() && f_hi.is_finite() {
            let sec = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if sec > lo && sec < hi && sec.is_finite() {
                sec
            } else {
                mid
            }
        } else {
            mid
        };
        if !(s > lo && s < hi) {
            break;
        }
        let (f, out) = eval(s)?;
        if best.as_ref().map_or(true, |(_, fb, _)| f.abs() < fb.abs()) {
            best = Some((s, f, out));
        }
        if f.abs() <= tol {
            let (du0, mismatch, outcome) = best.unwrap();
            return Ok(ShootResult { du0, mismatch, iterations: it, outcome });
        }
        if f.signum() == f_lo.signum() {
            lo = s;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = s;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    match best {
        Some((du0, mismatch, outcome)) if mismatch.abs() <= tol => {
            Ok(ShootResult { du0, mismatch, iterations: MAX_ITER, outcome })
        }
        Some((du0, mismatch, _)) => Err(Error::Shooting(format!(
            "slope bracket collapsed at du0 = {du0} with mismatch {mismatch:e} above {tol:e}"
        ))),
        None => Err(Error::Shooting("slope bracket collapsed".into())),
    }
}

/// Expands a bracket around `guess` (half-width starting at `width`) by
/// factors of four until the mismatch changes sign, then shoots.
pub fn shoot_near(
    problem: &OdeProblem,
    u0: f64,
    guess: f64,
    width: f64,
    target: Target,
    controls: &Controls,
) -> Result<ShootResult> {
    let mut ctl = controls.clone();
    ctl.stop_on_zero_crossing = true;
    ctl.stop_on_derivative_zero = false;
    let end = problem.span.1;
    let at = |s: f64| -> Result<f64> { Ok(mismatch(&integrate(problem, (u0, s), &ctl)?, end, target)) };
    let f0 = at(guess)?;
    if f0 == 0.0 {
        return shoot(problem, u0, (guess, guess + width), target, controls);
    }
    // The terminal value increases with the slope: move toward the sign change.
    let step_dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let mut w = width.abs().max(f64::MIN_POSITIVE);
    let mut near = guess;
    for _ in 0..80 {
        let far = guess + step_dir * w;
        let f = at(far)?;
        if f.signum() != f0.signum() {
            return shoot(problem, u0, (near.min(far), near.max(far)), target, controls);
        }
        near = far;
        w *= 4.0;
    }
    Err(Error::Bracket(format!("no sign change of the terminal mismatch near du0 = {guess}")))
}

/// Settings of the multiple-shooting two-point solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipleShooting {
    pub max_newton: usize,
    /// Matching tolerance relative to the value and slope scales.
    pub tol: f64,
    /// Target of ∫ m q|v′|^{q−1} dr over one segment. Values above
    /// q/(q−1) reach the gradient blow-up distance of the segment flow.
    pub growth_per_segment: f64,
    pub min_segments: usize,
    pub max_segments: usize,
}

impl Default for MultipleShooting {
    fn default() -> Self {
        MultipleShooting { max_newton: 40, tol: 1e-11, growth_per_segment: 0.5, min_segments: 8, max_segments: 20000 }
    }
}

/// Segment nodes on [r₀, τ] from the growth density of the guess.
fn segment_nodes(problem: &OdeProblem, guess: &RadialProfile, ms: &MultipleShooting) -> Vec<f64> {
    let (r0, tau) = problem.span;
    let prm = &problem.params;
    let k_min = ms.min_segments.max(1);
    let max_len = (tau - r0) / k_min as f64;
    let density = |r: f64| {
        let (_, du) = guess.interpolate(r);
        if problem.terms.gradient {
            prm.m * prm.q * du.abs().powf(prm.q - 1.0)
        } else {
            0.0
        }
    };
    let fine = 20 * ms.max_segments;
    let mut nodes = vec![r0];
    let (mut acc, mut last) = (0.0, r0);
    let mut prev_r = r0;
    let mut prev_d = density(r0);
    for i in 1..=fine {
        let r = r0 + (tau - r0) * i as f64 / fine as f64;
        let d = density(r);
        acc += 0.5 * (d + prev_d) * (r - prev_r);
        if i < fine && (acc >= ms.growth_per_segment || r - last >= max_len * (1.0 - 1e-12)) {
            nodes.push(r);
            acc = 0.0;
            last = r;
        }
        prev_r = r;
        prev_d = d;
    }
    nodes.push(tau);
    if nodes.len() - 1 > ms.max_segments {
        // Thin uniformly in index.
        let k = ms.max_segments;
        let m = nodes.len() - 1;
        let mut thin: Vec<f64> = (0..k).map(|i| nodes[i * m / k]).collect();
        thin.push(tau);
        thin.dedup();
        return thin;
    }
    nodes
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals; row i holds
/// columns i−kl ..= i+kl+ku (room for pivoting fill-in).
struct Banded {
    n: usize,
    kl: usize,
    w: usize,
    a: Vec<f64>,
}

impl Banded {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        Banded { n, kl, w, a: vec![0.0; n * w] }
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        (off >= 0 && (off as usize) < self.w).then(|| i * self.w + off as usize)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.a[k])
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).expect("entry inside the band");
        self.a[k] = v;
    }

    /// Gaussian elimination with partial pivoting.
    fn solve(mut self, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = self.n;
        let ku_fill = self.w - self.kl - 1;
        for c in 0..n {
            let last_row = (c + self.kl).min(n - 1);
            let piv = (c..=last_row).max_by(|&i, &j| self.get(i, c).abs().total_cmp(&self.get(j, c).abs()))?;
            let pv = self.get(piv, c);
            if pv == 0.0 || !pv.is_finite() {
                return None;
            }
            let last_col = (c + ku_fill).min(n - 1);
            if piv != c {
                for j in c..=last_col {
                    let (x, y) = (self.get(c, j), self.get(piv, j));
                    self.set(c, j, y);
                    self.set(piv, j, x);
                }
                b.swap(c, piv);
            }
            for r in c + 1..=last_row {
                let f = self.get(r, c) / pv;
                if f != 0.0 {
                    for j in c..=last_col {
                        let v = self.get(r, j) - f * self.get(c, j);
                        self.set(r, j, v);
                    }
                    b[r] -= f * b[c];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let last_col = (r + ku_fill).min(n - 1);
            let s: f64 = (r + 1..=last_col).map(|k| self.get(r, k) * x[k]).sum();
            x[r] = (b[r] - s) / self.get(r, r);
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Two-point problem v(r₀) = a, v(τ) = b by multiple shooting with Newton
/// on the matching conditions, started from `guess`. Segment lengths keep
/// the local growth factor of perturbations near e^{growth_per_segment}.
pub fn solve_two_point(
    problem: &OdeProblem,
    a: f64,
    b: f64,
    guess: &RadialProfile,
    controls: &Controls,
    ms: &MultipleShooting,
) -> Result<ShootResult> {
    let (r0, tau) = problem.span;
    if !(tau > r0) {
        return Err(Error::Problem("multiple shooting integrates outward (tau > r0)".into()));
    }
    let nodes = segment_nodes(problem, guess, ms);
    let k = nodes.len() - 1;
    let mut ctl = controls.clone();
    ctl.stop_on_zero_crossing = false;
    ctl.stop_on_derivative_zero = false;
    ctl.extra_points = Vec::new();
    let vscale = guess.u.iter().fold(a.abs().max(b.abs()), |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let dscale = guess.du.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(vscale / (tau - r0));

    // Unknowns: s₀, then (v_j, v′_j) at interior nodes.
    let mut x = Vec::with_capacity(2 * k - 1);
    x.push(guess.interpolate(r0).1);
    for &r in &nodes[1..k] {
        let (u, du) = guess.interpolate(r);
        x.push(u);
        x.push(du);
    }
    let state = |x: &[f64], j: usize| if j == 0 { (a, x[0]) } else { (x[2 * j - 1], x[2 * j]) };
    let seg = |j: usize, st: (f64, f64), c: &Controls| -> Option<ShootOutcome> {
        let mut pr = problem.clone();
        pr.span = (nodes[j], nodes[j + 1]);
        match integrate(&pr, st, c) {
            Ok(o) if o.kind == OutcomeKind::ReachedEnd => Some(o),
            _ => None,
        }
    };
    let end_of = |o: &ShootOutcome| {
        let l = o.profile.len() - 1;
        (o.profile.u[l], o.profile.du[l])
    };
    let residual = |x: &[f64]| -> Option<(Vec<f64>, Vec<(f64, f64)>)> {
        let mut f = Vec::with_capacity(2 * k - 1);
        let mut ends = Vec::with_capacity(k);
        for j in 0..k {
            let e = end_of(&seg(j, state(x, j), &ctl)?);
            ends.push(e);
            if j + 1 < k {
                f.push(e.0 - x[2 * j + 1]);
                f.push(e.1 - x[2 * j + 2]);
            } else {
                f.push(e.0 - b);
            }
        }
        Some((f, ends))
    };
    let scaled = |f: &[f64]| -> Vec<f64> {
        f.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v.abs() / vscale } else { v.abs() / dscale }).collect()
    };
    let norm = |f: &[f64]| scaled(f).into_iter().fold(0.0, f64::max);
    let merit = |f: &[f64]| scaled(f).into_iter().map(|x| x * x).sum::<f64>();

    let (mut f, mut ends) = residual(&x)
        .ok_or_else(|| Error::Shooting("initial guess leaves the integration range on some segment".into()))?;
    let mut fnorm = norm(&f);
    let mut fmerit = merit(&f);
    let mut it = 0;
    while fnorm > ms.tol {
        it += 1;
        if it > ms.max_newton {
            return Err(Error::Shooting(format!(
                "multiple shooting did not converge: matching defect {fnorm:.3e} after {} Newton steps",
                ms.max_newton
            )));
        }
        let n = 2 * k - 1;
        let mut jac = Banded::new(n, 2, 1);
        for j in 0..k {
            let st = state(&x, j);
            let cols: Vec<(usize, bool)> =
                if j == 0 { vec![(0, false)] } else { vec![(2 * j - 1, true), (2 * j, false)] };
            for (col, is_value) in cols {
                let base = if is_value { st.0 } else { st.1 };
                let sc = if is_value { vscale } else { dscale };
                let step = 1e-7 * base.abs().max(1e-3 * sc);
                let pert = |h: f64| if is_value { (st.0 + h, st.1) } else { (st.0, st.1 + h) };
                // One-sided difference; the backward side when the forward one escapes.
                let (h, o) = match seg(j, pert(step), &ctl) {
                    Some(o) => (step, o),
                    None => (
                        -step,
                        seg(j, pert(-step), &ctl).ok_or_else(|| {
                            Error::Shooting(format!(
                                "segment [{}, {}] leaves the range under perturbation",
                                nodes[j],
                                nodes[j + 1]
                            ))
                        })?,
                    ),
                };
                let e = end_of(&o);
                let (e0, e1) = ends[j];
                jac.set(2 * j, col, (e.0 - e0) / h);
                if j + 1 < k {
                    jac.set(2 * j + 1, col, (e.1 - e1) / h);
                }
            }
            if j + 1 < k {
                jac.set(2 * j, 2 * j + 1, -1.0);
                jac.set(2 * j + 1, 2 * j + 2, -1.0);
            }
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = jac.solve(rhs).ok_or_else(|| Error::Shooting("singular matching Jacobian".into()))?;
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lam * d).collect();
            if let Some((ft, et)) = residual(&trial) {
                let (nt, mt) = (norm(&ft), merit(&ft));
                if mt < fmerit || nt <= ms.tol {
                    x = trial;
                    f = ft;
                    ends = et;
                    fnorm = nt;
                    fmerit = mt;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            return Err(Error::Shooting(format!("Newton step rejected at matching defect {fnorm:.3e}")));
        }
    }

    // Assemble the profile with the requested samples.
    let mut out: Option<ShootOutcome> = None;
    for j in 0..k {
        let mut c = controls.clone();
        c.stop_on_zero_crossing = false;
        c.stop_on_derivative_zero = false;
        c.extra_points = controls.extra_points.iter().cloned().filter(|&r| r > nodes[j] && r < nodes[j + 1]).collect();
        let o = seg(j, state(&x, j), &c).ok_or_else(|| Error::Shooting("segment failed on assembly".into()))?;
        match out.as_mut() {
            None => out = Some(o),
            Some(acc) => {
                let p = &mut acc.profile;
                p.r.extend_from_slice(&o.profile.r[1..]);
                p.u.extend_from_slice(&o.profile.u[1..]);
                p.du.extend_from_slice(&o.profile.du[1..]);
            }
        }
    }
    let mut outcome = out.unwrap();
    // Node values are the Newton unknowns; keep the matched values there.
    outcome.location = tau;
    outcome.profile.meta.location = Some(tau);
    let last = f.len() - 1;
    Ok(ShootResult { du0: x[0], mismatch: f[last], iterations: it, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::Terms;
    use crate::params::Params;

    #[test]
    fn laplace_two_point_problem() {
        // N = 3, u(1) = 1, u(2) = 0.75: u = 0.5 + 0.5/r, u′(1) = −0.5.
        let p = Params::new(3, 2.0, 1.5, 0.0).unwrap();
        let prob = OdeProblem::new(p, Terms::LAPLACE, (1.0, 2.0));
        let res = shoot(&prob, 1.0, (-5.0, 5.0), Target::Value(0.75), &Controls::default()).unwrap();
        assert!((res.du0 + 0.5).abs() < 1e-8, "{}", res.du0);
    }

    #[test]
    fn bracket_search_from_a_guess() {
        let p = Params::new(3, 2.0, 1.5, 0.0).unwrap();
        let prob = OdeProblem::new(p, Terms::LAPLACE, (1.0, 2.0));
        let res = shoot_near(&prob, 1.0, 3.0, 0.01, Target::Value(0.75), &Controls::default()).unwrap();
        assert!((res.du0 + 0.5).abs() < 1e-8, "{}", res.du0);
    }

    #[test]
    fn multiple_shooting_matches_laplace() {
        let p = Params::new(3, 2.0, 1.5, 0.0).unwrap();
        let prob = OdeProblem::new(p, Terms::LAPLACE, (1.0, 2.0));
        let guess = RadialProfile::from_fn(&[1.0, 1.5, 2.0], |r| (1.25 - 0.25 * r, -0.25, 0.0), "linear");
        let res =
            solve_two_point(&prob, 1.0, 0.75, &guess, &Controls::default(), &MultipleShooting::default()).unwrap();
        assert!((res.du0 + 0.5).abs() < 1e-9, "{}", res.du0);
        let (u, _) = res.outcome.profile.interpolate(1.6);
        assert!((u - (0.5 + 0.5 / 1.6)).abs() < 1e-9);
    }

    #[test]
    fn invalid_bracket_is_reported() {
        let p = Params::new(3, 2.0, 1.5, 0.0).unwrap();
        let prob = OdeProblem::new(p, Terms::LAPLACE, (1.0, 2.0));
        let err = shoot(&prob, 1.0, (1.0, 5.0), Target::Value(0.75), &Controls::default()).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
    }
}
