//! Rate fitting, classification against the asymptotic catalog, residuals,
//! and numerical checks of the a priori estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Terms;
use crate::params::{compare, eikonal_constant, lane_emden_constant, riccati_constant, Comparison, Params};
use crate::profile::RadialProfile;

pub const EXPONENT_RTOL: f64 = 1e-2;
pub const CONSTANT_RTOL: f64 = 5e-2;
/// Minimum span of a fitting window, in decades.
pub const MIN_DECADES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Venue {
    SingularityAtZero,
    Infinity,
}

/// u ≈ C·r^{−λ}(|ln r|)^{−ν}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCorrection {
    pub nu: f64,
    #[serde(rename = "C_log")]
    pub c_log: f64,
    pub lambda: f64,
    pub max_log_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub lambda: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub window: (f64, f64),
    pub max_log_residual: f64,
    pub log_corrected: Option<LogCorrection>,
    /// The log-corrected fit reduced the residual at least tenfold.
    pub log_preferred: bool,
}

/// Least squares on centered columns by modified Gram–Schmidt.
/// Returns (intercept, coefficients, max |residual|).
fn lstsq(cols: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>, f64) {
    let n = y.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let ybar = mean(y);
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let mut q: Vec<Vec<f64>> = cols.iter().zip(&means).map(|(c, m)| c.iter().map(|x| x - m).collect()).collect();
    let k = q.len();
    let mut rmat = vec![vec![0.0; k]; k];
    for j in 0..k {
        for i in 0..j {
            let d: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            rmat[i][j] = d;
            let qi = q[i].clone();
            for (x, a) in q[j].iter_mut().zip(&qi) {
                *x -= d * a;
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        rmat[j][j] = norm;
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let qty: Vec<f64> = q.iter().map(|qi| qi.iter().zip(&yc).map(|(a, b)| a * b).sum()).collect();
    let mut coef = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|l| rmat[j][l] * coef[l]).sum();
        coef[j] = (qty[j] - s) / rmat[j][j];
    }
    let intercept = ybar - coef.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    let mut worst: f64 = 0.0;
    for i in 0..y.len() {
        let fit = intercept + (0..k).map(|j| coef[j] * cols[j][i]).sum::<f64>();
        worst = worst.max((y[i] - fit).abs());
    }
    (intercept, coef, worst)
}

/// The innermost (zero) or outermost (infinity) two decades of the profile.
pub fn default_window(profile: &RadialProfile, venue: Venue) -> (f64, f64) {
    let (lo, hi) = (profile.r_min(), profile.r_max());
    match venue {
        Venue::SingularityAtZero => (lo, (lo * 100.0).min(hi)),
        Venue::Infinity => ((hi / 100.0).max(lo), hi),
    }
}

fn window_samples(profile: &RadialProfile, window: (f64, f64)) -> Vec<usize> {
    let (a, b) = window;
    (0..profile.len()).filter(|&i| profile.r[i] >= a * (1.0 - 1e-12) && profile.r[i] <= b * (1.0 + 1e-12)).collect()
}

/// Power-law fit of u on the window. With `log_correction` the variant with
/// the ln|ln r| regressor is also computed.
pub fn fit_rate_with(profile: &RadialProfile, window: (f64, f64), log_correction: bool) -> Result<RateFit> {
    let (a, b) = window;
    if !(a > 0.0 && b > a) || (b / a).log10() < MIN_DECADES * (1.0 - 1e-9) {
        return Err(Error::Window(format!("window [{a}, {b}] spans fewer than {MIN_DECADES} decades")));
    }
    let idx = window_samples(profile, window);
    if idx.len() < 4 {
        return Err(Error::Window(format!("fewer than 4 samples in [{a}, {b}]")));
    }
    if idx.iter().any(|&i| !(profile.u[i] > 0.0)) {
        return Err(Error::Window("u > 0 on the fitting window".into()));
    }
    let lr: Vec<f64> = idx.iter().map(|&i| profile.r[i].ln()).collect();
    let lu: Vec<f64> = idx.iter().map(|&i| profile.u[i].ln()).collect();
    let (c0, k, res) = lstsq(&[lr.clone()], &lu);
    let mut fit = RateFit {
        lambda: -k[0],
        c: c0.exp(),
        window,
        max_log_residual: res,
        log_corrected: None,
        log_preferred: false,
    };
    if log_correction && lr.iter().all(|x| x.abs() > 1e-3) {
        let llr: Vec<f64> = lr.iter().map(|x| x.abs().ln()).collect();
        let (c1, k1, res1) = lstsq(&[lr, llr], &lu);
        fit.log_corrected = Some(LogCorrection { nu: -k1[1], c_log: c1.exp(), lambda: -k1[0], max_log_residual: res1 });
        fit.log_preferred = res1 * 10.0 <= res;
    }
    Ok(fit)
}

/// Rate fit on the default window of the venue; at a singularity with
/// p = N/(N−2) the log-corrected variant is attempted.
pub fn fit_rate(profile: &RadialProfile, params: &Params, venue: Venue, window: Option<(f64, f64)>) -> Result<RateFit> {
    let w = window.unwrap_or_else(|| default_window(profile, venue));
    let borderline =
        venue == Venue::SingularityAtZero && params.serrin().is_some_and(|s| compare(params.p, s) == Comparison::At);
    fit_rate_with(profile, w, borderline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "regular")]
    Regular,
    #[serde(rename = "J1_fundamental")]
    J1Fundamental,
    #[serde(rename = "J2_log_borderline")]
    J2LogBorderline,
    #[serde(rename = "J3_lane_emden_constant")]
    J3LaneEmdenConstant,
    #[serde(rename = "K_i_riccati")]
    KiRiccati,
    #[serde(rename = "K_ii_mass")]
    KiiMass,
    #[serde(rename = "D_i_growth")]
    DiGrowth,
    #[serde(rename = "D_ii_decay")]
    DiiDecay,
    #[serde(rename = "AST1_i")]
    Ast1I,
    #[serde(rename = "AST1_ii")]
    Ast1Ii,
    #[serde(rename = "AST2")]
    Ast2,
    #[serde(rename = "unclassified")]
    Unclassified,
}

impl CaseTag {
    pub fn label(&self) -> &'static str {
        match self {
            CaseTag::Regular => "regular",
            CaseTag::J1Fundamental => "J1_fundamental",
            CaseTag::J2LogBorderline => "J2_log_borderline",
            CaseTag::J3LaneEmdenConstant => "J3_lane_emden_constant",
            CaseTag::KiRiccati => "K_i_riccati",
            CaseTag::KiiMass => "K_ii_mass",
            CaseTag::DiGrowth => "D_i_growth",
            CaseTag::DiiDecay => "D_ii_decay",
            CaseTag::Ast1I => "AST1_i",
            CaseTag::Ast1Ii => "AST1_ii",
            CaseTag::Ast2 => "AST2",
            CaseTag::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub params: Params,
    pub venue: Venue,
    pub case: CaseTag,
    pub lambda: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub matched_constant: Option<f64>,
    /// Sup log-deviation of the matched profile on the window.
    pub confidence: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub reason: Option<String>,
}

fn exponent_matches(got: f64, want: f64) -> bool {
    (got - want).abs() <= EXPONENT_RTOL * want.abs().max(1.0)
}

fn constant_matches(got: f64, want: f64) -> bool {
    (got - want).abs() <= CONSTANT_RTOL * want.abs()
}

/// Sup of |ln u − ln(C r^{−λ}|ln r|^{−ν})| over the window.
fn log_deviation(profile: &RadialProfile, window: (f64, f64), c: f64, lambda: f64, nu: f64) -> f64 {
    window_samples(profile, window)
        .into_iter()
        .map(|i| {
            let r = profile.r[i];
            let model = c.ln() - lambda * r.ln() - nu * r.ln().abs().ln();
            (profile.u[i].ln() - model).abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest C ≥ 0 with u ≥ X r^{g}(1 − C/r) on the window, and the ratio
/// of u to X r^{g} at the outer end.
pub fn growth_domination(profile: &RadialProfile, window: (f64, f64), x: f64, g: f64) -> (f64, f64) {
    let mut c: f64 = 0.0;
    let mut ratio_end = f64::NAN;
    let mut r_end = 0.0;
    for i in window_samples(profile, window) {
        let r = profile.r[i];
        let lower = x * r.powf(g);
        c = c.max(r * (1.0 - profile.u[i] / lower));
        if r > r_end {
            r_end = r;
            ratio_end = profile.u[i] / lower;
        }
    }
    (c, ratio_end)
}

struct Candidate {
    tag: CaseTag,
    lambda: f64,
    nu: f64,
    constant: Option<f64>,
}

/// Matches the fitted rate against the theorem alternatives that apply to
/// `params` at `venue`; the first alternative whose exponent (and constant,
/// when the theorem fixes one) agrees wins.
pub fn classify(profile: &RadialProfile, params: &Params, venue: Venue) -> Classification {
    let mut out = Classification {
        params: *params,
        venue,
        case: CaseTag::Unclassified,
        lambda: None,
        c: None,
        matched_constant: None,
        confidence: None,
        window: None,
        reason: None,
    };
    let (n, p, q) = (params.nf(), params.p, params.q);
    let below = |x: f64, t: f64| compare(x, t) == Comparison::Below;
    let above = |x: f64, t: f64| compare(x, t) == Comparison::Above;
    let at = |x: f64, t: f64| compare(x, t) == Comparison::At;
    let crit = params.critical_q();
    let mut cands: Vec<Candidate> = Vec::new();
    let mut growth = false;

    match venue {
        Venue::SingularityAtZero => {
            let j = params.n >= 2
                && params.m > 0.0
                && p > 1.0
                && below(q, crit)
                && q > 1.0
                && params.sobolev().map_or(true, |s| below(p, s));
            let k =
                params.n >= 3 && params.m > 0.0 && p > 1.0 && below(p, q) && below(q, params.removability().unwrap());
            if j || k {
                cands.push(Candidate { tag: CaseTag::Regular, lambda: 0.0, nu: 0.0, constant: None });
            }
            if j {
                if params.n == 2 {
                    cands.push(Candidate { tag: CaseTag::J1Fundamental, lambda: 0.0, nu: -1.0, constant: None });
                } else {
                    let s = params.serrin().unwrap();
                    if below(p, s) {
                        cands.push(Candidate { tag: CaseTag::J1Fundamental, lambda: n - 2.0, nu: 0.0, constant: None });
                    } else if at(p, s) {
                        cands.push(Candidate {
                            tag: CaseTag::J2LogBorderline,
                            lambda: n - 2.0,
                            nu: (n - 2.0) / 2.0,
                            constant: Some(((n - 2.0) / 2f64.sqrt()).powf(n - 2.0)),
                        });
                    } else if let Ok(w0) = lane_emden_constant(params) {
                        cands.push(Candidate {
                            tag: CaseTag::J3LaneEmdenConstant,
                            lambda: params.alpha(),
                            nu: 0.0,
                            constant: Some(w0),
                        });
                    }
                }
            }
            if k {
                if let Ok(xi) = riccati_constant(params) {
                    cands.push(Candidate {
                        tag: CaseTag::KiRiccati,
                        lambda: params.beta(),
                        nu: 0.0,
                        constant: Some(xi),
                    });
                }
                cands.push(Candidate { tag: CaseTag::KiiMass, lambda: n - 2.0, nu: 0.0, constant: None });
            }
            if cands.is_empty() {
                out.reason = Some("no singularity alternative applies: requires 1 < q < 2p/(p+1) with 1 < p < (N+2)/(N-2), or N >= 3 with 1 < p < q < N/(N-1)".into());
                return out;
            }
        }
        Venue::Infinity => {
            if params.n >= 3 && params.m > 0.0 && q > 1.0 && below(q, crit) && below(q, params.removability().unwrap())
            {
                if let Ok(xi) = riccati_constant(params) {
                    cands.push(Candidate { tag: CaseTag::Ast2, lambda: params.beta(), nu: 0.0, constant: Some(xi) });
                }
            }
            if let (Some(s), Some(sob)) = (params.serrin(), params.sobolev()) {
                if params.m > 0.0 && above(p, s) && below(p, sob) && above(q, crit) {
                    if let Ok(w0) = lane_emden_constant(params) {
                        cands.push(Candidate {
                            tag: CaseTag::Ast1I,
                            lambda: params.alpha(),
                            nu: 0.0,
                            constant: Some(w0),
                        });
                    }
                    cands.push(Candidate { tag: CaseTag::Ast1Ii, lambda: n - 2.0, nu: 0.0, constant: None });
                }
            }
            if params.n >= 2 && p > 1.0 && !below(q, p) {
                if above(q, p) && params.m > 0.0 {
                    growth = true;
                    cands.push(Candidate {
                        tag: CaseTag::DiGrowth,
                        lambda: -q / (q - p),
                        nu: 0.0,
                        constant: eikonal_constant(params).ok(),
                    });
                }
                if params.serrin().is_some_and(|s| above(p, s)) {
                    cands.push(Candidate { tag: CaseTag::DiiDecay, lambda: f64::NAN, nu: 0.0, constant: None });
                }
            }
            if cands.is_empty() {
                out.reason = Some("no behaviour at infinity is catalogued for these parameters".into());
                return out;
            }
        }
    }

    let fit = match fit_rate_with(profile, default_window(profile, venue), cands.iter().any(|c| c.nu != 0.0)) {
        Ok(f) => f,
        Err(e) => {
            out.reason = Some(e.to_string());
            return out;
        }
    };
    out.window = Some(fit.window);
    out.lambda = Some(fit.lambda);
    out.c = Some(fit.c);

    for cand in &cands {
        let (lambda, c) = if cand.nu != 0.0 {
            match fit.log_corrected {
                Some(lc) if exponent_matches(lc.nu, cand.nu) => (lc.lambda, lc.c_log),
                _ => continue,
            }
        } else {
            (fit.lambda, fit.c)
        };
        match cand.tag {
            CaseTag::DiGrowth => {
                // Theorem D (i): growth at least like r^{q/(q−p)}, dominating
                // X_m r^{q/(q−p)}(1 − C/r) for some C.
                let x = cand.constant.unwrap();
                let g = -cand.lambda;
                if -lambda >= g * (1.0 - EXPONENT_RTOL) {
                    let (cdom, ratio_end) = growth_domination(profile, fit.window, x, g);
                    if cdom.is_finite() && ratio_end >= 1.0 - CONSTANT_RTOL {
                        out.case = cand.tag;
                        out.lambda = Some(lambda);
                        out.matched_constant = Some(cdom);
                        out.confidence = Some(fit.max_log_residual);
                        return out;
                    }
                }
            }
            CaseTag::DiiDecay => {
                // Decay between r^{−α} and r^{2−N}.
                let a = params.alpha();
                if lambda >= (n - 2.0) * (1.0 - EXPONENT_RTOL) && lambda <= a * (1.0 + EXPONENT_RTOL)
                    || lambda >= a * (1.0 - EXPONENT_RTOL) && lambda <= (n - 2.0) * (1.0 + EXPONENT_RTOL)
                {
                    out.case = cand.tag;
                    out.confidence = Some(fit.max_log_residual);
                    return out;
                }
            }
            _ => {
                if !exponent_matches(lambda, cand.lambda) {
                    continue;
                }
                if let Some(want) = cand.constant {
                    if !constant_matches(c, want) {
                        continue;
                    }
                }
                out.case = cand.tag;
                out.lambda = Some(lambda);
                out.c = Some(c);
                out.matched_constant = Some(c);
                out.confidence = Some(log_deviation(profile, fit.window, c, lambda, cand.nu));
                return out;
            }
        }
    }
    out.reason = Some(if growth {
        format!("fitted exponent {:.6} matches no alternative (growth branch checked)", fit.lambda)
    } else {
        format!("fitted exponent {:.6} matches no alternative", fit.lambda)
    });
    out
}

/// Pointwise residual of a profile in the radial operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualTrace {
    pub r: Vec<f64>,
    /// −u″ − ((N−1)/r)u′ + m|u′|^q − u^p over the active terms.
    pub raw: Vec<f64>,
    /// Largest active term magnitude at each radius.
    pub scale: Vec<f64>,
    pub normalized: Vec<f64>,
    pub sup_normalized: f64,
}

/// Residual of the active terms; u″ is exact when the profile carries it
/// and a five-point derivative of u′ otherwise.
pub fn residual(profile: &RadialProfile, params: &Params, terms: Terms) -> ResidualTrace {
    let d2 = if terms.diffusion { profile.second_derivative() } else { vec![0.0; profile.len()] };
    let n = params.nf();
    let mut tr = ResidualTrace {
        r: profile.r.clone(),
        raw: Vec::with_capacity(profile.len()),
        scale: Vec::with_capacity(profile.len()),
        normalized: Vec::with_capacity(profile.len()),
        sup_normalized: 0.0,
    };
    for i in 0..profile.len() {
        let (r, u, du) = (profile.r[i], profile.u[i], profile.du[i]);
        let mut parts = [0.0f64; 4];
        if terms.diffusion {
            parts[0] = -d2[i];
            parts[1] = -(n - 1.0) * du / r;
        }
        if terms.gradient {
            parts[2] = params.m * du.abs().powf(params.q);
        }
        if terms.source {
            parts[3] = -u.abs().powf(params.p - 1.0) * u;
        }
        let raw: f64 = parts.iter().sum();
        let scale = parts.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let norm = if scale > 0.0 { raw.abs() / scale } else { 0.0 };
        tr.raw.push(raw);
        tr.scale.push(scale);
        tr.normalized.push(norm);
        tr.sup_normalized = tr.sup_normalized.max(norm);
    }
    tr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Punctured,
    Exterior,
}

/// Inputs of the bootstrap lemma on a sampled grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInstance {
    pub d: f64,
    pub h: f64,
    #[serde(rename = "C_star")]
    pub c_star: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub eps0: f64,
    /// Increasing radii; the lemma's r₀ is r.last() (punctured) or r[0] (exterior).
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(rename = "Phi")]
    pub phi: Vec<f64>,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub bound_holds: bool,
    pub c1_observed: f64,
    /// (C*ε₀^{−h})^{1/(1−d)}·2^{h/(1−d)²}·M^{d/(1−d)}.
    pub c1_explicit: f64,
    pub trivial: bool,
}

/// Number of ε-halvings checked in the hypothesis.
const BOOTSTRAP_HALVINGS: usize = 12;
const BOOTSTRAP_RTOL: f64 = 1e-12;

fn loglog_interp(r: &[f64], v: &[f64], x: f64) -> Option<f64> {
    if x < r[0] * (1.0 - 1e-14) || x > r[r.len() - 1] * (1.0 + 1e-14) {
        return None;
    }
    let i = match r.partition_point(|&t| t <= x) {
        0 => 0,
        k if k >= r.len() => r.len() - 2,
        k => k - 1,
    };
    let t = (x.ln() - r[i].ln()) / (r[i + 1].ln() - r[i].ln());
    Some((v[i].ln() + t * (v[i + 1].ln() - v[i].ln())).exp())
}

/// Verifies the hypothesis on the grid, then the conclusion
/// y ≤ c₁Φ^{1/(1−d)} with the explicit constant of the proof.
pub fn bootstrap_check(inst: &BootstrapInstance) -> Result<BootstrapReport> {
    let BootstrapInstance { d, h, c_star, m, eps0, .. } = *inst;
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Hypothesis("0 < d < 1".into()));
    }
    if !(eps0 > 0.0 && eps0 <= 0.125) {
        return Err(Error::Hypothesis("eps0 in (0, 1/8]".into()));
    }
    if !(c_star > 0.0 && m > 0.0) {
        return Err(Error::Hypothesis("C* > 0 and M > 0".into()));
    }
    let (r, y, phi) = (&inst.r, &inst.y, &inst.phi);
    if r.len() < 2 || y.len() != r.len() || phi.len() != r.len() {
        return Err(Error::Hypothesis("r, y and Phi sampled on one grid of at least 2 points".into()));
    }
    if r.windows(2).any(|w| w[1] <= w[0]) || y.iter().chain(phi).any(|v| !(*v > 0.0)) {
        return Err(Error::Hypothesis("increasing radii and positive y, Phi".into()));
    }
    let r0 = match inst.side {
        Side::Punctured => r[r.len() - 1],
        Side::Exterior => r[0],
    };
    let in_range = |x: f64| match inst.side {
        Side::Punctured => x <= 0.5 * r0 * (1.0 + 1e-14),
        Side::Exterior => x >= 2.0 * r0 * (1.0 - 1e-14),
    };
    for i in 0..r.len() {
        let x = r[i];
        if !in_range(x) {
            continue;
        }
        // Φ doubling-type control on [r/2, r] (punctured) or [r, 3r/2] (exterior).
        let (lo, hi) = match inst.side {
            Side::Punctured => (0.5 * x, x),
            Side::Exterior => (x, 1.5 * x),
        };
        let mut peak: f64 = 0.0;
        for j in 0..r.len() {
            if r[j] >= lo && r[j] <= hi {
                peak = peak.max(phi[j]);
            }
        }
        for end in [lo, hi] {
            if let Some(v) = loglog_interp(r, phi, end) {
                peak = peak.max(v);
            }
        }
        if peak > m * phi[i] * (1.0 + BOOTSTRAP_RTOL) {
            return Err(Error::Hypothesis(format!("max Phi <= M Phi(r) fails at r = {x}")));
        }
        let mut eps = eps0;
        for _ in 0..=BOOTSTRAP_HALVINGS {
            let shifted = match inst.side {
                Side::Punctured => x * (1.0 - eps),
                Side::Exterior => x * (1.0 + eps),
            };
            if let Some(ys) = loglog_interp(r, y, shifted) {
                let rhs = c_star * eps.powf(-h) * phi[i] * ys.powf(d);
                if y[i] > rhs * (1.0 + BOOTSTRAP_RTOL) {
                    return Err(Error::Hypothesis(format!(
                        "y(r) <= C* eps^-h Phi(r) y^d(r(1 -/+ eps)) fails at r = {x}, eps = {eps}"
                    )));
                }
            }
            eps *= 0.5;
        }
    }
    let e = 1.0 / (1.0 - d);
    let c1 = (c_star * eps0.powf(-h)).powf(e) * 2f64.powf(h * e * e) * m.powf(d * e);
    let mut observed: f64 = 0.0;
    for i in 0..r.len() {
        if in_range(r[i]) {
            observed = observed.max(y[i] / phi[i].powf(e));
        }
    }
    let trivial = h <= 0.0;
    Ok(BootstrapReport {
        bound_holds: observed <= c1 * (1.0 + BOOTSTRAP_RTOL),
        c1_observed: observed,
        c1_explicit: c1,
        trivial,
    })
}

/// Fitted constants of the gradient estimate |u′| ≤ c·r^{e} and of its
/// integrated form on the extreme decades of the venue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundReport {
    pub holds: bool,
    /// Exponent e of the pointwise gradient bound.
    pub exponent: f64,
    /// sup |u′| r^{−e} over the window.
    pub c: f64,
    /// Same sup over the extreme decade and the adjacent one.
    pub c_extreme_decade: f64,
    pub c_adjacent_decade: f64,
    /// sup u / bound for the integrated estimate, when one applies.
    pub c_integrated: Option<f64>,
    pub c_integrated_extreme_decade: Option<f64>,
    pub c_integrated_adjacent_decade: Option<f64>,
}

const STABILITY_RTOL: f64 = 5e-2;

fn decade_sups<F: Fn(usize) -> f64>(profile: &RadialProfile, venue: Venue, f: F) -> (f64, f64, f64) {
    let (lo, hi) = (profile.r_min(), profile.r_max());
    let (extreme, adjacent) = match venue {
        Venue::SingularityAtZero => ((lo, lo * 10.0), (lo * 10.0, lo * 100.0)),
        Venue::Infinity => ((hi / 10.0, hi), (hi / 100.0, hi / 10.0)),
    };
    let sup = |w: (f64, f64)| window_samples(profile, w).into_iter().map(&f).fold(0.0, f64::max);
    let window = default_window(profile, venue);
    (sup(window), sup(extreme), sup(adjacent))
}

/// Checks |u′| ≤ c r^{−1/(q−1)} near 0 (|u′| ≤ c r^{p/(q−p)} near ∞) with a
/// constant that does not grow over the extreme decade, and the integrated
/// bounds on u that follow from it.
pub fn gradient_bound_check(profile: &RadialProfile, params: &Params, venue: Venue) -> Result<GradientBoundReport> {
    let (p, q) = (params.p, params.q);
    if !(q > p && p > 1.0) {
        return Err(Error::Domain("q > p > 1 for the gradient estimates".into()));
    }
    let (a, b) = (profile.r_min(), profile.r_max());
    if (b / a).log10() < MIN_DECADES * (1.0 - 1e-9) {
        return Err(Error::Window(format!("profile spans fewer than {MIN_DECADES} decades")));
    }
    let e = match venue {
        Venue::SingularityAtZero => -1.0 / (q - 1.0),
        Venue::Infinity => p / (q - p),
    };
    let (c, cx, ca) = decade_sups(profile, venue, |i| profile.du[i].abs() * profile.r[i].powf(-e));
    let bound: Option<Box<dyn Fn(f64) -> f64>> = match venue {
        Venue::SingularityAtZero if q > 2.0 => Some(Box::new(|_| 1.0)),
        Venue::SingularityAtZero if compare(q, 2.0) == Comparison::At => Some(Box::new(|r: f64| r.ln().abs() + 1.0)),
        Venue::SingularityAtZero => {
            let beta = params.beta();
            Some(Box::new(move |r: f64| r.powf(-beta)))
        }
        Venue::Infinity => {
            let g = q / (q - p);
            Some(Box::new(move |r: f64| r.powf(g)))
        }
    };
    let stable = |x: f64, y: f64| x.is_finite() && y.is_finite() && x <= y * (1.0 + STABILITY_RTOL) + f64::MIN_POSITIVE;
    let mut rep = GradientBoundReport {
        holds: stable(cx, ca),
        exponent: e,
        c,
        c_extreme_decade: cx,
        c_adjacent_decade: ca,
        c_integrated: None,
        c_integrated_extreme_decade: None,
        c_integrated_adjacent_decade: None,
    };
    if let Some(f) = bound {
        let (ci, cix, cia) = decade_sups(profile, venue, |i| profile.u[i].abs() / f(profile.r[i]));
        rep.c_integrated = Some(ci);
        rep.c_integrated_extreme_decade = Some(cix);
        rep.c_integrated_adjacent_decade = Some(cia);
        rep.holds &= stable(cix, cia);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::log_grid;

    fn power(c: f64, l: f64, a: f64, b: f64) -> RadialProfile {
        RadialProfile::from_fn(
            &log_grid(a, b, 200),
            |r| (c * r.powf(-l), -l * c * r.powf(-l - 1.0), l * (l + 1.0) * c * r.powf(-l - 2.0)),
            "synthetic",
        )
    }

    #[test]
    fn fit_recovers_power_law() {
        let f = fit_rate_with(&power(3.5, 1.25, 1e-3, 10.0), (1e-3, 10.0), false).unwrap();
        assert!((f.lambda - 1.25).abs() < 1e-10 && (f.c / 3.5 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn narrow_window_is_rejected() {
        let e = fit_rate_with(&power(1.0, 1.0, 1.0, 10.0), (1.0, 10.0), false).unwrap_err();
        assert!(matches!(e, Error::Window(_)));
    }

    #[test]
    fn zero_profile_has_zero_residual() {
        let p = Params::new(3, 2.0, 1.5, 1.0).unwrap();
        let prof = RadialProfile::from_fn(&log_grid(1.0, 10.0, 10), |_| (0.0, 0.0, 0.0), "zero");
        assert_eq!(residual(&prof, &p, Terms::FULL).sup_normalized, 0.0);
    }

    #[test]
    fn trivial_bootstrap_when_y_bounded() {
        let r = log_grid(1e-4, 1.0, 60);
        let inst = BootstrapInstance {
            d: 0.5,
            h: 0.0,
            c_star: 1.0,
            m: 1.0,
            eps0: 0.125,
            y: vec![1.0; r.len()],
            phi: vec![1.0; r.len()],
            r,
            side: Side::Punctured,
        };
        let rep = bootstrap_check(&inst).unwrap();
        assert!(rep.bound_holds && rep.trivial);
        assert!(rep.c1_observed <= rep.c1_explicit);
    }
}
