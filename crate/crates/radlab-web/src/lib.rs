//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string; the page in `www/` plots the arrays it finds there.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use radlab::closed_forms::theta_cap;
use radlab::ode::{integrate, Controls, OdeProblem, Terms};
use radlab::params::{constant_solution_roots, critical_mass_threshold};
use radlab::profile::log_grid;
use radlab::Params;

fn to_string(v: Result<Value, radlab::Error>) -> String {
    match v {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Profile from (u0, du0) at `from` to `to`.
pub fn profile_json(n: u32, p: f64, q: f64, m: f64, terms: &str, u0: f64, du0: f64, from: f64, to: f64) -> String {
    to_string((|| {
        let pr = Params::new(n, p, q, m)?;
        let terms = Terms::parse(terms).ok_or_else(|| radlab::Error::Problem(format!("unknown terms '{terms}'")))?;
        let out = integrate(&OdeProblem::new(pr, terms, (from, to)), (u0, du0), &Controls::default())?;
        Ok(json!({
            "termination": out.kind.label(),
            "location": out.location,
            "r": out.profile.r,
            "u": out.profile.u,
            "du": out.profile.du,
        }))
    })())
}

/// Θ(τ) on `points` log-spaced radii in (r0, tau_max], plus Θ(∞).
pub fn theta_json(n: u32, q: f64, m: f64, r0: f64, tau_max: f64, points: usize) -> String {
    to_string((|| {
        let pr = Params::new(n, 2.0, q, m)?;
        let taus = log_grid(r0 * 1.001, tau_max, points.max(2));
        let vals = taus.iter().map(|&t| Ok(theta_cap(&pr, r0, t)?.value)).collect::<radlab::Result<Vec<f64>>>()?;
        let limit = theta_cap(&pr, r0, f64::INFINITY).ok().map(|t| t.value);
        Ok(json!({ "tau": taus, "theta": vals, "theta_inf": limit }))
    })())
}

/// Constant solutions x of the critical-line equation as m sweeps [m_lo, m_hi].
pub fn roots_json(n: u32, p: f64, m_lo: f64, m_hi: f64, points: usize) -> String {
    to_string((|| {
        let q = 2.0 * p / (p + 1.0);
        let pr = Params::new(n, p, q, 1.0)?;
        let mu = critical_mass_threshold(&pr)?;
        let ms = log_grid(m_lo, m_hi, points.max(2));
        let mut rows = Vec::with_capacity(ms.len());
        for &m in &ms {
            rows.push(json!({ "m": m, "roots": constant_solution_roots(&Params::new(n, p, q, m)?)? }));
        }
        Ok(json!({ "q": q, "mu_star": mu, "rows": rows }))
    })())
}

#[wasm_bindgen]
pub fn profile(n: u32, p: f64, q: f64, m: f64, terms: &str, u0: f64, du0: f64, from: f64, to: f64) -> String {
    profile_json(n, p, q, m, terms, u0, du0, from, to)
}

#[wasm_bindgen]
pub fn theta_curve(n: u32, q: f64, m: f64, r0: f64, tau_max: f64, points: usize) -> String {
    theta_json(n, q, m, r0, tau_max, points)
}

#[wasm_bindgen]
pub fn roots_vs_m(n: u32, p: f64, m_lo: f64, m_hi: f64, points: usize) -> String {
    roots_json(n, p, m_lo, m_hi, points)
}
