//! Sampled radial profiles (r, u, u′) and their serialization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::params::Params;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub params: Option<Params>,
    /// Active operators, e.g. "diffusion+gradient+source".
    pub terms: Option<String>,
    /// What produced the profile (integrator, closed form, construction, synthetic).
    pub origin: String,
    pub termination: Option<String>,
    pub location: Option<f64>,
}

/// Samples of a radial function with its derivative. An optional exact
/// second derivative bypasses numerical differentiation in residual checks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2u: Option<Vec<f64>>,
    pub meta: ProfileMeta,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>, meta: ProfileMeta) -> Self {
        RadialProfile { r, u, du, d2u: None, meta }
    }

    /// Samples an analytic profile given as r ↦ (u, u′, u″).
    pub fn from_fn<F: Fn(f64) -> (f64, f64, f64)>(radii: &[f64], f: F, origin: &str) -> Self {
        let (mut u, mut du, mut d2u) = (Vec::new(), Vec::new(), Vec::new());
        for &r in radii {
            let (a, b, c) = f(r);
            u.push(a);
            du.push(b);
            d2u.push(c);
        }
        RadialProfile {
            r: radii.to_vec(),
            u,
            du,
            d2u: Some(d2u),
            meta: ProfileMeta { origin: origin.to_string(), ..Default::default() },
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Radii sorted ascending regardless of integration direction.
    pub fn ascending(&self) -> RadialProfile {
        if self.r.len() < 2 || self.r[0] < self.r[1] {
            return self.clone();
        }
        let mut out = self.clone();
        out.r.reverse();
        out.u.reverse();
        out.du.reverse();
        if let Some(d) = out.d2u.as_mut() {
            d.reverse();
        }
        out
    }

    pub fn r_min(&self) -> f64 {
        self.r.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn r_max(&self) -> f64 {
        self.r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cubic Hermite interpolation of (u, u′) at `x`, clamped to the range.
    pub fn interpolate(&self, x: f64) -> (f64, f64) {
        let n = self.r.len();
        assert!(n > 0, "empty profile");
        if n == 1 {
            return (self.u[0], self.du[0]);
        }
        let asc = self.r[0] < self.r[1];
        // Index i with x between r[i] and r[i+1].
        let key = |i: usize| if asc { self.r[i] } else { -self.r[i] };
        let kx = if asc { x } else { -x };
        if kx <= key(0) {
            return (self.u[0], self.du[0]);
        }
        if kx >= key(n - 1) {
            return (self.u[n - 1], self.du[n - 1]);
        }
        let (mut lo, mut hi) = (0, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if key(mid) <= kx {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hermite(self.r[lo], self.r[hi], self.u[lo], self.u[hi], self.du[lo], self.du[hi], x)
    }

    /// u″ at every sample: exact when available, otherwise a five-point
    /// finite-difference derivative of u′ on the (nonuniform) grid.
    pub fn second_derivative(&self) -> Vec<f64> {
        if let Some(d) = &self.d2u {
            return d.clone();
        }
        let n = self.r.len();
        let mut out = vec![0.0; n];
        if n < 2 {
            return out;
        }
        let width = 5.min(n);
        for i in 0..n {
            let lo = i.saturating_sub(width / 2).min(n - width);
            let xs = &self.r[lo..lo + width];
            let w = fornberg_first_derivative(self.r[i], xs);
            out[i] = w.iter().zip(&self.du[lo..lo + width]).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// CSV with a `#`-prefixed header block carrying `header_json`.
    pub fn to_csv(&self, header_json: &str) -> String {
        self.to_csv_with(header_json, 17)
    }

    /// As [`RadialProfile::to_csv`] with `digits` significant digits.
    pub fn to_csv_with(&self, header_json: &str, digits: usize) -> String {
        let mut s = String::new();
        for line in header_json.lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str("r,u,du\n");
        for i in 0..self.r.len() {
            let f = |x: f64| fmt_sig(x, digits);
            let _ = writeln!(s, "{},{},{}", f(self.r[i]), f(self.u[i]), f(self.du[i]));
        }
        s
    }

    /// Parses the CSV written by [`RadialProfile::to_csv`].
    pub fn from_csv(text: &str) -> Result<RadialProfile, String> {
        let mut p = RadialProfile::default();
        let mut seen_header = false;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_header {
                if line != "r,u,du" {
                    return Err(format!("line {}: expected header r,u,du", ln + 1));
                }
                seen_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(format!("line {}: expected 3 columns", ln + 1));
            }
            let parse = |c: &str| c.parse::<f64>().map_err(|e| format!("line {}: {e}", ln + 1));
            p.r.push(parse(cols[0])?);
            p.u.push(parse(cols[1])?);
            p.du.push(parse(cols[2])?);
        }
        p.meta.origin = "csv".into();
        Ok(p)
    }
}

/// Seventeen significant digits, round-trip exact.
pub fn fmt17(x: f64) -> String {
    fmt_sig(x, 17)
}

/// Scientific notation with `digits` significant digits (at least one).
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{x:.*e}", digits.max(1) - 1)
    } else {
        format!("{x}")
    }
}

/// Cubic Hermite interpolant of (y, y′) on [x0, x1] evaluated at x.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let dy = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (y, dy)
}

/// Weights of the first derivative at `x0` from values at `xs` (Fornberg).
pub fn fornberg_first_derivative(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative order k (k ≤ 1).
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// `n` log-spaced radii from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_polynomial_derivative() {
        let xs = [1.0, 1.1, 1.25, 1.3, 1.5];
        let w = fornberg_first_derivative(1.25, &xs);
        let f = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let d: f64 = w.iter().zip(xs.iter()).map(|(a, &x)| a * f(x)).sum();
        let exact = 4.0 * 1.25f64.powi(3) - 6.0 * 1.25f64.powi(2) + 1.0;
        assert!((d - exact).abs() < 1e-11);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| (x * x * x - x, 3.0 * x * x - 1.0);
        let (a, b) = (0.5, 2.0);
        let (y, dy) = hermite(a, b, f(a).0, f(b).0, f(a).1, f(b).1, 1.3);
        assert!((y - f(1.3).0).abs() < 1e-14);
        assert!((dy - f(1.3).1).abs() < 1e-13);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p =
            RadialProfile::new(vec![1.0, 2.0 / 3.0], vec![0.1, 1e-300], vec![-1.0 / 7.0, 3e200], Default::default());
        let back = RadialProfile::from_csv(&p.to_csv("{\"a\": 1}")).unwrap();
        assert_eq!(back.r, p.r);
        assert_eq!(back.u, p.u);
        assert_eq!(back.du, p.du);
    }

    #[test]
    fn interpolation_in_both_orders() {
        let r = log_grid(1.0, 10.0, 200);
        let p = RadialProfile::from_fn(&r, |x| (x.powf(-0.5), -0.5 * x.powf(-1.5), 0.0), "t");
        let (u, du) = p.interpolate(3.3);
        assert!((u - 3.3f64.powf(-0.5)).abs() < 1e-9);
        assert!((du + 0.5 * 3.3f64.powf(-1.5)).abs() < 1e-7);
        let mut rev = p.clone();
        rev.r.reverse();
        rev.u.reverse();
        rev.du.reverse();
        let (a, b) = (rev.interpolate(3.3), p.interpolate(3.3));
        assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-14);
    }
}
