//! Energy-type monitors evaluated along a profile.
//!
//! * `energy_E` = v′²/2 + v^{p+1}/(p+1), nonincreasing along decreasing
//!   solutions of the full equation.
//! * `F_epsilon` = v^p − (1+ε)m|v′|^q, whose sign persists once it turns
//!   positive on an increasing solution.

use serde::{Deserialize, Serialize};

use crate::params::Params;
use crate::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonitorKind {
    #[serde(rename = "energy_E")]
    EnergyE,
    #[serde(rename = "F_epsilon")]
    FEpsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorTrace {
    pub kind: MonitorKind,
    pub epsilon: f64,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    /// Radii (interpolated linearly) where the trace changes sign.
    pub sign_changes: Vec<f64>,
}

impl MonitorTrace {
    /// Largest increase between consecutive samples in the direction of
    /// increasing r (0 for a nonincreasing trace).
    pub fn max_increase(&self) -> f64 {
        let mut idx: Vec<usize> = (0..self.r.len()).collect();
        idx.sort_by(|&a, &b| self.r[a].partial_cmp(&self.r[b]).unwrap());
        idx.windows(2).map(|w| self.values[w[1]] - self.values[w[0]]).fold(0.0, f64::max)
    }

    /// Sign of the trace after the last sign change, if it is constant there.
    pub fn final_sign(&self) -> Option<f64> {
        let last = *self.sign_changes.last().unwrap_or(&f64::NEG_INFINITY);
        let mut sign = None;
        for (r, v) in self.r.iter().zip(&self.values) {
            if *r > last && *v != 0.0 {
                match sign {
                    None => sign = Some(v.signum()),
                    Some(s) if s != v.signum() => return None,
                    _ => {}
                }
            }
        }
        sign
    }
}

pub fn monitor(profile: &RadialProfile, params: &Params, kind: MonitorKind, epsilon: f64) -> MonitorTrace {
    let p = params.p;
    let asc = profile.ascending();
    let values: Vec<f64> = asc
        .u
        .iter()
        .zip(&asc.du)
        .map(|(&v, &dv)| match kind {
            MonitorKind::EnergyE => 0.5 * dv * dv + v.abs().powf(p + 1.0) / (p + 1.0),
            MonitorKind::FEpsilon => v.abs().powf(p) - (1.0 + epsilon) * params.m * dv.abs().powf(params.q),
        })
        .collect();
    let mut sign_changes = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&r, &v) in asc.r.iter().zip(&values) {
        if v == 0.0 {
            continue;
        }
        if let Some((r0, v0)) = prev {
            if v0.signum() != v.signum() {
                sign_changes.push(r0 + (r - r0) * v0 / (v0 - v));
            }
        }
        prev = Some((r, v));
    }
    MonitorTrace { kind, epsilon, r: asc.r, values, sign_changes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::eikonal_constant;
    use crate::profile::log_grid;

    #[test]
    fn eikonal_profile_zeroes_f0() {
        let params = Params::new(3, 2.0, 4.0, 1.0).unwrap();
        let x = eikonal_constant(&params).unwrap();
        let g = params.q / (params.q - params.p);
        let prof =
            RadialProfile::from_fn(&log_grid(1.0, 100.0, 50), |r| (x * r.powf(g), x * g * r.powf(g - 1.0), 0.0), "t");
        let tr = monitor(&prof, &params, MonitorKind::FEpsilon, 0.0);
        for (v, u) in tr.values.iter().zip(&prof.u) {
            assert!(v.abs() <= 1e-10 * u.powf(params.p));
        }
    }

    #[test]
    fn sign_change_is_interpolated() {
        let params = Params::new(1, 2.0, 2.0, 1.0).unwrap();
        // v = 1, v′ = r − 1: F₀ = 1 − (r−1)², zero at r = 2.
        let r = [1.0, 1.5, 2.5, 3.0];
        let prof = RadialProfile::from_fn(&r, |r| (1.0, r - 1.0, 1.0), "t");
        let tr = monitor(&prof, &params, MonitorKind::FEpsilon, 0.0);
        assert_eq!(tr.sign_changes.len(), 1);
        assert!(tr.sign_changes[0] > 1.5 && tr.sign_changes[0] < 2.5);
        assert_eq!(tr.final_sign(), Some(-1.0));
    }
}
