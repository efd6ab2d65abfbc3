use radlab::closed_forms::{
    blowup_slope_for_radius, riccati_increasing_map, singular_riccati_profile, QuadratureSpec, SingularRiccati,
};
use radlab::ode::monitor::{monitor, MonitorKind};
use radlab::ode::shoot::{shoot, Target};
use radlab::ode::{integrate, Controls, Coordinate, OdeProblem, OutcomeKind, Terms};
use radlab::params::{constant_solution_roots, eikonal_constant, lane_emden_constant};
use radlab::profile::{log_grid, RadialProfile};
use radlab::verification::fit_rate_with;
use radlab::Params;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn lane_emden_separable_solution_is_tracked() {
    let pr = Params::new(3, 4.0, 1.5, 0.0).unwrap();
    let w = lane_emden_constant(&pr).unwrap();
    let a = pr.alpha();
    let out =
        integrate(&OdeProblem::new(pr, Terms::LANE_EMDEN, (1.0, 100.0)), (w, -a * w), &Controls::default()).unwrap();
    assert_eq!(out.kind, OutcomeKind::ReachedEnd);
    let p = &out.profile;
    for i in 0..p.len() {
        assert!(rel(p.u[i], w * p.r[i].powf(-a)) <= 1e-7, "r = {}", p.r[i]);
    }
}

#[test]
fn critical_line_separable_solution_is_tracked() {
    let pr = Params::new(3, 2.0, 4.0 / 3.0, 3.0).unwrap();
    let a = pr.alpha();
    for x in constant_solution_roots(&pr).unwrap() {
        let out = integrate(&OdeProblem::new(pr, Terms::FULL, (1.0, 10.0)), (x, -a * x), &Controls::default()).unwrap();
        // The separable solution is unstable in r; track it over one decade.
        let p = &out.profile;
        assert_eq!(out.kind, OutcomeKind::ReachedEnd);
        for i in 0..p.len() {
            assert!(rel(p.u[i], x * p.r[i].powf(-a)) <= 1e-6, "x = {x}, r = {}", p.r[i]);
        }
    }
}

/// Error in tracking ω₀r^{−α} on [1, 10] and the number of accepted steps.
fn tracking_error(rtol: f64) -> (f64, usize) {
    let pr = Params::new(3, 4.0, 1.5, 0.0).unwrap();
    let w = lane_emden_constant(&pr).unwrap();
    let a = pr.alpha();
    let ctl = Controls { rtol, atol: 1e-300, max_step_frac: 10.0, ..Controls::default() };
    let out = integrate(&OdeProblem::new(pr, Terms::LANE_EMDEN, (1.0, 10.0)), (w, -a * w), &ctl).unwrap();
    let p = &out.profile;
    let last = p.len() - 1;
    (rel(p.u[last], w * 10f64.powf(-a)), p.len() - 1)
}

#[test]
fn empirical_order_is_at_least_four() {
    let (e1, n1) = tracking_error(1e-6);
    let (e2, n2) = tracking_error(1e-9);
    let order = (e1 / e2).ln() / (n2 as f64 / n1 as f64).ln();
    assert!(order >= 4.0, "order {order} ({e1:e}/{n1}, {e2:e}/{n2})");
}

#[test]
fn coordinates_agree() {
    let pr = Params::new(3, 3.0, 1.2, 0.5).unwrap();
    let (u0, du0) = (0.8, -0.3);
    let radii = log_grid(1.0, 20.0, 40);
    let ctl = Controls { extra_points: radii.clone(), ..Controls::default() };
    let a = integrate(&OdeProblem::new(pr, Terms::FULL, (1.0, 20.0)), (u0, du0), &ctl).unwrap();
    let b =
        integrate(&OdeProblem::new(pr, Terms::FULL, (1.0, 20.0)).with_coordinate(Coordinate::LogT), (u0, du0), &ctl)
            .unwrap();
    assert_eq!(a.kind, OutcomeKind::ReachedEnd);
    assert_eq!(b.kind, OutcomeKind::ReachedEnd);
    for &r in &radii {
        assert!(rel(a.profile.interpolate(r).0, b.profile.interpolate(r).0) <= 1e-7, "r = {r}");
    }
}

#[test]
fn critical_line_scaling_invariance() {
    let pr = Params::new(3, 3.0, 1.5, 0.7).unwrap();
    let a = pr.alpha();
    let (u0, du0) = (0.6, -0.2);
    let radii = log_grid(1.0, 5.0, 30);
    let ctl = Controls { extra_points: radii.clone(), ..Controls::default() };
    let base = integrate(&OdeProblem::new(pr, Terms::FULL, (1.0, 5.0)), (u0, du0), &ctl).unwrap();
    for l in [0.5, 2.0, 10.0] {
        // T_ℓ[u](r) = ℓ^α u(ℓr), started at r = 1/ℓ.
        let scaled: Vec<f64> = radii.iter().map(|r| r / l).collect();
        let c = Controls { extra_points: scaled.clone(), ..Controls::default() };
        let prob = OdeProblem::new(pr, Terms::FULL, (1.0 / l, 5.0 / l));
        let out = integrate(&prob, (l.powf(a) * u0, l.powf(a + 1.0) * du0), &c).unwrap();
        for &r in &scaled {
            let want = l.powf(a) * base.profile.interpolate(l * r).0;
            assert!(rel(out.profile.interpolate(r).0, want) <= 1e-7, "l = {l}, r = {r}");
        }
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let pr = Params::new(3, 2.0, 1.7, 1.3).unwrap();
    let prob = OdeProblem::new(pr, Terms::FULL, (1.0, 50.0));
    let a = integrate(&prob, (1.0, 0.3), &Controls::default()).unwrap();
    let b = integrate(&prob, (1.0, 0.3), &Controls::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.profile.to_csv("{}"), b.profile.to_csv("{}"));
}

#[test]
fn shooting_recovers_the_closed_form_slope() {
    let pr = Params::new(3, 2.0, 1.5, 1.0).unwrap();
    let (r0, tau, a, b) = (1.0, 2.0, 1.0, 2.5);
    let x_tau = blowup_slope_for_radius(&pr, r0, tau).unwrap();
    let res =
        shoot(&OdeProblem::new(pr, Terms::RICCATI, (r0, tau)), a, (0.0, x_tau), Target::Value(b), &Controls::default())
            .unwrap();
    // Inversion of T_X(τ) = b − a by bisection on the closed form.
    let (mut lo, mut hi) = (0.0, x_tau * (1.0 - 1e-12));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if riccati_increasing_map(&QuadratureSpec::new(pr, r0, mid), tau).unwrap() < b - a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!(rel(res.du0, 0.5 * (lo + hi)) <= 1e-8, "{} vs {}", res.du0, 0.5 * (lo + hi));

    let flat =
        shoot(&OdeProblem::new(pr, Terms::RICCATI, (r0, tau)), a, (-1.0, 1.0), Target::Value(a), &Controls::default())
            .unwrap();
    assert!(flat.du0.abs() < 1e-9);
}

#[test]
fn exterior_growth_exponent() {
    // Inward integration from eikonal data is stable for the growing branch.
    let pr = Params::new(3, 1.05, 2.0, 1.0).unwrap();
    let x = eikonal_constant(&pr).unwrap();
    let g = 2.0 / 0.95;
    let big = 3000.0;
    let prob = OdeProblem::new(pr, Terms::FULL, (big, 1.0));
    let out = integrate(&prob, (x * big.powf(g), x * g * big.powf(g - 1.0)), &Controls::default()).unwrap();
    let prof = out.profile.ascending();
    let inner = fit_rate_with(&prof, (3.0, 300.0), false).unwrap();
    let outer = fit_rate_with(&prof, (10.0, 1000.0), false).unwrap();
    assert!((-outer.lambda - g).abs() <= 1e-2 * g, "exponent {}", -outer.lambda);
    assert!((outer.lambda + g).abs() < (inner.lambda + g).abs());
    let f0 = monitor(&prof, &pr, MonitorKind::FEpsilon, 0.0);
    assert!(f0.final_sign().is_some());
}

#[test]
fn monitor_examples() {
    // F₀ vanishes on the exact eikonal profile.
    let pr = Params::new(3, 2.0, 4.0, 1.0).unwrap();
    let x = eikonal_constant(&pr).unwrap();
    let prof = RadialProfile::from_fn(&log_grid(1.0, 1e3, 100), |r| (x * r * r, 2.0 * x * r, 2.0 * x), "eikonal");
    let tr = monitor(&prof, &pr, MonitorKind::FEpsilon, 0.0);
    for (v, r) in tr.values.iter().zip(&tr.r) {
        assert!(v.abs() <= 1e-10 * (x * r * r).powi(2));
    }

    // E is nonincreasing along u_∞* with the source off (p only enters E).
    let pr = Params::new(3, 2.0, 1.4, 1.0).unwrap();
    let sr = SingularRiccati::new(pr, f64::INFINITY);
    let radii = log_grid(0.1, 100.0, 200);
    let prof = RadialProfile::from_fn(
        &radii,
        |r| {
            let (u, du) = singular_riccati_profile(&sr, r).unwrap();
            (u, du, 0.0)
        },
        "u_inf",
    );
    let tr = monitor(&prof, &pr, MonitorKind::EnergyE, 0.0);
    assert!(tr.max_increase() <= 0.0);
}
