use proptest::prelude::*;

use radlab::closed_forms::{default_c_n, singular_riccati_profile, SingularRiccati};
use radlab::ode::shoot::{shoot, Target};
use radlab::ode::{integrate, Controls, OdeProblem, OutcomeKind, Terms};
use radlab::params::{eikonal_constant, lane_emden_constant, riccati_constant};
use radlab::profile::{log_grid, RadialProfile};
use radlab::verification::{
    bootstrap_check, classify, fit_rate, fit_rate_with, gradient_bound_check, residual, BootstrapInstance, CaseTag,
    Side, Venue,
};
use radlab::{Error, Params};

fn power(radii: &[f64], c: f64, lambda: f64) -> RadialProfile {
    RadialProfile::from_fn(
        radii,
        |r| {
            let u = c * r.powf(-lambda);
            (u, -lambda * u / r, lambda * (lambda + 1.0) * u / (r * r))
        },
        "power",
    )
}

fn perturbed(p: &RadialProfile) -> RadialProfile {
    let mut q = p.clone();
    for i in 0..q.len() {
        let r = q.r[i];
        let (s, ds) = (1.0 + 1e-4 * r.ln().sin(), 1e-4 * r.ln().cos() / r);
        q.du[i] = p.du[i] * s + p.u[i] * ds;
        q.u[i] = p.u[i] * s;
    }
    q.d2u = None;
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn fit_recovers_synthetic_power_laws(lambda in -5.0f64..5.0, lc in -3.0f64..3.0) {
        let c = 10f64.powf(lc);
        let prof = power(&log_grid(1.0, 1e3, 200), c, lambda);
        let fit = fit_rate_with(&prof, (1.0, 1e3), false).unwrap();
        prop_assert!((fit.lambda - lambda).abs() <= 1e-8 * lambda.abs().max(1.0));
        prop_assert!((fit.c - c).abs() <= 1e-8 * c);
    }
}

#[test]
fn fit_examples() {
    let pr = Params::new(3, 4.0, 1.5, 1.0).unwrap();
    let w = lane_emden_constant(&pr).unwrap();
    let fit = fit_rate(&power(&log_grid(1e-6, 1.0, 300), w, pr.alpha()), &pr, Venue::SingularityAtZero, None).unwrap();
    assert!((fit.lambda - pr.alpha()).abs() <= 1e-6 && (fit.c - w).abs() <= 1e-6);

    let pr = Params::new(3, 1.1, 1.25, 1.0).unwrap();
    let xi = riccati_constant(&pr).unwrap();
    let fit = fit_rate(&power(&log_grid(1e-6, 1.0, 300), xi, pr.beta()), &pr, Venue::SingularityAtZero, None).unwrap();
    assert!((fit.lambda - pr.beta()).abs() <= 1e-9);
}

#[test]
fn finite_mass_profile_has_the_fundamental_rate() {
    let pr = Params::new(3, 1.05, 1.1, 10.0).unwrap();
    let k = 0.3;
    let sr = SingularRiccati::new(pr, k);
    let prof = RadialProfile::from_fn(
        &log_grid(1e-12, 1e-10, 120),
        |r| {
            let (u, du) = singular_riccati_profile(&sr, r).unwrap();
            (u, du, 0.0)
        },
        "u_k",
    );
    let fit = fit_rate_with(&prof, (1e-12, 1e-10), false).unwrap();
    assert!((fit.lambda - 1.0).abs() <= 1e-3, "lambda {}", fit.lambda);
    let want = default_c_n(3) * k;
    assert!((fit.c - want).abs() <= 1e-3 * want, "C {} vs {want}", fit.c);
}

fn catalog() -> Vec<(Params, RadialProfile, Venue, CaseTag, Option<f64>)> {
    let mut out = Vec::new();
    let pr = Params::new(3, 1.1, 1.25, 1.0).unwrap();
    let xi = riccati_constant(&pr).unwrap();
    out.push((
        pr,
        power(&log_grid(1e-8, 1.0, 400), xi, pr.beta()),
        Venue::SingularityAtZero,
        CaseTag::KiRiccati,
        Some(xi),
    ));

    let pr = Params::new(3, 2.0, 3.0, 1.0).unwrap();
    let x = eikonal_constant(&pr).unwrap();
    let g = 3.0;
    out.push((pr, power(&log_grid(1.0, 1e6, 400), x, -g), Venue::Infinity, CaseTag::DiGrowth, None));

    let pr = Params::new(3, 3.0, 1.2, 1.0).unwrap();
    let borderline = RadialProfile::from_fn(
        &log_grid(1e-6, 1e-1, 400),
        |r| {
            let l = -r.ln();
            let u = std::f64::consts::FRAC_1_SQRT_2 / (r * l.sqrt());
            (u, u * (-1.0 / r + 0.5 / (r * l)), 0.0)
        },
        "log_borderline",
    );
    out.push((
        pr,
        borderline,
        Venue::SingularityAtZero,
        CaseTag::J2LogBorderline,
        Some(std::f64::consts::FRAC_1_SQRT_2),
    ));
    out
}

#[test]
fn catalog_examples_classify() {
    for (pr, prof, venue, tag, constant) in catalog() {
        let cl = classify(&prof, &pr, venue);
        assert_eq!(cl.case, tag, "{:?}", cl.reason);
        if let Some(c) = constant {
            let got = cl.matched_constant.unwrap();
            assert!((got - c).abs() <= 1e-6 * c, "{got} vs {c}");
        }
    }
}

#[test]
fn classification_is_stable_under_small_perturbations() {
    for (pr, prof, venue, tag, _) in catalog() {
        assert_eq!(classify(&perturbed(&prof), &pr, venue).case, tag);
    }
}

#[test]
fn outside_every_regime_is_unclassified() {
    let pr = Params::new(3, 2.0, 1.8, 1.0).unwrap();
    let cl = classify(&power(&log_grid(1e-6, 1.0, 100), 1.0, 0.5), &pr, Venue::SingularityAtZero);
    assert_eq!(cl.case, CaseTag::Unclassified);
    assert!(cl.reason.is_some());
}

#[test]
fn residual_examples() {
    let pr = Params::new(3, 4.0, 1.5, 1.0).unwrap();
    let w = lane_emden_constant(&pr).unwrap();
    let tr = residual(&power(&log_grid(1e-3, 1e3, 200), w, pr.alpha()), &pr, Terms::LANE_EMDEN);
    assert!(tr.sup_normalized <= 1e-8);

    let pr = Params::new(3, 2.0, 3.0, 1.0).unwrap();
    let x = eikonal_constant(&pr).unwrap();
    let tr = residual(&power(&log_grid(1.0, 1e3, 200), x, -3.0), &pr, Terms::EIKONAL);
    assert!(tr.sup_normalized <= 1e-10);
}

#[test]
fn integrated_profiles_have_small_residual() {
    for (pr, init) in [
        (Params::new(3, 2.0, 1.5, 1.0).unwrap(), (1.0, -0.5)),
        (Params::new(4, 3.0, 2.5, 0.5).unwrap(), (0.5, 0.1)),
        (Params::new(2, 1.5, 1.2, 2.0).unwrap(), (2.0, -1.0)),
    ] {
        let out = integrate(&OdeProblem::new(pr, Terms::FULL, (1.0, 3.0)), init, &Controls::default()).unwrap();
        let tr = residual(&out.profile, &pr, Terms::FULL);
        assert!(tr.sup_normalized <= 1e-5, "{}", tr.sup_normalized);
    }
}

/// Decaying exterior solution from small data: the slope separating
/// solutions that cross zero from those that level off.
fn decaying_exterior(pr: Params) -> RadialProfile {
    let u0 = 1e-2;
    let prob = OdeProblem::new(pr, Terms::FULL, (1.0, 1e6));
    let res = shoot(&prob, u0, (-10.0 * u0, -u0), Target::Value(0.0), &Controls::default()).unwrap();
    assert_eq!(res.outcome.kind, OutcomeKind::ReachedEnd);
    res.outcome.profile
}

#[test]
fn decay_rates_respect_the_a_priori_exponents() {
    // 2p/(p+1) < q < p: decay at least r^{−α}.
    let pr = Params::new(3, 4.0, 2.0, 1.0).unwrap();
    let fit = fit_rate(&decaying_exterior(pr), &pr, Venue::Infinity, Some((100.0, 1e4))).unwrap();
    assert!(fit.lambda >= pr.alpha() - 1e-2, "lambda {}", fit.lambda);

    // 1 < q ≤ 2p/(p+1): decay at least r^{−q/(p−q)}.
    let pr = Params::new(3, 4.0, 1.3, 1.0).unwrap();
    let fit = fit_rate(&decaying_exterior(pr), &pr, Venue::Infinity, Some((100.0, 1e4))).unwrap();
    assert!(fit.lambda >= 1.3 / 2.7 - 1e-2, "lambda {}", fit.lambda);
}

#[test]
fn bootstrap_power_family() {
    let (s, d) = (1.5, 0.4);
    let r = log_grid(1e-4, 1.0, 300);
    let inst = BootstrapInstance {
        d,
        h: 1.0,
        c_star: 1.0,
        m: 2f64.powf(s * (1.0 - d)),
        eps0: 0.125,
        y: r.iter().map(|x| x.powf(-s)).collect(),
        phi: r.iter().map(|x| x.powf(-s * (1.0 - d))).collect(),
        r,
        side: Side::Punctured,
    };
    let rep = bootstrap_check(&inst).unwrap();
    assert!(rep.bound_holds && !rep.trivial);
    assert!((rep.c1_observed - 1.0).abs() <= 1e-9 && rep.c1_observed <= rep.c1_explicit);

    let trivial = BootstrapInstance { h: 0.0, ..inst.clone() };
    let rep = bootstrap_check(&trivial).unwrap();
    assert!(rep.trivial && rep.bound_holds);

    let r = log_grid(1.0, 1e3, 100);
    let bounded = BootstrapInstance {
        y: r.iter().map(|x| 2.0 + (x.ln()).sin()).collect(),
        phi: vec![1.0; r.len()],
        r,
        c_star: 3.0,
        m: 1.0,
        side: Side::Exterior,
        ..inst.clone()
    };
    let rep = bootstrap_check(&bounded).unwrap();
    assert!(rep.bound_holds && rep.c1_observed <= 3.0);

    let broken = BootstrapInstance { c_star: 0.5, h: 0.0, ..inst };
    assert!(matches!(bootstrap_check(&broken), Err(Error::Hypothesis(_))));
}

#[test]
fn gradient_bounds() {
    let pr = Params::new(3, 1.05, 1.1, 10.0).unwrap();
    let sr = SingularRiccati::new(pr, 0.3);
    let prof = RadialProfile::from_fn(
        &log_grid(1e-8, 1e-2, 200),
        |r| {
            let (u, du) = singular_riccati_profile(&sr, r).unwrap();
            (u, du, 0.0)
        },
        "u_k",
    );
    assert!(gradient_bound_check(&prof, &pr, Venue::SingularityAtZero).unwrap().holds);

    // Growing branch from inward integration of eikonal data.
    let pr = Params::new(3, 1.05, 2.0, 1.0).unwrap();
    let (x, g, big) = (eikonal_constant(&pr).unwrap(), 2.0 / 0.95, 3000.0);
    let out = integrate(
        &OdeProblem::new(pr, Terms::FULL, (big, 5.0)),
        (x * big.powf(g), x * g * big.powf(g - 1.0)),
        &Controls::default(),
    )
    .unwrap();
    assert!(gradient_bound_check(&out.profile.ascending(), &pr, Venue::Infinity).unwrap().holds);

    let flat = RadialProfile::from_fn(&log_grid(1.0, 1e3, 50), |_| (1.0, 0.0, 0.0), "constant");
    assert!(gradient_bound_check(&flat, &pr, Venue::Infinity).unwrap().holds);
}

#[test]
fn short_window_is_an_error() {
    let prof = power(&log_grid(1.0, 50.0, 50), 1.0, 1.0);
    assert!(matches!(fit_rate_with(&prof, (1.0, 50.0), false), Err(Error::Window(_))));
}
