use radlab::closed_forms::*;
use radlab::ode::{integrate, Controls, OdeProblem, OutcomeKind, Terms};
use radlab::params::riccati_constant;
use radlab::Params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prm(n: u32, q: f64, m: f64) -> Params {
    Params::new(n, 2.0, q, m).unwrap()
}

/// Classical RK4 on (w, T) with w′ = ±m r^{(1−q)(N−1)}|w|^q, T′ = w r^{1−N},
/// w(r₀) = r₀^{N−1}X; Richardson-extrapolated over n and 2n steps.
fn rk4_increase(p: &Params, r0: f64, x: f64, r: f64, n: usize) -> f64 {
    let run = |steps: usize| {
        let nn = p.nf();
        let f = |s: f64, w: f64| -> [f64; 2] {
            [p.m * s.powf((1.0 - p.q) * (nn - 1.0)) * w.abs().powf(p.q), w * s.powf(1.0 - nn)]
        };
        let h = (r - r0) / steps as f64;
        let (mut w, mut t) = (r0.powf(nn - 1.0) * x, 0.0);
        for i in 0..steps {
            let s = r0 + h * i as f64;
            let k1 = f(s, w);
            let k2 = f(s + 0.5 * h, w + 0.5 * h * k1[0]);
            let k3 = f(s + 0.5 * h, w + 0.5 * h * k2[0]);
            let k4 = f(s + h, w + h * k3[0]);
            w += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            t += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        t
    };
    let (a, b) = (run(n), run(2 * n));
    b + (b - a) / 15.0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Random draws covering the three cases and the borderline q = N/(N−1).
fn draws(seed: u64, count: usize) -> Vec<(Params, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n: u32 = rng.gen_range(2..=5);
        let nf = n as f64;
        let crit = nf / (nf - 1.0);
        let q = match out.len() % 4 {
            0 => rng.gen_range(1.05..crit - 0.02),
            1 => crit,
            _ => rng.gen_range(crit + 0.05..3.5),
        };
        let m = rng.gen_range(0.3..3.0);
        let r0 = rng.gen_range(0.5..2.0);
        let pr = prm(n, q, m);
        let x0 = blowup_report(&QuadratureSpec::new(pr, r0, 1.0)).unwrap().x0;
        let x = match (out.len() % 4, x0) {
            (2, Some(x0)) => x0 * rng.gen_range(0.2..0.9),
            (3, Some(x0)) => x0 * rng.gen_range(1.2..4.0),
            _ => rng.gen_range(0.05..2.0),
        };
        let rep = blowup_report(&QuadratureSpec::new(pr, r0, x)).unwrap();
        let r = match rep.radius {
            Some(rb) => r0 + rng.gen_range(0.05..0.6) * (rb - r0),
            None => r0 * rng.gen_range(1.1..5.0),
        };
        out.push((pr, r0, x, r));
    }
    out
}

#[test]
fn increasing_map_matches_rk4_oracle() {
    for (pr, r0, x, r) in draws(7, 100) {
        let t = riccati_increasing_map(&QuadratureSpec::new(pr, r0, x), r).unwrap();
        let o = rk4_increase(&pr, r0, x, r, 4096);
        assert!(rel(t, o) <= 1e-8, "{pr:?} r0={r0} X={x} r={r}: {t} vs {o}");
    }
}

#[test]
fn decreasing_map_matches_rk4_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let n: u32 = rng.gen_range(2..=5);
        let q = if i % 3 == 0 { n as f64 / (n as f64 - 1.0) } else { rng.gen_range(1.05..3.5) };
        let pr = prm(n, q, rng.gen_range(0.3..3.0));
        let r0 = rng.gen_range(0.5..2.0);
        let x = -rng.gen_range(0.05..5.0);
        let r = r0 * rng.gen_range(1.1..4.0);
        let gap = rng.gen_range(0.5..3.0);
        let s = riccati_decreasing_map(&QuadratureSpec::new(pr, r0, x), r, gap).unwrap();
        let o = gap + rk4_increase(&pr, r0, x, r, 4096);
        assert!((s - o).abs() <= 1e-8 * gap, "{pr:?} X={x}: {s} vs {o}");
    }
}

#[test]
fn map_examples() {
    let pr = prm(3, 1.5, 1.0);
    let t = riccati_increasing_map(&QuadratureSpec::new(pr, 1.0, 0.1), 2.0).unwrap();
    assert!(rel(t, rk4_increase(&pr, 1.0, 0.1, 2.0, 4096)) <= 1e-8);
    let tiny = riccati_increasing_map(&QuadratureSpec::new(pr, 1.0, 1e-9), 2.0).unwrap();
    assert!(tiny > 0.0 && tiny < 1e-8);

    let p12 = prm(3, 1.2, 1.0);
    let s = riccati_decreasing_map(&QuadratureSpec::new(p12, 1.0, -10.0), 2.0, 1.0).unwrap();
    assert!(s < 0.0);
    let s0 = riccati_decreasing_map(&QuadratureSpec::new(p12, 1.0, -1e-10), 2.0, 1.0).unwrap();
    assert!((s0 - 1.0).abs() < 1e-9);
    assert!(riccati_decreasing_map(&QuadratureSpec::new(p12, 1.0, 1.0), 2.0, 1.0).unwrap_err().is_domain());

    // Bisection on X for S_X(2) = 0 with gap 0.3.
    let s_at = |x: f64| riccati_decreasing_map(&QuadratureSpec::new(p12, 1.0, x), 2.0, 0.3).unwrap();
    let (mut lo, mut hi) = (-100.0f64, -1e-6f64);
    for _ in 0..200 {
        let mid = -((-lo).ln() * 0.5 + (-hi).ln() * 0.5).exp();
        if s_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!(s_at(hi).abs() <= 1e-10);
    assert!((0.3 + rk4_increase(&p12, 1.0, hi, 2.0, 8192)).abs() <= 1e-8);
}

/// Blow-up radius seen by the adaptive integrator on the Riccati reduction.
fn ode_blowup(pr: &Params, r0: f64, x: f64, horizon: f64) -> (OutcomeKind, f64) {
    let prob = OdeProblem::new(*pr, Terms::RICCATI, (r0, horizon));
    let out = integrate(&prob, (1.0, x), &Controls::default()).unwrap();
    (out.kind, out.location)
}

#[test]
fn blowup_radii_match_the_integrator() {
    let cases = [(prm(3, 1.2, 1.0), 1.0), (prm(3, 1.5, 1.0), 1.0), (prm(3, 3.0, 1.0), 3.0), (prm(4, 2.0, 0.5), 5.0)];
    for (pr, x) in cases {
        let rep = blowup_report(&QuadratureSpec::new(pr, 1.0, x)).unwrap();
        let rb = rep.radius.unwrap();
        let (kind, loc) = ode_blowup(&pr, 1.0, x, 2.0 * rb);
        assert_eq!(kind, OutcomeKind::GradientBlowup);
        assert!(rel(loc, rb) <= 1e-6, "{pr:?}: {loc} vs {rb}");
    }
    // Borderline closed form r*_X = r₀ exp((r₀^{N−1}X)^{1−q}/(m(q−1))).
    let rep = blowup_report(&QuadratureSpec::new(prm(3, 1.5, 1.0), 1.0, 1.0)).unwrap();
    assert!(rel(rep.radius.unwrap(), 2f64.exp()) < 1e-14);
}

#[test]
fn threshold_and_global_solutions() {
    let pr = prm(3, 3.0, 1.0);
    let x0 = blowup_report(&QuadratureSpec::new(pr, 1.0, 1.0)).unwrap().x0.unwrap();
    assert!(rel(x0, (3.0f64 / 2.0).sqrt()) < 1e-14);
    let rep = blowup_report(&QuadratureSpec::new(pr, 1.0, x0)).unwrap();
    assert_eq!(rep.kind, BlowupKind::Threshold);
    assert!(rep.radius.is_none());
    let rep = blowup_report(&QuadratureSpec::new(pr, 1.0, 0.5 * x0)).unwrap();
    assert_eq!(rep.kind, BlowupKind::Global);
    let c1 = rep.c1.unwrap();
    assert!(c1 <= rep.c1_bound.unwrap());
    let far = riccati_increasing_map(&QuadratureSpec::new(pr, 1.0, 0.5 * x0), 1e6).unwrap();
    assert!(far < c1 && rel(far, c1) < 1e-5);
    let (kind, _) = ode_blowup(&pr, 1.0, 0.5 * x0, 1e3);
    assert_eq!(kind, OutcomeKind::ReachedEnd);
}

#[test]
fn approach_to_the_blowup_radius() {
    // q > 2: T_X stays finite and tends to C₂(X).
    let pr = prm(3, 3.0, 1.0);
    let rep = blowup_report(&QuadratureSpec::new(pr, 1.0, 3.0)).unwrap();
    let (rb, c2v) = (rep.radius.unwrap(), rep.c2.unwrap());
    let t = riccati_increasing_map(&QuadratureSpec::new(pr, 1.0, 3.0), rb * (1.0 - 1e-6)).unwrap();
    assert!(t < c2v && (c2v - t) / c2v < 1e-2);
    assert!(rel(c2(&pr, 1.0, 3.0).unwrap(), c2v) < 1e-14);

    // N/(N−1) < q ≤ 2: partial increases grow without bound.
    for q in [1.8, 2.0] {
        let pr = prm(3, q, 1.0);
        let x0 = blowup_report(&QuadratureSpec::new(pr, 1.0, 1.0)).unwrap().x0.unwrap();
        let spec = QuadratureSpec::new(pr, 1.0, 2.0 * x0);
        let rb = blowup_report(&spec).unwrap().radius.unwrap();
        let vals: Vec<f64> =
            (1..=6).map(|j| riccati_increasing_map(&spec, rb - (rb - 1.0) * 10f64.powi(-2 * j)).unwrap()).collect();
        let incs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(incs.iter().all(|&d| d > 0.0));
        assert!(incs.windows(2).all(|w| w[1] >= 0.99 * w[0]), "q = {q}: {incs:?}");
    }
}

/// Θ through t = 1 + y^k with k = 1/(1 − 1/(q−1)), composite Simpson refined
/// until successive values agree.
fn theta_oracle(pr: &Params, r0: f64, tau: f64) -> f64 {
    let (n, q) = (pr.nf(), pr.q);
    let kap = n - q * (n - 1.0);
    let e = 1.0 / (q - 1.0);
    let k = 1.0 / (1.0 - e);
    let g = |y: f64| {
        let yk = y.powf(k);
        let t = 1.0 + yk;
        let ratio = if yk == 0.0 { -kap } else { -(kap * yk.ln_1p()).exp_m1() / yk };
        k * t.powf(1.0 - n) * ratio.powf(-e)
    };
    let ymax = (tau / r0 - 1.0).powf(1.0 / k);
    let simpson = |m: usize| {
        let h = ymax / m as f64;
        let mut s = g(0.0) + g(ymax);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(h * i as f64);
        }
        s * h / 3.0
    };
    let mut m = 1024;
    let mut prev = simpson(m);
    loop {
        m *= 2;
        let cur = simpson(m);
        if (cur - prev).abs() <= 1e-13 * cur || m > 1 << 24 {
            return (-kap / (pr.m * (q - 1.0))).powf(e) * r0.powf((q - 2.0) / (q - 1.0)) * cur;
        }
        prev = cur;
    }
}

#[test]
fn theta_matches_substitution_oracle() {
    for (n, q, m, r0, tau) in [
        (3, 3.0, 1.0, 1.0, 2.0),
        (2, 3.0, 1.0, 1.0, 2.0),
        (3, 2.5, 0.7, 1.0, 5.0),
        (4, 4.0, 2.0, 0.5, 1.5),
        (3, 3.0, 1.0, 2.0, 3.0),
    ] {
        let pr = prm(n, q, m);
        let th = theta_cap(&pr, r0, tau).unwrap().value;
        let o = theta_oracle(&pr, r0, tau);
        assert!(rel(th, o) <= 1e-7, "{pr:?} r0={r0} tau={tau}: {th} vs {o}");
    }
    let pr = prm(3, 3.0, 1.0);
    let t2 = theta_cap(&pr, 1.0, 2.0).unwrap().value;
    let t4 = theta_cap(&pr, 1.0, 4.0).unwrap().value;
    let tinf = theta_cap(&pr, 1.0, f64::INFINITY).unwrap().value;
    assert!(t2 > 0.0 && t4 > t2 && tinf > t4);
    assert!(theta_cap(&pr, 1.0, 1.0 + 1e-10).unwrap().value < 1e-4);
    assert!(theta_cap(&prm(3, 2.0, 1.0), 1.0, 2.0).unwrap_err().is_domain());
}

/// ∫_r^∞ of the flux in s = r e^v by Simpson, plus the power-law tail.
fn singular_oracle(pr: &Params, k: f64, c_n: f64, r: f64) -> f64 {
    let (n, q) = (pr.nf(), pr.q);
    let kap = n - q * (n - 1.0);
    let a = pr.m * (q - 1.0) / kap;
    let kk = ((n - 2.0) * c_n * k).powf(1.0 - q);
    let e = 1.0 / (q - 1.0);
    let flux = |s: f64| s.powf(1.0 - n) * (a * s.powf(kap) + kk).powf(-e);
    let vmax = 60.0;
    let steps = 600_000;
    let h = vmax / steps as f64;
    let g = |v: f64| {
        let s = r * v.exp();
        flux(s) * s
    };
    let mut sum = g(0.0) + g(vmax);
    for i in 1..steps {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(h * i as f64);
    }
    let s_end = r * vmax.exp();
    let beta = (2.0 - q) / (q - 1.0);
    sum * h / 3.0 + a.powf(-e) * s_end.powf(-beta) / beta
}

#[test]
fn singular_riccati_profile_checks() {
    let pr = prm(3, 1.4, 1.0);
    let xi = riccati_constant(&pr).unwrap();
    let (u, du) = singular_riccati_profile(&SingularRiccati::new(pr, f64::INFINITY), 1.0).unwrap();
    assert!(rel(u, xi) < 1e-15 && rel(du, -1.5 * xi) < 1e-14);
    // Far-field and near-field limits need κ = N − q(N−1) well away from 0.
    let pr = prm(3, 1.1, 10.0);
    let xi = riccati_constant(&pr).unwrap();
    let beta = pr.beta();
    for k in [1e-2, 1.0, 1e2] {
        let sr = SingularRiccati::new(pr, k);
        let (u6, _) = singular_riccati_profile(&sr, 1e6).unwrap();
        assert!(rel(1e6f64.powf(beta) * u6, xi) < 1e-2);
        for r in [1e-3, 0.1, 1.0, 30.0] {
            let (u, _) = singular_riccati_profile(&sr, r).unwrap();
            assert!(rel(u, singular_oracle(&pr, k, sr.c_n, r)) < 1e-9, "k={k} r={r}");
        }
    }
    let lim: Vec<f64> = [1e-2, 1.0, 1e2]
        .iter()
        .map(|&k| 1e8f64.powf(beta) * singular_riccati_profile(&SingularRiccati::new(pr, k), 1e8).unwrap().0)
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            assert!(rel(lim[i], lim[j]) < 1e-3);
        }
    }
    assert!(singular_riccati_profile(&SingularRiccati::new(prm(3, 1.5, 1.0), 1.0), 1.0).unwrap_err().is_domain());
}

#[test]
fn singular_riccati_residual_is_small() {
    let pr = prm(3, 1.4, 1.0);
    let sr = SingularRiccati::new(pr, 1.0);
    let n = pr.nf();
    for i in 0..20 {
        let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 19.0);
        let (u, du) = singular_riccati_profile(&sr, r).unwrap();
        // u″ by a five-point centered difference of u′.
        let h = 1e-3 * r;
        let d = |x: f64| singular_riccati_profile(&sr, x).unwrap().1;
        let d2u = (-d(r + 2.0 * h) + 8.0 * d(r + h) - 8.0 * d(r - h) + d(r - 2.0 * h)) / (12.0 * h);
        let parts = [-d2u, -(n - 1.0) * du / r, pr.m * du.abs().powf(pr.q)];
        let scale = parts.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(parts.iter().sum::<f64>().abs() <= 1e-8 * scale, "r = {r}");
        assert!(u > 0.0 && du < 0.0);
    }
}

#[test]
fn mass_rate_at_the_origin() {
    let pr = prm(3, 1.1, 10.0);
    for k in [0.1, 1.0] {
        let sr = SingularRiccati::new(pr, k);
        let r = 1e-10;
        let (u, _) = singular_riccati_profile(&sr, r).unwrap();
        assert!(rel(r * u, sr.c_n * k) < 1e-3);
    }
}

#[test]
fn increasing_map_is_monotone_in_x() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let pr = prm(3, rng.gen_range(1.1..3.0), rng.gen_range(0.5..2.0));
        let xs: Vec<f64> = (1..=8).map(|i| 0.05 * i as f64).collect();
        let rb = blowup_report(&QuadratureSpec::new(pr, 1.0, *xs.last().unwrap())).unwrap().radius;
        let r = rb.map_or(3.0, |rb| 1.0 + 0.5 * (rb - 1.0));
        let t: Vec<f64> =
            xs.iter().map(|&x| riccati_increasing_map(&QuadratureSpec::new(pr, 1.0, x), r).unwrap()).collect();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
