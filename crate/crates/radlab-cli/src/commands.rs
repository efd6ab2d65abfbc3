use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use radlab::closed_forms::{
    blowup_report, riccati_decreasing_map, riccati_increasing_map, theta_cap, QuadratureSpec, SingularRiccati,
};
use radlab::construction::{solve_riccati_bvp, BvpSpec};
use radlab::ode::shoot::{shoot, Target};
use radlab::ode::{integrate, Controls, Coordinate, OdeProblem, Terms};
use radlab::params::{classify_regime, compute_exponents, constants_report};
use radlab::profile::{log_grid, RadialProfile};
use radlab::verification::{classify, growth_domination, Venue};
use radlab::{Error, Params, Result};

use crate::output::{Artifact, Format};
use crate::presets;

#[derive(Debug, Parser)]
#[command(name = "radlab", version, about = "Radial solutions of -Δu + m|∇u|^q - u^p = 0")]
pub struct Cli {
    /// Write the artifact here; relative paths resolve against $RADLAB_OUT_DIR.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Significant digits for CSV samples.
    #[arg(long, global = true, default_value_t = 17)]
    pub precision: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args, serde::Serialize)]
pub struct ParamArgs {
    /// Space dimension.
    #[arg(long = "N", default_value_t = 3)]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
}

impl ParamArgs {
    pub fn params(&self) -> Result<Params> {
        Params::new(self.n, self.p, self.q, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VenueArg {
    Zero,
    Infinity,
}

impl From<VenueArg> for Venue {
    fn from(v: VenueArg) -> Venue {
        match v {
            VenueArg::Zero => Venue::SingularityAtZero,
            VenueArg::Infinity => Venue::Infinity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoordArg {
    R,
    LogT,
}

#[derive(Debug, Clone, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Acceptance,
    #[value(name = "theorem-K")]
    TheoremK,
    #[value(name = "theorem-D")]
    TheoremD,
}

/// Accepts "inf" and "infinity" alongside ordinary numbers.
fn parse_extended(s: &str) -> std::result::Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// α, β, γ and σ.
    #[command(allow_negative_numbers = true)]
    Exponents(ParamArgs),
    /// Every constant defined for the parameters.
    #[command(allow_negative_numbers = true)]
    Constants {
        #[command(flatten)]
        params: ParamArgs,
        /// Also evaluate Θ on [r0, tau].
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long, value_parser = parse_extended)]
        tau: Option<f64>,
    },
    /// Position of q and p against the critical exponents.
    #[command(allow_negative_numbers = true)]
    Regime(ParamArgs),
    /// Closed-form Riccati solution started with slope X at r0.
    #[command(allow_negative_numbers = true)]
    Riccati {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long)]
        x: f64,
        /// Radii at which to evaluate the rise (or drop).
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        at: Vec<f64>,
    },
    /// Θ(τ), the largest admissible a − b for decreasing solutions (q > 2).
    #[command(allow_negative_numbers = true)]
    Theta {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, value_parser = parse_extended)]
        tau: f64,
    },
    /// The singular Riccati solution with mass k at the origin (k = inf allowed).
    #[command(allow_negative_numbers = true)]
    SingularProfile {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse_extended)]
        k: f64,
        #[arg(long, default_value_t = 1e-6)]
        from: f64,
        #[arg(long, default_value_t = 1e2)]
        to: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Initial-value integration.
    #[command(allow_negative_numbers = true)]
    Integrate {
        #[command(flatten)]
        params: ParamArgs,
        /// full, riccati, lane-emden, eikonal, laplace or a '+' list of
        /// diffusion, gradient, source.
        #[arg(long, default_value = "full")]
        terms: String,
        #[arg(long)]
        u0: f64,
        #[arg(long)]
        du0: f64,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, value_enum, default_value = "r")]
        coordinate: CoordArg,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        /// Continue past zero crossings of u.
        #[arg(long)]
        through_zero: bool,
    },
    /// Shooting on u′(from) for u(to) = target.
    #[command(allow_negative_numbers = true)]
    Shoot {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "full")]
        terms: String,
        #[arg(long)]
        u0: f64,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Slope bracket "lo,hi".
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        bracket: Vec<f64>,
    },
    /// Riccati boundary-value problem v(r0) = a, v(tau) = b.
    #[command(allow_negative_numbers = true)]
    Bvp {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Monotone construction on the growing branch (q > p) between X_m r^g
    /// and λX_m r^g.
    #[command(allow_negative_numbers = true)]
    Construct {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// Window start; defaults to 1.01 R*.
        #[arg(long)]
        r0: Option<f64>,
        /// Window end; defaults to 10.1 R*.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Rate fit and case classification of a profile CSV.
    #[command(allow_negative_numbers = true)]
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        venue: VenueArg,
    },
    /// Named experiment suites.
    #[command(allow_negative_numbers = true)]
    VerifySuite {
        #[arg(long, value_enum)]
        preset: Preset,
        /// Mass for theorem-K (inf for the Riccati-rate profile).
        #[arg(long, value_parser = parse_extended, default_value = "inf")]
        k: f64,
        /// Worker threads for the acceptance preset.
        #[arg(long, default_value_t = 4)]
        threads: usize,
    },
}

/// JSON has no infinity; echo it as "inf".
fn extended(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("inf")
    }
}

fn parse_terms(s: &str) -> Result<Terms> {
    Terms::parse(s).ok_or_else(|| Error::Problem(format!("unknown terms '{s}'")))
}

fn summary_of(out: &radlab::ode::ShootOutcome) -> Value {
    json!({ "termination": out.kind.label(), "location": out.location, "diagnostic": out.diagnostic, "samples": out.profile.len() })
}

/// Runs one command. Returns the artifact and the config echoed in its header.
pub fn run(cmd: &Command) -> Result<(Artifact, Value)> {
    match cmd {
        Command::Exponents(a) => {
            let pr = a.params()?;
            let e = compute_exponents(&pr)?;
            Ok((
                Artifact::Json(json!({ "exponents": e, "kappa": pr.kappa(), "critical_q": pr.critical_q() })),
                json!(a),
            ))
        }
        Command::Constants { params, r0, tau } => {
            let pr = params.params()?;
            let window = match (r0, tau) {
                (Some(r0), Some(tau)) => Some((*r0, *tau)),
                (None, None) => None,
                _ => return Err(Error::Problem("--r0 and --tau go together".into())),
            };
            let cfg = json!({ "params": params, "r0": r0, "tau": tau.map(extended) });
            Ok((Artifact::Json(json!(constants_report(&pr, window))), cfg))
        }
        Command::Regime(a) => Ok((Artifact::Json(json!(classify_regime(&a.params()?))), json!(a))),
        Command::Riccati { params, r0, x, at } => {
            let pr = params.params()?;
            let spec = QuadratureSpec::new(pr, *r0, *x);
            let cfg = json!({ "params": params, "r0": r0, "X": x, "at": at });
            if *x < 0.0 {
                let rows: Vec<Value> = at
                    .iter()
                    .map(|&r| Ok(json!({ "r": r, "drop": 1.0 - riccati_decreasing_map(&spec, r, 1.0)? })))
                    .collect::<Result<_>>()?;
                return Ok((Artifact::Json(json!({ "direction": "decreasing", "values": rows })), cfg));
            }
            let rep = blowup_report(&spec)?;
            // Radii at or past the blow-up radius get a null rise.
            let rows: Vec<Value> = at
                .iter()
                .map(|&r| match rep.radius {
                    Some(rb) if r >= rb => Ok(json!({ "r": r, "rise": null })),
                    _ => Ok(json!({ "r": r, "rise": riccati_increasing_map(&spec, r)? })),
                })
                .collect::<Result<_>>()?;
            Ok((Artifact::Json(json!({ "direction": "increasing", "blowup": rep, "values": rows })), cfg))
        }
        Command::Theta { params, r0, tau } => {
            let th = theta_cap(&params.params()?, *r0, *tau)?;
            Ok((Artifact::Json(json!(th)), json!({ "params": params, "r0": r0, "tau": extended(*tau) })))
        }
        Command::SingularProfile { params, k, from, to, points } => {
            let pr = params.params()?;
            if !(*from > 0.0 && to > from && *points >= 2) {
                return Err(Error::Problem("0 < from < to and points >= 2".into()));
            }
            let prof = presets::singular_profile(pr, *k, &log_grid(*from, *to, *points))?;
            let sr = SingularRiccati::new(pr, *k);
            let cfg = json!({ "params": params, "k": extended(*k), "from": from, "to": to, "points": points });
            Ok((Artifact::Profile { summary: json!({ "cN": sr.c_n, "K": sr.bracket_constant() }), profile: prof }, cfg))
        }
        Command::Integrate { params, terms, u0, du0, from, to, coordinate, rtol, through_zero } => {
            let pr = params.params()?;
            let coord = match coordinate {
                CoordArg::R => Coordinate::RadialR,
                CoordArg::LogT => Coordinate::LogT,
            };
            let prob = OdeProblem::new(pr, parse_terms(terms)?, (*from, *to)).with_coordinate(coord);
            let ctl = Controls { rtol: *rtol, stop_on_zero_crossing: !through_zero, ..Controls::default() };
            let out = integrate(&prob, (*u0, *du0), &ctl)?;
            let cfg = json!({ "params": params, "terms": terms, "u0": u0, "du0": du0, "from": from, "to": to,
                "coordinate": format!("{coordinate:?}"), "rtol": rtol, "through_zero": through_zero });
            Ok((Artifact::Profile { summary: summary_of(&out), profile: out.profile }, cfg))
        }
        Command::Shoot { params, terms, u0, target, from, to, bracket } => {
            let pr = params.params()?;
            let prob = OdeProblem::new(pr, parse_terms(terms)?, (*from, *to));
            let br = match bracket.as_slice() {
                [lo, hi] => (*lo, *hi),
                _ => return Err(Error::Problem("--bracket takes two slopes".into())),
            };
            let res = shoot(&prob, *u0, br, Target::Value(*target), &Controls::default())?;
            let mut summary = summary_of(&res.outcome);
            summary["du0"] = json!(res.du0);
            summary["mismatch"] = json!(res.mismatch);
            summary["iterations"] = json!(res.iterations);
            let cfg = json!({ "params": params, "terms": terms, "u0": u0, "target": target, "from": from, "to": to, "bracket": bracket });
            Ok((Artifact::Profile { summary, profile: res.outcome.profile }, cfg))
        }
        Command::Bvp { params, r0, tau, a, b } => {
            let sol = solve_riccati_bvp(&BvpSpec::new(params.params()?, *r0, *tau, *a, *b))?;
            let cfg = json!({ "params": params, "r0": r0, "tau": tau, "a": a, "b": b });
            Ok((Artifact::Profile { summary: json!({ "du0": sol.du[0], "samples": sol.len() }), profile: sol }, cfg))
        }
        Command::Construct { params, lambda, r0, tau } => {
            let window = match (r0, tau) {
                (Some(r0), Some(tau)) => Some((*r0, *tau)),
                (None, None) => None,
                _ => return Err(Error::Problem("--r0 and --tau go together".into())),
            };
            let setup = presets::GrowthSetup::new(params.params()?, *lambda, window)?;
            let c = presets::growth_construction(setup)?;
            let cfg = json!({ "params": params, "lambda": lambda, "r0": r0, "tau": tau });
            let limit = c.limit.clone();
            Ok((Artifact::Profile { summary: json!(c), profile: limit }, cfg))
        }
        Command::Classify { params, input, venue } => {
            let text =
                std::fs::read_to_string(input).map_err(|e| Error::Problem(format!("{}: {e}", input.display())))?;
            let prof = RadialProfile::from_csv(&text).map_err(Error::Problem)?;
            let cl = classify(&prof, &params.params()?, (*venue).into());
            let cfg = json!({ "params": params, "input": input, "venue": format!("{venue:?}") });
            Ok((Artifact::Json(json!(cl)), cfg))
        }
        Command::VerifySuite { preset, k, threads } => verify_suite(preset, *k, *threads),
    }
}

fn verify_suite(preset: &Preset, k: f64, threads: usize) -> Result<(Artifact, Value)> {
    match preset {
        Preset::Acceptance => {
            let reports = presets::run_all(threads);
            let passed = reports.iter().filter(|r| r.passed).count();
            let res = json!({ "passed": passed, "total": reports.len(), "criteria": reports });
            Ok((Artifact::Json(res), json!({ "preset": "acceptance" })))
        }
        Preset::TheoremK => {
            let pr = Params::new(3, 1.1, 1.25, 1.0)?;
            Ok((
                Artifact::Json(presets::theorem_k(pr, k)?),
                json!({ "preset": "theorem-K", "params": pr, "k": extended(k) }),
            ))
        }
        Preset::TheoremD => {
            let pr = Params::new(3, 1.05, 2.0, 1.0)?;
            let c = presets::growth_construction(presets::GrowthSetup::new(pr, 2.0, None)?)?;
            let (cdom, ratio) = growth_domination(&c.limit, (c.setup.r0, c.setup.tau), c.setup.x_m, c.setup.g);
            let res = json!({ "construction": c, "domination": { "C": cdom, "ratio_at_tau": ratio } });
            Ok((Artifact::Json(res), json!({ "preset": "theorem-D", "params": pr })))
        }
    }
}
