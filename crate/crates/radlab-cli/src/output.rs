use serde_json::{json, Value};

use radlab::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// What a command produced: a JSON result, or a result summary plus a
/// sampled profile.
#[derive(Debug, Clone)]
pub enum Artifact {
    Json(Value),
    Profile { summary: Value, profile: RadialProfile },
}

fn envelope(config: &Value, result: Value) -> Value {
    json!({ "tool": "radlab", "version": radlab::VERSION, "config": config, "result": result })
}

/// Profiles in JSON carry r, u, du arrays next to the summary; CSV output of
/// a plain JSON result is the header line alone.
pub fn render(artifact: &Artifact, config: &Value, format: Format, precision: usize) -> String {
    match (artifact, format) {
        (Artifact::Json(v), Format::Json) => pretty(&envelope(config, v.clone())),
        (Artifact::Profile { summary, profile }, Format::Json) => {
            let mut res = summary.clone();
            if let Value::Object(map) = &mut res {
                map.insert("r".into(), json!(profile.r));
                map.insert("u".into(), json!(profile.u));
                map.insert("du".into(), json!(profile.du));
            }
            pretty(&envelope(config, res))
        }
        (Artifact::Json(v), Format::Csv) => format!("# {}\n", envelope(config, v.clone())),
        (Artifact::Profile { summary, profile }, Format::Csv) => {
            profile.to_csv_with(&envelope(config, summary.clone()).to_string(), precision)
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
