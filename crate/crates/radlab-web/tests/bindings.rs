use serde_json::Value;

use radlab_web::{profile_json, roots_json, theta_json};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn profile_reaches_the_end() {
    let v = parse(&profile_json(3, 2.0, 1.5, 1.0, "full", 1.0, -0.5, 1.0, 3.0));
    assert_eq!(v["termination"], "reached_end");
    assert_eq!(v["r"].as_array().unwrap().len(), v["u"].as_array().unwrap().len());
}

#[test]
fn theta_increases_toward_its_limit() {
    let v = parse(&theta_json(3, 3.0, 1.0, 1.0, 50.0, 20));
    let th: Vec<f64> = v["theta"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(th.windows(2).all(|w| w[1] > w[0]));
    assert!(th.last().unwrap() < &v["theta_inf"].as_f64().unwrap());
}

#[test]
fn root_count_changes_at_the_threshold() {
    let v = parse(&roots_json(3, 2.0, 0.5, 3.0, 30));
    let mu = v["mu_star"].as_f64().unwrap();
    for row in v["rows"].as_array().unwrap() {
        let (m, k) = (row["m"].as_f64().unwrap(), row["roots"].as_array().unwrap().len());
        if m < mu * 0.999 {
            assert_eq!(k, 0);
        } else if m > mu * 1.001 {
            assert_eq!(k, 2);
        }
    }
}

#[test]
fn errors_come_back_as_json() {
    let v = parse(&profile_json(3, 2.0, 0.5, 1.0, "full", 1.0, 0.0, 1.0, 2.0));
    assert!(v["error"].is_string());
    let v = parse(&profile_json(3, 2.0, 1.5, 1.0, "nonsense", 1.0, 0.0, 1.0, 2.0));
    assert!(v["error"].is_string());
}
