//! Experiment driver behind the `confocal` binary.

pub mod config;
pub mod experiments;
pub mod report;
pub mod svg;

use config::ExperimentConfig;
use report::ExperimentReport;
use svg::Scene;

pub use experiments::{schema, EXPERIMENTS};

/// Run one experiment. Failures inside the experiment end up in the
/// report with `pass = false`.
pub fn run(config: &ExperimentConfig) -> (ExperimentReport, Option<Scene>) {
    match experiments::execute(config) {
        Ok(o) => (ExperimentReport::new(config, o.samples, o.checks, o.summary, None), o.scene),
        Err(e) => (ExperimentReport::new(config, Vec::new(), Vec::new(), Default::default(), Some(e.to_string())), None),
    }
}

/// Resolve the configuration of `experiment` from defaults, an optional
/// config file body and `key=value` overrides.
pub fn configure(
    experiment: &str,
    file: Option<&str>,
    overrides: &[(String, String)],
    seed: Option<u64>,
    tol: Option<f64>,
) -> crate::Result<ExperimentConfig> {
    let (keys, default_tol) = schema(experiment)?;
    ExperimentConfig::resolve(experiment, &keys, file, overrides, seed, tol, default_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn every_experiment_has_a_schema() {
        for name in EXPERIMENTS {
            assert!(configure(name, None, &[], None, None).is_ok(), "{name}");
        }
        assert!(configure("nope", None, &[], None, None).is_err());
    }

    #[test]
    fn graves_defaults_pass_with_256_samples() {
        let (r, scene) = run(&configure("graves", None, &[], None, None).unwrap());
        assert!(r.pass, "{:?}", r.checks);
        assert_eq!(r.samples.len(), 256);
        assert!(svg::render_svg(&scene.unwrap()).unwrap().contains("class=\"tangent\""));
    }

    #[test]
    fn empty_sweep_is_a_config_error() {
        let c = configure("graves", None, &set(&[("samples", "0")]), None, None).unwrap();
        let (r, _) = run(&c);
        assert!(!r.pass);
        assert!(r.error.unwrap().contains("`samples`"));
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let c = configure("ivory-check", None, &set(&[("samples", "40")]), Some(9), None).unwrap();
        let a = run(&c).0.to_json();
        let b = run(&c).0.to_json();
        assert_eq!(a, b);
        let other = configure("ivory-check", None, &set(&[("samples", "40")]), Some(10), None).unwrap();
        assert_ne!(a, run(&other).0.to_json());
    }

    #[test]
    fn darboux_projection_keeps_vertices_in_view() {
        let c = configure("darboux-3d", None, &set(&[("samples", "2")]), None, None).unwrap();
        let (r, scene) = run(&c);
        assert!(r.pass, "{:?} {:?}", r.error, r.checks);
        let doc = svg::render_svg(&scene.unwrap()).unwrap();
        let vb: Vec<f64> =
            doc.split("viewBox=\"").nth(1).unwrap().split('"').next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
        for circle in doc.lines().filter(|l| l.starts_with("<circle")) {
            let grab = |attr: &str| -> f64 { circle.split(&format!("{attr}=\"")).nth(1).unwrap().split('"').next().unwrap().parse().unwrap() };
            let (x, y) = (grab("cx"), grab("cy"));
            assert!(x > vb[0] && x < vb[0] + vb[2] && y > vb[1] && y < vb[1] + vb[3]);
        }
    }
}
