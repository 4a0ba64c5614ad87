//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use confocal::cli::{self, report::ExperimentReport};
use confocal::family::{reflect, ConfocalFamily, Line, Point};
use confocal::poly::Poly;
use confocal::quadrature::{CharacteristicRadical, RootRadical};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn experiment(name: &str, sets: &[(&str, &str)]) -> ExperimentReport {
    let overrides: Vec<(String, String)> = sets.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let config = cli::configure(name, None, &overrides, Some(20240101), None).expect("valid configuration");
    cli::run(&config).0
}

/// Passes when the report passes and every named check is present.
fn judge(r: &ExperimentReport, min_samples: usize, checks: &[&str]) -> Outcome {
    let mut detail = format!(
        "{} samples, max scaled deviation {:.3e} (tol {:.0e})",
        r.samples.len(),
        r.statistics.max_abs_dev,
        r.statistics.tolerance
    );
    for c in &r.checks {
        detail += &format!(", {} {:.3e}", c.name, c.value);
    }
    if let Some(e) = &r.error {
        return Err(format!("{}: {e}", r.experiment));
    }
    if r.samples.len() < min_samples {
        return Err(format!("only {} samples: {detail}", r.samples.len()));
    }
    for name in checks {
        if !r.checks.iter().any(|c| c.name == *name) {
            return Err(format!("missing check {name}: {detail}"));
        }
    }
    if r.pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ivory_theorem() -> Outcome {
    judge(&experiment("ivory-check", &[("samples", "1000"), ("max_dim", "6"), ("max_block", "4")]), 1000, &[])
}

fn identity_suite() -> Outcome {
    let r = experiment("sj-check", &[("samples", "1000"), ("identity", "all")]);
    for k in 0..7 {
        let n = r.samples.iter().filter(|s| s.fields["identity"] == k as f64).count();
        if n < 1000 {
            return Err(format!("identity {k} has {n} samples"));
        }
    }
    judge(&r, 7000, &["vertex_reflection"])
}

fn lame_orthogonality() -> Outcome {
    judge(&experiment("lame-orthogonality", &[("samples", "10000")]), 10_000, &[])
}

fn graves_excess() -> Outcome {
    let r = experiment("graves", &[("a1", "2"), ("a2", "1"), ("z", "-1"), ("samples", "256"), ("extra_sets", "9")]);
    judge(&r, 2560, &["tangency_condition"])
}

fn poncelet() -> Outcome {
    judge(&experiment("chasles-2d", &[("p", "3"), ("w", "1"), ("samples", "64")]), 64, &["closure_gap_over_diameter"])
}

/// Lines tangent to two confocal quadrics stay tangent to them after
/// reflection in a third one.
fn chasles_jacobi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 1000 {
        let a3 = rng.random_range(0.3..1.0);
        let a2 = a3 + rng.random_range(0.3..1.5);
        let a1 = a2 + rng.random_range(0.3..1.5);
        let fam = ConfocalFamily::new(vec![a1, a2, a3]).map_err(|e| e.to_string())?;
        let p = Point::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
        let d = Point::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let Ok(line) = Line::new(p, d) else { continue };
        let Ok(before) = fam.tangency_spectrum(&line) else { continue };
        // reflect in the ellipsoid through a point of the line
        let x = line.at(rng.random_range(-1.0..1.0));
        let Ok(u) = fam.coordinates(&x) else { continue };
        let z = u[2];
        let Ok(normal) = fam.normal_hat(z, &x) else { continue };
        let Ok(out) = reflect(&line.dir, &normal) else { continue };
        let Ok(reflected) = Line::new(x, out) else { continue };
        let Ok(after) = fam.tangency_spectrum(&reflected) else { continue };
        let zs = before.zs();
        let scale = zs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(after.mismatch(&zs) / scale);
        done += 1;
    }
    let detail = format!("{done} reflected lines, worst spectrum change {worst:.3e}");
    if worst < 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn darboux() -> Outcome {
    let r = experiment("darboux-3d", &[("samples", "32")]);
    let out = judge(&r, 32, &["closure_gap_over_diameter", "rationality_residual", "polygons_with_other_counts"])?;
    let p: Vec<f64> = r.samples.iter().map(|s| s.value).collect();
    let spread = p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min);
    let formula = r.summary["formula_perimeter"];
    if spread >= 1e-6 * formula || r.samples.iter().any(|s| (s.value - formula).abs() >= 1e-6) {
        return Err(format!("perimeter spread {spread:e}: {out}"));
    }
    Ok(format!("(4,6,12) at u2_0 = {:.12}, {out}", r.summary["u2_0"]))
}

fn geodesics() -> Outcome {
    let r = experiment("geodesic", &[("length", "20"), ("grad_samples", "1000")]);
    judge(&r, 1, &["unit_speed", "eikonal", "umbilic_to_umbilic"])
}

fn closed_geodesic() -> Outcome {
    judge(&experiment("closed-geodesic", &[]), 1, &["closure_gap"])
}

fn staude() -> Outcome {
    judge(&experiment("staude", &[("samples", "16")]), 16, &["infeasible_flag_mismatches", "joint_defect"])
}

fn dualization() -> Outcome {
    let planar = judge(&experiment("dualize", &[("iterations", "10")]), 10, &["closure_gap_over_diameter"])?;
    let spatial = judge(&experiment("dualize", &[("axes", "[3, 2, 1]"), ("iterations", "10")]), 10, &["closure_gap_over_diameter"])?;
    Ok(format!("planar: {planar}; spatial: {spatial}"))
}

fn quadrature() -> Outcome {
    let arcsine = RootRadical::new(vec![0.5, 2.0], -1.0).map_err(|e| e.to_string())?;
    let pi = arcsine.integrate(&Poly::new(vec![1.0]), 0.5, 2.0).map_err(|e| e.to_string())?;
    let mean = arcsine.integrate(&Poly::new(vec![0.0, 1.0]), 0.5, 2.0).map_err(|e| e.to_string())?;
    let err = (pi - std::f64::consts::PI).abs().max((mean - 1.25 * std::f64::consts::PI).abs());
    let mut change: f64 = 0.0;
    for (u2_0, u3_0) in [(1.5, 0.5), (1.2539615452108193, 0.5), (1.9, 0.9)] {
        let rad = CharacteristicRadical::new([3.0, 2.0, 1.0], u2_0, u3_0).map_err(|e| e.to_string())?;
        for (lo, hi) in [(2.0, 3.0), (1.0, u2_0), (u3_0 - 2.0, u3_0)] {
            let q = rad.radical().integrate_detailed(&rad.p_length(), lo, hi).map_err(|e| e.to_string())?;
            change = change.max(q.change);
        }
    }
    let detail = format!("arcsine error {err:.3e}, worst doubling change {change:.3e}");
    if err < 1e-12 && change < 1e-11 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Ivory theorem over real and complex families", ivory_theorem),
        ("identity suite", identity_suite),
        ("Lame orthogonality", lame_orthogonality),
        ("Graves constant excess", graves_excess),
        ("Poncelet triangle perimeter", poncelet),
        ("Chasles-Jacobi tangency invariance", chasles_jacobi),
        ("Darboux polygon", darboux),
        ("geodesics", geodesics),
        ("closed geodesic", closed_geodesic),
        ("Staude thread", staude),
        ("dualization", dualization),
        ("quadrature self-checks", quadrature),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of 12 passed in {:.1} s", 12 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
