//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits nonzero
//! if any criterion fails.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crindex::cli::builtin::{worm, worm_annulus_points, Builtin};
use crindex::crmap::{
    check_alpha_invariance, check_levi_pushforward, check_rescaling, invariance_experiment,
    pullback_domain, standard_maps, transport_points,
};
use crindex::dangelo::{ab_field, alpha_on_conj, commutator_fd, DAngelo};
use crindex::expr::{parse, DomainSpec, Params, RandomExprs};
use crindex::geometry::{analyze_point, PointAnalysis, PointClass, Strategy};
use crindex::indices::{
    df_estimate, optimize_psi, oracle_exponent, oracle_samples, scan_boundary, Exponent, Objective,
    PsiFamily, Side, Tolerances,
};
use crindex::jet::fd_check;
use crindex::space::{from_real, Point};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn cli_json(args: &[&str]) -> serde_json::Value {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("report.json");
    let mut argv = vec!["crindex"];
    argv.extend_from_slice(args);
    let out_s = out.to_str().unwrap().to_string();
    argv.extend_from_slice(&["--out", &out_s]);
    let code = crindex::cli::run(argv);
    assert_eq!(code, 0, "crindex {args:?} exited with {code}");
    serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
}

fn strictly_pseudoconvex_baselines() -> Outcome {
    let t0 = Instant::now();
    let df = cli_json(&["df", "--builtin", "ball", "--samples", "500", "--seed", "7"]);
    let st = cli_json(&[
        "steinness",
        "--builtin",
        "ball",
        "--samples",
        "500",
        "--seed",
        "7",
    ]);
    let df_lower = df["df_lower"].as_f64().unwrap_or(f64::NAN);
    let st_upper = st["st_upper"].as_f64().unwrap_or(f64::NAN);
    let sigma = df["boundary"]["weak"].as_u64().unwrap_or(u64::MAX);
    let ball = Builtin::Ball { n: 2 }.spec().unwrap();
    let scan = scan_boundary(&ball, Strategy::Grid, 2000, 7, &tol()).unwrap();
    let run = |side| {
        let s = oracle_samples(&ball, None, side, &scan.boundary_points, 6, 5);
        oracle_exponent(&s, side, &tol()).exponent.value()
    };
    let (inner, outer) = (run(Side::Interior), run(Side::Exterior));
    let secs = t0.elapsed().as_secs_f64();
    check(
        df_lower == 1.0 && st_upper == 1.0 && sigma == 0 && inner >= 0.995 && outer <= 1.005 && secs < 30.0,
        format!(
            "df_lower={df_lower} st_upper={st_upper} sigma={sigma} oracle interior={inner:.4} exterior={outer:.4} ({secs:.2}s)"
        ),
    )
}

fn complex_ellipsoid() -> Outcome {
    let spec = Builtin::ComplexEllipsoid { m: 2 }.spec().unwrap();
    let scan = scan_boundary(&spec, Strategy::Grid, 500, 7, &tol()).unwrap();
    let est = df_estimate(&scan, None, &tol()).unwrap();
    let on_circle = scan
        .weak
        .iter()
        .all(|w| w.point[1].norm() < 1e-8 && (w.point[0].norm() - 1.0).abs() < 1e-8);
    let mut args: Vec<i64> = scan
        .weak
        .iter()
        .map(|w| (w.point[0].arg() * 1e6).round() as i64)
        .collect();
    args.sort();
    args.dedup();
    let max_ab = est
        .records
        .iter()
        .map(|r| r.a.abs().max(r.b.abs()))
        .fold(0.0, f64::max);
    check(
        !scan.weak.is_empty()
            && on_circle
            && args.len() >= 4
            && max_ab <= 1e-8
            && est.df_lower == 1.0
            && est.st_upper == Exponent::Finite(1.0),
        format!(
            "weak points={} on |z1|=1,z2=0: {on_circle}, distinct angles={} max|A|,|B|={max_ab:.1e} df_lower={} st_upper={:?}",
            scan.weak.len(),
            args.len(),
            est.df_lower,
            est.st_upper
        ),
    )
}

/// Analyses of 200 points of the worm's weak annulus, all classified weak.
fn worm_weak(beta: f64) -> (DomainSpec, Vec<PointAnalysis>, usize) {
    let spec = worm(beta).unwrap();
    let pts = worm_annulus_points(beta, 200, 1);
    let all: Vec<PointAnalysis> = pts
        .iter()
        .map(|p| analyze_point(&spec, p, tol().tol_levi, 1).unwrap())
        .collect();
    let total = all.len();
    let weak = all.into_iter().filter(|a| a.class.is_weak()).collect();
    (spec, weak, total)
}

fn null_dirs(a: &PointAnalysis) -> &[Vec<C>] {
    match &a.class {
        PointClass::Weak { null_dirs } => null_dirs,
        _ => &[],
    }
}

fn route_agreement() -> Outcome {
    let t0 = Instant::now();
    let (_, weak, total) = worm_weak(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut db, mut da, mut ext) = (0.0f64, 0.0f64, 0.0f64);
    for a in &weak {
        let d = DAngelo::new(&a.jet, &a.frame);
        for v in null_dirs(a) {
            let form = d.ab_form(v);
            let field = ab_field(&a.jet, &a.frame, v, None).unwrap();
            db = db.max((field.b - form.b).abs() / (1.0 + form.b.abs()));
            da = da.max((field.a - form.a).abs());
            for _ in 0..3 {
                let w: Vec<C> = (0..2)
                    .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let moved = ab_field(&a.jet, &a.frame, v, Some(&w)).unwrap();
                ext = ext.max((moved.b - field.b).abs() / d.scale().max(1.0));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        weak.len() == 200 && db <= 1e-5 && da <= 1e-10 && ext <= 1e-6 && secs < 120.0,
        format!(
            "weak {}/{total}, max|dB|/(1+|B|)={db:.1e} max|dA|={da:.1e} extension shift={ext:.1e} ({secs:.2}s)",
            weak.len()
        ),
    )
}

fn d_alpha_vanishes() -> Outcome {
    let (_, weak, _) = worm_weak(2.0);
    let mut worst = 0.0f64;
    for a in &weak {
        let d = DAngelo::new(&a.jet, &a.frame);
        for v in null_dirs(a) {
            worst = worst.max(d.d_alpha(v, v).norm() / d.scale().max(1.0));
        }
    }
    check(
        !weak.is_empty() && worst <= 1e-8,
        format!(
            "max |d alpha(v, conj v)|/scale={worst:.1e} over {} weak points",
            weak.len()
        ),
    )
}

fn alpha_matches_commutator() -> Outcome {
    let spec = worm(2.0).unwrap();
    let scan = scan_boundary(&spec, Strategy::Grid, 500, 7, &tol()).unwrap();
    let step = (scan.boundary_points.len() / 50).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in scan.boundary_points.iter().step_by(step).take(50) {
        let a = analyze_point(&spec, p, tol().tol_levi, 1).unwrap();
        let k = C::from_polar(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let v: Vec<C> = a.frame.tangent_basis[0].iter().map(|x| k * x).collect();
        let form = alpha_on_conj(&a.jet, &a.frame, &v).unwrap();
        let fd = commutator_fd(&spec, p, &v, 1e-5).unwrap();
        worst = worst.max((fd - form).norm() / form.norm().max(1e-6));
        count += 1;
    }
    check(
        count == 50 && worst <= 1e-5,
        format!("{count} tangentials, max relative gap={worst:.1e}"),
    )
}

fn rescaling_law() -> Outcome {
    let (spec, weak, _) = worm_weak(2.0);
    let pts: Vec<Point> = weak.iter().map(|a| a.point.clone()).collect();
    let psi = parse("0.3*log(abs2(z2))", 2).unwrap();
    let r = check_rescaling(&spec, &psi, &pts, &tol(), 1).unwrap();
    let zero = check_rescaling(&spec, &parse("0", 2).unwrap(), &pts, &tol(), 1).unwrap();
    check(
        r.alpha <= 1e-7 && r.dc_alpha <= 1e-7 && zero.alpha == 0.0 && zero.dc_alpha == 0.0,
        format!(
            "{} checks: alpha={:.1e} i d^c alpha={:.1e} (psi=0: {:.0e}, {:.0e})",
            r.samples, r.alpha, r.dc_alpha, zero.alpha, zero.dc_alpha
        ),
    )
}

fn cr_invariance() -> Outcome {
    let t0 = Instant::now();
    let spec2 = worm(2.0).unwrap();
    let scan2 = scan_boundary(&spec2, Strategy::Grid, 500, 7, &tol()).unwrap();
    let fam = PsiFamily::from_exprs(spec2.psi_extras.clone());
    let mut ok = true;
    let mut parts = Vec::new();
    for m in standard_maps() {
        let unitary = !m.name.starts_with("shear");
        let spec1 = pullback_domain(&m, &spec2).unwrap();
        let pts1 = transport_points(&m, &spec1, &scan2.boundary_points);
        let levi = check_levi_pushforward(&m, &spec1, &spec2, &pts1, 3, 1).unwrap();
        let inv = check_alpha_invariance(&m, &spec1, &spec2, &pts1, &tol(), 1).unwrap();
        let exp =
            invariance_experiment(&m, &spec2, &fam, 2000, 500, &[1, 2, 3, 4, 5], &tol()).unwrap();
        let bound = if unitary { 1e-6 } else { 0.02 };
        ok &= !inv.vacuous
            && inv.alpha.max <= 1e-8
            && inv.dc_alpha.max <= 1e-8
            && levi.levi.max <= 1e-9
            && levi.ln_claim.max <= 1e-9
            && exp.max_delta_df <= bound
            && exp.max_delta_st <= bound
            && (unitary || inv.negative_control.max > 1e-3);
        parts.push(format!(
            "{}: alpha={:.0e} dc={:.0e} dDF={:.0e} dS={:.0e} spread={:.1e}/{:.1e} control={:.1e}",
            m.name,
            inv.alpha.max,
            inv.dc_alpha.max,
            exp.max_delta_df,
            exp.max_delta_st,
            exp.spread_df,
            exp.spread_st,
            inv.negative_control.max
        ));
    }
    let ball = Builtin::Ball { n: 2 }.spec().unwrap();
    let rot = &standard_maps()[1];
    let e =
        invariance_experiment(rot, &ball, &PsiFamily::poly2(2), 200, 300, &[1], &tol()).unwrap();
    let r = &e.runs[0];
    let ball_ok =
        r.df_target == 1.0 && r.df_source == 1.0 && r.st_target == 1.0 && r.st_source == 1.0;
    ok &= ball_ok;
    parts.push(format!("rotated ball exact: {ball_ok}"));
    check(
        ok,
        format!("{} ({:.1}s)", parts.join("; "), t0.elapsed().as_secs_f64()),
    )
}

fn worm_relation() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [2.0, 2.5, 3.0] {
        let t0 = Instant::now();
        let spec = worm(beta).unwrap();
        let scan = scan_boundary(&spec, Strategy::Grid, 500, 7, &tol()).unwrap();
        let fam = PsiFamily::from_exprs(spec.psi_extras.clone());
        let d = optimize_psi(&scan, &fam, Objective::DiederichFornaess, 2000, 0, &tol()).unwrap();
        let s = optimize_psi(&scan, &fam, Objective::Steinness, 2000, 0, &tol()).unwrap();
        let (df, st) = (d.estimate.df_lower, s.estimate.st_upper.value());
        let sum = 1.0 / df + 1.0 / st;
        let took = t0.elapsed();
        ok &= (sum - 2.0).abs() <= 0.1 && took < Duration::from_secs(600) && df > d.baseline_df;
        parts.push(format!(
            "beta={beta}: DF>={df:.4} S<={st:.4} sum={sum:.4} ({:.1}s)",
            took.as_secs_f64()
        ));
    }
    check(ok, parts.join("; "))
}

fn oracle_consistency() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [2.0, 2.5, 3.0] {
        let spec = worm(beta).unwrap();
        let scan = scan_boundary(&spec, Strategy::Grid, 500, 7, &tol()).unwrap();
        let est = df_estimate(&scan, None, &tol()).unwrap();
        let s = oracle_samples(&spec, None, Side::Interior, &scan.boundary_points, 6, 5);
        let o = oracle_exponent(&s, Side::Interior, &tol());
        let gap = (o.exponent.value() - est.df_lower).abs();
        ok &= gap <= 0.05;
        parts.push(format!(
            "beta={beta}: oracle={:.4} criterion={:.4} gap={gap:.4}",
            o.exponent.value(),
            est.df_lower
        ));
    }
    check(ok, parts.join("; "))
}

fn jet_engine() -> Outcome {
    let mut gen = RandomExprs::new(2, 2024);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    let mut attempts = 0;
    while evaluated < 500 && attempts < 2000 {
        attempts += 1;
        let e = gen.smooth(3);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Ok(r) = fd_check(&e, &from_real(&x), &Params::new(), 1e-4) {
            worst = worst.max(r);
            evaluated += 1;
        }
    }
    let mut poly = RandomExprs::new(2, 7);
    let mut exact = 0.0f64;
    for _ in 0..200 {
        let e = poly.real_polynomial(2, 6);
        let x: Vec<f64> = (0..4)
            .map(|_| rng.gen_range(-16i32..=16) as f64 / 16.0)
            .collect();
        exact = exact.max(fd_check(&e, &from_real(&x), &Params::new(), 2f64.powi(-10)).unwrap());
    }
    check(
        evaluated == 500 && worst <= 1e-5 && exact == 0.0,
        format!("random corpus {evaluated} cases max rel={worst:.1e}; polynomial corpus 200 cases max={exact:e}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "strictly pseudoconvex baselines",
            strictly_pseudoconvex_baselines,
        ),
        ("complex ellipsoid weak circle", complex_ellipsoid),
        (
            "route agreement and extension independence",
            route_agreement,
        ),
        ("d alpha vanishes on null directions", d_alpha_vanishes),
        (
            "alpha against the finite-difference commutator",
            alpha_matches_commutator,
        ),
        ("rescaling law", rescaling_law),
        ("CR invariance", cr_invariance),
        ("worm relation 1/DF + 1/S = 2", worm_relation),
        ("oracle against criterion at psi = 0", oracle_consistency),
        ("jet engine against finite differences", jet_engine),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("PASS criterion {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
