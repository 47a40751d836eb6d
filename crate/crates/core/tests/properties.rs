use num_complex::Complex64 as C;
use proptest::prelude::*;

use crindex::cli::builtin::Builtin;
use crindex::expr::{parse, parse_with_params, Expr, Params, RandomExprs};
use crindex::geometry::Strategy as Sampling;
use crindex::indices::{
    df_estimate, df_threshold, scan_boundary, steinness_threshold, Exponent, Tolerances,
};
use crindex::jet::{jet_eval, to_wirtinger};

fn point() -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2)
        .prop_map(|v| v.into_iter().map(|(a, b)| C::new(a, b)).collect())
}

fn close(a: C, b: C, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let e = RandomExprs::new(2, seed).any(5);
        let back = parse_with_params(&e.to_string(), 2, &["beta".to_string()]).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn conj_commutes_with_eval(seed in any::<u64>(), z in point()) {
        let e = RandomExprs::new(2, seed).smooth(3);
        let c = parse(&format!("conj({e})"), 2).unwrap();
        let p = Params::new();
        if let (Ok(u), Ok(v)) = (e.eval(&z, &p), c.eval(&z, &p)) {
            prop_assert!(close(u.conj(), v, 1e-14));
        }
    }

    #[test]
    fn jets_are_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, z in point()) {
        let f = RandomExprs::new(2, s1).real_polynomial(3, 4);
        let g = RandomExprs::new(2, s2).smooth(2);
        let g = parse(&format!("re({g})"), 2).unwrap();
        let h = parse(&format!("({a:?})*({f}) + ({g})"), 2).unwrap();
        let p = Params::new();
        let (Ok(jf), Ok(jg), Ok(jh)) = (jet_eval(&f, &z, &p), jet_eval(&g, &z, &p), jet_eval(&h, &z, &p)) else {
            return Ok(());
        };
        let lin = jf.scale(a).add(&jg);
        let tol = |x: f64, y: f64| (x - y).abs() <= 1e-10 * (1.0 + x.abs().max(y.abs()));
        prop_assert!(tol(lin.value(), jh.value()));
        for i in 0..4 {
            prop_assert!(tol(lin.grad()[i], jh.grad()[i]));
            for j in 0..4 {
                prop_assert!(tol(lin.hess(i, j), jh.hess(i, j)));
                for k in 0..4 {
                    prop_assert!(tol(lin.third(i, j, k), jh.third(i, j, k)));
                }
            }
        }
    }

    #[test]
    fn levi_matrix_is_hermitian(seed in any::<u64>(), z in point()) {
        let e = RandomExprs::new(2, seed).real_polynomial(3, 6);
        let w = to_wirtinger(&jet_eval(&e, &z, &Params::new()).unwrap()).unwrap();
        prop_assert!(w.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn thresholds_are_monotone_in_b(a in 0.0f64..2.0, b in -2.0f64..2.0, db in 0.0f64..1.0) {
        let t = Tolerances::default();
        let lo = df_threshold(a, b, t.tol_a, t.tol_b);
        let hi = df_threshold(a, b + db, t.tol_a, t.tol_b);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi <= lo + 1e-15);
        let s_lo = steinness_threshold(a, b, t.tol_a, t.tol_b).value();
        let s_hi = steinness_threshold(a, b + db, t.tol_a, t.tol_b).value();
        prop_assert!(s_lo >= 1.0 && s_hi >= 1.0);
        prop_assert!(s_hi <= s_lo * (1.0 + 1e-15) || s_lo.is_infinite());
    }

    #[test]
    fn thresholds_ignore_direction_scaling(a in 1e-3f64..2.0, b in -2.0f64..2.0, c in 0.1f64..10.0) {
        let t = Tolerances::default();
        let s = c * c;
        let d0 = df_threshold(a, b, t.tol_a, t.tol_b);
        let d1 = df_threshold(s * a, s * b, t.tol_a, t.tol_b);
        prop_assert!((d0 - d1).abs() <= 1e-12);
        let st = |x, y| steinness_threshold(x, y, t.tol_a, t.tol_b);
        match (st(a, b), st(s * a, s * b)) {
            (Exponent::Finite(x), Exponent::Finite(y)) => prop_assert!((x - y).abs() <= 1e-12 * x),
            (Exponent::Infinite, Exponent::Infinite) => {}
            (x, y) => prop_assert!(false, "{x:?} vs {y:?}"),
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let spec = Builtin::parse("worm", Some(2.5)).unwrap().spec().unwrap();
    let t = Tolerances::default();
    let run = || {
        let scan = scan_boundary(&spec, Sampling::Random, 200, 11, &t).unwrap();
        let est = df_estimate(&scan, None, &t).unwrap();
        serde_json::to_string(&est).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn rho_expression_prints_and_reparses() {
    let e: Expr = parse("abs2(z1) + 2*re(z1*conj(z2))^2 - exp(-abs2(z2))", 2).unwrap();
    assert_eq!(parse(&e.to_string(), 2).unwrap(), e);
}
