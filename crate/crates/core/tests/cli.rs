use std::path::Path;
use std::process::Command;

fn crindex(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crindex"))
        .args(args)
        .output()
        .expect("spawn crindex");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn df_on_ball_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ball.json");
    let (code, err) = crindex(&[
        "df",
        "--builtin",
        "ball",
        "--samples",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["df_lower"].as_f64(), Some(1.0));
    assert_eq!(v["boundary"]["weak"].as_u64(), Some(0));
    assert_eq!(v["pseudoconvex"], serde_json::Value::Bool(true));
    assert_eq!(v["config"]["seed"].as_u64(), Some(7));
}

#[test]
fn worm_sweep_csv_has_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let (code, err) = crindex(&[
        "worm-sweep",
        "--beta",
        "2.0,2.5",
        "--samples",
        "300",
        "--budget",
        "200",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,df_lower,st_upper,sum_reciprocal"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r[1] > 0.0 && r[1] < 1.0 && r[2] > 1.0, "{r:?}");
        assert!((r[3] - 2.0).abs() < 0.1, "{r:?}");
    }
    assert!(out.with_extension("json").exists());
}

#[test]
fn holomorphic_rho_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "bad.dom",
        "name = \"bad\"\ndim = 2\nrho = \"z1\"\nbbox = [-1..1]\n",
    );
    let (code, err) = crindex(&["df", "--domain", &f]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn worm_with_small_beta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "worm.dom",
        "builtin = \"worm\"\nparam beta = 1.0\n",
    );
    let (code, err) = crindex(&["df", "--domain", &f]);
    assert_eq!(code, 2, "{err}");
    let (code, _) = crindex(&["df", "--builtin", "worm", "--beta", "1.0"]);
    assert_eq!(code, 2);
}

#[test]
fn non_pseudoconvex_domain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "shell.dom",
        "name = \"anti\"\ndim = 2\nrho = \"1 - abs2(z1) - abs2(z2)\"\nbbox = [-1.5..1.5]\n",
    );
    let out = dir.path().join("r.json");
    let (code, err) = crindex(&[
        "df",
        "--domain",
        &f,
        "--samples",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["pseudoconvex"]["witness"].is_object());
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(
        crindex(&["df", "--builtin", "ball", "--samples", "zero"]).0,
        2
    );
    assert_eq!(crindex(&["df", "--builtin", "ball", "--tol-levi=-1"]).0, 2);
    assert_eq!(crindex(&["df", "--builtin", "nope"]).0, 2);
}
