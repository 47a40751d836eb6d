//! Command-line interface.

pub mod builtin;
pub mod files;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::crmap::{
    check_alpha_invariance, check_levi_pushforward, check_map, check_rescaling,
    invariance_experiment, pullback_domain, standard_maps, transport_points, MapSpec,
};
use crate::dangelo::alpha_at;
use crate::error::{Error, Result};
use crate::expr::{parse, DomainSpec, Expr};
use crate::geometry::{analyze_points, PointClass, Strategy};
use crate::indices::{
    df_estimate, optimize_psi, oracle_exponent, oracle_samples, scan_boundary, BoundaryScan,
    Estimate, Objective, PsiFamily, Side, Tolerances,
};
use crate::jet::fd_check;
use builtin::Builtin;
use report::{
    sigma_points, write_text, BoundaryInfo, DomainInfo, OptimizationInfo, OracleReport,
    PointRecord, Pseudoconvexity, Report, RunConfig, SweepRow,
};

#[derive(Debug, Parser)]
#[command(
    name = "crindex",
    version,
    about = "Levi geometry and DF / Steinness index estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the boundary and report Levi spectra, classification and alpha per point.
    Analyze(Common),
    /// Lower bound on the Diederich-Fornaess index.
    Df(Common),
    /// Upper bound on the Steinness index.
    Steinness(Common),
    /// Plurisubharmonic-exponent bisection inside and outside the domain.
    Oracle(OracleArgs),
    /// Invariance residuals under holomorphic maps.
    CrCheck(CrCheckArgs),
    /// DF and Steinness bounds for worm domains over a grid of beta.
    WormSweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Builtin domain: ball, ellipsoid(a1,..,an), complex_ellipsoid(m) or worm.
    #[arg(long, conflicts_with = "domain")]
    pub builtin: Option<String>,
    /// Domain file.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Worm parameter (must exceed pi/2); `worm-sweep` takes a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Boundary sampling strategy: grid or random.
    #[arg(long, default_value = "grid")]
    pub strategy: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_levi: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_a: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_b: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub bisect_tol: f64,
    /// Fixed perturbation: the defining function becomes rho * exp(psi).
    #[arg(long)]
    pub psi: Option<String>,
    /// Optimize psi over a family. worm-sweep always does unless --psi is given.
    #[arg(long)]
    pub optimize: bool,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// auto, poly2, winding, extras, or a `;`-separated list of expressions.
    #[arg(long, default_value = "auto")]
    pub psi_basis: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Interior,
    Exterior,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    /// Normal offsets `delta * 2^-k` for `k < levels`.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Points per axis of the coarse global grid.
    #[arg(long, default_value_t = 5)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CrCheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Map file (holomorphic, with inverse).
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Builtin maps: z2-rotation, diagonal-unitary, shear-z2, shear-z1 or standard.
    #[arg(long, default_value = "standard")]
    pub map_builtin: String,
    /// Also compare optimized index bounds on both sides.
    #[arg(long)]
    pub experiment: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also run the interior oracle at psi = 0.
    #[arg(long)]
    pub oracle: bool,
}

impl Common {
    pub fn tolerances(&self) -> Result<Tolerances> {
        let t = Tolerances {
            tol_levi: self.tol_levi,
            tol_a: self.tol_a,
            tol_b: self.tol_b,
            fd_step: self.fd_step,
            bisect_tol: self.bisect_tol,
            ..Tolerances::default()
        };
        t.validate()?;
        Ok(t)
    }

    pub fn strategy(&self) -> Result<Strategy> {
        self.strategy.parse()
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        match (&self.builtin, &self.domain) {
            (Some(b), None) => {
                if self.beta.len() > 1 {
                    return Err(Error::Invalid("a single --beta value is expected".into()));
                }
                Builtin::parse(b, self.beta.first().copied())?.spec()
            }
            (None, Some(p)) => files::load_domain(p),
            (None, None) => Err(Error::Invalid(
                "one of --builtin or --domain is required".into(),
            )),
            (Some(_), Some(_)) => Err(Error::Invalid(
                "--builtin and --domain are exclusive".into(),
            )),
        }
    }

    pub fn psi_expr(&self, spec: &DomainSpec) -> Result<Option<Expr>> {
        self.psi
            .as_ref()
            .map(|s| {
                let e = parse(s, spec.n)?;
                PsiFamily::from_exprs(vec![e.clone()]).validate(&spec.bbox, self.seed)?;
                Ok(e)
            })
            .transpose()
    }

    pub fn family(&self, spec: &DomainSpec) -> Result<PsiFamily> {
        let fam = match self.psi_basis.as_str() {
            "auto" if !spec.psi_extras.is_empty() => PsiFamily::from_exprs(spec.psi_extras.clone()),
            "auto" | "poly2" => PsiFamily::poly2(spec.n),
            "extras" => PsiFamily::from_exprs(spec.psi_extras.clone()),
            "winding" if spec.n == 2 => PsiFamily::winding(),
            "winding" => return Err(Error::Invalid("the winding basis needs dim = 2".into())),
            list => {
                let src: Vec<&str> = list
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect();
                PsiFamily::from_sources(spec.n, &src)?
            }
        };
        fam.validate(&spec.bbox, self.seed)?;
        Ok(fam)
    }

    fn config(&self, command: &str, map: Option<String>) -> Result<RunConfig> {
        Ok(RunConfig {
            command: command.into(),
            builtin: self.builtin.clone(),
            domain_file: self.domain.as_ref().map(|p| p.display().to_string()),
            map,
            seed: self.seed,
            samples: self.samples,
            strategy: self.strategy.clone(),
            tolerances: self.tolerances()?,
            psi: self.psi.clone(),
            psi_basis: self.psi_basis.clone(),
            optimize: self.optimize,
            budget: self.budget,
            format: match self.format {
                Format::Json => "json".into(),
                Format::Csv => "csv".into(),
            },
        })
    }

    fn scan(&self, spec: &DomainSpec) -> Result<BoundaryScan> {
        scan_boundary(
            spec,
            self.strategy()?,
            self.samples,
            self.seed,
            &self.tolerances()?,
        )
    }

    /// JSON goes to `--out` (or stdout). With `--format csv` the table goes there instead and
    /// the JSON report is written next to it.
    fn emit(&self, report: &Report) -> Result<()> {
        match (self.format, &self.out) {
            (Format::Json, Some(p)) => write_text(p, &report.to_json()?),
            (Format::Json, None) => {
                println!("{}", report.to_json()?);
                Ok(())
            }
            (Format::Csv, Some(p)) => {
                write_text(p, &report.to_csv()?)?;
                write_text(&p.with_extension("json"), &report.to_json()?)
            }
            (Format::Csv, None) => {
                print!("{}", report.to_csv()?);
                Ok(())
            }
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Analyze(c) => analyze(c),
        Command::Df(c) => estimate(c, Objective::DiederichFornaess),
        Command::Steinness(c) => estimate(c, Objective::Steinness),
        Command::Oracle(a) => oracle(a),
        Command::CrCheck(a) => cr_check(a),
        Command::WormSweep(a) => worm_sweep(a),
    }
}

fn analyze(c: &Common) -> Result<i32> {
    let spec = c.domain()?;
    let tol = c.tolerances()?;
    let mut report = Report::new(c.config("analyze", None)?);
    let scan = c.scan(&spec)?;
    let analyses = analyze_points(&spec, &scan.boundary_points, tol.tol_levi, c.seed);
    report.points = analyses
        .iter()
        .map(|a| PointRecord {
            p: a.point.clone(),
            class: match a.class {
                PointClass::StrictlyPseudoconvex => "strictly_pseudoconvex",
                PointClass::Weak { .. } => "weak",
                PointClass::NonPseudoconvex { .. } => "non_pseudoconvex",
            }
            .into(),
            eigenvalues: a.levi.eigenvalues.clone(),
            lambda_scale: a.levi.lambda_scale,
            alpha: alpha_at(&a.jet, &a.frame).a,
        })
        .collect();
    let fd: f64 = scan
        .boundary_points
        .iter()
        .take(10)
        .filter_map(|p| fd_check(&spec.rho, p, &spec.params, tol.fd_step).ok())
        .fold(0.0, f64::max);
    report.residual_suites.insert(
        "jet_fd".into(),
        json!({ "points": scan.boundary_points.len().min(10), "max_relative": fd }),
    );
    if scan.is_pseudoconvex() {
        let est = df_estimate(&scan, None, &tol)?;
        report.sigma_points = sigma_points(&scan, &est);
    }
    report.domain = Some(DomainInfo::from(&spec));
    report.pseudoconvex = Some(Pseudoconvexity::from(&scan));
    report.boundary = Some(BoundaryInfo::from(&scan));
    c.emit(&report)?;
    Ok(0)
}

fn witnesses(report: &mut Report, est: &Estimate) {
    report.df_witness = est.df_witness.map(|k| est.records[k].point.clone());
    report.st_witness = est.st_witness.map(|k| est.records[k].point.clone());
}

fn estimate(c: &Common, objective: Objective) -> Result<i32> {
    let name = match objective {
        Objective::DiederichFornaess => "df",
        Objective::Steinness => "steinness",
    };
    let spec = c.domain()?;
    let tol = c.tolerances()?;
    let mut report = Report::new(c.config(name, None)?);
    report.domain = Some(DomainInfo::from(&spec));
    let scan = c.scan(&spec)?;
    report.pseudoconvex = Some(Pseudoconvexity::from(&scan));
    report.boundary = Some(BoundaryInfo::from(&scan));
    if let Err(e) = scan.require_pseudoconvex() {
        c.emit(&report)?;
        return Err(e);
    }
    let est = if c.optimize {
        if c.psi.is_some() {
            return Err(Error::Invalid("--psi and --optimize are exclusive".into()));
        }
        let fam = c.family(&spec)?;
        let o = optimize_psi(&scan, &fam, objective, c.budget, 0, &tol)?;
        report.optimization = Some(OptimizationInfo {
            objective: name.into(),
            basis: o.basis.clone(),
            theta: o.theta.clone(),
            baseline_df: o.baseline_df,
            baseline_st: o.baseline_st,
            evals: o.evals,
            budget_exhausted: o.budget_exhausted,
        });
        o.estimate
    } else {
        let psi = c.psi_expr(&spec)?;
        df_estimate(&scan, psi.as_ref(), &tol)?
    };
    match objective {
        Objective::DiederichFornaess => report.df_lower = Some(est.df_lower),
        Objective::Steinness => report.st_upper = Some(est.st_upper),
    }
    witnesses(&mut report, &est);
    report.sigma_points = sigma_points(&scan, &est);
    c.emit(&report)?;
    Ok(0)
}

fn oracle(a: &OracleArgs) -> Result<i32> {
    let c = &a.common;
    let spec = c.domain()?;
    let tol = c.tolerances()?;
    let psi = c.psi_expr(&spec)?;
    let mut report = Report::new(c.config("oracle", None)?);
    report.domain = Some(DomainInfo::from(&spec));
    let scan = c.scan(&spec)?;
    report.pseudoconvex = Some(Pseudoconvexity::from(&scan));
    report.boundary = Some(BoundaryInfo::from(&scan));
    let run = |side: Side| {
        let s = oracle_samples(
            &spec,
            psi.as_ref(),
            side,
            &scan.boundary_points,
            a.levels,
            a.grid,
        );
        oracle_exponent(&s, side, &tol)
    };
    let mut o = OracleReport::default();
    if a.side != SideArg::Exterior {
        o.interior = Some(run(Side::Interior));
    }
    if a.side != SideArg::Interior {
        o.exterior = Some(run(Side::Exterior));
    }
    report.oracle = Some(o);
    c.emit(&report)?;
    Ok(0)
}

fn selected_maps(a: &CrCheckArgs) -> Result<Vec<MapSpec>> {
    if let Some(p) = &a.map {
        return Ok(vec![files::load_map(p)?]);
    }
    let all = standard_maps();
    if a.map_builtin == "standard" {
        return Ok(all);
    }
    a.map_builtin
        .split(',')
        .map(|n| {
            all.iter()
                .find(|m| m.name == n.trim())
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("unknown builtin map {n:?}")))
        })
        .collect()
}

fn cr_check(a: &CrCheckArgs) -> Result<i32> {
    let c = &a.common;
    let spec2 = c.domain()?;
    let tol = c.tolerances()?;
    let maps = selected_maps(a)?;
    let map_label = a
        .map
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or(a.map_builtin.clone());
    let mut report = Report::new(c.config("cr-check", Some(map_label))?);
    report.domain = Some(DomainInfo::from(&spec2));
    let scan2 = c.scan(&spec2)?;
    report.pseudoconvex = Some(Pseudoconvexity::from(&scan2));
    report.boundary = Some(BoundaryInfo::from(&scan2));
    let psi = c.psi_expr(&spec2)?;
    if let Some(psi) = &psi {
        let weak: Vec<_> = scan2.weak.iter().map(|w| w.point.clone()).collect();
        let pts = if weak.is_empty() {
            &scan2.boundary_points
        } else {
            &weak
        };
        let r = check_rescaling(&spec2, psi, pts, &tol, c.seed)?;
        report.residual_suites.insert("rescaling".into(), json!(r));
    }
    for m in &maps {
        if m.n_in != spec2.n || m.n_out != spec2.n {
            return Err(Error::DimensionMismatch {
                expected: spec2.n,
                got: m.n_out,
            });
        }
        let check = check_map(m, &spec2.bbox, 1000, c.seed);
        let spec1 = pullback_domain(m, &spec2)?;
        let pts1 = transport_points(m, &spec1, &scan2.boundary_points);
        let levi = check_levi_pushforward(m, &spec1, &spec2, &pts1, 3, c.seed)?;
        let alpha = check_alpha_invariance(m, &spec1, &spec2, &pts1, &tol, c.seed)?;
        let mut suite = json!({
            "map": check,
            "levi_pushforward": levi,
            "alpha_invariance": alpha,
        });
        if a.experiment {
            let fam = c.family(&spec2)?;
            let e = invariance_experiment(m, &spec2, &fam, c.budget, c.samples, &a.seeds, &tol)?;
            suite["experiment"] = json!(e);
        }
        report.residual_suites.insert(m.name.clone(), suite);
    }
    c.emit(&report)?;
    Ok(0)
}

fn worm_sweep(a: &SweepArgs) -> Result<i32> {
    let c = &a.common;
    let tol = c.tolerances()?;
    let mut report = Report::new(c.config("worm-sweep", None)?);
    report.config.optimize = c.optimize || c.psi.is_none();
    let betas = if c.beta.is_empty() {
        vec![2.0, 2.5, 3.0]
    } else {
        c.beta.clone()
    };
    for &beta in &betas {
        let spec = builtin::worm(beta)?;
        let scan = c.scan(&spec)?;
        scan.require_pseudoconvex()?;
        let (df, st, theta_df, theta_st) = if c.optimize || c.psi.is_none() {
            let fam = c.family(&spec)?;
            let d = optimize_psi(&scan, &fam, Objective::DiederichFornaess, c.budget, 0, &tol)?;
            let s = optimize_psi(&scan, &fam, Objective::Steinness, c.budget, 0, &tol)?;
            (d.estimate.df_lower, s.estimate.st_upper, d.theta, s.theta)
        } else {
            let e = df_estimate(&scan, c.psi_expr(&spec)?.as_ref(), &tol)?;
            (e.df_lower, e.st_upper, Vec::new(), Vec::new())
        };
        let oracle_df = a.oracle.then(|| {
            let s = oracle_samples(&spec, None, Side::Interior, &scan.boundary_points, 6, 5);
            oracle_exponent(&s, Side::Interior, &tol).exponent.value()
        });
        report.sweep.push(SweepRow {
            beta,
            weak_points: scan.weak.len(),
            df_lower: df,
            st_upper: st,
            sum_reciprocal: 1.0 / df + 1.0 / st.value(),
            theta_df,
            theta_st,
            oracle_df,
        });
    }
    c.emit(&report)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(run(["crindex", "frobnicate"]), 2);
        assert_eq!(run(["crindex", "df", "--builtin", "torus"]), 2);
        assert_eq!(
            run(["crindex", "df", "--builtin", "worm", "--beta", "1.0"]),
            2
        );
        assert_eq!(
            run(["crindex", "df", "--builtin", "ball", "--tol-levi=-1"]),
            2
        );
    }

    #[test]
    fn families() {
        let spec = builtin::worm(2.0).unwrap();
        let mut c = Cli::try_parse_from(["crindex", "df", "--builtin", "worm"]).unwrap();
        let Command::Df(ref mut common) = c.command else {
            panic!()
        };
        assert_eq!(common.family(&spec).unwrap().len(), 5);
        common.psi_basis = "winding".into();
        assert_eq!(common.family(&spec).unwrap().len(), 5);
        common.psi_basis = "re(z1); abs2(z2)".into();
        assert_eq!(common.family(&spec).unwrap().len(), 2);
        common.psi_basis = "z1".into();
        assert!(common.family(&spec).is_err());
    }
}
