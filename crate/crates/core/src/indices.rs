//! Pointwise index thresholds, Diederich-Fornaess and Steinness estimates over a family of
//! defining functions `rho * exp(psi)`, and a plurisubharmonic-exponent oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::dangelo::{ABQuantities, DAngelo};
use crate::error::{Error, Result};
use crate::expr::{parse, validate_real, DomainSpec, Expr, Params};
use crate::geometry::{
    analyze_points, frame_at, sample_boundary, PointClass, Strategy, DEFAULT_TOL_LEVI,
};
use crate::jet::{jet_eval, Jet3, WirtingerJet};
use crate::nelder_mead::{maximize, NmOptions};
use crate::space::{from_real, to_real, BBox, Point};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_levi: f64,
    pub tol_a: f64,
    pub tol_b: f64,
    pub fd_step: f64,
    pub bisect_tol: f64,
    /// Eigenvalue floor in the plurisubharmonicity predicate.
    pub psh_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_levi: DEFAULT_TOL_LEVI,
            tol_a: 1e-9,
            tol_b: 1e-9,
            fd_step: 1e-4,
            bisect_tol: 1e-3,
            psh_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tol_levi,
            self.tol_a,
            self.tol_b,
            self.fd_step,
            self.bisect_tol,
            self.psh_tol,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::Invalid("all tolerances must be positive".into()))
        }
    }
}

/// An exponent in `[1, inf]`, serialized as a number or the string `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(x) => x,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_finite() {
            Exponent::Finite(x)
        } else {
            Exponent::Infinite
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(x) => s.serialize_f64(*x),
            Exponent::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// Largest `eta` in `(0, 1]` with `A/(1 - eta) + B <= 0`; `0.0` stands for failure.
pub fn df_threshold(a: f64, b: f64, tol_a: f64, tol_b: f64) -> f64 {
    if a <= tol_a && b <= tol_b {
        return 1.0;
    }
    if b < -tol_b {
        let eta = 1.0 + a / b;
        return if eta > 0.0 { eta.min(1.0) } else { 0.0 };
    }
    0.0
}

/// Smallest `eta` in `[1, inf)` with `A/(eta - 1) - B <= 0`.
pub fn steinness_threshold(a: f64, b: f64, tol_a: f64, tol_b: f64) -> Exponent {
    if a <= tol_a && b >= -tol_b {
        return Exponent::Finite(1.0);
    }
    if b > tol_b {
        return Exponent::Finite(1.0 + a / b);
    }
    Exponent::Infinite
}

/// Continuous surrogate for the DF threshold: `u = -(A + B) / A` with `eta = u / (1 + u)`.
pub fn df_score(a: f64, b: f64, tol_a: f64) -> f64 {
    -(a + b) / a.max(tol_a)
}

/// Continuous surrogate for the Steinness threshold: `c = (A + B) / A` with `eta = c / (c - 1)`.
pub fn st_score(a: f64, b: f64, tol_a: f64) -> f64 {
    (a + b) / a.max(tol_a)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRecord {
    pub point: Point,
    pub direction: Vec<C>,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub df_threshold: f64,
    pub st_threshold: Exponent,
}

/// A numerically weak boundary point with its null directions and the jet of `rho`.
#[derive(Debug, Clone)]
pub struct WeakPoint {
    pub point: Point,
    pub eigenvalues: Vec<f64>,
    pub null_dirs: Vec<Vec<C>>,
    pub rho_jet: Jet3,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonPseudoconvexWitness {
    pub point: Point,
    pub eigenvalue: f64,
}

/// Result of sampling and classifying the boundary.
#[derive(Debug, Clone)]
pub struct BoundaryScan {
    pub boundary_points: Vec<Point>,
    pub strictly_pseudoconvex: usize,
    pub weak: Vec<WeakPoint>,
    pub non_pseudoconvex: Option<NonPseudoconvexWitness>,
    pub non_pseudoconvex_count: usize,
    pub warning: Option<String>,
}

impl BoundaryScan {
    pub fn is_pseudoconvex(&self) -> bool {
        self.non_pseudoconvex.is_none()
    }

    pub fn require_pseudoconvex(&self) -> Result<()> {
        match &self.non_pseudoconvex {
            None => Ok(()),
            Some(w) => Err(Error::NotPseudoconvex {
                eigenvalue: w.eigenvalue,
                point: to_real(&w.point),
            }),
        }
    }
}

pub fn scan_boundary(
    spec: &DomainSpec,
    strategy: Strategy,
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<BoundaryScan> {
    let sample = sample_boundary(spec, strategy, count, seed)?;
    let mut scan = scan_points(spec, sample.points, seed, tol)?;
    scan.warning = sample.warning;
    Ok(scan)
}

/// Classifies the given boundary points.
pub fn scan_points(
    spec: &DomainSpec,
    points: Vec<Point>,
    seed: u64,
    tol: &Tolerances,
) -> Result<BoundaryScan> {
    let analyses = analyze_points(spec, &points, tol.tol_levi, seed);
    let mut scan = BoundaryScan {
        boundary_points: points,
        strictly_pseudoconvex: 0,
        weak: Vec::new(),
        non_pseudoconvex: None,
        non_pseudoconvex_count: 0,
        warning: None,
    };
    for a in analyses {
        match a.class {
            PointClass::StrictlyPseudoconvex => scan.strictly_pseudoconvex += 1,
            PointClass::Weak { null_dirs } => {
                let rho_jet = jet_eval(&spec.rho, &a.point, &Params::new())?;
                scan.weak.push(WeakPoint {
                    point: a.point,
                    eigenvalues: a.levi.eigenvalues,
                    null_dirs,
                    rho_jet,
                });
            }
            PointClass::NonPseudoconvex { eigenvalue } => {
                scan.non_pseudoconvex_count += 1;
                let worse = scan
                    .non_pseudoconvex
                    .as_ref()
                    .is_none_or(|w| eigenvalue < w.eigenvalue);
                if worse {
                    scan.non_pseudoconvex = Some(NonPseudoconvexWitness {
                        point: a.point,
                        eigenvalue,
                    });
                }
            }
        }
    }
    Ok(scan)
}

/// Finite-dimensional family `psi_theta = sum theta_i basis_i`.
#[derive(Debug, Clone)]
pub struct PsiFamily {
    pub names: Vec<String>,
    pub basis: Vec<Expr>,
}

impl PsiFamily {
    pub fn empty() -> Self {
        Self {
            names: Vec::new(),
            basis: Vec::new(),
        }
    }

    pub fn from_sources(n: usize, sources: &[&str]) -> Result<Self> {
        let basis = sources
            .iter()
            .map(|s| parse(s, n).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            names: sources.iter().map(|s| s.to_string()).collect(),
            basis,
        })
    }

    pub fn from_exprs(basis: Vec<Expr>) -> Self {
        Self {
            names: basis.iter().map(|e| e.to_string()).collect(),
            basis,
        }
    }

    /// Real polynomials of degree one and two in the real coordinates.
    pub fn poly2(n: usize) -> Self {
        let coords: Vec<String> = (1..=n)
            .flat_map(|j| [format!("re(z{j})"), format!("im(z{j})")])
            .collect();
        let mut src: Vec<String> = coords.clone();
        for a in 0..coords.len() {
            for b in a..coords.len() {
                src.push(format!("{}*{}", coords[a], coords[b]));
            }
        }
        let refs: Vec<&str> = src.iter().map(|s| s.as_str()).collect();
        Self::from_sources(n, &refs).expect("polynomial basis parses")
    }

    /// Functions of the winding variable `t = log|z2|^2` together with `Re z1`, `Im z1`.
    pub fn winding() -> Self {
        Self::from_sources(
            2,
            &[
                "1",
                "log(abs2(z2))",
                "pow(log(abs2(z2)),2)",
                "re(z1)",
                "im(z1)",
            ],
        )
        .expect("winding basis parses")
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Rejects basis functions with imaginary parts above `1e-12` on the box.
    pub fn validate(&self, bbox: &BBox, seed: u64) -> Result<()> {
        for e in &self.basis {
            let r = validate_real(e, bbox, &Params::new(), 1000, seed);
            if !r.is_real(1e-12) {
                return Err(Error::NotReal(r.max_imag));
            }
        }
        Ok(())
    }

    /// `psi_theta` as a single expression.
    pub fn combine(&self, theta: &[f64], n: usize) -> Expr {
        let mut acc = Expr::num(n, 0.0);
        for (t, e) in theta.iter().zip(&self.basis) {
            if *t != 0.0 {
                acc = acc + Expr::num(n, *t) * e.clone();
            }
        }
        acc
    }

    /// Jets of every basis function at every weak point.
    pub fn jets(&self, scan: &BoundaryScan) -> Result<Vec<Vec<Jet3>>> {
        scan.weak
            .par_iter()
            .map(|w| {
                self.basis
                    .iter()
                    .map(|e| jet_eval(e, &w.point, &Params::new()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    }
}

/// Wirtinger data of `rho * exp(sum theta_i psi_i)` from precomputed jets.
pub fn rescaled_jet(rho: &Jet3, psi: &[Jet3], theta: &[f64]) -> Result<WirtingerJet> {
    let active: Vec<(f64, &Jet3)> = theta
        .iter()
        .copied()
        .zip(psi)
        .filter(|(t, _)| *t != 0.0)
        .collect();
    let r = if active.is_empty() {
        rho.clone()
    } else {
        let mut s = active[0].1.scale(active[0].0);
        for (t, j) in &active[1..] {
            s = s.add(&j.scale(*t));
        }
        rho.mul(&s.exp())
    };
    crate::jet::to_wirtinger(&r)
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub df_lower: f64,
    pub st_upper: Exponent,
    /// Minimum of the continuous DF surrogate (`+inf` without constraints).
    #[serde(skip)]
    pub df_score: f64,
    /// Minimum of the continuous Steinness surrogate.
    #[serde(skip)]
    pub st_score: f64,
    pub records: Vec<ThresholdRecord>,
    pub df_witness: Option<usize>,
    pub st_witness: Option<usize>,
}

/// Per-(point, null direction) thresholds for the defining function `rho exp(psi_theta)`.
pub fn evaluate(
    scan: &BoundaryScan,
    psi_jets: &[Vec<Jet3>],
    theta: &[f64],
    tol: &Tolerances,
) -> Result<Estimate> {
    let per_point: Vec<Vec<ThresholdRecord>> = scan
        .weak
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let empty = Vec::new();
            let pj = psi_jets.get(i).unwrap_or(&empty);
            let wj = rescaled_jet(&w.rho_jet, pj, theta)?;
            let f = frame_at(&wj)?;
            let d = DAngelo::new(&wj, &f);
            Ok(w.null_dirs
                .iter()
                .map(|v| {
                    let ABQuantities { a, b, .. } = d.ab_form(v);
                    ThresholdRecord {
                        point: w.point.clone(),
                        direction: v.clone(),
                        a,
                        b,
                        df_threshold: df_threshold(a, b, tol.tol_a, tol.tol_b),
                        st_threshold: steinness_threshold(a, b, tol.tol_a, tol.tol_b),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let records: Vec<ThresholdRecord> = per_point.into_iter().flatten().collect();
    let mut est = Estimate {
        df_lower: 1.0,
        st_upper: Exponent::Finite(1.0),
        df_score: f64::INFINITY,
        st_score: f64::INFINITY,
        records,
        df_witness: None,
        st_witness: None,
    };
    for (k, r) in est.records.iter().enumerate() {
        if r.df_threshold < est.df_lower || (est.df_witness.is_none() && r.df_threshold < 1.0) {
            est.df_lower = r.df_threshold;
            est.df_witness = Some(k);
        }
        if r.st_threshold.value() > est.st_upper.value()
            || (est.st_witness.is_none() && r.st_threshold.value() > 1.0)
        {
            est.st_upper = r.st_threshold;
            est.st_witness = Some(k);
        }
        est.df_score = est.df_score.min(df_score(r.a, r.b, tol.tol_a));
        est.st_score = est.st_score.min(st_score(r.a, r.b, tol.tol_a));
    }
    Ok(est)
}

/// DF bound for the single defining function `rho exp(psi)`.
pub fn df_estimate(scan: &BoundaryScan, psi: Option<&Expr>, tol: &Tolerances) -> Result<Estimate> {
    scan.require_pseudoconvex()?;
    let fam = PsiFamily::from_exprs(psi.into_iter().cloned().collect());
    let jets = fam.jets(scan)?;
    evaluate(scan, &jets, &vec![1.0; fam.len()], tol)
}

/// Steinness bound for the single defining function `rho exp(psi)`.
pub fn steinness_estimate(
    scan: &BoundaryScan,
    psi: Option<&Expr>,
    tol: &Tolerances,
) -> Result<Estimate> {
    df_estimate(scan, psi, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    DiederichFornaess,
    Steinness,
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimized {
    pub objective: Objective,
    pub basis: Vec<String>,
    pub theta: Vec<f64>,
    pub estimate: Estimate,
    pub baseline_df: f64,
    pub baseline_st: Exponent,
    pub evals: usize,
    pub budget_exhausted: bool,
}

impl Optimized {
    /// The bound the run was optimizing: a lower bound on DF or an upper bound on S.
    pub fn bound(&self) -> f64 {
        match self.objective {
            Objective::DiederichFornaess => self.estimate.df_lower,
            Objective::Steinness => self.estimate.st_upper.value(),
        }
    }
}

/// Nelder-Mead over `theta` (4 restarts) maximizing the continuous surrogate of the chosen
/// index; the result never falls below the `theta = 0` baseline. A nonzero `seed` shifts the
/// starting point by a small pseudo-random offset.
pub fn optimize_psi(
    scan: &BoundaryScan,
    family: &PsiFamily,
    objective: Objective,
    budget: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Optimized> {
    scan.require_pseudoconvex()?;
    let jets = family.jets(scan)?;
    let zero = vec![0.0; family.len()];
    let baseline = evaluate(scan, &jets, &zero, tol)?;
    let score = |e: &Estimate| match objective {
        Objective::DiederichFornaess => e.df_score,
        Objective::Steinness => e.st_score,
    };
    let better = |a: &Estimate, b: &Estimate| match objective {
        Objective::DiederichFornaess => a.df_lower > b.df_lower,
        Objective::Steinness => a.st_upper.value() < b.st_upper.value(),
    };
    let (baseline_df, baseline_st) = (baseline.df_lower, baseline.st_upper);
    if scan.weak.is_empty() || family.is_empty() || budget == 0 {
        return Ok(Optimized {
            objective,
            basis: family.names.clone(),
            theta: zero,
            estimate: baseline,
            baseline_df,
            baseline_st,
            evals: 0,
            budget_exhausted: budget == 0,
        });
    }
    let f = |theta: &[f64]| -> f64 {
        evaluate(scan, &jets, theta, tol)
            .map(|e| score(&e))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let opts = NmOptions {
        budget,
        ..NmOptions::default()
    };
    let start: Vec<f64> = if seed == 0 {
        zero.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..family.len())
            .map(|_| rng.gen_range(-0.05..0.05))
            .collect()
    };
    let r = maximize(f, &start, &opts);
    let est = evaluate(scan, &jets, &r.x, tol)?;
    let (theta, estimate) = if better(&est, &baseline) || !better(&baseline, &est) {
        (r.x, est)
    } else {
        (zero, baseline)
    };
    Ok(Optimized {
        objective,
        basis: family.names.clone(),
        theta,
        estimate,
        baseline_df,
        baseline_st,
        evals: r.evals,
        budget_exhausted: r.budget_exhausted,
    })
}

// ---------------------------------------------------------------------------
// Plurisubharmonic-exponent oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interior,
    Exterior,
}

/// Order-2 data of `r = rho exp(psi)` at one sample, enough for every exponent.
#[derive(Debug, Clone)]
pub struct PshSample {
    pub point: Point,
    r: f64,
    d: Vec<C>,
    h: Vec<C>,
}

impl PshSample {
    pub fn new(spec: &DomainSpec, psi: Option<&Expr>, z: &[C]) -> Result<Self> {
        let rho = jet_eval(&spec.rho, z, &Params::new())?;
        let r = match psi {
            Some(p) => rho.mul(&jet_eval(p, z, &Params::new())?.exp()),
            None => rho,
        };
        let w = crate::jet::to_wirtinger(&r)?;
        let n = w.n;
        let h = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .map(|(j, k)| w.rho_jkbar(j, k))
            .collect();
        Ok(Self {
            point: z.to_vec(),
            r: w.value,
            d: w.first,
            h,
        })
    }

    pub fn value(&self) -> f64 {
        self.r
    }

    /// Smallest eigenvalue of the complex Hessian of `-(-r)^eta` (interior) or `r^eta`
    /// (exterior).
    pub fn lambda_min(&self, eta: f64, side: Side) -> Result<f64> {
        let n = self.d.len();
        let (pref, base, mix) = match side {
            Side::Interior => {
                if !(self.r < 0.0) {
                    return Err(Error::Invalid("interior sample with rho >= 0".into()));
                }
                if !(eta > 0.0 && eta < 1.0) {
                    return Err(Error::Invalid(format!(
                        "interior exponent {eta} outside (0,1)"
                    )));
                }
                let m = -self.r;
                (eta * m.powf(eta - 2.0), m, 1.0 - eta)
            }
            Side::Exterior => {
                if !(self.r > 0.0) {
                    return Err(Error::Invalid("exterior sample with rho <= 0".into()));
                }
                if !(eta > 1.0) {
                    return Err(Error::Invalid(format!(
                        "exterior exponent {eta} not above 1"
                    )));
                }
                (eta * self.r.powf(eta - 2.0), self.r, eta - 1.0)
            }
        };
        // Hessian entries u_{j kbar}; the quadratic form is sum u_{j kbar} v_j conj(v_k),
        // so the Hermitian matrix acting on v is its transpose.
        let m = DMatrix::from_fn(n, n, |a, b| {
            let u = base * self.h[b * n + a] + mix * self.d[b] * self.d[a].conj();
            u * pref
        });
        let m = (&m + m.adjoint()) * C::new(0.5, 0.0);
        let ev = m.symmetric_eigenvalues();
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Smallest complex-Hessian eigenvalue of the exponent transform at `z`.
pub fn hessian_power(
    spec: &DomainSpec,
    psi: Option<&Expr>,
    exponent: f64,
    side: Side,
    z: &[C],
) -> Result<f64> {
    PshSample::new(spec, psi, z)?.lambda_min(exponent, side)
}

/// Oracle sample points: boundary points pushed along the unit normal by
/// `delta * 2^-k` (`k < levels`) plus a coarse grid, filtered to the requested side.
pub fn oracle_samples(
    spec: &DomainSpec,
    psi: Option<&Expr>,
    side: Side,
    boundary: &[Point],
    levels: usize,
    grid: usize,
) -> Vec<PshSample> {
    let delta = 0.05 * spec.bbox.diameter();
    let sign = match side {
        Side::Interior => -1.0,
        Side::Exterior => 1.0,
    };
    let accept = |s: &PshSample| match side {
        Side::Interior => s.value() < 0.0,
        Side::Exterior => s.value() > 0.0 && s.value() < delta,
    };
    let mut starts: Vec<Point> = boundary
        .par_iter()
        .flat_map_iter(|p| {
            let g = crate::jet::value_grad(&spec.rho, p, &Params::new())
                .map(|(_, g)| g)
                .unwrap_or_default();
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let x0 = to_real(p);
            (0..levels)
                .filter(move |_| gn > 0.0)
                .map(|k| {
                    let s = sign * delta * 0.5f64.powi(k as i32) / gn;
                    from_real(
                        &x0.iter()
                            .zip(&g)
                            .map(|(a, b)| a + s * b)
                            .collect::<Vec<_>>(),
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect();
    if grid > 0 {
        let m = 2 * spec.n;
        let axes: Vec<Vec<f64>> = (0..m).map(|k| spec.bbox.axis_values(k, grid)).collect();
        let total = grid.pow(m as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = (0..m)
                .map(|k| {
                    let v = axes[k][rem % grid];
                    rem /= grid;
                    v
                })
                .collect();
            starts.push(from_real(&x));
        }
    }
    starts
        .par_iter()
        .filter_map(|z| PshSample::new(spec, psi, z).ok())
        .filter(|s| accept(s))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub side: Side,
    pub exponent: Exponent,
    pub iterations: usize,
    pub samples: usize,
    /// The predicate disagreed with monotonicity on a probe grid.
    pub non_monotone: bool,
}

fn predicate(samples: &[PshSample], eta: f64, side: Side, tol: f64) -> bool {
    samples
        .par_iter()
        .all(|s| s.lambda_min(eta, side).map(|l| l >= -tol).unwrap_or(false))
}

/// Bisection for the best exponent admitted by the sample set: the largest `eta < 1`
/// (interior) or the smallest `eta > 1` (exterior, bisected in `1/eta`) such that every
/// sample passes. Returns the conservative end of the final bracket.
pub fn oracle_exponent(samples: &[PshSample], side: Side, tol: &Tolerances) -> OracleResult {
    let pass = |x: f64| -> bool {
        match side {
            Side::Interior => predicate(samples, x, side, tol.psh_tol),
            Side::Exterior => predicate(samples, 1.0 / x, side, tol.psh_tol),
        }
    };
    // x ranges over (0, 1) in both cases; larger x is harder.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while hi - lo > tol.bisect_tol && iterations < 40 {
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let probes = [0.1, 0.3, 0.5, 0.7, 0.9];
    let results: Vec<bool> = probes.iter().map(|&x| pass(x)).collect();
    let non_monotone = results.windows(2).any(|w| !w[0] && w[1]);
    let exponent = match side {
        Side::Interior => Exponent::Finite(lo),
        Side::Exterior => {
            if lo == 0.0 {
                Exponent::Infinite
            } else {
                Exponent::Finite(1.0 / lo)
            }
        }
    };
    OracleResult {
        side,
        exponent,
        iterations,
        samples: samples.len(),
        non_monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(df_threshold(0.0, 0.0, 1e-9, 1e-9), 1.0);
        assert_eq!(df_threshold(1.0, -2.0, 1e-9, 1e-9), 0.5);
        assert_eq!(df_threshold(1.0, 0.5, 1e-9, 1e-9), 0.0);
        assert_eq!(
            steinness_threshold(1.0, 2.0, 1e-9, 1e-9),
            Exponent::Finite(1.5)
        );
        assert_eq!(
            steinness_threshold(0.0, 0.0, 1e-9, 1e-9),
            Exponent::Finite(1.0)
        );
        assert_eq!(
            steinness_threshold(1.0, -1.0, 1e-9, 1e-9),
            Exponent::Infinite
        );
    }

    #[test]
    fn scores_are_monotone_reparametrizations() {
        for &(a, b) in &[(1.0, -3.0), (0.5, -0.7), (2.0, -10.0)] {
            let u = df_score(a, b, 1e-9);
            assert!((u / (1.0 + u) - df_threshold(a, b, 1e-9, 1e-9)).abs() < 1e-15);
        }
        for &(a, b) in &[(1.0, 3.0), (0.5, 0.7)] {
            let c2 = st_score(a, b, 1e-9);
            assert!(
                (c2 / (c2 - 1.0) - steinness_threshold(a, b, 1e-9, 1e-9).value()).abs() < 1e-14
            );
        }
    }

    #[test]
    fn exponent_serializes() {
        assert_eq!(
            serde_json::to_string(&Exponent::Infinite).unwrap(),
            "\"infinite\""
        );
        assert_eq!(
            serde_json::to_string(&Exponent::Finite(1.5)).unwrap(),
            "1.5"
        );
    }

    fn ball() -> DomainSpec {
        DomainSpec::new(
            "ball",
            parse("abs2(z1)+abs2(z2)-1", 2).unwrap(),
            Params::new(),
            BBox::symmetric(2, 1.1),
        )
        .unwrap()
    }

    #[test]
    fn ball_hessian_power() {
        let s = ball();
        assert!(
            hessian_power(&s, None, 0.5, Side::Interior, &[c(0.5, 0.0), c(0.0, 0.0)]).unwrap()
                > 0.0
        );
        assert!(hessian_power(&s, None, 0.5, Side::Interior, &[c(1.5, 0.0), c(0.0, 0.0)]).is_err());
        assert!(hessian_power(&s, None, 1.5, Side::Interior, &[c(0.5, 0.0), c(0.0, 0.0)]).is_err());
        assert!(
            hessian_power(&s, None, 2.0, Side::Exterior, &[c(1.2, 0.0), c(0.0, 0.0)]).unwrap()
                > 0.0
        );
    }

    #[test]
    fn ball_estimates_are_one() {
        let s = ball();
        let tol = Tolerances::default();
        let scan = scan_boundary(&s, Strategy::Grid, 500, 7, &tol).unwrap();
        assert!(scan.weak.is_empty());
        let e = df_estimate(&scan, None, &tol).unwrap();
        assert_eq!(e.df_lower, 1.0);
        assert_eq!(e.st_upper, Exponent::Finite(1.0));
        let fam = PsiFamily::poly2(2);
        let o = optimize_psi(&scan, &fam, Objective::DiederichFornaess, 100, 0, &tol).unwrap();
        assert_eq!(o.estimate.df_lower, 1.0);
    }

    #[test]
    fn poly2_basis_is_real() {
        let fam = PsiFamily::poly2(2);
        assert_eq!(fam.len(), 14);
        fam.validate(&BBox::symmetric(2, 1.0), 1).unwrap();
    }
}
