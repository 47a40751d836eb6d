//! Holomorphic maps between domains and the invariance laws of the D'Angelo form.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dangelo::{alpha_on_conj, DAngelo};
use crate::error::{Error, Result};
use crate::expr::{DomainSpec, Expr, Node, Params};
use crate::geometry::Strategy;
use crate::geometry::{analyze_point, frame_at, project_to_boundary, wirtinger_at, PointClass};
use crate::indices::{
    optimize_psi, scan_boundary, scan_points, BoundaryScan, Objective, PsiFamily, Tolerances,
};
use crate::jet::{jet_eval, jet_eval_order, to_wirtinger};
use crate::space::{distance, from_real, norm, to_real, BBox, Halton, Point};

type C = Complex64;

/// Default cap on the node count of a composed defining function.
pub const MAX_COMPOSED_NODES: usize = 200_000;

/// Holomorphic map `C^n_in -> C^n_out` given by component expressions.
#[derive(Debug, Clone)]
pub struct MapSpec {
    pub name: String,
    pub n_in: usize,
    pub n_out: usize,
    pub components: Vec<Expr>,
    pub inverse: Option<Box<MapSpec>>,
}

fn non_holomorphic_node(n: &Node) -> bool {
    match n {
        Node::Call(f, a) => (!f.is_holomorphic() && a.contains_var()) || non_holomorphic_node(a),
        Node::Num(_) | Node::I | Node::Var(_) | Node::Param(_) => false,
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            non_holomorphic_node(a) || non_holomorphic_node(b)
        }
        Node::Neg(a) | Node::Pow(a, _) => non_holomorphic_node(a),
    }
}

impl MapSpec {
    /// Rejects components that apply `conj`, `re`, `im`, `abs2` or `ramp` to a variable.
    pub fn new(
        name: impl Into<String>,
        components: Vec<Expr>,
        inverse: Option<MapSpec>,
    ) -> Result<Self> {
        let n_in = components
            .first()
            .map(|e| e.dim())
            .ok_or_else(|| Error::Invalid("map without components".into()))?;
        if let Some(e) = components.iter().find(|e| e.dim() != n_in) {
            return Err(Error::DimensionMismatch {
                expected: n_in,
                got: e.dim(),
            });
        }
        if let Some((k, _)) = components
            .iter()
            .enumerate()
            .find(|(_, e)| non_holomorphic_node(e.root()))
        {
            return Err(Error::NotHolomorphic(format!(
                "component f{} applies a non-holomorphic function to a variable",
                k + 1
            )));
        }
        let n_out = components.len();
        if let Some(inv) = &inverse {
            if inv.n_in != n_out || inv.n_out != n_in {
                return Err(Error::DimensionMismatch {
                    expected: n_in,
                    got: inv.n_out,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            n_in,
            n_out,
            components,
            inverse: inverse.map(Box::new),
        })
    }

    pub fn identity(n: usize) -> Self {
        let c = (0..n).map(|j| Expr::var(n, j)).collect();
        Self::new("identity", c, None).expect("identity is holomorphic")
    }

    pub fn apply(&self, p: &[C]) -> Result<Point> {
        self.components.iter().map(|e| e.eval0(p)).collect()
    }

    /// `J[k][j] = d f_k / d z_j`.
    pub fn jacobian(&self, p: &[C]) -> Result<Vec<Vec<C>>> {
        self.components
            .iter()
            .map(|e| {
                let t = jet_eval_order(e, p, &Params::new(), 1)?;
                Ok((0..self.n_in).map(|j| t.dz(j)).collect())
            })
            .collect()
    }

    /// Largest `|d f_k / d zbar_j|` at `p`.
    pub fn dbar_residual(&self, p: &[C]) -> Result<f64> {
        let mut worst = 0.0f64;
        for e in &self.components {
            let t = jet_eval_order(e, p, &Params::new(), 1)?;
            for j in 0..self.n_in {
                worst = worst.max(t.dzbar(j).norm());
            }
        }
        Ok(worst)
    }

    /// `m.then(g)` is `g o m`.
    pub fn then(&self, g: &MapSpec) -> Result<MapSpec> {
        if g.n_in != self.n_out {
            return Err(Error::DimensionMismatch {
                expected: self.n_out,
                got: g.n_in,
            });
        }
        let c = g
            .components
            .iter()
            .map(|e| e.compose(&self.components))
            .collect::<Result<Vec<_>>>()?;
        let inverse = match (&self.inverse, &g.inverse) {
            (Some(a), Some(b)) => Some(b.then(a)?),
            _ => None,
        };
        MapSpec::new(format!("{} o {}", g.name, self.name), c, inverse)
    }
}

/// `(f_* v)_k = sum_j (d f_k / d z_j)(p) v_j`.
pub fn pushforward(m: &MapSpec, p: &[C], v: &[C]) -> Result<Vec<C>> {
    if v.len() != m.n_in {
        return Err(Error::DimensionMismatch {
            expected: m.n_in,
            got: v.len(),
        });
    }
    Ok(apply_jacobian(&m.jacobian(p)?, v))
}

fn apply_jacobian(j: &[Vec<C>], v: &[C]) -> Vec<C> {
    j.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `|det J|` for square maps; small values flag a singular pushforward.
pub fn jacobian_det(m: &MapSpec, p: &[C]) -> Result<f64> {
    let j = m.jacobian(p)?;
    let n = j.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |a, b| j[a][b]);
    Ok(mat.determinant().norm())
}

#[derive(Debug, Clone, Serialize)]
pub struct MapCheck {
    pub samples: usize,
    pub max_dbar: f64,
    pub max_inverse_error: Option<f64>,
}

/// Numeric holomorphy and inverse checks at Halton points of `bbox`.
pub fn check_map(m: &MapSpec, bbox: &BBox, samples: usize, seed: u64) -> MapCheck {
    let pts: Vec<Point> = Halton::new(2 * m.n_in, seed)
        .take(samples)
        .map(|u| from_real(&bbox.from_unit(&u)))
        .collect();
    let max_dbar = pts
        .par_iter()
        .filter_map(|p| m.dbar_residual(p).ok())
        .reduce(|| 0.0, f64::max);
    let max_inverse_error = m.inverse.as_ref().map(|inv| {
        pts.par_iter()
            .filter_map(|p| {
                let q = m.apply(p).ok()?;
                let back = inv.apply(&q).ok()?;
                Some(distance(&back, p) / (1.0 + norm(p)))
            })
            .reduce(|| 0.0, f64::max)
    });
    MapCheck {
        samples: pts.len(),
        max_dbar,
        max_inverse_error,
    }
}

/// `rho_1 = rho_2 o m`, the defining function of `m^{-1}(Omega_2)`.
///
/// The region of interest is the bounding box of `m^{-1}` applied to quasi-random points of
/// the target box, widened by 5%.
pub fn pullback_domain(m: &MapSpec, spec2: &DomainSpec) -> Result<DomainSpec> {
    pullback_domain_limited(m, spec2, MAX_COMPOSED_NODES)
}

pub fn pullback_domain_limited(
    m: &MapSpec,
    spec2: &DomainSpec,
    limit: usize,
) -> Result<DomainSpec> {
    if m.n_out != spec2.n {
        return Err(Error::DimensionMismatch {
            expected: spec2.n,
            got: m.n_out,
        });
    }
    let rho = spec2.rho.compose(&m.components)?;
    if rho.node_count() > limit {
        return Err(Error::ExpressionTooLarge {
            size: rho.node_count(),
            limit,
        });
    }
    let inv = m
        .inverse
        .as_ref()
        .ok_or_else(|| Error::Invalid("pulling back a domain needs the inverse map".into()))?;
    let d = 2 * m.n_in;
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    let corners = (0..1usize << (2 * spec2.n)).map(|mask| {
        (0..2 * spec2.n)
            .map(|k| if mask >> k & 1 == 1 { 1.0 } else { 0.0 })
            .collect::<Vec<f64>>()
    });
    for u in corners.chain(Halton::new(2 * spec2.n, 0).take(4000)) {
        let q = from_real(&spec2.bbox.from_unit(&u));
        if let Ok(p) = inv.apply(&q) {
            for (k, x) in to_real(&p).into_iter().enumerate() {
                if x.is_finite() {
                    lo[k] = lo[k].min(x);
                    hi[k] = hi[k].max(x);
                }
            }
        }
    }
    let pad: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.025 * (b - a)).collect();
    let bbox = BBox::new(
        lo.iter().zip(&pad).map(|(a, p)| a - p).collect(),
        hi.iter().zip(&pad).map(|(b, p)| b + p).collect(),
    )?;
    let mut spec = DomainSpec::new(
        format!("{} pulled back by {}", spec2.name, m.name),
        rho,
        Params::new(),
        bbox,
    )?;
    spec.psi_extras = spec2
        .psi_extras
        .iter()
        .map(|e| e.compose(&m.components))
        .collect::<Result<_>>()?;
    Ok(spec)
}

/// Maps boundary points of `Omega_2` to boundary points of `m^{-1}(Omega_2)`.
pub fn transport_points(m: &MapSpec, spec1: &DomainSpec, pts2: &[Point]) -> Vec<Point> {
    let Some(inv) = &m.inverse else {
        return Vec::new();
    };
    pts2.par_iter()
        .filter_map(|q| {
            let p = inv.apply(q).ok()?;
            project_to_boundary(spec1, &p).ok()
        })
        .collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Residuals {
    pub samples: usize,
    pub max: f64,
}

impl Residuals {
    fn push(&mut self, r: f64) {
        self.samples += 1;
        if !(r <= self.max) {
            self.max = r;
        }
    }

    fn merge(mut self, o: Residuals) -> Residuals {
        self.samples += o.samples;
        if !(o.max <= self.max) {
            self.max = o.max;
        }
        self
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    let v: Vec<C> = (0..n)
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let s = norm(&v).max(1e-300);
    v.into_iter().map(|x| x / s).collect()
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}

#[derive(Debug, Clone, Serialize)]
pub struct LeviPushforwardReport {
    /// `Levi_{rho o f}(X, Y)` against `Levi_rho(f_* X, f_* Y)`.
    pub levi: Residuals,
    /// `d rho(f_* Ln)` against 1.
    pub ln_claim: Residuals,
    /// Normal component of pushed tangential vectors.
    pub tangency: Residuals,
}

/// Levi-form transport under `m` at boundary points of `spec1 = pullback_domain(m, spec2)`.
pub fn check_levi_pushforward(
    m: &MapSpec,
    spec1: &DomainSpec,
    spec2: &DomainSpec,
    points: &[Point],
    pairs: usize,
    seed: u64,
) -> Result<LeviPushforwardReport> {
    let per: Vec<Result<LeviPushforwardReport>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let w1 = wirtinger_at(spec1, p)?;
            let f1 = frame_at(&w1)?;
            let q = m.apply(p)?;
            let w2 = wirtinger_at(spec2, &q)?;
            let f2 = frame_at(&w2)?;
            let jac = m.jacobian(p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9));
            let mut rep = LeviPushforwardReport {
                levi: Residuals::default(),
                ln_claim: Residuals::default(),
                tangency: Residuals::default(),
            };
            let tangent = |rng: &mut ChaCha8Rng| -> Vec<C> {
                let c = random_unit(rng, f1.tangent_basis.len());
                (0..spec1.n)
                    .map(|k| f1.tangent_basis.iter().zip(&c).map(|(e, a)| e[k] * a).sum())
                    .collect()
            };
            for _ in 0..pairs {
                let x = tangent(&mut rng);
                let y = tangent(&mut rng);
                let (fx, fy) = (apply_jacobian(&jac, &x), apply_jacobian(&jac, &y));
                rep.levi.push(rel(w1.levi(&x, &y), w2.levi(&fx, &fy)));
                rep.tangency
                    .push(f2.d_rho_on(&fx).norm() / (f2.d_rho_norm() * norm(&fx).max(1.0)));
            }
            let fln = apply_jacobian(&jac, &f1.ln);
            rep.ln_claim.push((f2.d_rho_on(&fln) - 1.0).norm());
            Ok(rep)
        })
        .collect();
    let mut out = LeviPushforwardReport {
        levi: Residuals::default(),
        ln_claim: Residuals::default(),
        tangency: Residuals::default(),
    };
    for r in per {
        let r = r?;
        out.levi = out.levi.merge(r.levi);
        out.ln_claim = out.ln_claim.merge(r.ln_claim);
        out.tangency = out.tangency.merge(r.tangency);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaInvarianceReport {
    pub vacuous: bool,
    pub weak_points: usize,
    /// `alpha_{rho o f}(conj v)` against `alpha_rho(conj f_* v)`, relative to the point scale.
    pub alpha: Residuals,
    /// `i d^c alpha` on `(v, conj v)` against its value on `(f_* v, conj f_* v)`.
    pub dc_alpha: Residuals,
    /// The first identity at strictly pseudoconvex points (expected to fail for non-unitary maps).
    pub negative_control: Residuals,
}

/// Both transport identities at weak points of `spec1 = pullback_domain(m, spec2)`.
pub fn check_alpha_invariance(
    m: &MapSpec,
    spec1: &DomainSpec,
    spec2: &DomainSpec,
    points: &[Point],
    tol: &Tolerances,
    seed: u64,
) -> Result<AlphaInvarianceReport> {
    let per: Vec<Option<(bool, f64, f64)>> = points
        .par_iter()
        .map(|p| -> Result<Vec<Option<(bool, f64, f64)>>> {
            let a1 = analyze_point(spec1, p, tol.tol_levi, seed)?;
            let (dirs, weak) = match &a1.class {
                PointClass::Weak { null_dirs } => (null_dirs.clone(), true),
                PointClass::StrictlyPseudoconvex => (a1.frame.tangent_basis.clone(), false),
                PointClass::NonPseudoconvex { .. } => return Ok(Vec::new()),
            };
            let q = m.apply(p)?;
            let w2 = wirtinger_at(spec2, &q)?;
            let f2 = frame_at(&w2)?;
            let d1 = DAngelo::new(&a1.jet, &a1.frame);
            let d2 = DAngelo::new(&w2, &f2);
            let scale = 1.0 + d1.scale().max(d2.scale());
            let jac = m.jacobian(p)?;
            dirs.iter()
                .map(|v| {
                    let fv = apply_jacobian(&jac, v);
                    let l = alpha_on_conj(&a1.jet, &a1.frame, v)?;
                    let r = alpha_on_conj(&w2, &f2, &fv)?;
                    let da = (l - r).norm() / scale;
                    let dc = if weak {
                        (d1.dc_alpha(v) - d2.dc_alpha(&fv)).abs() / scale
                    } else {
                        0.0
                    };
                    Ok(Some((weak, da, dc)))
                })
                .collect()
        })
        .map(|r| r.unwrap_or_default())
        .flatten()
        .collect();
    let mut rep = AlphaInvarianceReport {
        vacuous: true,
        weak_points: 0,
        alpha: Residuals::default(),
        dc_alpha: Residuals::default(),
        negative_control: Residuals::default(),
    };
    for (weak, da, dc) in per.into_iter().flatten() {
        if weak {
            rep.alpha.push(da);
            rep.dc_alpha.push(dc);
        } else {
            rep.negative_control.push(da);
        }
    }
    rep.weak_points = rep.alpha.samples;
    rep.vacuous = rep.alpha.samples == 0;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct RescalingReport {
    pub samples: usize,
    /// `alpha~(conj v) - alpha(conj v) - d psi(conj v)`.
    pub alpha: f64,
    /// `i d^c alpha~ - i d^c alpha - 2 sum psi_{j kbar} v_j conj(v_k)` at null `v`.
    pub dc_alpha: f64,
}

/// Rescaling identities for `rho -> rho exp(psi)` at the given boundary points.
///
/// The first identity is checked on every tangential basis vector, the second only on
/// numerically null directions.
pub fn check_rescaling(
    spec: &DomainSpec,
    psi: &Expr,
    points: &[Point],
    tol: &Tolerances,
    seed: u64,
) -> Result<RescalingReport> {
    let rows: Vec<Vec<(f64, Option<f64>)>> = points
        .par_iter()
        .map(|p| -> Result<Vec<(f64, Option<f64>)>> {
            let a = analyze_point(spec, p, tol.tol_levi, seed)?;
            let rho = jet_eval(&spec.rho, p, &Params::new())?;
            let pj = jet_eval(psi, p, &Params::new())?;
            let wt = to_wirtinger(&rho.mul(&pj.exp()))?;
            let wpsi = to_wirtinger(&pj)?;
            let ft = frame_at(&wt)?;
            let d = DAngelo::new(&a.jet, &a.frame);
            let dt = DAngelo::new(&wt, &ft);
            let scale = 1.0 + d.scale().max(dt.scale());
            let null = match &a.class {
                PointClass::Weak { null_dirs } => null_dirs.clone(),
                _ => Vec::new(),
            };
            let mut out = Vec::new();
            for v in &a.frame.tangent_basis {
                let lhs = alpha_on_conj(&wt, &ft, v)?;
                let dpsi: C = (0..spec.n)
                    .map(|k| wpsi.first[k].conj() * v[k].conj())
                    .sum();
                let rhs = alpha_on_conj(&a.jet, &a.frame, v)? + dpsi;
                out.push(((lhs - rhs).norm() / scale, None));
            }
            for v in &null {
                let mut hess = C::new(0.0, 0.0);
                for j in 0..spec.n {
                    for k in 0..spec.n {
                        hess += wpsi.rho_jkbar(j, k) * v[j] * v[k].conj();
                    }
                }
                let r = dt.dc_alpha(v) - d.dc_alpha(v) - 2.0 * hess.re;
                out.push((0.0, Some(r.abs() / scale)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rep = RescalingReport {
        samples: 0,
        alpha: 0.0,
        dc_alpha: 0.0,
    };
    for (a, dc) in rows.into_iter().flatten() {
        rep.samples += 1;
        rep.alpha = rep.alpha.max(a);
        if let Some(x) = dc {
            rep.dc_alpha = rep.dc_alpha.max(x);
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairedRun {
    pub seed: u64,
    pub df_target: f64,
    pub df_source: f64,
    pub st_target: f64,
    pub st_source: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceExperiment {
    pub map: String,
    pub runs: Vec<PairedRun>,
    pub max_delta_df: f64,
    pub max_delta_st: f64,
    /// Spread of the target-side estimates across seeds.
    pub spread_df: f64,
    pub spread_st: f64,
}

fn delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn spread(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.fold(f64::INFINITY, f64::min);
    if hi == lo {
        0.0
    } else {
        hi - lo
    }
}

/// Optimized index bounds of `Omega_2` and of `Omega_1 = m^{-1}(Omega_2)`.
///
/// Boundary samples of `Omega_1` are the `m^{-1}`-images of those of `Omega_2`, and the
/// `psi` family of `Omega_1` is the given family composed with `m`. Each seed perturbs the
/// optimizer's starting point identically on both sides.
pub fn invariance_experiment(
    m: &MapSpec,
    spec2: &DomainSpec,
    family: &PsiFamily,
    budget: usize,
    samples: usize,
    seeds: &[u64],
    tol: &Tolerances,
) -> Result<InvarianceExperiment> {
    let spec1 = pullback_domain(m, spec2)?;
    let family1 = PsiFamily {
        names: family.names.clone(),
        basis: family
            .basis
            .iter()
            .map(|e| e.compose(&m.components))
            .collect::<Result<_>>()?,
    };
    let scan2 = scan_boundary(spec2, Strategy::Grid, samples, 0, tol)?;
    let pts1 = transport_points(m, &spec1, &scan2.boundary_points);
    let scan1 = scan_points(&spec1, pts1, 0, tol)?;
    let mut runs = Vec::new();
    for &seed in seeds {
        let side = |scan: &BoundaryScan, fam: &PsiFamily| -> Result<(f64, f64)> {
            let df = optimize_psi(scan, fam, Objective::DiederichFornaess, budget, seed, tol)?;
            let st = optimize_psi(scan, fam, Objective::Steinness, budget, seed, tol)?;
            Ok((df.estimate.df_lower, st.estimate.st_upper.value()))
        };
        let (df_target, st_target) = side(&scan2, family)?;
        let (df_source, st_source) = side(&scan1, &family1)?;
        runs.push(PairedRun {
            seed,
            df_target,
            df_source,
            st_target,
            st_source,
        });
    }
    Ok(InvarianceExperiment {
        map: m.name.clone(),
        max_delta_df: runs
            .iter()
            .map(|r| delta(r.df_target, r.df_source))
            .fold(0.0, f64::max),
        max_delta_st: runs
            .iter()
            .map(|r| delta(r.st_target, r.st_source))
            .fold(0.0, f64::max),
        spread_df: spread(runs.iter().map(|r| r.df_target)),
        spread_st: spread(runs.iter().map(|r| r.st_target)),
        runs,
    })
}

/// Maps used by the standard invariance suite, each with its inverse.
pub fn standard_maps() -> Vec<MapSpec> {
    let mk = |name: &str, f: [&str; 2], g: [&str; 2]| {
        let p = |s: &[&str; 2]| -> Vec<Expr> {
            s.iter()
                .map(|x| crate::expr::parse(x, 2).expect("builtin map parses"))
                .collect()
        };
        let inv = MapSpec::new(format!("{name}^-1"), p(&g), None).expect("holomorphic");
        MapSpec::new(name, p(&f), Some(inv)).expect("holomorphic")
    };
    vec![
        mk(
            "z2-rotation",
            ["z1", "(cos(0.7)+i*sin(0.7))*z2"],
            ["z1", "(cos(0.7)-i*sin(0.7))*z2"],
        ),
        mk(
            "diagonal-unitary",
            ["(cos(0.4)+i*sin(0.4))*z1", "(cos(1.1)-i*sin(1.1))*z2"],
            ["(cos(0.4)-i*sin(0.4))*z1", "(cos(1.1)+i*sin(1.1))*z2"],
        ),
        mk("shear-z2", ["z1", "z2+pow(z1,2)"], ["z1", "z2-pow(z1,2)"]),
        mk("shear-z1", ["z1+pow(z2,2)", "z2"], ["z1-pow(z2,2)", "z2"]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::builtin::{worm, Builtin};
    use crate::expr::parse;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn map(src: &[&str]) -> MapSpec {
        MapSpec::new(
            "m",
            src.iter().map(|s| parse(s, 2).unwrap()).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_holomorphic() {
        for bad in [["conj(z1)", "z2"], ["z1", "abs2(z2)"], ["re(z1)+z2", "z2"]] {
            let e = MapSpec::new(
                "bad",
                bad.iter().map(|s| parse(s, 2).unwrap()).collect(),
                None,
            );
            assert!(matches!(e, Err(Error::NotHolomorphic(_))));
        }
        map(&["exp(z1)*z2", "sin(z2)+abs2(2)"]);
    }

    #[test]
    fn pushforward_examples() {
        let m = map(&["z1", "z2+pow(z1,2)"]);
        let v = pushforward(&m, &[c(1.0, 0.0), c(0.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((v[0] - 1.0).norm() < 1e-15 && (v[1] - 2.0).norm() < 1e-15);
        let id = MapSpec::identity(2);
        let w = [c(0.3, -1.0), c(2.0, 0.5)];
        assert_eq!(
            pushforward(&id, &[c(0.1, 0.2), c(-1.0, 0.0)], &w).unwrap(),
            w.to_vec()
        );
    }

    #[test]
    fn functoriality() {
        let a = map(&["z1", "z2+pow(z1,2)"]);
        let b = map(&["exp(z2)*z1", "z2+z1"]);
        let ab = a.then(&b).unwrap();
        let p = [c(0.3, 0.2), c(-0.4, 0.1)];
        let v = [c(1.0, -0.5), c(0.2, 0.7)];
        let lhs = pushforward(&ab, &p, &v).unwrap();
        let rhs =
            pushforward(&b, &a.apply(&p).unwrap(), &pushforward(&a, &p, &v).unwrap()).unwrap();
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn ball_pullbacks() {
        let ball = Builtin::Ball { n: 2 }.spec().unwrap();
        let twice = MapSpec::new(
            "2z",
            vec![parse("2*z1", 2).unwrap(), parse("2*z2", 2).unwrap()],
            Some(map(&["z1/2", "z2/2"])),
        )
        .unwrap();
        let s = pullback_domain(&twice, &ball).unwrap();
        let z = [c(0.2, 0.1), c(-0.3, 0.05)];
        let expect = 4.0 * (z[0].norm_sqr() + z[1].norm_sqr()) - 1.0;
        assert!((s.rho_at(&z).unwrap() - expect).abs() < 1e-14);
        for m in standard_maps() {
            let chk = check_map(&m, &ball.bbox, 64, 3);
            assert!(
                chk.max_dbar < 1e-12 && chk.max_inverse_error.unwrap() < 1e-10,
                "{chk:?}"
            );
            let s1 = pullback_domain(&m, &ball).unwrap();
            let pts2 = scan_boundary(&ball, Strategy::Grid, 100, 1, &Tolerances::default())
                .unwrap()
                .boundary_points;
            let pts1 = transport_points(&m, &s1, &pts2);
            let r = check_levi_pushforward(&m, &s1, &ball, &pts1, 3, 5).unwrap();
            assert!(
                r.levi.max < 1e-9 && r.ln_claim.max < 1e-9 && r.tangency.max < 1e-9,
                "{r:?}"
            );
            let a =
                check_alpha_invariance(&m, &s1, &ball, &pts1, &Tolerances::default(), 1).unwrap();
            assert!(a.vacuous);
        }
    }

    #[test]
    fn worm_rotation_is_a_symmetry() {
        let w = worm(2.0).unwrap();
        let rot = &standard_maps()[0];
        let s1 = pullback_domain(rot, &w).unwrap();
        let mut h = Halton::new(4, 9);
        for _ in 0..50 {
            let z = from_real(&w.bbox.from_unit(&h.next().unwrap()));
            if let (Ok(a), Ok(b)) = (w.rho_at(&z), s1.rho_at(&z)) {
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn rescaling_by_constants_is_trivial() {
        let w = worm(2.0).unwrap();
        let pts = [
            vec![c(0.0, 0.0), c(1.1, 0.2)],
            vec![c(0.5, 0.3), c(0.8, 0.1)],
        ];
        let pts: Vec<Point> = pts
            .iter()
            .map(|p| project_to_boundary(&w, p).unwrap())
            .collect();
        let tol = Tolerances::default();
        let zero = check_rescaling(&w, &parse("0", 2).unwrap(), &pts, &tol, 1).unwrap();
        assert_eq!((zero.alpha, zero.dc_alpha), (0.0, 0.0));
        let k = check_rescaling(&w, &parse("0.7", 2).unwrap(), &pts, &tol, 1).unwrap();
        assert!(k.alpha < 1e-12 && k.dc_alpha < 1e-12, "{k:?}");
        let t =
            check_rescaling(&w, &parse("0.3*log(abs2(z2))", 2).unwrap(), &pts, &tol, 1).unwrap();
        assert!(t.alpha < 1e-7 && t.dc_alpha < 1e-7, "{t:?}");
    }
}
