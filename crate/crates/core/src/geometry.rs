//! Boundary points, the per-point frame, the restricted Levi form and pseudoconvexity
//! classification.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{DomainSpec, Params};
use crate::jet::{jet_eval, to_wirtinger, value_grad, WirtingerJet};
use crate::space::{distance, from_real, hdot, norm, to_real, BBox, Halton, Point};

pub const DEFAULT_TOL_LEVI: f64 = 1e-8;
pub const DEFAULT_EXTRA_NULL_DIRS: usize = 8;
const NEWTON_STEPS: usize = 50;
const DEDUP_RADIUS: f64 = 1e-6;

/// Wirtinger jet of the defining function at `z`.
pub fn wirtinger_at(spec: &DomainSpec, z: &[Complex64]) -> Result<WirtingerJet> {
    to_wirtinger(&jet_eval(&spec.rho, z, &Params::new())?)
}

/// Newton projection onto `{rho = 0}` along the gradient, with step halving when a step
/// fails to reduce `|rho|` or leaves the domain of smoothness.
pub fn project_to_boundary(spec: &DomainSpec, z0: &[Complex64]) -> Result<Point> {
    let none = Params::new();
    let mut x = to_real(z0);
    let (mut r, mut g) = value_grad(&spec.rho, z0, &none)?;
    for _ in 0..NEWTON_STEPS {
        let gn2: f64 = g.iter().map(|a| a * a).sum();
        let gn = gn2.sqrt();
        if r.abs() <= 1e-12 * (1.0 + gn) {
            return Ok(from_real(&x));
        }
        if gn < 1e-14 {
            return Err(Error::VanishingGradient(gn));
        }
        let mut step = r / gn2;
        let mut accepted = None;
        for _ in 0..40 {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            if let Ok((ry, gy)) = value_grad(&spec.rho, &from_real(&y), &none) {
                if ry.abs() < r.abs() {
                    accepted = Some((y, ry, gy));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((y, ry, gy)) => {
                x = y;
                r = ry;
                g = gy;
            }
            None => break,
        }
    }
    let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    if r.abs() <= 1e-12 * (1.0 + gn) {
        Ok(from_real(&x))
    } else {
        Err(Error::NoConvergence {
            steps: NEWTON_STEPS,
            residual: r.abs(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Axis-aligned rays through a cell-centred grid, roots located by sign changes.
    Grid,
    /// Seeded quasi-random starts projected by Newton iteration.
    Random,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Strategy::Grid),
            "random" => Ok(Strategy::Random),
            _ => Err(Error::Invalid(format!("unknown sampling strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundarySample {
    pub points: Vec<Point>,
    pub requested: usize,
    /// Set when fewer than half of the requested points were found.
    pub warning: Option<String>,
}

/// Boundary points of `spec`, deterministic in `(strategy, count, seed)` and sorted
/// lexicographically in the real coordinates.
pub fn sample_boundary(
    spec: &DomainSpec,
    strategy: Strategy,
    count: usize,
    seed: u64,
) -> Result<BoundarySample> {
    let bbox = BBox::new(spec.bbox.lo.clone(), spec.bbox.hi.clone())?;
    let raw = match strategy {
        Strategy::Grid => ray_grid(spec, &bbox, count),
        Strategy::Random => {
            let starts: Vec<Vec<f64>> = Halton::new(2 * spec.n, seed).take(count).collect();
            starts
                .par_iter()
                .filter_map(|u| {
                    let z = from_real(&bbox.from_unit(u));
                    project_to_boundary(spec, &z).ok()
                })
                .filter(|p| bbox.contains(&to_real(p)))
                .collect()
        }
    };
    let points = dedup(raw);
    let warning = (points.len() * 2 < count).then(|| {
        format!(
            "boundary sampler found {} points for {} requested",
            points.len(),
            count
        )
    });
    Ok(BoundarySample {
        points,
        requested: count,
        warning,
    })
}

/// Grid resolution per transverse coordinate: odd, so the box centre lies on the grid.
pub fn grid_resolution(n: usize, count: usize) -> usize {
    let m = 2 * n;
    let per_axis = (count.max(1) as f64 / m as f64).max(1.0);
    let mut g = per_axis.powf(1.0 / (m - 1) as f64).ceil() as usize;
    // guard against floating error in the root (e.g. 125^(1/3) = 4.9999...)
    if (g - 1).pow((m - 1) as u32) as f64 >= per_axis && g > 1 {
        g -= 1;
    }
    if g.is_multiple_of(2) {
        g += 1;
    }
    g.max(1)
}

fn ray_grid(spec: &DomainSpec, bbox: &BBox, count: usize) -> Vec<Point> {
    let m = 2 * spec.n;
    let g = grid_resolution(spec.n, count);
    let axis_vals: Vec<Vec<f64>> = (0..m).map(|k| bbox.axis_values(k, g)).collect();
    let per_axis = g.pow((m - 1) as u32);
    let nodes = g.max(16) + g.max(16) % 2;
    (0..m * per_axis)
        .into_par_iter()
        .flat_map_iter(|r| {
            let axis = r / per_axis;
            let mut rem = r % per_axis;
            let mut base = vec![0.0; m];
            for (k, slot) in base.iter_mut().enumerate() {
                if k == axis {
                    continue;
                }
                *slot = axis_vals[k][rem % g];
                rem /= g;
            }
            scan_ray(spec, &base, axis, bbox.lo[axis], bbox.hi[axis], nodes)
        })
        .collect()
}

fn scan_ray(
    spec: &DomainSpec,
    base: &[f64],
    axis: usize,
    lo: f64,
    hi: f64,
    k: usize,
) -> Vec<Point> {
    let at = |s: f64| {
        let mut x = base.to_vec();
        x[axis] = s;
        x
    };
    let f = |s: f64| -> Option<f64> {
        spec.rho_at(&from_real(&at(s)))
            .ok()
            .filter(|v| v.is_finite())
    };
    let s: Vec<f64> = (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect();
    let vals: Vec<Option<f64>> = s.iter().map(|&t| f(t)).collect();
    let mut roots = Vec::new();
    for i in 0..k {
        let Some(fi) = vals[i] else { continue };
        if fi == 0.0 {
            roots.push(s[i]);
            continue;
        }
        if i + 1 < k {
            if let Some(fj) = vals[i + 1] {
                if fj != 0.0 && fi.signum() != fj.signum() {
                    if let Some(root) = bisect(&f, s[i], s[i + 1], fi) {
                        roots.push(root);
                    }
                }
            }
        }
    }
    roots
        .into_iter()
        .filter_map(|t| {
            let z = from_real(&at(t));
            project_to_boundary(spec, &z).ok()
        })
        .collect()
}

fn bisect(f: &impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Option<f64> {
    for _ in 0..100 {
        let c = 0.5 * (a + b);
        if c <= a || c >= b {
            break;
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Some(c);
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    Some(0.5 * (a + b))
}

/// Removes points closer than the dedup radius to an earlier kept point; output is sorted.
fn dedup(mut pts: Vec<Point>) -> Vec<Point> {
    let key = |p: &Point| to_real(p);
    pts.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.iter()
            .zip(&kb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        let x0 = p[0].re;
        let dup = kept
            .iter()
            .rev()
            .take_while(|q| x0 - q[0].re <= DEDUP_RADIUS)
            .any(|q| distance(q, &p) < DEDUP_RADIUS);
        if !dup {
            kept.push(p);
        }
    }
    kept
}

/// Largest distance from a sample point to its nearest neighbour.
pub fn max_nearest_gap(points: &[Point]) -> f64 {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .reduce(|| 0.0, f64::max)
}

/// Boundary frame at a point.
///
/// `normal` and `ln` are (1,0) vectors, `T = Ln - conj(Ln)` is the real tangential field,
/// and `tangent_basis` is an orthonormal basis of `ker d rho`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub d_rho: Vec<Complex64>,
    /// `|grad rho| = 2 |d rho|`.
    pub grad_norm: f64,
    pub normal: Vec<Complex64>,
    pub ln: Vec<Complex64>,
    pub tangent_basis: Vec<Vec<Complex64>>,
}

/// `g(X, Y) = 1/2 sum X_j conj(Y_j)` on (1,0) vectors.
pub fn metric(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    0.5 * hdot(x, y)
}

pub fn frame_at(w: &WirtingerJet) -> Result<Frame> {
    let n = w.n;
    let s: f64 = w.first.iter().map(|a| a.norm_sqr()).sum();
    let dn = s.sqrt();
    if !(dn > 1e-12) {
        return Err(Error::VanishingGradient(2.0 * dn));
    }
    let normal: Vec<Complex64> = w.first.iter().map(|a| a.conj() / dn).collect();
    let ln: Vec<Complex64> = w.first.iter().map(|a| a.conj() / s).collect();

    // Householder reflection H = I - 2 v v*/(v* v) sending e1 onto the line of `normal`;
    // its remaining columns span the orthogonal complement.
    let u = &normal;
    let phase = if u[0].norm() > 0.0 {
        u[0] / u[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut v = u.clone();
    v[0] += phase;
    let vv: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    let tangent_basis = (1..n)
        .map(|col| {
            (0..n)
                .map(|row| {
                    let id = if row == col { 1.0 } else { 0.0 };
                    Complex64::new(id, 0.0) - 2.0 * v[row] * v[col].conj() / vv
                })
                .collect()
        })
        .collect();
    Ok(Frame {
        d_rho: w.first.clone(),
        grad_norm: 2.0 * dn,
        normal,
        ln,
        tangent_basis,
    })
}

impl Frame {
    /// `|d rho|`.
    pub fn d_rho_norm(&self) -> f64 {
        0.5 * self.grad_norm
    }

    /// `sum rho_j v_j`.
    pub fn d_rho_on(&self, v: &[Complex64]) -> Complex64 {
        self.d_rho.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Rejects vectors with `|d rho(v)| > tol |d rho| |v|`.
    pub fn check_tangential(&self, v: &[Complex64], tol: f64) -> Result<()> {
        let r = self.d_rho_on(v).norm();
        if r > tol * self.d_rho_norm() * norm(v).max(1.0) {
            Err(Error::NotTangential(r))
        } else {
            Ok(())
        }
    }
}

/// Restricted Levi form on the tangent basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeviData {
    /// `matrix[a][b] = Levi(e_a, e_b)`.
    pub matrix: Vec<Vec<Complex64>>,
    pub eigenvalues: Vec<f64>,
    /// Unit (1,0) eigenvectors in ambient coordinates: `Levi(v_k, v_k) = eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub lambda_scale: f64,
    /// `|d rho|`, the absolute floor for the null tolerance.
    pub d_rho_norm: f64,
}

pub fn levi_at(w: &WirtingerJet, f: &Frame) -> LeviData {
    let k = f.tangent_basis.len();
    let e = &f.tangent_basis;
    let matrix: Vec<Vec<Complex64>> = (0..k)
        .map(|a| (0..k).map(|b| w.levi(&e[a], &e[b])).collect())
        .collect();
    // Levi(sum c_a e_a) = c* Q c with Q = conj(matrix).
    let q = DMatrix::from_fn(k, k, |r, s| matrix[r][s].conj());
    let q = (&q + q.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = q.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let c = eig.eigenvectors.column(i);
            let mut v = vec![Complex64::new(0.0, 0.0); w.n];
            for (a, ea) in e.iter().enumerate() {
                for (vj, ej) in v.iter_mut().zip(ea) {
                    *vj += c[a] * ej;
                }
            }
            let nv = norm(&v);
            v.iter().map(|x| x / nv).collect()
        })
        .collect();
    let lambda_scale = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    LeviData {
        matrix,
        eigenvalues,
        eigenvectors,
        lambda_scale,
        d_rho_norm: f.d_rho_norm(),
    }
}

impl LeviData {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Absolute threshold below which an eigenvalue counts as zero.
    pub fn null_floor(&self, tol_levi: f64) -> f64 {
        tol_levi * self.lambda_scale.max(self.d_rho_norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PointClass {
    StrictlyPseudoconvex,
    Weak { null_dirs: Vec<Vec<Complex64>> },
    NonPseudoconvex { eigenvalue: f64 },
}

impl PointClass {
    pub fn is_weak(&self) -> bool {
        matches!(self, PointClass::Weak { .. })
    }
}

/// Classifies by the smallest Levi eigenvalue against `tol_levi * max(lambda_scale, |d rho|)`.
/// When the numerical null space has dimension above one, `extra` seeded random unit
/// combinations of its basis are appended to the null directions.
pub fn classify(l: &LeviData, tol_levi: f64, extra: usize, seed: u64) -> PointClass {
    let floor = l.null_floor(tol_levi);
    let lmin = l.lambda_min();
    if lmin < -floor {
        return PointClass::NonPseudoconvex { eigenvalue: lmin };
    }
    if lmin > floor {
        return PointClass::StrictlyPseudoconvex;
    }
    let basis: Vec<Vec<Complex64>> = l
        .eigenvalues
        .iter()
        .zip(&l.eigenvectors)
        .filter(|(x, _)| x.abs() <= floor)
        .map(|(_, v)| v.clone())
        .collect();
    let mut null_dirs = basis.clone();
    if basis.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..extra {
            let c: Vec<Complex64> = (0..basis.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut v = vec![Complex64::new(0.0, 0.0); basis[0].len()];
            for (ca, b) in c.iter().zip(&basis) {
                for (vj, bj) in v.iter_mut().zip(b) {
                    *vj += ca * bj;
                }
            }
            let nv = norm(&v);
            if nv > 1e-12 {
                null_dirs.push(v.iter().map(|x| x / nv).collect());
            }
        }
    }
    PointClass::Weak { null_dirs }
}

/// Everything known about one boundary point.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub point: Point,
    pub jet: WirtingerJet,
    pub frame: Frame,
    pub levi: LeviData,
    pub class: PointClass,
}

pub fn analyze_point(
    spec: &DomainSpec,
    p: &[Complex64],
    tol_levi: f64,
    seed: u64,
) -> Result<PointAnalysis> {
    let jet = wirtinger_at(spec, p)?;
    let frame = frame_at(&jet)?;
    let levi = levi_at(&jet, &frame);
    let class = classify(&levi, tol_levi, DEFAULT_EXTRA_NULL_DIRS, seed);
    Ok(PointAnalysis {
        point: p.to_vec(),
        jet,
        frame,
        levi,
        class,
    })
}

/// Analyzes every sample point in parallel; points where the frame degenerates are dropped.
pub fn analyze_points(
    spec: &DomainSpec,
    pts: &[Point],
    tol_levi: f64,
    seed: u64,
) -> Vec<PointAnalysis> {
    pts.par_iter()
        .enumerate()
        .filter_map(|(i, p)| analyze_point(spec, p, tol_levi, seed.wrapping_add(i as u64)).ok())
        .collect()
}

/// `max_a |Levi(v, e_a)|` over the tangent basis.
pub fn cauchy_schwarz_defect(w: &WirtingerJet, f: &Frame, v: &[Complex64]) -> f64 {
    f.tangent_basis
        .iter()
        .map(|e| w.levi(v, e).norm())
        .fold(0.0, f64::max)
}
