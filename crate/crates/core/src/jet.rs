//! Order-3 forward-mode Taylor arithmetic in the 2n real coordinates and the
//! conversion to Wirtinger derivatives.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{check_positive_real_part, check_real, Expr, Func, Node, Params};

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 6;

/// Packed index tables for symmetric 2- and 3-tensors over `m` indices.
#[derive(Debug)]
pub struct Layout {
    pub m: usize,
    pub pairs: Vec<(usize, usize)>,
    /// `(i, j, k, ij, ik, jk)` with `i <= j <= k` and packed pair indices.
    pub triples: Vec<(usize, usize, usize, usize, usize, usize)>,
    idx2: Vec<usize>,
    idx3: Vec<usize>,
}

impl Layout {
    fn build(m: usize) -> Self {
        let mut pairs = Vec::new();
        let mut idx2 = vec![0; m * m];
        for i in 0..m {
            for j in i..m {
                idx2[i * m + j] = pairs.len();
                idx2[j * m + i] = pairs.len();
                pairs.push((i, j));
            }
        }
        let mut triples = Vec::new();
        let mut idx3 = vec![0; m * m * m];
        for i in 0..m {
            for j in i..m {
                for k in j..m {
                    let q = triples.len();
                    for (a, b, c) in [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ] {
                        idx3[(a * m + b) * m + c] = q;
                    }
                    triples.push((i, j, k, idx2[i * m + j], idx2[i * m + k], idx2[j * m + k]));
                }
            }
        }
        Self {
            m,
            pairs,
            triples,
            idx2,
            idx3,
        }
    }

    pub fn get(m: usize) -> &'static Layout {
        static CACHE: OnceLock<Vec<Layout>> = OnceLock::new();
        let all = CACHE.get_or_init(|| (0..=2 * MAX_DIM).map(Layout::build).collect());
        assert!(
            m <= 2 * MAX_DIM,
            "at most {MAX_DIM} complex dimensions supported"
        );
        &all[m]
    }

    #[inline]
    pub fn i2(&self, i: usize, j: usize) -> usize {
        self.idx2[i * self.m + j]
    }

    #[inline]
    pub fn i3(&self, i: usize, j: usize, k: usize) -> usize {
        self.idx3[(i * self.m + j) * self.m + k]
    }
}

pub trait Coef:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> Self;
    fn im(self) -> Self;
    fn finite(self) -> bool;
}

impl Coef for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> Self {
        self
    }
    fn im(self) -> Self {
        0.0
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Coef for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> Self {
        Complex64::new(self.re, 0.0)
    }
    fn im(self) -> Self {
        Complex64::new(self.im, 0.0)
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Truncated Taylor data to order three: value, gradient, packed Hessian and packed third tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor3<T: Coef> {
    m: usize,
    pub v: T,
    pub g: Vec<T>,
    pub h: Vec<T>,
    pub t: Vec<T>,
}

impl<T: Coef> Taylor3<T> {
    pub fn constant(m: usize, c: T) -> Self {
        Self::truncated(m, c, 3)
    }

    /// Constant jet carrying derivatives up to `order` (1 or 3); lower orders leave the
    /// higher blocks empty.
    pub fn truncated(m: usize, c: T, order: usize) -> Self {
        let l = Layout::get(m);
        let len = |k: usize, full: usize| if order >= k { full } else { 0 };
        Self {
            m,
            v: c,
            g: vec![T::zero(); m],
            h: vec![T::zero(); len(2, l.pairs.len())],
            t: vec![T::zero(); len(3, l.triples.len())],
        }
    }

    pub fn order(&self) -> usize {
        if self.h.is_empty() {
            1
        } else {
            3
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn layout(&self) -> &'static Layout {
        Layout::get(self.m)
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.h[self.layout().i2(i, j)]
    }

    pub fn third(&self, i: usize, j: usize, k: usize) -> T {
        self.t[self.layout().i3(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            m: self.m,
            v: f(self.v),
            g: self.g.iter().map(|x| f(*x)).collect(),
            h: self.h.iter().map(|x| f(*x)).collect(),
            t: self.t.iter().map(|x| f(*x)).collect(),
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            m: self.m,
            v: f(self.v, o.v),
            g: self.g.iter().zip(&o.g).map(|(a, b)| f(*a, *b)).collect(),
            h: self.h.iter().zip(&o.h).map(|(a, b)| f(*a, *b)).collect(),
            t: self.t.iter().zip(&o.t).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| c * x)
    }

    /// `self += c * o`.
    pub fn axpy(&mut self, c: T, o: &Self) {
        self.v = self.v + c * o.v;
        for (a, b) in self.g.iter_mut().zip(&o.g) {
            *a = *a + c * *b;
        }
        for (a, b) in self.h.iter_mut().zip(&o.h) {
            *a = *a + c * *b;
        }
        for (a, b) in self.t.iter_mut().zip(&o.t) {
            *a = *a + c * *b;
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let l = self.layout();
        let (u, w) = (self, o);
        let g = (0..self.m).map(|i| u.g[i] * w.v + u.v * w.g[i]).collect();
        if u.h.is_empty() || w.h.is_empty() {
            return Self {
                m: self.m,
                v: u.v * w.v,
                g,
                h: Vec::new(),
                t: Vec::new(),
            };
        }
        let h = l
            .pairs
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| u.h[p] * w.v + u.g[i] * w.g[j] + u.g[j] * w.g[i] + u.v * w.h[p])
            .collect();
        let t = l
            .triples
            .iter()
            .enumerate()
            .map(|(q, &(i, j, k, ij, ik, jk))| {
                u.t[q] * w.v
                    + u.h[ij] * w.g[k]
                    + u.h[ik] * w.g[j]
                    + u.h[jk] * w.g[i]
                    + u.g[i] * w.h[jk]
                    + u.g[j] * w.h[ik]
                    + u.g[k] * w.h[ij]
                    + u.v * w.t[q]
            })
            .collect();
        Self {
            m: self.m,
            v: u.v * w.v,
            g,
            h,
            t,
        }
    }

    /// Composition `f(self)` given `f` and its first three derivatives at the value.
    /// Zero coefficients are skipped so that infinite higher derivatives never meet zero jets.
    pub fn chain(&self, f0: T, f1: T, f2: T, f3: T) -> Self {
        let l = self.layout();
        let z = T::zero();
        let u = self;
        let g =
            u.g.iter()
                .map(|&x| if f1 == z { z } else { f1 * x })
                .collect();
        if u.h.is_empty() {
            return Self {
                m: self.m,
                v: f0,
                g,
                h: Vec::new(),
                t: Vec::new(),
            };
        }
        let h = l
            .pairs
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| {
                let mut s = z;
                if f1 != z {
                    s = s + f1 * u.h[p];
                }
                if f2 != z {
                    s = s + f2 * u.g[i] * u.g[j];
                }
                s
            })
            .collect();
        let t = l
            .triples
            .iter()
            .enumerate()
            .map(|(q, &(i, j, k, ij, ik, jk))| {
                let mut s = z;
                if f1 != z {
                    s = s + f1 * u.t[q];
                }
                if f2 != z {
                    s = s + f2 * (u.h[ij] * u.g[k] + u.h[ik] * u.g[j] + u.h[jk] * u.g[i]);
                }
                if f3 != z {
                    s = s + f3 * u.g[i] * u.g[j] * u.g[k];
                }
                s
            })
            .collect();
        Self {
            m: self.m,
            v: f0,
            g,
            h,
            t,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.v.finite()
            && self.g.iter().all(|x| x.finite())
            && self.h.iter().all(|x| x.finite())
            && self.t.iter().all(|x| x.finite())
    }
}

impl Taylor3<f64> {
    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e, e)
    }
}

impl Taylor3<Complex64> {
    /// Jet of the coordinate function `z_j` (complex dimension `n`).
    pub fn coordinate(n: usize, j: usize, zj: Complex64, order: usize) -> Self {
        let mut c = Self::truncated(2 * n, zj, order);
        c.g[2 * j] = Complex64::one();
        c.g[2 * j + 1] = Complex64::i();
        c
    }

    fn apply(&self, f: Func) -> Result<Self> {
        let u = self.v;
        Ok(match f {
            Func::Conj => self.map(|x| x.conj()),
            Func::Re => self.map(Coef::re),
            Func::Im => self.map(Coef::im),
            Func::Abs2 => self.mul(&self.map(|x| x.conj())),
            Func::Exp => {
                let e = u.exp();
                self.chain(e, e, e, e)
            }
            Func::Log => {
                check_positive_real_part("log", u)?;
                let r = u.inv();
                self.chain(u.ln(), r, -r * r, 2.0 * r * r * r)
            }
            Func::Sqrt => {
                check_positive_real_part("sqrt", u)?;
                let s = u.sqrt();
                let r = s.inv();
                self.chain(s, 0.5 * r, -0.25 * r * r * r, 0.375 * r.powi(5))
            }
            Func::Sin => {
                let (s, c) = (u.sin(), u.cos());
                self.chain(s, c, -s, -c)
            }
            Func::Cos => {
                let (s, c) = (u.sin(), u.cos());
                self.chain(c, -s, -c, s)
            }
            Func::Ramp => {
                check_real("ramp", u)?;
                if u.re > 0.0 {
                    self.map(Coef::re)
                } else {
                    Self::truncated(self.m, Complex64::zero(), self.order())
                }
            }
        })
    }

    fn powi(&self, k: i32) -> Result<Self> {
        let u = self.v;
        if k == 0 {
            return Ok(Self::truncated(self.m, Complex64::one(), self.order()));
        }
        if k < 0 && u == Complex64::zero() {
            return Err(Error::DivisionByZero);
        }
        let kf = k as f64;
        let coef = |c: f64, e: i32| {
            if c == 0.0 {
                Complex64::zero()
            } else {
                c * u.powi(e)
            }
        };
        Ok(self.chain(
            u.powi(k),
            coef(kf, k - 1),
            coef(kf * (kf - 1.0), k - 2),
            coef(kf * (kf - 1.0) * (kf - 2.0), k - 3),
        ))
    }

    fn recip(&self) -> Result<Self> {
        if self.v == Complex64::zero() {
            return Err(Error::DivisionByZero);
        }
        let r = self.v.inv();
        Ok(self.chain(r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r))
    }
}

fn jet_node(
    node: &Node,
    n: usize,
    z: &[Complex64],
    params: &Params,
    order: usize,
) -> Result<Taylor3<Complex64>> {
    let m = 2 * n;
    let rec = |x: &Node| jet_node(x, n, z, params, order);
    let j = match node {
        Node::Num(x) => Taylor3::truncated(m, Complex64::new(*x, 0.0), order),
        Node::I => Taylor3::truncated(m, Complex64::i(), order),
        Node::Var(k) => Taylor3::coordinate(n, *k, z[*k], order),
        Node::Param(p) => Taylor3::truncated(
            m,
            Complex64::new(
                *params
                    .get(p)
                    .ok_or_else(|| Error::UnboundParameter(p.clone()))?,
                0.0,
            ),
            order,
        ),
        Node::Add(a, b) => rec(a)?.add(&rec(b)?),
        Node::Sub(a, b) => rec(a)?.sub(&rec(b)?),
        Node::Mul(a, b) => rec(a)?.mul(&rec(b)?),
        Node::Div(a, b) => rec(a)?.mul(&rec(b)?.recip()?),
        Node::Neg(a) => rec(a)?.map(|x| -x),
        Node::Pow(a, k) => rec(a)?.powi(*k)?,
        Node::Call(f, a) => rec(a)?.apply(*f)?,
    };
    if j.all_finite() {
        Ok(j)
    } else {
        Err(Error::NonFinite("jet propagation"))
    }
}

/// Complex-valued Taylor data of `e` at `z` in the real coordinates.
pub fn jet_eval_complex(e: &Expr, z: &[Complex64], params: &Params) -> Result<Taylor3<Complex64>> {
    jet_eval_order(e, z, params, 3)
}

/// Value and real gradient of a real-valued expression.
pub fn value_grad(e: &Expr, z: &[Complex64], params: &Params) -> Result<(f64, Vec<f64>)> {
    let c = jet_eval_order(e, z, params, 1)?;
    Ok((c.v.re, c.g.iter().map(|x| x.re).collect()))
}

/// Complex jet truncated at `order` (1 or 3).
pub fn jet_eval_order(
    e: &Expr,
    z: &[Complex64],
    params: &Params,
    order: usize,
) -> Result<Taylor3<Complex64>> {
    if z.len() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: z.len(),
        });
    }
    if e.dim() > MAX_DIM {
        return Err(Error::Invalid(format!(
            "jets support at most {MAX_DIM} complex dimensions"
        )));
    }
    jet_node(e.root(), e.dim(), z, params, order)
}

/// Real Taylor data of a real-valued expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3 {
    pub taylor: Taylor3<f64>,
    /// Largest imaginary part discarded when the complex jet was made real.
    pub imag_residual: f64,
}

impl Jet3 {
    pub fn from_real(taylor: Taylor3<f64>) -> Self {
        Self {
            taylor,
            imag_residual: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.taylor.m() / 2
    }

    pub fn value(&self) -> f64 {
        self.taylor.v
    }

    pub fn grad(&self) -> &[f64] {
        &self.taylor.g
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.taylor.hess(i, j)
    }

    pub fn third(&self, i: usize, j: usize, k: usize) -> f64 {
        self.taylor.third(i, j, k)
    }

    pub fn mul(&self, o: &Jet3) -> Jet3 {
        Jet3 {
            taylor: self.taylor.mul(&o.taylor),
            imag_residual: self.imag_residual.max(o.imag_residual),
        }
    }

    pub fn exp(&self) -> Jet3 {
        Jet3 {
            taylor: self.taylor.exp(),
            imag_residual: self.imag_residual,
        }
    }

    pub fn add(&self, o: &Jet3) -> Jet3 {
        Jet3 {
            taylor: self.taylor.add(&o.taylor),
            imag_residual: self.imag_residual.max(o.imag_residual),
        }
    }

    pub fn scale(&self, c: f64) -> Jet3 {
        Jet3 {
            taylor: self.taylor.scale(c),
            imag_residual: self.imag_residual * c.abs(),
        }
    }
}

/// Exact Taylor data of a real-valued expression to total order 3.
pub fn jet_eval(e: &Expr, z: &[Complex64], params: &Params) -> Result<Jet3> {
    let c = jet_eval_complex(e, z, params)?;
    let mut imag = c.v.im.abs();
    for x in c.g.iter().chain(&c.h).chain(&c.t) {
        imag = imag.max(x.im.abs());
    }
    Ok(Jet3 {
        taylor: c.map_re(),
        imag_residual: imag,
    })
}

impl Taylor3<Complex64> {
    fn map_re(&self) -> Taylor3<f64> {
        Taylor3 {
            m: self.m,
            v: self.v.re,
            g: self.g.iter().map(|x| x.re).collect(),
            h: self.h.iter().map(|x| x.re).collect(),
            t: self.t.iter().map(|x| x.re).collect(),
        }
    }

    /// Holomorphic derivative `d/dz_j` of the value (first order only).
    pub fn dz(&self, j: usize) -> Complex64 {
        0.5 * (self.g[2 * j] - Complex64::i() * self.g[2 * j + 1])
    }

    /// Antiholomorphic derivative `d/dzbar_j` of the value (first order only).
    pub fn dzbar(&self, j: usize) -> Complex64 {
        0.5 * (self.g[2 * j] + Complex64::i() * self.g[2 * j + 1])
    }
}

/// All Wirtinger derivatives of a real function to total order 3.
///
/// Index conventions: `rho_jkbar(j, k)` is `d_j d_kbar rho`, `rho_jklbar(j, k, l)` is
/// `d_j d_k d_lbar rho` and `rho_jkbarlbar(j, k, l)` is `d_j d_kbar d_lbar rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerJet {
    pub n: usize,
    pub value: f64,
    pub first: Vec<Complex64>,
    jk: Vec<Complex64>,
    jkbar: Vec<Complex64>,
    jkl: Vec<Complex64>,
    jklbar: Vec<Complex64>,
    jkbarlbar: Vec<Complex64>,
}

/// Default bound on the imaginary residual accepted by [`to_wirtinger`].
pub const REAL_TOL: f64 = 1e-10;

/// Converts real Taylor data to Wirtinger form, rejecting jets of non-real expressions.
pub fn to_wirtinger(j: &Jet3) -> Result<WirtingerJet> {
    let scale = 1.0 + j.value().abs();
    if j.imag_residual > REAL_TOL * scale {
        return Err(Error::NotReal(j.imag_residual));
    }
    Ok(WirtingerJet::from_taylor(&j.taylor))
}

impl WirtingerJet {
    pub fn from_taylor(t: &Taylor3<f64>) -> Self {
        let n = t.m() / 2;
        let i = Complex64::i();
        // d_z = (d_x - i d_y)/2 and d_zbar = (d_x + i d_y)/2 on each slot.
        let w = |bar: bool| {
            if bar {
                [0.5.into(), 0.5 * i]
            } else {
                [0.5.into(), -0.5 * i]
            }
        };
        let d1 = |a: usize, ba: bool| -> Complex64 {
            let wa = w(ba);
            (0..2).map(|p| wa[p] * t.g[2 * a + p]).sum()
        };
        let d2 = |a: usize, ba: bool, b: usize, bb: bool| -> Complex64 {
            let (wa, wb) = (w(ba), w(bb));
            let mut s = Complex64::zero();
            for p in 0..2 {
                for q in 0..2 {
                    s += wa[p] * wb[q] * t.hess(2 * a + p, 2 * b + q);
                }
            }
            s
        };
        let d3 = |a: usize, ba: bool, b: usize, bb: bool, c: usize, bc: bool| -> Complex64 {
            let (wa, wb, wc) = (w(ba), w(bb), w(bc));
            let mut s = Complex64::zero();
            for p in 0..2 {
                for q in 0..2 {
                    for r in 0..2 {
                        s += wa[p] * wb[q] * wc[r] * t.third(2 * a + p, 2 * b + q, 2 * c + r);
                    }
                }
            }
            s
        };
        let mut jk = vec![Complex64::zero(); n * n];
        let mut jkbar = vec![Complex64::zero(); n * n];
        let mut jkl = vec![Complex64::zero(); n * n * n];
        let mut jklbar = vec![Complex64::zero(); n * n * n];
        let mut jkbarlbar = vec![Complex64::zero(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                jk[a * n + b] = d2(a, false, b, false);
                jkbar[a * n + b] = d2(a, false, b, true);
                for c in 0..n {
                    let q = (a * n + b) * n + c;
                    jkl[q] = d3(a, false, b, false, c, false);
                    jklbar[q] = d3(a, false, b, false, c, true);
                    jkbarlbar[q] = d3(a, false, b, true, c, true);
                }
            }
        }
        Self {
            n,
            value: t.v,
            first: (0..n).map(|a| d1(a, false)).collect(),
            jk,
            jkbar,
            jkl,
            jklbar,
            jkbarlbar,
        }
    }

    #[inline]
    pub fn rho_jk(&self, j: usize, k: usize) -> Complex64 {
        self.jk[j * self.n + k]
    }

    #[inline]
    pub fn rho_jkbar(&self, j: usize, k: usize) -> Complex64 {
        self.jkbar[j * self.n + k]
    }

    #[inline]
    pub fn rho_jkl(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.jkl[(j * self.n + k) * self.n + l]
    }

    #[inline]
    pub fn rho_jklbar(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.jklbar[(j * self.n + k) * self.n + l]
    }

    #[inline]
    pub fn rho_jkbarlbar(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.jkbarlbar[(j * self.n + k) * self.n + l]
    }

    /// Levi form `sum rho_{jkbar} x_j conj(y_k)`.
    pub fn levi(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut s = Complex64::zero();
        for j in 0..self.n {
            for k in 0..self.n {
                s += self.rho_jkbar(j, k) * x[j] * y[k].conj();
            }
        }
        s
    }

    /// `sum rho_j v_j`, the action of d rho on a (1,0) vector.
    pub fn d_rho(&self, v: &[Complex64]) -> Complex64 {
        self.first.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Largest deviation of the complex Hessian from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                d = d.max((self.rho_jkbar(j, k) - self.rho_jkbar(k, j).conj()).norm());
            }
        }
        d
    }
}

/// Worst relative discrepancy `|jet - fd| / (1 + |jet|)` between the jet of `e` at `z` and
/// central finite differences with step `h`. Second derivatives come from stencils of
/// `eval`; third derivatives from central differences of analytic Hessians.
pub fn fd_check(e: &Expr, z: &[Complex64], params: &Params, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Invalid(
            "finite-difference step must be positive".into(),
        ));
    }
    let n = e.dim();
    let m = 2 * n;
    let jet = jet_eval(e, z, params)?;
    let x0 = crate::space::to_real(z);
    let f = |dx: &[(usize, f64)]| -> Result<f64> {
        let mut x = x0.clone();
        for &(k, d) in dx {
            x[k] += d;
        }
        Ok(e.eval(&crate::space::from_real(&x), params)?.re)
    };
    let hess_at = |k: usize, d: f64| -> Result<Jet3> {
        let mut x = x0.clone();
        x[k] += d;
        jet_eval(e, &crate::space::from_real(&x), params)
    };
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs());
    let mut worst: f64 = 0.0;
    let f0 = f(&[])?;
    worst = worst.max(rel(jet.value(), f0));
    for i in 0..m {
        let g = (f(&[(i, h)])? - f(&[(i, -h)])?) / (2.0 * h);
        worst = worst.max(rel(jet.grad()[i], g));
        for j in i..m {
            let fd = if i == j {
                (f(&[(i, h)])? - 2.0 * f0 + f(&[(i, -h)])?) / (h * h)
            } else {
                (f(&[(i, h), (j, h)])? - f(&[(i, h), (j, -h)])? - f(&[(i, -h), (j, h)])?
                    + f(&[(i, -h), (j, -h)])?)
                    / (4.0 * h * h)
            };
            worst = worst.max(rel(jet.hess(i, j), fd));
        }
    }
    for k in 0..m {
        let hp = hess_at(k, h)?;
        let hm = hess_at(k, -h)?;
        for i in 0..m {
            for j in i..m {
                let fd = (hp.hess(i, j) - hm.hess(i, j)) / (2.0 * h);
                worst = worst.max(rel(jet.third(i, j, k), fd));
            }
        }
    }
    Ok(worst)
}
