//! The D'Angelo 1-form `alpha = i_T (d dbar rho)`, its exterior derivatives and the
//! pointwise quantities `A`, `B` entering the index criteria.
//!
//! With `S = sum |rho_j|^2` and `Ln = conj(d rho)/S` the form is
//! `alpha = sum a_j dz_j + conj(a_j) dzbar_j`, `a_j = sum_k rho_{j kbar} rho_k / S`.
//! All derivatives of `a` are analytic in the order-3 Wirtinger data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{DomainSpec, Params};
use crate::geometry::Frame;
use crate::jet::{value_grad, WirtingerJet};
use crate::space::{from_real, to_real};

/// Tangency tolerance relative to `|d rho| |v|`.
pub const TANGENT_TOL: f64 = 1e-10;

type C = Complex64;

fn zero() -> C {
    C::new(0.0, 0.0)
}

/// Real 1-form `sum a_j dz_j + conj(a_j) dzbar_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Form1 {
    pub a: Vec<C>,
}

impl Form1 {
    /// Value on a (1,0) vector.
    pub fn on(&self, v: &[C]) -> C {
        self.a.iter().zip(v).map(|(a, x)| a * x).sum()
    }

    /// Value on the conjugate `conj(v)` of a (1,0) vector.
    pub fn on_conj(&self, v: &[C]) -> C {
        self.on(v).conj()
    }

    /// Value on a real vector given as `X + conj(X)` with `X` of type (1,0), or on
    /// `X - conj(X)` when `minus` is set.
    pub fn on_real(&self, x: &[C], minus: bool) -> C {
        if minus {
            self.on(x) - self.on_conj(x)
        } else {
            self.on(x) + self.on_conj(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Form,
    Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ABQuantities {
    pub a: f64,
    pub b: f64,
    pub route: Route,
}

pub fn alpha_at(w: &WirtingerJet, f: &Frame) -> Form1 {
    let n = w.n;
    Form1 {
        a: (0..n)
            .map(|j| (0..n).map(|k| w.rho_jkbar(j, k) * f.ln[k].conj()).sum())
            .collect(),
    }
}

/// Precomputed D'Angelo data at one point.
#[derive(Debug, Clone)]
pub struct DAngelo {
    pub n: usize,
    pub alpha: Form1,
    /// `p[j][m] = d a_j / d zbar_m`.
    pub p: Vec<Vec<C>>,
    s: f64,
    /// `S_m = d S / d z_m`.
    s_m: Vec<C>,
}

impl DAngelo {
    pub fn new(w: &WirtingerJet, f: &Frame) -> Self {
        let n = w.n;
        let alpha = alpha_at(w, f);
        let s: f64 = w.first.iter().map(|x| x.norm_sqr()).sum();
        let s_m: Vec<C> = (0..n)
            .map(|m| {
                (0..n)
                    .map(|l| w.rho_jk(l, m) * w.first[l].conj() + w.first[l] * w.rho_jkbar(m, l))
                    .sum()
            })
            .collect();
        let p = (0..n)
            .map(|j| {
                (0..n)
                    .map(|m| {
                        let mut t = zero();
                        for k in 0..n {
                            t += w.rho_jkbarlbar(j, k, m) * w.first[k]
                                + w.rho_jkbar(j, k) * w.rho_jkbar(k, m);
                        }
                        t / s - alpha.a[j] * s_m[m].conj() / s
                    })
                    .collect()
            })
            .collect();
        Self {
            n,
            alpha,
            p,
            s,
            s_m,
        }
    }

    pub fn omega(&self, v: &[C]) -> C {
        self.alpha.on(v)
    }

    /// `(d alpha)(v, conj(w))`.
    pub fn d_alpha(&self, v: &[C], w: &[C]) -> C {
        let mut t = zero();
        for j in 0..self.n {
            for k in 0..self.n {
                t += (self.p[k][j].conj() - self.p[j][k]) * v[j] * w[k].conj();
            }
        }
        t
    }

    /// `i (d^c alpha)(v, conj(v))` before discarding the (roundoff) imaginary part.
    pub fn dc_alpha_complex(&self, v: &[C]) -> C {
        let mut t = zero();
        for j in 0..self.n {
            for k in 0..self.n {
                t += (self.p[j][k] + self.p[k][j].conj()) * v[j] * v[k].conj();
            }
        }
        t
    }

    /// `i (d^c alpha)(v, conj(v))`, a real number.
    pub fn dc_alpha(&self, v: &[C]) -> f64 {
        self.dc_alpha_complex(v).re
    }

    /// `(dbar omega)(v, conj(v)) = -1/2 i d^c alpha (v, conj(v))`.
    pub fn dbar_omega(&self, v: &[C]) -> f64 {
        -0.5 * self.dc_alpha(v)
    }

    /// `A = |omega(v)|^2 / 4`, `B = -A - dbar_omega(v, conj v) / 4`.
    pub fn ab_form(&self, v: &[C]) -> ABQuantities {
        let a = 0.25 * self.omega(v).norm_sqr();
        let b = -a - 0.25 * self.dbar_omega(v);
        ABQuantities {
            a,
            b,
            route: Route::Form,
        }
    }

    /// Largest entry of the derivative matrix, a natural scale for residuals.
    pub fn scale(&self) -> f64 {
        self.p
            .iter()
            .flatten()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
            .max(self.alpha.a.iter().map(|x| x.norm()).fold(0.0, f64::max))
    }

    /// `d Ln_j / d z_m` and `d Ln_j / d zbar_m` as `[j][m]` tables.
    fn ln_derivatives(&self, w: &WirtingerJet) -> (Vec<Vec<C>>, Vec<Vec<C>>) {
        let n = self.n;
        let s = self.s;
        let dz = (0..n)
            .map(|j| {
                (0..n)
                    .map(|m| w.rho_jkbar(m, j) / s - w.first[j].conj() * self.s_m[m] / (s * s))
                    .collect()
            })
            .collect();
        let dzb = (0..n)
            .map(|j| {
                (0..n)
                    .map(|m| {
                        w.rho_jk(j, m).conj() / s - w.first[j].conj() * self.s_m[m].conj() / (s * s)
                    })
                    .collect()
            })
            .collect();
        (dz, dzb)
    }
}

/// `alpha(conj v) = Levi(Ln, v)` for tangential `v`.
pub fn alpha_on_conj(w: &WirtingerJet, f: &Frame, v: &[C]) -> Result<C> {
    f.check_tangential(v, TANGENT_TOL)?;
    Ok(w.levi(&f.ln, v))
}

/// Field route: `A = |Levi(v, N)|^2 / |grad rho|^2` and `B = 1/2 Re N(Levi(L, L)) / |grad rho|`
/// for the extension `L = v - (v rho) Ln + rho W'`, where `W' = W - (W rho) Ln` is the
/// tangential part of an optional constant field `W` (zero by default).
pub fn ab_field(
    w: &WirtingerJet,
    f: &Frame,
    v: &[C],
    perturb: Option<&[C]>,
) -> Result<ABQuantities> {
    f.check_tangential(v, TANGENT_TOL)?;
    let n = w.n;
    let d = DAngelo::new(w, f);
    let (dln, dlnb) = d.ln_derivatives(w);
    let c = f.d_rho_on(v);
    let ln = &f.ln;
    // L at the point (rho = 0 there, so the perturbation does not change the value).
    let l: Vec<C> = (0..n).map(|j| v[j] - c * ln[j]).collect();
    let wp: Option<Vec<C>> = perturb.map(|wf| {
        let wr = f.d_rho_on(wf);
        (0..n).map(|j| wf[j] - wr * ln[j]).collect()
    });
    // dl[j][m] = d L_j / d z_m, dlb[j][m] = d L_j / d zbar_m.
    let mut dl = vec![vec![zero(); n]; n];
    let mut dlb = vec![vec![zero(); n]; n];
    for m in 0..n {
        let cm: C = (0..n).map(|k| v[k] * w.rho_jk(k, m)).sum();
        let cmb: C = (0..n).map(|k| v[k] * w.rho_jkbar(k, m)).sum();
        for j in 0..n {
            dl[j][m] = -cm * ln[j] - c * dln[j][m];
            dlb[j][m] = -cmb * ln[j] - c * dlnb[j][m];
            if let Some(wp) = &wp {
                dl[j][m] += w.first[m] * wp[j];
                dlb[j][m] += w.first[m].conj() * wp[j];
            }
        }
    }
    let mut nf = zero();
    for m in 0..n {
        let mut dmf = zero();
        for j in 0..n {
            for k in 0..n {
                dmf += w.rho_jklbar(j, m, k) * l[j] * l[k].conj()
                    + w.rho_jkbar(j, k) * dl[j][m] * l[k].conj()
                    + w.rho_jkbar(j, k) * l[j] * dlb[k][m].conj();
            }
        }
        nf += f.normal[m] * dmf;
    }
    let gn = f.grad_norm;
    let a = w.levi(v, &f.normal).norm_sqr() / (gn * gn);
    Ok(ABQuantities {
        a,
        b: 0.5 * nf.re / gn,
        route: Route::Field,
    })
}

/// `d rho([Ln, conj L])` for `L = v - (v rho) Ln`, with the derivatives of the
/// coefficient field `Ln` taken by central differences of first-order data.
pub fn commutator_fd(spec: &DomainSpec, p: &[C], v: &[C], h: f64) -> Result<C> {
    let none = Params::new();
    let n = spec.n;
    let d_rho = |z: &[C]| -> Result<Vec<C>> {
        let (_, g) = value_grad(&spec.rho, z, &none)?;
        Ok((0..n)
            .map(|j| 0.5 * C::new(g[2 * j], -g[2 * j + 1]))
            .collect())
    };
    let ln_at = |z: &[C]| -> Result<Vec<C>> {
        let d = d_rho(z)?;
        let s: f64 = d.iter().map(|x| x.norm_sqr()).sum();
        if s == 0.0 {
            return Err(Error::VanishingGradient(0.0));
        }
        Ok(d.iter().map(|x| x.conj() / s).collect())
    };
    let x0 = to_real(p);
    let shifted = |k: usize, s: f64| -> Result<Vec<C>> {
        let mut x = x0.clone();
        x[k] += s;
        ln_at(&from_real(&x))
    };
    let d0 = d_rho(p)?;
    let ln0 = ln_at(p)?;
    let c: C = d0.iter().zip(v).map(|(a, b)| a * b).sum();
    let l0: Vec<C> = (0..n).map(|j| v[j] - c * ln0[j]).collect();
    // [Ln, conj L] = sum_k Ln(conj L_k) d_kbar - sum_j conj(L)(Ln_j) d_j; only the
    // (1,0) part pairs with d rho.
    let mut out = zero();
    for m in 0..n {
        let (xp, xm) = (shifted(2 * m, h)?, shifted(2 * m, -h)?);
        let (yp, ym) = (shifted(2 * m + 1, h)?, shifted(2 * m + 1, -h)?);
        for j in 0..n {
            let dx = (xp[j] - xm[j]) / (2.0 * h);
            let dy = (yp[j] - ym[j]) / (2.0 * h);
            let dzbar = 0.5 * (dx + C::i() * dy);
            out -= d0[j] * l0[m].conj() * dzbar;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{frame_at, wirtinger_at};
    use crate::space::BBox;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn spec(src: &str) -> DomainSpec {
        DomainSpec::new(
            "t",
            parse(src, 2).unwrap(),
            Params::new(),
            BBox::symmetric(2, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn ball_alpha_at_pole() {
        let s = spec("abs2(z1)+abs2(z2)-1");
        let p = [c(1.0, 0.0), c(0.0, 0.0)];
        let w = wirtinger_at(&s, &p).unwrap();
        let f = frame_at(&w).unwrap();
        let a = alpha_at(&w, &f);
        assert_eq!(a.a, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(a.on_real(&f.ln, true), c(0.0, 0.0));
        let v = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(alpha_on_conj(&w, &f, &v).unwrap(), c(0.0, 0.0));
        let d = DAngelo::new(&w, &f);
        assert!(d.d_alpha(&v, &v).norm() < 1e-15);
        assert_eq!(d.dc_alpha_complex(&v).im, 0.0);
        assert!(alpha_on_conj(&w, &f, &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn ellipsoid_ab_vanish() {
        let s = spec("abs2(z1)+pow(abs2(z2),2)-1");
        let p = [c(1.0, 0.0), c(0.0, 0.0)];
        let w = wirtinger_at(&s, &p).unwrap();
        let f = frame_at(&w).unwrap();
        let v = [c(0.0, 0.0), c(1.0, 0.0)];
        let d = DAngelo::new(&w, &f);
        let form = d.ab_form(&v);
        let field = ab_field(&w, &f, &v, None).unwrap();
        assert!(form.a.abs() < 1e-15 && form.b.abs() < 1e-15, "{form:?}");
        assert!(field.a.abs() < 1e-15 && field.b.abs() < 1e-15, "{field:?}");
    }

    #[test]
    fn alpha_kills_t_and_matches_levi() {
        let s = spec("abs2(z1)+abs2(z2)+re(z1*z1*conj(z2))+0.3*pow(abs2(z1),2)-1");
        let p = crate::geometry::project_to_boundary(&s, &[c(0.6, 0.1), c(-0.3, 0.5)]).unwrap();
        let w = wirtinger_at(&s, &p).unwrap();
        let f = frame_at(&w).unwrap();
        let a = alpha_at(&w, &f);
        assert!(a.on_real(&f.ln, true).norm() < 1e-13);
        let v = &f.tangent_basis[0];
        let lhs = alpha_on_conj(&w, &f, v).unwrap();
        assert!((lhs - a.on_conj(v)).norm() < 1e-13);
        let two_v: Vec<C> = v.iter().map(|x| 2.0 * x).collect();
        assert!((alpha_on_conj(&w, &f, &two_v).unwrap() - 2.0 * lhs).norm() < 1e-13);
        let fd = commutator_fd(&s, &p, v, 1e-5).unwrap();
        assert!(
            (fd - lhs).norm() <= 1e-7 * (1.0 + lhs.norm()),
            "{fd} vs {lhs}"
        );
    }

    #[test]
    fn d_alpha_antisymmetry_and_quadratic_scaling() {
        let s = spec("abs2(z1)+abs2(z2)+re(z1*z1*conj(z2))+0.3*pow(abs2(z1),2)-1");
        let p = crate::geometry::project_to_boundary(&s, &[c(0.5, -0.2), c(0.4, 0.5)]).unwrap();
        let w = wirtinger_at(&s, &p).unwrap();
        let f = frame_at(&w).unwrap();
        let d = DAngelo::new(&w, &f);
        let v = [c(0.3, 0.1), c(-0.2, 0.7)];
        let u = [c(-0.5, 0.4), c(0.1, 0.2)];
        // (d alpha)(v, conj u) = -conj((d alpha)(u, conj v)) for a real 2-form
        assert!((d.d_alpha(&v, &u) + d.d_alpha(&u, &v).conj()).norm() < 1e-14);
        let t = &f.tangent_basis[0];
        let ab = d.ab_form(t);
        let k = c(0.7, -1.3);
        let kt: Vec<C> = t.iter().map(|x| k * x).collect();
        let ab2 = d.ab_form(&kt);
        assert!((ab2.a - k.norm_sqr() * ab.a).abs() < 1e-13);
        assert!((ab2.b - k.norm_sqr() * ab.b).abs() < 1e-12);
        assert!(d.dc_alpha_complex(t).im.abs() < 1e-13);
    }
}
