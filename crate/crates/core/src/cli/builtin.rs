//! Builtin domains.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::expr::{parse, parse_with_params, DomainSpec, Params};
use crate::space::BBox;

/// Fractions of the critical winding rate used for the worm's `log cos` perturbations.
pub const WORM_KAPPA_FRACTIONS: [f64; 3] = [0.5, 0.8, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Ball { n: usize },
    Ellipsoid { axes: Vec<f64> },
    ComplexEllipsoid { m: u32 },
    Worm { beta: f64 },
}

impl Builtin {
    /// Accepts `name` or `name(a, b, ...)`; `beta` overrides the worm parameter.
    pub fn parse(src: &str, beta: Option<f64>) -> Result<Self> {
        let src = src.trim();
        let (name, args) = match src.find('(') {
            Some(i) if src.ends_with(')') => {
                let inner = &src[i + 1..src.len() - 1];
                let args = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        let s = s.split_once('=').map(|(_, v)| v.trim()).unwrap_or(s);
                        s.parse::<f64>()
                            .map_err(|_| Error::Invalid(format!("bad builtin argument {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (&src[..i], args)
            }
            _ => (src, Vec::new()),
        };
        let b = match name.trim() {
            "ball" => Builtin::Ball {
                n: match args.first() {
                    None => 2,
                    Some(&x) if x.fract() == 0.0 && x >= 2.0 => x as usize,
                    Some(x) => return Err(Error::Invalid(format!("ball dimension {x}"))),
                },
            },
            "ellipsoid" => Builtin::Ellipsoid {
                axes: if args.is_empty() {
                    vec![1.0, 2.0]
                } else {
                    args
                },
            },
            "complex_ellipsoid" => Builtin::ComplexEllipsoid {
                m: match args.first() {
                    None => 2,
                    Some(&x) if x.fract() == 0.0 && (2.0..=32.0).contains(&x) => x as u32,
                    Some(x) => {
                        return Err(Error::Invalid(format!(
                            "complex_ellipsoid exponent must be an integer >= 2 (got {x})"
                        )))
                    }
                },
            },
            "worm" => Builtin::Worm {
                beta: beta.or(args.first().copied()).unwrap_or(2.0),
            },
            other => return Err(Error::Invalid(format!("unknown builtin domain {other:?}"))),
        };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<()> {
        match self {
            Builtin::Ellipsoid { axes } => {
                if axes.len() < 2 || axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::Invalid(
                        "ellipsoid needs at least two positive axes".into(),
                    ));
                }
            }
            Builtin::Worm { beta } if !(beta.is_finite() && *beta > FRAC_PI_2) => {
                return Err(Error::Invalid(format!(
                    "worm requires beta > pi/2 (got {beta})"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Ball { n } => format!("ball({n})"),
            Builtin::Ellipsoid { axes } => format!(
                "ellipsoid({})",
                axes.iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            Builtin::ComplexEllipsoid { m } => format!("complex_ellipsoid({m})"),
            Builtin::Worm { beta } => format!("worm({beta})"),
        }
    }

    pub fn spec(&self) -> Result<DomainSpec> {
        self.check()?;
        match self {
            Builtin::Ball { n } => {
                let src = (1..=*n)
                    .map(|j| format!("abs2(z{j})"))
                    .collect::<Vec<_>>()
                    .join("+")
                    + "-1";
                DomainSpec::new(
                    self.name(),
                    parse(&src, *n)?,
                    Params::new(),
                    BBox::symmetric(*n, 1.2),
                )
            }
            Builtin::Ellipsoid { axes } => {
                let n = axes.len();
                let src = axes
                    .iter()
                    .enumerate()
                    .map(|(j, a)| format!("abs2(z{})/{:?}", j + 1, a * a))
                    .collect::<Vec<_>>()
                    .join("+")
                    + "-1";
                let r = 1.2 * axes.iter().copied().fold(0.0, f64::max);
                DomainSpec::new(
                    self.name(),
                    parse(&src, n)?,
                    Params::new(),
                    BBox::symmetric(n, r),
                )
            }
            Builtin::ComplexEllipsoid { m } => DomainSpec::new(
                self.name(),
                parse(&format!("abs2(z1)+pow(abs2(z2),{m})-1"), 2)?,
                Params::new(),
                BBox::symmetric(2, 1.2),
            ),
            Builtin::Worm { beta } => worm(*beta),
        }
    }
}

/// Worm domain with `t = log|z2|^2` and `h = beta - pi/2`:
/// `rho = |z1 - exp(i t)|^2 - 1 + ramp(t - h)^4 + ramp(-t - h)^4`.
///
/// The boundary is Levi-flat along `{z1 = 0, |t| <= h}`, a closed annulus of winding
/// length `2 beta - pi`. Outside `|t| < h + 1` the domain is empty.
pub fn worm(beta: f64) -> Result<DomainSpec> {
    if !(beta.is_finite() && beta > FRAC_PI_2) {
        return Err(Error::Invalid(format!(
            "worm requires beta > pi/2 (got {beta})"
        )));
    }
    let t = "log(abs2(z2))";
    let src = format!(
        "abs2(z1) - 2*(re(z1)*cos({t}) + im(z1)*sin({t})) \
         + pow(ramp({t} - (beta - pi/2)), 4) + pow(ramp(-{t} - (beta - pi/2)), 4)"
    );
    let names = vec!["beta".to_string()];
    let rho = parse_with_params(&src, 2, &names)?;
    let mut params = Params::new();
    params.insert("beta".into(), beta);
    let h = beta - FRAC_PI_2;
    let r = 1.05 * ((h + 1.0) / 2.0).exp();
    let bbox = BBox::new(vec![-2.05, -2.05, -r, -r], vec![2.05, 2.05, r, r])?;
    let mut spec = DomainSpec::new(format!("worm({beta})"), rho, params, bbox)?;
    spec.psi_extras = worm_basis(beta)?;
    Ok(spec)
}

/// Quasi-random points of the worm's Levi-flat annulus `{z1 = 0, |log|z2|^2| <= beta - pi/2}`.
pub fn worm_annulus_points(beta: f64, count: usize, seed: u64) -> Vec<crate::space::Point> {
    let h = beta - FRAC_PI_2;
    crate::space::Halton::new(2, seed)
        .take(count)
        .map(|u| {
            let t = h * (2.0 * u[0] - 1.0);
            let phi = std::f64::consts::TAU * u[1];
            vec![
                num_complex::Complex64::new(0.0, 0.0),
                num_complex::Complex64::from_polar((0.5 * t).exp(), phi),
            ]
        })
        .collect()
}

/// `t`, `t^2` and `log cos(kappa t)` for `kappa = f pi / (2 beta - pi)`.
pub fn worm_basis(beta: f64) -> Result<Vec<crate::expr::Expr>> {
    let t = "log(abs2(z2))";
    let mut src = vec![t.to_string(), format!("pow({t},2)")];
    for f in WORM_KAPPA_FRACTIONS {
        let kappa = f * std::f64::consts::PI / (2.0 * beta - std::f64::consts::PI);
        src.push(format!("log(cos({kappa:?}*{t}))"));
    }
    src.iter()
        .map(|s| parse(s, 2).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn parses_names() {
        assert_eq!(
            Builtin::parse("ball", None).unwrap(),
            Builtin::Ball { n: 2 }
        );
        assert_eq!(
            Builtin::parse("complex_ellipsoid(3)", None).unwrap(),
            Builtin::ComplexEllipsoid { m: 3 }
        );
        assert_eq!(
            Builtin::parse("worm", Some(2.5)).unwrap(),
            Builtin::Worm { beta: 2.5 }
        );
        assert_eq!(
            Builtin::parse("worm(beta=3)", None).unwrap(),
            Builtin::Worm { beta: 3.0 }
        );
        assert!(Builtin::parse("worm", Some(1.0)).is_err());
        assert!(Builtin::parse("ellipsoid(1,-2)", None).is_err());
        assert!(Builtin::parse("torus", None).is_err());
    }

    #[test]
    fn sources() {
        let b = Builtin::Ball { n: 2 }.spec().unwrap();
        assert_eq!(
            b.rho
                .eval0(&[C::new(1.0, 0.0), C::new(0.0, 0.0)])
                .unwrap()
                .re,
            0.0
        );
        let e = Builtin::ComplexEllipsoid { m: 2 }.spec().unwrap();
        let z2 = 0.5f64.powf(0.25);
        let v = e
            .rho
            .eval0(&[C::new(0.0, 0.0), C::new(z2, 0.0)])
            .unwrap()
            .re;
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn worm_annulus_is_on_the_boundary() {
        let w = worm(2.0).unwrap();
        let h = 2.0 - FRAC_PI_2;
        for &t in &[-h, -0.3, 0.0, 0.2, h] {
            let r = (t / 2.0f64).exp();
            let z = [C::new(0.0, 0.0), C::from_polar(r, 0.7)];
            assert!(w.rho_at(&z).unwrap().abs() < 1e-14);
        }
        let z = [C::new(0.0, 0.0), C::new((0.5 * (h + 0.5)).exp(), 0.0)];
        assert!(w.rho_at(&z).unwrap() > 0.0);
        assert!(w.rho_at(&[C::new(1.0, 0.0), C::new(1.0, 0.0)]).unwrap() < 0.0);
        assert_eq!(w.psi_extras.len(), 5);
    }
}
