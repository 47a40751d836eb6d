//! Line-oriented domain and map files.
//!
//! Domain files:
//!
//! ```text
//! # comment
//! name = "ball"
//! dim = 2
//! param a = 0.5
//! rho = "abs2(z1) + a*abs2(z2) - 1"
//! bbox = [-1.2..1.2; -1.5..1.5; -1.2..1.2; -1.5..1.5]
//! psi = "log(abs2(z2))"
//! ```
//!
//! `bbox` lists one interval per real coordinate `x1, y1, x2, y2, ...`; a single interval
//! applies to all of them. `psi` lines add domain-specific perturbations and may repeat.
//! A file may instead name a builtin: `builtin = "worm"` plus `param beta = 2.0`.
//!
//! Map files:
//!
//! ```text
//! name = "shear"
//! dim_in = 2
//! dim_out = 2
//! f1 = "z1"
//! f2 = "z2 + pow(z1, 2)"
//! inverse {
//!   f1 = "z1"
//!   f2 = "z2 - pow(z1, 2)"
//! }
//! ```

use std::path::Path;

use crate::cli::builtin::Builtin;
use crate::crmap::MapSpec;
use crate::error::{Error, Result};
use crate::expr::{parse, parse_with_params, validate_real, DomainSpec, Expr, Params};
use crate::space::BBox;

/// Samples used to validate realness of file-supplied expressions.
pub const REALNESS_SAMPLES: usize = 1000;

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::File {
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| err(0, format!("{}: {e}", path.display())))
}

/// `(line number, key, value)` for every non-blank, non-comment line.
fn lines(src: &str) -> Vec<(usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

fn key_value(line: usize, l: &str) -> Result<(&str, &str)> {
    let (k, v) = l
        .split_once('=')
        .ok_or_else(|| err(line, format!("expected `key = value`, found {l:?}")))?;
    Ok((k.trim(), v.trim()))
}

fn quoted(line: usize, v: &str) -> Result<String> {
    let v = v.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        Ok(v[1..v.len() - 1].to_string())
    } else {
        Err(err(
            line,
            format!("expected a double-quoted string, found {v}"),
        ))
    }
}

fn number<T: std::str::FromStr>(line: usize, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| err(line, format!("expected a number, found {v:?}")))
}

fn expr_at(line: usize, src: &str, n: usize, params: &[String]) -> Result<Expr> {
    parse_with_params(src, n, params).map_err(|e| err(line, e.to_string()))
}

fn parse_bbox(line: usize, v: &str, n: usize) -> Result<BBox> {
    let inner = v
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(line, "bbox must look like [lo..hi; lo..hi; ...]"))?;
    let mut iv = Vec::new();
    for part in inner.split(';') {
        let (a, b) = part
            .split_once("..")
            .ok_or_else(|| err(line, format!("bad interval {:?}", part.trim())))?;
        let (a, b): (f64, f64) = (number(line, a)?, number(line, b)?);
        iv.push((a, b));
    }
    if iv.len() == 1 {
        iv = vec![iv[0]; 2 * n];
    }
    if iv.len() != 2 * n {
        return Err(err(
            line,
            format!(
                "bbox needs {} intervals for dim = {n}, found {}",
                2 * n,
                iv.len()
            ),
        ));
    }
    BBox::new(
        iv.iter().map(|p| p.0).collect(),
        iv.iter().map(|p| p.1).collect(),
    )
    .map_err(|e| err(line, e.to_string()))
}

pub fn load_domain(path: &Path) -> Result<DomainSpec> {
    parse_domain(&read(path)?)
}

pub fn parse_domain(src: &str) -> Result<DomainSpec> {
    let mut name = None;
    let mut dim: Option<(usize, usize)> = None;
    let mut params = Params::new();
    let mut rho: Option<(usize, String)> = None;
    let mut bbox: Option<(usize, String)> = None;
    let mut psi: Vec<(usize, String)> = Vec::new();
    let mut builtin: Option<(usize, String)> = None;
    for (line, l) in lines(src) {
        if let Some(rest) = l.strip_prefix("param ") {
            let (k, v) = key_value(line, rest)?;
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(line, format!("bad parameter name {k:?}")));
            }
            let x: f64 = number(line, v)?;
            if !x.is_finite() {
                return Err(err(line, "parameter values must be finite"));
            }
            params.insert(k.to_string(), x);
            continue;
        }
        let (k, v) = key_value(line, l)?;
        match k {
            "name" => name = Some(quoted(line, v)?),
            "dim" => dim = Some((line, number(line, v)?)),
            "rho" => rho = Some((line, quoted(line, v)?)),
            "bbox" => bbox = Some((line, v.to_string())),
            "psi" => psi.push((line, quoted(line, v)?)),
            "builtin" => builtin = Some((line, quoted(line, v).unwrap_or_else(|_| v.to_string()))),
            other => return Err(err(line, format!("unknown key {other:?}"))),
        }
    }
    if let Some((line, b)) = builtin {
        let spec = Builtin::parse(&b, params.get("beta").copied())
            .and_then(|b| b.spec())
            .map_err(|e| err(line, e.to_string()))?;
        return Ok(spec);
    }
    let (dline, n) = dim.ok_or_else(|| err(0, "missing `dim`"))?;
    if n < 2 {
        return Err(err(dline, format!("dim must be at least 2 (got {n})")));
    }
    let (rline, rsrc) = rho.ok_or_else(|| err(0, "missing `rho`"))?;
    let (bline, bsrc) = bbox.ok_or_else(|| err(0, "missing `bbox`"))?;
    let names: Vec<String> = params.keys().cloned().collect();
    let rho = expr_at(rline, &rsrc, n, &names)?;
    let bbox = parse_bbox(bline, &bsrc, n)?;
    let mut spec = DomainSpec::new(
        name.unwrap_or_else(|| "domain".into()),
        rho,
        params.clone(),
        bbox,
    )
    .map_err(|e| err(rline, e.to_string()))?;
    let report = validate_real(&spec.rho, &spec.bbox, &Params::new(), REALNESS_SAMPLES, 0);
    if !report.is_real(1e-12) {
        return Err(err(
            rline,
            format!(
                "rho is not real-valued (imaginary part up to {:e})",
                report.max_imag
            ),
        ));
    }
    for (line, s) in psi {
        let e = expr_at(line, &s, n, &names)?
            .bind(&params)
            .map_err(|e| err(line, e.to_string()))?;
        let r = validate_real(&e, &spec.bbox, &Params::new(), REALNESS_SAMPLES, 0);
        if !r.is_real(1e-12) {
            return Err(err(
                line,
                format!("psi is not real-valued ({:e})", r.max_imag),
            ));
        }
        spec.psi_extras.push(e);
    }
    Ok(spec)
}

pub fn load_map(path: &Path) -> Result<MapSpec> {
    parse_map(&read(path)?)
}

#[derive(Default)]
struct MapBlock {
    name: Option<String>,
    dim_in: Option<usize>,
    dim_out: Option<usize>,
    f: Vec<(usize, usize, String)>,
    start: usize,
}

impl MapBlock {
    fn build(self, default_name: &str, inverse: Option<MapSpec>) -> Result<MapSpec> {
        let line = self.start;
        let n_in = self.dim_in.ok_or_else(|| err(line, "missing `dim_in`"))?;
        let n_out = self.dim_out.ok_or_else(|| err(line, "missing `dim_out`"))?;
        let mut comps: Vec<Option<Expr>> = vec![None; n_out];
        for (l, k, src) in self.f {
            if k == 0 || k > n_out {
                return Err(err(l, format!("component f{k} outside 1..={n_out}")));
            }
            comps[k - 1] = Some(parse(&src, n_in).map_err(|e| err(l, e.to_string()))?);
        }
        let comps = comps
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| err(line, format!("missing component f{}", k + 1))))
            .collect::<Result<Vec<_>>>()?;
        MapSpec::new(
            self.name.unwrap_or_else(|| default_name.into()),
            comps,
            inverse,
        )
        .map_err(|e| err(line, e.to_string()))
    }
}

pub fn parse_map(src: &str) -> Result<MapSpec> {
    let mut outer = MapBlock {
        start: 1,
        ..Default::default()
    };
    let mut inner: Option<MapBlock> = None;
    let mut inverse_done = None;
    for (line, l) in lines(src) {
        if l.starts_with("inverse") {
            if inner.is_some() || inverse_done.is_some() {
                return Err(err(line, "only one inverse block is allowed"));
            }
            if l.trim_start_matches("inverse").trim() != "{" {
                return Err(err(line, "expected `inverse {`"));
            }
            inner = Some(MapBlock {
                start: line,
                ..Default::default()
            });
            continue;
        }
        if l == "}" {
            match inner.take() {
                Some(b) => inverse_done = Some(b),
                None => return Err(err(line, "unmatched `}`")),
            }
            continue;
        }
        let b = inner.as_mut().unwrap_or(&mut outer);
        let (k, v) = key_value(line, l)?;
        match k {
            "name" => b.name = Some(quoted(line, v)?),
            "dim_in" => b.dim_in = Some(number(line, v)?),
            "dim_out" => b.dim_out = Some(number(line, v)?),
            _ if k.starts_with('f') && k[1..].parse::<usize>().is_ok() => {
                b.f.push((line, k[1..].parse().unwrap(), quoted(line, v)?))
            }
            other => return Err(err(line, format!("unknown key {other:?}"))),
        }
    }
    if let Some(b) = inner {
        return Err(err(b.start, "unterminated inverse block"));
    }
    let (n_in, n_out) = (outer.dim_in, outer.dim_out);
    let inverse = match inverse_done {
        Some(mut b) => {
            b.dim_in = b.dim_in.or(n_out);
            b.dim_out = b.dim_out.or(n_in);
            Some(b.build("inverse", None)?)
        }
        None => None,
    };
    outer.build("map", inverse)
}
