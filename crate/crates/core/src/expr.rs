//! Scalar expressions over complex coordinates `z1..zn`.
//!
//! The grammar is closed: numeric literals, the imaginary unit `i`, the constant `pi`,
//! variables `z1..zn`, declared real parameters, `+ - * /`, unary minus, integer powers
//! (`pow(e, k)` or `e ^ k`) and the functions
//! `conj re im abs2 exp log sqrt sin cos ramp`.
//!
//! `ramp(u) = max(Re u, 0)` is the only non-analytic primitive; it exists so that
//! flat cut-offs such as `pow(ramp(t - a), 4)` can be written. Used under a power
//! `k >= 4` its jets to order three are exact everywhere.

use std::collections::BTreeMap;
use std::fmt;
use std::ops;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::space::{from_real, BBox, Halton};

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Conj,
    Re,
    Im,
    Abs2,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Ramp,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Conj,
        Func::Re,
        Func::Im,
        Func::Abs2,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Ramp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
            Func::Abs2 => "abs2",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ramp => "ramp",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }

    /// Functions that are holomorphic in their argument.
    pub fn is_holomorphic(self) -> bool {
        matches!(
            self,
            Func::Exp | Func::Log | Func::Sqrt | Func::Sin | Func::Cos
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    I,
    /// Zero-based variable index (`z1` is `Var(0)`).
    Var(usize),
    Param(String),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn count(&self) -> usize {
        match self {
            Node::Num(_) | Node::I | Node::Var(_) | Node::Param(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.count() + b.count()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.count(),
        }
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::I | Node::Param(_) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.contains_var() || b.contains_var()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.contains_var(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(j) => Some(*j),
            Node::Num(_) | Node::I | Node::Param(_) => None,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
        }
    }

    fn map(&self, f: &impl Fn(&Node) -> Option<Node>) -> Node {
        if let Some(n) = f(self) {
            return n;
        }
        let b = |x: &Node| Box::new(x.map(f));
        match self {
            Node::Num(_) | Node::I | Node::Var(_) | Node::Param(_) => self.clone(),
            Node::Add(x, y) => Node::Add(b(x), b(y)),
            Node::Sub(x, y) => Node::Sub(b(x), b(y)),
            Node::Mul(x, y) => Node::Mul(b(x), b(y)),
            Node::Div(x, y) => Node::Div(b(x), b(y)),
            Node::Neg(x) => Node::Neg(b(x)),
            Node::Pow(x, k) => Node::Pow(b(x), *k),
            Node::Call(g, x) => Node::Call(*g, b(x)),
        }
    }

    fn params_into(&self, out: &mut Vec<String>) {
        match self {
            Node::Param(p) => {
                if !out.contains(p) {
                    out.push(p.clone())
                }
            }
            Node::Num(_) | Node::I | Node::Var(_) => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.params_into(out);
                b.params_into(out);
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.params_into(out),
        }
    }

    fn eval(&self, z: &[Complex64], params: &Params) -> Result<Complex64> {
        let v = match self {
            Node::Num(x) => Complex64::new(*x, 0.0),
            Node::I => Complex64::i(),
            Node::Var(j) => z[*j],
            Node::Param(p) => Complex64::new(
                *params
                    .get(p)
                    .ok_or_else(|| Error::UnboundParameter(p.clone()))?,
                0.0,
            ),
            Node::Add(a, b) => a.eval(z, params)? + b.eval(z, params)?,
            Node::Sub(a, b) => a.eval(z, params)? - b.eval(z, params)?,
            Node::Mul(a, b) => a.eval(z, params)? * b.eval(z, params)?,
            Node::Div(a, b) => {
                let d = b.eval(z, params)?;
                if d == Complex64::new(0.0, 0.0) {
                    return Err(Error::DivisionByZero);
                }
                a.eval(z, params)? / d
            }
            Node::Neg(a) => -a.eval(z, params)?,
            Node::Pow(a, k) => {
                let u = a.eval(z, params)?;
                if *k < 0 && u == Complex64::new(0.0, 0.0) {
                    return Err(Error::DivisionByZero);
                }
                u.powi(*k)
            }
            Node::Call(f, a) => apply_func(*f, a.eval(z, params)?)?,
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("expression evaluation"))
        }
    }
}

/// Applies a grammar function to a value, enforcing the domain rules shared by
/// evaluation and jet propagation.
pub(crate) fn apply_func(f: Func, u: Complex64) -> Result<Complex64> {
    Ok(match f {
        Func::Conj => u.conj(),
        Func::Re => Complex64::new(u.re, 0.0),
        Func::Im => Complex64::new(u.im, 0.0),
        Func::Abs2 => Complex64::new(u.norm_sqr(), 0.0),
        Func::Exp => u.exp(),
        Func::Log => {
            check_positive_real_part("log", u)?;
            u.ln()
        }
        Func::Sqrt => {
            check_positive_real_part("sqrt", u)?;
            u.sqrt()
        }
        Func::Sin => u.sin(),
        Func::Cos => u.cos(),
        Func::Ramp => {
            check_real("ramp", u)?;
            Complex64::new(u.re.max(0.0), 0.0)
        }
    })
}

pub(crate) fn check_positive_real_part(name: &str, u: Complex64) -> Result<()> {
    if u.re > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} argument {u} has nonpositive real part"
        )))
    }
}

pub(crate) fn check_real(name: &str, u: Complex64) -> Result<()> {
    if u.im.abs() <= 1e-12 * (1.0 + u.re.abs()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} argument {u} is not real")))
    }
}

/// A parsed expression in `dim` complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    dim: usize,
    root: Node,
}

impl Expr {
    pub fn from_node(dim: usize, root: Node) -> Result<Self> {
        if let Some(j) = root.max_var() {
            if j >= dim {
                return Err(ParseError::VariableOutOfRange {
                    offset: 0,
                    index: j + 1,
                    dim,
                }
                .into());
            }
        }
        Ok(Self { dim, root })
    }

    pub fn num(dim: usize, v: f64) -> Self {
        Self {
            dim,
            root: Node::Num(v),
        }
    }

    /// Variable `z_{j+1}`.
    pub fn var(dim: usize, j: usize) -> Self {
        assert!(j < dim);
        Self {
            dim,
            root: Node::Var(j),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn params(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.root.params_into(&mut v);
        v
    }

    pub fn call(self, f: Func) -> Self {
        Self {
            dim: self.dim,
            root: Node::Call(f, Box::new(self.root)),
        }
    }

    pub fn powi(self, k: i32) -> Self {
        Self {
            dim: self.dim,
            root: Node::Pow(Box::new(self.root), k),
        }
    }

    /// Replaces named parameters by their values.
    pub fn bind(&self, params: &Params) -> Result<Self> {
        for p in self.params() {
            if !params.contains_key(&p) {
                return Err(Error::UnboundParameter(p));
            }
        }
        Ok(Self {
            dim: self.dim,
            root: self.root.map(&|n| match n {
                Node::Param(p) => Some(Node::Num(params[p])),
                _ => None,
            }),
        })
    }

    /// Substitutes `z_j -> subs[j]`; the result lives in the dimension of `subs`.
    pub fn compose(&self, subs: &[Expr]) -> Result<Self> {
        if subs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: subs.len(),
            });
        }
        let dim = subs.first().map(|s| s.dim).unwrap_or(0);
        if subs.iter().any(|s| s.dim != dim) {
            return Err(Error::Invalid(
                "substituted expressions disagree on dimension".into(),
            ));
        }
        Ok(Self {
            dim,
            root: self.root.map(&|n| match n {
                Node::Var(j) => Some(subs[*j].root.clone()),
                _ => None,
            }),
        })
    }

    pub fn eval(&self, z: &[Complex64], params: &Params) -> Result<Complex64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        self.root.eval(z, params)
    }

    /// Evaluation of a parameter-free expression.
    pub fn eval0(&self, z: &[Complex64]) -> Result<Complex64> {
        self.eval(z, &Params::new())
    }
}

fn bin(a: Expr, b: Expr, f: fn(Box<Node>, Box<Node>) -> Node) -> Expr {
    assert_eq!(a.dim, b.dim, "expression dimensions differ");
    Expr {
        dim: a.dim,
        root: f(Box::new(a.root), Box::new(b.root)),
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        bin(self, rhs, Node::Add)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        bin(self, rhs, Node::Sub)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        bin(self, rhs, Node::Mul)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        bin(self, rhs, Node::Div)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            dim: self.dim,
            root: Node::Neg(Box::new(self.root)),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(x) if *x < 0.0 || (*x == 0.0 && x.is_sign_negative()) => {
                write!(f, "(-{:?})", -x)
            }
            Node::Num(x) => write!(f, "{x:?}"),
            Node::I => write!(f, "i"),
            Node::Var(j) => write!(f, "z{}", j + 1),
            Node::Param(p) => write!(f, "{p}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, k) => write!(f, "pow({a}, {k})"),
            Node::Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> std::result::Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (off, t) = lx.next()?;
            let end = t == Tok::End;
            out.push((off, t));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> std::result::Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((start, Tok::End));
        }
        let c = bytes[start];
        if c.is_ascii_digit() || c == b'.' {
            let mut p = start;
            while p < bytes.len() && (bytes[p].is_ascii_digit() || bytes[p] == b'.') {
                p += 1;
            }
            if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
                let mut q = p + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    p = q;
                }
            }
            let text = &self.src[start..p];
            self.pos = p;
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            return Ok((start, Tok::Num(v)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut p = start;
            while p < bytes.len() && (bytes[p].is_ascii_alphanumeric() || bytes[p] == b'_') {
                p += 1;
            }
            self.pos = p;
            return Ok((start, Tok::Ident(self.src[start..p].to_string())));
        }
        if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            return Ok((start, Tok::Sym(c as char)));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        })
    }
}

struct Parser<'p> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    dim: usize,
    params: &'p [String],
}

type PResult<T> = std::result::Result<T, ParseError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn offset(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> PResult<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<Node> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let k = self.integer()?;
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> PResult<i32> {
        let neg = if *self.peek() == Tok::Sym('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 64.0 => {
                self.bump();
                let k = v as i32;
                Ok(if neg { -k } else { k })
            }
            _ => self.syntax("expected an integer exponent (|k| <= 64)"),
        }
    }

    fn atom(&mut self) -> PResult<Node> {
        let off = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(off, name),
            Tok::End => Err(ParseError::Syntax {
                offset: off,
                message: "unexpected end of input".into(),
            }),
            Tok::Sym(c) => Err(ParseError::Syntax {
                offset: off,
                message: format!("unexpected `{c}`"),
            }),
        }
    }

    fn ident(&mut self, off: usize, name: String) -> PResult<Node> {
        if *self.peek() == Tok::Sym('(') {
            if name == "pow" {
                self.bump();
                let base = self.expr()?;
                self.expect(',')?;
                let k = self.integer()?;
                self.expect(')')?;
                return Ok(Node::Pow(Box::new(base), k));
            }
            if let Some(f) = Func::from_name(&name) {
                self.bump();
                let arg = self.expr()?;
                self.expect(')')?;
                return Ok(Node::Call(f, Box::new(arg)));
            }
            return Err(ParseError::UnknownIdentifier { offset: off, name });
        }
        if name == "i" {
            return Ok(Node::I);
        }
        if name == "pi" {
            return Ok(Node::Num(std::f64::consts::PI));
        }
        if let Some(idx) = name.strip_prefix('z') {
            if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
                let k: usize = idx.parse().map_err(|_| ParseError::UnknownIdentifier {
                    offset: off,
                    name: name.clone(),
                })?;
                if k == 0 || k > self.dim {
                    return Err(ParseError::VariableOutOfRange {
                        offset: off,
                        index: k,
                        dim: self.dim,
                    });
                }
                return Ok(Node::Var(k - 1));
            }
        }
        if self.params.contains(&name) {
            return Ok(Node::Param(name));
        }
        Err(ParseError::UnknownIdentifier { offset: off, name })
    }
}

/// Parses `source` as an expression in `n` complex variables without parameters.
pub fn parse(source: &str, n: usize) -> std::result::Result<Expr, ParseError> {
    parse_with_params(source, n, &[])
}

/// Parses `source`, accepting the listed names as real parameters.
pub fn parse_with_params(
    source: &str,
    n: usize,
    params: &[String],
) -> std::result::Result<Expr, ParseError> {
    let toks = Lexer::tokens(source)?;
    let mut p = Parser {
        toks,
        at: 0,
        dim: n,
        params,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(Expr { dim: n, root })
}

// ---------------------------------------------------------------------------
// Domains

/// A domain `{rho < 0}` in C^n together with the region of interest.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub name: String,
    pub n: usize,
    /// Defining function with all parameters bound.
    pub rho: Expr,
    pub params: Params,
    pub bbox: BBox,
    /// Additional real functions proposed as perturbations `psi` (domain-aware basis).
    pub psi_extras: Vec<Expr>,
}

impl DomainSpec {
    pub fn new(name: impl Into<String>, rho: Expr, params: Params, bbox: BBox) -> Result<Self> {
        let n = rho.dim();
        if n < 2 {
            return Err(Error::Invalid(format!(
                "complex dimension must be at least 2 (got {n})"
            )));
        }
        if bbox.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bbox.n(),
            });
        }
        let rho = rho.bind(&params)?;
        Ok(Self {
            name: name.into(),
            n,
            rho,
            params,
            bbox,
            psi_extras: Vec::new(),
        })
    }

    /// Real value of the defining function, rejecting non-real evaluations.
    pub fn rho_at(&self, z: &[Complex64]) -> Result<f64> {
        let v = self.rho.eval0(z)?;
        if v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
            return Err(Error::NotReal(v.im.abs()));
        }
        Ok(v.re)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealnessReport {
    pub max_imag: f64,
    pub evaluated: usize,
    /// Samples where evaluation failed (outside the domain of smoothness).
    pub skipped: usize,
}

impl RealnessReport {
    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag <= tol
    }
}

/// Evaluates `e` at `samples` quasi-random points of `bbox` and reports the worst imaginary part.
pub fn validate_real(
    e: &Expr,
    bbox: &BBox,
    params: &Params,
    samples: usize,
    seed: u64,
) -> RealnessReport {
    let mut report = RealnessReport {
        max_imag: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for u in Halton::new(2 * bbox.n(), seed).take(samples) {
        let z = from_real(&bbox.from_unit(&u));
        match e.eval(&z, params) {
            Ok(v) => {
                report.evaluated += 1;
                report.max_imag = report.max_imag.max(v.im.abs());
            }
            Err(_) => report.skipped += 1,
        }
    }
    report
}

/// Random expression generator used by property tests and the jet validation corpus.
pub struct RandomExprs {
    rng: ChaCha8Rng,
    dim: usize,
}

impl RandomExprs {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
        }
    }

    fn leaf(&mut self) -> Node {
        match self.rng.gen_range(0..4) {
            0 => Node::Num((self.rng.gen_range(1..16) as f64) / 8.0),
            1 => Node::I,
            _ => Node::Var(self.rng.gen_range(0..self.dim)),
        }
    }

    /// Smooth, well-conditioned random expression: bounded arguments to exp/sin/cos,
    /// and log/sqrt only of `1 + abs2(..)`.
    pub fn smooth(&mut self, depth: usize) -> Expr {
        let root = self.smooth_node(depth);
        Expr {
            dim: self.dim,
            root,
        }
    }

    fn smooth_node(&mut self, depth: usize) -> Node {
        if depth == 0 {
            return self.leaf();
        }
        let b = |n: Node| Box::new(n);
        match self.rng.gen_range(0..12) {
            0 => Node::Add(
                b(self.smooth_node(depth - 1)),
                b(self.smooth_node(depth - 1)),
            ),
            1 => Node::Sub(
                b(self.smooth_node(depth - 1)),
                b(self.smooth_node(depth - 1)),
            ),
            2 | 3 => Node::Mul(
                b(self.smooth_node(depth - 1)),
                b(self.smooth_node(depth - 1)),
            ),
            4 => Node::Call(Func::Conj, b(self.smooth_node(depth - 1))),
            5 => Node::Call(Func::Abs2, b(self.smooth_node(depth - 1))),
            6 => Node::Call(Func::Re, b(self.smooth_node(depth - 1))),
            7 => {
                let f = [Func::Exp, Func::Sin, Func::Cos][self.rng.gen_range(0..3)];
                let inner = Node::Call(Func::Im, b(self.smooth_node(depth - 1)));
                Node::Call(f, b(Node::Mul(b(Node::Num(0.5)), b(inner))))
            }
            8 => {
                let f = [Func::Log, Func::Sqrt][self.rng.gen_range(0..2)];
                let inner = Node::Call(Func::Abs2, b(self.smooth_node(depth - 1)));
                Node::Call(f, b(Node::Add(b(Node::Num(1.0)), b(inner))))
            }
            9 => Node::Div(
                b(self.smooth_node(depth - 1)),
                b(Node::Add(
                    b(Node::Num(2.0)),
                    b(Node::Call(Func::Abs2, b(self.smooth_node(depth - 1)))),
                )),
            ),
            10 => Node::Pow(b(self.smooth_node(depth - 1)), self.rng.gen_range(0..4)),
            _ => Node::Neg(b(self.smooth_node(depth - 1))),
        }
    }

    /// Real polynomial of total degree at most `degree` in the real coordinates with small
    /// dyadic coefficients, written through the complex grammar.
    pub fn real_polynomial(&mut self, degree: usize, terms: usize) -> Expr {
        let mut acc = Node::Num(0.0);
        for _ in 0..terms {
            let coef = (self.rng.gen_range(-8..=8) as f64) / 4.0;
            let mut t = Node::Num(coef);
            for _ in 0..self.rng.gen_range(0..=degree) {
                let j = self.rng.gen_range(0..self.dim);
                let f = if self.rng.gen_bool(0.5) {
                    Func::Re
                } else {
                    Func::Im
                };
                t = Node::Mul(Box::new(t), Box::new(Node::Call(f, Box::new(Node::Var(j)))));
            }
            acc = Node::Add(Box::new(acc), Box::new(t));
        }
        Expr {
            dim: self.dim,
            root: acc,
        }
    }

    /// Arbitrary grammar tree (no domain guarantees) for parser round-trips.
    pub fn any(&mut self, depth: usize) -> Expr {
        let root = self.any_node(depth);
        Expr {
            dim: self.dim,
            root,
        }
    }

    fn any_node(&mut self, depth: usize) -> Node {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return match self.rng.gen_range(0..4) {
                0 => Node::Num(self.rng.gen_range(0.0..100.0)),
                1 => Node::I,
                2 => Node::Param("beta".into()),
                _ => Node::Var(self.rng.gen_range(0..self.dim)),
            };
        }
        let b = |n: Node| Box::new(n);
        match self.rng.gen_range(0..7) {
            0 => Node::Add(b(self.any_node(depth - 1)), b(self.any_node(depth - 1))),
            1 => Node::Sub(b(self.any_node(depth - 1)), b(self.any_node(depth - 1))),
            2 => Node::Mul(b(self.any_node(depth - 1)), b(self.any_node(depth - 1))),
            3 => Node::Div(b(self.any_node(depth - 1)), b(self.any_node(depth - 1))),
            4 => Node::Neg(b(self.any_node(depth - 1))),
            5 => Node::Pow(b(self.any_node(depth - 1)), self.rng.gen_range(-3..6)),
            _ => {
                let f = Func::ALL[self.rng.gen_range(0..Func::ALL.len())];
                Node::Call(f, b(self.any_node(depth - 1)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_ball_and_ellipsoid() {
        let ball = parse("abs2(z1)+abs2(z2)-1", 2).unwrap();
        assert_eq!(
            ball.root,
            Node::Sub(
                Box::new(Node::Add(
                    Box::new(Node::Call(Func::Abs2, Box::new(Node::Var(0)))),
                    Box::new(Node::Call(Func::Abs2, Box::new(Node::Var(1)))),
                )),
                Box::new(Node::Num(1.0)),
            )
        );
        let ell = parse("abs2(z1)+pow(abs2(z2),2)-1", 2).unwrap();
        let v = ell
            .eval0(&[c(0.0, 0.0), c(0.5f64.powf(0.25), 0.0)])
            .unwrap();
        assert!((v.re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn variable_out_of_range() {
        let err = parse("abs2(z3)", 2).unwrap_err();
        assert!(matches!(
            err,
            ParseError::VariableOutOfRange {
                index: 3,
                dim: 2,
                offset: 5
            }
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(
            parse("abs2(z1) + * 2", 2),
            Err(ParseError::Syntax { offset: 11, .. })
        ));
        assert!(matches!(
            parse("foo(z1)", 2),
            Err(ParseError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse("beta*z1", 2),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(parse_with_params("beta*z1", 2, &["beta".into()]).is_ok());
    }

    #[test]
    fn ball_values() {
        let ball = parse("abs2(z1)+abs2(z2)-1", 2).unwrap();
        assert_eq!(
            ball.eval0(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
            c(0.0, 0.0)
        );
        assert_eq!(
            ball.eval0(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(),
            c(-1.0, 0.0)
        );
    }

    #[test]
    fn wirtinger_conventions() {
        let e = parse("re(z1) + 10*im(z1) + 100*abs2(z2) + conj(z2)", 2).unwrap();
        let v = e.eval0(&[c(1.0, 2.0), c(3.0, 4.0)]).unwrap();
        assert_eq!(v, c(1.0 + 20.0 + 2500.0 + 3.0, -4.0));
    }

    #[test]
    fn domain_errors() {
        let e = parse("log(re(z1))", 2).unwrap();
        assert!(matches!(
            e.eval0(&[c(-1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::Domain(_))
        ));
        let d = parse("1/re(z1)", 2).unwrap();
        assert_eq!(
            d.eval0(&[c(0.0, 1.0), c(0.0, 0.0)]),
            Err(Error::DivisionByZero)
        );
        let s = parse("sqrt(re(z2))", 2).unwrap();
        assert!(s.eval0(&[c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn unbound_parameter() {
        let e = parse_with_params("a*abs2(z1)", 2, &["a".into()]).unwrap();
        assert!(matches!(
            e.eval(&[c(1.0, 0.0), c(0.0, 0.0)], &Params::new()),
            Err(Error::UnboundParameter(_))
        ));
        let mut p = Params::new();
        p.insert("a".into(), 3.0);
        assert_eq!(
            e.bind(&p)
                .unwrap()
                .eval0(&[c(1.0, 0.0), c(0.0, 0.0)])
                .unwrap(),
            c(3.0, 0.0)
        );
    }

    #[test]
    fn power_sugar_and_precedence() {
        let a = parse("-z1^2 + 2*z2", 2).unwrap();
        let v = a.eval0(&[c(3.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(v, c(-7.0, 0.0));
        let b = parse("pow(z1, -2)", 2).unwrap();
        assert_eq!(b.eval0(&[c(2.0, 0.0), c(0.0, 0.0)]).unwrap(), c(0.25, 0.0));
    }

    #[test]
    fn compose_substitutes_variables() {
        let ball = parse("abs2(z1)+abs2(z2)-1", 2).unwrap();
        let f = [parse("2*z1", 2).unwrap(), parse("2*z2", 2).unwrap()];
        let pulled = ball.compose(&f).unwrap();
        let v = pulled.eval0(&[c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn validate_real_flags_identity() {
        let bbox = BBox::symmetric(2, 1.5);
        let ball = parse("abs2(z1)+abs2(z2)-1", 2).unwrap();
        let r = validate_real(&ball, &bbox, &Params::new(), 1000, 1);
        assert_eq!(r.max_imag, 0.0);
        assert_eq!(r.evaluated, 1000);
        let z = parse("z1", 2).unwrap();
        assert!(validate_real(&z, &bbox, &Params::new(), 1000, 1).max_imag > 0.0);
    }

    #[test]
    fn rejects_one_dimensional_domains() {
        let e = parse("abs2(z1)-1", 1).unwrap();
        assert!(DomainSpec::new("disc", e, Params::new(), BBox::symmetric(1, 2.0)).is_err());
    }
}
