//! Sparse multivariate polynomials with complex coefficients, plus a small
//! parser for the textual form used in scenario configs
//! (`"x^5 + z^15 + y^7*z + t*x*y^6"`, complex literals like `(1+2i)`).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    pub exps: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        Self::from_terms(nvars, vec![Term { coeff: c, exps: vec![0; nvars] }])
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Polynomial { nvars, terms: vec![Term { coeff: Complex64::new(1.0, 0.0), exps }] }
    }

    /// Builds a polynomial, merging duplicate monomials and dropping zeros.
    pub fn from_terms(nvars: usize, terms: Vec<Term>) -> Self {
        let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for t in terms {
            assert_eq!(t.exps.len(), nvars, "exponent vector length");
            *acc.entry(t.exps).or_insert(Complex64::new(0.0, 0.0)) += t.coeff;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(exps, coeff)| Term { coeff, exps })
            .collect();
        Polynomial { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum()).max().unwrap_or(0)
    }

    /// Lowest total degree among the monomials (order of vanishing at 0).
    pub fn min_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum()).min().unwrap_or(0)
    }

    pub fn max_exponent(&self) -> u32 {
        self.terms.iter().flat_map(|t| t.exps.iter().copied()).max().unwrap_or(0)
    }

    pub fn has_complex_coefficients(&self) -> bool {
        self.terms.iter().any(|t| t.coeff.im != 0.0)
    }

    /// Indices of variables that actually occur.
    pub fn used_variables(&self) -> Vec<usize> {
        (0..self.nvars)
            .filter(|&i| self.terms.iter().any(|t| t.exps[i] > 0))
            .collect()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(self.nvars, terms)
    }

    pub fn scale(&self, c: Complex64) -> Polynomial {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|t| Term { coeff: t.coeff * c, exps: t.exps.clone() })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push(Term { coeff: a.coeff * b.coeff, exps });
            }
        }
        Self::from_terms(self.nvars, terms)
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.nvars, Complex64::new(1.0, 0.0));
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Weighted degree if every monomial has the same weighted degree.
    pub fn weighted_degree(&self, weights: &[u32]) -> Option<u32> {
        assert_eq!(weights.len(), self.nvars);
        let mut deg = None;
        for t in &self.terms {
            let d: u32 = t.exps.iter().zip(weights).map(|(e, w)| e * w).sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => return None,
                _ => {}
            }
        }
        deg
    }

    /// Lowest-degree homogeneous part (defines the tangent cone of a hypersurface).
    pub fn initial_form(&self) -> Polynomial {
        let m = self.min_degree();
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|t| t.exps.iter().sum::<u32>() == m)
                .cloned()
                .collect(),
        }
    }

    /// Returns `q -> f(center + scale * q)`, expanded.
    pub fn affine_substitute(&self, center: &[Complex64], scale: f64) -> Polynomial {
        assert_eq!(center.len(), self.nvars);
        let n = self.nvars;
        let shifted: Vec<Polynomial> = (0..n)
            .map(|i| {
                Polynomial::variable(n, i)
                    .scale(Complex64::new(scale, 0.0))
                    .add(&Polynomial::constant(n, center[i]))
            })
            .collect();
        let mut out = Polynomial::zero(n);
        for t in &self.terms {
            let mut mono = Polynomial::constant(n, t.coeff);
            for (i, &e) in t.exps.iter().enumerate() {
                if e > 0 {
                    mono = mono.mul(&shifted[i].pow(e));
                }
            }
            out = out.add(&mono);
        }
        out
    }

    /// Divides by the largest coefficient modulus. Zero set is unchanged.
    pub fn normalized(&self) -> Polynomial {
        let m = self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return self.clone();
        }
        self.scale(Complex64::new(1.0 / m, 0.0))
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut m = t.coeff;
            for (zi, &e) in z.iter().zip(&t.exps) {
                if e > 0 {
                    m *= zi.powu(e);
                }
            }
            s += m;
        }
        s
    }

    /// Value and complex partial derivatives; `grad` must have length `nvars`.
    pub fn eval_with_grad(&self, z: &[Complex64], grad: &mut [Complex64]) -> Complex64 {
        debug_assert_eq!(grad.len(), self.nvars);
        let n = self.nvars;
        let maxe = self.max_exponent() as usize;
        // powers[i * (maxe + 1) + e] = z_i^e
        let stride = maxe + 1;
        let mut powers = vec![Complex64::new(1.0, 0.0); n * stride];
        for i in 0..n {
            for e in 1..stride {
                powers[i * stride + e] = powers[i * stride + e - 1] * z[i];
            }
        }
        for g in grad.iter_mut() {
            *g = Complex64::new(0.0, 0.0);
        }
        let mut value = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut m = t.coeff;
            for i in 0..n {
                m *= powers[i * stride + t.exps[i] as usize];
            }
            value += m;
            for j in 0..n {
                let e = t.exps[j];
                if e == 0 {
                    continue;
                }
                let mut d = t.coeff * (e as f64);
                for i in 0..n {
                    let ei = if i == j { e - 1 } else { t.exps[i] } as usize;
                    d *= powers[i * stride + ei];
                }
                grad[j] += d;
            }
        }
        value
    }

    /// Degree `d` in variable `var` if the only terms of that degree are the
    /// pure power `c x_var^d` (so the polynomial is monic up to `c` in `var`).
    pub fn pure_power_degree(&self, var: usize) -> Option<u32> {
        let d = self.terms.iter().map(|t| t.exps[var]).max()?;
        if d == 0 {
            return None;
        }
        let top: Vec<&Term> = self.terms.iter().filter(|t| t.exps[var] == d).collect();
        let pure = top.len() == 1 && top[0].exps.iter().enumerate().all(|(k, &e)| k == var || e == 0);
        pure.then_some(d)
    }

    /// Coefficients (constant term first) of the polynomial in `var` with
    /// every other variable fixed to `z`.
    pub fn univariate_coefficients(&self, var: usize, z: &[Complex64]) -> Vec<Complex64> {
        let d = self.terms.iter().map(|t| t.exps[var]).max().unwrap_or(0) as usize;
        let mut c = vec![Complex64::new(0.0, 0.0); d + 1];
        for t in &self.terms {
            let mut v = t.coeff;
            for (k, &e) in t.exps.iter().enumerate() {
                if k != var && e > 0 {
                    v *= z[k].powu(e);
                }
            }
            c[t.exps[var] as usize] += v;
        }
        c
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for t in &self.terms {
            let c = t.coeff;
            let monomial: Vec<String> = t
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { names[i].clone() } else { format!("{}^{}", names[i], e) })
                .collect();
            let monomial = monomial.join("*");
            let s = if c.im != 0.0 && monomial.is_empty() {
                format!("({}{:+}i)", c.re, c.im)
            } else if c.im != 0.0 {
                format!("({}{:+}i)*{}", c.re, c.im, monomial)
            } else if monomial.is_empty() {
                format!("{}", c.re)
            } else if c.re == 1.0 {
                monomial
            } else {
                format!("{}*{}", c.re, monomial)
            };
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{}", i)).collect();
        f.write_str(&self.display_with(&names))
    }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Complex64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            _ if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+4
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| GermError::Parse {
                    pos: start,
                    msg: format!("bad number `{}`", text),
                })?;
                let imaginary = i < bytes.len()
                    && bytes[i] == b'i'
                    && !(i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_alphanumeric());
                if imaginary {
                    i += 1;
                    out.push((start, Tok::Num(Complex64::new(0.0, v))));
                } else {
                    out.push((start, Tok::Num(Complex64::new(v, 0.0))));
                }
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(GermError::Parse { pos: start, msg: format!("unexpected character `{}`", c) })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a [String],
    params: &'a BTreeMap<String, f64>,
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(GermError::Parse { pos: self.offset(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?.scale(Complex64::new(-1.0, 0.0)));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                // juxtaposition: `2x`, `3(x+y)`, `x y`
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    acc = acc.mul(&self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.scale(Complex64::new(-1.0, 0.0)))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(c)) if c.im == 0.0 && c.re >= 0.0 && c.re.fract() == 0.0 => {
                    self.pos += 1;
                    Ok(base.pow(c.re as u32))
                }
                _ => self.err("exponent must be a nonnegative integer literal"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let n = self.vars.len();
        match self.peek().cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(Polynomial::constant(n, c))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Polynomial::variable(n, i))
                } else if name == "i" {
                    Ok(Polynomial::constant(n, Complex64::new(0.0, 1.0)))
                } else if let Some(v) = self.params.get(&name) {
                    Ok(Polynomial::constant(n, Complex64::new(*v, 0.0)))
                } else {
                    self.pos -= 1;
                    self.err(format!("unknown identifier `{}`", name))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => self.err("expected `)`"),
                }
            }
            _ => self.err("expected a number, variable or `(`"),
        }
    }
}

/// Parses `src` as a polynomial in `vars`; identifiers found in `params`
/// are substituted as real constants.
pub fn parse_polynomial(src: &str, vars: &[String], params: &BTreeMap<String, f64>) -> Result<Polynomial> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(GermError::Parse { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0, vars, params, len: src.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// All complex roots of `sum c_j x^j` (leading coefficient nonzero), by
/// Aberth iteration followed by Newton polishing.
pub fn complex_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d];
    let a: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let horner = |x: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in a.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };
    let bound = 1.0 + a[..d].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / d as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let (p, dp) = horner(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..d {
                if j != i {
                    s += Complex64::new(1.0, 0.0) / (z[i] - z[j]);
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(*r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if step.is_finite() && step.norm() < 1e-3 * (1.0 + r.norm()) {
                *r -= step;
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_quintic() {
        // x^5 = 32 has roots 2 e^{2 pi i k / 5}
        let mut c = vec![Complex64::new(0.0, 0.0); 6];
        c[0] = Complex64::new(-32.0, 0.0);
        c[5] = Complex64::new(1.0, 0.0);
        let roots = complex_roots(&c);
        assert_eq!(roots.len(), 5);
        for r in &roots {
            assert!((r.norm() - 2.0).abs() < 1e-12);
            assert!((r.powu(5) - Complex64::new(32.0, 0.0)).norm() < 1e-9);
        }
        // double root x^2 - 2x + 1
        let roots = complex_roots(&[Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(1.0, 0.0)]);
        for r in roots {
            assert!((r - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn univariate_restriction() {
        let vars: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let p = parse_polynomial("x^5+z^15+y^7*z+t*x*y^6", &vars, &[("t".to_string(), 1.0)].into_iter().collect()).unwrap();
        assert_eq!(p.pure_power_degree(0), Some(5));
        assert_eq!(p.pure_power_degree(1), None);
        let one = Complex64::new(1.0, 0.0);
        let c = p.univariate_coefficients(0, &[one, one, one]);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], Complex64::new(2.0, 0.0));
        assert_eq!(c[1], one);
        assert_eq!(c[5], one);
    }

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_and_evaluates_a1() {
        let p = parse_polynomial("x^2+y^2+z^2", &vars(&["x", "y", "z"]), &BTreeMap::new()).unwrap();
        assert_eq!(p.degree(), 2);
        let v = p.eval(&[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn family_parameter_substitution() {
        let mut params = BTreeMap::new();
        params.insert("t".to_string(), 1.0);
        let p = parse_polynomial("x^5+z^15+y^7*z+t*x*y^6", &vars(&["x", "y", "z"]), &params).unwrap();
        assert_eq!(p.terms().len(), 4);
        params.insert("t".to_string(), 0.0);
        let p0 = parse_polynomial("x^5+z^15+y^7*z+t*x*y^6", &vars(&["x", "y", "z"]), &params).unwrap();
        assert_eq!(p0.terms().len(), 3);
        assert_eq!(p0.weighted_degree(&[3, 2, 1]), Some(15));
    }

    #[test]
    fn complex_literals_and_products() {
        let v = vars(&["x", "y"]);
        let p = parse_polynomial("(1+2i)*x - 3i y + 2(x+y)^2", &v, &BTreeMap::new()).unwrap();
        let z = [c(0.5, -1.0), c(2.0, 0.25)];
        let expect = c(1.0, 2.0) * z[0] - c(0.0, 3.0) * z[1] + 2.0 * (z[0] + z[1]) * (z[0] + z[1]);
        assert!((p.eval(&z) - expect).norm() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_position() {
        let v = vars(&["x"]);
        match parse_polynomial("x + q", &v, &BTreeMap::new()) {
            Err(GermError::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {:?}", other),
        }
        assert!(parse_polynomial("x^(2)", &v, &BTreeMap::new()).is_err());
        assert!(parse_polynomial("", &v, &BTreeMap::new()).is_err());
        assert!(parse_polynomial("(x+1", &v, &BTreeMap::new()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let v = vars(&["x", "y", "z"]);
        let p = parse_polynomial("x^5+z^15+y^7*z+x*y^6", &v, &BTreeMap::new()).unwrap();
        let z = [c(0.3, 0.2), c(-0.4, 0.5), c(0.6, -0.1)];
        let mut g = vec![c(0.0, 0.0); 3];
        let f0 = p.eval_with_grad(&z, &mut g);
        assert!((f0 - p.eval(&z)).norm() < 1e-14);
        let h = 1e-6;
        for j in 0..3 {
            let mut zp = z;
            zp[j] += h;
            let mut zm = z;
            zm[j] -= h;
            let fd = (p.eval(&zp) - p.eval(&zm)) / (2.0 * h);
            assert!((fd - g[j]).norm() < 1e-7, "partial {}: {} vs {}", j, fd, g[j]);
        }
    }

    #[test]
    fn affine_substitution_rescales() {
        let v = vars(&["x", "y", "z"]);
        let p = parse_polynomial("x^2+y^2+z^3", &v, &BTreeMap::new()).unwrap();
        let q = p.affine_substitute(&[c(0.0, 0.0); 3], 0.1).normalized();
        // x^2 + y^2 + 0.1 z^3
        let z = [c(0.2, 0.1), c(-0.3, 0.4), c(0.7, 0.2)];
        let expect = z[0] * z[0] + z[1] * z[1] + 0.1 * z[2].powu(3);
        assert!((q.eval(&z) - expect).norm() < 1e-12);
        let shifted = p.affine_substitute(&[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)], 2.0);
        let w = [c(1.0 + 2.0 * z[0].re, 2.0 * z[0].im), c(2.0 * z[1].re, 1.0 + 2.0 * z[1].im), 2.0 * z[2]];
        assert!((shifted.eval(&z) - p.eval(&w)).norm() < 1e-10);
    }

    #[test]
    fn initial_form_of_a2() {
        let v = vars(&["x", "y", "z"]);
        let p = parse_polynomial("x^2+y^2+z^3", &v, &BTreeMap::new()).unwrap();
        let f = p.initial_form();
        assert_eq!(f.terms().len(), 2);
        assert_eq!(f.min_degree(), 2);
        assert_eq!(f.degree(), 2);
    }
}
