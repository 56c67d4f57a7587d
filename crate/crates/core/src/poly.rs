//! Univariate and bivariate polynomials over `F_q`, with root finding.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::ffield::{self, make_field, FieldElement, Field};

/// Root finding switches from a full scan to gcd-based splitting above this
/// field size.
pub const ROOT_SCAN_LIMIT: u64 = 1 << 8;

/// Dense polynomials over the prime field, as plain `u64` vectors
/// (low-degree-first). Used before a field context exists.
pub(crate) mod modp {
    use crate::ffield::inv_mod;

    pub fn trim(a: &mut Vec<u64>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    fn deg(a: &[u64]) -> Option<usize> {
        a.iter().rposition(|&c| c != 0)
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut out: Vec<u64> = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(&mut out);
        out
    }

    /// Quotient and remainder; `m` must be nonzero.
    pub fn divrem(a: &[u64], m: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let dm = deg(m).expect("division by the zero polynomial");
        let inv = inv_mod(m[dm], p);
        let mut r = a.to_vec();
        trim(&mut r);
        if r.len() <= dm {
            return (Vec::new(), r);
        }
        let mut q = vec![0u64; r.len() - dm];
        while let Some(dr) = deg(&r) {
            if dr < dm {
                break;
            }
            let c = r[dr] * inv % p;
            q[dr - dm] = c;
            for (j, &mj) in m[..=dm].iter().enumerate() {
                let idx = dr - dm + j;
                r[idx] = (r[idx] + p - c * mj % p) % p;
            }
            trim(&mut r);
        }
        trim(&mut q);
        (q, r)
    }

    pub fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        divrem(a, m, p).1
    }

    pub fn mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        rem(&mul(a, b, p), m, p)
    }

    pub fn powmod(a: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
        let mut base = rem(a, m, p);
        let mut acc = rem(&[1], m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &base, m, p);
            }
            e >>= 1;
            if e > 0 {
                base = mulmod(&base, &base, m, p);
            }
        }
        acc
    }

    /// Monic gcd; `gcd(0, 0)` is empty.
    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        if let Some(&lead) = a.last() {
            let inv = inv_mod(lead, p);
            for c in a.iter_mut() {
                *c = *c * inv % p;
            }
        }
        a
    }

    /// Inverse of `a` modulo `m`, when they are coprime.
    pub fn inverse_mod(a: &[u64], m: &[u64], p: u64) -> Option<Vec<u64>> {
        let (mut r0, mut r1) = (m.to_vec(), rem(a, m, p));
        let (mut s0, mut s1): (Vec<u64>, Vec<u64>) = (Vec::new(), vec![1]);
        trim(&mut r0);
        while !r1.is_empty() {
            let (q, r) = divrem(&r0, &r1, p);
            let s = sub(&s0, &mul(&q, &s1, p), p);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        if r0.len() != 1 {
            return None;
        }
        let inv = inv_mod(r0[0], p);
        Some(s0.into_iter().map(|c| c * inv % p).collect())
    }

    /// Rabin's test for a monic polynomial of degree `k >= 1`.
    pub fn is_irreducible(f: &[u64], p: u64) -> bool {
        let k = f.len() - 1;
        if k == 1 {
            return true;
        }
        if f[0] == 0 {
            return false;
        }
        let x = vec![0, 1];
        let mut h = x.clone();
        for i in 1..=k {
            h = powmod(&h, p, f, p);
            if 2 * i <= k {
                let g = gcd(&sub(&h, &x, p), f, p);
                if g.len() > 1 {
                    return false;
                }
            }
        }
        h == x
    }
}

/// The canonical modulus of `F_{p^k}`, low-degree-first and monic.
///
/// Candidates are scanned with `a_0` as the most significant key, then
/// `a_1`, and so on; the first irreducible one wins. Degree one gives `t`.
pub fn irreducible_modulus(p: u64, k: usize) -> Vec<u64> {
    if k == 1 {
        return vec![0, 1];
    }
    let mut digits = vec![0u64; k];
    digits[0] = 1;
    loop {
        let mut f = digits.clone();
        f.push(1);
        if modp::is_irreducible(&f, p) {
            return f;
        }
        // Odometer with the last coefficient as the fastest digit.
        let mut i = k - 1;
        loop {
            digits[i] += 1;
            if digits[i] < p {
                break;
            }
            digits[i] = 0;
            i -= 1;
        }
    }
}

/// Dense univariate polynomial over a field context.
#[derive(Clone, PartialEq, Eq)]
pub struct UniPoly {
    ctx: Field,
    c: Vec<FieldElement>,
}

/// Operations exposed by [`uni_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Mul,
    Mod,
    Gcd,
}

pub fn uni_arith(a: &UniPoly, b: &UniPoly, op: PolyOp) -> Result<UniPoly> {
    if !a.ctx.same_field(&b.ctx) {
        return Err(Error::CtxMismatch {
            p1: a.ctx.p(),
            k1: a.ctx.k(),
            p2: b.ctx.p(),
            k2: b.ctx.k(),
        });
    }
    match op {
        PolyOp::Add => Ok(a.add(b)),
        PolyOp::Mul => Ok(a.mul(b)),
        PolyOp::Mod => a.rem(b),
        PolyOp::Gcd => Ok(a.gcd(b)),
    }
}

impl UniPoly {
    pub fn new(ctx: &Field, coeffs: Vec<FieldElement>) -> Self {
        let mut p = UniPoly {
            ctx: ctx.clone(),
            c: coeffs,
        };
        p.normalize();
        p
    }

    pub fn from_u64s(ctx: &Field, coeffs: &[u64]) -> Self {
        Self::new(
            ctx,
            coeffs.iter().map(|&c| FieldElement::from_u64(ctx, c)).collect(),
        )
    }

    pub fn zero(ctx: &Field) -> Self {
        UniPoly {
            ctx: ctx.clone(),
            c: Vec::new(),
        }
    }

    pub fn constant(c: FieldElement) -> Self {
        let ctx = c.ctx().clone();
        Self::new(&ctx, vec![c])
    }

    /// The monic linear polynomial `y - r`.
    pub fn linear(r: &FieldElement) -> Self {
        let ctx = r.ctx().clone();
        Self::new(&ctx, vec![-r, FieldElement::one(&ctx)])
    }

    pub fn x(ctx: &Field) -> Self {
        Self::new(ctx, vec![FieldElement::zero(ctx), FieldElement::one(ctx)])
    }

    /// `prod (y - r)` over the given roots.
    pub fn from_roots(ctx: &Field, roots: &[FieldElement]) -> Self {
        roots
            .iter()
            .fold(Self::constant(FieldElement::one(ctx)), |acc, r| {
                acc.mul(&Self::linear(r))
            })
    }

    fn normalize(&mut self) {
        while self.c.last().is_some_and(|c| c.is_zero()) {
            self.c.pop();
        }
    }

    pub fn ctx(&self) -> &Field {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.c
            .get(i)
            .cloned()
            .unwrap_or_else(|| FieldElement::zero(&self.ctx))
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.c.len() <= 1
    }

    pub fn lead(&self) -> Option<&FieldElement> {
        self.c.last()
    }

    pub fn monic(&self) -> Self {
        match self.lead() {
            None => self.clone(),
            Some(l) if l.is_one() => self.clone(),
            Some(l) => self.scale(&l.inv().expect("nonzero lead")),
        }
    }

    pub fn scale(&self, s: &FieldElement) -> Self {
        Self::new(&self.ctx, self.c.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        Self::new(&self.ctx, (0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        Self::new(&self.ctx, (0..n).map(|i| &self.coeff(i) - &o.coeff(i)).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.ctx, self.c.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(&self.ctx);
        }
        let mut out = vec![FieldElement::zero(&self.ctx); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(&self.ctx, out)
    }

    pub fn divrem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or(Error::ZeroModulus)?;
        let inv = d.c[dd].inv()?;
        let mut r = self.c.clone();
        if r.len() <= dd {
            return Ok((Self::zero(&self.ctx), self.clone()));
        }
        let mut q = vec![FieldElement::zero(&self.ctx); r.len() - dd];
        for top in (dd..r.len()).rev() {
            if r[top].is_zero() {
                continue;
            }
            let c = &r[top] * &inv;
            for (j, dj) in d.c.iter().enumerate() {
                let idx = top - dd + j;
                r[idx] = &r[idx] - &(&c * dj);
            }
            q[top - dd] = c;
        }
        r.truncate(dd);
        Ok((Self::new(&self.ctx, q), Self::new(&self.ctx, r)))
    }

    pub fn rem(&self, d: &Self) -> Result<Self> {
        Ok(self.divrem(d)?.1)
    }

    /// Exact quotient; panics if `d` does not divide `self`.
    fn div_exact(&self, d: &Self) -> Self {
        let (q, r) = self.divrem(d).expect("nonzero divisor");
        debug_assert!(r.is_zero(), "inexact division");
        q
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            &self.ctx,
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &FieldElement::from_u64(&self.ctx, i as u64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &FieldElement) -> FieldElement {
        let mut acc = FieldElement::zero(&self.ctx);
        for c in self.c.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Division by `y - r`: quotient and the value at `r`.
    fn synthetic_div(&self, r: &FieldElement) -> (Self, FieldElement) {
        if self.is_zero() {
            return (self.clone(), FieldElement::zero(&self.ctx));
        }
        let n = self.c.len();
        let mut q = vec![FieldElement::zero(&self.ctx); n - 1];
        let mut acc = FieldElement::zero(&self.ctx);
        for i in (0..n).rev() {
            acc = &(&acc * r) + &self.c[i];
            if i > 0 {
                q[i - 1] = acc.clone();
            }
        }
        (Self::new(&self.ctx, q), acc)
    }

    /// Multiplicity of `r` as a root, by repeated exact division.
    pub fn multiplicity(&self, r: &FieldElement) -> usize {
        let mut f = self.clone();
        let mut m = 0;
        while !f.is_zero() {
            let (q, v) = f.synthetic_div(r);
            if !v.is_zero() {
                break;
            }
            m += 1;
            f = q;
        }
        m
    }

    pub fn mulmod(&self, o: &Self, m: &Self) -> Self {
        self.mul(o).rem(m).expect("nonzero modulus")
    }

    pub fn powmod(&self, mut e: u64, m: &Self) -> Self {
        let mut base = self.rem(m).expect("nonzero modulus");
        let mut acc = Self::constant(FieldElement::one(&self.ctx))
            .rem(m)
            .expect("nonzero modulus");
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mulmod(&base, m);
            }
            e >>= 1;
            if e > 0 {
                base = base.mulmod(&base, m);
            }
        }
        acc
    }

    /// `self^Q mod m` where `Q` is the field order, by `k` successive
    /// `p`-th powers.
    fn pow_q(&self, m: &Self) -> Self {
        let frob = PthPower::new(m);
        (0..self.ctx.k()).fold(self.rem(m).expect("nonzero modulus"), |h, _| frob.apply(&h))
    }

    pub fn is_squarefree(&self) -> Result<bool> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        Ok(self.gcd(&self.derivative()).is_constant())
    }

    /// Every root in the ambient field with its multiplicity, sorted by the
    /// canonical element order.
    pub fn roots(&self) -> Result<Vec<(FieldElement, usize)>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut out: Vec<(FieldElement, usize)> = self
            .distinct_roots()?
            .into_iter()
            .map(|r| {
                let m = self.multiplicity(&r);
                (r, m)
            })
            .collect();
        out.sort();
        Ok(out)
    }

    /// Roots by evaluating at every field element; refuses fields above the
    /// enumeration bound.
    pub fn roots_exhaustive(&self) -> Result<Vec<(FieldElement, usize)>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut out = Vec::new();
        for a in ffield::enumerate(&self.ctx)? {
            if self.eval(&a).is_zero() {
                let m = self.multiplicity(&a);
                out.push((a, m));
            }
        }
        Ok(out)
    }

    /// Distinct roots without multiplicities, in canonical order.
    pub fn distinct_roots(&self) -> Result<Vec<FieldElement>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.is_constant() {
            return Ok(Vec::new());
        }
        if self.degree() == Some(1) {
            let r = -(&self.c[0] * &self.c[1].inv()?);
            return Ok(vec![r]);
        }
        if matches!(self.ctx.order(), Some(q) if q <= ROOT_SCAN_LIMIT) {
            return Ok(ffield::enumerate(&self.ctx)?
                .filter(|a| self.eval(a).is_zero())
                .collect());
        }
        let f = self.monic();
        let x = Self::x(&self.ctx);
        let linear_part = f.gcd(&x.pow_q(&f).sub(&x));
        let mut out = Vec::new();
        split_linear(&linear_part, &mut out);
        out.sort();
        Ok(out)
    }

    /// Sorted distinct degrees of the irreducible factors.
    pub fn factor_degrees(&self) -> Result<Vec<usize>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let x = Self::x(&self.ctx);
        let mut g = self.monic();
        let mut h = x.clone();
        let mut degrees = Vec::new();
        let mut i = 0;
        while let Some(dg) = g.degree().filter(|&d| d > 0) {
            i += 1;
            if 2 * i > dg {
                // Every factor of degree below i is gone, so g is irreducible.
                degrees.push(dg);
                break;
            }
            h = h.rem(&g).expect("nonzero").pow_q(&g);
            let d = g.gcd(&h.sub(&x));
            if d.degree().unwrap_or(0) > 0 {
                degrees.push(i);
                loop {
                    let c = g.gcd(&d);
                    if c.is_constant() {
                        break;
                    }
                    g = g.div_exact(&c);
                }
            }
        }
        Ok(degrees)
    }

    /// Smallest `s` such that the polynomial splits over the degree-`s`
    /// extension of the ambient field.
    pub fn splitting_degree(&self) -> Result<usize> {
        Ok(self.factor_degrees()?.into_iter().fold(1, lcm))
    }

    /// Coefficients mapped into an extension field.
    pub fn embed_into(&self, target: &Field) -> Result<Self> {
        let c = self
            .c
            .iter()
            .map(|a| ffield::embed(a, target))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(target, c))
    }
}

/// `h -> h^p mod m`, using `h^p = sum sigma(h_i) (x^p)^i` with `sigma` the
/// Frobenius on coefficients.
struct PthPower<'a> {
    modulus: &'a UniPoly,
    /// `x^(p i) mod m` for `i < deg m`.
    powers: Vec<UniPoly>,
}

impl<'a> PthPower<'a> {
    fn new(modulus: &'a UniPoly) -> Self {
        let n = modulus.degree().unwrap_or(0);
        let ctx = &modulus.ctx;
        let xp = UniPoly::x(ctx).powmod(ctx.p(), modulus);
        let mut powers = Vec::with_capacity(n);
        let mut cur = UniPoly::constant(FieldElement::one(ctx)).rem(modulus).expect("nonzero modulus");
        for _ in 0..n {
            powers.push(cur.clone());
            cur = cur.mulmod(&xp, modulus);
        }
        PthPower { modulus, powers }
    }

    fn apply(&self, h: &UniPoly) -> UniPoly {
        let h = h.rem(self.modulus).expect("nonzero modulus");
        let mut acc = UniPoly::zero(&h.ctx);
        for (c, pw) in h.c.iter().zip(&self.powers) {
            if !c.is_zero() {
                acc = acc.add(&pw.scale(&c.frobenius(1)));
            }
        }
        acc
    }
}

/// Splits a monic product of distinct linear factors into its roots.
///
/// Trial elements run through the canonical enumeration, so the output does
/// not depend on any random source.
fn split_linear(f: &UniPoly, out: &mut Vec<FieldElement>) {
    match f.degree() {
        None | Some(0) => return,
        Some(1) => {
            out.push(-&f.c[0]);
            return;
        }
        _ => {}
    }
    let ctx = f.ctx.clone();
    let p = ctx.p();
    let x = UniPoly::x(&ctx);
    let one = UniPoly::constant(FieldElement::one(&ctx));
    let df = f.degree().unwrap();
    // Shifts from the prime field cannot separate Frobenius-conjugate roots,
    // so in a proper extension the trials run through t + i, t + i + ...
    // which all generate the field.
    let first = if ctx.k() == 1 { 1 } else { p };
    for index in first.. {
        let delta = FieldElement::from_index(&ctx, index);
        let g = if p == 2 {
            // Trace of delta * y.
            let a = x.scale(&delta).rem(f).expect("nonzero");
            let mut term = a.clone();
            let mut trace = a;
            for _ in 1..ctx.k() {
                term = term.mulmod(&term, f);
                trace = trace.add(&term);
            }
            f.gcd(&trace)
        } else {
            // (y + delta)^((Q-1)/2) = (norm of y + delta)^((p-1)/2).
            let a = x.add(&UniPoly::constant(delta)).rem(f).expect("nonzero");
            let frob = PthPower::new(f);
            let mut conj = a.clone();
            let mut norm = a;
            for _ in 1..ctx.k() {
                conj = frob.apply(&conj);
                norm = norm.mulmod(&conj, f);
            }
            f.gcd(&norm.powmod((p - 1) / 2, f).sub(&one))
        };
        let dg = g.degree().unwrap_or(0);
        if dg > 0 && dg < df {
            let rest = f.div_exact(&g);
            split_linear(&g, out);
            split_linear(&rest.monic(), out);
            return;
        }
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

impl fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.c.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*y")?,
                _ => write!(f, "({c})*y^{i}")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bivariate polynomials
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
}

/// Sparse bivariate polynomial: `(i, j) -> c` means `c * x^i * y^j`.
#[derive(Clone, PartialEq, Eq)]
pub struct BiPoly {
    ctx: Field,
    terms: BTreeMap<(usize, usize), FieldElement>,
    deg_x: usize,
    deg_y: usize,
}

/// Result of substituting one variable.
#[derive(Debug, Clone)]
pub struct Specialization {
    pub poly: UniPoly,
    /// Degree lost relative to the remaining variable's full degree; this many
    /// fibre points sit at infinity.
    pub drop: usize,
}

impl BiPoly {
    /// Builds from terms, summing repeated exponents and dropping zeros.
    pub fn new(ctx: &Field, terms: impl IntoIterator<Item = ((usize, usize), FieldElement)>) -> Self {
        let mut map: BTreeMap<(usize, usize), FieldElement> = BTreeMap::new();
        for (e, c) in terms {
            let slot = map.entry(e).or_insert_with(|| FieldElement::zero(ctx));
            *slot = &*slot + &c;
        }
        map.retain(|_, c| !c.is_zero());
        let deg_x = map.keys().map(|&(i, _)| i).max().unwrap_or(0);
        let deg_y = map.keys().map(|&(_, j)| j).max().unwrap_or(0);
        BiPoly {
            ctx: ctx.clone(),
            terms: map,
            deg_x,
            deg_y,
        }
    }

    /// Convenience constructor from signed integer coefficients.
    pub fn from_ints(ctx: &Field, terms: &[(usize, usize, i64)]) -> Self {
        Self::new(
            ctx,
            terms
                .iter()
                .map(|&(i, j, c)| ((i, j), FieldElement::from_i64(ctx, c))),
        )
    }

    pub fn ctx(&self) -> &Field {
        &self.ctx
    }

    pub fn deg_x(&self) -> usize {
        self.deg_x
    }

    pub fn deg_y(&self) -> usize {
        self.deg_y
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &FieldElement)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: usize, j: usize) -> FieldElement {
        self.terms
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| FieldElement::zero(&self.ctx))
    }

    pub fn eval(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let xp = powers(x, self.deg_x);
        let yp = powers(y, self.deg_y);
        self.terms
            .iter()
            .fold(FieldElement::zero(x.ctx()), |acc, (&(i, j), c)| {
                let c = self.lift(c, x.ctx());
                &acc + &(&c * &(&xp[i] * &yp[j]))
            })
    }

    fn lift(&self, c: &FieldElement, target: &Field) -> FieldElement {
        if c.ctx().same_field(target) {
            c.clone()
        } else {
            ffield::embed(c, target).expect("value field extends the coefficient field")
        }
    }

    /// Substitutes `var = value`; `value` may live in an extension of the
    /// coefficient field, and the result is over the value's field.
    pub fn specialize(&self, var: Var, value: &FieldElement) -> Specialization {
        let target = value.ctx().clone();
        let full = match var {
            Var::X => self.deg_y,
            Var::Y => self.deg_x,
        };
        let pw = powers(
            value,
            match var {
                Var::X => self.deg_x,
                Var::Y => self.deg_y,
            },
        );
        let mut c = vec![FieldElement::zero(&target); full + 1];
        for (&(i, j), a) in &self.terms {
            let (sub_exp, keep_exp) = match var {
                Var::X => (i, j),
                Var::Y => (j, i),
            };
            let term = &self.lift(a, &target) * &pw[sub_exp];
            c[keep_exp] = &c[keep_exp] + &term;
        }
        let poly = UniPoly::new(&target, c);
        let drop = full - poly.degree().unwrap_or(0).min(full);
        let drop = if poly.is_zero() { full } else { drop };
        Specialization { poly, drop }
    }

    /// Specialization at `var = infinity` in the chart `u = 1/var`, over
    /// `target`.
    pub fn specialize_infinity(&self, var: Var, target: &Field) -> Specialization {
        let (top, full) = match var {
            Var::X => (self.deg_x, self.deg_y),
            Var::Y => (self.deg_y, self.deg_x),
        };
        let mut c = vec![FieldElement::zero(target); full + 1];
        for (&(i, j), a) in &self.terms {
            let (sub_exp, keep_exp) = match var {
                Var::X => (i, j),
                Var::Y => (j, i),
            };
            if sub_exp == top {
                c[keep_exp] = &c[keep_exp] + &self.lift(a, target);
            }
        }
        let poly = UniPoly::new(target, c);
        let drop = full - poly.degree().unwrap_or(0);
        Specialization { poly, drop }
    }

    /// `F(y, x)`.
    pub fn transpose(&self) -> Self {
        Self::new(
            &self.ctx,
            self.terms.iter().map(|(&(i, j), c)| ((j, i), c.clone())),
        )
    }

    pub fn partial(&self, var: Var) -> Self {
        Self::new(
            &self.ctx,
            self.terms.iter().filter_map(|(&(i, j), c)| {
                let (n, e) = match var {
                    Var::X => (i, (i.checked_sub(1)?, j)),
                    Var::Y => (j, (i, j.checked_sub(1)?)),
                };
                Some((e, c * &FieldElement::from_u64(&self.ctx, n as u64)))
            }),
        )
    }

    pub fn scale(&self, s: &FieldElement) -> Self {
        Self::new(&self.ctx, self.terms.iter().map(|(&e, c)| (e, c * s)))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(
            &self.ctx,
            self.terms
                .iter()
                .map(|(&e, c)| (e, c.clone()))
                .chain(o.terms.iter().map(|(&e, c)| (e, -c))),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Vec::new();
        for (&(i, j), a) in &self.terms {
            for (&(k, l), b) in &o.terms {
                out.push(((i + k, j + l), a * b));
            }
        }
        Self::new(&self.ctx, out)
    }

    /// Coefficients mapped into an extension field.
    pub fn embed_into(&self, target: &Field) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(&e, c)| Ok((e, ffield::embed(c, target)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(target, terms))
    }

    /// Squarefree as an element of `F_q[x, y]`: `gcd(F, F_x, F_y)` is a unit.
    pub fn is_squarefree(&self) -> Result<bool> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let f = YPoly::from_bipoly(self);
        let g = f.gcd(&YPoly::from_bipoly(&self.partial(Var::Y)));
        let g = g.gcd(&YPoly::from_bipoly(&self.partial(Var::X)));
        Ok(g.is_unit())
    }

    /// Gcd of the coefficients when viewed as a polynomial in `var` over the
    /// polynomial ring in the other variable; monic in that variable.
    pub fn content(&self, var: Var) -> UniPoly {
        let view = match var {
            Var::Y => self.clone(),
            Var::X => self.transpose(),
        };
        YPoly::from_bipoly(&view).content()
    }

    /// Text form of the bipoly file format.
    pub fn to_file_string(&self) -> String {
        let mut s = format!(
            "{} {} {} {}\n",
            self.ctx.p(),
            self.ctx.k(),
            self.deg_x,
            self.deg_y
        );
        for (&(i, j), c) in &self.terms {
            s.push_str(&format!("{i} {j} {c}\n"));
        }
        s
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(i, j), c)| format!("({c})x^{i}y^{j}"))
            .collect();
        write!(f, "{}", if parts.is_empty() { "0".into() } else { parts.join(" + ") })
    }
}

fn powers(x: &FieldElement, n: usize) -> Vec<FieldElement> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(FieldElement::one(x.ctx()));
    for i in 0..n {
        out.push(&out[i] * x);
    }
    out
}

/// Raw contents of a bipoly file before reduction into a field.
#[derive(Debug, Clone)]
pub struct BiPolyFile {
    /// `0` marks integer coefficients, reduced modulo a runtime prime.
    pub p: u64,
    pub k: usize,
    pub deg_x: usize,
    pub deg_y: usize,
    pub terms: Vec<(usize, usize, String)>,
    /// Lines starting with `#`, without the marker.
    pub comments: Vec<String>,
}

impl BiPolyFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut comments = Vec::new();
        let mut lines = text.lines().enumerate().filter_map(|(n, l)| {
            let l = l.trim();
            if let Some(c) = l.strip_prefix('#') {
                comments.push(c.trim().to_string());
                None
            } else if l.is_empty() {
                None
            } else {
                Some((n + 1, l))
            }
        });
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty bipoly file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(Error::Parse(format!("header needs `p k dX dY`, got {header:?}")));
        }
        let num = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad header field {s:?}")))
        };
        let (p, k, deg_x, deg_y) = (num(h[0])?, num(h[1])? as usize, num(h[2])? as usize, num(h[3])? as usize);
        let mut terms = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("line {n}: expected `i j c`")));
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {n}: bad exponent")))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {n}: bad exponent")))?;
            if !seen.insert((i, j)) {
                return Err(Error::Parse(format!("line {n}: duplicate monomial ({i},{j})")));
            }
            terms.push((i, j, parts[2].to_string()));
        }
        Ok(BiPolyFile {
            p,
            k,
            deg_x,
            deg_y,
            terms,
            comments,
        })
    }

    /// Materializes over the file's own field, or over `F_p` for integer
    /// files (`runtime_p` then required).
    pub fn into_bipoly(&self, runtime_p: Option<u64>) -> Result<BiPoly> {
        let ctx = match (self.p, runtime_p) {
            (0, Some(p)) => make_field(p, 1)?,
            (0, None) => {
                return Err(Error::Parse(
                    "integer-coefficient polynomial needs a prime".into(),
                ))
            }
            (p, Some(rp)) if rp != p => {
                return Err(Error::CtxMismatch {
                    p1: rp,
                    k1: 1,
                    p2: p,
                    k2: self.k,
                })
            }
            (p, _) => make_field(p, self.k)?,
        };
        let terms = self
            .terms
            .iter()
            .map(|(i, j, c)| Ok(((*i, *j), ffield::parse_in(&ctx, c)?)))
            .collect::<Result<Vec<_>>>()?;
        let f = BiPoly::new(&ctx, terms);
        if f.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if f.deg_x != self.deg_x || f.deg_y != self.deg_y {
            return Err(Error::Parse(format!(
                "header degrees ({}, {}) disagree with terms ({}, {}) mod {}",
                self.deg_x,
                self.deg_y,
                f.deg_x,
                f.deg_y,
                ctx.p()
            )));
        }
        Ok(f)
    }
}

/// `F` seen as a polynomial in `y` with coefficients in `F_q[x]`.
#[derive(Clone)]
struct YPoly {
    ctx: Field,
    c: Vec<UniPoly>,
}

impl YPoly {
    fn from_bipoly(f: &BiPoly) -> Self {
        let mut c: Vec<Vec<FieldElement>> =
            vec![vec![FieldElement::zero(&f.ctx); f.deg_x + 1]; f.deg_y + 1];
        for (&(i, j), a) in &f.terms {
            c[j][i] = a.clone();
        }
        let mut out = YPoly {
            ctx: f.ctx.clone(),
            c: c.into_iter().map(|v| UniPoly::new(&f.ctx, v)).collect(),
        };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        while self.c.last().is_some_and(|c| c.is_zero()) {
            self.c.pop();
        }
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn deg(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    fn is_unit(&self) -> bool {
        self.c.len() == 1 && self.c[0].is_constant()
    }

    fn content(&self) -> UniPoly {
        self.c
            .iter()
            .fold(UniPoly::zero(&self.ctx), |g, c| g.gcd(c))
    }

    fn div_scalar(&self, d: &UniPoly) -> Self {
        YPoly {
            ctx: self.ctx.clone(),
            c: self.c.iter().map(|c| c.div_exact(d)).collect(),
        }
    }

    fn mul_scalar(&self, s: &UniPoly) -> Self {
        let mut out = YPoly {
            ctx: self.ctx.clone(),
            c: self.c.iter().map(|c| c.mul(s)).collect(),
        };
        out.normalize();
        out
    }

    fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let g = self.content();
        let mut out = self.div_scalar(&g);
        // Make the leading coefficient monic in x for a canonical form.
        let lead = out.c.last().unwrap().lead().unwrap().inv().unwrap();
        out.c = out.c.iter().map(|c| c.scale(&lead)).collect();
        out
    }

    /// Pseudo-remainder of `self` by `b` (`b` nonzero).
    fn prem(&self, b: &Self) -> Self {
        let db = b.deg();
        let lb = b.c[db].clone();
        let mut r = self.clone();
        while !r.is_zero() && r.deg() >= db {
            let dr = r.deg();
            let lr = r.c[dr].clone();
            let mut next = r.mul_scalar(&lb);
            for (j, bj) in b.c.iter().enumerate() {
                let idx = dr - db + j;
                next.c[idx] = next.c[idx].sub(&bj.mul(&lr));
            }
            next.normalize();
            r = next;
        }
        r
    }

    fn gcd(&self, o: &Self) -> Self {
        if o.is_zero() {
            return self.primitive_with_content();
        }
        if self.is_zero() {
            return o.primitive_with_content();
        }
        let content = self.content().gcd(&o.content());
        let (mut a, mut b) = (self.primitive(), o.primitive());
        if a.deg() < b.deg() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() && b.deg() > 0 {
            let r = a.prem(&b);
            a = b;
            b = r.primitive();
        }
        let core = if b.is_zero() {
            a
        } else {
            YPoly {
                ctx: self.ctx.clone(),
                c: vec![UniPoly::constant(FieldElement::one(&self.ctx))],
            }
        };
        core.mul_scalar(&content)
    }

    fn primitive_with_content(&self) -> Self {
        let c = self.content();
        self.primitive().mul_scalar(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64, k: usize) -> Field {
        make_field(p, k).unwrap()
    }

    fn el(ctx: &Field, n: i64) -> FieldElement {
        FieldElement::from_i64(ctx, n)
    }

    /// Independent irreducibility check: no factor of degree <= k/2, found by
    /// trial division with every monic polynomial of that degree.
    fn brute_irreducible(poly: &[u64], p: u64) -> bool {
        let k = poly.len() - 1;
        for d in 1..=k / 2 {
            let count = p.pow(d as u32);
            for n in 0..count {
                let mut cand: Vec<u64> = (0..d).map(|i| (n / p.pow(i as u32)) % p).collect();
                cand.push(1);
                if modp::rem(poly, &cand, p).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    fn brute_canonical_modulus(p: u64, k: usize) -> Vec<u64> {
        // Candidates ordered with a_0 most significant.
        let total = p.pow(k as u32);
        for n in 0..total {
            let mut c: Vec<u64> = (0..k)
                .map(|i| (n / p.pow((k - 1 - i) as u32)) % p)
                .collect();
            c.push(1);
            if brute_irreducible(&c, p) {
                return c;
            }
        }
        unreachable!()
    }

    #[test]
    fn canonical_moduli_match_a_brute_scan() {
        assert_eq!(irreducible_modulus(3, 2), vec![1, 0, 1]);
        assert_eq!(irreducible_modulus(2, 1), vec![0, 1]);
        for &(p, k) in &[(2u64, 2usize), (2, 3), (2, 4), (2, 5), (3, 2), (3, 3), (5, 2), (5, 3), (7, 2), (11, 2)] {
            assert_eq!(irreducible_modulus(p, k), brute_canonical_modulus(p, k), "p={p} k={k}");
        }
    }

    #[test]
    fn uni_arith_examples() {
        let f7 = f(7, 1);
        let a = UniPoly::from_roots(&f7, &[el(&f7, 1), el(&f7, 2)]);
        let b = UniPoly::from_roots(&f7, &[el(&f7, 1), el(&f7, 3)]);
        assert_eq!(uni_arith(&a, &b, PolyOp::Gcd).unwrap(), UniPoly::linear(&el(&f7, 1)));
        let p1 = UniPoly::from_u64s(&f7, &[1, 1]);
        let m1 = UniPoly::from_u64s(&f7, &[6, 1]);
        assert_eq!(uni_arith(&p1, &m1, PolyOp::Mul).unwrap(), UniPoly::from_u64s(&f7, &[6, 0, 1]));
        let y2 = UniPoly::from_u64s(&f7, &[0, 0, 1]);
        assert_eq!(UniPoly::zero(&f7).gcd(&y2), y2);
        assert_eq!(
            uni_arith(&y2, &UniPoly::zero(&f7), PolyOp::Mod).unwrap_err(),
            Error::ZeroModulus
        );
    }

    #[test]
    fn root_examples() {
        let f7 = f(7, 1);
        let r = UniPoly::from_u64s(&f7, &[6, 0, 1]).roots().unwrap();
        assert_eq!(r, vec![(el(&f7, 1), 1), (el(&f7, 6), 1)]);
        assert!(UniPoly::from_u64s(&f7, &[1, 0, 1]).roots().unwrap().is_empty());
        let f49 = f(7, 2);
        let r = UniPoly::from_u64s(&f49, &[1, 0, 1]).roots().unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|(_, m)| *m == 1));
        let sq = UniPoly::from_roots(&f7, &[el(&f7, 2), el(&f7, 2)]);
        assert_eq!(sq.roots().unwrap(), vec![(el(&f7, 2), 2)]);
        assert_eq!(UniPoly::zero(&f7).roots().unwrap_err(), Error::ZeroPolynomial);
    }

    #[test]
    fn fast_roots_agree_with_scan_in_larger_fields() {
        for &(p, k) in &[(2u64, 10usize), (3, 6), (31, 2), (2, 9)] {
            let ctx = f(p, k);
            let rs: Vec<FieldElement> = (0..5u64).map(|i| FieldElement::from_index(&ctx, 17 * i * i + 3)).collect();
            let mut poly = UniPoly::from_roots(&ctx, &rs);
            poly = poly.mul(&UniPoly::from_u64s(&ctx, &[1, 1, 1, 0, 1]));
            assert_eq!(poly.roots().unwrap(), poly.roots_exhaustive().unwrap(), "p={p} k={k}");
        }
    }

    #[test]
    fn factor_degrees_and_splitting() {
        let f7 = f(7, 1);
        // (y^2+1)(y-3)^2 (y^3 - 2): y^3 = 2 has no roots mod 7.
        let quad = UniPoly::from_u64s(&f7, &[1, 0, 1]);
        let cube = UniPoly::from_u64s(&f7, &[5, 0, 0, 1]);
        let lin = UniPoly::from_roots(&f7, &[el(&f7, 3), el(&f7, 3)]);
        let poly = quad.mul(&cube).mul(&lin);
        assert_eq!(poly.factor_degrees().unwrap(), vec![1, 2, 3]);
        assert_eq!(poly.splitting_degree().unwrap(), 6);
        let over = poly.embed_into(&f(7, 6)).unwrap();
        let total: usize = over.roots().unwrap().iter().map(|(_, m)| m).sum();
        assert_eq!(total, 7);
    }

    #[test]
    fn specialize_examples() {
        let f7 = f(7, 1);
        let parab = BiPoly::from_ints(&f7, &[(0, 1, 1), (2, 0, -1)]);
        let s = parab.specialize(Var::X, &el(&f7, 3));
        assert_eq!(s.poly, UniPoly::from_u64s(&f7, &[5, 1]));
        assert_eq!(s.drop, 0);
        let sq = BiPoly::from_ints(&f7, &[(2, 0, 1), (0, 2, -1)]);
        let s = sq.specialize(Var::Y, &el(&f7, 0));
        assert_eq!(s.poly, UniPoly::from_u64s(&f7, &[0, 0, 1]));
        let hyp = BiPoly::from_ints(&f7, &[(1, 1, 1), (0, 0, -1)]);
        let s = hyp.specialize(Var::X, &el(&f7, 0));
        assert_eq!(s.poly, UniPoly::constant(el(&f7, -1)));
        assert_eq!(s.drop, 1);
    }

    #[test]
    fn squarefree_examples() {
        let f7 = f(7, 1);
        assert!(!UniPoly::from_roots(&f7, &[el(&f7, 1), el(&f7, 1)]).is_squarefree().unwrap());
        assert!(UniPoly::from_u64s(&f7, &[6, 0, 1]).is_squarefree().unwrap());
        let ymx = BiPoly::from_ints(&f7, &[(0, 1, 1), (1, 0, -1)]);
        let ypx = BiPoly::from_ints(&f7, &[(0, 1, 1), (1, 0, 1)]);
        assert!(!ymx.mul(&ymx).mul(&ypx).is_squarefree().unwrap());
        assert!(ymx.mul(&ypx).is_squarefree().unwrap());
        // x^2 (y - 1): square factor in x alone.
        let g = BiPoly::from_ints(&f7, &[(2, 1, 1), (2, 0, -1)]);
        assert!(!g.is_squarefree().unwrap());
        // y^7 - x: both partials vanish only partly; still squarefree.
        let h = BiPoly::from_ints(&f7, &[(0, 7, 1), (1, 0, -1)]);
        assert!(h.is_squarefree().unwrap());
    }

    #[test]
    fn content_detects_line_factors() {
        let f7 = f(7, 1);
        let g = BiPoly::from_ints(&f7, &[(1, 1, 1), (1, 0, -1)]);
        assert_eq!(g.content(Var::Y), UniPoly::x(&f7));
        assert_eq!(g.content(Var::X), UniPoly::from_u64s(&f7, &[6, 1]));
        let h = BiPoly::from_ints(&f7, &[(1, 1, 1), (0, 0, -1)]);
        assert!(h.content(Var::X).is_constant());
        assert!(h.content(Var::Y).is_constant());
    }

    #[test]
    fn bipoly_file_round_trip() {
        let f11 = f(11, 1);
        let g = BiPoly::from_ints(&f11, &[(3, 0, 1), (0, 3, 1), (1, 1, 5), (0, 0, -2)]);
        let text = g.to_file_string();
        let back = BiPolyFile::parse(&text).unwrap().into_bipoly(None).unwrap();
        assert_eq!(back, g);
        let dup = "11 1 1 1\n0 1 1@11\n0 1 2@11\n";
        assert!(BiPolyFile::parse(dup).is_err());
        let ints = "0 1 1 1\n# comment\n0 1 1\n1 0 -123456789012345678901234567891\n";
        let parsed = BiPolyFile::parse(ints).unwrap();
        assert_eq!(parsed.comments, vec!["comment".to_string()]);
        let g = parsed.into_bipoly(Some(7)).unwrap();
        let expected = (7 - (123456789012345678901234567891u128 % 7) as i64) % 7;
        assert_eq!(g.coeff(1, 0), el(&f(7, 1), expected));
    }
}
