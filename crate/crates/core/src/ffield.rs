//! Prime fields `F_p` and their extensions `F_{p^k}`.
//!
//! Every extension is presented as `F_p[t] / (m(t))` where `m` is the
//! canonical modulus: the smallest monic irreducible polynomial of degree `k`
//! when coefficients are compared low-degree-first. Contexts are interned, so
//! two calls with the same `(p, k)` share one [`FieldCtx`].
//!
//! Elements are dense coefficient vectors `c_0 + c_1 t + ... + c_{k-1} t^{k-1}`.
//! The canonical element order reads the vector as the integer
//! `c_0 + c_1 p + c_2 p^2 + ...`; enumeration follows that order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::poly;

/// Default cap on the number of elements an exhaustive scan may visit.
pub const DEFAULT_ENUM_BOUND: u64 = 1 << 24;

/// Exclusive upper bound on supported characteristics.
pub const MAX_PRIME: u64 = 1 << 31;

pub(crate) type Limbs = SmallVec<[u64; 4]>;

/// Shared handle to a field context.
pub type Field = Arc<FieldCtx>;

pub struct FieldCtx {
    p: u64,
    k: usize,
    /// Monic modulus, low-degree-first, length `k + 1`.
    modulus: Vec<u64>,
    /// `(p - modulus[j]) % p` for `j < k`, used during reduction.
    neg_tail: Vec<u64>,
    enum_bound: u64,
    order: Option<u64>,
    frob: OnceLock<Vec<Limbs>>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.k, self.modulus)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

type Registry = Mutex<HashMap<(u64, usize, u64), Field>>;

fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Builds (or fetches) `F_{p^k}` with the default enumeration bound.
///
/// A context whose order exceeds the bound is still returned and fully usable
/// for arithmetic; only exhaustive operations refuse it.
pub fn make_field(p: u64, k: usize) -> Result<Field> {
    make_field_bounded(p, k, DEFAULT_ENUM_BOUND)
}

pub fn make_field_bounded(p: u64, k: usize, enum_bound: u64) -> Result<Field> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p >= MAX_PRIME {
        return Err(Error::PrimeTooLarge(p));
    }
    if k == 0 {
        return Err(Error::DegreeZero);
    }
    let key = (p, k, enum_bound);
    if let Some(ctx) = registry().lock().unwrap().get(&key) {
        return Ok(ctx.clone());
    }
    // Compute outside the lock: the modulus search may itself build fields.
    let modulus = poly::irreducible_modulus(p, k);
    let neg_tail = modulus[..k].iter().map(|&c| (p - c) % p).collect();
    let order = (0..k).try_fold(1u64, |acc, _| acc.checked_mul(p));
    let ctx = Arc::new(FieldCtx {
        p,
        k,
        modulus,
        neg_tail,
        enum_bound,
        order,
        frob: OnceLock::new(),
    });
    let mut reg = registry().lock().unwrap();
    Ok(reg.entry(key).or_insert(ctx).clone())
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.same_field(other)
    }
}

impl Eq for FieldCtx {}

impl FieldCtx {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The defining polynomial, low-degree-first, monic of degree `k`.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// `p^k`, or `None` if it does not fit in 64 bits.
    pub fn order(&self) -> Option<u64> {
        self.order
    }

    pub fn enum_bound(&self) -> u64 {
        self.enum_bound
    }

    pub fn is_enumerable(&self) -> bool {
        matches!(self.order, Some(q) if q <= self.enum_bound)
    }

    pub(crate) fn check_enumerable(&self) -> Result<u64> {
        match self.order {
            Some(q) if q <= self.enum_bound => Ok(q),
            _ => Err(Error::BoundExceeded {
                size: format!("{}^{}", self.p, self.k),
                bound: self.enum_bound,
            }),
        }
    }

    pub fn same_field(&self, other: &FieldCtx) -> bool {
        self.p == other.p && self.k == other.k
    }

    fn check_same(&self, other: &FieldCtx) -> Result<()> {
        if self.same_field(other) {
            Ok(())
        } else {
            Err(Error::CtxMismatch {
                p1: self.p,
                k1: self.k,
                p2: other.p,
                k2: other.k,
            })
        }
    }

    fn frob_table(&self) -> &[Limbs] {
        self.frob.get_or_init(|| {
            // Row i holds (t^i)^p, so frobenius is linear in the coefficients.
            let ctx = self;
            let tp = ctx.pow_limbs(&ctx.gen_limbs(), self.p);
            let mut rows = Vec::with_capacity(self.k);
            let mut cur = ctx.one_limbs();
            for _ in 0..self.k {
                rows.push(cur.clone());
                cur = ctx.mul_limbs(&cur, &tp);
            }
            rows
        })
    }

    fn zero_limbs(&self) -> Limbs {
        SmallVec::from_elem(0, self.k)
    }

    fn one_limbs(&self) -> Limbs {
        let mut c = self.zero_limbs();
        c[0] = 1 % self.p;
        c
    }

    fn gen_limbs(&self) -> Limbs {
        let mut c = self.zero_limbs();
        if self.k == 1 {
            // Root of the degree-one modulus t + m_0.
            c[0] = self.neg_tail[0];
        } else {
            c[1] = 1;
        }
        c
    }

    fn add_limbs(&self, a: &Limbs, b: &Limbs) -> Limbs {
        let p = self.p;
        a.iter()
            .zip(b.iter())
            .map(|(&x, &y)| {
                let s = x + y;
                if s >= p {
                    s - p
                } else {
                    s
                }
            })
            .collect()
    }

    fn sub_limbs(&self, a: &Limbs, b: &Limbs) -> Limbs {
        let p = self.p;
        a.iter()
            .zip(b.iter())
            .map(|(&x, &y)| if x >= y { x - y } else { x + p - y })
            .collect()
    }

    fn neg_limbs(&self, a: &Limbs) -> Limbs {
        let p = self.p;
        a.iter().map(|&x| if x == 0 { 0 } else { p - x }).collect()
    }

    fn mul_limbs(&self, a: &Limbs, b: &Limbs) -> Limbs {
        let p = self.p;
        let k = self.k;
        if k == 1 {
            let mut c = Limbs::new();
            c.push(a[0] * b[0] % p);
            return c;
        }
        if p < 1 << 26 && k < 1 << 10 {
            // Products stay below 2^52, so a u64 accumulator holds every sum.
            let mut prod: SmallVec<[u64; 8]> = SmallVec::from_elem(0, 2 * k - 1);
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate() {
                    prod[i + j] += x * y;
                }
            }
            for i in (k..2 * k - 1).rev() {
                let h = prod[i] % p;
                if h == 0 {
                    continue;
                }
                for j in 0..k {
                    prod[i - k + j] += h * self.neg_tail[j];
                }
            }
            return prod[..k].iter().map(|&v| v % p).collect();
        }
        let p128 = p as u128;
        let mut prod: SmallVec<[u128; 8]> = SmallVec::from_elem(0, 2 * k - 1);
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] += (x * y) as u128;
            }
        }
        for i in (k..2 * k - 1).rev() {
            let h = (prod[i] % p128) as u64;
            for j in 0..k {
                prod[i - k + j] += (h * self.neg_tail[j]) as u128;
            }
        }
        prod[..k].iter().map(|&v| (v % p128) as u64).collect()
    }

    fn pow_limbs(&self, a: &Limbs, mut e: u64) -> Limbs {
        let mut base = a.clone();
        let mut acc = self.one_limbs();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_limbs(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul_limbs(&base, &base);
            }
        }
        acc
    }

    fn inv_limbs(&self, a: &Limbs) -> Option<Limbs> {
        let p = self.p;
        if a.iter().all(|&x| x == 0) {
            return None;
        }
        if self.k == 1 {
            let mut c = Limbs::new();
            c.push(inv_mod(a[0], p));
            return Some(c);
        }
        let inv = poly::modp::inverse_mod(a, &self.modulus, p)?;
        let mut c = self.zero_limbs();
        for (i, v) in inv.into_iter().enumerate().take(self.k) {
            c[i] = v;
        }
        Some(c)
    }

    fn frob_limbs(&self, a: &Limbs) -> Limbs {
        if self.k == 1 {
            return a.clone();
        }
        let table = self.frob_table();
        let p = self.p;
        let mut out = self.zero_limbs();
        for (i, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (o, &r) in out.iter_mut().zip(table[i].iter()) {
                *o = (*o + c * r) % p;
            }
        }
        out
    }
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i64, (a % p) as i64);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    s0.rem_euclid(p as i64) as u64
}

/// An element of `F_{p^k}` tied to its context.
#[derive(Clone)]
pub struct FieldElement {
    ctx: Field,
    c: Limbs,
}

/// The four field operations exposed by [`arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary arithmetic.
pub fn arith(a: &FieldElement, b: &FieldElement, op: ArithOp) -> Result<FieldElement> {
    a.ctx.check_same(&b.ctx)?;
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a * &b.inv()?,
    })
}

/// `a^(p^i)`.
pub fn frobenius(a: &FieldElement, i: usize) -> FieldElement {
    a.frobenius(i)
}

/// Iterator over all elements of an enumerable field in canonical order.
pub struct Elements {
    ctx: Field,
    next: u64,
    end: u64,
}

impl Iterator for Elements {
    type Item = FieldElement;

    fn next(&mut self) -> Option<FieldElement> {
        if self.next >= self.end {
            return None;
        }
        let e = FieldElement::from_index(&self.ctx, self.next);
        self.next += 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Elements {}

/// All `p^k` elements in canonical order; refuses fields above the bound.
pub fn enumerate(ctx: &Field) -> Result<Elements> {
    let q = ctx.check_enumerable()?;
    Ok(Elements {
        ctx: ctx.clone(),
        next: 0,
        end: q,
    })
}

impl FieldElement {
    pub fn zero(ctx: &Field) -> Self {
        FieldElement {
            ctx: ctx.clone(),
            c: ctx.zero_limbs(),
        }
    }

    pub fn one(ctx: &Field) -> Self {
        FieldElement {
            ctx: ctx.clone(),
            c: ctx.one_limbs(),
        }
    }

    /// The class of `t` (the canonical generator over `F_p`).
    pub fn generator(ctx: &Field) -> Self {
        FieldElement {
            ctx: ctx.clone(),
            c: ctx.gen_limbs(),
        }
    }

    pub fn from_u64(ctx: &Field, n: u64) -> Self {
        let mut c = ctx.zero_limbs();
        c[0] = n % ctx.p;
        FieldElement { ctx: ctx.clone(), c }
    }

    pub fn from_i64(ctx: &Field, n: i64) -> Self {
        let p = ctx.p as i64;
        Self::from_u64(ctx, n.rem_euclid(p) as u64)
    }

    /// Coefficients low-degree-first; missing entries are zero, extras must be zero.
    pub fn from_coeffs(ctx: &Field, coeffs: &[u64]) -> Result<Self> {
        if coeffs.len() > ctx.k && coeffs[ctx.k..].iter().any(|&x| x % ctx.p != 0) {
            return Err(Error::Parse(format!(
                "{} coefficients given for a degree-{} extension",
                coeffs.len(),
                ctx.k
            )));
        }
        let mut c = ctx.zero_limbs();
        for (slot, &v) in c.iter_mut().zip(coeffs) {
            *slot = v % ctx.p;
        }
        Ok(FieldElement { ctx: ctx.clone(), c })
    }

    /// Element at position `index` of the canonical order.
    pub fn from_index(ctx: &Field, mut index: u64) -> Self {
        let mut c = ctx.zero_limbs();
        for slot in c.iter_mut() {
            *slot = index % ctx.p;
            index /= ctx.p;
        }
        FieldElement { ctx: ctx.clone(), c }
    }

    /// Position in the canonical order, when it fits in 64 bits.
    pub fn index(&self) -> Option<u64> {
        let mut acc: u64 = 0;
        for &x in self.c.iter().rev() {
            acc = acc.checked_mul(self.ctx.p)?.checked_add(x)?;
        }
        Some(acc)
    }

    pub fn ctx(&self) -> &Field {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn is_one(&self) -> bool {
        self.c[0] == 1 % self.ctx.p && self.c[1..].iter().all(|&x| x == 0)
    }

    /// True when the element lies in the prime field.
    pub fn is_prime_field(&self) -> bool {
        self.c[1..].iter().all(|&x| x == 0)
    }

    pub fn inv(&self) -> Result<FieldElement> {
        let c = self.ctx.inv_limbs(&self.c).ok_or(Error::DivisionByZero)?;
        Ok(FieldElement {
            ctx: self.ctx.clone(),
            c,
        })
    }

    pub fn square(&self) -> FieldElement {
        self * self
    }

    pub fn pow(&self, e: u64) -> FieldElement {
        FieldElement {
            ctx: self.ctx.clone(),
            c: self.ctx.pow_limbs(&self.c, e),
        }
    }

    /// Exponent given as little-endian 64-bit words.
    pub fn pow_words(&self, words: &[u64]) -> FieldElement {
        let mut acc = FieldElement::one(&self.ctx);
        for &w in words.iter().rev() {
            for _ in 0..64 {
                acc = acc.square();
            }
            acc = &acc * &self.pow(w);
        }
        acc
    }

    /// `self^(p^i)`; `i` is reduced modulo `k`.
    pub fn frobenius(&self, i: usize) -> FieldElement {
        let mut c = self.c.clone();
        for _ in 0..(i % self.ctx.k) {
            c = self.ctx.frob_limbs(&c);
        }
        FieldElement {
            ctx: self.ctx.clone(),
            c,
        }
    }

    /// Membership in the subfield `F_{p^m}`; `m` must divide `k`.
    pub fn in_subfield(&self, m: usize) -> bool {
        m > 0 && self.ctx.k.is_multiple_of(m) && self.frobenius(m) == *self
    }

    /// Degree over `F_p` of the smallest subfield containing the element.
    pub fn degree(&self) -> usize {
        let k = self.ctx.k;
        (1..=k)
            .filter(|m| k.is_multiple_of(*m))
            .find(|&m| self.in_subfield(m))
            .unwrap_or(k)
    }

    /// Norm down to `F_p`: product of all Frobenius conjugates.
    pub fn norm(&self) -> u64 {
        let mut acc = self.clone();
        let mut conj = self.clone();
        for _ in 1..self.ctx.k {
            conj = conj.frobenius(1);
            acc = &acc * &conj;
        }
        acc.c[0]
    }

    /// Quadratic character: 0, 1 or -1.
    pub fn legendre(&self) -> i8 {
        let p = self.ctx.p;
        if self.is_zero() {
            return 0;
        }
        if p == 2 {
            return 1;
        }
        let n = self.norm();
        let mut acc = 1u64;
        let mut base = n;
        let mut e = (p - 1) / 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        if acc == 1 {
            1
        } else {
            -1
        }
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.same_field(&other.ctx) && self.c == other.c
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ctx.p.hash(state);
        self.ctx.k.hash(state);
        self.c.hash(state);
    }
}

impl Ord for FieldElement {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.ctx.p, self.ctx.k)
            .cmp(&(other.ctx.p, other.ctx.k))
            .then_with(|| self.c.iter().rev().cmp(other.c.iter().rev()))
    }
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &FieldElement) -> FieldElement {
                debug_assert!(self.ctx.same_field(&rhs.ctx), "field mismatch");
                FieldElement {
                    ctx: self.ctx.clone(),
                    c: self.ctx.$f(&self.c, &rhs.c),
                }
            }
        }
        impl std::ops::$tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                (&self).$m(&rhs)
            }
        }
        impl std::ops::$tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &FieldElement) -> FieldElement {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add, add_limbs);
binop!(Sub, sub, sub_limbs);
binop!(Mul, mul, mul_limbs);

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            ctx: self.ctx.clone(),
            c: self.ctx.neg_limbs(&self.c),
        }
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ctx.k == 1 {
            write!(f, "{}@{}", self.c[0], self.ctx.p)
        } else {
            write!(f, "[")?;
            for (i, c) in self.c.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "]@{}^{}", self.ctx.p, self.ctx.k)
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_coeff(s: &str, p: u64) -> Result<u64> {
    let s = s.trim();
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad coefficient {s:?}")));
    }
    let v = reduce_decimal(digits, p);
    Ok(if neg && v != 0 { p - v } else { v })
}

/// Reduces an arbitrarily long decimal string modulo `p`.
pub(crate) fn reduce_decimal(digits: &str, p: u64) -> u64 {
    digits
        .bytes()
        .fold(0u64, |acc, b| (acc * 10 + (b - b'0') as u64) % p)
}

impl FromStr for FieldElement {
    type Err = Error;

    /// Accepts `c@p` and `[c0,...,c_{k-1}]@p^k`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, field) = s
            .rsplit_once('@')
            .ok_or_else(|| Error::Parse(format!("missing '@' in {s:?}")))?;
        let (p_str, k_str) = match field.split_once('^') {
            Some((p, k)) => (p, Some(k)),
            None => (field, None),
        };
        let p: u64 = p_str
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad prime in {s:?}")))?;
        let body = body.trim();
        let coeff_strs: Vec<&str> = match body.strip_prefix('[') {
            Some(inner) => inner
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("unclosed '[' in {s:?}")))?
                .split(',')
                .collect(),
            None => vec![body],
        };
        let k = match k_str {
            Some(k) => k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad degree in {s:?}")))?,
            None => coeff_strs.len(),
        };
        if coeff_strs.len() != k {
            return Err(Error::Parse(format!(
                "{} coefficients for degree {k} in {s:?}",
                coeff_strs.len()
            )));
        }
        let ctx = make_field(p, k)?;
        let coeffs = coeff_strs
            .iter()
            .map(|c| parse_coeff(c, p))
            .collect::<Result<Vec<_>>>()?;
        FieldElement::from_coeffs(&ctx, &coeffs)
    }
}

/// Parses an element into a given field: either the full `@` encoding (which
/// is embedded if it names a subfield) or a bare, possibly signed, integer.
pub fn parse_in(ctx: &Field, s: &str) -> Result<FieldElement> {
    let s = s.trim();
    if s.contains('@') {
        let e: FieldElement = s.parse()?;
        if e.ctx.p != ctx.p {
            return Err(Error::CtxMismatch {
                p1: ctx.p,
                k1: ctx.k,
                p2: e.ctx.p,
                k2: e.ctx.k,
            });
        }
        embed(&e, ctx)
    } else {
        Ok(FieldElement::from_u64(ctx, parse_coeff(s, ctx.p)?))
    }
}

// ---------------------------------------------------------------------------
// Embeddings between extensions
// ---------------------------------------------------------------------------

type EmbedCache = Mutex<HashMap<(u64, usize, usize), Limbs>>;

fn embed_cache() -> &'static EmbedCache {
    static CACHE: OnceLock<EmbedCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Image of the generator of `F_{p^a}` inside `F_{p^b}`.
///
/// Chosen as the smallest root (canonical order) of the degree-`a` modulus
/// among those compatible with the already fixed images of every maximal
/// proper subfield, so embeddings compose: `F_{p^c} -> F_{p^a} -> F_{p^b}`
/// agrees with `F_{p^c} -> F_{p^b}`.
fn generator_image(p: u64, a: usize, b: usize) -> Result<FieldElement> {
    let target = make_field(p, b)?;
    if let Some(c) = embed_cache().lock().unwrap().get(&(p, a, b)) {
        return Ok(FieldElement {
            ctx: target,
            c: c.clone(),
        });
    }
    let src = make_field(p, a)?;
    let image = if a == b {
        FieldElement::generator(&target)
    } else if a == 1 {
        FieldElement::from_u64(&target, src.neg_tail[0])
    } else {
        let modulus: Vec<FieldElement> = src
            .modulus
            .iter()
            .map(|&c| FieldElement::from_u64(&target, c))
            .collect();
        let roots = poly::UniPoly::new(&target, modulus).distinct_roots()?;
        let constraints: Vec<(FieldElement, FieldElement)> = maximal_divisors(a)
            .into_iter()
            .map(|c| {
                let inner = generator_image(p, c, a)?;
                let outer = generator_image(p, c, b)?;
                Ok((inner, outer))
            })
            .collect::<Result<_>>()?;
        let mut candidates = roots;
        candidates.sort();
        candidates
            .into_iter()
            .find(|r| {
                constraints
                    .iter()
                    .all(|(inner, outer)| eval_coeffs_at(inner.coeffs(), r) == *outer)
            })
            .expect("a compatible embedding always exists")
    };
    embed_cache()
        .lock()
        .unwrap()
        .insert((p, a, b), image.c.clone());
    Ok(image)
}

fn maximal_divisors(a: usize) -> Vec<usize> {
    let mut primes = Vec::new();
    let mut n = a;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            primes.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        primes.push(n);
    }
    primes.into_iter().map(|q| a / q).collect()
}

/// Evaluates `sum coeffs[i] * x^i` with `F_p` coefficients.
fn eval_coeffs_at(coeffs: &[u64], x: &FieldElement) -> FieldElement {
    let mut acc = FieldElement::zero(&x.ctx);
    for &c in coeffs.iter().rev() {
        acc = &(&acc * x) + &FieldElement::from_u64(&x.ctx, c);
    }
    acc
}

/// Maps `a` into `target`, which must be an extension of `a`'s field.
pub fn embed(a: &FieldElement, target: &Field) -> Result<FieldElement> {
    let (ka, kb) = (a.ctx.k, target.k);
    if a.ctx.p != target.p {
        return Err(Error::CtxMismatch {
            p1: a.ctx.p,
            k1: ka,
            p2: target.p,
            k2: kb,
        });
    }
    if kb % ka != 0 {
        return Err(Error::NotSubfield { from: ka, to: kb });
    }
    if ka == kb {
        return Ok(FieldElement {
            ctx: target.clone(),
            c: a.c.clone(),
        });
    }
    if a.is_prime_field() {
        return Ok(FieldElement::from_u64(target, a.c[0]));
    }
    let g = generator_image(a.ctx.p, ka, kb)?;
    Ok(eval_coeffs_at(&a.c, &g))
}

/// Inverse of [`embed`]: the element of `sub` mapping to `a`, if any.
pub fn restrict(a: &FieldElement, sub: &Field) -> Result<Option<FieldElement>> {
    let (kb, ka) = (a.ctx.k, sub.k);
    if kb % ka != 0 || a.ctx.p != sub.p {
        return Err(Error::NotSubfield { from: ka, to: kb });
    }
    if a.is_prime_field() {
        return Ok(Some(FieldElement::from_u64(sub, a.c[0])));
    }
    if !a.in_subfield(ka) {
        return Ok(None);
    }
    if ka == kb {
        return Ok(Some(FieldElement {
            ctx: sub.clone(),
            c: a.c.clone(),
        }));
    }
    // Solve sum x_i g^i = a over F_p, where g is the image of the generator.
    let p = sub.p;
    let g = generator_image(p, ka, kb)?;
    let mut cols: Vec<Limbs> = Vec::with_capacity(ka);
    let mut cur = FieldElement::one(&a.ctx);
    for _ in 0..ka {
        cols.push(cur.c.clone());
        cur = &cur * &g;
    }
    // Augmented kb x (ka + 1) system.
    let mut rows: Vec<Vec<u64>> = (0..kb)
        .map(|r| {
            let mut row: Vec<u64> = cols.iter().map(|c| c[r]).collect();
            row.push(a.c[r]);
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..ka {
        let Some(r) = (pivot_row..kb).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(pivot_row, r);
        let inv = inv_mod(rows[pivot_row][col], p);
        for v in rows[pivot_row].iter_mut() {
            *v = *v * inv % p;
        }
        let pivot = rows[pivot_row].clone();
        for (r2, row) in rows.iter_mut().enumerate() {
            if r2 != pivot_row && row[col] != 0 {
                let f = row[col];
                for (v, &pv) in row.iter_mut().zip(&pivot) {
                    *v = (*v + p - f * pv % p) % p;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    let mut x = vec![0u64; ka];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = rows[r][ka];
    }
    Ok(Some(FieldElement::from_coeffs(sub, &x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_modulus_convention() {
        let f7 = make_field(7, 1).unwrap();
        assert_eq!(f7.modulus(), &[0, 1]);
        assert_eq!(enumerate(&f7).unwrap().count(), 7);
    }

    #[test]
    fn f9_relations() {
        let f9 = make_field(3, 2).unwrap();
        assert_eq!(f9.modulus(), &[1, 0, 1]);
        let t = FieldElement::generator(&f9);
        assert_eq!(t.square(), -FieldElement::one(&f9));
        assert_eq!(t.frobenius(1), -t.clone());
        assert_eq!(enumerate(&f9).unwrap().count(), 9);
    }

    #[test]
    fn f7_products_and_inverses() {
        let f7 = make_field(7, 1).unwrap();
        let three = FieldElement::from_u64(&f7, 3);
        let five = FieldElement::from_u64(&f7, 5);
        assert!((&three * &five).is_one());
        assert_eq!(three.inv().unwrap(), five);
        assert_eq!(
            FieldElement::zero(&f7).inv().unwrap_err(),
            Error::DivisionByZero
        );
    }

    #[test]
    fn make_field_errors() {
        assert_eq!(make_field(4, 1).unwrap_err(), Error::NotPrime(4));
        assert_eq!(make_field(5, 0).unwrap_err(), Error::DegreeZero);
        let big = make_field_bounded(2, 30, 1 << 24).unwrap();
        assert!(!big.is_enumerable());
        assert!(matches!(enumerate(&big), Err(Error::BoundExceeded { .. })));
    }

    #[test]
    fn ctx_mismatch_is_reported() {
        let a = FieldElement::one(&make_field(5, 1).unwrap());
        let b = FieldElement::one(&make_field(7, 1).unwrap());
        assert!(matches!(
            arith(&a, &b, ArithOp::Add),
            Err(Error::CtxMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_starts_with_prime_field() {
        let f4 = make_field(2, 2).unwrap();
        let els: Vec<_> = enumerate(&f4).unwrap().collect();
        assert_eq!(els.len(), 4);
        assert!(els[0].is_zero());
        assert!(els[1].is_one());
    }

    #[test]
    fn text_encoding() {
        let f7 = make_field(7, 1).unwrap();
        let e = FieldElement::from_u64(&f7, 3);
        assert_eq!(e.to_string(), "3@7");
        assert_eq!("3@7".parse::<FieldElement>().unwrap(), e);
        let f9 = make_field(3, 2).unwrap();
        let t = FieldElement::generator(&f9);
        assert_eq!(t.to_string(), "[0,1]@3^2");
        assert_eq!("[0,1]@3^2".parse::<FieldElement>().unwrap(), t);
        assert!("[0,1]@3^3".parse::<FieldElement>().is_err());
        assert!("12".parse::<FieldElement>().is_err());
        assert_eq!(parse_in(&f7, "-1").unwrap(), FieldElement::from_u64(&f7, 6));
    }

    #[test]
    fn embeddings_compose() {
        for &(p, a, b, c) in &[(2u64, 2usize, 4usize, 8usize), (3, 2, 4, 8), (5, 2, 6, 12), (3, 3, 6, 12)] {
            let fa = make_field(p, a).unwrap();
            let fb = make_field(p, b).unwrap();
            let fc = make_field(p, c).unwrap();
            for x in enumerate(&fa).unwrap().take(40) {
                let via = embed(&embed(&x, &fb).unwrap(), &fc).unwrap();
                let direct = embed(&x, &fc).unwrap();
                assert_eq!(via, direct, "p={p} a={a} b={b} c={c} x={x}");
            }
        }
    }

    #[test]
    fn embedding_is_a_homomorphism_and_restricts_back() {
        let f9 = make_field(3, 2).unwrap();
        let f81 = make_field(3, 4).unwrap();
        let els: Vec<_> = enumerate(&f9).unwrap().collect();
        for x in &els {
            for y in &els {
                let lhs = embed(&(x * y), &f81).unwrap();
                let rhs = &embed(x, &f81).unwrap() * &embed(y, &f81).unwrap();
                assert_eq!(lhs, rhs);
            }
            let up = embed(x, &f81).unwrap();
            assert_eq!(restrict(&up, &f9).unwrap().as_ref(), Some(x));
        }
        let g = FieldElement::generator(&f81);
        assert_eq!(restrict(&g, &f9).unwrap(), None);
    }

    #[test]
    fn legendre_matches_euler_criterion_in_prime_field() {
        let f11 = make_field(11, 1).unwrap();
        for x in enumerate(&f11).unwrap().skip(1) {
            let expected = if x.pow(5).is_one() { 1 } else { -1 };
            assert_eq!(x.legendre(), expected);
        }
    }
}
