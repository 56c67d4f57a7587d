//! Short Weierstrass curves in characteristic at least 5, used as an
//! independent source of truth: `j`-invariants, point counts, the Hasse
//! invariant and 2-isogenous neighbours.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffield::{self, make_field, Field, FieldElement};
use crate::poly::UniPoly;

/// Largest field on which [`count_points`] will run.
pub const POINT_COUNT_LIMIT: u64 = 1 << 16;

/// Largest prime accepted by [`supersingular_set`].
pub const SUPERSINGULAR_SCAN_LIMIT: u64 = 1 << 10;

/// `y^2 = x^3 + a x + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    pub a: FieldElement,
    pub b: FieldElement,
}

fn check_char(ctx: &Field) -> Result<()> {
    if ctx.p() < 5 {
        Err(Error::SmallCharacteristic(ctx.p()))
    } else {
        Ok(())
    }
}

impl WeierstrassCurve {
    pub fn new(a: FieldElement, b: FieldElement) -> Result<Self> {
        check_char(a.ctx())?;
        let disc = discriminant_part(&a, &b);
        if disc.is_zero() {
            return Err(Error::Parse(format!("singular curve a={a} b={b}")));
        }
        Ok(WeierstrassCurve { a, b })
    }

    pub fn ctx(&self) -> &Field {
        self.a.ctx()
    }

    pub fn j_invariant(&self) -> FieldElement {
        j_from_coefficients(&self.a, &self.b)
    }

    /// The cubic `x^3 + a x + b`.
    pub fn cubic(&self) -> UniPoly {
        let ctx = self.ctx().clone();
        UniPoly::new(
            &ctx,
            vec![
                self.b.clone(),
                self.a.clone(),
                FieldElement::zero(&ctx),
                FieldElement::one(&ctx),
            ],
        )
    }
}

/// `4 a^3 + 27 b^2`.
fn discriminant_part(a: &FieldElement, b: &FieldElement) -> FieldElement {
    let ctx = a.ctx();
    let four = FieldElement::from_u64(ctx, 4);
    let tw7 = FieldElement::from_u64(ctx, 27);
    &(&four * &a.pow(3)) + &(&tw7 * &b.square())
}

fn j_from_coefficients(a: &FieldElement, b: &FieldElement) -> FieldElement {
    let ctx = a.ctx();
    let num = &FieldElement::from_u64(ctx, 1728 * 4) * &a.pow(3);
    &num * &discriminant_part(a, b).inv().expect("nonsingular curve")
}

/// A curve with the given `j`-invariant.
pub fn curve_from_j(j: &FieldElement) -> Result<WeierstrassCurve> {
    let ctx = j.ctx().clone();
    check_char(&ctx)?;
    let k1728 = FieldElement::from_u64(&ctx, 1728);
    if j.is_zero() {
        return WeierstrassCurve::new(FieldElement::zero(&ctx), FieldElement::one(&ctx));
    }
    if *j == k1728 {
        return WeierstrassCurve::new(FieldElement::one(&ctx), FieldElement::zero(&ctx));
    }
    let k = &k1728 - j;
    let a = &FieldElement::from_u64(&ctx, 3) * &(j * &k);
    let b = &FieldElement::from_u64(&ctx, 2) * &(j * &k.square());
    WeierstrassCurve::new(a, b)
}

/// `#E(F_q)` including the point at infinity, by summing quadratic
/// characters.
pub fn count_points(e: &WeierstrassCurve) -> Result<u64> {
    let ctx = e.ctx().clone();
    let q = ctx.order().filter(|&q| q <= POINT_COUNT_LIMIT).ok_or(Error::BoundExceeded {
        size: format!("{}^{}", ctx.p(), ctx.k()),
        bound: POINT_COUNT_LIMIT,
    })?;
    let cubic = e.cubic();
    let mut total: i64 = 1;
    for x in ffield::enumerate(&ctx)? {
        total += 1 + cubic.eval(&x).legendre() as i64;
    }
    debug_assert!(total >= 0 && (total - q as i64 - 1).pow(2) as u64 <= 4 * q);
    Ok(total as u64)
}

/// Coefficient of `x^(p-1)` in `(x^3 + a x + b)^((p-1)/2)`.
pub fn hasse_invariant(e: &WeierstrassCurve) -> FieldElement {
    let ctx = e.ctx().clone();
    let p = ctx.p() as usize;
    let cubic = e.cubic();
    // Square-and-multiply, truncating above degree p - 1.
    let truncate = |f: UniPoly| -> UniPoly {
        let c: Vec<FieldElement> = f.coeffs().iter().take(p).cloned().collect();
        UniPoly::new(&ctx, c)
    };
    let mut acc = UniPoly::constant(FieldElement::one(&ctx));
    let mut base = cubic;
    let mut n = (p - 1) / 2;
    while n > 0 {
        if n & 1 == 1 {
            acc = truncate(acc.mul(&base));
        }
        n >>= 1;
        if n > 0 {
            base = truncate(base.mul(&base));
        }
    }
    acc.coeff(p - 1)
}

/// Deuring's criterion on the curve attached to `j`.
pub fn is_supersingular(j: &FieldElement) -> Result<bool> {
    Ok(hasse_invariant(&curve_from_j(j)?).is_zero())
}

/// Supersingular `j`-invariants of characteristic `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupersingularReport {
    pub p: u64,
    /// Sorted elements of `F_{p^2}`.
    pub js: Vec<FieldElement>,
}

impl SupersingularReport {
    pub fn count(&self) -> usize {
        self.js.len()
    }

    /// The classical count lies in `[floor(p/12), floor(p/12) + 2]`.
    pub fn within_mass_bound(&self) -> bool {
        let lo = (self.p / 12) as usize;
        (lo..=lo + 2).contains(&self.count())
    }

    pub fn is_frobenius_stable(&self) -> bool {
        self.js
            .iter()
            .all(|j| self.js.binary_search(&j.frobenius(1)).is_ok())
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            p: u64,
            js: Vec<String>,
            count: usize,
            #[serde(skip)]
            _r: std::marker::PhantomData<&'a ()>,
        }
        serde_json::to_value(Out {
            p: self.p,
            js: self.js.iter().map(display_minimal).collect(),
            count: self.count(),
            _r: std::marker::PhantomData,
        })
        .expect("serializable")
    }
}

/// Encoding of an element of `F_{p^2}` in the prime field when it lies there.
pub fn display_minimal(a: &FieldElement) -> String {
    if a.is_prime_field() {
        format!("{}@{}", a.coeffs()[0], a.ctx().p())
    } else {
        a.to_string()
    }
}

/// All supersingular `j` in `F_{p^2}` by an exhaustive Hasse-invariant scan.
pub fn supersingular_set(p: u64) -> Result<SupersingularReport> {
    let ctx = make_field(p, 2)?;
    check_char(&ctx)?;
    if p > SUPERSINGULAR_SCAN_LIMIT {
        return Err(Error::BoundExceeded {
            size: format!("{p}^2"),
            bound: SUPERSINGULAR_SCAN_LIMIT * SUPERSINGULAR_SCAN_LIMIT,
        });
    }
    let elements: Vec<FieldElement> = ffield::enumerate(&ctx)?.collect();
    let mut js: Vec<FieldElement> = elements
        .into_par_iter()
        .filter_map(|j| match is_supersingular(&j) {
            Ok(true) => Some(Ok(j)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    js.sort();
    Ok(SupersingularReport { p, js })
}

/// Supersingularity from the point count: `#E(F_q) = 1 mod p`.
pub fn is_supersingular_by_count(j: &FieldElement) -> Result<bool> {
    let e = curve_from_j(j)?;
    Ok(count_points(&e)? % j.ctx().p() == 1)
}

/// The three `j`-invariants 2-isogenous to `j`, computed by Vélu's formulas
/// over the splitting field of the 2-division cubic. Results live in that
/// field; the field is returned alongside.
pub fn two_isogenous_j(j: &FieldElement) -> Result<(Field, Vec<FieldElement>)> {
    let ctx = j.ctx().clone();
    check_char(&ctx)?;
    if j.is_zero() || *j == FieldElement::from_u64(&ctx, 1728) {
        return Err(Error::ExcludedJ(j.to_string()));
    }
    let e = curve_from_j(j)?;
    let s = e.cubic().splitting_degree()?;
    let ext = make_field(ctx.p(), ctx.k() * s)?;
    let a = ffield::embed(&e.a, &ext)?;
    let b = ffield::embed(&e.b, &ext)?;
    let cubic = e.cubic().embed_into(&ext)?;
    let three = FieldElement::from_u64(&ext, 3);
    let five = FieldElement::from_u64(&ext, 5);
    let seven = FieldElement::from_u64(&ext, 7);
    let mut out = Vec::with_capacity(3);
    for (x0, m) in cubic.roots()? {
        let t = &(&three * &x0.square()) + &a;
        let w = &x0 * &t;
        let a2 = &a - &(&five * &t);
        let b2 = &b - &(&seven * &w);
        let j2 = j_from_coefficients(&a2, &b2);
        for _ in 0..m {
            out.push(j2.clone());
        }
    }
    out.sort();
    Ok((ext, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(p: u64, k: usize, n: u64) -> FieldElement {
        FieldElement::from_u64(&make_field(p, k).unwrap(), n)
    }

    /// Point count by listing every affine pair.
    fn brute_count(p: u64, a: u64, b: u64) -> u64 {
        let mut n = 1;
        for x in 0..p {
            for y in 0..p {
                if (y * y) % p == (x * x * x + a * x + b) % p {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn sections_and_round_trip() {
        let e = curve_from_j(&el(11, 1, 0)).unwrap();
        assert_eq!((e.a.clone(), e.b.clone()), (el(11, 1, 0), el(11, 1, 1)));
        let e = curve_from_j(&el(11, 1, 1)).unwrap();
        assert_eq!((e.a.clone(), e.b.clone()), (el(11, 1, 1), el(11, 1, 0)));
        let f13 = make_field(13, 1).unwrap();
        for j in ffield::enumerate(&f13).unwrap() {
            assert_eq!(curve_from_j(&j).unwrap().j_invariant(), j);
        }
        assert_eq!(
            curve_from_j(&el(3, 1, 1)).unwrap_err(),
            Error::SmallCharacteristic(3)
        );
    }

    #[test]
    fn point_counts_match_enumeration() {
        let e = WeierstrassCurve::new(el(5, 1, 1), el(5, 1, 0)).unwrap();
        assert_eq!(count_points(&e).unwrap(), brute_count(5, 1, 0));
        let e = WeierstrassCurve::new(el(7, 1, 0), el(7, 1, 1)).unwrap();
        assert_eq!(count_points(&e).unwrap(), brute_count(7, 0, 1));
        for (a, b) in [(2u64, 3u64), (5, 7), (1, 1)] {
            let e = WeierstrassCurve::new(el(13, 1, a), el(13, 1, b)).unwrap();
            assert_eq!(count_points(&e).unwrap(), brute_count(13, a, b));
        }
    }

    #[test]
    fn supersingular_examples() {
        assert!(is_supersingular(&el(5, 2, 0)).unwrap());
        assert!(is_supersingular_by_count(&el(5, 2, 0)).unwrap());
        assert!(!is_supersingular(&el(7, 2, 0)).unwrap());
        let r = supersingular_set(11).unwrap();
        assert_eq!(r.js, vec![el(11, 2, 0), el(11, 2, 1)]);
        assert_eq!(
            r.to_json(),
            serde_json::json!({"p": 11, "js": ["0@11", "1@11"], "count": 2})
        );
        assert_eq!(supersingular_set(13).unwrap().count(), 1);
        assert_eq!(supersingular_set(5).unwrap().js, vec![el(5, 2, 0)]);
    }

    #[test]
    fn isogenous_js_of_supersingular_are_supersingular() {
        for p in [19u64, 23, 37] {
            for j in supersingular_set(p).unwrap().js {
                let Ok((_, nbrs)) = two_isogenous_j(&j) else { continue };
                assert_eq!(nbrs.len(), 3);
                for n in nbrs {
                    assert!(is_supersingular(&n).unwrap(), "p={p} j={j} n={n}");
                }
            }
        }
    }
}
