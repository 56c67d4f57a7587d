//! Fixtures shared by the benchmarks.

use corrdyn::{data, make_field, Correspondence, Field, FieldElement, UniPoly};

/// A shipped correspondence reduced mod `p`.
pub fn builtin(name: &str, p: u64) -> Correspondence {
    Correspondence::load(name, data::correspondence_text(name).expect("shipped"), Some(p)).expect("loads")
}

/// Deterministic pseudo-random elements of `F_{p^k}`.
pub fn elements(p: u64, k: usize, n: usize) -> (Field, Vec<FieldElement>) {
    let f = make_field(p, k).expect("valid field");
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let v = (0..n)
        .map(|_| {
            let coeffs: Vec<u64> = (0..k)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    state % p
                })
                .collect();
            FieldElement::from_coeffs(&f, &coeffs).expect("reduced")
        })
        .collect();
    (f, v)
}

/// Product of `roots` distinct linear factors and a fixed cubic.
pub fn root_rich_poly(p: u64, k: usize, roots: usize) -> UniPoly {
    let (f, els) = elements(p, k, roots + 4);
    let mut poly = UniPoly::new(&f, els[roots..].to_vec());
    for r in &els[..roots] {
        poly = poly.mul(&UniPoly::linear(r));
    }
    poly
}
