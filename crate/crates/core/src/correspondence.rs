//! Correspondences on the projective line given by a plane curve `F(x, y) = 0`.
//!
//! The first projection `f` has degree `d = deg_y F` and the second, `g`, has
//! degree `e = deg_x F`. Fibres are computed over whichever extension field the
//! caller works in; a point at infinity on either side is handled in the chart
//! `1/x` (resp. `1/y`).
//!
//! Étaleness is decided per branch of the curve through a point, so nodes of
//! the plane model whose branches are individually unramified count as étale.
//! Lines may carry orbifold data (`# orbifold <value> <order>` in the data
//! file): a branch with ramification index dividing the order of its image is
//! treated as unramified there, which is how the elliptic points of the
//! `j`-line are accounted for.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{self, make_field, Field, FieldElement};
use crate::poly::{BiPoly, BiPolyFile, UniPoly, Var};

/// A point of `P^1`: a field element or infinity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum PointP1 {
    Finite(FieldElement),
    Infinity,
}

impl PointP1 {
    pub fn finite(&self) -> Option<&FieldElement> {
        match self {
            PointP1::Finite(a) => Some(a),
            PointP1::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, PointP1::Infinity)
    }

    /// Moves a finite point into an extension field.
    pub fn embed(&self, target: &Field) -> Result<PointP1> {
        Ok(match self {
            PointP1::Finite(a) => PointP1::Finite(ffield::embed(a, target)?),
            PointP1::Infinity => PointP1::Infinity,
        })
    }

    /// Moves a finite point down into a subfield; `None` if it is not there.
    pub fn restrict(&self, sub: &Field) -> Result<Option<PointP1>> {
        Ok(match self {
            PointP1::Finite(a) => ffield::restrict(a, sub)?.map(PointP1::Finite),
            PointP1::Infinity => Some(PointP1::Infinity),
        })
    }

    pub fn frobenius(&self, i: usize) -> PointP1 {
        match self {
            PointP1::Finite(a) => PointP1::Finite(a.frobenius(i)),
            PointP1::Infinity => PointP1::Infinity,
        }
    }

    /// Degree over `F_p` of the smallest field containing the point.
    pub fn degree(&self) -> usize {
        self.finite().map_or(1, |a| a.degree())
    }

    /// Parses `inf` or an element encoding into `field`.
    pub fn parse_in(field: &Field, s: &str) -> Result<PointP1> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞") {
            Ok(PointP1::Infinity)
        } else {
            Ok(PointP1::Finite(ffield::parse_in(field, s)?))
        }
    }
}

impl Ord for PointP1 {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (PointP1::Finite(a), PointP1::Finite(b)) => a.cmp(b),
            (PointP1::Finite(_), PointP1::Infinity) => Ordering::Less,
            (PointP1::Infinity, PointP1::Finite(_)) => Ordering::Greater,
            (PointP1::Infinity, PointP1::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for PointP1 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PointP1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointP1::Finite(a) => write!(f, "{a}"),
            PointP1::Infinity => write!(f, "inf"),
        }
    }
}

impl fmt::Debug for PointP1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for PointP1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One branch of the curve through a point: ramification of `f` and `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub ram_f: usize,
    pub ram_g: usize,
}

/// A point of the curve, i.e. an edge of the physical graph.
///
/// `mult_f` is the multiplicity of `y` in the fibre of `f` over `x` (the
/// intersection number with the vertical line), `mult_g` the same for `g`.
/// `branches` lists the branches of the curve through the point; it is
/// `None` when the local analysis could not separate them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgePoint {
    pub x: PointP1,
    pub y: PointP1,
    pub mult_f: usize,
    pub mult_g: usize,
    pub branches: Option<Vec<Branch>>,
}

impl EdgePoint {
    pub fn key(&self) -> (PointP1, PointP1) {
        (self.x.clone(), self.y.clone())
    }

    /// Number of graph edges this point contributes: one per branch.
    pub fn edge_count(&self) -> usize {
        self.branches.as_ref().map_or(1, |b| b.len().max(1))
    }

    /// Smooth point of the plane model.
    pub fn is_smooth(&self) -> bool {
        self.mult_f == 1 || self.mult_g == 1
    }
}

impl Ord for EdgePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.x, &self.y).cmp(&(&other.x, &other.y))
    }
}

impl PartialOrd for EdgePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Which projection a fibre is taken along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Points of `X`; their fibre lists the `y` values.
    X,
    /// Points of `Y`; their fibre lists the `x` values.
    Y,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

/// Rational part of a fibre over a fixed field.
#[derive(Debug, Clone)]
pub struct Fibre {
    /// Points defined over the field, with multiplicity.
    pub points: Vec<(PointP1, usize)>,
    /// Total multiplicity of the points not defined over the field.
    pub unsplit: usize,
}

impl Fibre {
    pub fn is_split(&self) -> bool {
        self.unsplit == 0
    }

    pub fn mass(&self) -> usize {
        self.points.iter().map(|(_, m)| m).sum::<usize>() + self.unsplit
    }
}

/// User knowledge about a core (a common quotient of both sides).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreFlag {
    NoCore,
    HasCore,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct Correspondence {
    name: String,
    poly: BiPoly,
    d: usize,
    e: usize,
    minimal: bool,
    symmetric: bool,
    irreducible_asserted: bool,
    core: CoreFlag,
    /// Orbifold orders of special points, shared by both sides.
    orbifold: Vec<(FieldElement, usize)>,
}

impl Correspondence {
    /// Validates `poly` and computes the flags.
    pub fn new(name: &str, poly: BiPoly) -> Result<Self> {
        if poly.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if !poly.content(Var::Y).is_constant() || poly.deg_y() == 0 {
            return Err(Error::DegenerateComponent('x'));
        }
        if !poly.content(Var::X).is_constant() || poly.deg_x() == 0 {
            return Err(Error::DegenerateComponent('y'));
        }
        let minimal = poly.is_squarefree()?;
        let symmetric = transpose_symmetric(&poly);
        Ok(Correspondence {
            name: name.to_string(),
            d: poly.deg_y(),
            e: poly.deg_x(),
            poly,
            minimal,
            symmetric,
            irreducible_asserted: false,
            core: CoreFlag::Unknown,
            orbifold: Vec::new(),
        })
    }

    /// Loads the bipoly text format. Integer-coefficient files need `p`.
    ///
    /// Recognized directives in `#` comments: `orbifold <value> <order>`,
    /// `core none`, `core present`, `irreducible`.
    pub fn load(name: &str, text: &str, p: Option<u64>) -> Result<Self> {
        let file = BiPolyFile::parse(text)?;
        let poly = file.into_bipoly(p)?;
        let ctx = poly.ctx().clone();
        let mut c = Self::new(name, poly)?;
        for line in &file.comments {
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["orbifold", value, order] => {
                    let v = ffield::parse_in(&ctx, value)?;
                    let o: usize = order
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad orbifold order {order:?}")))?;
                    c.add_orbifold_point(v, o);
                }
                ["core", "none"] => c.core = CoreFlag::NoCore,
                ["core", "present"] => c.core = CoreFlag::HasCore,
                ["irreducible"] => c.irreducible_asserted = true,
                _ => {}
            }
        }
        Ok(c)
    }

    pub fn add_orbifold_point(&mut self, value: FieldElement, order: usize) {
        if let Some(slot) = self.orbifold.iter_mut().find(|(v, _)| *v == value) {
            slot.1 = crate::poly::lcm(slot.1, order);
        } else {
            self.orbifold.push((value, order));
        }
    }

    pub fn with_core(mut self, core: CoreFlag) -> Self {
        self.core = core;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn poly(&self) -> &BiPoly {
        &self.poly
    }

    pub fn base_field(&self) -> &Field {
        self.poly.ctx()
    }

    /// Degree of `f` (`deg_y F`).
    pub fn d(&self) -> usize {
        self.d
    }

    /// Degree of `g` (`deg_x F`).
    pub fn e(&self) -> usize {
        self.e
    }

    pub fn is_minimal(&self) -> bool {
        self.minimal
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn irreducible_asserted(&self) -> bool {
        self.irreducible_asserted
    }

    pub fn core(&self) -> CoreFlag {
        self.core
    }

    pub fn orbifold_points(&self) -> &[(FieldElement, usize)] {
        &self.orbifold
    }

    pub fn has_orbifold_data(&self) -> bool {
        !self.orbifold.is_empty()
    }

    /// Orbifold order of a point (1 unless declared).
    pub fn orbifold_order(&self, pt: &PointP1) -> usize {
        let Some(a) = pt.finite() else { return 1 };
        self.orbifold
            .iter()
            .find(|(v, _)| ffield::embed(v, a.ctx()).is_ok_and(|v| v == *a))
            .map_or(1, |(_, o)| *o)
    }

    /// Degree of the fibre of the projection from `side`.
    pub fn fibre_degree(&self, side: Side) -> usize {
        match side {
            Side::X => self.d,
            Side::Y => self.e,
        }
    }

    /// Checks that `field` extends the coefficient field.
    pub fn check_field(&self, field: &Field) -> Result<()> {
        let base = self.base_field();
        if field.p() != base.p() || !field.k().is_multiple_of(base.k()) {
            return Err(Error::NotSubfield {
                from: base.k(),
                to: field.k(),
            });
        }
        Ok(())
    }

    /// The polynomial whose roots are the fibre over `pt`, plus the number
    /// of fibre points at infinity.
    pub fn fibre_poly(&self, side: Side, pt: &PointP1, field: &Field) -> Result<(UniPoly, usize)> {
        let var = match side {
            Side::X => Var::X,
            Side::Y => Var::Y,
        };
        let s = match pt {
            PointP1::Finite(a) => {
                let a = ffield::embed(a, field)?;
                self.poly.specialize(var, &a)
            }
            PointP1::Infinity => self.poly.specialize_infinity(var, field),
        };
        Ok((s.poly, s.drop))
    }

    /// Rational fibre over `pt` within `field`.
    pub fn fibre(&self, side: Side, pt: &PointP1, field: &Field) -> Result<Fibre> {
        let (poly, drop) = self.fibre_poly(side, pt, field)?;
        let mut points: Vec<(PointP1, usize)> = poly
            .roots()?
            .into_iter()
            .map(|(r, m)| (PointP1::Finite(r), m))
            .collect();
        if drop > 0 {
            points.push((PointP1::Infinity, drop));
        }
        let rational: usize = points.iter().map(|(_, m)| m).sum();
        Ok(Fibre {
            unsplit: self.fibre_degree(side) - rational,
            points,
        })
    }

    /// `y` values over `x0` defined over `field`, with multiplicity.
    pub fn forward(&self, x0: &PointP1, field: &Field) -> Result<Vec<(PointP1, usize)>> {
        Ok(self.fibre(Side::X, x0, field)?.points)
    }

    /// `x` values over `y0` defined over `field`, with multiplicity.
    pub fn backward(&self, y0: &PointP1, field: &Field) -> Result<Vec<(PointP1, usize)>> {
        Ok(self.fibre(Side::Y, y0, field)?.points)
    }

    /// Whether `(x, y)` lies on the projective closure.
    pub fn contains(&self, x: &PointP1, y: &PointP1, field: &Field) -> Result<bool> {
        let chart = self.local_chart(x, y, field)?;
        Ok(chart.coeff(0, 0).is_zero())
    }

    /// `F` in local coordinates `(u, v)` centred at `(x, y)`.
    fn local_chart(&self, x: &PointP1, y: &PointP1, field: &Field) -> Result<BiPoly> {
        self.check_field(field)?;
        let f = self.poly.embed_into(field)?;
        let (dx, dy) = (f.deg_x(), f.deg_y());
        let flipped = BiPoly::new(
            field,
            f.terms().map(|(&(i, j), c)| {
                let i = if x.is_infinity() { dx - i } else { i };
                let j = if y.is_infinity() { dy - j } else { j };
                ((i, j), c.clone())
            }),
        );
        let x0 = match x {
            PointP1::Finite(a) => Some(ffield::embed(a, field)?),
            PointP1::Infinity => None,
        };
        let y0 = match y {
            PointP1::Finite(b) => Some(ffield::embed(b, field)?),
            PointP1::Infinity => None,
        };
        Ok(taylor_shift(&flipped, x0.as_ref(), y0.as_ref()))
    }

    /// Full local data of a curve point.
    pub fn edge_point(&self, x: &PointP1, y: &PointP1, field: &Field) -> Result<EdgePoint> {
        let chart = self.local_chart(x, y, field)?;
        if !chart.coeff(0, 0).is_zero() {
            return Err(Error::NotOnCurve(x.to_string(), y.to_string()));
        }
        let mult_f = (0..=chart.deg_y())
            .find(|&j| !chart.coeff(0, j).is_zero())
            .expect("no vertical component");
        let mult_g = (0..=chart.deg_x())
            .find(|&i| !chart.coeff(i, 0).is_zero())
            .expect("no horizontal component");
        let branches = if mult_f == 1 || mult_g == 1 {
            Some(vec![Branch {
                ram_f: mult_f,
                ram_g: mult_g,
            }])
        } else if self.minimal {
            branches_at_origin(&chart, 0).and_then(|bs| {
                bs.into_iter()
                    .map(|(u, v)| {
                        (v != usize::MAX).then_some(Branch { ram_f: u, ram_g: v })
                    })
                    .collect()
            })
        } else {
            None
        };
        Ok(EdgePoint {
            x: x.clone(),
            y: y.clone(),
            mult_f,
            mult_g,
            branches,
        })
    }

    /// Étaleness of `f` and `g` at a curve point.
    ///
    /// Without orbifold data and at a smooth point this is the simple-root
    /// test on each fibre. At singular points of a minimal model it is
    /// decided per branch; points of a non-minimal model fall back to the
    /// simple-root test.
    pub fn etale_at(&self, z: &EdgePoint) -> (bool, bool) {
        let (ox, oy) = (self.orbifold_order(&z.x), self.orbifold_order(&z.y));
        match &z.branches {
            Some(bs) if self.minimal || z.is_smooth() => (
                bs.iter().all(|b| ox % b.ram_f == 0),
                bs.iter().all(|b| oy % b.ram_g == 0),
            ),
            _ => (z.mult_f == 1, z.mult_g == 1),
        }
    }

    pub fn is_etale_point(&self, z: &EdgePoint) -> bool {
        let (a, b) = self.etale_at(z);
        a && b
    }

    /// Bounded orbit of `x0` under the two fibre maps, over a fixed field.
    /// `budget` caps the number of points on each side.
    ///
    /// Only points defined over `field` are followed; see
    /// [`Correspondence::orbit_closure_tower`] to approximate the algebraic
    /// closure.
    pub fn orbit_closure(&self, x0: &PointP1, budget: usize, field: &Field) -> Result<OrbitClosure> {
        let mut xs: BTreeSet<PointP1> = BTreeSet::new();
        let mut ys: BTreeSet<PointP1> = BTreeSet::new();
        let mut queue: VecDeque<(Side, PointP1)> = VecDeque::new();
        let x0 = x0.embed(field)?;
        xs.insert(x0.clone());
        queue.push_back((Side::X, x0));
        let mut split = true;
        while let Some((side, pt)) = queue.pop_front() {
            let fib = self.fibre(side, &pt, field)?;
            split &= fib.is_split();
            for (q, _) in fib.points {
                let (set, next) = match side {
                    Side::X => (&mut ys, Side::Y),
                    Side::Y => (&mut xs, Side::X),
                };
                if set.insert(q.clone()) {
                    if xs.len().max(ys.len()) > budget {
                        return Ok(OrbitClosure {
                            xs,
                            ys,
                            bounded: false,
                            split,
                        });
                    }
                    queue.push_back((next, q));
                }
            }
        }
        Ok(OrbitClosure {
            xs,
            ys,
            bounded: true,
            split,
        })
    }

    /// Runs [`Correspondence::orbit_closure`] over `F_{q^m}` for
    /// `m = 1..=max_m`, stopping at the first degree where it is bounded
    /// with every fibre split.
    pub fn orbit_closure_tower(&self, x0: &PointP1, budget: usize, max_m: usize) -> Result<(usize, OrbitClosure)> {
        let base = self.base_field();
        let mut last = None;
        for m in 1..=max_m {
            let field = make_field(base.p(), base.k() * m)?;
            if let PointP1::Finite(a) = x0 {
                if !(base.k() * m).is_multiple_of(a.ctx().k()) {
                    continue;
                }
            }
            let oc = self.orbit_closure(x0, budget, &field)?;
            let done = oc.bounded && oc.split;
            last = Some((m, oc));
            if done {
                break;
            }
        }
        last.ok_or(Error::NotSubfield {
            from: x0.degree(),
            to: base.k() * max_m,
        })
    }

    /// Point counts of the affine model over `F_{q^m}`, `m = 1..=max_m`,
    /// compared with a single-component band `q^m +- 2 g q^{m/2} + c`.
    /// Returns one line per `m` that falls outside, as warnings.
    pub fn irreducibility_warnings(&self, max_m: usize) -> Result<Vec<String>> {
        let base = self.base_field();
        let genus_bound = (self.d.saturating_sub(1)) * (self.e.saturating_sub(1));
        let mut out = Vec::new();
        for m in 1..=max_m {
            let field = make_field(base.p(), base.k() * m)?;
            let Some(q) = field.order() else { break };
            if !field.is_enumerable() {
                break;
            }
            let mut count = 0u64;
            for x in ffield::enumerate(&field)? {
                let (poly, _) = self.fibre_poly(Side::X, &PointP1::Finite(x), &field)?;
                count += poly.distinct_roots()?.len() as u64;
            }
            let slack = 2.0 * genus_bound as f64 * (q as f64).sqrt()
                + (self.d + self.e) as f64 * (self.d * self.e) as f64;
            if (count as f64 - q as f64).abs() > slack {
                out.push(format!(
                    "m={m}: {count} affine points over a field of {q} elements is outside the single-component band"
                ));
            }
        }
        Ok(out)
    }
}

/// Result of [`Correspondence::orbit_closure`].
#[derive(Debug, Clone)]
pub struct OrbitClosure {
    pub xs: BTreeSet<PointP1>,
    pub ys: BTreeSet<PointP1>,
    pub bounded: bool,
    /// Every fibre visited split over the working field.
    pub split: bool,
}

impl OrbitClosure {
    pub fn size(&self) -> usize {
        self.xs.len() + self.ys.len()
    }
}

/// `F(x, y) = u F(y, x)` for a nonzero constant `u`.
pub fn transpose_symmetric(f: &BiPoly) -> bool {
    let t = f.transpose();
    let Some((&key, lead)) = f.terms().last() else {
        return true;
    };
    let other = t.coeff(key.0, key.1);
    if other.is_zero() {
        return false;
    }
    let u = lead * &other.inv().expect("nonzero");
    t.scale(&u) == *f
}

/// Row `n` of Pascal's triangle over `field`.
fn binomial_row(n: usize, field: &Field) -> Vec<FieldElement> {
    let mut row = vec![FieldElement::one(field)];
    for _ in 0..n {
        let mut next = vec![FieldElement::one(field)];
        for w in row.windows(2) {
            next.push(&w[0] + &w[1]);
        }
        next.push(FieldElement::one(field));
        row = next;
    }
    row
}

/// Substitutes `x = x0 + u`, `y = y0 + v` (a `None` centre leaves the
/// variable as is).
fn taylor_shift(f: &BiPoly, x0: Option<&FieldElement>, y0: Option<&FieldElement>) -> BiPoly {
    let field = f.ctx().clone();
    let expand = |n: usize, c: Option<&FieldElement>| -> Vec<(usize, FieldElement)> {
        match c {
            None => vec![(n, FieldElement::one(&field))],
            Some(c0) => {
                let row = binomial_row(n, &field);
                (0..=n)
                    .map(|a| (a, &row[a] * &c0.pow((n - a) as u64)))
                    .collect()
            }
        }
    };
    let mut terms = Vec::new();
    for (&(i, j), c) in f.terms() {
        let xs = expand(i, x0);
        let ys = expand(j, y0);
        for (a, ca) in &xs {
            for (b, cb) in &ys {
                terms.push(((*a, *b), c * &(ca * cb)));
            }
        }
    }
    BiPoly::new(&field, terms)
}

const MAX_PUISEUX_DEPTH: usize = 32;

/// Branches of `g = 0` at the origin as `(ord u, ord v)` pairs, by
/// Newton polygons. `ord v = usize::MAX` marks the branch `v = 0`.
/// Returns `None` when the branches cannot be separated (non-reduced input,
/// wild ramification or excessive depth).
fn branches_at_origin(g: &BiPoly, depth: usize) -> Option<Vec<(usize, usize)>> {
    if depth > MAX_PUISEUX_DEPTH {
        return None;
    }
    let field = g.ctx().clone();
    let p = field.p() as usize;
    let mut out = Vec::new();
    // Factor out v^b.
    let b = g.terms().map(|(&(_, j), _)| j).min()?;
    if b > 1 {
        return None;
    }
    let g = if b == 1 {
        out.push((1, usize::MAX));
        BiPoly::new(&field, g.terms().map(|(&(i, j), c)| ((i, j - 1), c.clone())))
    } else {
        g.clone()
    };
    let axis_v = (0..=g.deg_y()).find(|&j| !g.coeff(0, j).is_zero())?;
    if axis_v == 0 {
        return Some(out);
    }
    let axis_u = (0..=g.deg_x()).find(|&i| !g.coeff(i, 0).is_zero())?;
    let support: Vec<(usize, usize)> = g.terms().map(|(&e, _)| e).collect();

    let (mut ic, mut jc) = (0usize, axis_v);
    while jc > 0 {
        // Next hull vertex: steepest descent, farthest on ties.
        let mut best: Option<(usize, usize)> = None;
        for &(i, j) in &support {
            if i <= ic || j >= jc || i > axis_u {
                continue;
            }
            best = match best {
                None => Some((i, j)),
                Some((bi, bj)) => {
                    // slope (j - jc)/(i - ic) vs (bj - jc)/(bi - ic)
                    let lhs = (jc - j) as i64 * (bi - ic) as i64;
                    let rhs = (jc - bj) as i64 * (i - ic) as i64;
                    if lhs > rhs || (lhs == rhs && i > bi) {
                        Some((i, j))
                    } else {
                        Some((bi, bj))
                    }
                }
            };
        }
        let (ni, nj) = best?;
        let (di, dj) = (ni - ic, jc - nj);
        let gg = gcd(di, dj);
        let (alpha, beta) = (di / gg, dj / gg);
        // Edge polynomial psi(s) = sum_a coef(ic + a alpha, jc - a beta) s^(gg - a).
        let psi_coeffs: Vec<FieldElement> = (0..=gg)
            .map(|k| {
                let a = gg - k;
                g.coeff(ic + a * alpha, jc - a * beta)
            })
            .collect();
        let psi = UniPoly::new(&field, psi_coeffs);
        let s_deg = psi.splitting_degree().ok()?;
        let ext = make_field(field.p(), field.k() * s_deg).ok()?;
        let psi_ext = psi.embed_into(&ext).ok()?;
        for (s0, r) in psi_ext.roots().ok()? {
            if r == 1 {
                out.push((beta, alpha));
                continue;
            }
            if beta % p == 0 {
                return None;
            }
            // w0^beta = s0.
            let mut wpoly = vec![FieldElement::zero(&ext); beta + 1];
            wpoly[0] = -&s0;
            wpoly[beta] = FieldElement::one(&ext);
            let wpoly = UniPoly::new(&ext, wpoly);
            let w_deg = wpoly.splitting_degree().ok()?;
            let ext2 = make_field(field.p(), ext.k() * w_deg).ok()?;
            let w0 = wpoly.embed_into(&ext2).ok()?.distinct_roots().ok()?.into_iter().next()?;
            let child = puiseux_substitute(&g, beta, alpha, &w0).ok()?;
            for (n1, _) in branches_at_origin(&child, depth + 1)? {
                out.push((beta * n1, alpha * n1));
            }
        }
        ic = ni;
        jc = nj;
    }
    Some(out)
}

/// `u1^(-N) g(u1^beta, u1^alpha (w0 + v1))` with `N` the minimal weight.
fn puiseux_substitute(g: &BiPoly, beta: usize, alpha: usize, w0: &FieldElement) -> Result<BiPoly> {
    let field = w0.ctx().clone();
    let g = g.embed_into(&field)?;
    let n = g
        .terms()
        .map(|(&(i, j), _)| i * beta + j * alpha)
        .min()
        .unwrap_or(0);
    let mut terms = Vec::new();
    for (&(i, j), c) in g.terms() {
        let shift = i * beta + j * alpha - n;
        let row = binomial_row(j, &field);
        for (b, coef) in row.iter().enumerate() {
            terms.push(((shift, b), c * &(coef * &w0.pow((j - b) as u64))));
        }
    }
    Ok(BiPoly::new(&field, terms))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
