//! Clumps: finite sets of curve points closed under both fibre maps.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde_json::json;

use crate::correspondence::{Correspondence, EdgePoint, PointP1, Side};
use crate::error::{Error, Result};
use crate::ffield::{self, make_field, Field};
use crate::physgraph::{
    default_field_growth, edge_json, field_label, geo_search, rational_components, rational_edges,
    DirectedView, GeoConfig, StopReason,
};
use crate::poly::lcm;

/// A bounded clump over its field of definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clump {
    pub correspondence: String,
    /// Smallest field containing the base field and every point.
    pub field: Field,
    /// Degree of `field` over the base field.
    pub m: usize,
    /// Sorted.
    pub edges: Vec<EdgePoint>,
    pub etale: bool,
    pub x_image: Vec<PointP1>,
    pub y_image: Vec<PointP1>,
}

impl Clump {
    fn from_edges(c: &Correspondence, edges: Vec<EdgePoint>, field: &Field) -> Result<Clump> {
        let base_k = c.base_field().k();
        let k = edges
            .iter()
            .flat_map(|z| [z.x.degree(), z.y.degree()])
            .fold(base_k, lcm);
        let min_field = make_field(field.p(), k)?;
        let mut edges: Vec<EdgePoint> = edges
            .into_iter()
            .map(|z| {
                Ok(EdgePoint {
                    x: z.x.restrict(&min_field)?.expect("within field of definition"),
                    y: z.y.restrict(&min_field)?.expect("within field of definition"),
                    ..z
                })
            })
            .collect::<Result<_>>()?;
        edges.sort();
        let etale = edges.iter().all(|z| c.is_etale_point(z));
        let x_image: BTreeSet<PointP1> = edges.iter().map(|z| z.x.clone()).collect();
        let y_image: BTreeSet<PointP1> = edges.iter().map(|z| z.y.clone()).collect();
        Ok(Clump {
            correspondence: c.name().to_string(),
            m: k / base_k,
            field: min_field,
            edges,
            etale,
            x_image: x_image.into_iter().collect(),
            y_image: y_image.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `x_image = y_image`.
    pub fn is_symmetric(&self) -> bool {
        self.x_image == self.y_image
    }

    pub fn keys(&self) -> Vec<(PointP1, PointP1)> {
        self.edges.iter().map(EdgePoint::key).collect()
    }

    /// Edge keys embedded into `field`, sorted.
    pub fn keys_in(&self, field: &Field) -> Result<Vec<(PointP1, PointP1)>> {
        let mut v = self
            .edges
            .iter()
            .map(|z| Ok((z.x.embed(field)?, z.y.embed(field)?)))
            .collect::<Result<Vec<_>>>()?;
        v.sort();
        Ok(v)
    }

    /// Invariance under the Frobenius of the base field.
    pub fn is_frobenius_stable(&self, base_k: usize) -> bool {
        let mut img: Vec<_> = self
            .edges
            .iter()
            .map(|z| (z.x.frobenius(base_k), z.y.frobenius(base_k)))
            .collect();
        img.sort();
        img == self.keys()
    }

    /// Canonical text form used for deduplication.
    pub fn canonical_key(&self) -> String {
        let mut s = field_label(&self.field);
        for z in &self.edges {
            s.push_str(&format!(";{},{}", z.x, z.y));
        }
        s
    }

    pub fn to_json(&self, c: &Correspondence) -> serde_json::Value {
        let cert = is_clump(c, &self.keys(), &self.field, true).ok();
        json!({
            "correspondence": self.correspondence,
            "field": field_label(&self.field),
            "m": self.m,
            "size": self.edges.len(),
            "etale": self.etale,
            "symmetric": self.is_symmetric(),
            "x_image": self.x_image.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "y_image": self.y_image.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "regular": cert.as_ref().and_then(|c| c.regular),
            "edges": self.edges.iter().map(edge_json).collect::<Vec<_>>(),
        })
    }
}

/// Reads the field and edge list back from [`Clump::to_json`].
pub fn parse_clump_report(v: &serde_json::Value) -> Result<(Field, Vec<(PointP1, PointP1)>)> {
    let bad = |what: &str| Error::Parse(format!("clump report: {what}"));
    let label = v["field"].as_str().ok_or_else(|| bad("field"))?;
    let (p, k) = label.split_once('^').ok_or_else(|| bad("field"))?;
    let field = make_field(
        p.parse().map_err(|_| bad("field"))?,
        k.parse().map_err(|_| bad("field"))?,
    )?;
    let edges = v["edges"]
        .as_array()
        .ok_or_else(|| bad("edges"))?
        .iter()
        .map(|e| {
            let x = e["x"].as_str().ok_or_else(|| bad("edge x"))?;
            let y = e["y"].as_str().ok_or_else(|| bad("edge y"))?;
            Ok((PointP1::parse_in(&field, x)?, PointP1::parse_in(&field, y)?))
        })
        .collect::<Result<_>>()?;
    Ok((field, edges))
}

/// Result of [`closure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureOutcome {
    Bounded(Clump),
    Unbounded {
        reason: StopReason,
        /// Edges found before stopping.
        explored: usize,
        /// Absolute degree of the field reached.
        field_degree: usize,
    },
}

impl ClosureOutcome {
    pub fn clump(&self) -> Option<&Clump> {
        match self {
            ClosureOutcome::Bounded(c) => Some(c),
            ClosureOutcome::Unbounded { .. } => None,
        }
    }
}

/// Least clump containing `seeds`, or the reason the search gave up.
///
/// Fibres are split by extending `field` lazily, up to `field_growth` times
/// its degree (default `lcm(1..=max(d, e))`).
pub fn closure(
    c: &Correspondence,
    seeds: &[(PointP1, PointP1)],
    field: &Field,
    field_growth: Option<usize>,
    budget: usize,
) -> Result<ClosureOutcome> {
    let growth = field_growth.unwrap_or_else(|| default_field_growth(c));
    let res = geo_search(
        c,
        field,
        seeds,
        &[],
        &GeoConfig {
            max_depth: None,
            field_cap: field.k() * growth,
            edge_budget: budget,
            skip_unsplittable: false,
        },
    )?;
    match res.stop {
        Some(reason) => Ok(ClosureOutcome::Unbounded {
            reason,
            explored: res.edges.len(),
            field_degree: res.field.k(),
        }),
        None => Ok(ClosureOutcome::Bounded(Clump::from_edges(
            c,
            res.edges.into_values().collect(),
            &res.field,
        )?)),
    }
}

/// Result of [`is_clump`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ClumpCertificate {
    pub is_clump: bool,
    /// Every edge is étale in both directions; only when requested.
    pub etale: Option<bool>,
    /// Every image point carries exactly `d` (resp. `e`) edges of the set,
    /// with multiplicity; only when requested.
    pub regular: Option<bool>,
    /// Geometric fibre points missing from the set.
    pub missing: Vec<String>,
}

/// Checks both fibre equalities by expanding every fibre over its splitting
/// field.
pub fn is_clump(
    c: &Correspondence,
    set: &[(PointP1, PointP1)],
    field: &Field,
    check_etale: bool,
) -> Result<ClumpCertificate> {
    c.check_field(field)?;
    let embedded: Vec<(PointP1, PointP1)> = set
        .iter()
        .map(|(x, y)| Ok((x.embed(field)?, y.embed(field)?)))
        .collect::<Result<_>>()?;
    let edges: BTreeMap<(PointP1, PointP1), EdgePoint> = embedded
        .iter()
        .map(|(x, y)| c.edge_point(x, y, field).map(|z| (z.key(), z)))
        .collect::<Result<_>>()?;
    let mut missing = Vec::new();
    let mut mult_sum: BTreeMap<(Side, PointP1), usize> = BTreeMap::new();
    for z in edges.values() {
        *mult_sum.entry((Side::X, z.x.clone())).or_insert(0) += z.mult_f;
        *mult_sum.entry((Side::Y, z.y.clone())).or_insert(0) += z.mult_g;
    }
    for (side, pt) in mult_sum.keys() {
        let (poly, drop) = c.fibre_poly(*side, pt, field)?;
        let mut fibre: Vec<PointP1> = Vec::new();
        if drop > 0 {
            fibre.push(PointP1::Infinity);
        }
        if poly.degree().unwrap_or(0) > 0 {
            let s = poly.splitting_degree()?;
            let ext = make_field(field.p(), field.k() * s)?;
            for (r, _) in poly.embed_into(&ext)?.roots()? {
                match ffield::restrict(&r, field)? {
                    Some(r) => fibre.push(PointP1::Finite(r)),
                    None => missing.push(format!("{side:?} {pt}: {r}")),
                }
            }
        }
        for q in fibre {
            let key = match side {
                Side::X => (pt.clone(), q),
                Side::Y => (q, pt.clone()),
            };
            if !edges.contains_key(&key) {
                missing.push(format!("({}, {})", key.0, key.1));
            }
        }
    }
    missing.sort();
    missing.dedup();
    let (etale, regular) = if check_etale {
        let etale = edges.values().all(|z| c.is_etale_point(z));
        let regular = mult_sum.iter().all(|((side, _), &m)| m == c.fibre_degree(*side));
        (Some(etale), Some(regular))
    } else {
        (None, None)
    };
    Ok(ClumpCertificate {
        is_clump: missing.is_empty(),
        etale,
        regular,
        missing,
    })
}

/// Settings for [`find_all_clumps`].
#[derive(Debug, Clone, Copy)]
pub struct ClumpSearchOptions {
    pub budget_per_seed: usize,
    pub size_cap: usize,
    pub field_growth: Option<usize>,
    /// Assert at most one étale clump.
    pub no_core: bool,
}

impl ClumpSearchOptions {
    /// `size_cap = 10 max(d, e) (supersingular_count + 1)`.
    pub fn default_for(c: &Correspondence, supersingular_count: usize) -> Self {
        let size_cap = 10 * c.d().max(c.e()) * (supersingular_count + 1);
        ClumpSearchOptions {
            budget_per_seed: size_cap,
            size_cap,
            field_growth: None,
            no_core: c.core() == crate::correspondence::CoreFlag::NoCore,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClumpSearch {
    pub correspondence: String,
    pub field: Field,
    pub clumps: Vec<Clump>,
    /// Rational edges over the working field.
    pub edges: usize,
    /// One seed per rational component.
    pub seeds: usize,
    pub unbounded_edge_budget: usize,
    pub unbounded_field_budget: usize,
    /// Set when the no-core hypothesis was asserted and more than one étale
    /// clump appeared.
    pub falsification: Option<String>,
}

impl ClumpSearch {
    pub fn etale_clumps(&self) -> impl Iterator<Item = &Clump> {
        self.clumps.iter().filter(|k| k.etale)
    }

    pub fn to_json(&self, c: &Correspondence) -> serde_json::Value {
        json!({
            "correspondence": self.correspondence,
            "field": field_label(&self.field),
            "edges": self.edges,
            "seeds": self.seeds,
            "unbounded": {
                "edge_budget": self.unbounded_edge_budget,
                "field_budget": self.unbounded_field_budget,
            },
            "clump_count": self.clumps.len(),
            "etale_clump_count": self.etale_clumps().count(),
            "falsification": self.falsification,
            "clumps": self.clumps.iter().map(|k| k.to_json(c)).collect::<Vec<_>>(),
        })
    }
}

/// Closure from one edge of every rational component over `field`.
///
/// The least clump containing an edge is its geometric component, and every
/// edge of a rational component lies in the same one, so one seed per
/// rational component covers every edge.
pub fn find_all_clumps(c: &Correspondence, field: &Field, opts: &ClumpSearchOptions) -> Result<ClumpSearch> {
    let edges = rational_edges(c, field)?;
    let comps = rational_components(&edges);
    let budget = opts.budget_per_seed.min(opts.size_cap);
    let outcomes: Vec<ClosureOutcome> = comps
        .par_iter()
        .map(|comp| closure(c, &comp[..1], field, opts.field_growth, budget))
        .collect::<Result<_>>()?;
    let mut seen = BTreeSet::new();
    let mut search = ClumpSearch {
        correspondence: c.name().to_string(),
        field: field.clone(),
        clumps: Vec::new(),
        edges: edges.len(),
        seeds: comps.len(),
        unbounded_edge_budget: 0,
        unbounded_field_budget: 0,
        falsification: None,
    };
    for o in outcomes {
        match o {
            ClosureOutcome::Bounded(k) => {
                if k.len() <= opts.size_cap && seen.insert(k.canonical_key()) {
                    search.clumps.push(k);
                }
            }
            ClosureOutcome::Unbounded {
                reason: StopReason::EdgeBudget,
                ..
            } => search.unbounded_edge_budget += 1,
            ClosureOutcome::Unbounded { .. } => search.unbounded_field_budget += 1,
        }
    }
    let etale = search.etale_clumps().count();
    if opts.no_core && etale > 1 {
        search.falsification = Some(format!(
            "{etale} étale clumps for {} over F_{}; at most one is possible without a core",
            c.name(),
            field_label(field)
        ));
    }
    Ok(search)
}

/// Result of [`regular_subgraph_view`].
#[derive(Debug, Clone)]
pub struct RegularView {
    pub view: DirectedView,
    pub degree: usize,
    /// Out- and in-degree equal `degree` at every vertex.
    pub regular: bool,
}

/// The clump as a directed graph on its image, with a degree audit.
pub fn regular_subgraph_view(c: &Correspondence, clump: &Clump) -> Result<RegularView> {
    if c.d() != c.e() {
        return Err(Error::TypeMismatch(format!("type ({}, {}) is not (d, d)", c.d(), c.e())));
    }
    if !clump.is_symmetric() {
        return Err(Error::NotSymmetricClump);
    }
    let mut view = DirectedView::from_edges(&clump.edges);
    // Multiplicity on each arc, as the fibre multiplicity.
    view.arcs = clump
        .edges
        .iter()
        .map(|z| (z.x.clone(), z.y.clone(), z.mult_f))
        .collect();
    view.arcs.sort();
    let d = c.d();
    let mut out: BTreeMap<&PointP1, usize> = BTreeMap::new();
    let mut inn: BTreeMap<&PointP1, usize> = BTreeMap::new();
    for z in &clump.edges {
        *out.entry(&z.x).or_insert(0) += z.mult_f;
        *inn.entry(&z.y).or_insert(0) += z.mult_g;
    }
    let regular = clump.etale
        && view
            .vertices
            .iter()
            .all(|v| out.get(v) == Some(&d) && inn.get(v) == Some(&d));
    Ok(RegularView {
        view,
        degree: d,
        regular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellcurve::supersingular_set;
    use crate::physgraph::working_field;
    use crate::ffield::FieldElement;

    fn load(name: &str, text: &str, p: u64) -> Correspondence {
        Correspondence::load(name, text, Some(p)).unwrap()
    }

    fn pt(f: &Field, n: u64) -> PointP1 {
        PointP1::Finite(FieldElement::from_u64(f, n))
    }

    const SQ: &str = include_str!("../data/sq.bipoly");
    const PHI2: &str = include_str!("../data/phi2.bipoly");
    const IDENTITY: &str = include_str!("../data/identity.bipoly");

    #[test]
    fn square_closure() {
        let c = load("sq", SQ, 7);
        let f = working_field(&c, 1).unwrap();
        let out = closure(&c, &[(pt(&f, 3), pt(&f, 4))], &f, None, 100).unwrap();
        let k = out.clump().unwrap();
        let want: Vec<_> = [(3, 3), (3, 4), (4, 3), (4, 4)]
            .iter()
            .map(|&(a, b)| (pt(&f, a), pt(&f, b)))
            .collect();
        assert_eq!(k.keys(), want);
        assert!(k.etale);
        let cert = is_clump(&c, &want, &f, true).unwrap();
        assert!(cert.is_clump && cert.etale == Some(true) && cert.regular == Some(true));
        let one = is_clump(&c, &want[1..2], &f, false).unwrap();
        assert!(!one.is_clump);
        assert!(one.missing.contains(&format!("({}, {})", pt(&f, 3), pt(&f, 3))));
        let empty = is_clump(&c, &[], &f, true).unwrap();
        assert!(empty.is_clump && empty.etale == Some(true));
    }

    #[test]
    fn square_has_several_clumps() {
        let c = load("sq", SQ, 7);
        let f = working_field(&c, 1).unwrap();
        let opts = ClumpSearchOptions {
            budget_per_seed: 100,
            size_cap: 100,
            field_growth: None,
            no_core: false,
        };
        let s = find_all_clumps(&c, &f, &opts).unwrap();
        assert!(s.etale_clumps().count() > 1);
        assert!(s.falsification.is_none());
        let s = find_all_clumps(&c, &f, &ClumpSearchOptions { no_core: true, ..opts }).unwrap();
        assert!(s.falsification.is_some());
    }

    #[test]
    fn identity_clump_is_a_loop() {
        let c = load("id", IDENTITY, 11);
        let f = working_field(&c, 1).unwrap();
        let k = closure(&c, &[(pt(&f, 5), pt(&f, 5))], &f, None, 10).unwrap();
        let k = k.clump().unwrap();
        assert_eq!(k.len(), 1);
        let v = regular_subgraph_view(&c, k).unwrap();
        assert!(v.regular);
        assert_eq!(v.view.arcs, vec![(pt(&f, 5), pt(&f, 5), 1)]);
    }

    #[test]
    fn phi2_mod_11() {
        let c = load("phi2", PHI2, 11);
        let f = working_field(&c, 2).unwrap();
        let ss = supersingular_set(11).unwrap();
        let opts = ClumpSearchOptions::default_for(&c, ss.count());
        let s = find_all_clumps(&c, &f, &opts).unwrap();
        let etale: Vec<_> = s.etale_clumps().collect();
        assert_eq!(etale.len(), 1);
        let xs = etale[0].x_image.clone();
        let want: Vec<PointP1> = ss.js.iter().map(|j| PointP1::Finite(j.clone())).collect();
        let got: Vec<PointP1> = xs.iter().map(|x| x.embed(&f).unwrap()).collect::<BTreeSet<_>>().into_iter().collect();
        assert_eq!(got, want);
        assert!(etale[0].is_frobenius_stable(1));
        let v = regular_subgraph_view(&c, etale[0]).unwrap();
        assert!(v.regular);
        let report = etale[0].to_json(&c);
        let (rf, redges) = parse_clump_report(&report).unwrap();
        assert!(is_clump(&c, &redges, &rf, true).unwrap().is_clump);
    }
}
