//! The two-coloured physical graph of a correspondence: blue vertices are
//! points of `X`, red vertices points of `Y`, edges points of the curve.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::correspondence::{Correspondence, EdgePoint, PointP1, Side};
use crate::error::{Error, Result};
use crate::ffield::{self, make_field, Field};
use crate::poly::lcm;
use crate::treegen;

/// A vertex of the physical graph.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Blue(PointP1),
    Red(PointP1),
}

impl Vertex {
    pub fn point(&self) -> &PointP1 {
        match self {
            Vertex::Blue(p) | Vertex::Red(p) => p,
        }
    }

    pub fn side(&self) -> Side {
        match self {
            Vertex::Blue(_) => Side::X,
            Vertex::Red(_) => Side::Y,
        }
    }

    fn embed(&self, f: &Field) -> Result<Vertex> {
        Ok(match self {
            Vertex::Blue(p) => Vertex::Blue(p.embed(f)?),
            Vertex::Red(p) => Vertex::Red(p.embed(f)?),
        })
    }

    fn other_end(&self, z: &EdgePoint) -> Vertex {
        match self {
            Vertex::Blue(_) => Vertex::Red(z.y.clone()),
            Vertex::Red(_) => Vertex::Blue(z.x.clone()),
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Blue(p) => write!(f, "b:{p}"),
            Vertex::Red(p) => write!(f, "r:{p}"),
        }
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `F_{q^m}` for the base field `F_q` of `c`.
pub fn working_field(c: &Correspondence, m: usize) -> Result<Field> {
    if m == 0 {
        return Err(Error::DegreeZero);
    }
    let base = c.base_field();
    make_field(base.p(), base.k() * m)
}

fn edge_key(z: &EdgePoint) -> (PointP1, PointP1) {
    z.key()
}

fn embed_edge(z: &EdgePoint, f: &Field) -> Result<EdgePoint> {
    Ok(EdgePoint {
        x: z.x.embed(f)?,
        y: z.y.embed(f)?,
        ..z.clone()
    })
}

/// JSON form of an edge.
pub fn edge_json(z: &EdgePoint) -> serde_json::Value {
    json!({
        "x": z.x.to_string(),
        "y": z.y.to_string(),
        "mult_f": z.mult_f,
        "mult_g": z.mult_g,
        "branches": z.branches.as_ref().map(|bs| bs.iter().map(|b| [b.ram_f, b.ram_g]).collect::<Vec<_>>()),
    })
}

/// Connected component of the rational physical graph over a fixed field.
#[derive(Debug, Clone)]
pub struct ColoredComponent {
    pub correspondence: String,
    pub field: Field,
    /// Extension degree over the base field of the correspondence.
    pub m: usize,
    pub blue: BTreeSet<PointP1>,
    pub red: BTreeSet<PointP1>,
    /// Sorted.
    pub edges: Vec<EdgePoint>,
    pub seed: EdgePoint,
    /// The edge budget was hit.
    pub truncated: bool,
    /// Untruncated and every fibre met split over the field, so the
    /// component is a whole component of the geometric graph.
    pub closed: bool,
    /// `E - V + 1` with one edge per branch; only when untruncated.
    pub betti: Option<i64>,
}

impl ColoredComponent {
    pub fn vertex_count(&self) -> usize {
        self.blue.len() + self.red.len()
    }

    /// Edges with one per branch.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(EdgePoint::edge_count).sum()
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        self.blue
            .iter()
            .cloned()
            .map(Vertex::Blue)
            .chain(self.red.iter().cloned().map(Vertex::Red))
            .collect()
    }

    /// Betti number from a spanning forest: edges closing a cycle.
    pub fn betti_spanning_tree(&self) -> i64 {
        let verts = self.vertices();
        let index: BTreeMap<&Vertex, usize> = verts.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut uf = UnionFind::new(verts.len());
        let mut extra = 0;
        for z in &self.edges {
            let a = index[&Vertex::Blue(z.x.clone())];
            let b = index[&Vertex::Red(z.y.clone())];
            for _ in 0..z.edge_count() {
                if !uf.union(a, b) {
                    extra += 1;
                }
            }
        }
        extra
    }

    /// Degree with multiplicity: `mult_f` summed at blue vertices, `mult_g`
    /// at red ones.
    pub fn degrees(&self) -> BTreeMap<Vertex, usize> {
        let mut out = BTreeMap::new();
        for z in &self.edges {
            *out.entry(Vertex::Blue(z.x.clone())).or_insert(0) += z.mult_f;
            *out.entry(Vertex::Red(z.y.clone())).or_insert(0) += z.mult_g;
        }
        out
    }

    /// Image of the component under the `q`-power Frobenius, `q` the size of
    /// the base field.
    pub fn frobenius_edges(&self, base_k: usize) -> Vec<(PointP1, PointP1)> {
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|z| (z.x.frobenius(base_k), z.y.frobenius(base_k)))
            .collect();
        v.sort();
        v
    }

    pub fn edge_keys(&self) -> Vec<(PointP1, PointP1)> {
        self.edges.iter().map(edge_key).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "correspondence": self.correspondence,
            "field": field_label(&self.field),
            "m": self.m,
            "seed": [self.seed.x.to_string(), self.seed.y.to_string()],
            "truncated": self.truncated,
            "closed": self.closed,
            "betti": self.betti,
            "blue": self.blue.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "red": self.red.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(edge_json).collect::<Vec<_>>(),
        })
    }

    /// Blue vertices as boxes, red as circles, one line per branch.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph component {\n");
        for b in &self.blue {
            let _ = writeln!(s, "  \"b:{b}\" [shape=box, color=blue, label=\"{b}\"];");
        }
        for r in &self.red {
            let _ = writeln!(s, "  \"r:{r}\" [shape=circle, color=red, label=\"{r}\"];");
        }
        for z in &self.edges {
            for _ in 0..z.edge_count() {
                let _ = writeln!(s, "  \"b:{}\" -- \"r:{}\";", z.x, z.y);
            }
        }
        s.push_str("}\n");
        s
    }
}

/// `"p^k"`.
pub fn field_label(f: &Field) -> String {
    format!("{}^{}", f.p(), f.k())
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// False when already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Breadth-first exploration of the rational component of `seed` over
/// `field`, stopping once `budget` edges are found.
pub fn explore(
    c: &Correspondence,
    seed: (&PointP1, &PointP1),
    field: &Field,
    budget: usize,
) -> Result<ColoredComponent> {
    c.check_field(field)?;
    let seed = c.edge_point(&seed.0.embed(field)?, &seed.1.embed(field)?, field)?;
    let mut edges: BTreeMap<(PointP1, PointP1), EdgePoint> = BTreeMap::new();
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    let mut queue = VecDeque::new();
    edges.insert(seed.key(), seed.clone());
    for v in [Vertex::Blue(seed.x.clone()), Vertex::Red(seed.y.clone())] {
        seen.insert(v.clone());
        queue.push_back(v);
    }
    let mut truncated = budget == 0;
    let mut split = true;
    'bfs: while let Some(v) = queue.pop_front() {
        if truncated {
            break;
        }
        let fib = c.fibre(v.side(), v.point(), field)?;
        split &= fib.is_split();
        for (q, _) in fib.points {
            let key = match &v {
                Vertex::Blue(x) => (x.clone(), q.clone()),
                Vertex::Red(y) => (q.clone(), y.clone()),
            };
            if edges.contains_key(&key) {
                continue;
            }
            if edges.len() >= budget {
                truncated = true;
                break 'bfs;
            }
            let z = c.edge_point(&key.0, &key.1, field)?;
            let w = v.other_end(&z);
            edges.insert(key, z);
            if seen.insert(w.clone()) {
                queue.push_back(w);
            }
        }
    }
    let mut comp = ColoredComponent {
        correspondence: c.name().to_string(),
        m: field.k() / c.base_field().k(),
        field: field.clone(),
        blue: edges.keys().map(|k| k.0.clone()).collect(),
        red: edges.keys().map(|k| k.1.clone()).collect(),
        edges: edges.into_values().collect(),
        seed,
        truncated,
        closed: !truncated && split,
        betti: None,
    };
    if !truncated {
        comp.betti = Some(comp.edge_count() as i64 - comp.vertex_count() as i64 + 1);
    }
    Ok(comp)
}

/// Every rational edge over `field`, sorted. Requires an enumerable field.
pub fn rational_edges(c: &Correspondence, field: &Field) -> Result<Vec<(PointP1, PointP1)>> {
    c.check_field(field)?;
    field.check_enumerable()?;
    let xs: Vec<PointP1> = ffield::enumerate(field)?
        .map(PointP1::Finite)
        .chain(std::iter::once(PointP1::Infinity))
        .collect();
    let per_x: Vec<Vec<(PointP1, PointP1)>> = xs
        .par_iter()
        .map(|x| {
            Ok(c
                .forward(x, field)?
                .into_iter()
                .map(|(y, _)| (x.clone(), y))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<_> = per_x.into_iter().flatten().collect();
    out.sort();
    Ok(out)
}

/// Partition of a sorted edge list into connected components, each sorted,
/// ordered by smallest edge.
pub fn rational_components(edges: &[(PointP1, PointP1)]) -> Vec<Vec<(PointP1, PointP1)>> {
    let mut index: BTreeMap<Vertex, usize> = BTreeMap::new();
    for (x, y) in edges {
        let n = index.len();
        index.entry(Vertex::Blue(x.clone())).or_insert(n);
        let n = index.len();
        index.entry(Vertex::Red(y.clone())).or_insert(n);
    }
    let mut uf = UnionFind::new(index.len());
    for (x, y) in edges {
        uf.union(index[&Vertex::Blue(x.clone())], index[&Vertex::Red(y.clone())]);
    }
    let mut groups: BTreeMap<usize, Vec<(PointP1, PointP1)>> = BTreeMap::new();
    for e in edges {
        let r = uf.find(index[&Vertex::Blue(e.0.clone())]);
        groups.entry(r).or_default().push(e.clone());
    }
    let mut out: Vec<_> = groups.into_values().collect();
    for g in &mut out {
        g.sort();
    }
    out.sort();
    out
}

/// Classification tag of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolcanoTag {
    Tree,
    Volcano,
    MultiCycle,
}

#[derive(Debug, Clone)]
pub struct VolcanoReport {
    pub tag: VolcanoTag,
    pub betti: i64,
    /// Vertex sequence of the unique cycle.
    pub rim: Option<Vec<Vertex>>,
    /// Distance to the rim.
    pub depth: BTreeMap<Vertex, usize>,
}

impl VolcanoReport {
    /// Number of edges on the rim.
    pub fn rim_length(&self) -> Option<usize> {
        self.rim.as_ref().map(Vec::len)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "tag": self.tag,
            "betti": self.betti,
            "rim": self.rim.as_ref().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
            "rim_length": self.rim_length(),
            "depth": self.depth.iter().map(|(v, d)| (v.to_string(), *d)).collect::<BTreeMap<_, _>>(),
        })
    }
}

/// Adjacency with one entry per branch.
fn multigraph(comp: &ColoredComponent) -> (Vec<Vertex>, Vec<Vec<usize>>) {
    let verts = comp.vertices();
    let index: BTreeMap<&Vertex, usize> = verts.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for z in &comp.edges {
        let a = index[&Vertex::Blue(z.x.clone())];
        let b = index[&Vertex::Red(z.y.clone())];
        for _ in 0..z.edge_count() {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    (verts, adj)
}

/// Leaf pruning: the rim is what survives repeated removal of degree-one
/// vertices.
pub fn volcano_classify(comp: &ColoredComponent) -> Result<VolcanoReport> {
    let betti = comp.betti.ok_or(Error::Truncated)?;
    let (verts, adj) = multigraph(comp);
    let n = verts.len();
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| deg[i] <= 1).collect();
    while let Some(i) = stack.pop() {
        if !alive[i] {
            continue;
        }
        alive[i] = false;
        for &j in &adj[i] {
            if alive[j] {
                deg[j] -= 1;
                if deg[j] == 1 {
                    stack.push(j);
                }
            }
        }
    }
    let tag = match betti {
        0 => VolcanoTag::Tree,
        1 => VolcanoTag::Volcano,
        _ => VolcanoTag::MultiCycle,
    };
    let mut report = VolcanoReport {
        tag,
        betti,
        rim: None,
        depth: BTreeMap::new(),
    };
    if tag != VolcanoTag::Volcano {
        return Ok(report);
    }
    // Walk the cycle from its smallest vertex.
    let start = (0..n).find(|&i| alive[i]).expect("a cycle survives pruning");
    let mut rim = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    loop {
        let nexts = adj[cur].iter().copied().filter(|&j| alive[j]);
        let next = if prev == usize::MAX {
            nexts.min().expect("cycle vertex has degree two")
        } else {
            // A doubled edge is a 2-cycle: go back along the other copy.
            let others: Vec<usize> = adj[cur].iter().copied().filter(|&j| alive[j]).collect();
            let mut rest = others.clone();
            if let Some(pos) = rest.iter().position(|&j| j == prev) {
                rest.remove(pos);
            }
            rest[0]
        };
        if next == start {
            break;
        }
        rim.push(next);
        prev = cur;
        cur = next;
    }
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &i in &rim {
        depth[i] = 0;
        queue.push_back(i);
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if depth[j] == usize::MAX {
                depth[j] = depth[i] + 1;
                queue.push_back(j);
            }
        }
    }
    report.rim = Some(rim.iter().map(|&i| verts[i].clone()).collect());
    report.depth = (0..n).map(|i| (verts[i].clone(), depth[i])).collect();
    Ok(report)
}

/// Why a geometric search stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EdgeBudget,
    FieldBudget,
}

pub(crate) struct GeoConfig {
    /// Vertices at this depth are not expanded.
    pub max_depth: Option<usize>,
    /// Largest absolute extension degree over `F_p`.
    pub field_cap: usize,
    pub edge_budget: usize,
    /// Leave a vertex unexpanded, rather than stopping, when its fibre needs
    /// a field beyond the cap.
    pub skip_unsplittable: bool,
}

/// Geometric points reached by a search, over the final field.
pub(crate) struct GeoResult {
    pub field: Field,
    pub edges: BTreeMap<(PointP1, PointP1), EdgePoint>,
    pub depth: BTreeMap<Vertex, usize>,
    pub stop: Option<StopReason>,
    /// Some vertex within range was left unexpanded.
    pub incomplete: bool,
}

/// Breadth-first search over geometric points, extending the field whenever
/// a fibre does not split.
pub(crate) fn geo_search(
    c: &Correspondence,
    field: &Field,
    seeds: &[(PointP1, PointP1)],
    start: &[Vertex],
    cfg: &GeoConfig,
) -> Result<GeoResult> {
    c.check_field(field)?;
    let mut res = GeoResult {
        field: field.clone(),
        edges: BTreeMap::new(),
        depth: BTreeMap::new(),
        stop: None,
        incomplete: false,
    };
    let mut queue: VecDeque<Vertex> = VecDeque::new();
    for (x, y) in seeds {
        let z = c.edge_point(&x.embed(field)?, &y.embed(field)?, field)?;
        for v in [Vertex::Blue(z.x.clone()), Vertex::Red(z.y.clone())] {
            if !res.depth.contains_key(&v) {
                res.depth.insert(v.clone(), 0);
                queue.push_back(v);
            }
        }
        res.edges.insert(z.key(), z);
    }
    for v in start {
        let v = v.embed(field)?;
        if !res.depth.contains_key(&v) {
            res.depth.insert(v.clone(), 0);
            queue.push_back(v);
        }
    }
    if res.edges.len() > cfg.edge_budget {
        res.stop = Some(StopReason::EdgeBudget);
        return Ok(res);
    }
    while let Some(v) = queue.pop_front() {
        let dv = res.depth[&v];
        if cfg.max_depth.is_some_and(|m| dv >= m) {
            continue;
        }
        let mut v = v;
        let mut fib = c.fibre(v.side(), v.point(), &res.field)?;
        if !fib.is_split() {
            let (poly, _) = c.fibre_poly(v.side(), v.point(), &res.field)?;
            let k = res.field.k() * poly.splitting_degree()?;
            if k > cfg.field_cap {
                if cfg.skip_unsplittable {
                    res.incomplete = true;
                    continue;
                }
                res.stop = Some(StopReason::FieldBudget);
                return Ok(res);
            }
            let bigger = make_field(field.p(), k)?;
            lift(&mut res, &mut queue, &bigger)?;
            v = v.embed(&bigger)?;
            fib = c.fibre(v.side(), v.point(), &res.field)?;
            debug_assert!(fib.is_split());
        }
        for (q, _) in fib.points {
            let key = match &v {
                Vertex::Blue(x) => (x.clone(), q.clone()),
                Vertex::Red(y) => (q.clone(), y.clone()),
            };
            if res.edges.contains_key(&key) {
                continue;
            }
            if res.edges.len() >= cfg.edge_budget {
                res.stop = Some(StopReason::EdgeBudget);
                return Ok(res);
            }
            let z = c.edge_point(&key.0, &key.1, &res.field)?;
            let w = v.other_end(&z);
            res.edges.insert(key, z);
            if !res.depth.contains_key(&w) {
                res.depth.insert(w.clone(), dv + 1);
                queue.push_back(w);
            }
        }
    }
    Ok(res)
}

fn lift(res: &mut GeoResult, queue: &mut VecDeque<Vertex>, bigger: &Field) -> Result<()> {
    res.edges = std::mem::take(&mut res.edges)
        .into_values()
        .map(|z| embed_edge(&z, bigger).map(|z| (z.key(), z)))
        .collect::<Result<_>>()?;
    res.depth = std::mem::take(&mut res.depth)
        .into_iter()
        .map(|(v, d)| v.embed(bigger).map(|v| (v, d)))
        .collect::<Result<_>>()?;
    for v in queue.iter_mut() {
        *v = v.embed(bigger)?;
    }
    res.field = bigger.clone();
    Ok(())
}

/// Default growth allowance for geometric searches: `lcm(1..=max(d, e))`.
pub fn default_field_growth(c: &Correspondence) -> usize {
    (1..=c.d().max(c.e())).fold(1, lcm)
}

/// Outcome of [`classify_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "class", content = "radius")]
pub enum PointClass {
    /// The geometric component is finite.
    SpecialFinite,
    /// A cycle lies within the radius.
    SpecialCycle,
    /// The ball is a tree, but an orbifold point folds it below full degree.
    SpecialFolded,
    /// The ball is a biregular tree ball of this radius.
    GenericUpTo(usize),
    /// The ball could not be completed within the field cap.
    Inconclusive,
}

/// Options shared by [`classify_point`] and [`stats`].
#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub radius: usize,
    pub budget: usize,
    /// Extension allowance relative to the working field.
    pub field_growth: Option<usize>,
}

/// Bounded-radius certificate of special or generic behaviour at an edge.
pub fn classify_point(
    c: &Correspondence,
    seed: (&PointP1, &PointP1),
    field: &Field,
    opts: &ClassifyOptions,
) -> Result<PointClass> {
    classify_inner(c, seed, field, opts, None)
}

fn check_budget(c: &Correspondence, opts: &ClassifyOptions) -> Result<()> {
    let needed = treegen::ball_edge_count(c.d(), c.e(), opts.radius, treegen::Color::Blue);
    if (opts.budget as u128) < needed {
        return Err(Error::BudgetTooSmall {
            budget: opts.budget,
            needed: needed.min(usize::MAX as u128) as usize,
            radius: opts.radius,
        });
    }
    Ok(())
}

fn field_cap(c: &Correspondence, field: &Field, growth: Option<usize>) -> usize {
    field.k() * growth.unwrap_or_else(|| default_field_growth(c))
}

fn ramified(z: &EdgePoint) -> Error {
    Error::UnsupportedRamified(z.x.to_string(), z.y.to_string())
}

/// `finite` carries a known answer for the closure test.
fn classify_inner(
    c: &Correspondence,
    seed: (&PointP1, &PointP1),
    field: &Field,
    opts: &ClassifyOptions,
    finite: Option<bool>,
) -> Result<PointClass> {
    check_budget(c, opts)?;
    let z = c.edge_point(&seed.0.embed(field)?, &seed.1.embed(field)?, field)?;
    if !c.is_etale_point(&z) {
        return Err(ramified(&z));
    }
    let cap = field_cap(c, field, opts.field_growth);
    let finite = match finite {
        Some(f) => f,
        None => {
            let res = geo_search(
                c,
                field,
                &[z.key()],
                &[],
                &GeoConfig {
                    max_depth: None,
                    field_cap: cap,
                    edge_budget: opts.budget,
                    skip_unsplittable: false,
                },
            )?;
            if let Some(e) = res.edges.values().find(|e| !c.is_etale_point(e)) {
                return Err(ramified(e));
            }
            res.stop.is_none()
        }
    };
    if finite {
        return Ok(PointClass::SpecialFinite);
    }
    if opts.radius == 0 {
        return Ok(PointClass::GenericUpTo(0));
    }
    let res = geo_search(
        c,
        field,
        &[],
        &[Vertex::Blue(z.x.clone())],
        &GeoConfig {
            max_depth: Some(opts.radius),
            field_cap: cap,
            edge_budget: opts.budget,
            skip_unsplittable: true,
        },
    )?;
    if let Some(e) = res.edges.values().find(|e| !c.is_etale_point(e)) {
        return Err(ramified(e));
    }
    let edges: usize = res.edges.values().map(EdgePoint::edge_count).sum();
    if edges >= res.depth.len() {
        return Ok(PointClass::SpecialCycle);
    }
    if res.incomplete || res.stop.is_some() {
        return Ok(PointClass::Inconclusive);
    }
    // Full degree by branch count at every expanded vertex.
    let mut branch_deg: BTreeMap<&Vertex, usize> = BTreeMap::new();
    let blue_red: Vec<(Vertex, Vertex, usize)> = res
        .edges
        .values()
        .map(|e| (Vertex::Blue(e.x.clone()), Vertex::Red(e.y.clone()), e.edge_count()))
        .collect();
    for (b, r, n) in &blue_red {
        *branch_deg.entry(b).or_insert(0) += n;
        *branch_deg.entry(r).or_insert(0) += n;
    }
    let folded = res.depth.iter().any(|(v, &dv)| {
        dv < opts.radius && {
            let want = match v {
                Vertex::Blue(_) => c.d(),
                Vertex::Red(_) => c.e(),
            };
            branch_deg.get(v).copied().unwrap_or(0) != want
        }
    });
    Ok(if folded {
        PointClass::SpecialFolded
    } else {
        PointClass::GenericUpTo(opts.radius)
    })
}

/// Summary of [`stats`].
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct StatsReport {
    pub correspondence: String,
    pub field: String,
    pub radius: usize,
    pub edges: usize,
    pub special_finite: usize,
    pub special_cycle: usize,
    pub special_folded: usize,
    pub generic: usize,
    pub inconclusive: usize,
    /// Edges where the correspondence is not étale.
    pub ramified: usize,
    pub fraction_generic: f64,
    /// Rim length (edges) to number of volcano components.
    pub rim_lengths: BTreeMap<usize, usize>,
    /// Component size (edges) to number of components.
    pub component_sizes: BTreeMap<usize, usize>,
}

/// Classification counts over every rational edge of `field`.
pub fn stats(c: &Correspondence, field: &Field, opts: &ClassifyOptions) -> Result<StatsReport> {
    check_budget(c, opts)?;
    let edges = rational_edges(c, field)?;
    let comps = rational_components(&edges);
    let cap = field_cap(c, field, opts.field_growth);
    struct CompResult {
        size: usize,
        rim: Option<usize>,
        classes: Vec<Option<PointClass>>,
    }
    let results: Vec<CompResult> = comps
        .par_iter()
        .map(|comp| -> Result<CompResult> {
            let explored = explore(c, (&comp[0].0, &comp[0].1), field, usize::MAX)?;
            let rim = volcano_classify(&explored)?.rim_length();
            let closure = geo_search(
                c,
                field,
                &[comp[0].clone()],
                &[],
                &GeoConfig {
                    max_depth: None,
                    field_cap: cap,
                    edge_budget: opts.budget,
                    skip_unsplittable: false,
                },
            )?;
            let finite = closure.stop.is_none();
            let closure_ramified = closure.edges.values().any(|e| !c.is_etale_point(e));
            let classes = comp
                .iter()
                .map(|(x, y)| {
                    if finite && closure_ramified {
                        return Ok(None);
                    }
                    match classify_inner(c, (x, y), field, opts, Some(finite)) {
                        Ok(k) => Ok(Some(k)),
                        Err(Error::UnsupportedRamified(..)) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<_>>()?;
            Ok(CompResult {
                size: comp.len(),
                rim,
                classes,
            })
        })
        .collect::<Result<_>>()?;
    let mut r = StatsReport {
        correspondence: c.name().to_string(),
        field: field_label(field),
        radius: opts.radius,
        edges: edges.len(),
        ..Default::default()
    };
    for cr in results {
        *r.component_sizes.entry(cr.size).or_insert(0) += 1;
        if let Some(l) = cr.rim {
            *r.rim_lengths.entry(l).or_insert(0) += 1;
        }
        for k in cr.classes {
            match k {
                None => r.ramified += 1,
                Some(PointClass::SpecialFinite) => r.special_finite += 1,
                Some(PointClass::SpecialCycle) => r.special_cycle += 1,
                Some(PointClass::SpecialFolded) => r.special_folded += 1,
                Some(PointClass::GenericUpTo(_)) => r.generic += 1,
                Some(PointClass::Inconclusive) => r.inconclusive += 1,
            }
        }
    }
    if r.edges > 0 {
        r.fraction_generic = r.generic as f64 / r.edges as f64;
    }
    Ok(r)
}

/// Directed multigraph of a self-correspondence: an arc `x -> y` per branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedView {
    pub vertices: Vec<PointP1>,
    /// `(from, to, multiplicity)`, sorted.
    pub arcs: Vec<(PointP1, PointP1, usize)>,
}

/// Simple directed cycles of bounded length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub max_length: usize,
    /// Length to number of simple cycles.
    pub by_length: BTreeMap<usize, usize>,
    /// Enumeration stopped at the cap.
    pub truncated: bool,
}

const CYCLE_ENUM_CAP: usize = 1_000_000;

impl DirectedView {
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = &'a EdgePoint>) -> Self {
        let mut verts = BTreeSet::new();
        let mut arcs = Vec::new();
        for z in edges {
            verts.insert(z.x.clone());
            verts.insert(z.y.clone());
            arcs.push((z.x.clone(), z.y.clone(), z.edge_count()));
        }
        arcs.sort();
        DirectedView {
            vertices: verts.into_iter().collect(),
            arcs,
        }
    }

    /// Simple cycles up to `max_length`, counted once per vertex cycle.
    pub fn cycles(&self, max_length: usize) -> CycleReport {
        let index: BTreeMap<&PointP1, usize> = self.vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let n = self.vertices.len();
        let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (a, b, _) in &self.arcs {
            out[index[a]].insert(index[b]);
        }
        let out: Vec<Vec<usize>> = out.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut report = CycleReport {
            max_length,
            by_length: BTreeMap::new(),
            truncated: false,
        };
        let mut found = 0usize;
        let mut on_path = vec![false; n];
        for s in 0..n {
            // Cycles whose smallest vertex is s.
            let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
            on_path[s] = true;
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if *i < out[v].len() {
                    let w = out[v][*i];
                    *i += 1;
                    if w == s {
                        *report.by_length.entry(stack.len()).or_insert(0) += 1;
                        found += 1;
                        if found >= CYCLE_ENUM_CAP {
                            report.truncated = true;
                            return report;
                        }
                    } else if w > s && !on_path[w] && stack.len() < max_length {
                        on_path[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    on_path[v] = false;
                    stack.pop();
                }
            }
        }
        report
    }

    /// Out- and in-degree of each vertex with multiplicity.
    pub fn degrees(&self) -> BTreeMap<PointP1, (usize, usize)> {
        let mut d: BTreeMap<PointP1, (usize, usize)> =
            self.vertices.iter().map(|v| (v.clone(), (0, 0))).collect();
        for (a, b, m) in &self.arcs {
            d.get_mut(a).expect("vertex").0 += m;
            d.get_mut(b).expect("vertex").1 += m;
        }
        d
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "vertices": self.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "arcs": self.arcs.iter().map(|(a, b, m)| json!([a.to_string(), b.to_string(), m])).collect::<Vec<_>>(),
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph view {\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  \"{v}\";");
        }
        for (a, b, m) in &self.arcs {
            for _ in 0..*m {
                let _ = writeln!(s, "  \"{a}\" -> \"{b}\";");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Directed view of a component; needs `d = e`.
pub fn directed_view(c: &Correspondence, comp: &ColoredComponent) -> Result<DirectedView> {
    if c.d() != c.e() {
        return Err(Error::NotSelfCorrespondence);
    }
    Ok(DirectedView::from_edges(&comp.edges))
}
