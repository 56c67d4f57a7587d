//! Biregular tree balls, covering certificates for physical components, and
//! an arc-transitivity checker for small finite graphs.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use serde_json::json;

use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::physgraph::{ColoredComponent, UnionFind, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
}

impl Color {
    pub fn other(self) -> Color {
        match self {
            Color::Blue => Color::Red,
            Color::Red => Color::Blue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeVertex {
    pub color: Color,
    pub parent: Option<usize>,
    pub depth: usize,
}

/// Ball of radius `radius` in the `(d, e)`-biregular tree, blue vertices of
/// degree `d`, red of degree `e`. Vertices are numbered breadth first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeBall {
    pub d: usize,
    pub e: usize,
    pub radius: usize,
    pub root_color: Color,
    pub vertices: Vec<TreeVertex>,
    pub edges: Vec<(usize, usize)>,
}

impl TreeBall {
    /// Sizes of the spheres around the root.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.radius + 1];
        for v in &self.vertices {
            out[v.depth] += 1;
        }
        out
    }
}

fn degree_of(d: usize, e: usize, c: Color) -> usize {
    match c {
        Color::Blue => d,
        Color::Red => e,
    }
}

pub fn tree_ball(d: usize, e: usize, radius: usize, root_color: Color) -> TreeBall {
    let mut vertices = vec![TreeVertex {
        color: root_color,
        parent: None,
        depth: 0,
    }];
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    for depth in 1..=radius {
        let mut next = Vec::new();
        for &v in &frontier {
            let c = vertices[v].color;
            let children = degree_of(d, e, c) - usize::from(vertices[v].parent.is_some());
            for _ in 0..children {
                let id = vertices.len();
                vertices.push(TreeVertex {
                    color: c.other(),
                    parent: Some(v),
                    depth,
                });
                edges.push((v, id));
                next.push(id);
            }
        }
        frontier = next;
    }
    TreeBall {
        d,
        e,
        radius,
        root_color,
        vertices,
        edges,
    }
}

/// Edge count of [`tree_ball`] without building it; saturates.
pub fn ball_edge_count(d: usize, e: usize, radius: usize, root_color: Color) -> u128 {
    let mut total: u128 = 0;
    let mut sphere: u128 = 1;
    let mut color = root_color;
    for i in 0..radius {
        let branching = degree_of(d, e, color) as u128 - u128::from(i > 0);
        sphere = sphere.saturating_mul(branching);
        total = total.saturating_add(sphere);
        color = color.other();
    }
    total
}

/// Result of [`cover_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverCertificate {
    pub covered: bool,
    pub betti: i64,
    /// Vertices with the wrong degree or a ramified edge.
    pub failing: Vec<String>,
}

/// Whether a component is a `(d, e)`-biregular étale quotient of the tree.
pub fn cover_check(c: &Correspondence, comp: &ColoredComponent, d: usize, e: usize) -> Result<CoverCertificate> {
    let betti = comp.betti.ok_or(Error::Truncated)?;
    let mut failing: BTreeMap<Vertex, String> = BTreeMap::new();
    for (v, deg) in comp.degrees() {
        let want = match v {
            Vertex::Blue(_) => d,
            Vertex::Red(_) => e,
        };
        if deg != want {
            failing.insert(v.clone(), format!("{v}: degree {deg}, expected {want}"));
        }
    }
    for z in &comp.edges {
        let (ef, eg) = c.etale_at(z);
        if !ef {
            let v = Vertex::Blue(z.x.clone());
            failing.entry(v.clone()).or_insert_with(|| format!("{v}: ramified edge to {}", z.y));
        }
        if !eg {
            let v = Vertex::Red(z.y.clone());
            failing.entry(v.clone()).or_insert_with(|| format!("{v}: ramified edge to {}", z.x));
        }
    }
    Ok(CoverCertificate {
        covered: failing.is_empty(),
        betti,
        failing: failing.into_values().collect(),
    })
}

/// Largest graph accepted by the automorphism search.
pub const MAX_AUT_VERTICES: usize = 64;

/// Groups larger than this are not enumerated element by element.
pub const MAX_ENUMERATED_ORDER: u128 = 1 << 20;

/// Simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    pub n: usize,
    /// Sorted neighbour lists.
    pub adj: Vec<Vec<usize>>,
    pub colors: Option<Vec<u8>>,
}

impl FiniteGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Parse(format!("edge {u} {v} out of range")));
            }
            if u == v {
                return Err(Error::NotSimple(format!("loop at {u}")));
            }
            if adj[u].contains(&v) {
                return Err(Error::NotSimple(format!("repeated edge {u} {v}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(FiniteGraph { n, adj, colors: None })
    }

    /// `u v` per line, 0-indexed; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("line {}: {line:?}", i + 1)))?;
            match nums.as_slice() {
                [u, v] => edges.push((*u, *v)),
                _ => return Err(Error::Parse(format!("line {}: expected two vertices", i + 1))),
            }
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::from_edges(n, &edges)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn color(&self, v: usize) -> u8 {
        self.colors.as_ref().map_or(0, |c| c[v])
    }

    fn masks(&self) -> Vec<u64> {
        self.adj
            .iter()
            .map(|a| a.iter().fold(0u64, |m, &w| m | (1 << w)))
            .collect()
    }

    /// Breadth-first order from each unvisited vertex in turn.
    fn search_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut head = order.len();
            order.push(s);
            while head < order.len() {
                let v = order[head];
                head += 1;
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        order.push(w);
                    }
                }
            }
        }
        order
    }
}

/// Backtracking over vertex images in a fixed order.
struct AutSearch<'a> {
    g: &'a FiniteGraph,
    masks: Vec<u64>,
    order: Vec<usize>,
}

impl<'a> AutSearch<'a> {
    fn new(g: &'a FiniteGraph) -> Self {
        AutSearch {
            g,
            masks: g.masks(),
            order: g.search_order(),
        }
    }

    fn consistent(&self, map: &[Option<usize>], v: usize, w: usize) -> bool {
        if self.g.degree(v) != self.g.degree(w) || self.g.color(v) != self.g.color(w) {
            return false;
        }
        map.iter().enumerate().all(|(t, img)| match img {
            Some(it) => ((self.masks[v] >> t) & 1) == ((self.masks[w] >> it) & 1),
            None => true,
        })
    }

    /// Extends `map` to automorphisms, calling `found` on each; `found`
    /// returns false to stop.
    fn extend(&self, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, pos: usize, found: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let Some(i) = (pos..self.order.len()).find(|&i| map[self.order[i]].is_none()) else {
            let perm: Vec<usize> = map.iter().map(|m| m.expect("complete")).collect();
            return found(&perm);
        };
        let v = self.order[i];
        let anchor = self.g.adj[v].iter().find_map(|&u| map[u]);
        let candidates: Vec<usize> = match anchor {
            Some(img) => self.g.adj[img].clone(),
            None => (0..self.g.n).collect(),
        };
        for w in candidates {
            if used[w] || !self.consistent(map, v, w) {
                continue;
            }
            map[v] = Some(w);
            used[w] = true;
            let go_on = self.extend(map, used, i + 1, found);
            map[v] = None;
            used[w] = false;
            if !go_on {
                return false;
            }
        }
        true
    }

    /// An automorphism fixing `fixed` pointwise and sending `v` to `w`.
    fn find(&self, fixed: &[usize], v: usize, w: usize) -> Option<Vec<usize>> {
        let mut map = vec![None; self.g.n];
        let mut used = vec![false; self.g.n];
        for &f in fixed {
            map[f] = Some(f);
            used[f] = true;
        }
        if used[w] && map[v] != Some(w) {
            return None;
        }
        if map[v].is_none() {
            if !self.consistent(&map, v, w) {
                return None;
            }
            map[v] = Some(w);
            used[w] = true;
        }
        let mut out = None;
        self.extend(&mut map, &mut used, 0, &mut |p| {
            out = Some(p.to_vec());
            false
        });
        out
    }
}

/// Automorphism group as a stabiliser chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutGroup {
    pub order: u128,
    /// Coset representatives along the chain; they generate the group.
    pub generators: Vec<Vec<usize>>,
    /// Orbit length of each base point in its stabiliser.
    pub orbit_lengths: Vec<usize>,
}

pub fn automorphisms(g: &FiniteGraph) -> Result<AutGroup> {
    if g.n > MAX_AUT_VERTICES {
        return Err(Error::BoundExceeded {
            size: g.n.to_string(),
            bound: MAX_AUT_VERTICES as u64,
        });
    }
    let search = AutSearch::new(g);
    let mut order: u128 = 1;
    let mut generators = Vec::new();
    let mut orbit_lengths = Vec::new();
    let mut fixed: Vec<usize> = Vec::new();
    for &b in &search.order {
        let mut orbit = 0;
        for w in 0..g.n {
            if let Some(p) = search.find(&fixed, b, w) {
                orbit += 1;
                if w != b {
                    generators.push(p);
                }
            }
        }
        order *= orbit as u128;
        orbit_lengths.push(orbit);
        fixed.push(b);
    }
    Ok(AutGroup {
        order,
        generators,
        orbit_lengths,
    })
}

/// Every automorphism, by exhaustive backtracking.
pub fn all_automorphisms(g: &FiniteGraph) -> Result<Vec<Vec<usize>>> {
    if g.n > MAX_AUT_VERTICES {
        return Err(Error::BoundExceeded {
            size: g.n.to_string(),
            bound: MAX_AUT_VERTICES as u64,
        });
    }
    let search = AutSearch::new(g);
    let mut out = Vec::new();
    let mut map = vec![None; g.n];
    let mut used = vec![false; g.n];
    let mut overflow = false;
    search.extend(&mut map, &mut used, 0, &mut |p| {
        out.push(p.to_vec());
        if out.len() as u128 > MAX_ENUMERATED_ORDER {
            overflow = true;
            return false;
        }
        true
    });
    if overflow {
        return Err(Error::BoundExceeded {
            size: format!("more than {MAX_ENUMERATED_ORDER} automorphisms"),
            bound: MAX_ENUMERATED_ORDER as u64,
        });
    }
    out.sort();
    Ok(out)
}

/// Walks `v_0..v_s` with `v_{i+1} != v_{i-1}`.
pub fn s_arcs(g: &FiniteGraph, s: usize) -> Vec<Vec<usize>> {
    let mut arcs: Vec<Vec<usize>> = (0..g.n).map(|v| vec![v]).collect();
    for _ in 0..s {
        let mut next = Vec::new();
        for a in &arcs {
            let last = a[a.len() - 1];
            let back = (a.len() >= 2).then(|| a[a.len() - 2]);
            for &w in &g.adj[last] {
                if Some(w) != back {
                    let mut b = a.clone();
                    b.push(w);
                    next.push(b);
                }
            }
        }
        arcs = next;
    }
    arcs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArcLevel {
    pub s: usize,
    pub arcs: usize,
    /// Orbits from the generators.
    pub orbits_generated: usize,
    /// Orbits by counting fixed points over the whole group.
    pub orbits_burnside: Option<usize>,
    pub transitive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArcReport {
    pub vertices: usize,
    pub aut_order: u128,
    pub levels: Vec<ArcLevel>,
    pub s_max: Option<usize>,
    pub sharp_at_s_max: bool,
    pub cubic: bool,
    pub counters_agree: bool,
    /// Transitivity never returns after failing; only asserted when the
    /// minimum degree is at least two.
    pub monotone: bool,
}

impl ArcReport {
    /// The order formula `n * 3 * 2^(s - 1)` for cubic graphs.
    pub fn cubic_formula_holds(&self) -> bool {
        match self.s_max {
            Some(s) if self.cubic && s >= 1 => self.aut_order == (self.vertices as u128) * 3 * (1u128 << (s - 1)),
            _ => false,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serializable");
        v["aut_order"] = json!(self.aut_order.to_string());
        v
    }
}

fn orbit_count_generated(arcs: &[Vec<usize>], index: &HashMap<Vec<usize>, usize>, gens: &[Vec<usize>]) -> usize {
    let mut uf = UnionFind::new(arcs.len());
    let mut count = arcs.len();
    for (i, a) in arcs.iter().enumerate() {
        for g in gens {
            let img: Vec<usize> = a.iter().map(|&v| g[v]).collect();
            if uf.union(i, index[&img]) {
                count -= 1;
            }
        }
    }
    count
}

fn orbit_count_burnside(arcs: &[Vec<usize>], group: &[Vec<usize>]) -> usize {
    let fixed: usize = group
        .iter()
        .map(|g| arcs.iter().filter(|a| a.iter().all(|&v| g[v] == v)).count())
        .sum();
    debug_assert_eq!(fixed % group.len(), 0);
    fixed / group.len()
}

/// Arc transitivity for `s = 0..=s_cap`.
pub fn arc_transitivity(g: &FiniteGraph, s_cap: usize) -> Result<ArcReport> {
    if !g.is_connected() || g.n == 0 {
        return Err(Error::Disconnected);
    }
    let aut = automorphisms(g)?;
    let group = if aut.order <= MAX_ENUMERATED_ORDER {
        Some(all_automorphisms(g)?)
    } else {
        None
    };
    let mut levels = Vec::new();
    let mut counters_agree = true;
    for s in 0..=s_cap {
        let arcs = s_arcs(g, s);
        let index: HashMap<Vec<usize>, usize> = arcs.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let generated = orbit_count_generated(&arcs, &index, &aut.generators);
        let burnside = group.as_ref().map(|grp| orbit_count_burnside(&arcs, grp));
        if let Some(b) = burnside {
            counters_agree &= b == generated;
        }
        levels.push(ArcLevel {
            s,
            arcs: arcs.len(),
            orbits_generated: generated,
            orbits_burnside: burnside,
            transitive: !arcs.is_empty() && generated == 1,
        });
    }
    if let Some(grp) = &group {
        counters_agree &= grp.len() as u128 == aut.order;
    }
    let s_max = levels.iter().take_while(|l| l.transitive).last().map(|l| l.s);
    let monotone = levels.windows(2).all(|w| w[0].transitive || !w[1].transitive);
    let min_degree = (0..g.n).map(|v| g.degree(v)).min().unwrap_or(0);
    if min_degree >= 2 {
        assert!(monotone, "arc transitivity returned after failing");
    }
    let sharp_at_s_max = s_max.is_some_and(|s| levels[s].arcs as u128 == aut.order);
    Ok(ArcReport {
        vertices: g.n,
        aut_order: aut.order,
        levels,
        s_max,
        sharp_at_s_max,
        cubic: (0..g.n).all(|v| g.degree(v) == 3),
        counters_agree,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> FiniteGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        FiniteGraph::from_edges(n, &edges).unwrap()
    }

    fn corpus(name: &str) -> FiniteGraph {
        let text = match name {
            "k4" => include_str!("../data/corpus/k4.edges"),
            "k33" => include_str!("../data/corpus/k33.edges"),
            "petersen" => include_str!("../data/corpus/petersen.edges"),
            "heawood" => include_str!("../data/corpus/heawood.edges"),
            "cube3" => include_str!("../data/corpus/cube3.edges"),
            _ => unreachable!(),
        };
        FiniteGraph::parse(text).unwrap()
    }

    #[test]
    fn tree_ball_counts() {
        let b = tree_ball(3, 3, 2, Color::Blue);
        assert_eq!(b.sphere_sizes(), vec![1, 3, 6]);
        assert_eq!((b.vertices.len(), b.edges.len()), (10, 9));
        assert_eq!(ball_edge_count(3, 3, 2, Color::Blue), 9);
        assert_eq!(tree_ball(4, 2, 0, Color::Red).vertices.len(), 1);
        let line = tree_ball(2, 2, 5, Color::Red);
        assert_eq!(line.edges.len(), 10);
        for (d, e, r) in [(2usize, 5usize, 4usize), (3, 2, 6), (1, 4, 3), (5, 1, 3)] {
            for c in [Color::Blue, Color::Red] {
                assert_eq!(tree_ball(d, e, r, c).edges.len() as u128, ball_edge_count(d, e, r, c));
            }
        }
    }

    #[test]
    fn small_groups() {
        assert_eq!(automorphisms(&cycle(4)).unwrap().order, 8);
        assert_eq!(all_automorphisms(&cycle(4)).unwrap().len(), 8);
        assert_eq!(automorphisms(&corpus("k4")).unwrap().order, 24);
        assert_eq!(automorphisms(&corpus("petersen")).unwrap().order, 120);
        let path = FiniteGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(automorphisms(&path).unwrap().order, 2);
    }

    #[test]
    fn arc_reports_on_corpus() {
        for (name, order, s) in [("k4", 24u128, 2usize), ("k33", 72, 3), ("petersen", 120, 3), ("heawood", 336, 4), ("cube3", 48, 2)] {
            let r = arc_transitivity(&corpus(name), 8).unwrap();
            assert_eq!(r.aut_order, order, "{name}");
            assert_eq!(r.s_max, Some(s), "{name}");
            assert!(r.sharp_at_s_max && r.counters_agree && r.cubic_formula_holds(), "{name}");
            for l in &r.levels[1..] {
                assert_eq!(l.arcs, r.vertices * 3 * (1 << (l.s - 1)));
            }
        }
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(matches!(FiniteGraph::parse("0 1\n1 0\n"), Err(Error::NotSimple(_))));
        assert!(matches!(FiniteGraph::parse("0 0\n"), Err(Error::NotSimple(_))));
        let two = FiniteGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(arc_transitivity(&two, 2).unwrap_err(), Error::Disconnected);
    }
}
