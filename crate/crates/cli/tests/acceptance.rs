//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a criterion fails outside the documented open list.

#![allow(clippy::mutable_key_type)]

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rayon::prelude::*;
use serde_json::Value;

use corrdyn::clump::{closure, find_all_clumps, is_clump, ClosureOutcome, ClumpSearchOptions};
use corrdyn::correspondence::{CoreFlag, Side};
use corrdyn::ellcurve;
use corrdyn::ffield::{self, make_field};
use corrdyn::physgraph::{explore, rational_components, rational_edges, volcano_classify, working_field, VolcanoTag};
use corrdyn::treegen::{arc_transitivity, cover_check, FiniteGraph};
use corrdyn::{data, BiPoly, Correspondence, Field, FieldElement, PointP1, UniPoly};

const PRIMES: [u64; 10] = [5, 7, 11, 13, 17, 19, 23, 31, 37, 41];
const PROPERTY_CASES: u32 = 10_000;

/// Criteria expected to fail, with the reason. See the README.
const KNOWN_OPEN: &[(u8, &str)] = &[(
    9,
    "the level-4 correspondence has a core and splits the supersingular locus into several étale clumps at p = 11",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: Vec<(u8, fn() -> Verdict)> = vec![
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    // ACCEPTANCE_ONLY=1,8 restricts the run to the listed criteria.
    let only: Option<Vec<u8>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let results: Vec<(u8, Verdict, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .filter(|(id, _)| only.as_ref().is_none_or(|o| o.contains(id)))
            .map(|&(id, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let v = std::panic::catch_unwind(f)
                        .unwrap_or_else(|_| verdict(false, "panicked"));
                    (id, v, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut unexpected = Vec::new();
    for (id, v, secs) in &results {
        let known = KNOWN_OPEN.iter().find(|(k, _)| k == id);
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {status} ({secs:.1}s) {}", v.detail);
        match (v.pass, known) {
            (false, Some((_, why))) => println!("  known open: {why}"),
            (false, None) => unexpected.push(*id),
            (true, Some(_)) => println!("  listed as open but passed; update KNOWN_OPEN"),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: one CLI run per prime
// ---------------------------------------------------------------------------

struct ClumpRun {
    p: u64,
    code: Option<i32>,
    report: Option<Value>,
}

fn clump_runs() -> &'static [ClumpRun] {
    static RUNS: std::sync::OnceLock<Vec<ClumpRun>> = std::sync::OnceLock::new();
    RUNS.get_or_init(|| {
        PRIMES
            .iter()
            .map(|&p| {
                let out = Command::new(env!("CARGO_BIN_EXE_corrdyn"))
                    .args(["clump", "--builtin", "phi2", "-p", &p.to_string()])
                    .output()
                    .expect("binary runs");
                ClumpRun {
                    p,
                    code: out.status.code(),
                    report: serde_json::from_slice(&out.stdout).ok(),
                }
            })
            .collect()
    })
}

fn parse_points(field: &Field, v: &Value) -> Option<Vec<PointP1>> {
    let mut out = v
        .as_array()?
        .iter()
        .map(|s| PointP1::parse_in(field, s.as_str()?).ok())
        .collect::<Option<Vec<_>>>()?;
    out.sort();
    Some(out)
}

fn criterion_1() -> Verdict {
    let mut bad = Vec::new();
    for run in clump_runs() {
        let fp2 = make_field(run.p, 2).unwrap();
        let oracle: Vec<PointP1> = ellcurve::supersingular_set(run.p)
            .unwrap()
            .js
            .into_iter()
            .map(PointP1::Finite)
            .collect();
        let etale: Vec<&Value> = run
            .report
            .as_ref()
            .and_then(|r| r["clumps"].as_array())
            .map(|a| a.iter().filter(|k| k["etale"] == Value::Bool(true)).collect())
            .unwrap_or_default();
        let ok = etale.len() == 1 && parse_points(&fp2, &etale[0]["x_image"]).as_ref() == Some(&oracle);
        if !ok {
            bad.push(run.p);
        }
    }
    verdict(
        bad.is_empty(),
        format!("one étale clump equal to the supersingular set for p in {PRIMES:?}; mismatches {bad:?}"),
    )
}

fn criterion_2() -> Verdict {
    let mut bad = Vec::new();
    for run in clump_runs() {
        let count = run.report.as_ref().and_then(|r| r["etale_clump_count"].as_u64());
        if run.code != Some(0) || count.is_none_or(|n| n > 1) {
            bad.push((run.p, run.code, count));
        }
    }
    verdict(bad.is_empty(), format!("exit 0 with at most one étale clump; failures {bad:?}"))
}

// ---------------------------------------------------------------------------
// Criterion 3: oracle cross-validation
// ---------------------------------------------------------------------------

fn phi2(p: u64) -> Correspondence {
    Correspondence::load("phi2", data::correspondence_text("phi2").unwrap(), Some(p)).unwrap()
}

fn criterion_3() -> Verdict {
    let mut isogeny_checked = 0usize;
    let mut isogeny_bad = Vec::new();
    let mut deuring_checked = 0usize;
    let mut deuring_bad = Vec::new();
    for &p in &PRIMES {
        let c = phi2(p);
        let fp = make_field(p, 1).unwrap();
        let fp2 = make_field(p, 2).unwrap();
        let ss = ellcurve::supersingular_set(p).unwrap();
        let ordinary: Vec<FieldElement> = ffield::enumerate(&fp)
            .unwrap()
            .filter(|j| !j.is_zero() && *j != FieldElement::from_u64(&fp, 1728))
            .filter(|j| !ss.js.contains(&ffield::embed(j, &fp2).unwrap()))
            .collect();
        isogeny_checked += ordinary.len();
        let bad: Vec<String> = ordinary
            .par_iter()
            .filter_map(|j| {
                let (velu_field, velu) = ellcurve::two_isogenous_j(j).unwrap();
                // Roots are compared in a field holding both F_{p^2} and the Vélu results.
                let k = corrdyn::poly::lcm(2, velu_field.k());
                let field = make_field(p, k).unwrap();
                let mut velu: Vec<FieldElement> = velu.iter().map(|v| ffield::embed(v, &field).unwrap()).collect();
                velu.sort();
                let jp = PointP1::Finite(ffield::embed(j, &field).unwrap());
                let mut roots = Vec::new();
                for (y, m) in c.forward(&jp, &field).unwrap() {
                    match y {
                        PointP1::Finite(v) => roots.extend(std::iter::repeat_n(v, m)),
                        PointP1::Infinity => return Some(format!("{j}: root at infinity")),
                    }
                }
                roots.sort();
                (roots != velu).then(|| format!("p={p} j={j}"))
            })
            .collect();
        isogeny_bad.extend(bad);
        if p <= 37 {
            let all: Vec<FieldElement> = ffield::enumerate(&fp2).unwrap().collect();
            deuring_checked += all.len();
            let bad: Vec<String> = all
                .par_iter()
                .filter(|j| {
                    ellcurve::is_supersingular(j).unwrap() != ellcurve::is_supersingular_by_count(j).unwrap()
                })
                .map(|j| j.to_string())
                .collect();
            deuring_bad.extend(bad);
        }
    }
    verdict(
        isogeny_bad.is_empty() && deuring_bad.is_empty(),
        format!(
            "Vélu vs Φ_2 roots on {isogeny_checked} ordinary j ({} mismatches); Hasse vs point count on {deuring_checked} j over F_(p^2) ({} mismatches)",
            isogeny_bad.len(),
            deuring_bad.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: volcanoes and covering certificates
// ---------------------------------------------------------------------------

struct ComponentFacts {
    p: u64,
    ordinary: bool,
    truncated: bool,
    closed: bool,
    betti: Option<i64>,
    tag: Option<VolcanoTag>,
    covered: Option<bool>,
}

fn component_facts() -> &'static [ComponentFacts] {
    static FACTS: std::sync::OnceLock<Vec<ComponentFacts>> = std::sync::OnceLock::new();
    FACTS.get_or_init(|| {
        PRIMES
            .par_iter()
            .flat_map_iter(|&p| {
                let c = phi2(p);
                let field = working_field(&c, 2).unwrap();
                let ss: BTreeSet<PointP1> = ellcurve::supersingular_set(p)
                    .unwrap()
                    .js
                    .into_iter()
                    .map(PointP1::Finite)
                    .collect();
                let edges = rational_edges(&c, &field).unwrap();
                rational_components(&edges)
                    .into_iter()
                    .map(|comp| {
                        let k = explore(&c, (&comp[0].0, &comp[0].1), &field, 5000).unwrap();
                        let etale = k.edges.iter().all(|z| c.is_etale_point(z));
                        let tag = (!k.truncated).then(|| volcano_classify(&k).unwrap().tag);
                        let covered = (k.closed && etale).then(|| cover_check(&c, &k, 3, 3).unwrap().covered);
                        ComponentFacts {
                            p,
                            ordinary: k.blue.iter().chain(&k.red).all(|v| !ss.contains(v)),
                            truncated: k.truncated,
                            closed: k.closed,
                            betti: k.betti,
                            tag,
                            covered,
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    })
}

fn criterion_4() -> Verdict {
    let facts = component_facts();
    let checked: Vec<&ComponentFacts> = facts.iter().filter(|f| f.ordinary && !f.truncated).collect();
    let bad: Vec<(u64, Option<i64>)> = checked
        .iter()
        .filter(|f| {
            f.betti.is_none_or(|b| b > 1) || !matches!(f.tag, Some(VolcanoTag::Tree) | Some(VolcanoTag::Volcano))
        })
        .map(|f| (f.p, f.betti))
        .collect();
    let volcanoes = checked.iter().filter(|f| f.tag == Some(VolcanoTag::Volcano)).count();
    verdict(
        bad.is_empty() && !checked.is_empty(),
        format!(
            "{} untruncated ordinary components over F_(p^2), {volcanoes} with a rim; violations {bad:?}",
            checked.len()
        ),
    )
}

fn criterion_5() -> Verdict {
    let facts = component_facts();
    let checked: Vec<&ComponentFacts> = facts.iter().filter(|f| f.covered.is_some()).collect();
    let bad: Vec<u64> = checked.iter().filter(|f| f.covered != Some(true)).map(|f| f.p).collect();
    let per_prime: BTreeSet<u64> = checked.iter().map(|f| f.p).collect();
    verdict(
        bad.is_empty() && per_prime.len() == PRIMES.len(),
        format!(
            "{} closed étale components ({} closed in total) cover the (3,3) tree; failures at {bad:?}",
            checked.len(),
            facts.iter().filter(|f| f.closed).count()
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 6: Tutte sharpness on the corpus
// ---------------------------------------------------------------------------

fn criterion_6() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, text) in data::GRAPHS {
        let g = FiniteGraph::parse(text).unwrap();
        let r = arc_transitivity(&g, 6).unwrap();
        let good = r.cubic && r.sharp_at_s_max && r.cubic_formula_holds() && r.counters_agree && r.monotone;
        ok &= good;
        parts.push(format!("{name} s={:?} |Aut|={}", r.s_max, r.aut_order));
    }
    verdict(ok, parts.join(", "))
}

// ---------------------------------------------------------------------------
// Criterion 7: the x^2 - y^2 control
// ---------------------------------------------------------------------------

fn criterion_7() -> Verdict {
    let c = Correspondence::load("sq", data::correspondence_text("sq").unwrap(), Some(7)).unwrap();
    let field = working_field(&c, 1).unwrap();
    let mut points: Vec<PointP1> = ffield::enumerate(&field).unwrap().map(PointP1::Finite).collect();
    points.push(PointP1::Infinity);
    let mut bounded = 0;
    let mut largest = 0;
    for x in &points {
        let (_, oc) = c.orbit_closure_tower(x, 100, 2).unwrap();
        if oc.bounded && oc.split {
            bounded += 1;
        }
        largest = largest.max(oc.xs.len()).max(oc.ys.len());
    }
    let search = find_all_clumps(&c, &field, &ClumpSearchOptions::default_for(&c, 0)).unwrap();
    let etale: Vec<_> = search.etale_clumps().collect();
    let mut seen = BTreeSet::new();
    let disjoint = etale.iter().flat_map(|k| k.keys()).all(|key| seen.insert(key));
    verdict(
        bounded == points.len() && largest <= 2 && etale.len() >= 2 && disjoint && search.falsification.is_none(),
        format!(
            "{bounded}/{} orbits bounded, largest side {largest}, {} disjoint étale clumps",
            points.len(),
            etale.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 8: property suites
// ---------------------------------------------------------------------------

fn runner() -> TestRunner {
    let config = Config {
        cases: PROPERTY_CASES,
        max_global_rejects: 100 * PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn element(field: &Field, raw: &[u64]) -> FieldElement {
    let p = field.p();
    let coeffs: Vec<u64> = raw.iter().take(field.k()).map(|c| c % p).collect();
    FieldElement::from_coeffs(field, &coeffs).unwrap()
}

#[allow(clippy::eq_op)]
fn field_axioms() -> Result<(), String> {
    const SMALL: [u64; 6] = [2, 3, 5, 7, 13, 65_521];
    let strategy = (0..SMALL.len(), 1usize..=5, prop::array::uniform3(prop::array::uniform5(any::<u64>())));
    runner()
        .run(&strategy, |(pi, k, raw)| {
            let f = make_field(SMALL[pi], k).unwrap();
            let [a, b, c] = raw.map(|r| element(&f, &r));
            let zero = FieldElement::zero(&f);
            let one = FieldElement::one(&f);
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &zero, a.clone());
            prop_assert_eq!(&a * &one, a.clone());
            prop_assert!((&a - &a).is_zero());
            prop_assert!((&a + &(-&a)).is_zero());
            if !a.is_zero() {
                prop_assert!((&a * &a.inv().unwrap()).is_one());
            }
            prop_assert_eq!((&a + &b).frobenius(1), &a.frobenius(1) + &b.frobenius(1));
            prop_assert_eq!((&a * &b).frobenius(1), &a.frobenius(1) * &b.frobenius(1));
            prop_assert_eq!(a.frobenius(1), a.pow(f.p()));
            prop_assert_eq!(a.frobenius(k), a.clone());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn roots_vs_scan() -> Result<(), String> {
    let mut fields = Vec::new();
    for p in (2u64..4096).filter(|&p| ffield::is_prime(p)) {
        let mut q = p;
        let mut k = 1;
        while q <= 1 << 12 {
            fields.push((p, k));
            q *= p;
            k += 1;
        }
    }
    // Bias towards extensions, which are a small slice of the list.
    let ext: Vec<(u64, usize)> = fields.iter().copied().filter(|&(_, k)| k > 1).collect();
    let strategy = (
        any::<bool>(),
        any::<prop::sample::Index>(),
        prop::collection::vec(prop::array::uniform12(any::<u64>()), 0..4),
        prop::collection::vec(prop::array::uniform12(any::<u64>()), 1..5),
    );
    runner()
        .run(&strategy, |(use_ext, idx, roots, cofactor)| {
            let (p, k) = if use_ext { *idx.get(&ext) } else { *idx.get(&fields) };
            let f = make_field(p, k).unwrap();
            let mut poly = UniPoly::new(&f, cofactor.iter().map(|r| element(&f, r)).collect());
            if poly.is_zero() {
                poly = UniPoly::constant(FieldElement::one(&f));
            }
            for r in &roots {
                poly = poly.mul(&UniPoly::linear(&element(&f, r)));
            }
            let expected: Vec<(FieldElement, usize)> = ffield::enumerate(&f)
                .unwrap()
                .filter(|a| poly.eval(a).is_zero())
                .map(|a| {
                    let lin = UniPoly::linear(&a);
                    let mut m = 0;
                    let mut rest = poly.clone();
                    loop {
                        let (q, r) = rest.divrem(&lin).unwrap();
                        if !r.is_zero() {
                            break;
                        }
                        m += 1;
                        rest = q;
                    }
                    (a, m)
                })
                .collect();
            let mut got = poly.roots().unwrap();
            got.sort();
            let mut expected = expected;
            expected.sort();
            prop_assert_eq!(got, expected);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

const CORR_PRIMES: [u64; 4] = [5, 7, 11, 13];

fn random_correspondence(pi: usize, dx: usize, dy: usize, raw: &[u64]) -> Option<Correspondence> {
    let f = make_field(CORR_PRIMES[pi], 1).unwrap();
    let mut terms = Vec::new();
    let mut it = raw.iter().cycle();
    for i in 0..=dx {
        for j in 0..=dy {
            let r = *it.next().unwrap();
            // Sparse: roughly half the monomials vanish.
            if r.is_multiple_of(2) || (i, j) == (dx, 0) || (i, j) == (0, dy) {
                terms.push(((i, j), FieldElement::from_u64(&f, (r >> 1) % f.p())));
            }
        }
    }
    let poly = BiPoly::new(&f, terms);
    if poly.deg_x() != dx || poly.deg_y() != dy {
        return None;
    }
    Correspondence::new("random", poly).ok()
}

/// `h1(x) - h2(y)`: the common quotient through `h1`, `h2` is a core.
fn core_correspondence(pi: usize, d1: usize, d2: usize, raw: &[u64]) -> Option<Correspondence> {
    let f = make_field(CORR_PRIMES[pi], 1).unwrap();
    let p = f.p();
    let mut terms = Vec::new();
    // Leading coefficients are forced nonzero.
    for (i, r) in raw[..=d1].iter().enumerate() {
        let c = if i == d1 { r % (p - 1) + 1 } else { r % p };
        terms.push(((i, 0), FieldElement::from_u64(&f, c)));
    }
    for (j, r) in raw[4..=4 + d2].iter().enumerate() {
        let c = if j == d2 { r % (p - 1) + 1 } else { r % p };
        terms.push(((0, j), -FieldElement::from_u64(&f, c)));
    }
    Correspondence::new("core", BiPoly::new(&f, terms))
        .ok()
        .map(|c| c.with_core(CoreFlag::HasCore))
}

fn point(field: &Field, index: u64) -> PointP1 {
    if index >= field.order().unwrap() {
        PointP1::Infinity
    } else {
        PointP1::Finite(FieldElement::from_index(field, index))
    }
}

fn adjointness() -> Result<(), String> {
    let strategy = (
        0..CORR_PRIMES.len(),
        1usize..=3,
        1usize..=3,
        prop::array::uniform16(any::<u64>()),
        any::<bool>(),
        0u64..=13,
    );
    runner()
        .run(&strategy, |(pi, dx, dy, raw, from_x, idx)| {
            let c = random_correspondence(pi, dx, dy, &raw);
            prop_assume!(c.is_some());
            let c = c.unwrap();
            let base = c.base_field().clone();
            let pt = point(&base, idx % (base.p() + 1));
            let side = if from_x { Side::X } else { Side::Y };
            let (poly, _) = c.fibre_poly(side, &pt, &base).unwrap();
            let s = if poly.degree().unwrap_or(0) == 0 { 1 } else { poly.splitting_degree().unwrap() };
            let ext = make_field(base.p(), s).unwrap();
            let pt = pt.embed(&ext).unwrap();
            let fib = c.fibre(side, &pt, &ext).unwrap();
            prop_assert!(fib.is_split());
            let mass: usize = fib.points.iter().map(|(_, m)| m).sum();
            prop_assert_eq!(mass, c.fibre_degree(side));
            for (q, _) in &fib.points {
                let back = c.fibre(side.other(), q, &ext).unwrap();
                prop_assert!(back.points.iter().any(|(r, _)| *r == pt));
                let (x, y) = if from_x { (&pt, q) } else { (q, &pt) };
                prop_assert!(c.contains(x, y, &ext).unwrap());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn embed_keys(keys: &[(PointP1, PointP1)], field: &Field) -> BTreeSet<(PointP1, PointP1)> {
    keys.iter()
        .map(|(x, y)| (x.embed(field).unwrap(), y.embed(field).unwrap()))
        .collect()
}

fn closure_laws() -> Result<(), String> {
    let strategy = (
        0..CORR_PRIMES.len(),
        1usize..=3,
        1usize..=3,
        prop::array::uniform8(any::<u64>()),
        prop::collection::vec(any::<prop::sample::Index>(), 1..3),
        prop::collection::vec(any::<prop::sample::Index>(), 1..3),
    );
    runner()
        .run(&strategy, |(pi, d1, d2, raw, s1, s2)| {
            let c = core_correspondence(pi, d1, d2, &raw);
            prop_assume!(c.is_some());
            let c = c.unwrap();
            let base = c.base_field().clone();
            let edges = rational_edges(&c, &base).unwrap();
            prop_assume!(!edges.is_empty());
            let pick = |ix: &[prop::sample::Index]| -> Vec<(PointP1, PointP1)> {
                let set: BTreeSet<_> = ix.iter().map(|i| i.get(&edges).clone()).collect();
                set.into_iter().collect()
            };
            let a = pick(&s1);
            let ab: Vec<_> = a.iter().cloned().chain(pick(&s2)).collect::<BTreeSet<_>>().into_iter().collect();
            let bounded = |seeds: &[(PointP1, PointP1)], field: &Field| match closure(&c, seeds, field, None, 1000).unwrap() {
                ClosureOutcome::Bounded(k) => Some(k),
                ClosureOutcome::Unbounded { .. } => None,
            };
            let ka = bounded(&a, &base);
            let kab = bounded(&ab, &base);
            prop_assert!(ka.is_some() && kab.is_some(), "closure under a core is bounded");
            let (ka, kab) = (ka.unwrap(), kab.unwrap());
            let common = make_field(base.p(), corrdyn::poly::lcm(ka.field.k(), kab.field.k())).unwrap();
            let set_a = embed_keys(&ka.keys(), &common);
            let set_ab = embed_keys(&kab.keys(), &common);
            // Extensive and monotone.
            prop_assert!(embed_keys(&a, &common).is_subset(&set_a));
            prop_assert!(set_a.is_subset(&set_ab));
            // Idempotent.
            let again = bounded(&ka.keys(), &ka.field).expect("closure of a clump is bounded");
            prop_assert_eq!(embed_keys(&again.keys(), &common), set_a.clone());
            // A clump, and the union of the least clumps of its seeds.
            prop_assert!(is_clump(&c, &ka.keys(), &ka.field, false).unwrap().is_clump);
            let mut union = BTreeSet::new();
            for s in &a {
                let k = bounded(std::slice::from_ref(s), &base).unwrap();
                union.extend(embed_keys(&k.keys(), &common));
            }
            prop_assert_eq!(union, set_a);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn frobenius_stability() -> Result<(), String> {
    // Primes 5 and 7 only: clumps already reach F_(p^6) and the cost grows fast with p.
    let strategy = (0..2usize, 1usize..=3, 1usize..=3, prop::array::uniform8(any::<u64>()));
    runner()
        .run(&strategy, |(pi, d1, d2, raw)| {
            let c = core_correspondence(pi, d1, d2, &raw);
            prop_assume!(c.is_some());
            let c = c.unwrap();
            let field = working_field(&c, 2).unwrap();
            let search = find_all_clumps(&c, &field, &ClumpSearchOptions::default_for(&c, 0)).unwrap();
            let k = search.clumps.iter().map(|k| k.field.k()).fold(2, corrdyn::poly::lcm);
            let common = make_field(field.p(), k).unwrap();
            let clumps: BTreeSet<Vec<(PointP1, PointP1)>> = search
                .clumps
                .iter()
                .map(|k| embed_keys(&k.keys(), &common).into_iter().collect())
                .collect();
            for (k, keys) in search.clumps.iter().zip(clumps.iter()) {
                let image: Vec<_> = keys.iter().map(|(x, y)| (x.frobenius(1), y.frobenius(1))).collect::<BTreeSet<_>>().into_iter().collect();
                prop_assert!(clumps.contains(&image), "Frobenius permutes clumps");
                if k.keys().iter().any(|(x, y)| x.degree() == 1 && y.degree() == 1) {
                    prop_assert!(k.is_frobenius_stable(1));
                }
            }
            let edges = rational_edges(&c, &field).unwrap();
            let comps: Vec<_> = rational_components(&edges)
                .iter()
                .map(|comp| explore(&c, (&comp[0].0, &comp[0].1), &field, usize::MAX).unwrap())
                .collect();
            let sets: BTreeSet<Vec<(PointP1, PointP1)>> = comps.iter().map(|k| k.edge_keys()).collect();
            for comp in &comps {
                prop_assert!(sets.contains(&comp.frobenius_edges(1)), "Frobenius permutes components");
                if comp.seed.x.degree() == 1 && comp.seed.y.degree() == 1 {
                    prop_assert_eq!(comp.frobenius_edges(1), comp.edge_keys());
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn worker_determinism() -> Result<(), String> {
    let pools: Vec<rayon::ThreadPool> = [1, 2, 4]
        .iter()
        .map(|&n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap())
        .collect();
    let strategy = (
        0..CORR_PRIMES.len(),
        1usize..=3,
        1usize..=3,
        prop::array::uniform16(any::<u64>()),
        any::<bool>(),
        1usize..3,
    );
    runner()
        .run(&strategy, |(pi, dx, dy, raw, core, other)| {
            let c = if core {
                core_correspondence(pi, dx, dy, &raw)
            } else {
                random_correspondence(pi, dx, dy, &raw)
            };
            prop_assume!(c.is_some());
            let c = c.unwrap();
            let field = working_field(&c, 1).unwrap();
            let opts = ClumpSearchOptions {
                no_core: false,
                ..ClumpSearchOptions::default_for(&c, 0)
            };
            let report = |pool: &rayon::ThreadPool| {
                pool.install(|| find_all_clumps(&c, &field, &opts).map(|s| s.to_json(&c).to_string()))
            };
            let serial = report(&pools[0]);
            let parallel = report(&pools[other]);
            prop_assert_eq!(serial.map_err(|e| e.to_string()), parallel.map_err(|e| e.to_string()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn criterion_8() -> Verdict {
    type Suite = (&'static str, fn() -> Result<(), String>);
    let suites: [Suite; 6] = [
        ("field axioms and Frobenius", field_axioms),
        ("roots vs exhaustive scan", roots_vs_scan),
        ("adjointness and mass", adjointness),
        ("closure laws", closure_laws),
        ("Frobenius stability", frobenius_stability),
        ("worker-count determinism", worker_determinism),
    ];
    // Plain threads: the suites run for a while and must not hold rayon workers.
    let results: Vec<(&str, Result<(), String>)> = std::thread::scope(|s| {
        let handles: Vec<_> = suites
            .iter()
            .map(|&(n, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = f();
                    eprintln!("  suite {n}: {:.1}s", t.elapsed().as_secs_f64());
                    (n, r)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();
    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} suites x {PROPERTY_CASES} cases", suites.len())
        } else {
            failed.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// Criterion 9: the level-4 control with a core
// ---------------------------------------------------------------------------

/// `j = (t + 256)^3 / t^2` on the level-2 line; the cusps go to infinity.
fn level2_j(t: &PointP1) -> Option<FieldElement> {
    let t = t.finite()?;
    if t.is_zero() {
        return None;
    }
    let a = t + &FieldElement::from_u64(t.ctx(), 256);
    Some(&(&a * &a.square()) * &t.square().inv().unwrap())
}

fn criterion_9() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [11u64, 13] {
        let c = Correspondence::load("elkies", data::correspondence_text("elkies").unwrap(), Some(p)).unwrap();
        let fp2 = working_field(&c, 2).unwrap();
        let ss = ellcurve::supersingular_set(p).unwrap();
        let ss_set: BTreeSet<FieldElement> = ss.js.iter().cloned().collect();
        let search = find_all_clumps(&c, &fp2, &ClumpSearchOptions::default_for(&c, ss.count())).unwrap();
        let j_images: Vec<BTreeSet<FieldElement>> = search
            .etale_clumps()
            .map(|k| {
                k.x_image
                    .iter()
                    .chain(&k.y_image)
                    .filter_map(|t| level2_j(&t.embed(&fp2).unwrap()))
                    .collect()
            })
            .collect();
        // With a core every generic edge lies in a finite clump; only the
        // clumps over the supersingular locus are compared.
        let over_ss: Vec<&BTreeSet<FieldElement>> =
            j_images.iter().filter(|js| !js.is_empty() && js.is_subset(&ss_set)).collect();
        let union: BTreeSet<FieldElement> = over_ss.iter().copied().flatten().cloned().collect();
        let unique = over_ss.len() == 1 && *over_ss[0] == ss_set;
        pass &= unique;
        parts.push(format!(
            "p={p}: {} étale clumps over the supersingular locus ({} étale in total), union of j-images equals it: {}",
            over_ss.len(),
            j_images.len(),
            union == ss_set
        ));
    }
    verdict(pass, parts.join("; "))
}
