use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use corrdyn::clump::{find_all_clumps, Clump, ClumpSearch, ClumpSearchOptions};
use corrdyn::correspondence::CoreFlag;
use corrdyn::ellcurve;
use corrdyn::ffield::{self, make_field};
use corrdyn::physgraph::{
    self, explore, rational_components, rational_edges, volcano_classify, working_field, ClassifyOptions,
    ColoredComponent,
};
use corrdyn::treegen::{self, arc_transitivity, cover_check, FiniteGraph};
use corrdyn::{data, Correspondence, Error, Field, PointP1};

#[derive(Parser)]
#[command(name = "corrdyn", version, about = "Dynamics of curve correspondences over finite fields")]
struct Cli {
    /// Worker threads for seed-parallel work (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Directory searched for `<name>.bipoly` and `corpus/<name>.edges` before the built-in copies.
    #[arg(long, global = true, env = "CORRDYN_DATA")]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Args)]
struct Source {
    /// Shipped correspondence: phi2, phi3, elkies, sq, identity, hyperbola, parabola.
    #[arg(long, conflicts_with = "file")]
    builtin: Option<String>,
    /// Correspondence in bipoly format.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(short = 'p', long = "prime")]
    p: u64,
    /// Work over F_{q^m}; defaults to 2 for modular builtins and 1 otherwise.
    #[arg(short = 'm', long)]
    m: Option<usize>,
    /// Treat the correspondence as having a core (disables the uniqueness assertion).
    #[arg(long)]
    has_core: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Find every clump over the working field and check uniqueness of the étale one.
    Clump {
        #[command(flatten)]
        source: Source,
        /// Edge budget per seed.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        size_cap: Option<usize>,
        /// Extension allowance over the working field.
        #[arg(long)]
        field_growth: Option<usize>,
    },
    /// Volcano classification of rational components.
    Volcano {
        #[command(flatten)]
        source: Source,
        /// Edge `x,y`; without it every rational component is reported.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
    },
    /// Covering certificate against the (d, e)-biregular tree.
    Cover {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
    },
    /// Special/generic classification histogram over all rational edges.
    Stats {
        #[command(flatten)]
        source: Source,
        #[arg(short = 'r', long, default_value_t = 2)]
        radius: usize,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        field_growth: Option<usize>,
    },
    /// Arc transitivity of a finite graph given as an edge list.
    Tutte {
        /// Edge-list file, or a corpus name (k4, k33, petersen, heawood, cube3).
        graph: String,
        #[arg(long, default_value_t = 6)]
        s_cap: usize,
    },
    /// Cross-check the elliptic-curve oracle against the level-2 modular correspondence.
    Validate {
        #[arg(short = 'p', long = "prime")]
        p: u64,
        /// Largest p for the exhaustive point-count comparison over F_{p^2}.
        #[arg(long, default_value_t = 37)]
        deuring_limit: u64,
    },
}

/// Generic-ball counts bear on open questions and are never a proof.
const EVIDENCE: &str = "experimental evidence";

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

struct Outcome {
    report: String,
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is built once");
    }
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.code)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let data = cli.data.as_deref();
    match &cli.command {
        Command::Clump {
            source,
            budget,
            size_cap,
            field_growth,
        } => {
            let (c, field) = load(source, data)?;
            let ss = supersingular_count(&c, source)?;
            let mut opts = ClumpSearchOptions::default_for(&c, ss);
            if let Some(cap) = size_cap {
                opts.size_cap = positive(*cap, "--size-cap")?;
            }
            opts.budget_per_seed = budget.map_or(Ok(opts.size_cap), |b| positive(b, "--budget"))?;
            opts.field_growth = *field_growth;
            let search = find_all_clumps(&c, &field, &opts)?;
            let code = if search.falsification.is_some() { 2 } else { 0 };
            let report = match cli.format {
                Format::Json => json_line(&search.to_json(&c)),
                Format::Dot => clumps_dot(&search),
                Format::Text => clumps_text(&search),
            };
            Ok(Outcome { report, code })
        }
        Command::Volcano { source, seed, budget } => {
            let (c, field) = load(source, data)?;
            let comps = components(&c, &field, seed.as_deref(), *budget)?;
            let mut reports = Vec::new();
            let mut text = String::new();
            for comp in &comps {
                let v = volcano_classify(comp)?;
                let _ = writeln!(
                    text,
                    "{} edges={} betti={} tag={:?} rim={:?} max_depth={}",
                    comp.seed.key().0,
                    comp.edge_count(),
                    v.betti,
                    v.tag,
                    v.rim_length(),
                    v.depth.values().max().copied().unwrap_or(0)
                );
                reports.push(json!({ "component": comp.to_json(), "volcano": v.to_json() }));
            }
            Ok(Outcome {
                report: component_output(cli.format, &comps, json!(reports), text),
                code: 0,
            })
        }
        Command::Cover { source, seed, budget } => {
            let (c, field) = load(source, data)?;
            let comps = components(&c, &field, seed.as_deref(), *budget)?;
            let mut reports = Vec::new();
            let mut text = String::new();
            for comp in &comps {
                let cert = cover_check(&c, comp, c.d(), c.e())?;
                let _ = writeln!(
                    text,
                    "{} edges={} betti={} covered={} failing={}",
                    comp.seed.key().0,
                    comp.edge_count(),
                    cert.betti,
                    cert.covered,
                    cert.failing.len()
                );
                reports.push(json!({
                    "seed": [comp.seed.x.to_string(), comp.seed.y.to_string()],
                    "edges": comp.edge_count(),
                    "closed": comp.closed,
                    "certificate": cert,
                }));
            }
            Ok(Outcome {
                report: component_output(cli.format, &comps, json!(reports), text),
                code: 0,
            })
        }
        Command::Stats {
            source,
            radius,
            budget,
            field_growth,
        } => {
            let (c, field) = load(source, data)?;
            let needed = treegen::ball_edge_count(c.d(), c.e(), *radius, treegen::Color::Blue);
            let default_budget = (needed.saturating_mul(4)).max(1000).min(usize::MAX as u128) as usize;
            let opts = ClassifyOptions {
                radius: *radius,
                budget: budget.unwrap_or(default_budget),
                field_growth: *field_growth,
            };
            let s = physgraph::stats(&c, &field, &opts)?;
            let report = match cli.format {
                Format::Text => format!(
                    "{EVIDENCE}: {} over {} radius {}: edges={} finite={} cycle={} folded={} generic={} inconclusive={} ramified={} fraction_generic={:.4}\n",
                    s.correspondence,
                    s.field,
                    s.radius,
                    s.edges,
                    s.special_finite,
                    s.special_cycle,
                    s.special_folded,
                    s.generic,
                    s.inconclusive,
                    s.ramified,
                    s.fraction_generic
                ),
                Format::Dot => return Err(Failure::Usage("stats has no DOT form".into())),
                Format::Json => {
                    let mut v = serde_json::to_value(&s).expect("serializable");
                    v["label"] = json!(EVIDENCE);
                    json_line(&v)
                }
            };
            Ok(Outcome { report, code: 0 })
        }
        Command::Tutte { graph, s_cap } => {
            let g = FiniteGraph::parse(&graph_text(graph, data)?)?;
            let r = arc_transitivity(&g, *s_cap)?;
            let failed = !r.counters_agree || !r.monotone || (r.cubic && r.s_max.is_some() && !r.sharp_at_s_max);
            let report = match cli.format {
                Format::Text => format!(
                    "n={} |Aut|={} s_max={:?} sharp={} cubic={} formula={} counters_agree={}\n",
                    r.vertices,
                    r.aut_order,
                    r.s_max,
                    r.sharp_at_s_max,
                    r.cubic,
                    r.cubic_formula_holds(),
                    r.counters_agree
                ),
                Format::Dot => graph_dot(&g),
                Format::Json => json_line(&r.to_json()),
            };
            Ok(Outcome {
                report,
                code: if failed { 2 } else { 0 },
            })
        }
        Command::Validate { p, deuring_limit } => {
            let v = validate(*p, *deuring_limit, data)?;
            let code = if v["agree"] == json!(true) { 0 } else { 2 };
            let report = match cli.format {
                Format::Json => json_line(&v),
                Format::Text => format!(
                    "p={} isogeny_mismatches={} deuring_mismatches={} clump_matches_oracle={} agree={}\n",
                    p,
                    v["isogeny"]["mismatches"].as_array().map_or(0, |a| a.len()),
                    v["deuring"]["mismatches"].as_array().map_or(0, |a| a.len()),
                    v["clump"]["matches_oracle"],
                    v["agree"]
                ),
                Format::Dot => return Err(Failure::Usage("validate has no DOT form".into())),
            };
            Ok(Outcome { report, code })
        }
    }
}

fn positive(n: usize, flag: &str) -> Result<usize, Failure> {
    if n == 0 {
        Err(Failure::Usage(format!("{flag} must be positive")))
    } else {
        Ok(n)
    }
}

fn json_line(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", path.display()))))
}

fn correspondence_text(name: &str, data: Option<&Path>) -> Result<String, Failure> {
    if let Some(dir) = data {
        let path = dir.join(format!("{name}.bipoly"));
        if path.exists() {
            return read(&path);
        }
    }
    data::correspondence_text(name)
        .map(str::to_owned)
        .ok_or_else(|| Failure::Usage(format!("unknown builtin {name:?}")))
}

fn graph_text(arg: &str, data: Option<&Path>) -> Result<String, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return read(path);
    }
    if let Some(dir) = data {
        let joined = dir.join(arg);
        if joined.exists() {
            return read(&joined);
        }
    }
    let name = arg.trim_start_matches("corpus/").trim_end_matches(".edges");
    data::graph_text(name)
        .map(str::to_owned)
        .ok_or_else(|| Failure::Usage(format!("no graph file or corpus entry named {arg:?}")))
}

fn load(source: &Source, data: Option<&Path>) -> Result<(Correspondence, Field), Failure> {
    let (name, text) = match (&source.builtin, &source.file) {
        (_, Some(path)) => {
            let name = path
                .file_stem()
                .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned());
            (name, read(path)?)
        }
        (Some(b), None) => (b.clone(), correspondence_text(b, data)?),
        (None, None) => ("phi2".to_string(), correspondence_text("phi2", data)?),
    };
    let mut c = Correspondence::load(&name, &text, Some(source.p))?;
    if source.has_core {
        c = c.with_core(CoreFlag::HasCore);
    }
    let m = source.m.unwrap_or(if data::is_modular(&name) { 2 } else { 1 });
    let field = working_field(&c, m)?;
    Ok((c, field))
}

/// Supersingular count used to size the clump search; zero for non-modular input.
fn supersingular_count(c: &Correspondence, source: &Source) -> Result<usize, Failure> {
    let modular = source.file.is_none() && data::is_modular(c.name());
    if modular && c.base_field().p() >= 5 {
        Ok(ellcurve::supersingular_set(c.base_field().p())?.count())
    } else {
        Ok(0)
    }
}

fn parse_seed(field: &Field, s: &str) -> Result<(PointP1, PointP1), Failure> {
    // Split at the first comma outside `[...]`, since extension elements contain commas.
    let mut depth = 0i32;
    let cut = s.char_indices().find_map(|(i, ch)| {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => return Some(i),
            _ => {}
        }
        None
    });
    let (x, y) = cut
        .map(|i| (&s[..i], &s[i + 1..]))
        .ok_or_else(|| Failure::Usage(format!("seed {s:?} is not of the form x,y")))?;
    Ok((PointP1::parse_in(field, x)?, PointP1::parse_in(field, y)?))
}

fn components(
    c: &Correspondence,
    field: &Field,
    seed: Option<&str>,
    budget: usize,
) -> Result<Vec<ColoredComponent>, Failure> {
    let budget = positive(budget, "--budget")?;
    match seed {
        Some(s) => {
            let (x, y) = parse_seed(field, s)?;
            Ok(vec![explore(c, (&x, &y), field, budget)?])
        }
        None => {
            let edges = rational_edges(c, field)?;
            let comps = rational_components(&edges);
            Ok(comps
                .par_iter()
                .map(|comp| explore(c, (&comp[0].0, &comp[0].1), field, budget))
                .collect::<corrdyn::Result<Vec<_>>>()?)
        }
    }
}

fn component_output(format: Format, comps: &[ColoredComponent], json: Value, text: String) -> String {
    match format {
        Format::Json => json_line(&json),
        Format::Text => text,
        Format::Dot => comps.iter().map(|k| k.to_dot()).collect(),
    }
}

fn clumps_text(search: &ClumpSearch) -> String {
    let mut s = format!(
        "{} over {}: {} clumps ({} étale), {} edges, {} seeds, unbounded {}+{}\n",
        search.correspondence,
        physgraph::field_label(&search.field),
        search.clumps.len(),
        search.etale_clumps().count(),
        search.edges,
        search.seeds,
        search.unbounded_edge_budget,
        search.unbounded_field_budget
    );
    for k in &search.clumps {
        let names = |v: &[PointP1]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            s,
            "  size={} etale={} symmetric={} x_image={{{}}} y_image={{{}}}",
            k.len(),
            k.etale,
            k.is_symmetric(),
            names(&k.x_image),
            names(&k.y_image)
        );
    }
    if let Some(f) = &search.falsification {
        let _ = writeln!(s, "FALSIFIED: {f}");
    }
    s
}

fn clumps_dot(search: &ClumpSearch) -> String {
    let mut s = String::from("graph clumps {\n");
    for (i, k) in search.clumps.iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_{i} {{");
        let _ = writeln!(s, "    label=\"clump {i}{}\";", if k.etale { " (étale)" } else { "" });
        dot_clump(&mut s, i, k);
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}

fn dot_clump(s: &mut String, i: usize, k: &Clump) {
    for x in &k.x_image {
        let _ = writeln!(s, "    \"{i}b:{x}\" [shape=box,label=\"{x}\"];");
    }
    for y in &k.y_image {
        let _ = writeln!(s, "    \"{i}r:{y}\" [shape=circle,label=\"{y}\"];");
    }
    for z in &k.edges {
        for _ in 0..z.edge_count() {
            let _ = writeln!(s, "    \"{i}b:{}\" -- \"{i}r:{}\";", z.x, z.y);
        }
    }
}

fn graph_dot(g: &FiniteGraph) -> String {
    let mut s = String::from("graph g {\n");
    for u in 0..g.n {
        for &v in &g.adj[u] {
            if u < v {
                let _ = writeln!(s, "  {u} -- {v};");
            }
        }
    }
    s.push_str("}\n");
    s
}

/// Oracle against Φ_2: isogenous j's, Deuring against point counts, and the
/// étale clump against the supersingular set.
fn validate(p: u64, deuring_limit: u64, data: Option<&Path>) -> Result<Value, Failure> {
    let c = Correspondence::load("phi2", &correspondence_text("phi2", data)?, Some(p))?;
    let fp = make_field(p, 1)?;
    let fp2 = make_field(p, 2)?;
    let ss = ellcurve::supersingular_set(p)?;

    let js: Vec<_> = ffield::enumerate(&fp)?.collect();
    let isogeny: Vec<Result<Option<Value>, Error>> = js
        .par_iter()
        .map(|j| {
            let j2 = ffield::embed(j, &fp2)?;
            if j.is_zero() || *j == corrdyn::FieldElement::from_u64(&fp, 1728) || ss.js.contains(&j2) {
                return Ok(None);
            }
            let (ext, mut velu) = ellcurve::two_isogenous_j(j)?;
            velu.sort();
            let mut roots = Vec::new();
            for (y, mult) in c.forward(&PointP1::Finite(ffield::embed(j, &ext)?), &ext)? {
                match y {
                    PointP1::Finite(v) => roots.extend(std::iter::repeat_n(v, mult)),
                    PointP1::Infinity => return Ok(Some(json!({ "j": j.to_string(), "reason": "root at infinity" }))),
                }
            }
            roots.sort();
            Ok((roots != velu).then(|| {
                json!({
                    "j": j.to_string(),
                    "velu": velu.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "phi2": roots.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                })
            }))
        })
        .collect();
    let mut checked = 0;
    let mut isogeny_mismatches = Vec::new();
    for r in isogeny {
        if let Some(m) = r? {
            isogeny_mismatches.push(m);
        }
        checked += 1;
    }

    let deuring = if p <= deuring_limit {
        let all: Vec<_> = ffield::enumerate(&fp2)?.collect();
        let bad: Vec<Result<Option<String>, Error>> = all
            .par_iter()
            .map(|j| {
                let hasse = ellcurve::is_supersingular(j)?;
                let count = ellcurve::is_supersingular_by_count(j)?;
                Ok((hasse != count).then(|| j.to_string()))
            })
            .collect();
        let mut mismatches = Vec::new();
        for b in bad {
            if let Some(j) = b? {
                mismatches.push(j);
            }
        }
        json!({ "checked": all.len(), "mismatches": mismatches })
    } else {
        json!({ "checked": 0, "skipped": format!("p > {deuring_limit}"), "mismatches": [] })
    };

    let search = find_all_clumps(&c, &fp2, &ClumpSearchOptions::default_for(&c, ss.count()))?;
    let etale: Vec<&Clump> = search.etale_clumps().collect();
    let matches = match etale.as_slice() {
        [k] => {
            let mut xs = k
                .x_image
                .iter()
                .map(|x| x.embed(&fp2))
                .collect::<corrdyn::Result<Vec<_>>>()?;
            xs.sort();
            xs == ss.js.iter().cloned().map(PointP1::Finite).collect::<Vec<_>>()
        }
        _ => false,
    };
    let agree = isogeny_mismatches.is_empty() && deuring["mismatches"] == json!([]) && matches;
    Ok(json!({
        "p": p,
        "supersingular": ss.to_json(),
        "isogeny": { "checked": checked, "mismatches": isogeny_mismatches },
        "deuring": deuring,
        "clump": {
            "etale_clumps": etale.len(),
            "x_image": etale.first().map(|k| k.x_image.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
            "matches_oracle": matches,
        },
        "agree": agree,
    }))
}
