//! Named graphs: parametric families, explicit solids, and edge sets
//! reconstructed from published values.
//!
//! Reconstructed ("figure-derived") entries are checked against every
//! published random and classical value for that name before they are
//! served. A failing entry is refused unless the caller opts in.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::classical::{classical_optimum, random_value};
use crate::error::{Error, Result};
use crate::graphs::{make_complete, make_cycle, make_hypercube, make_path, with_loops, Graph};
use crate::rational::{self, Rational};
use crate::tables::{self, PublishedValue, TableId};
use crate::tasks::{build_game, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExplicitDefinition,
    FigureDerived,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ExplicitDefinition => "explicit-definition",
            Provenance::FigureDerived => "figure-derived",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub aliases: Vec<String>,
    pub graph: Graph,
    pub provenance: Provenance,
    /// Number of non-isomorphic connected graphs on the same vertex count
    /// that reproduce every published value for this name, as found by the
    /// exhaustive search. `None` for explicit definitions.
    pub consistent_candidates: Option<usize>,
}

struct Figure {
    name: &'static str,
    aliases: &'static [&'static str],
    n: usize,
    edges: &'static [(usize, usize)],
    all_loops: bool,
    candidates: usize,
}

const DIAMOND: &[(usize, usize)] = &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)];
const SQUARE: &[(usize, usize)] = &[(0, 1), (1, 2), (2, 3), (0, 3)];
const PENTAGON: &[(usize, usize)] = &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)];
const SPIKE: &[(usize, usize)] = &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 4), (3, 4)];
const ARROW: &[(usize, usize)] = &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 4)];
const CLAMP: &[(usize, usize)] = &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 5), (4, 5)];
const HAT: &[(usize, usize)] = &[
    (0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5),
];
const HOUSE: &[(usize, usize)] = &[
    (0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 5), (2, 4), (2, 5), (3, 4),
];
const CALTROP: &[(usize, usize)] = &[
    (0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 5), (2, 4), (2, 5),
];
const OCTAHEDRON: &[(usize, usize)] = &[
    (0, 2), (0, 3), (0, 4), (0, 5), (1, 2), (1, 3), (1, 4), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5),
];

// Candidate counts come from `examples/catalog_search.rs`. Where several
// graphs fit the published values the loop-free one is kept for plain names
// and the all-loops one for curly names.
const FIGURES: &[Figure] = &[
    Figure { name: "double triangle", aliases: &["diamond"], n: 4, edges: DIAMOND, all_loops: false, candidates: 0 },
    Figure { name: "square curly", aliases: &["4-gon curly"], n: 4, edges: SQUARE, all_loops: true, candidates: 3 },
    Figure { name: "pentagon curly", aliases: &["5-gon curly"], n: 5, edges: PENTAGON, all_loops: true, candidates: 1 },
    Figure { name: "spike", aliases: &[], n: 5, edges: SPIKE, all_loops: false, candidates: 1 },
    Figure { name: "spike curly", aliases: &[], n: 5, edges: SPIKE, all_loops: true, candidates: 0 },
    Figure { name: "arrow", aliases: &[], n: 5, edges: ARROW, all_loops: false, candidates: 0 },
    Figure { name: "arrow curly", aliases: &[], n: 5, edges: ARROW, all_loops: true, candidates: 0 },
    Figure { name: "clamp", aliases: &[], n: 6, edges: CLAMP, all_loops: false, candidates: 0 },
    Figure { name: "hat", aliases: &[], n: 6, edges: HAT, all_loops: false, candidates: 5 },
    Figure { name: "house", aliases: &[], n: 6, edges: HOUSE, all_loops: false, candidates: 6 },
    Figure { name: "pyramid double", aliases: &["double pyramid", "octahedron"], n: 6, edges: OCTAHEDRON, all_loops: false, candidates: 0 },
    Figure { name: "caltrop", aliases: &[], n: 6, edges: CALTROP, all_loops: false, candidates: 1 },
];

const CYCLE_WORDS: &[(&str, usize)] = &[
    ("triangle", 3),
    ("square", 4),
    ("pentagon", 5),
    ("hexagon", 6),
    ("heptagon", 7),
    ("octagon", 8),
    ("ennagon", 9),
    ("enneagon", 9),
    ("nonagon", 9),
    ("decagon", 10),
    ("hendecagon", 11),
    ("undecagon", 11),
    ("dodecagon", 12),
];

/// Lowercase, with `-`, `_` and `,` read as spaces and runs of spaces collapsed.
fn normalize(name: &str) -> String {
    name.to_lowercase()
        .replace(['-', '_', ','], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn figure_graph(f: &Figure) -> Graph {
    let g = Graph::new(f.name, f.n, f.edges.to_vec()).expect("catalog edges are valid");
    if f.all_loops {
        with_loops(&g, 0..f.n).expect("catalog edges are valid")
    } else {
        g
    }
}

enum Resolved {
    Figure(&'static Figure),
    Cycle(usize),
    Line(usize, bool),
    Tetrahedron,
    Cube,
}

fn resolve(name: &str) -> Option<Resolved> {
    let key = normalize(name);
    for f in FIGURES {
        if normalize(f.name) == key || f.aliases.iter().any(|a| normalize(a) == key) {
            return Some(Resolved::Figure(f));
        }
    }
    match key.as_str() {
        "tetrahedron" | "tetraedron" | "k4" => return Some(Resolved::Tetrahedron),
        "cube" | "q3" => return Some(Resolved::Cube),
        _ => {}
    }
    if let Some(&(_, n)) = CYCLE_WORDS.iter().find(|(w, _)| *w == key) {
        return Some(Resolved::Cycle(n));
    }
    let words: Vec<&str> = key.split(' ').collect();
    let n: usize = words.first()?.parse().ok()?;
    match words[1..] {
        ["gon"] => Some(Resolved::Cycle(n)),
        ["line"] => Some(Resolved::Line(n, false)),
        ["line", "curly"] => Some(Resolved::Line(n, true)),
        _ => None,
    }
}

fn not_found(name: &str) -> Error {
    let mut names: Vec<&str> = vec!["tetrahedron", "cube"];
    names.extend(FIGURES.iter().map(|f| f.name));
    Error::NotFound {
        name: name.to_string(),
        available: format!("{}, <n>-gon, <n>-line, <n>-line curly", names.join(", ")),
    }
}

/// The catalog's canonical spelling for a name or alias.
pub fn canonical_name(name: &str) -> Result<String> {
    Ok(match resolve(name).ok_or_else(|| not_found(name))? {
        Resolved::Figure(f) => f.name.to_string(),
        Resolved::Cycle(n) => format!("{n}-gon"),
        Resolved::Line(n, false) => format!("{n}-line"),
        Resolved::Line(n, true) => format!("{n}-line curly"),
        Resolved::Tetrahedron => "tetrahedron".into(),
        Resolved::Cube => "cube".into(),
    })
}

/// Looks up an entry without running the verification gate.
pub fn lookup_unchecked(name: &str) -> Result<CatalogEntry> {
    let resolved = resolve(name).ok_or_else(|| not_found(name))?;
    let canonical = canonical_name(name)?;
    let (graph, aliases, provenance, candidates) = match resolved {
        Resolved::Figure(f) => (
            figure_graph(f),
            f.aliases.iter().map(|s| s.to_string()).collect(),
            Provenance::FigureDerived,
            Some(f.candidates),
        ),
        Resolved::Cycle(n) => {
            let aliases = CYCLE_WORDS.iter().filter(|(_, k)| *k == n).map(|(w, _)| w.to_string()).collect();
            (make_cycle(n)?, aliases, Provenance::ExplicitDefinition, None)
        }
        Resolved::Line(n, curly) => (make_path(n, curly)?, Vec::new(), Provenance::ExplicitDefinition, None),
        Resolved::Tetrahedron => (
            make_complete(4)?.with_name("tetrahedron"),
            vec!["tetraedron".into(), "K4".into()],
            Provenance::ExplicitDefinition,
            None,
        ),
        Resolved::Cube => (
            make_hypercube(3)?.with_name("cube"),
            vec!["Q3".into()],
            Provenance::ExplicitDefinition,
            None,
        ),
    };
    Ok(CatalogEntry {
        graph: graph.with_name(canonical.clone()),
        name: canonical,
        aliases,
        provenance,
        consistent_candidates: candidates,
    })
}

/// Looks up an entry. Figure-derived entries that fail verification are
/// refused with [`Error::Unverified`].
///
/// ```
/// let e = belltasks::catalog::catalog_lookup("Tetrahedron").unwrap();
/// assert_eq!(e.graph.edge_count(), 6);
/// assert!(belltasks::catalog::catalog_lookup("dodecahedron").is_err());
/// ```
pub fn catalog_lookup(name: &str) -> Result<CatalogEntry> {
    lookup(name, false)
}

pub fn lookup(name: &str, allow_unverified: bool) -> Result<CatalogEntry> {
    let entry = lookup_unchecked(name)?;
    if entry.provenance == Provenance::FigureDerived && !allow_unverified && !verification(&entry.name)?.passed() {
        return Err(Error::Unverified(entry.name));
    }
    Ok(entry)
}

/// A graph by catalog name, or from a graph file when `spec` names one.
pub fn load_graph(spec: &str, allow_unverified: bool) -> Result<Graph> {
    let path = std::path::Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Graph::parse(name, &text);
    }
    Ok(lookup(spec, allow_unverified)?.graph)
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub table: Option<TableId>,
    pub spec: TaskSpec,
    pub random: PublishedValue,
    pub classical: PublishedValue,
}

/// Every published random/classical pair for this entry.
pub fn references_for(entry: &CatalogEntry) -> Vec<Reference> {
    tables::rows_for_graph(&entry.name)
        .into_iter()
        .map(|r| Reference {
            table: Some(r.table),
            spec: r.table.spec(),
            random: r.random_value(),
            classical: r.classical_value(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceCheck {
    pub table: Option<u8>,
    pub task: String,
    pub expected_random: String,
    pub computed_random: String,
    pub random_ok: bool,
    pub expected_classical: String,
    pub computed_classical: String,
    pub classical_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub provenance: Provenance,
    pub consistent_candidates: Option<usize>,
    pub checks: Vec<ReferenceCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.random_ok && c.classical_ok)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &ReferenceCheck> {
        self.checks.iter().filter(|c| !(c.random_ok && c.classical_ok))
    }

    /// More than one graph reproduces the published values.
    pub fn is_ambiguous(&self) -> bool {
        self.consistent_candidates.is_some_and(|c| c > 1)
    }
}

fn describe(v: &Rational) -> String {
    format!("{} ({:.6})", rational::format(v), rational::to_f64(v))
}

/// Recomputes random and classical values and compares them with the
/// references.
pub fn verify_catalog_entry(entry: &CatalogEntry, references: &[Reference]) -> Result<VerificationReport> {
    let mut checks = Vec::with_capacity(references.len());
    for r in references {
        let game = build_game(&entry.graph, &r.spec)?;
        let rv = random_value(&game);
        let cv = classical_optimum(&game, r.spec.symmetric_only)?.value;
        checks.push(ReferenceCheck {
            table: r.table.map(TableId::number),
            task: r.spec.to_string(),
            expected_random: r.random.to_string(),
            computed_random: describe(&rv),
            random_ok: r.random.matches(&rv),
            expected_classical: r.classical.to_string(),
            computed_classical: describe(&cv),
            classical_ok: r.classical.matches(&cv),
        });
    }
    Ok(VerificationReport {
        name: entry.name.clone(),
        provenance: entry.provenance,
        consistent_candidates: entry.consistent_candidates,
        checks,
    })
}

/// Cached verification report for a catalog name.
pub fn verification(name: &str) -> Result<VerificationReport> {
    static CACHE: OnceLock<Mutex<HashMap<String, VerificationReport>>> = OnceLock::new();
    let entry = lookup_unchecked(name)?;
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&entry.name) {
        return Ok(r.clone());
    }
    let report = verify_catalog_entry(&entry, &references_for(&entry))?;
    cache.lock().unwrap().insert(entry.name.clone(), report.clone());
    Ok(report)
}

pub fn figure_names() -> Vec<&'static str> {
    let mut names: Vec<&str> = FIGURES.iter().map(|f| f.name).collect();
    names.extend(["tetrahedron", "cube"]);
    names
}

/// One line per named graph: vertex and edge counts, provenance and
/// verification status, followed by the parametric families.
pub fn list_graphs() -> Result<String> {
    let mut out = String::new();
    let mut names = figure_names();
    names.sort();
    for name in names {
        let e = lookup_unchecked(name)?;
        let status = match e.provenance {
            Provenance::ExplicitDefinition => "explicit-definition".to_string(),
            Provenance::FigureDerived => {
                let report = verification(name)?;
                let mut s = String::from("figure-derived, ");
                s.push_str(if report.passed() { "verified" } else { "UNVERIFIED" });
                if report.checks.is_empty() {
                    s.push_str(", no published values");
                }
                if report.is_ambiguous() {
                    s.push_str(&format!(", {} consistent graphs", report.consistent_candidates.unwrap()));
                }
                s
            }
        };
        out.push_str(&format!(
            "{} ({status}): {} vertices, {} edges\n",
            e.name,
            e.graph.n(),
            e.graph.edge_count()
        ));
    }
    out.push_str("<n>-gon (explicit-definition): cycle, n >= 3\n");
    out.push_str("<n>-line (explicit-definition): path, n >= 2\n");
    out.push_str("<n>-line curly (explicit-definition): path with loops at both ends, n >= 2\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        assert_eq!(canonical_name("Triangle").unwrap(), "3-gon");
        assert_eq!(canonical_name("ennagon").unwrap(), "9-gon");
        assert_eq!(canonical_name("square-curly").unwrap(), "square curly");
        assert_eq!(canonical_name("Pyramid, double").unwrap(), "pyramid double");
        assert_eq!(canonical_name("7_line_curly").unwrap(), "7-line curly");
        assert_eq!(canonical_name("tetraedron").unwrap(), "tetrahedron");
        assert!(matches!(canonical_name("dodecahedron"), Err(Error::NotFound { .. })));
    }

    #[test]
    fn explicit_entries() {
        let k4 = lookup_unchecked("tetrahedron").unwrap();
        assert_eq!(k4.graph.edge_count(), 6);
        assert_eq!(k4.provenance, Provenance::ExplicitDefinition);
        let cube = lookup_unchecked("cube").unwrap();
        assert_eq!((cube.graph.n(), cube.graph.edge_count()), (8, 12));
        let c = lookup_unchecked("13-gon").unwrap();
        assert_eq!(c.graph.edge_count(), 13);
    }

    #[test]
    fn curly_figures_have_loops_everywhere() {
        for name in ["square curly", "pentagon curly", "spike curly", "arrow curly"] {
            let g = lookup_unchecked(name).unwrap().graph;
            assert!((0..g.n()).all(|v| g.has_loop(v)), "{name}");
        }
        let g = lookup_unchecked("pentagon curly").unwrap().graph;
        assert_eq!(g.closed_neighborhood(0).len(), 3);
    }

    #[test]
    fn triangle_reference() {
        let e = lookup_unchecked("triangle").unwrap();
        let refs = vec![Reference {
            table: None,
            spec: TaskSpec::rendezvous(crate::tasks::StartRule::Any),
            random: PublishedValue::parse("1/3").unwrap(),
            classical: PublishedValue::parse("5/9").unwrap(),
        }];
        assert!(verify_catalog_entry(&e, &refs).unwrap().passed());
    }

    #[test]
    fn mismatch_is_reported() {
        let e = lookup_unchecked("triangle").unwrap();
        let refs = vec![Reference {
            table: None,
            spec: TaskSpec::rendezvous(crate::tasks::StartRule::Any),
            random: PublishedValue::parse("1/3").unwrap(),
            classical: PublishedValue::parse("2/3").unwrap(),
        }];
        let report = verify_catalog_entry(&e, &refs).unwrap();
        assert!(!report.passed());
        assert_eq!(report.mismatches().count(), 1);
    }
}
