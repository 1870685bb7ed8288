//! Undirected graphs with optional self-loops, as movement structures for agents.
//!
//! Vertices are `0..n`. An agent standing on `x` may move to any neighbour of
//! `x`, and may stay on `x` only when `x` carries a self-loop. Domination
//! neighbourhoods ignore self-loops: a vertex holding an agent is dominated
//! whether or not it has a loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported vertex count. Closed neighbourhoods are kept as bit masks.
pub const MAX_VERTICES: usize = 64;

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    name: String,
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    moves: Vec<Vec<usize>>,
    closed: Vec<u64>,
    labels: Option<Vec<i64>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Builds a graph from unordered vertex pairs; `(v, v)` is a self-loop.
    ///
    /// Fails on out-of-range vertices, duplicate edges, and vertices without
    /// any allowed move.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Graph> {
        let name = name.into();
        if n == 0 {
            return Err(Error::InvalidGraph(format!("`{name}` has no vertices")));
        }
        if n > MAX_VERTICES {
            return Err(Error::InvalidGraph(format!(
                "`{name}` has {n} vertices, at most {MAX_VERTICES} are supported"
            )));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) of `{name}` is out of range for {n} vertices"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {}) in `{name}`",
                    e.0, e.1
                )));
            }
        }
        let mut moves = vec![Vec::new(); n];
        let mut closed: Vec<u64> = (0..n).map(|v| 1u64 << v).collect();
        for &(u, v) in &set {
            moves[u].push(v);
            if u != v {
                moves[v].push(u);
                closed[u] |= 1 << v;
                closed[v] |= 1 << u;
            }
        }
        for (v, m) in moves.iter_mut().enumerate() {
            if m.is_empty() {
                return Err(Error::InvalidGraph(format!(
                    "vertex {v} of `{name}` has no allowed move"
                )));
            }
            m.sort_unstable();
        }
        Ok(Graph {
            name,
            n,
            edges: set,
            moves,
            closed,
            labels: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Graph {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u <= v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn has_loop(&self, v: usize) -> bool {
        self.edges.contains(&(v, v))
    }

    /// Vertices reachable in one step from `x`, ascending. Contains `x` iff it has a loop.
    pub fn allowed_moves(&self, x: usize) -> &[usize] {
        &self.moves[x]
    }

    /// Number of allowed moves, counting a self-loop once.
    pub fn degree(&self, x: usize) -> usize {
        self.moves[x].len()
    }

    /// `v` together with its non-loop neighbours.
    pub fn closed_neighborhood(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|u| self.closed[v] >> u & 1 == 1).collect()
    }

    pub(crate) fn closed_mask(&self, v: usize) -> u64 {
        self.closed[v]
    }

    /// Original vertex labels when the graph was read from a file with non-contiguous labels.
    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    /// The graph whose edges join `x` and `a` exactly when a walk of length `h`
    /// leads from `x` to `a` in `self`.
    pub fn walk_power(&self, h: usize) -> Result<Graph> {
        if h == 0 {
            return Err(Error::InvalidParameter("walk length must be at least 1".into()));
        }
        if h == 1 {
            return Ok(self.clone());
        }
        let n = self.n;
        let step: Vec<u64> = self
            .moves
            .iter()
            .map(|m| m.iter().fold(0u64, |acc, &a| acc | 1 << a))
            .collect();
        let mut reach = step.clone();
        for _ in 1..h {
            reach = reach
                .iter()
                .map(|&r| {
                    (0..n)
                        .filter(|&u| r >> u & 1 == 1)
                        .fold(0u64, |acc, u| acc | step[u])
                })
                .collect();
        }
        let mut edges = Vec::new();
        for x in 0..n {
            for a in x..n {
                if reach[x] >> a & 1 == 1 {
                    edges.push((x, a));
                }
            }
        }
        Graph::new(format!("{}^{h}", self.name), n, edges)
    }

    /// Renames vertex `v` to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n || perm.iter().collect::<BTreeSet<_>>().len() != self.n {
            return Err(Error::InvalidParameter("relabeling must be a permutation".into()));
        }
        Graph::new(
            self.name.clone(),
            self.n,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )
    }

    /// Whether `perm` maps the edge set onto itself.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        perm.len() == self.n
            && self
                .edges
                .iter()
                .all(|&(u, v)| self.has_edge(perm[u], perm[v]))
    }

    /// Parses the text format: a header `n m`, then `m` lines `u v`.
    /// Lines starting with `#` are comments. Labels may be arbitrary integers;
    /// they are mapped to `0..n` in ascending order and the mapping is kept.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `n m` header"))?;
        let nums = parse_ints(hline, header)?;
        let [n, m] = nums[..] else {
            return Err(Error::parse(hline, "header must be `n m`"));
        };
        if n <= 0 || m < 0 {
            return Err(Error::parse(hline, "vertex count must be positive"));
        }
        let (n, m) = (n as usize, m as usize);
        let mut raw = Vec::with_capacity(m);
        for (lineno, line) in lines.by_ref() {
            let nums = parse_ints(lineno, line)?;
            let [u, v] = nums[..] else {
                return Err(Error::parse(lineno, "edge line must be `u v`"));
            };
            raw.push((lineno, u, v));
            if raw.len() == m {
                break;
            }
        }
        if raw.len() != m {
            return Err(Error::parse(
                text.lines().count(),
                format!("expected {m} edges, found {}", raw.len()),
            ));
        }
        if let Some((lineno, _)) = lines.next() {
            return Err(Error::parse(lineno, "unexpected content after the last edge"));
        }
        let labels: BTreeSet<i64> = raw.iter().flat_map(|&(_, u, v)| [u, v]).collect();
        if labels.len() != n {
            return Err(Error::InvalidGraph(format!(
                "header declares {n} vertices but edges mention {} distinct labels",
                labels.len()
            )));
        }
        let index: BTreeMap<i64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let contiguous = labels.iter().enumerate().all(|(i, &l)| l == i as i64);
        let mut g = Graph::new(name, n, raw.iter().map(|&(_, u, v)| (index[&u], index[&v])))?;
        if !contiguous {
            g.labels = Some(labels.into_iter().collect());
        }
        Ok(g)
    }

    /// Serializes in the text format read by [`Graph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n{} {}\n", self.name, self.n, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

fn parse_ints(lineno: usize, line: &str) -> Result<Vec<i64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::parse(lineno, format!("`{t}` is not an integer")))
        })
        .collect()
}

/// The cycle `C_n`.
pub fn make_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("a cycle needs at least 3 vertices, got {n}")));
    }
    Graph::new(format!("{n}-gon"), n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// The path `0 - 1 - ... - (n-1)`; `curly` adds self-loops at both ends.
pub fn make_path(n: usize, curly: bool) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("a path needs at least 2 vertices, got {n}")));
    }
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if curly {
        edges.push((0, 0));
        edges.push((n - 1, n - 1));
    }
    let name = if curly { format!("{n}-line curly") } else { format!("{n}-line") };
    Graph::new(name, n, edges)
}

/// The complete graph `K_n` without loops.
pub fn make_complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("K_n needs n >= 2, got {n}")));
    }
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(format!("K{n}"), n, edges)
}

/// The `dim`-dimensional hypercube; vertices adjacent when their labels differ in one bit.
pub fn make_hypercube(dim: usize) -> Result<Graph> {
    if dim == 0 || dim > 6 {
        return Err(Error::InvalidParameter(format!("hypercube dimension {dim} out of range 1..=6")));
    }
    let n = 1usize << dim;
    let edges = (0..n).flat_map(|u| (0..dim).map(move |b| (u, u ^ (1 << b)))).filter(|&(u, v)| u < v);
    Graph::new(format!("Q{dim}"), n, edges)
}

/// Adds a self-loop at every listed vertex that does not already carry one.
pub fn with_loops(g: &Graph, at: impl IntoIterator<Item = usize>) -> Result<Graph> {
    let mut edges: BTreeSet<(usize, usize)> = g.edges.clone();
    for v in at {
        edges.insert((v, v));
    }
    Graph::new(g.name.clone(), g.n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles() {
        let c3 = make_cycle(3).unwrap();
        assert_eq!(c3.edge_count(), 3);
        assert!((0..3).all(|v| c3.degree(v) == 2));
        let c13 = make_cycle(13).unwrap();
        assert_eq!(c13.edge_count(), 13);
        assert!((0..13).all(|v| c13.allowed_moves(v).len() == 2));
        assert_eq!(make_cycle(5).unwrap().allowed_moves(0), &[1, 4]);
        assert!(matches!(make_cycle(2), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn paths() {
        let p3 = make_path(3, true).unwrap();
        assert_eq!(p3.edge_count(), 4);
        assert_eq!(p3.allowed_moves(0), &[0, 1]);
        let p5 = make_path(5, true).unwrap();
        assert_eq!(p5.edges().filter(|(u, v)| u != v).count(), 4);
        assert!(p5.has_loop(0) && p5.has_loop(4) && !p5.has_loop(2));
        let p2 = make_path(2, false).unwrap();
        assert_eq!(p2.allowed_moves(0), &[1]);
        assert_eq!(p2.allowed_moves(1), &[0]);
        assert!(make_path(1, false).is_err());
    }

    #[test]
    fn complete_and_cube() {
        let k4 = make_complete(4).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert_eq!(k4.allowed_moves(2), &[0, 1, 3]);
        let q3 = make_hypercube(3).unwrap();
        assert_eq!(q3.edge_count(), 12);
        assert!((0..8).all(|v| q3.degree(v) == 3));
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(Graph::new("iso", 3, [(0, 1)]).is_err());
        assert!(Graph::new("dup", 2, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new("range", 2, [(0, 2)]).is_err());
        assert!(Graph::new("loop", 1, [(0, 0)]).is_ok());
    }

    #[test]
    fn walk_powers() {
        let c5 = make_cycle(5).unwrap();
        assert_eq!(c5.walk_power(1).unwrap().edges().collect::<Vec<_>>(), c5.edges().collect::<Vec<_>>());

        // Length-2 walks on C4 return home or reach the opposite corner.
        let sq = make_cycle(4).unwrap().walk_power(2).unwrap();
        let want: BTreeSet<(usize, usize)> =
            [(0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (1, 3)].into_iter().collect();
        assert_eq!(sq.edges().collect::<BTreeSet<_>>(), want);

        let e = make_path(2, false).unwrap().walk_power(2).unwrap();
        assert_eq!(e.edges().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn neighborhoods_ignore_loops() {
        let c5 = make_cycle(5).unwrap();
        assert_eq!(c5.closed_neighborhood(0), [0, 1, 4].into_iter().collect());
        let curly = with_loops(&c5, 0..5).unwrap();
        assert_eq!(curly.closed_neighborhood(0), [0, 1, 4].into_iter().collect());
        let k4 = make_complete(4).unwrap();
        assert!((0..4).all(|v| k4.closed_neighborhood(v).len() == 4));
    }

    #[test]
    fn file_format_remaps_labels() {
        let text = "# a triangle with odd labels\n3 3\n10 20\n20 30\n# comment\n30 10\n";
        let g = Graph::parse("t", text).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.labels(), Some(&[10, 20, 30][..]));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);

        let back = Graph::parse("t", &g.to_text()).unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());

        match Graph::parse("bad", "2 1\n0 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Graph::parse("short", "3 3\n0 1\n1 2\n").is_err());
    }
}
