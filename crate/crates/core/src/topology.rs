//! Graph, path, and problem-instance model plus the text format.
//!
//! Vertices are opaque string ids. Arcs are directed and at most one arc may
//! connect an ordered vertex pair. A path is a nonempty chain of arcs; a
//! path may end on a vertex it visited before (a loop back), but it may not
//! *leave* the same vertex twice, since a forwarding decision at a vertex
//! must be unambiguous within one header.
//!
//! The text format is line oriented:
//!
//! ```text
//! # comment
//! node S0
//! node S1
//! arc S0 S1
//! path S0 S1
//! ```
//!
//! `node` lines declare vertices and must precede their first use. `arc`
//! lines declare directed arcs between declared vertices. `path` lines give
//! a vertex sequence whose consecutive pairs must all be declared arcs.
//! Blank lines are skipped and `#` starts a comment that runs to the end of
//! the line. Serialization writes nodes, then arcs, then paths, each in
//! declaration order, so parse and serialize round-trip exactly.

use std::collections::HashMap;
use std::error::Error;
use std::fmt;

/// Errors from graph construction, path construction, or parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyError {
    /// Malformed input text; carries the 1-based line number.
    Parse { line: usize, message: String },
    /// Structurally invalid graph (duplicate names, duplicate arcs, ...).
    InvalidGraph(String),
    /// Invalid path relative to its graph.
    InvalidPath(String),
    /// Invalid instance (empty or duplicated path list, ...).
    InvalidInstance(String),
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyError::Parse { line, message } => write!(f, "line {line}: {message}"),
            TopologyError::InvalidGraph(m) => write!(f, "invalid graph: {m}"),
            TopologyError::InvalidPath(m) => write!(f, "invalid path: {m}"),
            TopologyError::InvalidInstance(m) => write!(f, "invalid instance: {m}"),
        }
    }
}

impl Error for TopologyError {}

/// Directed graph with string vertex ids.
///
/// Vertices and arcs keep their declaration order; arc indices are stable
/// and used everywhere downstream (lengths, labels) to refer to arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    arcs: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from vertex names and arcs given as index pairs.
    pub fn new(names: Vec<String>, arcs: Vec<(usize, usize)>) -> Result<Self, TopologyError> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.contains(char::is_whitespace) || name.contains('#') {
                return Err(TopologyError::InvalidGraph(format!(
                    "vertex id {name:?} must be nonempty and free of whitespace and '#'"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(TopologyError::InvalidGraph(format!(
                    "duplicate vertex id {name:?}"
                )));
            }
        }
        let mut out = vec![Vec::new(); names.len()];
        let mut seen = HashMap::new();
        for (k, &(tail, head)) in arcs.iter().enumerate() {
            if tail >= names.len() || head >= names.len() {
                return Err(TopologyError::InvalidGraph(format!(
                    "arc {k} references a vertex index out of range"
                )));
            }
            if seen.insert((tail, head), k).is_some() {
                return Err(TopologyError::InvalidGraph(format!(
                    "duplicate arc {} -> {}",
                    names[tail], names[head]
                )));
            }
            out[tail].push(k);
        }
        Ok(Graph { names, index, arcs, out })
    }

    /// Builds a graph from vertex names and arcs given as name pairs.
    pub fn from_named_arcs<S: AsRef<str>>(
        names: Vec<String>,
        arcs: &[(S, S)],
    ) -> Result<Self, TopologyError> {
        let lookup: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let resolve = |name: &str| {
            lookup.get(name).copied().ok_or_else(|| {
                TopologyError::InvalidGraph(format!("arc references unknown vertex {name:?}"))
            })
        };
        let mut pairs = Vec::with_capacity(arcs.len());
        for (t, h) in arcs {
            pairs.push((resolve(t.as_ref())?, resolve(h.as_ref())?));
        }
        Graph::new(names, pairs)
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Tail and head of an arc.
    pub fn arc(&self, a: usize) -> (usize, usize) {
        self.arcs[a]
    }

    /// Out-arc indices of a vertex, in arc declaration order.
    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    /// Arc index connecting `tail` to `head`, if declared.
    pub fn arc_between(&self, tail: usize, head: usize) -> Option<usize> {
        self.out[tail]
            .iter()
            .copied()
            .find(|&a| self.arcs[a].1 == head)
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        0..self.names.len()
    }
}

/// A nonempty chain of arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    arcs: Vec<usize>,
}

impl Path {
    /// Builds a path from arc indices, validating the chain against `graph`.
    pub fn from_arcs(graph: &Graph, arcs: Vec<usize>) -> Result<Self, TopologyError> {
        if arcs.is_empty() {
            return Err(TopologyError::InvalidPath(
                "a path must contain at least one arc".into(),
            ));
        }
        let mut exited = Vec::new();
        for (i, &a) in arcs.iter().enumerate() {
            if a >= graph.arc_count() {
                return Err(TopologyError::InvalidPath(format!(
                    "arc index {a} out of range"
                )));
            }
            let (tail, head) = graph.arc(a);
            if i > 0 {
                let (_, prev_head) = graph.arc(arcs[i - 1]);
                if prev_head != tail {
                    return Err(TopologyError::InvalidPath(format!(
                        "arcs do not chain at position {i}: {} -> {} then {} -> {}",
                        graph.name(graph.arc(arcs[i - 1]).0),
                        graph.name(prev_head),
                        graph.name(tail),
                        graph.name(head),
                    )));
                }
            }
            if exited.contains(&tail) {
                return Err(TopologyError::InvalidPath(format!(
                    "path leaves vertex {} more than once",
                    graph.name(tail)
                )));
            }
            exited.push(tail);
        }
        Ok(Path { arcs })
    }

    /// Builds a path from a vertex index sequence by resolving each
    /// consecutive pair to a declared arc.
    pub fn from_vertices(graph: &Graph, vertices: &[usize]) -> Result<Self, TopologyError> {
        if vertices.len() < 2 {
            return Err(TopologyError::InvalidPath(
                "a path needs at least two vertices".into(),
            ));
        }
        let mut arcs = Vec::with_capacity(vertices.len() - 1);
        for w in vertices.windows(2) {
            let a = graph.arc_between(w[0], w[1]).ok_or_else(|| {
                TopologyError::InvalidPath(format!(
                    "no arc from {} to {}",
                    graph.name(w[0]),
                    graph.name(w[1])
                ))
            })?;
            arcs.push(a);
        }
        Path::from_arcs(graph, arcs)
    }

    pub fn arcs(&self) -> &[usize] {
        &self.arcs
    }

    /// Number of arcs.
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn source(&self, graph: &Graph) -> usize {
        graph.arc(self.arcs[0]).0
    }

    pub fn target(&self, graph: &Graph) -> usize {
        graph.arc(*self.arcs.last().expect("paths are nonempty")).1
    }

    /// The visited vertex sequence, one longer than the arc list.
    pub fn vertices(&self, graph: &Graph) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.arcs.len() + 1);
        seq.push(self.source(graph));
        for &a in &self.arcs {
            seq.push(graph.arc(a).1);
        }
        seq
    }
}

/// A graph together with the paths that must stay encodable.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    graph: Graph,
    paths: Vec<Path>,
    used: Vec<bool>,
}

impl ProblemInstance {
    /// Validates paths against the graph and derives the used-arc set.
    pub fn new(graph: Graph, paths: Vec<Path>) -> Result<Self, TopologyError> {
        if paths.is_empty() {
            return Err(TopologyError::InvalidInstance(
                "the path list must be nonempty".into(),
            ));
        }
        for (i, p) in paths.iter().enumerate() {
            // Re-validate: Path values may come from a different graph.
            Path::from_arcs(&graph, p.arcs.clone()).map_err(|e| {
                TopologyError::InvalidInstance(format!("path {i}: {e}"))
            })?;
            if let Some(j) = paths[..i].iter().position(|q| q == p) {
                return Err(TopologyError::InvalidInstance(format!(
                    "path {i} duplicates path {j}"
                )));
            }
        }
        let mut used = vec![false; graph.arc_count()];
        for p in &paths {
            for &a in p.arcs() {
                used[a] = true;
            }
        }
        Ok(ProblemInstance { graph, paths, used })
    }

    /// Builds an instance without validation. Intended for tests that feed
    /// deliberately broken data to [`validate_instance`].
    pub fn new_unchecked(graph: Graph, paths: Vec<Path>) -> Self {
        let mut used = vec![false; graph.arc_count()];
        for p in &paths {
            for &a in p.arcs() {
                if a < used.len() {
                    used[a] = true;
                }
            }
        }
        ProblemInstance { graph, paths, used }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Whether at least one path crosses the arc.
    pub fn arc_used(&self, a: usize) -> bool {
        self.used[a]
    }

    pub fn used_arcs(&self) -> &[bool] {
        &self.used
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses the text format into a graph plus a (possibly empty) path list.
///
/// This is the low-level entry point used when the caller intends to derive
/// its own path set; [`parse_topology`] additionally requires at least one
/// path and returns a validated instance.
pub fn parse_graph(text: &str) -> Result<(Graph, Vec<Path>), TopologyError> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut arc_lines: Vec<usize> = Vec::new();
    let mut path_specs: Vec<(usize, Vec<usize>)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| TopologyError::Parse { line, message };
        let resolve = |name: &str, index: &HashMap<String, usize>| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| err(format!("unknown vertex {name:?}")))
        };
        match tokens[0] {
            "node" => {
                if tokens.len() != 2 {
                    return Err(err("expected: node <id>".into()));
                }
                let name = tokens[1].to_string();
                if index.contains_key(&name) {
                    return Err(err(format!("duplicate vertex {name:?}")));
                }
                index.insert(name.clone(), names.len());
                names.push(name);
            }
            "arc" => {
                if tokens.len() != 3 {
                    return Err(err("expected: arc <tail> <head>".into()));
                }
                let tail = resolve(tokens[1], &index)?;
                let head = resolve(tokens[2], &index)?;
                if arcs.contains(&(tail, head)) {
                    return Err(err(format!(
                        "duplicate arc {} -> {}",
                        tokens[1], tokens[2]
                    )));
                }
                arcs.push((tail, head));
                arc_lines.push(line);
            }
            "path" => {
                if tokens.len() < 3 {
                    return Err(err("expected: path <v0> <v1> [...]".into()));
                }
                let mut seq = Vec::with_capacity(tokens.len() - 1);
                for t in &tokens[1..] {
                    seq.push(resolve(t, &index)?);
                }
                path_specs.push((line, seq));
            }
            other => {
                return Err(err(format!("unknown directive {other:?}")));
            }
        }
    }

    let graph = Graph::new(names, arcs)?;
    let mut paths = Vec::with_capacity(path_specs.len());
    for (line, seq) in path_specs {
        let p = Path::from_vertices(&graph, &seq)
            .map_err(|e| TopologyError::Parse { line, message: e.to_string() })?;
        if paths.contains(&p) {
            return Err(TopologyError::Parse {
                line,
                message: "duplicate path".into(),
            });
        }
        paths.push(p);
    }
    Ok((graph, paths))
}

/// Parses the text format into a validated instance.
pub fn parse_topology(text: &str) -> Result<ProblemInstance, TopologyError> {
    let (graph, paths) = parse_graph(text)?;
    ProblemInstance::new(graph, paths)
}

/// Serializes vertices and arcs (no path lines) into the text format.
pub fn serialize_graph(g: &Graph) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        out.push_str("node ");
        out.push_str(g.name(v));
        out.push('\n');
    }
    for a in 0..g.arc_count() {
        let (tail, head) = g.arc(a);
        out.push_str("arc ");
        out.push_str(g.name(tail));
        out.push(' ');
        out.push_str(g.name(head));
        out.push('\n');
    }
    out
}

/// Serializes an instance back into the text format.
pub fn serialize_topology(instance: &ProblemInstance) -> String {
    let g = instance.graph();
    let mut out = serialize_graph(g);
    for p in instance.paths() {
        out.push_str("path");
        for v in p.vertices(g) {
            out.push(' ');
            out.push_str(g.name(v));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Shortest path sets
// ---------------------------------------------------------------------------

/// Hop-count shortest paths for every ordered vertex pair.
///
/// Unreachable pairs are omitted. Ties are broken toward the
/// lexicographically smallest vertex-id sequence, which makes the result
/// independent of declaration order. Paths are listed by (source, target)
/// in declaration order.
pub fn shortest_path_set(graph: &Graph) -> Vec<Path> {
    let n = graph.vertex_count();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..graph.arc_count() {
        let (tail, head) = graph.arc(a);
        rev[head].push(tail);
    }

    let mut paths = Vec::new();
    let mut dist = vec![usize::MAX; n];
    for t in 0..n {
        // Breadth-first distances toward t.
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[t] = 0;
        let mut queue = std::collections::VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for &u in &rev[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        for s in 0..n {
            if s == t || dist[s] == usize::MAX {
                continue;
            }
            let mut arcs = Vec::with_capacity(dist[s]);
            let mut v = s;
            while v != t {
                let next = graph
                    .out_arcs(v)
                    .iter()
                    .copied()
                    .filter(|&a| {
                        let head = graph.arc(a).1;
                        dist[head] != usize::MAX && dist[head] + 1 == dist[v]
                    })
                    .min_by(|&a, &b| graph.name(graph.arc(a).1).cmp(graph.name(graph.arc(b).1)))
                    .expect("a vertex at finite distance has a next hop");
                arcs.push(next);
                v = graph.arc(next).1;
            }
            paths.push(Path { arcs });
        }
    }
    // Re-list by source first, then target, both in declaration order.
    paths.sort_by_key(|p| (p.arcs.first().map(|&a| graph.arc(a).0), p.target(graph)));
    paths
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// One structural problem found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    DuplicateArc { first: usize, second: usize },
    ArcEndpointOutOfRange { arc: usize },
    AdjacencyMismatch { vertex: usize },
    EmptyPathList,
    EmptyPath { path: usize },
    PathArcOutOfRange { path: usize, position: usize },
    BrokenChain { path: usize, position: usize },
    RepeatedExit { path: usize, vertex: usize },
    DuplicatePath { first: usize, second: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateArc { first, second } => {
                write!(f, "arc {second} duplicates arc {first}")
            }
            Diagnostic::ArcEndpointOutOfRange { arc } => {
                write!(f, "arc {arc} has an endpoint out of range")
            }
            Diagnostic::AdjacencyMismatch { vertex } => {
                write!(f, "out-adjacency of vertex {vertex} does not match the arc list")
            }
            Diagnostic::EmptyPathList => write!(f, "the path list is empty"),
            Diagnostic::EmptyPath { path } => write!(f, "path {path} has no arcs"),
            Diagnostic::PathArcOutOfRange { path, position } => {
                write!(f, "path {path} references an unknown arc at position {position}")
            }
            Diagnostic::BrokenChain { path, position } => {
                write!(f, "path {path} does not chain at position {position}")
            }
            Diagnostic::RepeatedExit { path, vertex } => {
                write!(f, "path {path} leaves vertex {vertex} more than once")
            }
            Diagnostic::DuplicatePath { first, second } => {
                write!(f, "path {second} duplicates path {first}")
            }
        }
    }
}

/// Checks every structural invariant and returns the violations found.
///
/// An instance built through [`ProblemInstance::new`] always comes back
/// clean; this exists to diagnose hand-built or deserialized data.
pub fn validate_instance(instance: &ProblemInstance) -> Vec<Diagnostic> {
    let g = instance.graph();
    let mut out = Vec::new();

    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for a in 0..g.arc_count() {
        let (tail, head) = g.arc(a);
        if tail >= g.vertex_count() || head >= g.vertex_count() {
            out.push(Diagnostic::ArcEndpointOutOfRange { arc: a });
            continue;
        }
        if let Some(&first) = seen.get(&(tail, head)) {
            out.push(Diagnostic::DuplicateArc { first, second: a });
        } else {
            seen.insert((tail, head), a);
        }
    }
    for v in g.vertices() {
        let ok = g.out_arcs(v).iter().all(|&a| {
            a < g.arc_count() && g.arc(a).0 == v
        });
        if !ok {
            out.push(Diagnostic::AdjacencyMismatch { vertex: v });
        }
    }

    if instance.paths().is_empty() {
        out.push(Diagnostic::EmptyPathList);
    }
    for (i, p) in instance.paths().iter().enumerate() {
        if p.arcs().is_empty() {
            out.push(Diagnostic::EmptyPath { path: i });
            continue;
        }
        let mut exited = Vec::new();
        let mut broken = false;
        for (pos, &a) in p.arcs().iter().enumerate() {
            if a >= g.arc_count() {
                out.push(Diagnostic::PathArcOutOfRange { path: i, position: pos });
                broken = true;
                break;
            }
            let (tail, _) = g.arc(a);
            if pos > 0 && g.arc(p.arcs()[pos - 1]).1 != tail {
                out.push(Diagnostic::BrokenChain { path: i, position: pos });
                broken = true;
                break;
            }
            if exited.contains(&tail) {
                out.push(Diagnostic::RepeatedExit { path: i, vertex: tail });
                broken = true;
                break;
            }
            exited.push(tail);
        }
        if broken {
            continue;
        }
        if let Some(j) = instance.paths()[..i].iter().position(|q| q == p) {
            out.push(Diagnostic::DuplicatePath { first: j, second: i });
        }
    }
    out
}
