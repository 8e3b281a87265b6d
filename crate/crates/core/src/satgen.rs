//! CNF-to-instance reduction showing the integer problem is NP-hard.
//!
//! Works on CNF formulas whose clauses have 2 or 3 distinct variables
//! (both sizes present), where every literal appears in one or two clauses,
//! both polarities of every variable appear, and no variable exceeds three
//! clauses. [`build_gadget`] turns such a formula into a graph and path set
//! whose minimum worst-case header is at most 7 bits exactly when the
//! formula is satisfiable.
//!
//! Per variable `i` the graph carries a chooser vertex `n:i` with three
//! arcs: toward the true-literal vertex `x:i`, the false-literal vertex
//! `nx:i`, and a decoy `d:i` nothing routes through. The decoy keeps the
//! chooser's used arcs strictly inside the Kraft budget, so one literal
//! arc costs 1 bit and the other 2: a truth assignment. Each literal
//! vertex has two tee arcs that continue to the next clause literal's
//! chooser, or stay unused sinks. A clause becomes a path visiting its
//! literals in variable order; a 3-clause path ends at its last literal,
//! while a 2-clause path continues through a forced two-bit tail
//! `q:i -> u:i -> y:i` whose decoys (`v:i`, `z:i`) keep those hops at one
//! bit each. A 3-clause path then costs its three chooser bits plus 2, a
//! 2-clause path its two chooser bits plus 4: at most 7 exactly when every
//! clause has a true literal.

use std::collections::{BTreeMap, BTreeSet};
use std::error::Error;
use std::fmt;

use rand::Rng;

use crate::topology::{Graph, Path, ProblemInstance};

/// Hard limit for [`enumerate_satisfying`].
pub const MAX_ENUMERATED_VARS: usize = 24;

/// A CNF formula with clauses of 2 or 3 distinct variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    /// Clauses as signed 1-based literals.
    clauses: Vec<Vec<i32>>,
}

/// Errors from parsing, validation, or solving CNF formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatError {
    Parse { line: usize, message: String },
    /// A clause breaks the basic shape rules (size, range, repetition).
    BadClause(String),
    /// The formula breaks the occurrence rules the reduction needs.
    UnsupportedShape(String),
    TooManyVariables { found: usize, max: usize },
}

impl fmt::Display for SatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SatError::Parse { line, message } => write!(f, "line {line}: {message}"),
            SatError::BadClause(m) => write!(f, "bad clause: {m}"),
            SatError::UnsupportedShape(m) => write!(f, "unsupported formula: {m}"),
            SatError::TooManyVariables { found, max } => {
                write!(f, "{found} variables exceed the enumeration limit of {max}")
            }
        }
    }
}

impl Error for SatError {}

impl CnfInstance {
    /// Checks clause sizes (2 or 3), literal ranges, and in-clause variable
    /// distinctness.
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, SatError> {
        for (i, clause) in clauses.iter().enumerate() {
            if clause.len() != 2 && clause.len() != 3 {
                return Err(SatError::BadClause(format!(
                    "clause {i} has {} literals; only 2 or 3 are supported",
                    clause.len()
                )));
            }
            let mut vars = BTreeSet::new();
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > num_vars {
                    return Err(SatError::BadClause(format!(
                        "clause {i} holds literal {lit} outside 1..={num_vars}"
                    )));
                }
                if !vars.insert(var) {
                    return Err(SatError::BadClause(format!(
                        "clause {i} repeats variable {var}"
                    )));
                }
            }
        }
        Ok(CnfInstance { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Checks the occurrence rules the reduction relies on: every literal
    /// in one or two clauses, no variable in more than three, both clause
    /// sizes present, no duplicate clauses.
    pub fn validate_strict(&self) -> Result<(), SatError> {
        let err = |m: String| Err(SatError::UnsupportedShape(m));
        if !self.clauses.iter().any(|c| c.len() == 2)
            || !self.clauses.iter().any(|c| c.len() == 3)
        {
            return err("need at least one 2-literal and one 3-literal clause".into());
        }
        let mut seen = BTreeSet::new();
        for clause in &self.clauses {
            let mut sorted = clause.clone();
            sorted.sort();
            if !seen.insert(sorted) {
                return err(format!("duplicate clause {clause:?}"));
            }
        }
        for var in 1..=self.num_vars {
            let pos = self.occurrences(var as i32).len();
            let neg = self.occurrences(-(var as i32)).len();
            if !(1..=2).contains(&pos) || !(1..=2).contains(&neg) {
                return err(format!(
                    "variable {var} appears {pos} times positive and {neg} negative; \
                     each polarity must appear once or twice"
                ));
            }
            if pos + neg > 3 {
                return err(format!("variable {var} appears in {} clauses", pos + neg));
            }
        }
        Ok(())
    }

    /// Clause indices containing the literal, in clause order.
    fn occurrences(&self, lit: i32) -> Vec<usize> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(&lit))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Parses DIMACS CNF: `c` comments, a `p cnf <vars> <clauses>` header, then
/// zero-terminated clauses.
pub fn parse_dimacs(text: &str) -> Result<CnfInstance, SatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last_line = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        last_line = line;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('c') {
            continue;
        }
        let err = |message: String| SatError::Parse { line, message };
        if let Some(rest) = content.strip_prefix('p') {
            if header.is_some() {
                return Err(err("duplicate problem line".into()));
            }
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            let [kind, vars, count] = tokens[..] else {
                return Err(err("expected: p cnf <vars> <clauses>".into()));
            };
            if kind != "cnf" {
                return Err(err(format!("unsupported problem kind {kind:?}")));
            }
            let vars = vars.parse().map_err(|_| err(format!("bad count {vars:?}")))?;
            let count = count.parse().map_err(|_| err(format!("bad count {count:?}")))?;
            header = Some((vars, count));
            continue;
        }
        if header.is_none() {
            return Err(err("clause before the problem line".into()));
        }
        for token in content.split_whitespace() {
            let lit: i32 = token
                .parse()
                .map_err(|_| err(format!("bad literal {token:?}")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    let Some((num_vars, expected)) = header else {
        return Err(SatError::Parse { line: last_line, message: "missing problem line".into() });
    };
    if !current.is_empty() {
        return Err(SatError::Parse {
            line: last_line,
            message: "unterminated clause at end of input".into(),
        });
    }
    if clauses.len() != expected {
        return Err(SatError::Parse {
            line: last_line,
            message: format!("header promises {expected} clauses, found {}", clauses.len()),
        });
    }
    CnfInstance::new(num_vars, clauses)
}

/// The reduction output.
#[derive(Debug, Clone)]
pub struct GadgetBuild {
    pub instance: ProblemInstance,
    /// Non-fatal oddities, e.g. both literal arcs of a chooser leading to
    /// the same next vertex.
    pub warnings: Vec<String>,
}

fn lit_vertex(lit: i32) -> String {
    if lit > 0 {
        format!("x:{lit}")
    } else {
        format!("nx:{}", -lit)
    }
}

/// Builds the graph-and-paths instance for a strict-shape formula.
pub fn build_gadget(cnf: &CnfInstance) -> Result<GadgetBuild, SatError> {
    cnf.validate_strict()?;
    let n = cnf.num_vars;

    // Clauses sorted by variable; paths visit choosers in ascending order.
    let sorted_clauses: Vec<Vec<i32>> = cnf
        .clauses
        .iter()
        .map(|c| {
            let mut s = c.clone();
            s.sort_by_key(|l| l.unsigned_abs());
            s
        })
        .collect();

    // Where each literal's tee slots lead: for every occurrence, the next
    // chooser (not last), a fresh sink (last of a 3-clause), or the forced
    // tail entry `q` (last of a 2-clause). Duplicate targets collapse onto
    // one slot.
    let mut slot_targets: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    let mut q_indices: BTreeSet<usize> = BTreeSet::new();
    for clause in &sorted_clauses {
        for (pos, &lit) in clause.iter().enumerate() {
            let target = if pos + 1 < clause.len() {
                format!("n:{}", clause[pos + 1].unsigned_abs())
            } else if clause.len() == 3 {
                continue; // the last tee of a 3-clause stays a sink slot
            } else {
                let var = lit.unsigned_abs() as usize;
                q_indices.insert(var);
                format!("q:{var}")
            };
            let targets = slot_targets.entry(lit).or_default();
            if !targets.contains(&target) {
                targets.push(target);
            }
        }
    }

    let mut names: Vec<String> = Vec::new();
    let mut arcs: Vec<(String, String)> = Vec::new();
    for i in 1..=n {
        names.push(format!("n:{i}"));
        names.push(format!("x:{i}"));
        names.push(format!("nx:{i}"));
        names.push(format!("d:{i}"));
    }
    for i in 1..=n {
        arcs.push((format!("n:{i}"), format!("x:{i}")));
        arcs.push((format!("n:{i}"), format!("nx:{i}")));
        arcs.push((format!("n:{i}"), format!("d:{i}")));
        for (lit, sink_prefix) in [(i as i32, "t"), (-(i as i32), "f")] {
            let assigned = slot_targets.get(&lit).cloned().unwrap_or_default();
            for slot in 0..2usize {
                let head = match assigned.get(slot) {
                    Some(target) => target.clone(),
                    None => {
                        let sink = format!("{sink_prefix}{}:{i}", slot + 1);
                        names.push(sink.clone());
                        sink
                    }
                };
                arcs.push((lit_vertex(lit), head));
            }
        }
    }
    for &j in &q_indices {
        for part in ["q", "u", "v", "y", "z"] {
            names.push(format!("{part}:{j}"));
        }
        arcs.push((format!("q:{j}"), format!("u:{j}")));
        arcs.push((format!("q:{j}"), format!("v:{j}")));
        arcs.push((format!("u:{j}"), format!("y:{j}")));
        arcs.push((format!("u:{j}"), format!("z:{j}")));
    }
    let graph = Graph::from_named_arcs(names, &arcs)
        .map_err(|e| SatError::UnsupportedShape(format!("gadget graph: {e}")))?;

    let mut warnings = Vec::new();
    for i in 1..=n {
        let pos = slot_targets.get(&(i as i32)).cloned().unwrap_or_default();
        let neg = slot_targets.get(&(-(i as i32))).cloned().unwrap_or_default();
        for t in pos.iter().filter(|t| neg.contains(t)) {
            warnings.push(format!(
                "both literal vertices of variable {i} continue to {t}; \
                 routes through that stretch differ only in the literal hop"
            ));
        }
    }

    let mut paths = Vec::new();
    for clause in &sorted_clauses {
        let mut route: Vec<String> = Vec::new();
        for (pos, &lit) in clause.iter().enumerate() {
            route.push(format!("n:{}", lit.unsigned_abs()));
            route.push(lit_vertex(lit));
            // A 3-clause path ends at its last literal vertex; a 2-clause
            // path continues through the forced two-bit tail.
            if pos + 1 == clause.len() && clause.len() == 2 {
                let var = lit.unsigned_abs() as usize;
                route.push(format!("q:{var}"));
                route.push(format!("u:{var}"));
                route.push(format!("y:{var}"));
            }
        }
        let indices: Vec<usize> = route
            .iter()
            .map(|name| graph.index_of(name).expect("gadget routes use declared vertices"))
            .collect();
        let path = Path::from_vertices(&graph, &indices)
            .map_err(|e| SatError::UnsupportedShape(format!("clause path: {e}")))?;
        paths.push(path);
    }
    let instance = ProblemInstance::new(graph, paths)
        .map_err(|e| SatError::UnsupportedShape(format!("gadget instance: {e}")))?;
    Ok(GadgetBuild { instance, warnings })
}

/// Arc lengths certifying the gadget objective for a truth assignment:
/// 1 bit on each satisfied literal arc, 2 on the other literal arc and the
/// decoy, 1 everywhere else.
pub fn witness_lengths(gadget: &ProblemInstance, assignment: &[bool]) -> Vec<u32> {
    let g = gadget.graph();
    (0..g.arc_count())
        .map(|a| {
            let (tail, head) = g.arc(a);
            let tail_name = g.name(tail);
            if let Some(var) = tail_name.strip_prefix("n:") {
                let var: usize = var.parse().expect("chooser names carry the variable");
                let truth = assignment[var - 1];
                match g.name(head).split(':').next().unwrap_or("") {
                    "x" => {
                        if truth {
                            1
                        } else {
                            2
                        }
                    }
                    "nx" => {
                        if truth {
                            2
                        } else {
                            1
                        }
                    }
                    _ => 2,
                }
            } else {
                1
            }
        })
        .collect()
}

/// Finds a satisfying assignment by enumeration, if one exists.
pub fn enumerate_satisfying(cnf: &CnfInstance) -> Result<Option<Vec<bool>>, SatError> {
    if cnf.num_vars > MAX_ENUMERATED_VARS {
        return Err(SatError::TooManyVariables {
            found: cnf.num_vars,
            max: MAX_ENUMERATED_VARS,
        });
    }
    for mask in 0u32..1 << cnf.num_vars {
        let satisfied = cnf.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let bit = mask >> (lit.unsigned_abs() - 1) & 1 == 1;
                (lit > 0) == bit
            })
        });
        if satisfied {
            return Ok(Some((0..cnf.num_vars).map(|i| mask >> i & 1 == 1).collect()));
        }
    }
    Ok(None)
}

/// Samples a formula that passes [`CnfInstance::validate_strict`].
///
/// Every literal goes into the occurrence pool once, plus one random extra
/// polarity for some variables; the pool is cut into 2- and 3-literal
/// clauses with distinct variables. Needs at least three variables.
pub fn sample_strict_cnf<R: Rng>(rng: &mut R, num_vars: usize) -> CnfInstance {
    assert!(num_vars >= 3, "the clause shapes need at least three variables");
    'attempt: loop {
        let mut pool: Vec<i32> = (1..=num_vars as i32).flat_map(|i| [i, -i]).collect();
        for i in 1..=num_vars as i32 {
            if rng.gen_bool(0.5) {
                pool.push(if rng.gen_bool(0.5) { i } else { -i });
            }
        }
        let total = pool.len();
        // Clause sizes: a 2s and b 3s with 2a + 3b = total, both present.
        let options: Vec<(usize, usize)> = (1..total / 3 + 1)
            .filter(|&b| total >= 3 * b && (total - 3 * b).is_multiple_of(2) && (total - 3 * b) >= 2)
            .map(|b| ((total - 3 * b) / 2, b))
            .collect();
        if options.is_empty() {
            continue;
        }
        let (twos, threes) = options[rng.gen_range(0..options.len())];
        let mut sizes = vec![2usize; twos];
        sizes.extend(std::iter::repeat_n(3, threes));
        for i in (1..sizes.len()).rev() {
            sizes.swap(i, rng.gen_range(0..=i));
        }
        for i in (1..pool.len()).rev() {
            pool.swap(i, rng.gen_range(0..=i));
        }
        let mut clauses = Vec::with_capacity(sizes.len());
        for &size in &sizes {
            let mut clause: Vec<i32> = Vec::with_capacity(size);
            let mut rest = Vec::new();
            for lit in pool.drain(..) {
                if clause.len() < size
                    && !clause.iter().any(|c| c.unsigned_abs() == lit.unsigned_abs())
                {
                    clause.push(lit);
                } else {
                    rest.push(lit);
                }
            }
            pool = rest;
            if clause.len() != size {
                continue 'attempt;
            }
            clauses.push(clause);
        }
        let Ok(cnf) = CnfInstance::new(num_vars, clauses) else {
            continue;
        };
        if cnf.validate_strict().is_ok() {
            return cnf;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{brute_force_exact, ExactConfig};
    use crate::integerize::objective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// (x1 v x2 v x3) (-x1 v -x2) (-x2 v -x3): satisfiable, e.g. by TFF.
    fn sat_formula() -> CnfInstance {
        CnfInstance::new(3, vec![vec![1, 2, 3], vec![-1, -2], vec![-2, -3]]).unwrap()
    }

    /// Three equivalence pairs force x1, x2, x3 true; the final clause
    /// forbids exactly that.
    fn unsat_formula() -> CnfInstance {
        CnfInstance::new(
            6,
            vec![
                vec![1, 4],
                vec![-4, 1],
                vec![2, 5],
                vec![-5, 2],
                vec![3, 6],
                vec![-6, 3],
                vec![-1, -2, -3],
            ],
        )
        .unwrap()
    }

    #[test]
    fn dimacs_round_trip_essentials() {
        let cnf = parse_dimacs(
            "c a comment\np cnf 3 3\n1 2 3 0\n-1 -2 0\n-2\n-3 0\n",
        )
        .unwrap();
        assert_eq!(cnf, sat_formula());
    }

    #[test]
    fn dimacs_rejects_malformed_input() {
        assert!(matches!(parse_dimacs("1 2 0\n"), Err(SatError::Parse { line: 1, .. })));
        assert!(parse_dimacs("p cnf 2 1\n1 2\n").is_err());
        assert!(parse_dimacs("p cnf 2 2\n1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 3 0\n").is_err());
    }

    #[test]
    fn clause_shape_is_enforced() {
        assert!(CnfInstance::new(2, vec![vec![1]]).is_err());
        assert!(CnfInstance::new(4, vec![vec![1, 2, 3, 4]]).is_err());
        assert!(CnfInstance::new(2, vec![vec![1, -1]]).is_err());
        assert!(CnfInstance::new(2, vec![vec![1, 0]]).is_err());
    }

    #[test]
    fn strict_validation_counts_occurrences() {
        assert!(sat_formula().validate_strict().is_ok());
        assert!(unsat_formula().validate_strict().is_ok());
        // Missing negative polarity of x3.
        let cnf = CnfInstance::new(3, vec![vec![1, 2, 3], vec![-1, -2]]).unwrap();
        assert!(cnf.validate_strict().is_err());
        // Only 2-clauses.
        let cnf = CnfInstance::new(2, vec![vec![1, 2], vec![-1, -2]]).unwrap();
        assert!(cnf.validate_strict().is_err());
        // Duplicate clause.
        let cnf = CnfInstance::new(
            3,
            vec![vec![1, 2, 3], vec![-1, -2], vec![-2, -1], vec![-3, 1]],
        )
        .unwrap();
        assert!(cnf.validate_strict().is_err());
    }

    #[test]
    fn gadget_shape_for_the_sat_formula() {
        let build = build_gadget(&sat_formula()).unwrap();
        let inst = &build.instance;
        let g = inst.graph();
        assert_eq!(inst.paths().len(), 3);
        // Clause paths: 5 arcs for the 3-clause, 6 for each 2-clause.
        assert_eq!(inst.paths()[0].len(), 5);
        assert_eq!(inst.paths()[1].len(), 6);
        assert_eq!(inst.paths()[2].len(), 6);
        // Choosers keep their decoys unused.
        for i in 1..=3 {
            let v = g.index_of(&format!("n:{i}")).unwrap();
            assert_eq!(g.out_degree(v), 3);
            let d = g.index_of(&format!("d:{i}")).unwrap();
            let decoy = g.arc_between(v, d).unwrap();
            assert!(!inst.arc_used(decoy));
        }
        // x:1 continues to n:2 (clause 1) and keeps one sink slot.
        let x1 = g.index_of("x:1").unwrap();
        let n2 = g.index_of("n:2").unwrap();
        assert!(g.arc_between(x1, n2).is_some());
        assert!(g.index_of("t2:1").is_some());
        assert!(g.index_of("t1:1").is_none());
        // The 2-clauses end through the forced tails of x2 and x3.
        assert!(g.index_of("q:2").is_some());
        assert!(g.index_of("q:3").is_some());
    }

    #[test]
    fn witness_matches_satisfiability() {
        let cnf = sat_formula();
        let build = build_gadget(&cnf).unwrap();
        let assignment = enumerate_satisfying(&cnf).unwrap().expect("satisfiable");
        let lengths: Vec<Option<u32>> = witness_lengths(&build.instance, &assignment)
            .into_iter()
            .map(Some)
            .collect();
        let worst = objective(&build.instance, &lengths).unwrap();
        assert!(worst <= 7, "witness reaches {worst}");
    }

    #[test]
    fn reduction_matches_sat_on_fixed_formulas() {
        for (cnf, satisfiable) in [(sat_formula(), true), (unsat_formula(), false)] {
            assert_eq!(enumerate_satisfying(&cnf).unwrap().is_some(), satisfiable);
            let build = build_gadget(&cnf).unwrap();
            let exact = brute_force_exact(&build.instance, &ExactConfig::default()).unwrap();
            if satisfiable {
                assert!(exact.objective <= 7, "objective {}", exact.objective);
            } else {
                assert!(exact.objective >= 8, "objective {}", exact.objective);
            }
        }
    }

    #[test]
    fn shared_continuations_are_flagged() {
        // x4 and -x4 are each the last literal of a 2-clause, so both
        // continue to q:4.
        let cnf = unsat_formula();
        let build = build_gadget(&cnf).unwrap();
        assert!(
            build.warnings.iter().any(|w| w.contains("variable 4")),
            "warnings: {:?}",
            build.warnings
        );
    }

    #[test]
    fn sampler_output_is_strict_and_varied() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sat = 0;
        for _ in 0..30 {
            let cnf = sample_strict_cnf(&mut rng, 3 + (sat % 3) as usize);
            cnf.validate_strict().unwrap();
            if enumerate_satisfying(&cnf).unwrap().is_some() {
                sat += 1;
            }
            build_gadget(&cnf).unwrap();
        }
        assert!(sat > 0);
    }
}
