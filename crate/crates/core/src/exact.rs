//! Exact minimum worst-case path length by exhaustive search.
//!
//! Ground truth for small instances. Arcs no path crosses are treated as
//! present but arbitrarily long, so at a vertex with such arcs the used
//! arcs must fit strictly inside the Kraft budget; at a vertex whose arcs
//! are all used the budget may be met exactly.
//!
//! The search enumerates, per vertex, only the Pareto-minimal feasible
//! length tuples for its used arcs (raising a length never helps the
//! objective, so some optimum uses a minimal tuple at every vertex), then
//! branch-and-bounds over vertices in path order with per-path partial-sum
//! pruning.

use std::error::Error;
use std::fmt;

use crate::integerize::{ceil_log2, MAX_LENGTH};
use crate::topology::ProblemInstance;

/// Caps the product of per-vertex tuple counts before searching.
pub const DEFAULT_STATE_LIMIT: u128 = 100_000_000;

/// Search limits for [`brute_force_exact`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactConfig {
    /// Refuse to search more than this many tuple combinations.
    pub state_limit: u128,
    /// Largest arc length considered; defaults to the fixed-width baseline
    /// objective, which no arc exceeds in some optimal solution.
    pub cap: Option<u32>,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { state_limit: DEFAULT_STATE_LIMIT, cap: None }
    }
}

/// A proven-optimal assignment for the used arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSolution {
    /// Minimum worst-case path bits.
    pub objective: u32,
    /// Lengths for used arcs; unused arcs stay `None`.
    pub lengths: Vec<Option<u32>>,
}

/// Why the search refused to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactError {
    SearchSpaceTooLarge { states: u128, limit: u128 },
    /// A vertex has no feasible tuple under the requested cap.
    InfeasibleUnderCap { vertex: String, cap: u32 },
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::SearchSpaceTooLarge { states, limit } => {
                write!(f, "search space of {states} states exceeds the limit of {limit}")
            }
            ExactError::InfeasibleUnderCap { vertex, cap } => {
                write!(f, "vertex {vertex} has no feasible lengths at or below {cap} bits")
            }
        }
    }
}

impl Error for ExactError {}

const BUDGET: u128 = 1u128 << MAX_LENGTH;

fn usage(lengths: &[u32]) -> u128 {
    lengths.iter().map(|&l| 1u128 << (MAX_LENGTH - l)).sum()
}

fn fits(lengths: &[u32], strict: bool) -> bool {
    let u = usage(lengths);
    if strict {
        u < BUDGET
    } else {
        u <= BUDGET
    }
}

/// Nondecreasing feasible tuples of `k` lengths in `0..=cap` from which no
/// single length can be lowered.
fn minimal_multisets(k: usize, strict: bool, cap: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(
        k: usize,
        strict: bool,
        cap: u32,
        lo: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if current.len() == k {
            if !fits(current, strict) {
                return;
            }
            // Minimal iff no single decrement stays feasible.
            for i in 0..k {
                if current[i] == 0 || (i > 0 && current[i] == current[i - 1]) {
                    continue;
                }
                current[i] -= 1;
                let ok = fits(current, strict);
                current[i] += 1;
                if ok {
                    return;
                }
            }
            out.push(current.clone());
            return;
        }
        // Everything still to come is at least 2^-cap of the budget.
        let remaining = (k - current.len()) as u128;
        for l in lo..=cap {
            current.push(l);
            let floor_usage = usage(current) + (remaining - 1) * (1u128 << (MAX_LENGTH - cap));
            let plausible = if strict { floor_usage < BUDGET } else { floor_usage <= BUDGET };
            if plausible {
                recurse(k, strict, cap, l, current, out);
            }
            current.pop();
        }
    }
    recurse(k, strict, cap, 0, &mut current, &mut out);
    out
}

/// All distinct orderings of a multiset.
fn unique_permutations(multiset: &[u32]) -> Vec<Vec<u32>> {
    let mut values: Vec<u32> = multiset.to_vec();
    values.sort();
    values.dedup();
    let mut counts: Vec<usize> = values
        .iter()
        .map(|v| multiset.iter().filter(|&&x| x == *v).count())
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(multiset.len());
    fn recurse(
        values: &[u32],
        counts: &mut [usize],
        current: &mut Vec<u32>,
        target: usize,
        out: &mut Vec<Vec<u32>>,
    ) {
        if current.len() == target {
            out.push(current.clone());
            return;
        }
        for i in 0..values.len() {
            if counts[i] == 0 {
                continue;
            }
            counts[i] -= 1;
            current.push(values[i]);
            recurse(values, counts, current, target, out);
            current.pop();
            counts[i] += 1;
        }
    }
    recurse(&values, &mut counts, &mut current, multiset.len(), &mut out);
    out
}

/// Minimizes the worst-case path bits exactly.
pub fn brute_force_exact(
    instance: &ProblemInstance,
    config: &ExactConfig,
) -> Result<ExactSolution, ExactError> {
    let g = instance.graph();
    let n = g.vertex_count();

    let used_out: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            g.out_arcs(v)
                .iter()
                .copied()
                .filter(|&a| instance.arc_used(a))
                .collect()
        })
        .collect();
    let has_unused: Vec<bool> = (0..n)
        .map(|v| g.out_arcs(v).iter().any(|&a| !instance.arc_used(a)))
        .collect();

    // Uniform per-vertex widths give the initial incumbent and the length
    // cap: `ceil(log2 k)` normally, one more step when unused arcs must
    // keep strict room.
    let uniform: Vec<u32> = (0..n)
        .map(|v| {
            let k = used_out[v].len() as u64;
            if k == 0 {
                0
            } else if has_unused[v] {
                ceil_log2(k + 1)
            } else {
                ceil_log2(k)
            }
        })
        .collect();
    let path_sum = |per_vertex: &dyn Fn(usize) -> u64| -> u64 {
        instance
            .paths()
            .iter()
            .map(|p| p.arcs().iter().map(|&a| per_vertex(g.arc(a).0)).sum())
            .max()
            .unwrap_or(0)
    };
    let fixed_objective = path_sum(&|v| u64::from(uniform[v]));
    let cap = config
        .cap
        .unwrap_or_else(|| fixed_objective.try_into().expect("baseline fits in u32"))
        .min(MAX_LENGTH);

    // Active vertices in order of first appearance along the paths.
    let mut order: Vec<usize> = Vec::new();
    for p in instance.paths() {
        for &a in p.arcs() {
            let v = g.arc(a).0;
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }

    let mut tuples: Vec<Vec<Vec<u32>>> = vec![Vec::new(); n];
    let mut states: u128 = 1;
    for &v in &order {
        let k = used_out[v].len();
        let mut expanded = Vec::new();
        for multiset in minimal_multisets(k, has_unused[v], cap) {
            expanded.extend(unique_permutations(&multiset));
        }
        if expanded.is_empty() {
            return Err(ExactError::InfeasibleUnderCap { vertex: g.name(v).to_string(), cap });
        }
        states = states.saturating_mul(expanded.len() as u128);
        tuples[v] = expanded;
    }
    if states > config.state_limit {
        return Err(ExactError::SearchSpaceTooLarge { states, limit: config.state_limit });
    }

    let min_len: Vec<u64> = (0..n)
        .map(|v| {
            tuples[v]
                .iter()
                .flat_map(|t| t.iter())
                .map(|&l| u64::from(l))
                .min()
                .unwrap_or(0)
        })
        .collect();

    let arc_paths: Vec<Vec<usize>> = {
        let mut m = vec![Vec::new(); g.arc_count()];
        for (p, path) in instance.paths().iter().enumerate() {
            for &a in path.arcs() {
                m[a].push(p);
            }
        }
        m
    };

    // Optimistic per-path totals: assigned tails contribute their length,
    // unassigned tails their vertex's smallest possible length.
    let mut bounds: Vec<u64> = instance
        .paths()
        .iter()
        .map(|p| p.arcs().iter().map(|&a| min_len[g.arc(a).0]).sum())
        .collect();

    let mut lengths: Vec<Option<u32>> = vec![None; g.arc_count()];
    let mut best: Option<(u64, Vec<Option<u32>>)> = None;
    let mut upper = fixed_objective + 1;

    struct Search<'s> {
        order: &'s [usize],
        used_out: &'s [Vec<usize>],
        tuples: &'s [Vec<Vec<u32>>],
        min_len: &'s [u64],
        arc_paths: &'s [Vec<usize>],
    }

    fn descend(
        s: &Search,
        depth: usize,
        bounds: &mut [u64],
        lengths: &mut Vec<Option<u32>>,
        upper: &mut u64,
        best: &mut Option<(u64, Vec<Option<u32>>)>,
    ) {
        if depth == s.order.len() {
            let objective = bounds.iter().copied().max().unwrap_or(0);
            if objective < *upper {
                *upper = objective;
                *best = Some((objective, lengths.clone()));
            }
            return;
        }
        let v = s.order[depth];
        for tuple in &s.tuples[v] {
            for (j, &a) in s.used_out[v].iter().enumerate() {
                let delta = u64::from(tuple[j]) - s.min_len[v];
                for &p in &s.arc_paths[a] {
                    bounds[p] += delta;
                }
                lengths[a] = Some(tuple[j]);
            }
            if bounds.iter().copied().max().unwrap_or(0) < *upper {
                descend(s, depth + 1, bounds, lengths, upper, best);
            }
            for (j, &a) in s.used_out[v].iter().enumerate() {
                let delta = u64::from(tuple[j]) - s.min_len[v];
                for &p in &s.arc_paths[a] {
                    bounds[p] -= delta;
                }
                lengths[a] = None;
            }
        }
    }

    let search = Search {
        order: &order,
        used_out: &used_out,
        tuples: &tuples,
        min_len: &min_len,
        arc_paths: &arc_paths,
    };
    descend(&search, 0, &mut bounds, &mut lengths, &mut upper, &mut best);

    let (objective, lengths) = best.unwrap_or_else(|| {
        // The uniform incumbent is always reachable by the search, but keep
        // it as an explicit fallback assignment.
        let mut fallback = vec![None; g.arc_count()];
        for &v in &order {
            for &a in &used_out[v] {
                fallback[a] = Some(uniform[v]);
            }
        }
        (fixed_objective, fallback)
    });
    Ok(ExactSolution {
        objective: objective.try_into().expect("objective fits in u32"),
        lengths,
    })
}
