//! Integer arc lengths: rounding, exact tree solutions, local improvement.
//!
//! Integer lengths live in `Vec<Option<u32>>` indexed by arc; `None` marks
//! an arc not priced yet. All Kraft checks here are exact, done in 128-bit
//! fixed point with 64 fractional bits, which is why lengths are capped at
//! 64 throughout.

use std::collections::HashSet;
use std::error::Error;
use std::fmt;

use num::BigUint;

use crate::scalar::Scalar;
use crate::solver::RealLengths;
use crate::topology::ProblemInstance;

/// Integer lengths never exceed this; 2^-64 is the fixed-point resolution.
pub const MAX_LENGTH: u32 = 64;

/// Default slack subtracted before rounding up, so a real length sitting a
/// hair above an integer (solver noise) rounds down to it.
pub const DEFAULT_SNAP_EPS: f64 = 1e-6;

/// Smallest `t` with `2^t >= n`, for `n >= 1`; 0 maps to 0.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        n.next_power_of_two().trailing_zeros()
    }
}

fn ceil_log2_big(n: &BigUint) -> u64 {
    use num::{One, Zero};
    if n.is_zero() || n.is_one() {
        return 0;
    }
    let bits = n.bits();
    let power_of_two = (n & &(n - 1u32)).is_zero();
    if power_of_two {
        bits - 1
    } else {
        bits
    }
}

/// Rounds recovered real lengths up to integers, snapping near-integers
/// down: `ceil(len - snap_eps)`, clamped to `[0, MAX_LENGTH]`. `None`
/// entries stay `None`.
pub fn round_lengths<T: Scalar>(real: &RealLengths<T>, snap_eps: T) -> Vec<Option<u32>> {
    real.lengths
        .iter()
        .map(|len| {
            len.map(|l| {
                let up = (l - snap_eps).ceil().to_f64();
                up.clamp(0.0, MAX_LENGTH as f64) as u32
            })
        })
        .collect()
}

/// Per-path total bits; `None` when the path crosses an unpriced arc.
pub fn path_bits(instance: &ProblemInstance, lengths: &[Option<u32>], path: usize) -> Option<u64> {
    instance.paths()[path]
        .arcs()
        .iter()
        .map(|&a| lengths[a].map(u64::from))
        .sum()
}

/// Worst-case path bits; `None` when any path crosses an unpriced arc.
pub fn objective(instance: &ProblemInstance, lengths: &[Option<u32>]) -> Option<u32> {
    let mut worst = 0u64;
    for p in 0..instance.paths().len() {
        worst = worst.max(path_bits(instance, lengths, p)?);
    }
    Some(worst.try_into().expect("path bits fit in u32"))
}

/// Header bits each path would need if every vertex used plain fixed-width
/// port numbers: `ceil(log2(out_degree))` bits per hop, worst case over
/// paths.
pub fn fixed_length_baseline(instance: &ProblemInstance) -> u32 {
    let g = instance.graph();
    let per_vertex: Vec<u64> = g
        .vertices()
        .map(|v| u64::from(ceil_log2(g.out_degree(v) as u64)))
        .collect();
    let worst = instance
        .paths()
        .iter()
        .map(|p| p.arcs().iter().map(|&a| per_vertex[g.arc(a).0]).sum::<u64>())
        .max()
        .unwrap_or(0);
    worst.try_into().expect("path bits fit in u32")
}

/// Fixed-point Kraft usage of the assigned out-arcs of `v`: sum of
/// `2^(64 - len)` against a budget of `2^64`.
fn kraft_usage(
    instance: &ProblemInstance,
    lengths: &[Option<u32>],
    v: usize,
) -> u128 {
    instance
        .graph()
        .out_arcs(v)
        .iter()
        .filter_map(|&a| lengths[a])
        .map(|l| 1u128 << (MAX_LENGTH - l.min(MAX_LENGTH)))
        .sum()
}

const KRAFT_BUDGET: u128 = 1u128 << MAX_LENGTH;

/// Shortens arcs on worst-case paths while Kraft budgets allow it.
///
/// Repeatedly scans the currently longest fully-priced paths in list order,
/// walking each from source to destination, and applies the first
/// single-bit decrement whose tail vertex has the slack to pay for it
/// (going from `len` to `len - 1` costs one extra `2^-len`). Stops when no
/// such decrement exists. Returns the number of decrements applied.
pub fn local_search(instance: &ProblemInstance, lengths: &mut [Option<u32>]) -> usize {
    let mut applied = 0;
    loop {
        let totals: Vec<Option<u64>> = (0..instance.paths().len())
            .map(|p| path_bits(instance, lengths, p))
            .collect();
        let Some(worst) = totals.iter().flatten().copied().max() else {
            return applied;
        };
        let mut improved = false;
        'paths: for (p, &total) in totals.iter().enumerate() {
            if total != Some(worst) {
                continue;
            }
            for &a in instance.paths()[p].arcs() {
                let Some(len) = lengths[a] else { continue };
                if len == 0 {
                    continue;
                }
                let tail = instance.graph().arc(a).0;
                let usage = kraft_usage(instance, lengths, tail);
                let extra = 1u128 << (MAX_LENGTH - len);
                if usage + extra <= KRAFT_BUDGET {
                    lengths[a] = Some(len - 1);
                    applied += 1;
                    improved = true;
                    break 'paths;
                }
            }
        }
        if !improved {
            return applied;
        }
    }
}

/// Errors from [`tree_exact_lengths`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// The graph is not an out-tree (unique root, one parent each, all
    /// reachable).
    NotATree(String),
    /// The path list is not exactly the root-to-leaf paths.
    PathSetMismatch(String),
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::NotATree(m) => write!(f, "not a tree: {m}"),
            TreeError::PathSetMismatch(m) => write!(f, "path set mismatch: {m}"),
        }
    }
}

impl Error for TreeError {}

/// Optimal integer lengths on a tree whose path list is all root-to-leaf
/// paths.
///
/// Bottom-up: a leaf costs 0 bits; an internal vertex whose children cost
/// `d_1..d_k` needs `t = ceil_log2(2^d_1 + ... + 2^d_k)` bits to any leaf,
/// giving child arc `i` the length `t - d_i`. The sum is taken in big
/// integers so depth cannot overflow. Returns per-arc lengths and the
/// worst-case path bits.
pub fn tree_exact_lengths(
    instance: &ProblemInstance,
) -> Result<(Vec<u32>, u32), TreeError> {
    let g = instance.graph();
    let n = g.vertex_count();

    let mut indegree = vec![0usize; n];
    for a in 0..g.arc_count() {
        indegree[g.arc(a).1] += 1;
    }
    let roots: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let [root] = roots[..] else {
        return Err(TreeError::NotATree(format!(
            "expected exactly one root, found {}",
            roots.len()
        )));
    };
    if let Some(v) = (0..n).find(|&v| v != root && indegree[v] != 1) {
        return Err(TreeError::NotATree(format!(
            "vertex {} has {} parents",
            g.name(v),
            indegree[v]
        )));
    }
    // In-degree one everywhere below a unique root rules out everything but
    // unreachable cycles; a reachability sweep catches those.
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &a in g.out_arcs(v) {
            let h = g.arc(a).1;
            if !seen[h] {
                seen[h] = true;
                stack.push(h);
            }
        }
    }
    if let Some(v) = (0..n).position(|v| !seen[v]) {
        return Err(TreeError::NotATree(format!(
            "vertex {} is unreachable from the root",
            g.name(v)
        )));
    }

    let mut leaf_paths: HashSet<Vec<usize>> = HashSet::new();
    let mut prefix = Vec::new();
    collect_leaf_paths(instance, root, &mut prefix, &mut leaf_paths);
    let declared: HashSet<Vec<usize>> =
        instance.paths().iter().map(|p| p.arcs().to_vec()).collect();
    if declared != leaf_paths {
        return Err(TreeError::PathSetMismatch(format!(
            "{} paths declared, {} root-to-leaf paths in the tree",
            declared.len(),
            leaf_paths.len()
        )));
    }

    // Children before parents: vertices in reverse topological order.
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![(root, false)];
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            order.push(v);
            continue;
        }
        stack.push((v, true));
        for &a in g.out_arcs(v) {
            stack.push((g.arc(a).1, false));
        }
    }

    let mut depth_bits: Vec<u64> = vec![0; n];
    let mut lengths = vec![0u32; g.arc_count()];
    for &v in &order {
        if g.out_degree(v) == 0 {
            continue;
        }
        let sum: BigUint = g
            .out_arcs(v)
            .iter()
            .map(|&a| BigUint::from(1u32) << depth_bits[g.arc(a).1])
            .sum();
        let t = ceil_log2_big(&sum);
        for &a in g.out_arcs(v) {
            lengths[a] = (t - depth_bits[g.arc(a).1])
                .try_into()
                .expect("arc length fits in u32");
        }
        depth_bits[v] = t;
    }
    let objective = depth_bits[root].try_into().expect("objective fits in u32");
    Ok((lengths, objective))
}

fn collect_leaf_paths(
    instance: &ProblemInstance,
    v: usize,
    prefix: &mut Vec<usize>,
    out: &mut HashSet<Vec<usize>>,
) {
    let g = instance.graph();
    if g.out_degree(v) == 0 {
        if !prefix.is_empty() {
            out.insert(prefix.clone());
        }
        return;
    }
    for &a in g.out_arcs(v) {
        prefix.push(a);
        collect_leaf_paths(instance, g.arc(a).1, prefix, out);
        prefix.pop();
    }
}
