//! Continuous relaxation of the worst-case header-length problem.
//!
//! The relaxed problem asks for real arc lengths, Kraft-feasible at every
//! vertex, minimizing the longest path length. Its maximizing dual puts a
//! probability weight on every path; a path's weight flows onto each of its
//! arcs, and the dual objective is the total entropy of the per-vertex
//! next-arc distributions induced by those flows, measured in bits:
//!
//! ```text
//! maximize  -sum_a  w_a * log2(w_a / W_tail(a))   over the path simplex
//! w_a = sum of alpha_p over paths p crossing arc a
//! W_v = sum of w_a over arcs a leaving v
//! ```
//!
//! [`solve_relaxed`] maximizes this by projected gradient ascent with a
//! backtracking step size. [`recover_lengths`] turns the final weights back
//! into arc lengths via `len(a) = log2(W_tail(a) / w_a)`, which meets every
//! vertex's Kraft budget with equality over the arcs that carry weight.

use crate::scalar::Scalar;
use crate::topology::ProblemInstance;

/// Keeps ratios and logarithms finite when path weights vanish.
pub const DEFAULT_MASS_FLOOR: f64 = 1e-12;

/// Arc and vertex weights induced by a path distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWeights<T> {
    /// Per arc: total weight of the paths crossing it.
    pub arc_mass: Vec<T>,
    /// Per vertex: total weight on its out-arcs.
    pub vertex_mass: Vec<T>,
}

/// Accumulates arc and vertex weights for a path distribution `alpha`.
pub fn dual_weights<T: Scalar>(instance: &ProblemInstance, alpha: &[T]) -> DualWeights<T> {
    let g = instance.graph();
    assert_eq!(alpha.len(), instance.paths().len(), "one weight per path");
    let mut arc_mass = vec![T::zero(); g.arc_count()];
    for (p, &a_p) in instance.paths().iter().zip(alpha) {
        for &a in p.arcs() {
            arc_mass[a] = arc_mass[a] + a_p;
        }
    }
    // Summing out-arcs in declaration order keeps each vertex mass at least
    // as large as every one of its arc masses, so ratios never exceed one.
    let mut vertex_mass = vec![T::zero(); g.vertex_count()];
    for v in g.vertices() {
        for &a in g.out_arcs(v) {
            vertex_mass[v] = vertex_mass[v] + arc_mass[a];
        }
    }
    DualWeights { arc_mass, vertex_mass }
}

/// Dual objective in bits: the entropy of next-arc choices, weighted by how
/// often each vertex is crossed.
pub fn dual_objective<T: Scalar>(
    instance: &ProblemInstance,
    weights: &DualWeights<T>,
    floor: T,
) -> T {
    let g = instance.graph();
    let mut total = T::zero();
    for a in 0..g.arc_count() {
        let w = weights.arc_mass[a];
        if w < floor {
            continue;
        }
        let big = weights.vertex_mass[g.arc(a).0].max(floor);
        total = total - w * (w / big).log2();
    }
    total
}

/// Gradient of the dual objective with respect to the path weights, in nats.
///
/// For path p this is `sum_{v exited by p} R_v - sum_{a in p} ln r_a - |p|`
/// with `r_a = w_a / W_tail(a)` and `R_v` the sum of `r_a` over arcs leaving
/// v. The ratios inside the logarithm are clamped below by `floor`, so a
/// currently weightless path sees a large positive pull instead of an
/// infinite one. Divide by ln 2 to get the slope of [`dual_objective`].
pub fn dual_gradient<T: Scalar>(instance: &ProblemInstance, alpha: &[T], floor: T) -> Vec<T> {
    let g = instance.graph();
    let weights = dual_weights(instance, alpha);

    let ratio: Vec<T> = (0..g.arc_count())
        .map(|a| weights.arc_mass[a] / weights.vertex_mass[g.arc(a).0].max(floor))
        .collect();
    let mut ratio_sum = vec![T::zero(); g.vertex_count()];
    for v in g.vertices() {
        for &a in g.out_arcs(v) {
            ratio_sum[v] = ratio_sum[v] + ratio[a];
        }
    }

    instance
        .paths()
        .iter()
        .map(|p| {
            let mut grad = T::zero();
            for &a in p.arcs() {
                let tail = g.arc(a).0;
                grad = grad + ratio_sum[tail] - ratio[a].max(floor).ln() - T::one();
            }
            grad
        })
        .collect()
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-and-threshold: find the largest prefix of the descending values
/// whose shifted average keeps every kept entry positive, subtract that
/// average, clamp the rest to zero.
pub fn project_simplex<T: Scalar>(v: &[T]) -> Vec<T> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("weights must be comparable"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let candidate = (cumsum - T::one()) / T::from_count(j + 1);
        if u - candidate > T::zero() {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

/// Why the ascent loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative objective change over the trailing window fell below `tol`.
    Converged,
    /// Iteration budget ran out first.
    MaxIterations,
    /// Backtracking halved the step to nothing without finding an ascent.
    StepExhausted,
}

/// One logged ascent iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub iteration: usize,
    pub objective: T,
    pub gradient_norm: T,
    pub step: T,
}

/// Output of [`solve_relaxed`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult<T> {
    /// Final path distribution.
    pub alpha: Vec<T>,
    /// Dual objective at `alpha`, in bits. Lower-bounds the relaxed optimum
    /// at convergence and equals it at the maximizer.
    pub objective: T,
    /// Gradient steps taken (trace row 0 is the starting point).
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow<T>>,
}

/// Step-size and stopping configuration for [`solve_relaxed`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Step size each iteration starts from.
    pub gamma: T,
    pub max_iters: usize,
    /// Relative objective-change threshold for convergence.
    pub tol: T,
    /// Number of trailing iterations the threshold is measured over.
    pub window: usize,
    /// Clamp for ratios and logarithms; see [`DEFAULT_MASS_FLOOR`].
    pub floor: T,
    /// Halve the step while the objective would decrease. Without this the
    /// iterate can bounce across the maximizer indefinitely.
    pub backtracking: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            gamma: T::from_f64(0.1),
            max_iters: 10_000,
            tol: T::from_f64(1e-7),
            window: 5,
            floor: T::from_f64(DEFAULT_MASS_FLOOR),
            backtracking: true,
        }
    }
}

const MAX_HALVINGS: usize = 50;

/// Maximizes the dual by projected gradient ascent from the uniform
/// distribution.
pub fn solve_relaxed<T: Scalar>(
    instance: &ProblemInstance,
    config: &SolverConfig<T>,
) -> SolverResult<T> {
    let n = instance.paths().len();
    let uniform = T::one() / T::from_count(n);
    let mut alpha = vec![uniform; n];
    let mut objective = {
        let w = dual_weights(instance, &alpha);
        dual_objective(instance, &w, config.floor)
    };

    let norm = |g: &[T]| {
        g.iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    };

    let mut trace = vec![TraceRow {
        iteration: 0,
        objective,
        gradient_norm: norm(&dual_gradient(instance, &alpha, config.floor)),
        step: T::zero(),
    }];
    let mut history = vec![objective];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    'outer: for it in 1..=config.max_iters {
        let grad = dual_gradient(instance, &alpha, config.floor);
        let gradient_norm = norm(&grad);

        let mut step = config.gamma;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let moved: Vec<T> = alpha
                .iter()
                .zip(&grad)
                .map(|(&a, &g)| a + step * g)
                .collect();
            let candidate = project_simplex(&moved);
            let w = dual_weights(instance, &candidate);
            let cand_obj = dual_objective(instance, &w, config.floor);
            if !config.backtracking || cand_obj >= objective {
                accepted = Some((candidate, cand_obj, step));
                break;
            }
            step = step / T::from_f64(2.0);
        }
        let Some((next, next_obj, used_step)) = accepted else {
            termination = Termination::StepExhausted;
            break 'outer;
        };

        alpha = next;
        objective = next_obj;
        iterations = it;
        trace.push(TraceRow {
            iteration: it,
            objective,
            gradient_norm,
            step: used_step,
        });
        history.push(objective);

        if it >= config.window {
            let past = history[it - config.window];
            let change = (objective - past).abs();
            if change <= config.tol * objective.abs().max(T::one()) {
                termination = Termination::Converged;
                break 'outer;
            }
        }
    }

    SolverResult { alpha, objective, iterations, termination, trace }
}

/// Real arc lengths recovered from dual weights.
///
/// `None` entries are arcs the recovery could not price: arcs no path uses,
/// and arcs whose tail vertex carries no weight at all. Downstream label
/// assignment fills those in.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLengths<T> {
    pub lengths: Vec<Option<T>>,
}

impl<T: Scalar> RealLengths<T> {
    /// Longest assigned-path length under these lengths; `None` if some path
    /// crosses an unpriced arc.
    pub fn path_length(&self, instance: &ProblemInstance, path_index: usize) -> Option<T> {
        let mut total = T::zero();
        for &a in instance.paths()[path_index].arcs() {
            total = total + self.lengths[a]?;
        }
        Some(total)
    }
}

/// Prices used arcs from the dual weights: `log2(W_tail / w)`.
///
/// A used arc whose own weight fell below `floor` while its vertex still
/// carries weight gets the longest defensible price, `log2(W_tail / floor)`
/// capped at 64 bits.
pub fn recover_lengths<T: Scalar>(
    instance: &ProblemInstance,
    weights: &DualWeights<T>,
    floor: T,
) -> RealLengths<T> {
    let g = instance.graph();
    let cap = T::from_f64(64.0);
    let lengths = (0..g.arc_count())
        .map(|a| {
            if !instance.arc_used(a) {
                return None;
            }
            let big = weights.vertex_mass[g.arc(a).0];
            if big < floor {
                return None;
            }
            let w = weights.arc_mass[a];
            if w >= floor {
                Some((big / w).log2().max(T::zero()))
            } else {
                Some((big / floor).log2().min(cap))
            }
        })
        .collect();
    RealLengths { lengths }
}

/// The dual objective factored as (expected hops) x (bits per hop).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySplit<T> {
    /// Expected number of arcs in a path drawn from `alpha`.
    pub expected_hops: T,
    /// Entropy in bits of the next-arc choice at a vertex drawn
    /// proportionally to how much path weight crosses it.
    pub entropy_bits: T,
}

/// Splits the dual objective into expected path length times per-hop
/// entropy. The product of the two fields equals [`dual_objective`] up to
/// rounding.
pub fn entropy_split<T: Scalar>(
    instance: &ProblemInstance,
    alpha: &[T],
    floor: T,
) -> EntropySplit<T> {
    let g = instance.graph();
    let weights = dual_weights(instance, alpha);
    let mut expected_hops = T::zero();
    for (p, &a_p) in instance.paths().iter().zip(alpha) {
        expected_hops = expected_hops + a_p * T::from_count(p.len());
    }
    if expected_hops < floor {
        return EntropySplit { expected_hops: T::zero(), entropy_bits: T::zero() };
    }
    let mut entropy_bits = T::zero();
    for v in g.vertices() {
        let big = weights.vertex_mass[v];
        if big < floor {
            continue;
        }
        let mut h = T::zero();
        for &a in g.out_arcs(v) {
            let w = weights.arc_mass[a];
            if w < floor {
                continue;
            }
            let r = w / big;
            h = h - r * r.log2();
        }
        entropy_bits = entropy_bits + (big / expected_hops) * h;
    }
    EntropySplit { expected_hops, entropy_bits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_topology;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FLOOR: f64 = DEFAULT_MASS_FLOOR;

    fn star() -> ProblemInstance {
        parse_topology("node r\nnode a\nnode b\narc r a\narc r b\npath r a\npath r b\n").unwrap()
    }

    // Relaxed optimum log2(7), attained by the uniform distribution.
    use crate::generate::seven_leaf_tree;

    #[test]
    fn star_objective_and_gradient() {
        let inst = star();
        let alpha = [0.5f64, 0.5];
        let w = dual_weights(&inst, &alpha);
        assert_eq!(w.arc_mass, vec![0.5, 0.5]);
        assert_eq!(w.vertex_mass[0], 1.0);
        let obj = dual_objective(&inst, &w, FLOOR);
        assert!((obj - 1.0).abs() < 1e-12, "expected 1 bit, got {obj}");
        let grad = dual_gradient(&inst, &alpha, FLOOR);
        for g in grad {
            assert!((g - std::f64::consts::LN_2).abs() < 1e-12, "got {g}");
        }
    }

    #[test]
    fn projection_known_points() {
        assert_eq!(project_simplex(&[2.0f64, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.6f64, 0.6]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_fixes_simplex_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..8);
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0) + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let point: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let proj = project_simplex(&point);
            for (a, b) in point.iter().zip(&proj) {
                assert!((a - b).abs() < 1e-9, "{point:?} moved to {proj:?}");
            }
        }
    }

    #[test]
    fn projection_lands_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let n = rng.gen_range(1..10);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p = project_simplex(&v);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{v:?} -> {p:?} sums to {sum}");
            assert!(p.iter().all(|&x| x >= 0.0), "{v:?} -> {p:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = seven_leaf_tree();
        let n = inst.paths().len();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let alpha: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let grad = dual_gradient(&inst, &alpha, FLOOR);
            let h = 1e-6;
            for i in 0..n {
                let mut hi = alpha.clone();
                let mut lo = alpha.clone();
                hi[i] += h;
                lo[i] -= h;
                let f = |a: &[f64]| {
                    let w = dual_weights(&inst, a);
                    dual_objective(&inst, &w, FLOOR)
                };
                let fd_bits = (f(&hi) - f(&lo)) / (2.0 * h);
                let fd_nats = fd_bits * std::f64::consts::LN_2;
                assert!(
                    (grad[i] - fd_nats).abs() < 1e-4,
                    "component {i}: analytic {} vs numeric {}",
                    grad[i],
                    fd_nats
                );
            }
        }
    }

    #[test]
    fn tree_solves_to_log2_of_path_count() {
        let inst = seven_leaf_tree();
        let result = solve_relaxed(&inst, &SolverConfig::<f64>::default());
        assert_eq!(result.termination, Termination::Converged);
        assert!(result.iterations <= 10, "took {} iterations", result.iterations);
        let expected = (7.0f64).log2();
        assert!(
            (result.objective - expected).abs() < 1e-9,
            "objective {} vs {}",
            result.objective,
            expected
        );
        assert_eq!(result.trace.len(), result.iterations + 1);
        assert_eq!(result.trace[0].iteration, 0);
    }

    #[test]
    fn tree_recovered_lengths_equalize_paths() {
        let inst = seven_leaf_tree();
        let result = solve_relaxed(&inst, &SolverConfig::<f64>::default());
        let w = dual_weights(&inst, &result.alpha);
        let lens = recover_lengths(&inst, &w, FLOOR);
        let expected = (7.0f64).log2();
        for p in 0..inst.paths().len() {
            let total = lens.path_length(&inst, p).expect("all used arcs priced");
            assert!(
                (total - expected).abs() < 1e-6,
                "path {p} has length {total}, expected {expected}"
            );
        }
        // Spot values: the spine arc prices at log2(7/4), a root leaf arc at
        // log2(7).
        let g = inst.graph();
        let spine = g.arc_between(0, 1).unwrap();
        let leaf = g.arc_between(0, g.index_of("S3").unwrap()).unwrap();
        assert!((lens.lengths[spine].unwrap() - (7.0f64 / 4.0).log2()).abs() < 1e-6);
        assert!((lens.lengths[leaf].unwrap() - (7.0f64).log2()).abs() < 1e-6);
    }

    #[test]
    fn kraft_holds_with_equality_at_weighted_vertices() {
        let inst = seven_leaf_tree();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let n = inst.paths().len();
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let alpha: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let w = dual_weights(&inst, &alpha);
            let lens = recover_lengths(&inst, &w, FLOOR);
            let g = inst.graph();
            for v in g.vertices() {
                if w.vertex_mass[v] < FLOOR {
                    continue;
                }
                let sum: f64 = g
                    .out_arcs(v)
                    .iter()
                    .filter_map(|&a| lens.lengths[a])
                    .map(|l| (2.0f64).powf(-l))
                    .sum();
                assert!(
                    sum <= 1.0 + 1e-9,
                    "vertex {v} overruns its budget: {sum}"
                );
                // Every arc here carries weight, so the budget is spent
                // exactly.
                if g.out_arcs(v).iter().all(|&a| w.arc_mass[a] >= FLOOR) {
                    assert!((sum - 1.0).abs() < 1e-9, "vertex {v} sums to {sum}");
                }
            }
        }
    }

    #[test]
    fn entropy_split_multiplies_back_to_the_objective() {
        let inst = seven_leaf_tree();
        let alpha = vec![1.0 / 7.0; 7];
        let w = dual_weights(&inst, &alpha);
        let obj = dual_objective(&inst, &w, FLOOR);
        let split = entropy_split(&inst, &alpha, FLOOR);
        assert!((split.expected_hops - 13.0 / 7.0).abs() < 1e-12);
        assert!((split.expected_hops * split.entropy_bits - obj).abs() < 1e-9);
    }

    #[test]
    fn dead_paths_feel_a_pull_back_onto_the_simplex() {
        let inst = star();
        let alpha = [1.0f64, 0.0];
        let grad = dual_gradient(&inst, &alpha, FLOOR);
        // The live path's gradient is finite and small; the dead one is
        // strongly positive because its ratio is clamped at the floor.
        assert!(grad[1] > grad[0]);
        assert!(grad[1] > 20.0);
    }

    #[test]
    fn f32_solves_the_star() {
        let inst = star();
        let result = solve_relaxed(&inst, &SolverConfig::<f32>::default());
        assert_eq!(result.termination, Termination::Converged);
        assert!((result.objective - 1.0).abs() < 1e-5);
        assert!((result.alpha[0] - 0.5).abs() < 1e-5);
    }
}
