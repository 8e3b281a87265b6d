//! End-to-end run: relax, recover real lengths, round, tighten, complete,
//! and emit per-vertex port labels.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codec::PortLabels;
use crate::exact::{brute_force_exact, ExactConfig, ExactError};
use crate::integerize::{
    ceil_log2, fixed_length_baseline, local_search, objective, round_lengths, DEFAULT_SNAP_EPS,
};
use crate::labeling::{assign_all_labels, complete_unused_arcs, LabelError};
use crate::scalar::Scalar;
use crate::solver::{dual_weights, recover_lengths, solve_relaxed, SolverConfig, Termination};
use crate::topology::ProblemInstance;

/// Knobs for [`run`].
#[derive(Debug, Clone)]
pub struct PipelineConfig<T> {
    pub solver: SolverConfig<T>,
    /// Slack when rounding real lengths up, so values a hair above an
    /// integer do not cost a whole extra bit.
    pub snap_eps: T,
    /// Run the single-bit tightening pass after rounding.
    pub local_search: bool,
    /// Also compute the exact optimum by branch and bound. Only viable on
    /// small instances.
    pub oracle: Option<ExactConfig>,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        PipelineConfig {
            solver: SolverConfig::default(),
            snap_eps: T::from_f64(DEFAULT_SNAP_EPS),
            local_search: true,
            oracle: None,
        }
    }
}

/// Wall-clock per stage, in milliseconds. Excluded from determinism
/// comparisons; everything else in a [`RunReport`] is reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub solve_ms: f64,
    pub integerize_ms: f64,
    pub labeling_ms: f64,
    pub oracle_ms: f64,
}

/// Everything measured along one [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub vertices: usize,
    pub arcs: usize,
    pub paths: usize,
    /// Worst-case bits under uniform per-vertex label widths.
    pub fixed_bits: u32,
    /// Dual objective at the solver's final iterate, in bits.
    pub relaxed_bits: f64,
    pub iterations: usize,
    pub termination: String,
    /// Worst-case bits right after rounding; `None` while some path arc is
    /// still unpriced because its vertex lost all its mass.
    pub rounded_bits: Option<u32>,
    /// Worst-case bits after the tightening pass; `None` if it was skipped.
    pub tightened_bits: Option<u32>,
    pub completion_filled: usize,
    pub completion_increments: usize,
    /// Worst-case bits of the labeling actually emitted.
    pub variable_bits: u32,
    /// The variable-length labeling came out worse than the uniform widths,
    /// so the uniform widths were emitted instead.
    pub used_fixed_fallback: bool,
    /// Declared paths a decoder cannot tell apart from some longer route:
    /// they stop at a vertex that still has a zero-bit outgoing label.
    pub ambiguous_paths: usize,
    /// Exact optimum, when an oracle was requested.
    pub exact_bits: Option<u32>,
    pub timings: StageTimings,
}

impl RunReport {
    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> RunReport {
        RunReport {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }
}

/// Labeling artifacts plus the measurements taken while building them.
#[derive(Debug, Clone)]
pub struct PipelineOutput<T> {
    pub report: RunReport,
    /// Final per-arc label lengths, every arc priced.
    pub lengths: Vec<u32>,
    pub labels: PortLabels,
    /// Final path distribution from the relaxation.
    pub alpha: Vec<T>,
    /// Recovered real lengths, before rounding.
    pub real_lengths: Vec<Option<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    Label(LabelError),
    Oracle(ExactError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Label(e) => write!(f, "labeling failed: {e}"),
            PipelineError::Oracle(e) => write!(f, "exact solve failed: {e}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<LabelError> for PipelineError {
    fn from(e: LabelError) -> Self {
        PipelineError::Label(e)
    }
}

impl From<ExactError> for PipelineError {
    fn from(e: ExactError) -> Self {
        PipelineError::Oracle(e)
    }
}

fn termination_name(t: Termination) -> String {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max-iterations",
        Termination::StepExhausted => "step-exhausted",
    }
    .to_string()
}

/// One label per out-arc, `ceil(log2(out-degree))` bits wide at each vertex.
fn uniform_arc_lengths(instance: &ProblemInstance) -> Vec<u32> {
    let g = instance.graph();
    let mut lengths = vec![0u32; g.arc_count()];
    for v in g.vertices() {
        let width = ceil_log2(g.out_degree(v) as u64);
        for &a in g.out_arcs(v) {
            lengths[a] = width;
        }
    }
    lengths
}

fn count_ambiguous_paths(instance: &ProblemInstance, lengths: &[u32]) -> usize {
    let g = instance.graph();
    instance
        .paths()
        .iter()
        .filter(|p| g.out_arcs(p.target(g)).iter().any(|&a| lengths[a] == 0))
        .count()
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Builds a complete port labeling for an instance.
///
/// Stages: maximize the dual of the relaxation, recover real lengths from
/// the arc masses, round up to integers, locally tighten, price arcs no
/// path crosses, and assign canonical labels. If the result is worse than
/// the uniform-width baseline the baseline is emitted instead.
pub fn run<T: Scalar>(
    instance: &ProblemInstance,
    config: &PipelineConfig<T>,
) -> Result<PipelineOutput<T>, PipelineError> {
    let g = instance.graph();
    let fixed_bits = fixed_length_baseline(instance);

    let t = Instant::now();
    let solved = solve_relaxed(instance, &config.solver);
    let solve_ms = elapsed_ms(t);

    let t = Instant::now();
    let weights = dual_weights(instance, &solved.alpha);
    let real = recover_lengths(instance, &weights, config.solver.floor);
    let mut lengths = round_lengths(&real, config.snap_eps);
    let rounded_bits = objective(instance, &lengths);
    let tightened_bits = if config.local_search {
        local_search(instance, &mut lengths);
        objective(instance, &lengths)
    } else {
        None
    };
    let integerize_ms = elapsed_ms(t);

    let t = Instant::now();
    let stats = complete_unused_arcs(instance, &mut lengths)?;
    let variable = objective(instance, &lengths).expect("completion prices every arc");
    let mut final_lengths: Vec<u32> = lengths
        .iter()
        .map(|l| l.expect("completion prices every arc"))
        .collect();
    let used_fixed_fallback = variable > fixed_bits;
    let variable_bits = if used_fixed_fallback {
        final_lengths = uniform_arc_lengths(instance);
        fixed_bits
    } else {
        variable
    };
    let priced: Vec<Option<u32>> = final_lengths.iter().map(|&l| Some(l)).collect();
    let labels = assign_all_labels(instance, &priced)?;
    let ambiguous_paths = count_ambiguous_paths(instance, &final_lengths);
    let labels = PortLabels::from_arc_labels(instance, &labels);
    let labeling_ms = elapsed_ms(t);

    let (exact_bits, oracle_ms) = match &config.oracle {
        Some(oracle) => {
            let t = Instant::now();
            let solution = brute_force_exact(instance, oracle)?;
            (Some(solution.objective), elapsed_ms(t))
        }
        None => (None, 0.0),
    };

    let report = RunReport {
        vertices: g.vertex_count(),
        arcs: g.arc_count(),
        paths: instance.paths().len(),
        fixed_bits,
        relaxed_bits: solved.objective.to_f64(),
        iterations: solved.iterations,
        termination: termination_name(solved.termination),
        rounded_bits,
        tightened_bits,
        completion_filled: stats.filled,
        completion_increments: stats.increments,
        variable_bits,
        used_fixed_fallback,
        ambiguous_paths,
        exact_bits,
        timings: StageTimings {
            solve_ms,
            integerize_ms,
            labeling_ms,
            oracle_ms,
        },
    };
    Ok(PipelineOutput {
        report,
        lengths: final_lengths,
        labels,
        alpha: solved.alpha,
        real_lengths: real.lengths,
    })
}
