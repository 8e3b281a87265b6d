//! Prefix-free port labels from integer arc lengths.
//!
//! Each vertex labels its out-arcs with binary strings no one of which
//! prefixes another, so a header can be consumed left to right without
//! delimiters. A length-`l` label spends `2^-l` of the vertex's unit Kraft
//! budget; [`kraft_check`] audits that budget exactly, [`assign_labels`]
//! realizes feasible lengths as concrete labels, and
//! [`complete_unused_arcs`] prices the arcs the optimizer never saw.

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::integerize::MAX_LENGTH;
use crate::topology::ProblemInstance;

/// Exact Kraft audit of one vertex's label lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct KraftReport {
    pub feasible: bool,
    /// `1 - sum(2^-len)` as an exact rational; negative means infeasible.
    pub slack: BigRational,
}

/// Audits `1 - sum(2^-len)` exactly.
pub fn kraft_check(lengths: &[u32]) -> KraftReport {
    let mut used = BigRational::zero();
    for &l in lengths {
        used += BigRational::new(BigInt::one(), BigInt::one() << l);
    }
    let slack = BigRational::one() - used;
    KraftReport { feasible: !slack.is_negative(), slack }
}

/// Errors from label assignment and completion.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelError {
    /// The lengths overrun the vertex budget; carries the (negative) slack.
    KraftViolation { slack: BigRational },
    /// A length exceeds [`MAX_LENGTH`].
    LengthOverflow { length: u32 },
    /// Completion could not free budget without pushing a label past
    /// [`MAX_LENGTH`].
    CompletionStuck { vertex: String },
}

impl std::fmt::Display for LabelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelError::KraftViolation { slack } => {
                write!(f, "label lengths overrun the vertex budget by {}", -slack)
            }
            LabelError::LengthOverflow { length } => {
                write!(f, "label length {length} exceeds the {MAX_LENGTH}-bit cap")
            }
            LabelError::CompletionStuck { vertex } => {
                write!(f, "cannot free label budget at vertex {vertex}")
            }
        }
    }
}

impl std::error::Error for LabelError {}

/// Builds canonical prefix-free labels for the given lengths.
///
/// Labels are assigned shortest first (ties by position): the first code is
/// all zeros and each next code is the previous plus one, left-shifted to
/// the new length. The result lines up with the input; a zero length yields
/// the empty label, which is only feasible alone. Fails if the lengths
/// overrun the Kraft budget.
pub fn assign_labels(lengths: &[u32]) -> Result<Vec<String>, LabelError> {
    if let Some(&l) = lengths.iter().find(|&&l| l > MAX_LENGTH) {
        return Err(LabelError::LengthOverflow { length: l });
    }
    let report = kraft_check(lengths);
    if !report.feasible {
        return Err(LabelError::KraftViolation { slack: report.slack });
    }
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&i| (lengths[i], i));

    let mut labels = vec![String::new(); lengths.len()];
    let mut code: u128 = 0;
    let mut prev_len: u32 = 0;
    for (rank, &i) in order.iter().enumerate() {
        let len = lengths[i];
        if rank > 0 {
            code = (code + 1) << (len - prev_len);
        }
        labels[i] = (0..len)
            .rev()
            .map(|bit| if code >> bit & 1 == 1 { '1' } else { '0' })
            .collect();
        prev_len = len;
    }
    Ok(labels)
}

/// Labels every arc of the graph; all lengths must be priced.
pub fn assign_all_labels(
    instance: &ProblemInstance,
    lengths: &[Option<u32>],
) -> Result<Vec<String>, LabelError> {
    let g = instance.graph();
    let mut labels = vec![String::new(); g.arc_count()];
    for v in g.vertices() {
        let vertex_lengths: Vec<u32> = g
            .out_arcs(v)
            .iter()
            .map(|&a| lengths[a].expect("all arcs priced before labeling"))
            .collect();
        let vertex_labels = assign_labels(&vertex_lengths)?;
        for (&a, label) in g.out_arcs(v).iter().zip(vertex_labels) {
            labels[a] = label;
        }
    }
    Ok(labels)
}

/// What [`complete_unused_arcs`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompletionStats {
    /// Arcs that received a length.
    pub filled: usize,
    /// Existing lengths that had to grow by one bit to free budget.
    pub increments: usize,
}

/// Prices every still-`None` arc so each vertex stays Kraft-feasible.
///
/// A vertex with no priced arcs at all gets uniform `ceil(log2(degree))`
/// lengths. Otherwise each unpriced arc (in arc order) takes the shortest
/// length its vertex's remaining budget affords; if the budget is spent,
/// the longest existing label grows by one bit to make room, preferring a
/// label that no worst-case path crosses.
pub fn complete_unused_arcs(
    instance: &ProblemInstance,
    lengths: &mut [Option<u32>],
) -> Result<CompletionStats, LabelError> {
    let g = instance.graph();
    let mut stats = CompletionStats::default();
    for v in g.vertices() {
        let arcs = g.out_arcs(v);
        if arcs.iter().all(|&a| lengths[a].is_some()) {
            continue;
        }
        if arcs.iter().all(|&a| lengths[a].is_none()) {
            let l = crate::integerize::ceil_log2(arcs.len() as u64);
            for &a in arcs {
                lengths[a] = Some(l);
                stats.filled += 1;
            }
            continue;
        }
        for i in 0..arcs.len() {
            let a = arcs[i];
            if lengths[a].is_some() {
                continue;
            }
            loop {
                let usage: u128 = arcs
                    .iter()
                    .filter_map(|&b| lengths[b])
                    .map(|l| 1u128 << (MAX_LENGTH - l))
                    .sum();
                let slack = (1u128 << MAX_LENGTH).saturating_sub(usage);
                if slack > 0 {
                    lengths[a] = Some(MAX_LENGTH - slack.ilog2());
                    stats.filled += 1;
                    break;
                }
                grow_longest_label(instance, lengths, v)?;
                stats.increments += 1;
            }
        }
    }
    Ok(stats)
}

/// Adds one bit to the longest priced label at `v`, preferring an arc that
/// no worst-case path crosses, breaking remaining ties by arc order.
fn grow_longest_label(
    instance: &ProblemInstance,
    lengths: &mut [Option<u32>],
    v: usize,
) -> Result<(), LabelError> {
    let g = instance.graph();
    let totals: Vec<Option<u64>> = (0..instance.paths().len())
        .map(|p| crate::integerize::path_bits(instance, lengths, p))
        .collect();
    let worst = totals.iter().flatten().copied().max();
    let mut on_worst = vec![false; g.arc_count()];
    if let Some(w) = worst {
        for (p, &total) in totals.iter().enumerate() {
            if total == Some(w) {
                for &a in instance.paths()[p].arcs() {
                    on_worst[a] = true;
                }
            }
        }
    }
    let candidate = g
        .out_arcs(v)
        .iter()
        .copied()
        .filter(|&a| lengths[a].is_some())
        .max_by_key(|&a| (lengths[a].unwrap(), !on_worst[a], std::cmp::Reverse(a)));
    let Some(a) = candidate else {
        return Err(LabelError::CompletionStuck { vertex: g.name(v).to_string() });
    };
    let l = lengths[a].unwrap();
    if l >= MAX_LENGTH {
        return Err(LabelError::CompletionStuck { vertex: g.name(v).to_string() });
    }
    lengths[a] = Some(l + 1);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_topology;
    use num::rational::Ratio;

    fn ratio(n: i64, d: i64) -> BigRational {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn kraft_known_values() {
        let r = kraft_check(&[2, 3, 3, 4, 5, 6]);
        assert!(r.feasible);
        assert_eq!(r.slack, ratio(25, 64));

        let r = kraft_check(&[1, 2, 2]);
        assert!(r.feasible);
        assert_eq!(r.slack, ratio(0, 1));

        let r = kraft_check(&[1, 1, 1]);
        assert!(!r.feasible);
        assert_eq!(r.slack, ratio(-1, 2));
    }

    #[test]
    fn canonical_labels_for_known_lengths() {
        assert_eq!(assign_labels(&[1, 2, 2]).unwrap(), vec!["0", "10", "11"]);
        assert_eq!(
            assign_labels(&[1, 2, 3, 3]).unwrap(),
            vec!["0", "10", "110", "111"]
        );
        // Result order follows the input, not the sorted order.
        assert_eq!(assign_labels(&[2, 1, 2]).unwrap(), vec!["10", "0", "11"]);
        assert_eq!(assign_labels(&[1, 1]).unwrap(), vec!["0", "1"]);
    }

    #[test]
    fn empty_label_only_stands_alone() {
        assert_eq!(assign_labels(&[0]).unwrap(), vec![""]);
        assert!(matches!(
            assign_labels(&[0, 1]),
            Err(LabelError::KraftViolation { .. })
        ));
    }

    #[test]
    fn infeasible_lengths_are_rejected() {
        let err = assign_labels(&[1, 1, 1]).unwrap_err();
        match err {
            LabelError::KraftViolation { slack } => assert_eq!(slack, ratio(-1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn is_prefix(a: &str, b: &str) -> bool {
        a.len() < b.len() && b.starts_with(a)
    }

    #[test]
    fn labels_are_prefix_free() {
        let cases: Vec<Vec<u32>> = vec![
            vec![1, 2, 2],
            vec![2, 2, 2, 2],
            vec![1, 2, 3, 4, 4],
            vec![3, 3, 3, 3, 3, 3, 3, 3],
            vec![2, 3, 3, 4, 5, 6],
        ];
        for lengths in cases {
            let labels = assign_labels(&lengths).unwrap();
            for i in 0..labels.len() {
                assert_eq!(labels[i].len(), lengths[i] as usize);
                for j in 0..labels.len() {
                    if i != j {
                        assert!(
                            !is_prefix(&labels[i], &labels[j]),
                            "{:?} prefixes {:?} in {lengths:?}",
                            labels[i],
                            labels[j]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn completion_takes_the_shortest_affordable_length() {
        let inst = parse_topology(concat!(
            "node r\nnode a\nnode b\nnode c\n",
            "arc r a\narc r b\narc r c\n",
            "path r a\npath r b\n",
        ))
        .unwrap();
        // used lengths {1,2}: remaining budget is exactly 2^-2.
        let mut lengths = vec![Some(1), Some(2), None];
        let stats = complete_unused_arcs(&inst, &mut lengths).unwrap();
        assert_eq!(lengths[2], Some(2));
        assert_eq!(stats, CompletionStats { filled: 1, increments: 0 });
    }

    #[test]
    fn completion_grows_a_label_when_the_budget_is_spent() {
        let inst = parse_topology(concat!(
            "node r\nnode a\nnode b\nnode c\nnode x\n",
            "arc r a\narc r b\narc r c\narc a x\n",
            "path r a x\npath r b\n",
        ))
        .unwrap();
        // {1,1} spends everything. The arc toward a sits on the worst path
        // (r a x = 4 bits), so the one toward b grows instead.
        let mut lengths = vec![Some(1), Some(1), None, Some(3)];
        let stats = complete_unused_arcs(&inst, &mut lengths).unwrap();
        assert_eq!(lengths, vec![Some(1), Some(2), Some(2), Some(3)]);
        assert_eq!(stats, CompletionStats { filled: 1, increments: 1 });
    }

    #[test]
    fn completion_prices_a_fully_unpriced_vertex_uniformly() {
        let inst = parse_topology(concat!(
            "node r\nnode a\nnode b\nnode c\nnode d\nnode e\n",
            "arc r a\narc r b\narc r c\narc r d\narc r e\n",
            "path r a\n",
        ))
        .unwrap();
        let mut lengths = vec![None; 5];
        let stats = complete_unused_arcs(&inst, &mut lengths).unwrap();
        assert_eq!(lengths, vec![Some(3); 5]);
        assert_eq!(stats, CompletionStats { filled: 5, increments: 0 });
    }

    #[test]
    fn completed_vertices_label_cleanly() {
        let inst = parse_topology(concat!(
            "node r\nnode a\nnode b\nnode c\n",
            "arc r a\narc r b\narc r c\n",
            "path r a\npath r b\n",
        ))
        .unwrap();
        let mut lengths = vec![Some(1), Some(1), None];
        complete_unused_arcs(&inst, &mut lengths).unwrap();
        // Both priced arcs tie on length and worst-path status, so the
        // first in arc order grows.
        assert_eq!(lengths, vec![Some(2), Some(1), Some(2)]);
        let labels = assign_all_labels(&inst, &lengths).unwrap();
        assert_eq!(labels, vec!["10", "0", "11"]);
    }
}
