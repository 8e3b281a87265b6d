//! Built-in instance families and random instance sampling.

use rand::Rng;

use crate::topology::{shortest_path_set, Graph, Path, ProblemInstance};

/// Ten-vertex tree with uneven fanout: the root fans out to a deep branch
/// and three leaves, so uniform per-vertex label widths waste bits on the
/// deep branch. Seven root-to-leaf paths.
pub fn seven_leaf_tree() -> ProblemInstance {
    let names: Vec<String> = (0..10).map(|i| format!("S{i}")).collect();
    let graph = Graph::from_named_arcs(
        names,
        &[
            ("S0", "S1"),
            ("S1", "S2"),
            ("S2", "S8"),
            ("S2", "S9"),
            ("S1", "S6"),
            ("S1", "S7"),
            ("S0", "S3"),
            ("S0", "S4"),
            ("S0", "S5"),
        ],
    )
    .expect("the tree arcs are well formed");
    let routes: [&[&str]; 7] = [
        &["S0", "S1", "S2", "S8"],
        &["S0", "S1", "S2", "S9"],
        &["S0", "S1", "S6"],
        &["S0", "S1", "S7"],
        &["S0", "S3"],
        &["S0", "S4"],
        &["S0", "S5"],
    ];
    let paths = routes
        .iter()
        .map(|route| {
            let seq: Vec<usize> =
                route.iter().map(|s| graph.index_of(s).expect("declared")).collect();
            Path::from_vertices(&graph, &seq).expect("the routes follow arcs")
        })
        .collect();
    ProblemInstance::new(graph, paths).expect("the tree instance is valid")
}

/// Descending chain `v_k -> v_{k-1} -> ... -> v_1`, each `v_j` also holding
/// a leaf arc to `u_j`, with `v_1` continuing to the leaf `u_0`.
///
/// The relaxed optimum spends `log2(1 + 1/j)` bits per chain hop and
/// equalizes every path at `log2(k + 1)` bits, but rounding the chain arcs
/// up to one bit each drives the integer worst case to `k`: the family
/// where rounding costs the most.
pub fn spine(k: usize) -> ProblemInstance {
    assert!(k >= 1, "the chain needs at least one vertex");
    let mut names: Vec<String> = (1..=k).rev().map(|j| format!("v{j}")).collect();
    names.extend((0..=k).rev().map(|j| format!("u{j}")));
    let mut arcs: Vec<(String, String)> = Vec::new();
    for j in (1..=k).rev() {
        let down = if j > 1 { format!("v{}", j - 1) } else { "u0".to_string() };
        arcs.push((format!("v{j}"), down));
        arcs.push((format!("v{j}"), format!("u{j}")));
    }
    let arc_refs: Vec<(&str, &str)> = arcs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let graph = Graph::from_named_arcs(names, &arc_refs).expect("chain arcs are well formed");

    let mut paths = Vec::with_capacity(k + 1);
    let chain: Vec<usize> = (1..=k)
        .rev()
        .map(|j| graph.index_of(&format!("v{j}")).expect("declared"))
        .collect();
    for j in (1..=k).rev() {
        let mut seq: Vec<usize> = chain[..=(k - j)].to_vec();
        seq.push(graph.index_of(&format!("u{j}")).expect("declared"));
        paths.push(Path::from_vertices(&graph, &seq).expect("follows arcs"));
    }
    let mut seq = chain;
    seq.push(graph.index_of("u0").expect("declared"));
    paths.push(Path::from_vertices(&graph, &seq).expect("follows arcs"));
    ProblemInstance::new(graph, paths).expect("the chain instance is valid")
}

/// Ring of `n` vertices with arcs to both neighbors plus both vertices
/// `chord` steps away.
pub fn ring_mesh(n: usize, chord: usize) -> Graph {
    assert!(n >= 3);
    let names: Vec<String> = (0..n).map(|i| format!("m{i:02}")).collect();
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for step in [1, n - 1, chord % n, n - chord % n] {
            let j = (i + step) % n;
            if j != i && !arcs.contains(&(i, j)) {
                arcs.push((i, j));
            }
        }
    }
    Graph::new(names, arcs).expect("ring arcs are well formed")
}

/// [`ring_mesh`] plus hop-count shortest paths for every ordered pair.
pub fn ring_mesh_instance(n: usize, chord: usize) -> ProblemInstance {
    let graph = ring_mesh(n, chord);
    let paths = shortest_path_set(&graph);
    ProblemInstance::new(graph, paths).expect("the mesh is strongly connected")
}

/// Samples an instance whose arcs are exactly the union of its paths.
///
/// Paths are vertex-simple random walks, deduplicated; samples whose arc
/// union exceeds `max_out_degree` anywhere are rejected and redrawn. Every
/// arc is crossed by at least one path.
pub fn random_path_union<R: Rng>(
    rng: &mut R,
    max_vertices: usize,
    max_out_degree: usize,
    max_paths: usize,
) -> ProblemInstance {
    assert!(max_vertices >= 2 && max_out_degree >= 1 && max_paths >= 1);
    loop {
        let n = rng.gen_range(2..=max_vertices);
        let want = rng.gen_range(1..=max_paths);
        let mut seqs: Vec<Vec<usize>> = Vec::new();
        for _ in 0..want {
            let mut seq = vec![rng.gen_range(0..n)];
            let arcs_wanted = rng.gen_range(1..n.max(2));
            while seq.len() <= arcs_wanted {
                let options: Vec<usize> = (0..n).filter(|v| !seq.contains(v)).collect();
                if options.is_empty() {
                    break;
                }
                seq.push(options[rng.gen_range(0..options.len())]);
            }
            if seq.len() >= 2 && !seqs.contains(&seq) {
                seqs.push(seq);
            }
        }
        if seqs.is_empty() {
            continue;
        }
        let mut arcs: Vec<(usize, usize)> = Vec::new();
        for seq in &seqs {
            for w in seq.windows(2) {
                if !arcs.contains(&(w[0], w[1])) {
                    arcs.push((w[0], w[1]));
                }
            }
        }
        let mut degree = vec![0usize; n];
        for &(tail, _) in &arcs {
            degree[tail] += 1;
        }
        if degree.iter().any(|&d| d > max_out_degree) {
            continue;
        }
        let names = (0..n).map(|i| format!("w{i}")).collect();
        let graph = Graph::new(names, arcs).expect("sampled arcs are well formed");
        let paths = seqs
            .iter()
            .map(|s| Path::from_vertices(&graph, s).expect("walks follow their own arcs"))
            .collect();
        return ProblemInstance::new(graph, paths).expect("sampled instances are valid");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integerize::tree_exact_lengths;
    use crate::topology::validate_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_shape() {
        let inst = seven_leaf_tree();
        assert_eq!(inst.graph().vertex_count(), 10);
        assert_eq!(inst.graph().arc_count(), 9);
        assert_eq!(inst.paths().len(), 7);
        assert!(validate_instance(&inst).is_empty());
        assert_eq!(tree_exact_lengths(&inst).unwrap().1, 3);
    }

    #[test]
    fn spine_shape_and_optimum() {
        let inst = spine(4);
        assert_eq!(inst.graph().vertex_count(), 9);
        assert_eq!(inst.graph().arc_count(), 8);
        assert_eq!(inst.paths().len(), 5);
        assert!(validate_instance(&inst).is_empty());
        // It is a tree; the exact optimum equals the chain length.
        assert_eq!(tree_exact_lengths(&inst).unwrap().1, 4);

        let inst = spine(1);
        assert_eq!(inst.graph().vertex_count(), 3);
        assert_eq!(inst.paths().len(), 2);
        assert_eq!(tree_exact_lengths(&inst).unwrap().1, 1);
    }

    #[test]
    fn mesh_shape() {
        let g = ring_mesh(25, 5);
        assert_eq!(g.vertex_count(), 25);
        assert_eq!(g.arc_count(), 100);
        for v in g.vertices() {
            assert_eq!(g.out_degree(v), 4);
        }
        let inst = ring_mesh_instance(25, 5);
        assert_eq!(inst.paths().len(), 600);
    }

    #[test]
    fn sampled_instances_hold_their_promises() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let inst = random_path_union(&mut rng, 7, 4, 8);
            assert!(inst.graph().vertex_count() <= 7);
            assert!(inst.paths().len() <= 8);
            for v in inst.graph().vertices() {
                assert!(inst.graph().out_degree(v) <= 4);
            }
            for a in 0..inst.graph().arc_count() {
                assert!(inst.arc_used(a), "path-union graphs use every arc");
            }
            assert!(validate_instance(&inst).is_empty());
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a = random_path_union(&mut ChaCha8Rng::seed_from_u64(42), 7, 4, 8);
        let b = random_path_union(&mut ChaCha8Rng::seed_from_u64(42), 7, 4, 8);
        assert_eq!(a, b);
    }
}
