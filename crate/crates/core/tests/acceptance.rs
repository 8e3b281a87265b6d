//! One test per release gate. Each prints a PASS line with the numbers it
//! checked so a full run reads as a checklist.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathcode::codec::{encode_path, pack, simulate, unpack, SwitchTable};
use pathcode::exact::{brute_force_exact, ExactConfig};
use pathcode::generate::{
    random_path_union, ring_mesh, ring_mesh_instance, seven_leaf_tree, spine,
};
use pathcode::integerize::tree_exact_lengths;
use pathcode::pipeline::{run, PipelineConfig, PipelineOutput};
use pathcode::satgen::{build_gadget, enumerate_satisfying, sample_strict_cnf, CnfInstance};
use pathcode::solver::{
    dual_gradient, dual_objective, entropy_split, DEFAULT_MASS_FLOOR,
};
use pathcode::topology::{
    parse_graph, parse_topology, serialize_graph, shortest_path_set, Graph, Path,
    ProblemInstance,
};

fn default_run(instance: &ProblemInstance) -> PipelineOutput<f64> {
    run(instance, &PipelineConfig::<f64>::default()).expect("pipeline completes")
}

fn data(path: &str) -> String {
    let full = format!("{}/../../data/{path}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&full).unwrap_or_else(|e| panic!("{full}: {e}"))
}

/// A strictly positive random path distribution.
fn random_alpha<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[test]
fn tree_pipeline_exact() {
    let start = Instant::now();
    let inst = seven_leaf_tree();
    let config = PipelineConfig::<f64> {
        oracle: Some(ExactConfig::default()),
        ..Default::default()
    };
    let out = run(&inst, &config).unwrap();
    let r = &out.report;
    assert_eq!(r.tightened_bits, Some(3));
    assert_eq!(r.variable_bits, 3);
    assert_eq!(r.fixed_bits, 5);
    assert_eq!(r.exact_bits, Some(3));
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS: ten-vertex tree: tightened 3 bits, uniform widths 5 bits, \
         exact optimum 3 bits, in {elapsed:?}"
    );
}

#[test]
fn spine_family_relaxation_and_rounding() {
    for k in 2..=10usize {
        let start = Instant::now();
        let inst = spine(k);
        let g = inst.graph();

        // Rounding inspection without the tightening pass.
        let raw = run(
            &inst,
            &PipelineConfig::<f64> {
                local_search: false,
                ..Default::default()
            },
        )
        .unwrap();
        let want = ((k + 1) as f64).log2();
        assert!(
            (raw.report.relaxed_bits - want).abs() <= 1e-3,
            "k={k}: relaxed {} vs {want}",
            raw.report.relaxed_bits
        );
        for j in 1..=k {
            let tail = g.index_of(&format!("v{j}")).unwrap();
            let head = if j > 1 { format!("v{}", j - 1) } else { "u0".into() };
            let arc = g.arc_between(tail, g.index_of(&head).unwrap()).unwrap();
            assert_eq!(raw.lengths[arc], 1, "k={k}: chain arc out of v{j}");
        }

        let full = default_run(&inst);
        assert_eq!(full.report.variable_bits as usize, k, "k={k}");
        assert_eq!(tree_exact_lengths(&inst).unwrap().1 as usize, k, "k={k}");
        if k <= 6 {
            let exact = brute_force_exact(&inst, &ExactConfig::default()).unwrap();
            assert_eq!(exact.objective as usize, k, "k={k}: oracle");
        }
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 5.0, "k={k} took {elapsed:?}");
    }
    println!(
        "PASS: chain family depths 2..=10: relaxed value within 1e-3 of \
         log2(depth+1), every chain arc rounds to one bit, tightened \
         objective equals the depth (oracle-checked through depth 6)"
    );
}

#[test]
fn rounding_within_twice_optimal_200() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = PipelineConfig::<f64> {
        local_search: false,
        oracle: Some(ExactConfig::default()),
        ..Default::default()
    };
    let mut completed_fallback = 0;
    for case in 0..200 {
        let inst = random_path_union(&mut rng, 7, 4, 8);
        let out = run(&inst, &config).unwrap();
        let r = &out.report;
        // When a vertex loses all its mass the rounded lengths are partial;
        // the completed labeling is the honest integer cost then.
        let rounded = match r.rounded_bits {
            Some(b) => b,
            None => {
                completed_fallback += 1;
                r.variable_bits
            }
        };
        let exact = r.exact_bits.expect("oracle was requested");
        assert!(
            exact <= rounded && rounded <= 2 * exact,
            "case {case}: exact {exact}, rounded {rounded}, \
             |V|={} |A|={} |P|={}",
            r.vertices,
            r.arcs,
            r.paths
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "PASS: 200 random path-union instances: exact <= rounded <= 2*exact \
         in every case ({completed_fallback} needed completion first), \
         in {elapsed:?}"
    );
}

/// Root with six perfect binary subtrees hanging off it, all leaves of
/// subtree `i` at depth `depths[i]` below the subtree root.
fn uneven_star(depths: &[u32]) -> ProblemInstance {
    let mut names = vec!["r".to_string()];
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut leaves: Vec<usize> = Vec::new();
    for (i, &d) in depths.iter().enumerate() {
        // Heap layout per subtree: vertex j has children 2j+1 and 2j+2.
        let count = (1usize << (d + 1)) - 1;
        let base = names.len();
        for j in 0..count {
            names.push(format!("t{i}n{j}"));
        }
        arcs.push((0, base));
        for j in 0..count {
            for child in [2 * j + 1, 2 * j + 2] {
                if child < count {
                    arcs.push((base + j, base + child));
                }
            }
            if 2 * j + 1 >= count {
                leaves.push(base + j);
            }
        }
    }
    let graph = Graph::new(names, arcs).unwrap();
    let paths = leaves
        .iter()
        .map(|&leaf| {
            // Walk back up; every vertex has one in-arc.
            let mut seq = vec![leaf];
            let mut v = leaf;
            while v != 0 {
                let (tail, _) = (0..graph.arc_count())
                    .map(|a| graph.arc(a))
                    .find(|&(_, head)| head == v)
                    .unwrap();
                seq.push(tail);
                v = tail;
            }
            seq.reverse();
            Path::from_vertices(&graph, &seq).unwrap()
        })
        .collect();
    ProblemInstance::new(graph, paths).unwrap()
}

#[test]
fn equalizer_six_children() {
    let inst = uneven_star(&[5, 4, 4, 3, 2, 1]);
    let (lengths, value) = tree_exact_lengths(&inst).unwrap();
    assert_eq!(value, 7);
    let g = inst.graph();
    let root_lengths: Vec<u32> = g
        .out_arcs(0)
        .iter()
        .map(|&a| lengths[a])
        .collect();
    assert_eq!(root_lengths, vec![2, 3, 3, 4, 5, 6]);
    println!(
        "PASS: six subtrees with leaf depths 5,4,4,3,2,1 equalize at root \
         lengths 2,3,3,4,5,6 and value 7 exactly"
    );
}

#[test]
fn sat_reduction_equivalence_50() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sat_count = 0;
    for case in 0..50 {
        let cnf = sample_strict_cnf(&mut rng, 3 + case % 6);
        let gadget = build_gadget(&cnf).unwrap();
        let exact = brute_force_exact(&gadget.instance, &ExactConfig::default()).unwrap();
        let satisfiable = enumerate_satisfying(&cnf).unwrap().is_some();
        sat_count += usize::from(satisfiable);
        assert_eq!(
            satisfiable,
            exact.objective <= 7,
            "case {case}: satisfiable={satisfiable}, optimum {}",
            exact.objective
        );
        if !satisfiable {
            assert!(exact.objective >= 8, "case {case}");
        }
    }

    // Random formulas of this shape are almost always satisfiable, so pin
    // one unsatisfiable formula to keep the other direction meaningful.
    let unsat = CnfInstance::new(
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
    .unwrap();
    assert!(enumerate_satisfying(&unsat).unwrap().is_none());
    let gadget = build_gadget(&unsat).unwrap();
    let exact = brute_force_exact(&gadget.instance, &ExactConfig::default()).unwrap();
    assert!(exact.objective >= 8, "pinned formula: optimum {}", exact.objective);

    let elapsed = start.elapsed();
    println!(
        "PASS: 50 sampled formulas ({sat_count} satisfiable) plus one pinned \
         unsatisfiable one: satisfiable == (optimum <= 7), unsatisfiable \
         optimum {} >= 8, in {elapsed:?}",
        exact.objective
    );
}

#[test]
fn entropy_identity_100() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let inst = random_path_union(&mut rng, 7, 4, 8);
        let alpha = random_alpha(&mut rng, inst.paths().len());
        let objective = dual_objective(
            &inst,
            &pathcode::solver::dual_weights(&inst, &alpha),
            DEFAULT_MASS_FLOOR,
        );
        let split = entropy_split(&inst, &alpha, DEFAULT_MASS_FLOOR);
        let product = split.expected_hops * split.entropy_bits;
        worst = worst.max((objective - product).abs());
    }
    assert!(worst <= 1e-9, "worst deviation {worst}");
    println!(
        "PASS: 100 random (instance, distribution) pairs: dual objective \
         equals expected hops times per-hop entropy, worst deviation {worst:.2e}"
    );
}

#[test]
fn gradient_matches_finite_differences_100() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let inst = random_path_union(&mut rng, 7, 4, 8);
        let alpha = random_alpha(&mut rng, inst.paths().len());
        let grad = dual_gradient(&inst, &alpha, DEFAULT_MASS_FLOOR);
        for p in 0..alpha.len() {
            let mut plus = alpha.clone();
            let mut minus = alpha.clone();
            plus[p] += h;
            minus[p] -= h;
            let bits_slope = (dual_objective(
                &inst,
                &pathcode::solver::dual_weights(&inst, &plus),
                DEFAULT_MASS_FLOOR,
            ) - dual_objective(
                &inst,
                &pathcode::solver::dual_weights(&inst, &minus),
                DEFAULT_MASS_FLOOR,
            )) / (2.0 * h);
            // The gradient is in nats; the objective reads out in bits.
            worst = worst.max((grad[p] - bits_slope * std::f64::consts::LN_2).abs());
        }
    }
    assert!(worst <= 1e-4, "worst deviation {worst}");
    println!(
        "PASS: 100 random (instance, distribution) pairs: analytic gradient \
         matches central differences, worst component deviation {worst:.2e}"
    );
}

#[test]
fn codec_roundtrip_corpus() {
    let mut corpus: Vec<(String, ProblemInstance)> = vec![
        ("tree".into(), seven_leaf_tree()),
        ("spine-2".into(), spine(2)),
        ("spine-4".into(), spine(4)),
        ("spine-6".into(), spine(6)),
        ("mesh-9".into(), ring_mesh_instance(9, 3)),
    ];
    let sat = CnfInstance::new(3, vec![vec![1, 2, 3], vec![-1, -2], vec![-2, -3]]).unwrap();
    corpus.push(("gadget-sat".into(), build_gadget(&sat).unwrap().instance));
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let sampled = sample_strict_cnf(&mut rng, 5);
    corpus.push(("gadget-sampled".into(), build_gadget(&sampled).unwrap().instance));

    let (graph, _) = parse_graph(&data("isp/abilene.topo")).unwrap();
    let paths = shortest_path_set(&graph);
    corpus.push((
        "abilene".into(),
        ProblemInstance::new(graph, paths).unwrap(),
    ));

    // Random instances, keeping those whose routes all end at true sinks so
    // every declared route is uniquely decodable.
    let mut kept = 0;
    while kept < 10 {
        let inst = random_path_union(&mut rng, 7, 4, 8);
        let sink_terminated = inst
            .paths()
            .iter()
            .all(|p| inst.graph().out_degree(p.target(inst.graph())) == 0);
        if sink_terminated {
            corpus.push((format!("random-{kept}"), inst));
            kept += 1;
        }
    }

    let mut total_paths = 0;
    for (name, inst) in &corpus {
        let out = default_run(inst);
        assert_eq!(out.report.ambiguous_paths, 0, "{name}");
        let table = SwitchTable::new(&out.labels).unwrap();
        let g = inst.graph();

        // Prefix-freeness, exactly, at every vertex.
        for (vertex, ports) in &out.labels.vertices {
            for (i, a) in ports.iter().enumerate() {
                for b in &ports[i + 1..] {
                    assert!(
                        !a.label.starts_with(&b.label) && !b.label.starts_with(&a.label),
                        "{name}: {vertex} has overlapping labels {:?} and {:?}",
                        a.label,
                        b.label
                    );
                }
            }
        }

        for path in inst.paths() {
            let route: Vec<String> =
                path.vertices(g).iter().map(|&v| g.name(v).to_string()).collect();
            let packet = encode_path(&table, &route).unwrap_or_else(|e| {
                panic!("{name}: encoding {route:?} failed: {e}")
            });
            assert!(
                packet.bits.len() <= out.report.variable_bits as usize,
                "{name}: {} bits > reported {}",
                packet.bits.len(),
                out.report.variable_bits
            );
            let mut wire = unpack(&pack(&packet).unwrap()).unwrap();
            assert_eq!(wire, packet, "{name}: wire roundtrip");
            let walked = simulate(&table, &route[0], &mut wire).unwrap();
            assert_eq!(walked, route, "{name}");
            assert_eq!(wire.remaining(), 0, "{name}");
            total_paths += 1;
        }
    }
    println!(
        "PASS: {} corpus instances, {total_paths} routes: encode/simulate \
         roundtrips, headers within the reported worst case, labels \
         prefix-free at every vertex",
        corpus.len()
    );
}

#[test]
fn bench_bundled_topologies() {
    // The bundled files stay in lockstep with their builders.
    assert_eq!(
        parse_topology(&data("examples/tree.topo")).unwrap(),
        seven_leaf_tree(),
        "examples/tree.topo drifted from its builder"
    );
    assert_eq!(
        parse_topology(&data("examples/spine-4.topo")).unwrap(),
        spine(4),
        "examples/spine-4.topo drifted from its builder"
    );
    let (mesh_graph, mesh_paths) = parse_graph(&data("isp/mesh25.topo")).unwrap();
    assert!(mesh_paths.is_empty());
    assert_eq!(serialize_graph(&mesh_graph), serialize_graph(&ring_mesh(25, 5)));

    let mut rows = Vec::new();
    for (name, inst) in [
        ("tree", parse_topology(&data("examples/tree.topo")).unwrap()),
        ("spine-4", parse_topology(&data("examples/spine-4.topo")).unwrap()),
        ("abilene", {
            let (g, _) = parse_graph(&data("isp/abilene.topo")).unwrap();
            let paths = shortest_path_set(&g);
            ProblemInstance::new(g, paths).unwrap()
        }),
        ("mesh25", {
            let paths = shortest_path_set(&mesh_graph);
            ProblemInstance::new(mesh_graph.clone(), paths).unwrap()
        }),
    ] {
        let out = default_run(&inst);
        let r = out.report;
        assert!(
            r.variable_bits <= r.fixed_bits,
            "{name}: variable {} > fixed {}",
            r.variable_bits,
            r.fixed_bits
        );
        let doubled = (2.0 * r.relaxed_bits).ceil() as u32;
        assert!(
            r.variable_bits <= doubled,
            "{name}: variable {} > 2*relaxed rounded up {doubled}",
            r.variable_bits
        );
        rows.push((name, r));
    }
    let by_name = |n: &str| rows.iter().find(|(name, _)| *name == n).unwrap();
    let (_, tree) = by_name("tree");
    assert_eq!((tree.fixed_bits, tree.variable_bits), (5, 3));
    let (_, abilene) = by_name("abilene");
    assert_eq!(abilene.paths, 110);
    assert!(abilene.variable_bits < abilene.fixed_bits);
    let (_, mesh) = by_name("mesh25");
    assert_eq!(mesh.paths, 600);

    let table: Vec<String> = rows
        .iter()
        .map(|(n, r)| format!("{n} {}v/{}a/{}p fixed {} variable {}", r.vertices, r.arcs, r.paths, r.fixed_bits, r.variable_bits))
        .collect();
    println!(
        "PASS: bundled topologies match their builders; variable <= fixed and \
         variable <= ceil(2*relaxed) on all of them [{}]",
        table.join("; ")
    );
}
