use proptest::prelude::*;

use cascade_dendrite::addr::{is_cut_set, is_prefix_free, Address};
use cascade_dendrite::cascade::{
    check_condition_a, check_condition_b, martingale, solve_alpha, CascadeHandle, MomentOracle,
};
use cascade_dendrite::dendrite::{build_cutset_graph, build_level, DendriteGraph};
use cascade_dendrite::measure::{cell_masses, cover_sums, BallProfile};
use cascade_dendrite::perc::{mark_open, neighborhood_count, CellGraph};
use cascade_dendrite::resist::{gw_population, partial_height, resistance_value, PerturbationLaw};
use cascade_dendrite::stats::{fit_line, mean_stderr};
use cascade_dendrite::{ScalingLaw, VertexId};

fn address() -> impl Strategy<Value = Address> {
    prop::collection::vec(1u8..=3, 0..10).prop_map(|v| Address::from_symbols(&v))
}

fn random_law() -> impl Strategy<Value = ScalingLaw> {
    prop_oneof![
        Just(ScalingLaw::uniform()),
        Just(ScalingLaw::sqrt_dirichlet_half()),
        (0.3f64..4.0).prop_map(|a| ScalingLaw::BetaIID { a, b: a }),
        Just(ScalingLaw::BoundedPairPlusOne { lo: 0.2, hi: 0.8 }),
        (0.05f64..0.3).prop_map(ScalingLaw::unit_atom),
    ]
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn truncate_inverts_concat(i in address(), j in address()) {
        prop_assert_eq!(i.concat(&j).truncate(i.len()).unwrap(), i.clone());
        prop_assert!(i.is_prefix_of(&i.concat(&j)));
    }

    #[test]
    fn address_text_round_trip(i in address()) {
        prop_assert_eq!(i.to_string().parse::<Address>().unwrap(), i);
    }

    #[test]
    fn cutsets_are_prefix_free_cut_sets(seed in 0u64..10_000, k in 1.0f64..3.0, law in random_law()) {
        let h = CascadeHandle::new(seed, law);
        let delta = (-k).exp();
        let g = build_cutset_graph(&h, delta, 4).unwrap();
        let fam: Vec<Address> = g.edges.iter().map(|e| e.address.clone()).collect();
        prop_assert!(is_cut_set(&fam, 3));
        prop_assert!(is_prefix_free(&fam));
        let cs = g.cutset.as_ref().unwrap();
        for e in &g.edges {
            prop_assert!(e.length <= delta);
            prop_assert!(cs.parent_lengths[&e.address] > delta);
        }
    }

    #[test]
    fn queries_are_order_independent(seed in any::<u64>(), addrs in prop::collection::vec(address(), 1..20), law in random_law()) {
        let h = CascadeHandle::new(seed, law.clone());
        let forward: Vec<[f64; 3]> = addrs.iter().map(|a| h.sibling_triple(a)).collect();
        let fresh = CascadeHandle::new(seed, law);
        let mut backward: Vec<[f64; 3]> = addrs.iter().rev().map(|a| fresh.sibling_triple(a)).collect();
        backward.reverse();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn replicas_use_distinct_streams(seed in 0u64..u64::MAX / 2, idx in 1u64..1000) {
        let h = CascadeHandle::new(seed, ScalingLaw::uniform());
        prop_assert_ne!(h.triple_at(&[]), h.replica(idx).triple_at(&[]));
    }

    #[test]
    fn f_is_decreasing(t1 in 0.1f64..6.0, dt in 0.01f64..3.0, law in prop_oneof![
        Just(ScalingLaw::uniform()),
        Just(ScalingLaw::sqrt_dirichlet_half()),
        (0.3f64..4.0, 0.3f64..4.0).prop_map(|(a, b)| ScalingLaw::BetaIID { a, b }),
        Just(ScalingLaw::Deterministic { r1: 0.3, r2: 0.5, r3: 0.6 }),
    ]) {
        let o = MomentOracle::new(&law, 10);
        prop_assert!(o.is_exact());
        prop_assert!(o.eval(t1).unwrap().0 > o.eval(t1 + dt).unwrap().0);
    }

    #[test]
    fn alpha_root_and_range(a in 0.2f64..5.0) {
        let law = ScalingLaw::BetaIID { a, b: a };
        prop_assert!(check_condition_a(&law) && check_condition_b(&law));
        let alpha = solve_alpha(&law, 1e-10).unwrap();
        let f = MomentOracle::new(&law, 10).eval(alpha).unwrap().0;
        prop_assert!((f - 1.0).abs() < 1e-8, "F(α) = {}", f);
        prop_assert!(alpha > 1.0);
    }

    #[test]
    fn martingale_starts_at_one(seed in any::<u64>(), theta in 0.5f64..3.0) {
        let m = martingale(&CascadeHandle::new(seed, ScalingLaw::uniform()), theta, 0).unwrap();
        prop_assert_eq!(m.value, 1.0);
    }

    #[test]
    fn resistance_recursion(seed in any::<u64>(), i in address(), depth in 1usize..10, law in random_law()) {
        let h = CascadeHandle::new(seed, law);
        let r = resistance_value(&h, i.symbols(), depth);
        let c1 = i.child(1);
        let c2 = i.child(2);
        let rhs = h.weight(&c1) * resistance_value(&h, c1.symbols(), depth - 1)
            + h.weight(&c2) * resistance_value(&h, c2.symbols(), depth - 1);
        prop_assert!((r - rhs).abs() <= 1e-12 * r.max(1.0));
    }

    #[test]
    fn pair_sums_give_unit_resistance(seed in any::<u64>(), i in address(), depth in 0usize..12) {
        let h = CascadeHandle::new(seed, ScalingLaw::BoundedPairPlusOne { lo: 0.2, hi: 0.8 });
        prop_assert!((resistance_value(&h, i.symbols(), depth) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_compatible_at_matched_depths(seed in any::<u64>(), i in address(), d in 1usize..10, law in random_law()) {
        let h = CascadeHandle::new(seed, law);
        let weight = |a: &Address, depth: usize| h.path_product(a) * resistance_value(&h, a.symbols(), depth);
        let lhs = weight(&i, d);
        let rhs = weight(&i.child(1), d - 1) + weight(&i.child(2), d - 1);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn perturbed_height_is_dominated(seed in any::<u64>(), n in 0usize..7, q in 0.0f64..0.5) {
        let h = CascadeHandle::new(seed, ScalingLaw::unit_atom(q));
        let s = partial_height(&h, n, PerturbationLaw::Exponential { rate: 1.0 }).unwrap();
        let bound: f64 = s.level_sups.iter().sum();
        prop_assert!(s.value <= bound + 1e-12);
        prop_assert!(s.partial.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn surviving_lines_have_full_height(seed in any::<u64>(), n in 0usize..9, q in 0.2f64..0.9) {
        let h = CascadeHandle::new(seed, ScalingLaw::unit_atom(q));
        let z = gw_population(&h, n).unwrap();
        let s = partial_height(&h, n, PerturbationLaw::Unit).unwrap();
        for m in 0..=n {
            if z[m] > 0 {
                prop_assert!(s.partial[m] >= (m + 1) as f64);
            }
        }
    }
}

fn to_vertex_set(g: &DendriteGraph) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); g.vertex_count()];
    for e in &g.edges {
        adj[e.end_local0.0 as usize].push((e.end_local1.0 as usize, e.weight));
        adj[e.end_local1.0 as usize].push((e.end_local0.0 as usize, e.weight));
    }
    adj
}

/// Tree path between two vertices, as a vertex list.
fn tree_path(adj: &[Vec<(usize, f64)>], x: usize, y: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[x] = x;
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        for &(u, _) in &adj[v] {
            if parent[u] == usize::MAX {
                parent[u] = v;
                stack.push(u);
            }
        }
    }
    let mut path = vec![y];
    while *path.last().unwrap() != x {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn refinement_keeps_a_tree(seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..30), law in random_law()) {
        let h = CascadeHandle::new(seed, law);
        let mut g = DendriteGraph::root(&h, 4);
        for p in picks {
            let a = g.edges[p.index(g.edge_count())].address.clone();
            if a.len() < 12 {
                g.refine_edge(&a, &h).unwrap();
            }
            prop_assert_eq!(g.edge_count() + 1, g.vertex_count());
            g.validate().unwrap();
        }
        let adj = g.adjacency();
        prop_assert!(adj.tree_distances(g.boundary0()).iter().all(|d| d.is_finite()));
    }

    #[test]
    fn metric_axioms_on_paths(seed in any::<u64>(), n in 1usize..5, picks in prop::collection::vec(any::<prop::sample::Index>(), 3)) {
        let h = CascadeHandle::new(seed, ScalingLaw::uniform());
        let g = build_level(&h, n, 6).unwrap();
        let nv = g.vertex_count();
        let (x, z) = (picks[0].index(nv), picks[1].index(nv));
        let d = |a: usize, b: usize| g.path_resistance(VertexId(a as u32), VertexId(b as u32)).unwrap();
        prop_assert_eq!(d(x, z), d(z, x));
        prop_assert_eq!(d(x, x), 0.0);
        if x != z {
            prop_assert!(d(x, z) > 0.0);
        }
        let path = tree_path(&to_vertex_set(&g), x, z);
        let y = path[picks[2].index(path.len())];
        prop_assert!((d(x, z) - d(x, y) - d(y, z)).abs() <= 1e-12 * d(x, z).max(1.0));
        let w = picks[2].index(nv);
        prop_assert!(d(x, z) <= d(x, w) + d(w, z) + 1e-12);
    }

    #[test]
    fn chaining_bound(seed in any::<u64>(), n in 0usize..5, law in random_law()) {
        let r = 5;
        let h = CascadeHandle::new(seed, law);
        let g = build_level(&h, n, r).unwrap();
        let bound: f64 = 2.0 * (0..=n)
            .map(|m| {
                Address::level(m, 3)
                    .iter()
                    .map(|i| h.path_product(i) * resistance_value(&h, i.symbols(), r + n - m))
                    .fold(0.0, f64::max)
            })
            .sum::<f64>();
        let d = g.adjacency().tree_distances(g.boundary0());
        prop_assert!(d.iter().all(|&v| v <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn cells_meet_in_at_most_one_vertex(seed in any::<u64>(), k in 1.0f64..3.0, law in random_law()) {
        let h = CascadeHandle::new(seed, law);
        let g = build_cutset_graph(&h, (-k).exp(), 4).unwrap();
        let adj = g.adjacency();
        prop_assert!((0..g.vertex_count()).all(|v| adj.degree(VertexId(v as u32)) <= 3));
        let mut seen = std::collections::BTreeSet::new();
        for e in &g.edges {
            let key = (e.end_local0.0.min(e.end_local1.0), e.end_local0.0.max(e.end_local1.0));
            prop_assert!(seen.insert(key), "two cells share both ends");
        }
    }

    #[test]
    fn masses_are_additive(seed in any::<u64>(), k in 1.0f64..2.5, law in random_law()) {
        let h = CascadeHandle::new(seed, law.clone());
        let alpha = solve_alpha(&law, 1e-10).unwrap();
        let g = build_cutset_graph(&h, (-k).exp(), 4).unwrap();
        let fam: Vec<Address> = g.edges.iter().map(|e| e.address.clone()).collect();
        let leaf = fam.iter().map(|a| a.len()).max().unwrap() + 1;
        prop_assume!(leaf <= 9);
        let m = cell_masses(&h, &fam, leaf, alpha).unwrap();
        let total: f64 = m.masses.values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let children: Vec<Address> = fam.iter().flat_map(|a| (1..=3).map(move |c| a.child(c))).collect();
        let mc = cell_masses(&h, &children, leaf, alpha).unwrap();
        for a in &fam {
            let s: f64 = (1..=3).map(|c| mc.mass(&a.child(c)).unwrap()).sum();
            prop_assert!((s - m.mass(a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_is_ordered_and_monotone(seed in any::<u64>(), n in 1usize..5, x in any::<prop::sample::Index>(), r1 in 0.0f64..1.5, dr in 0.0f64..1.0) {
        let h = CascadeHandle::new(seed, ScalingLaw::uniform());
        let g = build_level(&h, n, 6).unwrap();
        let fam: Vec<Address> = g.edges.iter().map(|e| e.address.clone()).collect();
        let m = cell_masses(&h, &fam, n + 2, 2.0).unwrap();
        let masses: Vec<f64> = fam.iter().map(|a| m.mass(a).unwrap()).collect();
        let p = BallProfile::new(&g, &masses, VertexId(x.index(g.vertex_count()) as u32), 4.0);
        let (lo1, up1) = p.sandwich(r1);
        let (lo2, up2) = p.sandwich(r1 + dr);
        prop_assert!(0.0 <= lo1 && lo1 <= up1 && up1 <= 1.0 + 1e-12);
        prop_assert!(lo1 <= lo2 && up1 <= up2);
    }

    #[test]
    fn exploration_trace(seed in any::<u64>(), eps in 0.2f64..3.0, start in any::<prop::sample::Index>()) {
        let h = CascadeHandle::new(seed, ScalingLaw::uniform());
        let g = build_cutset_graph(&h, (-2.5f64).exp(), 4).unwrap();
        let cells = CellGraph::new(&g, &mark_open(&g, eps).unwrap());
        let (cluster, tau, trace) = cells.explore(start.index(g.edge_count()) as u32);
        prop_assert_eq!(cluster.len(), tau);
        prop_assert_eq!(trace.len(), tau + 1);
        for (n, d) in trace.iter().enumerate() {
            prop_assert_eq!(*d, n.min(tau));
        }
        prop_assert!(cells.neighbours.iter().all(|v| v.len() <= 4));
    }

    #[test]
    fn bounded_pair_neighbourhoods(seed in any::<u64>(), k in 1.0f64..4.0) {
        let h = CascadeHandle::new(seed, ScalingLaw::BoundedPairPlusOne { lo: 0.2, hi: 0.8 });
        let g = build_cutset_graph(&h, (-k).exp(), 4).unwrap();
        for v in (0..g.vertex_count()).step_by(5) {
            prop_assert!(neighborhood_count(&g, VertexId(v as u32), 0.2).unwrap() <= 9);
        }
    }

    #[test]
    fn exact_lines_are_recovered(a in -5.0f64..5.0, b in -5.0f64..5.0, n in 3usize..20) {
        let pts: Vec<(f64, f64)> = (0..n).map(|k| (k as f64, a * k as f64 + b)).collect();
        let f = fit_line(&pts).unwrap();
        prop_assert!((f.slope - a).abs() < 1e-9 && (f.intercept - b).abs() < 1e-9);
    }
}

#[test]
fn martingale_mean_is_one_at_theta_one() {
    let law = ScalingLaw::uniform();
    for n in [2usize, 5, 8] {
        let vals: Vec<f64> = (0..200u64)
            .map(|s| martingale(&CascadeHandle::new(s, law.clone()), 1.0, n).unwrap().value)
            .collect();
        let (m, se) = mean_stderr(vals.iter().copied());
        assert!((m - 1.0).abs() < 3.0 * se, "n={n}: {m} ± {se}");
    }
}

#[test]
fn level_suprema_decay_geometrically() {
    let law = ScalingLaw::unit_atom(0.2);
    let n = 10;
    let mut sums = vec![0.0; n + 1];
    let seeds = 100u64;
    for s in 0..seeds {
        let h = partial_height(&CascadeHandle::new(s, law.clone()), n, PerturbationLaw::Unit).unwrap();
        for (m, v) in h.level_sups.iter().enumerate() {
            sums[m] += v / seeds as f64;
        }
    }
    let pts: Vec<(f64, f64)> = sums.iter().enumerate().map(|(m, v)| (m as f64, v.ln())).collect();
    assert!(fit_line(&pts[1..]).unwrap().slope < 0.0);
}

#[test]
fn cover_sums_shrink_above_alpha() {
    let grid = [2.3];
    let n_max = 6;
    let mut mean = vec![0.0; n_max];
    for s in 0..30u64 {
        let rows = cover_sums(&CascadeHandle::new(s, ScalingLaw::uniform()), &grid, n_max, 2, 4).unwrap();
        for (n, r) in rows.iter().enumerate() {
            mean[n] += r[0] / 30.0;
        }
    }
    let pts: Vec<(f64, f64)> = mean.iter().enumerate().map(|(n, v)| ((n + 1) as f64, v.ln())).collect();
    assert!(fit_line(&pts).unwrap().slope < 0.0);
}
