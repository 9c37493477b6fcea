use featgrind::graph::{
    generate_graph, gini, parse_fraction, sparsify, CsrGraph, GraphKind, SparsifyMethod,
    SparsifyVariant,
};

fn degree_variance(g: &CsrGraph) -> f64 {
    let d: Vec<f64> = g.degrees().iter().map(|&x| x as f64).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64
}

fn degrees_f64(g: &CsrGraph) -> Vec<f64> {
    g.degrees().iter().map(|&x| x as f64).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn run(g: &CsrGraph, variant: SparsifyVariant, keep: &str, seed: u64) -> CsrGraph {
    let m = SparsifyMethod::new(variant, parse_fraction(keep).unwrap()).unwrap();
    sparsify(g, m, seed).unwrap()
}

#[test]
fn degree_variance_orders_variants() {
    for keep in ["0.1", "0.3", "0.5"] {
        let mut by_variant = [Vec::new(), Vec::new(), Vec::new()];
        for seed in 0..10 {
            let g = generate_graph(GraphKind::PreferentialAttachment { m: 4 }, 500, seed, true).unwrap();
            for (slot, v) in [SparsifyVariant::Centralized, SparsifyVariant::Random, SparsifyVariant::Uniform]
                .into_iter()
                .enumerate()
            {
                by_variant[slot].push(degree_variance(&run(&g, v, keep, seed)));
            }
        }
        let [c, r, u] = by_variant.map(median);
        assert!(c >= r && r >= u, "keep {keep}: centralized {c} random {r} uniform {u}");
    }
}

#[test]
fn centralized_concentrates_degrees_more_than_uniform() {
    let g = generate_graph(GraphKind::PreferentialAttachment { m: 4 }, 500, 0, true).unwrap();
    let c = run(&g, SparsifyVariant::Centralized, "0.1", 3);
    let u = run(&g, SparsifyVariant::Uniform, "0.1", 3);
    assert!(gini(&c.degrees()) > gini(&u.degrees()));
}

/// Mean absolute difference over all ordered pairs, divided by twice the mean.
fn gini_pairwise(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

#[test]
fn gini_matches_pairwise_definition() {
    let g = generate_graph(GraphKind::PreferentialAttachment { m: 3 }, 300, 9, false).unwrap();
    for variant in [SparsifyVariant::Centralized, SparsifyVariant::Random, SparsifyVariant::Uniform] {
        let s = run(&g, variant, "0.2", 1);
        assert!((gini(&s.degrees()) - gini_pairwise(&degrees_f64(&s))).abs() < 1e-12);
    }
}

#[test]
fn edge_counts_are_exact() {
    let g = generate_graph(GraphKind::ErdosRenyi { p: 0.05 }, 400, 2, true).unwrap();
    let e = g.num_edges() as u64;
    for keep in ["0.1", "1/3", "0.25", "0.999"] {
        let f = parse_fraction(keep).unwrap();
        let want = (f * e).ceil().to_integer();
        for variant in [SparsifyVariant::Centralized, SparsifyVariant::Random, SparsifyVariant::Uniform] {
            let s = run(&g, variant, keep, 4);
            assert_eq!(s.num_edges() as u64, want, "{variant} keep {keep}");
            assert_eq!(s.n(), g.n());
            assert!(s.has_self_loops());
            s.validate().unwrap();
            assert_eq!(s, run(&g, variant, keep, 4));
        }
    }
}
