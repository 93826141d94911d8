use toridimer::kasteleyn::partition_function;
use toridimer::laplacian::kernel::{
    green_matrix, monte_carlo_green_row, star_condition_probe, torus_dimer_probability, verify_green, EdgeKernel,
};
use toridimer::lattice::{PeriodicGraph, TorusInstance, WiredInstance};
use toridimer::numeric::{rat, Rat};
use toridimer::temperley::{enumerate_dimers, enumerate_wired_trees, DEFAULT_CAP};

fn drifted() -> PeriodicGraph {
    PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(5, 1))
}

fn tree_frequency(w: &WiredInstance, halves: &[usize]) -> Rat {
    let trees = enumerate_wired_trees(w, DEFAULT_CAP).unwrap();
    let p = w.primal();
    let weight = |t: &Vec<Option<usize>>| -> Rat { t.iter().flatten().map(|&h| p.half_weight(h).clone()).product() };
    let total: Rat = trees.iter().map(weight).sum();
    let hit: Rat = trees.iter().filter(|t| halves.iter().all(|h| t.contains(&Some(*h)))).map(weight).sum();
    hit / total
}

#[test]
fn directed_kernel_matches_tree_enumeration() {
    for (g, n) in [(PeriodicGraph::uniform_grid(), 3), (PeriodicGraph::uniform_grid(), 4), (drifted(), 4)] {
        let w = WiredInstance::new(&g, n).unwrap();
        let k = EdgeKernel::<Rat>::wired(&w).unwrap();
        let nh = 2 * w.primal().edge_count();
        for h in 0..nh {
            assert_eq!(k.directed_probability(&w.double, &[h]).unwrap(), tree_frequency(&w, &[h]), "n={n} h={h}");
        }
        for a in 0..nh {
            for b in (a + 1..nh).step_by(3) {
                assert_eq!(k.directed_probability(&w.double, &[a, b]).unwrap(), tree_frequency(&w, &[a, b]));
            }
        }
    }
}

#[test]
fn undirected_kernel_matches_enumeration() {
    let w = WiredInstance::new(&drifted(), 4).unwrap();
    let k = EdgeKernel::<Rat>::wired(&w).unwrap();
    let ne = w.primal().edge_count();
    for e in 0..ne {
        let p = k.undirected_probability(&w.double, &[e]).unwrap();
        assert_eq!(p, tree_frequency(&w, &[2 * e]) + tree_frequency(&w, &[2 * e + 1]));
        for f in e + 1..ne {
            let pair = k.undirected_probability(&w.double, &[e, f]).unwrap();
            let mut want = rat(0, 1);
            for a in [2 * e, 2 * e + 1] {
                for b in [2 * f, 2 * f + 1] {
                    want += tree_frequency(&w, &[a, b]);
                }
            }
            assert_eq!(pair, want);
        }
    }
}

#[test]
fn shared_start_gives_zero() {
    let w = WiredInstance::new(&PeriodicGraph::uniform_grid(), 4).unwrap();
    let k = EdgeKernel::<Rat>::wired(&w).unwrap();
    let p = w.primal();
    let v = p.emb.edges[0].tail;
    let out: Vec<usize> = (0..2 * p.edge_count()).filter(|&h| p.emb.tail(h) == v).take(2).collect();
    assert_eq!(k.directed_probability(&w.double, &out).unwrap(), rat(0, 1));
}

#[test]
fn torus_dimer_probabilities_match_enumeration() {
    for (g, n) in [(PeriodicGraph::uniform_grid(), 1), (drifted(), 1), (drifted(), 2)] {
        let t = TorusInstance::new(&g, n).unwrap();
        let pf = partition_function(&t, DEFAULT_CAP).unwrap();
        let configs = enumerate_dimers(&t.double, DEFAULT_CAP).unwrap();
        let total: Rat = configs.iter().map(|m| m.weight(&t.double)).sum();
        assert_eq!(total, pf.value);
        for de in 0..t.double.edge_count() {
            let hit: Rat = configs.iter().filter(|m| m.edges.contains(&de)).map(|m| m.weight(&t.double)).sum();
            assert_eq!(torus_dimer_probability(&t, &pf, &[de]).unwrap(), hit / total.clone(), "n={n} de={de}");
        }
    }
}

#[test]
fn green_identities_exact() {
    for n in 3..6 {
        let w = WiredInstance::new(&drifted(), n).unwrap();
        let r = verify_green::<Rat>(&w).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn green_far_entry_smaller_than_near() {
    let w = WiredInstance::new(&PeriodicGraph::uniform_grid(), 5).unwrap();
    let g = green_matrix::<Rat>(&w).unwrap();
    let p = w.primal();
    let e = (0..p.edge_count()).find(|&e| p.emb.edges[e].tail != w.root() && p.emb.edges[e].head != w.root()).unwrap();
    let mid = p.midpoint(e);
    let dist = |v: usize| ((p.emb.pos[v][0] - mid[0]).powi(2) + (p.emb.pos[v][1] - mid[1]).powi(2)).sqrt();
    let mut cols: Vec<usize> = (0..g.vertices.len()).collect();
    cols.sort_by(|&a, &b| dist(g.vertices[a]).partial_cmp(&dist(g.vertices[b])).unwrap());
    let near = toridimer::numeric::rat_to_f64(&g.b[(e, cols[0])]).abs();
    let far = toridimer::numeric::rat_to_f64(&g.b[(e, *cols.last().unwrap())]).abs();
    assert!(far < near, "far {far} near {near}");
}

#[test]
fn monte_carlo_agrees_with_green_row() {
    let w = WiredInstance::new(&drifted(), 4).unwrap();
    let g = green_matrix::<Rat>(&w).unwrap();
    let r = monte_carlo_green_row(&w, &g, 0, 100_000, 7);
    assert!(r.passed, "{r:?}");
}

fn bucket(p: &toridimer::laplacian::kernel::StarProbe, n: usize, r: usize) -> f64 {
    p.rows.iter().find(|x| x.n == n && x.distance == r).unwrap().max_abs_entry
}

#[test]
fn star_probe_on_drifted_grid() {
    let probe = star_condition_probe(&drifted(), &[8, 12, 16], 8).unwrap();
    for n in [12, 16] {
        assert!(bucket(&probe, n, 8) < bucket(&probe, n, 2));
    }
    assert_eq!(probe.gaps.len(), 2);
    assert!(probe.converging, "{:?}", probe.gaps);
    assert!(probe.to_csv().starts_with("N,distance,max_abs_entry,verdict\n"));
}

#[test]
fn star_probe_on_uniform_grid() {
    let probe = star_condition_probe(&PeriodicGraph::uniform_grid(), &[8, 12, 16], 8).unwrap();
    assert!(bucket(&probe, 16, 8) < bucket(&probe, 16, 2));
    assert!(probe.converging, "{:?}", probe.gaps);
}
