use toridimer::height::{
    branch_winding, check_prop21, height_change, height_function_with, height_sum, Propagation,
};
use toridimer::kasteleyn::char_poly;
use toridimer::lattice::{PeriodicGraph, TorusInstance};
use toridimer::numeric::rat;
use toridimer::temperley::{enumerate_dimers, DEFAULT_CAP};

fn drifted() -> PeriodicGraph {
    PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(4, 1))
}

#[test]
fn prop21_holds_on_small_tori() {
    for (g, n) in [(PeriodicGraph::uniform_grid(), 1), (PeriodicGraph::uniform_grid(), 2), (drifted(), 1), (drifted(), 2)] {
        let t = TorusInstance::new(&g, n).unwrap();
        let r = check_prop21(&t, DEFAULT_CAP).unwrap();
        assert!(r.failures.is_empty(), "n={n}: {:?}", &r.failures[..r.failures.len().min(5)]);
        assert!(r.sign_failures.is_empty());
    }
}

#[test]
fn eq26_sum_is_char_poly() {
    for (g, n) in [(PeriodicGraph::uniform_grid(), 1), (drifted(), 1), (drifted(), 2)] {
        let t = TorusInstance::new(&g, n).unwrap();
        assert_eq!(height_sum(&t, DEFAULT_CAP).unwrap(), char_poly(&t).unwrap().poly);
    }
}

#[test]
fn propagation_order_does_not_matter() {
    let t = TorusInstance::new(&drifted(), 2).unwrap();
    for m in enumerate_dimers(&t.double, DEFAULT_CAP).unwrap().iter().step_by(7) {
        let a = height_function_with(&t.double, m, 0, Propagation::Bfs).unwrap();
        let b = height_function_with(&t.double, m, 0, Propagation::Dfs).unwrap();
        assert_eq!(a.change, b.change);
        for f in 0..a.height.len() {
            assert!((a.at(f, [0, 0]) - b.at(f, [0, 0])).abs() < 1e-9);
        }
        assert_eq!(a.change.unwrap(), height_change(&t, m).unwrap());
    }
}

#[test]
fn winding_of_straight_path_is_zero() {
    let t = TorusInstance::new(&PeriodicGraph::uniform_grid(), 3).unwrap();
    let emb = &t.primal().emb;
    let row = [0usize, 1, 2, 0];
    assert_eq!(branch_winding(emb, &row).unwrap().winding, 0.0);
    assert!(branch_winding(emb, &[0, 4]).is_err());
}

#[test]
fn branch_winding_equals_tree_height_difference() {
    use toridimer::height::{half_edge_winding, height_function, tree_height};
    use toridimer::lattice::WiredInstance;
    use toridimer::temperley::{dual_tree_of, enumerate_wired_trees, forest_to_dimer, OcrsfPair};
    for g in [PeriodicGraph::uniform_grid(), drifted()] {
        let w = WiredInstance::new(&g, 4).unwrap();
        let emb = &w.primal().emb;
        let trees = enumerate_wired_trees(&w, DEFAULT_CAP).unwrap();
        let mut checked = 0;
        for t in trees.iter().step_by(11) {
            let pair = OcrsfPair { primal: t.clone(), dual: dual_tree_of(&w, t).unwrap() };
            let m = forest_to_dimer(&w.double, &pair).unwrap();
            let base = (0..w.double.faces.count()).find(|&f| w.double.active_face(f)).unwrap();
            let hf = height_function(&w.double, &m, base).unwrap();
            for start in 0..emb.vertex_count() {
                let mut halves = Vec::new();
                let mut v = start;
                while let Some(h) = t[v] {
                    if emb.head(h) == w.root() {
                        break;
                    }
                    halves.push(h);
                    v = emb.head(h);
                }
                if halves.len() < 2 {
                    continue;
                }
                let lhs = half_edge_winding(emb, &halves);
                let rhs = tree_height(&w.double, &hf, *halves.last().unwrap()) - tree_height(&w.double, &hf, halves[0]);
                assert!((lhs - rhs).abs() < 1e-9, "winding {lhs} vs height {rhs}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
