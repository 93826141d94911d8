use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use toridimer::laplacian::wired_laplacian;
use toridimer::lattice::{PeriodicGraph, WiredInstance};
use toridimer::numeric::{rat, rat_to_f64, Rat};
use toridimer::sampler::{
    chi_square, chi_square_two_sample, loop_erase, loop_erase_checked, total_variation, tree_histogram,
    wilson_sample, wilson_sample_with_budget, Network, RandomWalkState, ScanOrder,
};
use toridimer::temperley::{enumerate_wired_trees, DEFAULT_CAP};

fn drifted() -> PeriodicGraph {
    PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(4, 1))
}

fn p_value(stat: f64, df: usize) -> f64 {
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat)
}

/// Chronological erasure: append each vertex, cutting back to its earlier occurrence.
fn chronological_erase(path: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &v in path {
        if let Some(i) = out.iter().position(|&u| u == v) {
            out.truncate(i + 1);
        } else {
            out.push(v);
        }
    }
    out
}

fn exact_probs(net: &Network, trees: &[Vec<Option<usize>>]) -> Vec<f64> {
    let w: Vec<Rat> = trees.iter().map(|t| net.tree_weight(t)).collect();
    let z: Rat = w.iter().cloned().sum();
    w.iter().map(|x| rat_to_f64(&(x / &z))).collect()
}

#[test]
fn loop_erase_examples() {
    assert_eq!(loop_erase(&['a', 'b', 'a', 'c']), vec!['a', 'c']);
    assert_eq!(loop_erase(&['a', 'b', 'c', 'b', 'd', 'a', 'e']), vec!['a', 'e']);
    assert_eq!(loop_erase(&['a', 'b', 'c']), vec!['a', 'b', 'c']);
}

#[test]
fn loop_erase_rejects_non_adjacent_steps() {
    let w = WiredInstance::new(&PeriodicGraph::uniform_grid(), 4).unwrap();
    let net = Network::from_wired(&w).unwrap();
    assert!(loop_erase_checked(&net, &[0, 3]).is_err());
    assert_eq!(loop_erase_checked(&net, &[0, 1, 0, 1]).unwrap(), vec![0, 1]);
}

#[test]
fn transition_probabilities_sum_to_one() {
    let w = WiredInstance::new(&drifted(), 4).unwrap();
    let net = Network::from_wired(&w).unwrap();
    for v in 0..net.vertex_count() {
        if v != net.root {
            let s: Rat = net.transition(v).into_iter().map(|(_, p)| p).sum();
            assert_eq!(s, rat(1, 1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn last_exit_matches_chronological(seed in any::<u64>(), len in 1usize..200) {
        let w = WiredInstance::new(&drifted(), 4).unwrap();
        let net = Network::from_wired(&w).unwrap();
        let mut walk = RandomWalkState::new((seed % 4) as usize, seed, 0);
        let mut path = vec![walk.current];
        for _ in 0..len {
            if walk.current == net.root {
                break;
            }
            walk.step(&net);
            path.push(walk.current);
        }
        let erased = loop_erase_checked(&net, &path).unwrap();
        prop_assert_eq!(&erased, &chronological_erase(&path));
        prop_assert_eq!(loop_erase(&erased), erased.clone());
        let mut seen = erased.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), erased.len());
    }

    #[test]
    fn loop_erase_idempotent(path in proptest::collection::vec(0u8..6, 0..60)) {
        let once = loop_erase(&path);
        prop_assert_eq!(loop_erase(&once), once);
    }
}

#[test]
fn matrix_tree_oracle() {
    for n in [3, 4] {
        for g in [PeriodicGraph::uniform_grid(), drifted()] {
            let w = WiredInstance::new(&g, n).unwrap();
            let net = Network::from_wired(&w).unwrap();
            let trees = enumerate_wired_trees(&w, DEFAULT_CAP).unwrap();
            let z: Rat = trees.iter().map(|t| net.tree_weight(t)).sum();
            assert_eq!(z, wired_laplacian::<Rat>(&w).matrix.det().unwrap());
        }
    }
}

#[test]
fn wilson_trees_are_spanning() {
    let w = WiredInstance::new(&drifted(), 5).unwrap();
    let net = Network::from_wired(&w).unwrap();
    for s in 0..50 {
        let t = wilson_sample(&net, 1, s, ScanOrder::LowestFirst).unwrap();
        t.validate(&net).unwrap();
        assert_eq!(t.weight, net.tree_weight(&t.parent));
    }
}

#[test]
fn wilson_is_deterministic() {
    let w = WiredInstance::new(&drifted(), 4).unwrap();
    let net = Network::from_wired(&w).unwrap();
    assert_eq!(wilson_sample(&net, 42, 3, ScanOrder::LowestFirst).unwrap(), wilson_sample(&net, 42, 3, ScanOrder::LowestFirst).unwrap());
}

#[test]
fn step_budget_guard() {
    let w = WiredInstance::new(&drifted(), 4).unwrap();
    let net = Network::from_wired(&w).unwrap();
    assert!(wilson_sample_with_budget(&net, 1, 0, ScanOrder::LowestFirst, 0).is_err());
}

#[test]
fn two_vertex_path_frequencies() {
    // Triangle 0, 1 and root 2.
    let net = Network::from_edges(
        3,
        2,
        &[(0, 1, rat(1, 1), rat(2, 1)), (1, 2, rat(3, 1), rat(1, 1)), (0, 2, rat(2, 1), rat(1, 1))],
    )
    .unwrap();
    // Weights: 0->1->2 is 1*3, {0->2, 1->2} is 2*3, 1->0->2 is 2*2.
    let trees = vec![vec![Some(0), Some(2), None], vec![Some(4), Some(2), None], vec![Some(4), Some(1), None]];
    let probs = exact_probs(&net, &trees);
    assert_eq!(probs.iter().map(|p| (p * 13.0).round() as i64).collect::<Vec<_>>(), vec![3, 6, 4]);
    let count = 100_000;
    let hist = tree_histogram(&net, &trees, count, 17, ScanOrder::LowestFirst).unwrap();
    for (o, p) in hist.iter().zip(&probs) {
        let sd = (count as f64 * p * (1.0 - p)).sqrt();
        assert!((*o as f64 - count as f64 * p).abs() < 3.0 * sd, "{hist:?}");
    }
}

#[test]
fn wilson_chi_square_wired_3x3() {
    for g in [PeriodicGraph::uniform_grid(), drifted()] {
        let w = WiredInstance::new(&g, 3).unwrap();
        let net = Network::from_wired(&w).unwrap();
        let trees = enumerate_wired_trees(&w, DEFAULT_CAP).unwrap();
        let probs = exact_probs(&net, &trees);
        let hist = tree_histogram(&net, &trees, 1_000_000, 2024, ScanOrder::LowestFirst).unwrap();
        let p = p_value(chi_square(&hist, &probs).unwrap(), trees.len() - 1);
        assert!(p > 0.001, "p = {p}");
        assert!(total_variation(&hist, &probs) < 0.01);
    }
}

#[test]
fn wilson_chi_square_wired_4x4() {
    for g in [PeriodicGraph::uniform_grid(), drifted()] {
        let w = WiredInstance::new(&g, 4).unwrap();
        let net = Network::from_wired(&w).unwrap();
        let trees = enumerate_wired_trees(&w, DEFAULT_CAP).unwrap();
        let probs = exact_probs(&net, &trees);
        let hist = tree_histogram(&net, &trees, 200_000, 7, ScanOrder::LowestFirst).unwrap();
        let p = p_value(chi_square(&hist, &probs).unwrap(), trees.len() - 1);
        assert!(p > 0.001, "p = {p}");
    }
}

#[test]
fn wilson_scan_order_invariance() {
    for n in [3, 4] {
        let w = WiredInstance::new(&drifted(), n).unwrap();
        let net = Network::from_wired(&w).unwrap();
        let trees = enumerate_wired_trees(&w, DEFAULT_CAP).unwrap();
        let a = tree_histogram(&net, &trees, 200_000, 5, ScanOrder::LowestFirst).unwrap();
        let b = tree_histogram(&net, &trees, 200_000, 6, ScanOrder::HighestFirst).unwrap();
        let (stat, df) = chi_square_two_sample(&a, &b);
        assert!(p_value(stat, df) > 0.001);
    }
}
