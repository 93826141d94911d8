use toridimer::laurent::{newton_polygon, LaurentPoly};
use toridimer::lattice::PeriodicGraph;
use toridimer::numeric::rat;
use toridimer::phase::{
    amoeba_membership, fundamental_poly, phase_scan_graph, root_order_at_11, slope_estimate, Membership, Phase,
    ScanGrid, SlopeModel,
};
use toridimer::temperley::DEFAULT_CAP;

fn drifted(a: i64, b: i64, c: i64, d: i64) -> PeriodicGraph {
    PeriodicGraph::drifted_grid(rat(a, 1), rat(b, 1), rat(c, 1), rat(d, 1))
}

fn small_grid() -> ScanGrid {
    ScanGrid { torus_samples: 64, ..ScanGrid::square(3.0, 32) }
}

#[test]
fn root_order_family() {
    assert_eq!(root_order_at_11(&fundamental_poly(&PeriodicGraph::uniform_grid()).unwrap()).unwrap(), 2);
    for (a, b, c, d) in [(1, 2, 3, 4), (2, 1, 1, 1), (1, 1, 1, 5), (5, 3, 2, 7)] {
        assert_eq!(root_order_at_11(&fundamental_poly(&drifted(a, b, c, d)).unwrap()).unwrap(), 1);
    }
    for (a, b) in [(1, 2), (3, 5), (7, 1)] {
        assert_eq!(root_order_at_11(&fundamental_poly(&drifted(a, b, a, b)).unwrap()).unwrap(), 2);
    }
    let (gz, gw) = fundamental_poly(&drifted(1, 2, 3, 4)).unwrap().gradient_at_one();
    assert_eq!((gz, gw), (rat(2, 1), rat(2, 1)));
}

#[test]
fn root_order_rejects_nonvanishing_poly() {
    let p = LaurentPoly::from_terms([((0, 0), rat(4, 1)), ((1, 0), rat(-1, 1))]);
    assert!(root_order_at_11(&p).is_err());
}

#[test]
fn zero_field_slope_uniform_exact() {
    let m = SlopeModel::new(&PeriodicGraph::uniform_grid(), &[1, 2], DEFAULT_CAP).unwrap();
    for (_, s) in m.zero_field_exact() {
        assert_eq!(s, [rat(0, 1), rat(0, 1)]);
    }
    let e = m.estimate([0.0, 0.0]);
    assert_eq!(e.per_n.len(), 2);
    assert!(e.estimate.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn zero_field_slope_drifted_finite_size() {
    let m = SlopeModel::new(&drifted(1, 2, 3, 4), &[1, 2], DEFAULT_CAP).unwrap();
    let s = m.zero_field_exact();
    assert_eq!(s[0].1, [rat(1, 10), rat(1, 10)]);
    assert_eq!(s[1].1, [rat(18, 155), rat(14, 155)]);
}

#[test]
fn frozen_slope_saturates_at_component_order() {
    let g = drifted(1, 2, 3, 4);
    let p = fundamental_poly(&g).unwrap().to_f64();
    let m = SlopeModel::new(&g, &[1, 2], DEFAULT_CAP).unwrap();
    for b in [[12.0, 0.0], [-12.0, 0.0], [0.0, 12.0], [0.0, -12.0]] {
        let Membership::Outside { order } = amoeba_membership(&p, b[0], b[1], 64) else {
            panic!("{b:?} should be outside the amoeba");
        };
        let e = m.estimate(b);
        for (_, s) in &e.per_n {
            assert!((s[0] + order[0] as f64).abs() < 1e-3 && (s[1] + order[1] as f64).abs() < 1e-3, "{b:?}: {s:?} vs {order:?}");
        }
    }
}

#[test]
fn uniform_liquid_slope_nonzero() {
    let e = slope_estimate(&PeriodicGraph::uniform_grid(), [0.3, 0.0], &[1, 2], DEFAULT_CAP).unwrap();
    assert!(e.estimate[0].abs() > 1e-3);
    assert!(e.error_proxy.is_some());
}

#[test]
fn membership_examples() {
    let u = fundamental_poly(&PeriodicGraph::uniform_grid()).unwrap().to_f64();
    assert_eq!(amoeba_membership(&u, 0.0, 0.0, 256), Membership::Inside);
    let Membership::Outside { order } = amoeba_membership(&u, 10.0, 0.0, 256) else { panic!() };
    let newton = newton_polygon(&u).unwrap();
    assert!(newton.vertices.contains(&(order[0], order[1])));
    let d = fundamental_poly(&drifted(1, 2, 3, 4)).unwrap().to_f64();
    assert_eq!(amoeba_membership(&d, 0.0, 0.0, 256), Membership::Inside);
    assert_eq!(amoeba_membership(&d, 0.35, 0.55, 256), Membership::Outside { order: [0, 0] });
}

#[test]
fn drifted_scan_has_one_gaseous_component() {
    let s = phase_scan_graph(&drifted(1, 2, 3, 4), small_grid(), None).unwrap();
    let bounded = s.bounded_components();
    assert_eq!(bounded.len(), 1);
    assert_eq!(bounded[0].order, [0, 0]);
    assert!(s.near_component(bounded[0].id, [0.0, 0.0]));
    assert!(s.points.iter().any(|p| p.phase == Phase::Gaseous));
    for c in &s.components {
        assert!(c.constant_slope);
        assert_eq!(c.bounded, !c.newton_vertex);
    }
    for v in s.component_slopes().values() {
        assert_eq!(v.len(), 1);
    }
}

#[test]
fn symmetric_scan_has_no_gaseous_component() {
    for g in [drifted(1, 2, 1, 2), PeriodicGraph::uniform_grid()] {
        let s = phase_scan_graph(&g, small_grid(), None).unwrap();
        assert!(s.bounded_components().is_empty());
        assert!(s.points.iter().all(|p| p.phase != Phase::Gaseous));
    }
}

#[test]
fn component_orders_lie_in_newton_polygon() {
    let g = drifted(5, 3, 2, 7);
    let p = fundamental_poly(&g).unwrap();
    let newton = newton_polygon(&p).unwrap();
    let s = phase_scan_graph(&g, small_grid(), None).unwrap();
    for c in &s.components {
        assert!(newton.contains((c.order[0], c.order[1])));
    }
}

#[test]
fn scan_csv_is_deterministic() {
    let g = drifted(1, 2, 3, 4);
    let grid = ScanGrid { torus_samples: 32, ..ScanGrid::square(2.0, 12) };
    let a = phase_scan_graph(&g, grid, None).unwrap().to_csv();
    let b = phase_scan_graph(&g, grid, None).unwrap().to_csv();
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), "Bx,By,phase,slope_x,slope_y,min_absP,component_id");
    assert_eq!(a.lines().count(), 1 + 12 * 12);
}

#[test]
fn plot_data_has_boundary() {
    let s = phase_scan_graph(&drifted(1, 2, 3, 4), small_grid(), None).unwrap();
    let v = s.plot_data();
    let paths = v["amoeba_boundary"].as_array().unwrap();
    assert!(!paths.is_empty());
    assert!(paths[0].as_str().unwrap().starts_with("M "));
}

#[test]
fn finite_slopes_attached_when_model_given() {
    let g = drifted(1, 2, 3, 4);
    let m = SlopeModel::new(&g, &[1], DEFAULT_CAP).unwrap();
    let grid = ScanGrid { torus_samples: 32, ..ScanGrid::square(2.0, 6) };
    let s = phase_scan_graph(&g, grid, Some(&m)).unwrap();
    assert!(s.points.iter().all(|p| p.finite_slope.is_some()));
}
