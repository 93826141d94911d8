use toridimer::kasteleyn::{char_poly, partition_function};
use toridimer::laplacian::{
    verify_block_identity, verify_block_identity_wired, verify_forman, verify_prop31, Connection,
};
use toridimer::lattice::{PeriodicGraph, TorusInstance, WiredInstance};
use toridimer::numeric::{rat, Cplx, Rat};
use toridimer::temperley::DEFAULT_CAP;

fn drifted() -> PeriodicGraph {
    PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(5, 1))
}

#[test]
fn forman_on_unit_and_small_tori() {
    for (g, n) in [(PeriodicGraph::uniform_grid(), 1), (PeriodicGraph::uniform_grid(), 2), (drifted(), 2)] {
        let t = TorusInstance::new(&g, n).unwrap();
        let c = Connection::from_paths(&t, &rat(3, 7), &rat(-5, 2)).unwrap();
        let r = verify_forman(t.primal(), &c, DEFAULT_CAP).unwrap();
        assert!(r.equal, "{r:?}");
    }
}

#[test]
fn forman_with_trivial_connection_is_zero() {
    let t = TorusInstance::new(&drifted(), 2).unwrap();
    let c = Connection::<Rat>::trivial(t.primal().edge_count());
    let r = verify_forman(t.primal(), &c, DEFAULT_CAP).unwrap();
    assert!(r.equal);
    assert_eq!(r.lhs, format!("{:?}", rat(0, 1)));
}

#[test]
fn char_poly_of_uniform_unit_torus() {
    let t = TorusInstance::new(&PeriodicGraph::uniform_grid(), 1).unwrap();
    let cp = char_poly(&t).unwrap();
    assert_eq!(cp.poly.to_string(), "-z^-1 - w^-1 + 4 - w - z");
    assert_eq!(partition_function(&t, DEFAULT_CAP).unwrap().value, rat(8, 1));
}

#[test]
fn prop31_on_drifted_tori() {
    let pts: Vec<(Cplx, Cplx)> = (0..16)
        .map(|k| {
            let a = 0.37 * k as f64 + 0.1;
            (Cplx::from_polar(1.0, a), Cplx::from_polar(1.0, 2.3 * a + 0.4))
        })
        .collect();
    for n in 1..3 {
        let t = TorusInstance::new(&drifted(), n).unwrap();
        let r = verify_prop31(&t, &pts, DEFAULT_CAP).unwrap();
        assert!(r.passed, "n={n}: {r:?}");
    }
}

#[test]
fn block_identity_torus_and_wired() {
    let t = TorusInstance::new(&drifted(), 2).unwrap();
    let r = verify_block_identity(&t, &rat(2, 3), &rat(7, 5)).unwrap();
    assert!(r.passed, "{r:?}");
    let r = verify_block_identity(&t, &rat(1, 1), &rat(1, 1)).unwrap();
    assert!(r.singular && r.singular_expected && r.passed, "{r:?}");
    for g in [PeriodicGraph::uniform_grid(), drifted()] {
        let t = TorusInstance::new(&g, 1).unwrap();
        let r = verify_block_identity(&t, &rat(3, 7), &rat(-5, 2)).unwrap();
        assert!(r.passed && r.inverse_residual == Some(0.0), "{r:?}");
    }
    for n in 3..5 {
        let w = WiredInstance::new(&drifted(), n).unwrap();
        let r = verify_block_identity_wired::<Rat>(&w).unwrap();
        assert!(r.passed && r.inverse_residual == Some(0.0), "{r:?}");
    }
}
