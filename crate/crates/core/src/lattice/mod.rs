//! Periodic graphs, torus quotients, wired boxes, duals, double graphs and reference paths.

pub mod double;
pub mod embedded;
pub mod paths;
pub mod periodic;
pub mod quotient;

pub use double::{build_double, build_double_wired, DoubleGraph, VertexKind};
pub use paths::{choose_dual_paths, DualPaths};
pub use periodic::{parse_graph_spec, to_graph_spec, PeriodicEdge, PeriodicGraph, PeriodicVertex};
pub use quotient::{build_dual, build_quotient, build_wired, build_wired_with_root_face, DualGraph, PrimalGraph, TorusGraph, WiredGraph};

use crate::error::Result;

/// A torus quotient with everything derived from it.
#[derive(Clone, Debug)]
pub struct TorusInstance {
    pub torus: TorusGraph,
    pub dual: DualGraph,
    pub double: DoubleGraph,
    pub paths: DualPaths,
}

impl TorusInstance {
    pub fn new(g: &PeriodicGraph, n: usize) -> Result<Self> {
        let torus = build_quotient(g, n)?;
        let dual = build_dual(&torus.primal)?;
        let double = build_double(&torus)?;
        let paths = choose_dual_paths(&torus, &dual, &double)?;
        Ok(TorusInstance { torus, dual, double, paths })
    }

    pub fn primal(&self) -> &PrimalGraph {
        &self.torus.primal
    }

    pub fn n(&self) -> usize {
        self.torus.n
    }
}

/// A wired box with its dual and punctured double graph.
#[derive(Clone, Debug)]
pub struct WiredInstance {
    pub wired: WiredGraph,
    pub dual: DualGraph,
    pub double: DoubleGraph,
}

impl WiredInstance {
    pub fn new(g: &PeriodicGraph, n: usize) -> Result<Self> {
        Self::with_root_face(g, n, None)
    }

    pub fn with_root_face(g: &PeriodicGraph, n: usize, root_face: Option<usize>) -> Result<Self> {
        let wired = build_wired_with_root_face(g, n, root_face)?;
        let dual = build_dual(&wired.primal)?;
        let double = build_double_wired(&wired)?;
        Ok(WiredInstance { wired, dual, double })
    }

    pub fn primal(&self) -> &PrimalGraph {
        &self.wired.primal
    }

    pub fn root(&self) -> usize {
        self.wired.root
    }
}
