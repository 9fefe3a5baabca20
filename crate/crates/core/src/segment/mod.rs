//! Entropy-rate superpixels on the 4-connected pixel lattice.
//!
//! Pixels are vertices, 4-neighbours are joined by edges weighted with a
//! Gaussian kernel of their spectral angle, and edges are added greedily to
//! maximize the entropy rate of a random walk on the selected subgraph plus a
//! cluster-size balancing term, until `K` connected components remain.

mod ers;
mod graph;
mod labels;

pub use ers::{default_lambda, segment, ErsObjective, GreedyTrace};
pub use graph::{build_graph, edge_angles, median_angle, Edge, LatticeGraph, MIN_SIGMA};
pub use labels::{relabel_canonical, SuperpixelMap};

use crate::cube::HyperCube;
use crate::error::Result;

/// Segmentation parameters. `None` selects the data-adaptive default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub k: usize,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
}

impl SegmentParams {
    pub fn new(k: usize) -> Self {
        SegmentParams {
            k,
            lambda: None,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub map: SuperpixelMap,
    pub trace: GreedyTrace,
    pub sigma: f64,
    pub lambda: f64,
}

/// Builds the lattice graph and segments it, resolving default `sigma`
/// (median lattice angle) and `lambda` (balancing heuristic) when unset.
pub fn segment_cube(cube: &HyperCube, params: &SegmentParams) -> Result<Segmentation> {
    let sigma = match params.sigma {
        Some(s) => s,
        None => median_angle(&edge_angles(cube)?).max(MIN_SIGMA),
    };
    let graph = build_graph(cube, sigma)?;
    let lambda = match params.lambda {
        Some(l) => l,
        None => default_lambda(&graph),
    };
    let (map, trace) = segment(&graph, params.k, lambda)?;
    Ok(Segmentation {
        map,
        trace,
        sigma,
        lambda,
    })
}
