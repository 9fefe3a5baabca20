use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::spectral::angle_from_products;

/// Floor for the data-adaptive kernel width; piecewise-constant images have a
/// median lattice angle of zero.
pub const MIN_SIGMA: f64 = 1e-3;

/// Undirected edge between two row-major pixel indices, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
}

/// 4-connected pixel lattice with one weight per edge.
///
/// Edges are ordered by `(a, b)`: for each pixel in row-major order, its right
/// neighbour edge then its lower neighbour edge. The edge index doubles as the
/// deterministic tie-break during greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGraph {
    height: usize,
    width: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
}

impl LatticeGraph {
    pub fn lattice_edges(height: usize, width: usize) -> Vec<Edge> {
        let mut edges = Vec::with_capacity(Self::edge_count(height, width));
        for row in 0..height {
            for col in 0..width {
                let p = (row * width + col) as u32;
                if col + 1 < width {
                    edges.push(Edge { a: p, b: p + 1 });
                }
                if row + 1 < height {
                    edges.push(Edge {
                        a: p,
                        b: p + width as u32,
                    });
                }
            }
        }
        edges
    }

    pub fn edge_count(height: usize, width: usize) -> usize {
        height * width.saturating_sub(1) + width * height.saturating_sub(1)
    }

    /// Graph with caller-supplied weights in lattice edge order.
    pub fn from_weights(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("lattice must have at least one pixel".into()));
        }
        if height * width > u32::MAX as usize {
            return Err(Error::InvalidParameter("lattice too large".into()));
        }
        let edges = Self::lattice_edges(height, width);
        if weights.len() != edges.len() {
            return Err(Error::InvalidParameter(format!(
                "{height}x{width} lattice has {} edges, got {} weights",
                edges.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "edge weight {w} is not finite and >= 0"
            )));
        }
        Ok(LatticeGraph {
            height,
            width,
            edges,
            weights,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn vertex_count(&self) -> usize {
        self.height * self.width
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Spectral angle across every lattice edge, in edge order.
pub fn edge_angles(cube: &HyperCube) -> Result<Vec<f64>> {
    let norms = squared_norms(cube)?;
    Ok(LatticeGraph::lattice_edges(cube.height(), cube.width())
        .iter()
        .map(|e| {
            let (a, b) = (e.a as usize, e.b as usize);
            let dot: f64 = cube
                .spectrum_at(a)
                .iter()
                .zip(cube.spectrum_at(b))
                .map(|(x, y)| x * y)
                .sum();
            angle_from_products(dot, norms[a], norms[b])
        })
        .collect())
}

fn squared_norms(cube: &HyperCube) -> Result<Vec<f64>> {
    cube.spectra()
        .enumerate()
        .map(|(i, s)| {
            let nn: f64 = s.iter().map(|v| v * v).sum();
            if nn == 0.0 {
                Err(Error::ZeroSpectrum {
                    row: i / cube.width(),
                    col: i % cube.width(),
                })
            } else {
                Ok(nn)
            }
        })
        .collect()
}

/// Median of the values (mean of the two middle values for even counts); 0 when empty.
pub fn median_angle(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let mut v = angles.to_vec();
    let mid = v.len() / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if angles.len() % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Lattice graph with weights `exp(-θ² / (2σ²))`, θ the spectral angle between neighbours.
pub fn build_graph(cube: &HyperCube, sigma: f64) -> Result<LatticeGraph> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    let denom = 2.0 * sigma * sigma;
    let weights = edge_angles(cube)?
        .into_iter()
        .map(|theta| (-theta * theta / denom).exp())
        .collect();
    LatticeGraph::from_weights(cube.height(), cube.width(), weights)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    #[test]
    fn edge_count_and_order() {
        let edges = LatticeGraph::lattice_edges(2, 3);
        assert_eq!(edges.len(), LatticeGraph::edge_count(2, 3));
        assert_eq!(edges.len(), 2 * 2 + 3);
        let pairs: Vec<(u32, u32)> = edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]);
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(LatticeGraph::edge_count(1, 1), 0);
    }

    #[test]
    fn constant_cube_has_unit_weights() {
        let cube = HyperCube::new(3, 3, vec![1.0, 2.0, 3.0], [0.2, 0.5, 0.1].repeat(9)).unwrap();
        let g = build_graph(&cube, 0.1).unwrap();
        assert!(g.weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn orthogonal_pair_weight() {
        let cube = HyperCube::new(1, 2, vec![1.0, 2.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let g = build_graph(&cube, FRAC_PI_2).unwrap();
        assert!((g.weights()[0] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g.weights()[0] - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn scaling_a_pixel_keeps_its_weights() {
        let base = |scale: f64| {
            HyperCube::from_fn(2, 2, vec![1.0, 2.0, 3.0], |r, c| {
                let s = if (r, c) == (0, 1) { scale } else { 1.0 };
                vec![s * (0.1 + r as f64), s * 0.3, s * (0.2 + c as f64 * 0.5)]
            })
            .unwrap()
        };
        let a = build_graph(&base(1.0), 0.2).unwrap();
        let b = build_graph(&base(3.0), 0.2).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spectrum_and_bad_sigma_are_rejected() {
        let cube = HyperCube::new(1, 2, vec![1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            build_graph(&cube, 0.1),
            Err(Error::ZeroSpectrum { row: 0, col: 0 })
        ));
        let ok = HyperCube::new(1, 2, vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(build_graph(&ok, 0.0).is_err());
        assert!(build_graph(&ok, f64::NAN).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median_angle(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_angle(&[0.0, 0.0, 1.0, 1.0]), 0.5);
        assert_eq!(median_angle(&[]), 0.0);
    }
}
