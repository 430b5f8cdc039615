use std::sync::Arc;

use super::domain::{DomainSpec, Point};
use crate::error::{Error, Result};

/// Fewest interior nodes accepted along any axis.
pub const MIN_INTERIOR_PER_AXIS: usize = 8;

/// Uniform lattice over the bounding box of a domain.
///
/// Nodes are ordered lexicographically with the first axis outermost, so in
/// 2D the node `(i, j)` has index `i * ny + j`. Interval endpoints and
/// rectangle edges are boundary nodes; for the disc, every lattice node that
/// is not strictly inside the disc is a boundary node and carries a pinned
/// Dirichlet value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainSpec,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    coords: Vec<f64>,
    boundary: Vec<bool>,
    interior: Vec<usize>,
}

pub fn build_grid(domain: &DomainSpec, h: f64) -> Result<Grid> {
    domain.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::NonPositiveSpacing(h));
    }
    let dim = domain.dimension();
    let mut shape = Vec::with_capacity(dim);
    let mut spacing = Vec::with_capacity(dim);
    for (axis, half) in domain.half_extents().into_iter().enumerate() {
        let extent = 2.0 * half;
        let cells = extent / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::SpacingMismatch { axis, spacing: h, extent });
        }
        let cells = rounded as usize;
        let interior = cells.saturating_sub(1);
        if interior < MIN_INTERIOR_PER_AXIS {
            return Err(Error::TooCoarse { axis, interior, required: MIN_INTERIOR_PER_AXIS });
        }
        shape.push(cells + 1);
        spacing.push(extent / cells as f64);
    }

    let mut strides = vec![1; dim];
    for axis in (0..dim.saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * shape[axis + 1];
    }
    let len: usize = shape.iter().product();
    let mut coords = Vec::with_capacity(len * dim);
    let mut boundary = Vec::with_capacity(len);
    let mut multi = vec![0usize; dim];
    for idx in 0..len {
        let mut rem = idx;
        for axis in 0..dim {
            multi[axis] = rem / strides[axis];
            rem %= strides[axis];
        }
        let mut on_edge = false;
        for axis in 0..dim {
            let n = shape[axis];
            // Symmetric about the origin by construction: i - c is exact.
            let offset = multi[axis] as f64 - (n - 1) as f64 / 2.0;
            coords.push(offset * spacing[axis]);
            on_edge |= multi[axis] == 0 || multi[axis] == n - 1;
        }
        let x = &coords[idx * dim..(idx + 1) * dim];
        let cut = matches!(domain, DomainSpec::Disc { .. }) && !domain.contains_interior(x);
        boundary.push(on_edge || cut);
    }
    let interior: Vec<usize> = (0..len).filter(|&i| !boundary[i]).collect();

    if dim == 2 {
        // The disc cut can thin the lattice; demand enough interior nodes
        // along the central row and column as well.
        for axis in 0..2 {
            let other = 1 - axis;
            let mid = shape[other] / 2;
            let count = (0..shape[axis])
                .filter(|&k| {
                    let mut m = [0usize; 2];
                    m[axis] = k;
                    m[other] = mid;
                    !boundary[m[0] * strides[0] + m[1] * strides[1]]
                })
                .count();
            if count < MIN_INTERIOR_PER_AXIS {
                return Err(Error::TooCoarse { axis, interior: count, required: MIN_INTERIOR_PER_AXIS });
            }
        }
    }

    Ok(Grid { domain: domain.clone(), spacing, shape, strides, coords, boundary, interior })
}

impl Grid {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    /// Largest axis spacing.
    pub fn h(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn coord(&self, node: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[node * d..(node + 1) * d]
    }

    pub fn point(&self, node: usize) -> Point {
        Point::new(self.coord(node))
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Index of `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.shape[axis]
    }

    /// Lower and upper lattice neighbours of `node` along `axis`.
    pub fn axis_neighbors(&self, node: usize, axis: usize) -> Option<(usize, usize)> {
        let i = self.axis_index(node, axis);
        if i == 0 || i + 1 == self.shape[axis] {
            None
        } else {
            let s = self.strides[axis];
            Some((node - s, node + s))
        }
    }

    /// Lattice node closest to `x` (clamped into the bounding box).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        (0..self.dim())
            .map(|axis| {
                let n = self.shape[axis];
                let c = (n - 1) as f64 / 2.0;
                let k = (x[axis] / self.spacing[axis] + c).round().clamp(0.0, (n - 1) as f64);
                k as usize * self.strides[axis]
            })
            .sum()
    }

    /// Five-point (or three-point) Laplacian at an interior node.
    pub fn laplacian_at(&self, values: &[f64], node: usize) -> f64 {
        let mut acc = 0.0;
        for axis in 0..self.dim() {
            let s = self.strides[axis];
            let h = self.spacing[axis];
            acc += ((values[node - s] + values[node + s]) - 2.0 * values[node]) / (h * h);
        }
        acc
    }

    /// Sub-node location of a local maximum of `values` near `node`: a parabola
    /// through the node and its two neighbours on each axis, taking the vertex.
    pub fn refine_peak(&self, values: &[f64], node: usize) -> Point {
        let mut x = self.coord(node).to_vec();
        for (axis, xi) in x.iter_mut().enumerate() {
            if let Some((lo, hi)) = self.axis_neighbors(node, axis) {
                let (fm, f0, fp) = (values[lo], values[node], values[hi]);
                let curvature = fm - 2.0 * f0 + fp;
                if curvature < 0.0 && f0 >= fm && f0 >= fp {
                    let h = self.spacing[axis];
                    let offset = 0.5 * h * (fm - fp) / curvature;
                    *xi += offset.clamp(-0.5 * h, 0.5 * h);
                }
            }
        }
        Point(x)
    }
}

/// Values of a scalar function at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(GridField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        GridField { grid, values }
    }

    /// Largest value and the first node attaining it.
    pub fn max(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn boundary_is_zero(&self) -> bool {
        self.grid
            .boundary_mask()
            .iter()
            .zip(&self.values)
            .all(|(&b, &v)| !b || v == 0.0)
    }

    pub fn pin_boundary(&mut self) {
        for (v, &b) in self.values.iter_mut().zip(self.grid.boundary_mask()) {
            if b {
                *v = 0.0;
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> GridField {
        GridField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(h: f64) -> Result<Grid> {
        build_grid(&DomainSpec::interval(1.0).unwrap(), h)
    }

    #[test]
    fn five_node_interval_is_too_coarse() {
        assert!(matches!(interval(0.5), Err(Error::TooCoarse { interior: 3, .. })));
    }

    #[test]
    fn seventeen_node_interval() {
        let g = interval(0.125).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.interior().len(), 15);
        assert_eq!(g.coord(0), &[-1.0]);
        assert_eq!(g.coord(16), &[1.0]);
        assert!(g.is_boundary(0) && g.is_boundary(16) && !g.is_boundary(8));
    }

    #[test]
    fn square_lattice_counts() {
        // 9 x 9 lattice, 7 x 7 interior: one short of the per-axis minimum
        let square = DomainSpec::rectangle(1.0, 1.0).unwrap();
        assert_eq!(
            build_grid(&square, 0.25),
            Err(Error::TooCoarse { axis: 0, interior: 7, required: 8 })
        );
        let g = build_grid(&square, 0.2).unwrap();
        assert_eq!(g.len(), 121);
        assert_eq!(g.interior().len(), 81);
        // lexicographic: second axis fastest
        assert_eq!(g.coord(1)[0], -1.0);
        assert!((g.coord(1)[1] + 0.8).abs() < 1e-15);
        assert!((g.coord(11)[0] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert_eq!(interval(0.0), Err(Error::NonPositiveSpacing(0.0)));
        assert!(matches!(interval(0.3), Err(Error::SpacingMismatch { .. })));
    }

    #[test]
    fn disc_cut_marks_outside_nodes() {
        let g = build_grid(&DomainSpec::disc(1.0).unwrap(), 0.125).unwrap();
        for node in 0..g.len() {
            let x = g.coord(node);
            let inside = x[0].hypot(x[1]) < 1.0 - 1e-12;
            assert_eq!(g.is_boundary(node), !inside, "node {x:?}");
        }
    }

    #[test]
    fn coordinates_are_mirror_symmetric() {
        let g = interval(0.0125).unwrap();
        let n = g.len();
        for i in 0..n {
            assert_eq!(g.coord(i)[0], -g.coord(n - 1 - i)[0]);
        }
    }

    #[test]
    fn nearest_node_round_trips() {
        let g = build_grid(&DomainSpec::rectangle(1.0, 0.5).unwrap(), 0.0625).unwrap();
        for node in [0, 7, 100, g.len() - 1] {
            assert_eq!(g.nearest_node(g.coord(node)), node);
        }
    }

    #[test]
    fn refine_peak_recovers_parabola_vertex() {
        let g = interval(0.125).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|i| 1.0 - (g.coord(i)[0] - 0.04).powi(2))
            .collect();
        let p = g.refine_peak(&values, 8);
        assert!((p.0[0] - 0.04).abs() < 1e-12);
    }
}
