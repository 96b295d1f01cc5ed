//! Univariate partitions with ghost frames and their tensor-product 3D grid.
//!
//! A [`GridAxis`] stores the full ghost-extended vertex sequence of one
//! coordinate direction together with the derived cell steps and cell
//! centers. Three axes form a [`Grid3`]. Vertices and cells share the same
//! 0-based numbering: cell `i` lies between vertices `i` and `i + 1`, so an
//! axis with `nc_total` cells has `nc_total + 1` vertices.
//!
//! Ghost bookkeeping: `n_ghost` cell frames are appended on each side of the
//! physical interval, which adds `n_ghost + 1` layers of boundary-valued
//! vertices per side (the physical boundary vertex itself carries Dirichlet
//! data). Interior vertices are the strictly inside ones.

use crate::error::{Error, Result};

/// How an axis was generated; decides which step/metric enters the operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    /// Constant step `h`.
    Regular,
    /// Geometrically varying steps `h_{i+1} = ratio * h_i`.
    Variable,
    /// Constant step on the physical interval; a univariate coordinate map
    /// enters the operators through its derivative sampled on the axis.
    Remapped,
}

/// One coordinate direction of the ghost-extended grid.
#[derive(Clone, Debug)]
pub struct GridAxis {
    pub kind: AxisKind,
    /// Strictly increasing, length `nc_total + 1`, ghost layers included.
    pub vertices: Vec<f64>,
    /// Ghost cell frames per side.
    pub n_ghost: usize,
    /// `vertices[i + 1] - vertices[i]`, length `nc_total`.
    pub cell_steps: Vec<f64>,
    /// `(vertices[i] + vertices[i + 1]) / 2`, length `nc_total`.
    pub centers: Vec<f64>,
    /// Map derivative at cell centers (remapped axes only).
    pub metric_at_centers: Option<Vec<f64>>,
    /// Map derivative at vertices (remapped axes only).
    pub metric_at_vertices: Option<Vec<f64>>,
}

impl GridAxis {
    fn from_vertices(
        kind: AxisKind,
        vertices: Vec<f64>,
        n_ghost: usize,
        metric: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("axis needs at least one cell".into()));
        }
        let mut cell_steps = Vec::with_capacity(vertices.len() - 1);
        let mut centers = Vec::with_capacity(vertices.len() - 1);
        for w in vertices.windows(2) {
            let step = w[1] - w[0];
            if !(step > 0.0) || !step.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "vertices must be strictly increasing (step {step})"
                )));
            }
            cell_steps.push(step);
            centers.push(0.5 * (w[0] + w[1]));
        }
        let (metric_at_centers, metric_at_vertices) = match metric {
            Some(m) => {
                let at_centers: Vec<f64> = centers.iter().map(|&x| m(x)).collect();
                let at_vertices: Vec<f64> = vertices.iter().map(|&x| m(x)).collect();
                for &v in at_centers.iter().chain(at_vertices.iter()) {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::SingularMap(format!(
                            "map derivative must be strictly positive, got {v}"
                        )));
                    }
                }
                (Some(at_centers), Some(at_vertices))
            }
            None => (None, None),
        };
        Ok(GridAxis {
            kind,
            vertices,
            n_ghost,
            cell_steps,
            centers,
            metric_at_centers,
            metric_at_vertices,
        })
    }

    /// Equispaced axis over `[a, b]` with `nc` physical cells; ghost cells
    /// continue the same step outward.
    pub fn regular(a: f64, b: f64, nc: usize, n_ghost: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput(format!(
                "regular axis needs a < b, got [{a}, {b}]"
            )));
        }
        if nc == 0 {
            return Err(Error::InvalidInput("regular axis needs nc >= 1".into()));
        }
        let h = (b - a) / nc as f64;
        let total = nc + 2 * n_ghost;
        let vertices = (0..=total)
            .map(|i| a + (i as f64 - n_ghost as f64) * h)
            .collect();
        Self::from_vertices(AxisKind::Regular, vertices, n_ghost, None)
    }

    /// Geometrically graded axis starting at `a`: physical cell `i` has step
    /// `h0 * ratio^i`; ghost cells continue the geometric law outward.
    pub fn geometric(a: f64, h0: f64, ratio: f64, nc: usize, n_ghost: usize) -> Result<Self> {
        if !(h0 > 0.0) || !(ratio > 0.0) {
            return Err(Error::InvalidInput(format!(
                "geometric axis needs h0 > 0 and ratio > 0, got h0 = {h0}, ratio = {ratio}"
            )));
        }
        if nc == 0 {
            return Err(Error::InvalidInput("geometric axis needs nc >= 1".into()));
        }
        let total = nc + 2 * n_ghost;
        // Cell `ic` (global index) has step h0 * ratio^(ic - n_ghost).
        let mut vertices = vec![0.0; total + 1];
        vertices[n_ghost] = a;
        for ic in n_ghost..total {
            let step = h0 * ratio.powi(ic as i32 - n_ghost as i32);
            vertices[ic + 1] = vertices[ic] + step;
        }
        for ic in (0..n_ghost).rev() {
            let step = h0 * ratio.powi(ic as i32 - n_ghost as i32);
            vertices[ic] = vertices[ic + 1] - step;
        }
        Self::from_vertices(AxisKind::Variable, vertices, n_ghost, None)
    }

    /// Equispaced axis over `[a, b]` carrying a coordinate-map derivative.
    /// The grid itself lives on the physical interval; `metric` is sampled at
    /// cell centers and vertices (ghosts included) and scales the difference
    /// quotients downstream.
    pub fn remapped(
        a: f64,
        b: f64,
        nc: usize,
        n_ghost: usize,
        metric: &dyn Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput(format!(
                "remapped axis needs a < b, got [{a}, {b}]"
            )));
        }
        if nc == 0 {
            return Err(Error::InvalidInput("remapped axis needs nc >= 1".into()));
        }
        let h = (b - a) / nc as f64;
        let total = nc + 2 * n_ghost;
        let vertices: Vec<f64> = (0..=total)
            .map(|i| a + (i as f64 - n_ghost as f64) * h)
            .collect();
        Self::from_vertices(AxisKind::Remapped, vertices, n_ghost, Some(metric))
    }

    /// Total number of cells, ghost frames included.
    pub fn nc_total(&self) -> usize {
        self.cell_steps.len()
    }

    /// Total number of vertices, ghost layers included.
    pub fn nv_total(&self) -> usize {
        self.vertices.len()
    }

    /// Number of physical cells.
    pub fn nc_physical(&self) -> usize {
        self.nc_total() - 2 * self.n_ghost
    }

    /// Vertex index range carrying boundary data: the first and last
    /// `n_ghost + 1` layers.
    pub fn is_boundary_vertex(&self, iv: usize) -> bool {
        iv <= self.n_ghost || iv + self.n_ghost + 1 >= self.nv_total()
    }

    /// Inclusive range of interior (evolved) vertex indices.
    pub fn interior_vertices(&self) -> std::ops::RangeInclusive<usize> {
        self.n_ghost + 1..=self.nv_total() - self.n_ghost - 2
    }

    /// Effective step of cell `ic` as seen by the first-derivative quotient:
    /// the cell step, times the map derivative at the center for remapped axes.
    pub fn deriv1_step(&self, ic: usize) -> f64 {
        match &self.metric_at_centers {
            Some(m) => m[ic] * self.cell_steps[ic],
            None => self.cell_steps[ic],
        }
    }

    /// Effective distance between the centers of cells `iv - 1` and `iv`,
    /// used by the half-sum second derivative. Valid for `1 <= iv <= nc_total - 1`.
    pub fn deriv2_denom(&self, iv: usize) -> f64 {
        let d = 0.5 * (self.cell_steps[iv - 1] + self.cell_steps[iv]);
        match &self.metric_at_vertices {
            Some(m) => m[iv] * d,
            None => d,
        }
    }

    /// Interpolation weights (left cell, right cell) at vertex `iv`, valid for
    /// `1 <= iv <= nc_total - 1`. `AsPrinted` weights each cell value by its
    /// own distance from the vertex; `OppositeDistance` swaps the two.
    pub fn interp_weights(&self, iv: usize, weighting: InterpWeighting) -> (f64, f64) {
        let dl = self.vertices[iv] - self.centers[iv - 1];
        let dr = self.centers[iv] - self.vertices[iv];
        let denom = dl + dr;
        match weighting {
            InterpWeighting::AsPrinted => (dl / denom, dr / denom),
            InterpWeighting::OppositeDistance => (dr / denom, dl / denom),
        }
    }

    /// 0/1 indicator of interior vertex layers.
    pub fn interior_indicator(&self) -> Vec<f64> {
        (0..self.nv_total())
            .map(|iv| if self.is_boundary_vertex(iv) { 0.0 } else { 1.0 })
            .collect()
    }

    /// Smallest physical cell step.
    pub fn min_physical_step(&self) -> f64 {
        let lo = self.n_ghost;
        let hi = self.nc_total() - self.n_ghost;
        self.cell_steps[lo..hi]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Weighting convention for the cell-to-vertex transfer on nonuniform axes.
/// On equispaced axes both conventions coincide with the arithmetic mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InterpWeighting {
    #[default]
    AsPrinted,
    OppositeDistance,
}

impl std::str::FromStr for InterpWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(InterpWeighting::AsPrinted),
            "opposite" => Ok(InterpWeighting::OppositeDistance),
            other => Err(Error::InvalidInput(format!(
                "unknown interpolation weighting '{other}'"
            ))),
        }
    }
}

/// Tensor product of three axes sharing the same ghost depth.
#[derive(Clone, Debug)]
pub struct Grid3 {
    pub axes: [GridAxis; 3],
}

impl Grid3 {
    pub fn new(x: GridAxis, y: GridAxis, z: GridAxis) -> Result<Self> {
        if x.n_ghost != y.n_ghost || y.n_ghost != z.n_ghost {
            return Err(Error::InvalidInput(
                "axes must share the same ghost depth".into(),
            ));
        }
        let g = Grid3 { axes: [x, y, z] };
        for ax in &g.axes {
            if ax.interior_vertices().is_empty() {
                return Err(Error::InvalidInput(
                    "axis has no interior vertices; increase nc".into(),
                ));
            }
        }
        Ok(g)
    }

    /// Cube of one axis, the common case in the studies.
    pub fn cube(axis: GridAxis) -> Result<Self> {
        Self::new(axis.clone(), axis.clone(), axis)
    }

    pub fn n_ghost(&self) -> usize {
        self.axes[0].n_ghost
    }

    pub fn vertex_shape(&self) -> (usize, usize, usize) {
        (
            self.axes[0].nv_total(),
            self.axes[1].nv_total(),
            self.axes[2].nv_total(),
        )
    }

    pub fn cell_shape(&self) -> (usize, usize, usize) {
        (
            self.axes[0].nc_total(),
            self.axes[1].nc_total(),
            self.axes[2].nc_total(),
        )
    }

    pub fn vertex_coords(&self, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
        (
            self.axes[0].vertices[i],
            self.axes[1].vertices[j],
            self.axes[2].vertices[k],
        )
    }

    pub fn is_boundary_vertex(&self, i: usize, j: usize, k: usize) -> bool {
        self.axes[0].is_boundary_vertex(i)
            || self.axes[1].is_boundary_vertex(j)
            || self.axes[2].is_boundary_vertex(k)
    }

    /// Characteristic mesh size: the smallest physical step over the axes.
    pub fn char_h(&self) -> f64 {
        self.axes
            .iter()
            .map(GridAxis::min_physical_step)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Spatial direction selector for the directional operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}
