//! Full-grid dual-grid difference operators.
//!
//! Vertex fields differentiate into cell fields; the cell Laplacian
//! interpolates back to vertices. All outputs keep the full ghost-extended
//! shape: entries whose stencil does not fit inside the grid are left at
//! zero, which keeps the dense and tensor-train paths entry-for-entry
//! comparable. Only interior vertices are ever consumed downstream.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::field::{Centering, DenseField3};
use crate::grid::{Axis, AxisKind, Grid3, GridAxis, InterpWeighting};

type Idx = (usize, usize, usize);

fn shift(v: Idx, d: Idx, times: usize) -> Idx {
    (v.0 + d.0 * times, v.1 + d.1 * times, v.2 + d.2 * times)
}

/// Unit offsets: the derivative direction and the two transverse directions.
fn directions(axis: Axis) -> (Idx, Idx, Idx) {
    match axis {
        Axis::X => ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
        Axis::Y => ((0, 1, 0), (1, 0, 0), (0, 0, 1)),
        Axis::Z => ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    }
}

fn axis_component(v: Idx, axis: Axis) -> usize {
    match axis {
        Axis::X => v.0,
        Axis::Y => v.1,
        Axis::Z => v.2,
    }
}

/// First discrete derivative of a vertex field, cell-centered: the 4-edge
/// average of forward differences along `axis` divided by the local step.
pub fn deriv1_cell(u: &DenseField3, g: &Grid3, axis: Axis) -> Result<DenseField3> {
    u.check_shape(g, Centering::Vertex)?;
    let shape = g.cell_shape();
    let (d, t1, t2) = directions(axis);
    let ax = &g.axes[axis.index()];
    let mut out = Array3::zeros(shape);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            for k in 0..shape.2 {
                let v = (i, j, k);
                let ic = axis_component(v, axis);
                let mut acc = 0.0;
                for n in 0..2 {
                    for p in 0..2 {
                        let base = shift(shift(v, t1, n), t2, p);
                        acc += u.data[shift(base, d, 1)] - u.data[base];
                    }
                }
                out[[i, j, k]] = acc / (4.0 * ax.deriv1_step(ic));
            }
        }
    }
    DenseField3::new(out, Centering::Cell)
}

/// Second discrete derivative of a vertex field, cell-centered. Regular axes
/// use the fused four-slice stencil; graded and remapped axes take the
/// half-sum of one-sided difference quotients of [`deriv1_cell`]. The first
/// and last cell frame along `axis` stay zero (the stencil leaves the grid).
pub fn deriv2_cell(u: &DenseField3, g: &Grid3, axis: Axis) -> Result<DenseField3> {
    u.check_shape(g, Centering::Vertex)?;
    if g.n_ghost() < 2 {
        return Err(Error::InvalidInput(
            "second derivatives need two ghost cell frames".into(),
        ));
    }
    let shape = g.cell_shape();
    let (d, t1, t2) = directions(axis);
    let ax = &g.axes[axis.index()];
    let n_axis = ax.nc_total();
    let mut out = Array3::zeros(shape);

    match ax.kind {
        AxisKind::Regular => {
            for i in 0..shape.0 {
                for j in 0..shape.1 {
                    for k in 0..shape.2 {
                        let v = (i, j, k);
                        let ic = axis_component(v, axis);
                        if ic == 0 || ic + 1 >= n_axis {
                            continue;
                        }
                        let h = ax.cell_steps[ic];
                        let back = (v.0 - d.0, v.1 - d.1, v.2 - d.2);
                        let mut acc = 0.0;
                        for n in 0..2 {
                            for p in 0..2 {
                                let base = shift(shift(back, t1, n), t2, p);
                                acc += u.data[shift(base, d, 3)] - u.data[shift(base, d, 2)]
                                    - u.data[shift(base, d, 1)]
                                    + u.data[base];
                            }
                        }
                        out[[i, j, k]] = acc / (8.0 * h * h);
                    }
                }
            }
        }
        AxisKind::Variable | AxisKind::Remapped => {
            let d1 = deriv1_cell(u, g, axis)?;
            for i in 0..shape.0 {
                for j in 0..shape.1 {
                    for k in 0..shape.2 {
                        let v = (i, j, k);
                        let ic = axis_component(v, axis);
                        if ic == 0 || ic + 1 >= n_axis {
                            continue;
                        }
                        let back = (v.0 - d.0, v.1 - d.1, v.2 - d.2);
                        let fwd = shift(v, d, 1);
                        let right = (d1.data[fwd] - d1.data[v]) / ax.deriv2_denom(ic + 1);
                        let left = (d1.data[v] - d1.data[back]) / ax.deriv2_denom(ic);
                        out[[i, j, k]] = 0.5 * right + 0.5 * left;
                    }
                }
            }
        }
    }
    DenseField3::new(out, Centering::Cell)
}

/// Mixed second derivative over an ordered axis pair, symmetrized so the
/// (a, b) and (b, a) results are the same array by construction.
pub fn mixed2_cell(u: &DenseField3, g: &Grid3, a: Axis, b: Axis) -> Result<DenseField3> {
    if a == b {
        return Err(Error::InvalidInput(
            "mixed derivative needs two distinct axes".into(),
        ));
    }
    u.check_shape(g, Centering::Vertex)?;
    if g.n_ghost() < 1 {
        return Err(Error::InvalidInput(
            "mixed derivatives need one ghost cell frame".into(),
        ));
    }
    let (a, b) = if a.index() < b.index() { (a, b) } else { (b, a) };
    let da = deriv1_cell(u, g, a)?;
    let db = deriv1_cell(u, g, b)?;
    let (dir_a, _, _) = directions(a);
    let (dir_b, _, _) = directions(b);
    let ax_a = &g.axes[a.index()];
    let ax_b = &g.axes[b.index()];
    let shape = g.cell_shape();
    let mut out = Array3::zeros(shape);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            for k in 0..shape.2 {
                let v = (i, j, k);
                let ca = axis_component(v, a);
                let cb = axis_component(v, b);
                if ca == 0 || ca + 1 >= ax_a.nc_total() || cb == 0 || cb + 1 >= ax_b.nc_total() {
                    continue;
                }
                // Centered difference of each first derivative along the
                // other direction, over the center-to-center distance.
                let span_b = ax_b.centers[cb + 1] - ax_b.centers[cb - 1];
                let span_a = ax_a.centers[ca + 1] - ax_a.centers[ca - 1];
                let fwd_b = shift(v, dir_b, 1);
                let back_b = (v.0 - dir_b.0, v.1 - dir_b.1, v.2 - dir_b.2);
                let fwd_a = shift(v, dir_a, 1);
                let back_a = (v.0 - dir_a.0, v.1 - dir_a.1, v.2 - dir_a.2);
                let term1 = (da.data[fwd_b] - da.data[back_b]) / span_b;
                let term2 = (db.data[fwd_a] - db.data[back_a]) / span_a;
                out[[i, j, k]] = 0.5 * (term1 + term2);
            }
        }
    }
    DenseField3::new(out, Centering::Cell)
}

/// Discrete cell Laplacian: sum of the three second derivatives.
pub fn laplacian_cell(u: &DenseField3, g: &Grid3) -> Result<DenseField3> {
    let xx = deriv2_cell(u, g, Axis::X)?;
    let yy = deriv2_cell(u, g, Axis::Y)?;
    let zz = deriv2_cell(u, g, Axis::Z)?;
    let mut data = xx.data;
    data.zip_mut_with(&yy.data, |a, &b| *a += b);
    data.zip_mut_with(&zz.data, |a, &b| *a += b);
    DenseField3::new(data, Centering::Cell)
}

/// Cell-to-vertex transfer: tensor product of the 1D two-cell weighted
/// averages. Vertices whose 8-cell neighborhood leaves the grid stay zero.
pub fn interp_vertex(
    u: &DenseField3,
    g: &Grid3,
    weighting: InterpWeighting,
) -> Result<DenseField3> {
    u.check_shape(g, Centering::Cell)?;
    let shape = g.vertex_shape();
    let weights = |ax: &GridAxis| -> Vec<(f64, f64)> {
        (0..ax.nv_total())
            .map(|iv| {
                if iv == 0 || iv + 1 >= ax.nv_total() {
                    (0.0, 0.0)
                } else {
                    ax.interp_weights(iv, weighting)
                }
            })
            .collect()
    };
    let wx = weights(&g.axes[0]);
    let wy = weights(&g.axes[1]);
    let wz = weights(&g.axes[2]);
    let mut out = Array3::zeros(shape);
    for i in 1..shape.0 - 1 {
        for j in 1..shape.1 - 1 {
            for k in 1..shape.2 - 1 {
                let mut acc = 0.0;
                for m in 0..2 {
                    for n in 0..2 {
                        for p in 0..2 {
                            let w = pick(wx[i], m) * pick(wy[j], n) * pick(wz[k], p);
                            acc += w * u.data[[i - 1 + m, j - 1 + n, k - 1 + p]];
                        }
                    }
                }
                out[[i, j, k]] = acc;
            }
        }
    }
    DenseField3::new(out, Centering::Vertex)
}

fn pick(w: (f64, f64), side: usize) -> f64 {
    if side == 0 {
        w.0
    } else {
        w.1
    }
}

/// Discrete vertex Laplacian: cell Laplacian interpolated back to vertices.
pub fn laplacian_vertex(
    u: &DenseField3,
    g: &Grid3,
    weighting: InterpWeighting,
) -> Result<DenseField3> {
    interp_vertex(&laplacian_cell(u, g)?, g, weighting)
}

/// Writes `gfun(x, y, z, t)` into every boundary-layer vertex; interior
/// values pass through untouched.
pub fn set_dirichlet(
    u: &DenseField3,
    g: &Grid3,
    gfun: impl Fn(f64, f64, f64, f64) -> f64,
    t: f64,
) -> Result<DenseField3> {
    u.check_shape(g, Centering::Vertex)?;
    let mut out = u.clone();
    let shape = g.vertex_shape();
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            for k in 0..shape.2 {
                if g.is_boundary_vertex(i, j, k) {
                    let (x, y, z) = g.vertex_coords(i, j, k);
                    out.data[[i, j, k]] = gfun(x, y, z, t);
                }
            }
        }
    }
    Ok(out)
}

/// Zeroes every boundary-layer vertex.
pub fn mask_interior(u: &DenseField3, g: &Grid3) -> Result<DenseField3> {
    u.check_shape(g, Centering::Vertex)?;
    let mut out = u.clone();
    let shape = g.vertex_shape();
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            for k in 0..shape.2 {
                if g.is_boundary_vertex(i, j, k) {
                    out.data[[i, j, k]] = 0.0;
                }
            }
        }
    }
    Ok(out)
}

/// Interior values from `u`, boundary layers from `bdata`.
pub fn set_boundary_from_field(
    u: &DenseField3,
    g: &Grid3,
    bdata: &DenseField3,
) -> Result<DenseField3> {
    u.check_shape(g, Centering::Vertex)?;
    bdata.check_shape(g, Centering::Vertex)?;
    let mut out = u.clone();
    let shape = g.vertex_shape();
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            for k in 0..shape.2 {
                if g.is_boundary_vertex(i, j, k) {
                    out.data[[i, j, k]] = bdata.data[[i, j, k]];
                }
            }
        }
    }
    Ok(out)
}
