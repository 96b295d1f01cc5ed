//! Dual-grid difference operators acting directly on tensor-train cores.
//!
//! Each directional operator touches only the core of its own direction
//! (differenced slices) while the two transverse cores get consecutive-slice
//! averages, so ranks never change. Sums of directional results (the cell
//! Laplacian) and boundary injection are the only places where ranks grow,
//! and both are followed by a rounding step.
//!
//! Every operator here matches its dense counterpart in [`crate::fg_ops`]
//! through densification; out-of-stencil slices are zero-padded on both
//! sides so the arrays stay entry-for-entry comparable.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::field::Centering;
use crate::grid::{Axis, AxisKind, Grid3, GridAxis, InterpWeighting};
use crate::tt::TTTensor3;

fn check_vertex_sizes(u: &TTTensor3, g: &Grid3) -> Result<()> {
    if u.centering != Centering::Vertex || u.mode_sizes() != g.vertex_shape() {
        return Err(Error::ShapeMismatch(format!(
            "expected vertex TT of mode sizes {:?}, got {:?} ({:?})",
            g.vertex_shape(),
            u.mode_sizes(),
            u.centering
        )));
    }
    Ok(())
}

fn check_cell_sizes(u: &TTTensor3, g: &Grid3) -> Result<()> {
    if u.centering != Centering::Cell || u.mode_sizes() != g.cell_shape() {
        return Err(Error::ShapeMismatch(format!(
            "expected cell TT of mode sizes {:?}, got {:?} ({:?})",
            g.cell_shape(),
            u.mode_sizes(),
            u.centering
        )));
    }
    Ok(())
}

/// `(core[., i+1, .] - core[., i, .]) / steps[i]`; mode size shrinks by one.
fn forward_diff_core(core: &Array3<f64>, steps: &[f64]) -> Array3<f64> {
    let (rl, n, rr) = core.dim();
    let mut out = Array3::zeros((rl, n - 1, rr));
    for a in 0..rl {
        for i in 0..n - 1 {
            for b in 0..rr {
                out[[a, i, b]] = (core[[a, i + 1, b]] - core[[a, i, b]]) / steps[i];
            }
        }
    }
    out
}

/// `(core[., i, .] + core[., i+1, .]) / 2`; mode size shrinks by one.
fn pair_average_core(core: &Array3<f64>) -> Array3<f64> {
    let (rl, n, rr) = core.dim();
    let mut out = Array3::zeros((rl, n - 1, rr));
    for a in 0..rl {
        for i in 0..n - 1 {
            for b in 0..rr {
                out[[a, i, b]] = 0.5 * (core[[a, i, b]] + core[[a, i + 1, b]]);
            }
        }
    }
    out
}

/// Fused four-slice second-difference stencil for equispaced axes; the first
/// and last output slices stay zero.
fn second_fused_core(core: &Array3<f64>, ax: &GridAxis) -> Array3<f64> {
    let (rl, n, rr) = core.dim();
    let nc = n - 1;
    let mut out = Array3::zeros((rl, nc, rr));
    for ic in 1..nc.saturating_sub(1) {
        let h = ax.cell_steps[ic];
        let coeff = 1.0 / (2.0 * h * h);
        for a in 0..rl {
            for b in 0..rr {
                out[[a, ic, b]] = coeff
                    * (core[[a, ic + 2, b]] - core[[a, ic + 1, b]] - core[[a, ic, b]]
                        + core[[a, ic - 1, b]]);
            }
        }
    }
    out
}

/// Half-sum of one-sided difference quotients of a first-derivative core;
/// used on graded and remapped axes. The zero frames match the fused form.
fn second_halfsum_core(d1: &Array3<f64>, ax: &GridAxis) -> Array3<f64> {
    let (rl, nc, rr) = d1.dim();
    let mut out = Array3::zeros((rl, nc, rr));
    for ic in 1..nc.saturating_sub(1) {
        let dr = ax.deriv2_denom(ic + 1);
        let dl = ax.deriv2_denom(ic);
        for a in 0..rl {
            for b in 0..rr {
                let right = (d1[[a, ic + 1, b]] - d1[[a, ic, b]]) / dr;
                let left = (d1[[a, ic, b]] - d1[[a, ic - 1, b]]) / dl;
                out[[a, ic, b]] = 0.5 * right + 0.5 * left;
            }
        }
    }
    out
}

/// Two-cell weighted average of consecutive slices; mode size grows by one,
/// end slices stay zero.
fn interp_core(core: &Array3<f64>, ax: &GridAxis, weighting: InterpWeighting) -> Array3<f64> {
    let (rl, nc, rr) = core.dim();
    let nv = nc + 1;
    let mut out = Array3::zeros((rl, nv, rr));
    for iv in 1..nv - 1 {
        let (wl, wr) = ax.interp_weights(iv, weighting);
        for a in 0..rl {
            for b in 0..rr {
                out[[a, iv, b]] = wl * core[[a, iv - 1, b]] + wr * core[[a, iv, b]];
            }
        }
    }
    out
}

fn map_axis_core(
    u: &TTTensor3,
    target: Axis,
    f: impl Fn(&Array3<f64>, &GridAxis) -> Array3<f64>,
    g: &Grid3,
    other: impl Fn(&Array3<f64>) -> Array3<f64>,
) -> TTTensor3 {
    let pick = |axis: Axis, core: &Array3<f64>| {
        if axis == target {
            f(core, &g.axes[axis.index()])
        } else {
            other(core)
        }
    };
    TTTensor3 {
        core1: pick(Axis::X, &u.core1),
        core2: pick(Axis::Y, &u.core2),
        core3: pick(Axis::Z, &u.core3),
        centering: Centering::Cell,
    }
}

/// First discrete derivative along `axis`: differenced slices on the axis
/// core, consecutive averages on the other two. Ranks unchanged.
pub fn tt_deriv1_cell(u: &TTTensor3, g: &Grid3, axis: Axis) -> Result<TTTensor3> {
    check_vertex_sizes(u, g)?;
    Ok(map_axis_core(
        u,
        axis,
        |core, ax| {
            let steps: Vec<f64> = (0..ax.nc_total()).map(|ic| ax.deriv1_step(ic)).collect();
            forward_diff_core(core, &steps)
        },
        g,
        pair_average_core,
    ))
}

/// Second discrete derivative along `axis`. Ranks unchanged.
pub fn tt_deriv2_cell(u: &TTTensor3, g: &Grid3, axis: Axis) -> Result<TTTensor3> {
    check_vertex_sizes(u, g)?;
    if g.n_ghost() < 2 {
        return Err(Error::InvalidInput(
            "second derivatives need two ghost cell frames".into(),
        ));
    }
    Ok(map_axis_core(
        u,
        axis,
        |core, ax| match ax.kind {
            AxisKind::Regular => second_fused_core(core, ax),
            AxisKind::Variable | AxisKind::Remapped => {
                let steps: Vec<f64> = (0..ax.nc_total()).map(|ic| ax.deriv1_step(ic)).collect();
                let d1 = forward_diff_core(core, &steps);
                second_halfsum_core(&d1, ax)
            }
        },
        g,
        pair_average_core,
    ))
}

/// Cell Laplacian: sum of the three second derivatives, rounded at `eps`.
pub fn tt_laplacian_cell(u: &TTTensor3, g: &Grid3, eps: f64) -> Result<TTTensor3> {
    let xx = tt_deriv2_cell(u, g, Axis::X)?;
    let yy = tt_deriv2_cell(u, g, Axis::Y)?;
    let zz = tt_deriv2_cell(u, g, Axis::Z)?;
    Ok(xx.add(&yy)?.add(&zz)?.round(eps))
}

/// Cell-to-vertex transfer applied independently to each core; ranks
/// unchanged, no rounding.
pub fn tt_interp_vertex(u: &TTTensor3, g: &Grid3, weighting: InterpWeighting) -> Result<TTTensor3> {
    check_cell_sizes(u, g)?;
    let out = TTTensor3 {
        core1: interp_core(&u.core1, &g.axes[0], weighting),
        core2: interp_core(&u.core2, &g.axes[1], weighting),
        core3: interp_core(&u.core3, &g.axes[2], weighting),
        centering: Centering::Vertex,
    };
    Ok(out)
}

/// Vertex Laplacian: interpolation of the rounded cell Laplacian.
pub fn tt_laplacian_vertex(
    u: &TTTensor3,
    g: &Grid3,
    weighting: InterpWeighting,
    eps: f64,
) -> Result<TTTensor3> {
    tt_interp_vertex(&tt_laplacian_cell(u, g, eps)?, g, weighting)
}

/// Per-axis 0/1 indicators of the interior vertex layers. Their outer
/// product is the 3D interior indicator, so boundary zeroing is a rank-1
/// Hadamard product.
pub fn interior_mask(g: &Grid3) -> [Vec<f64>; 3] {
    [
        g.axes[0].interior_indicator(),
        g.axes[1].interior_indicator(),
        g.axes[2].interior_indicator(),
    ]
}

/// Zeroes all boundary-layer vertices; ranks unchanged.
pub fn tt_mask_interior(u: &TTTensor3, g: &Grid3) -> Result<TTTensor3> {
    check_vertex_sizes(u, g)?;
    let [mx, my, mz] = interior_mask(g);
    u.hadamard_rank_one(&mx, &my, &mz)
}

/// Dirichlet injection: keeps `u` at interior vertices and takes the values
/// of `gtt` (a full-grid decomposition of the boundary function) on every
/// boundary layer, then rounds. Pre-round ranks are bounded by
/// `ranks(u) + 2 * ranks(gtt)`.
pub fn tt_set_dirichlet(u: &TTTensor3, g: &Grid3, gtt: &TTTensor3, eps: f64) -> Result<TTTensor3> {
    check_vertex_sizes(u, g)?;
    check_vertex_sizes(gtt, g)?;
    let masked_u = tt_mask_interior(u, g)?;
    let masked_g = tt_mask_interior(gtt, g)?;
    let out = masked_u.add(gtt)?.add(&masked_g.scale(-1.0)?)?;
    Ok(out.round(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fg_ops;
    use crate::field::DenseField3;
    use crate::grid::GridAxis;
    use crate::tt::tests::random_tt;
    use approx::assert_relative_eq;

    fn grids(nc: usize) -> Vec<(&'static str, Grid3)> {
        let metric = |x: f64| 4.0 * (-2.0 * x).exp();
        vec![
            (
                "regular",
                Grid3::cube(GridAxis::regular(0.0, 1.0, nc, 2).unwrap()).unwrap(),
            ),
            (
                "variable",
                Grid3::cube(GridAxis::geometric(0.0, 1.0 / nc as f64, 1.125, nc, 2).unwrap())
                    .unwrap(),
            ),
            (
                "remapped",
                Grid3::cube(GridAxis::remapped(0.0, 1.0, nc, 2, &metric).unwrap()).unwrap(),
            ),
        ]
    }

    fn rel_diff(a: &DenseField3, b: &DenseField3) -> f64 {
        let denom = a.frobenius_norm().max(1e-300);
        a.data
            .iter()
            .zip(b.data.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
            / denom
    }

    #[test]
    fn deriv1_matches_dense_on_all_grid_kinds() {
        for (name, g) in grids(5) {
            let u = random_tt(17, g.vertex_shape(), (2, 3), Centering::Vertex);
            let dense = u.to_dense().unwrap();
            for axis in Axis::ALL {
                let tt = tt_deriv1_cell(&u, &g, axis).unwrap();
                assert_eq!(tt.ranks(), u.ranks(), "{name}: ranks must not change");
                let fg = fg_ops::deriv1_cell(&dense, &g, axis).unwrap();
                let d = rel_diff(&fg, &tt.to_dense().unwrap());
                assert!(d <= 1e-12, "{name} {axis:?}: rel diff {d}");
            }
        }
    }

    #[test]
    fn deriv1_rank_one_linear_field() {
        let g = grids(5).remove(0).1;
        let xv = g.axes[0].vertices.clone();
        let ones = vec![1.0; xv.len()];
        let u = TTTensor3::rank_one(&xv, &ones, &ones, Centering::Vertex).unwrap();
        let d = tt_deriv1_cell(&u, &g, Axis::X).unwrap();
        for i in 0..g.axes[0].nc_total() {
            assert_relative_eq!(d.core1[[0, i, 0]], 1.0, epsilon = 1e-12);
        }
        for j in 0..g.axes[1].nc_total() {
            assert_relative_eq!(d.core2[[0, j, 0]], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn deriv2_matches_dense_on_all_grid_kinds() {
        for (name, g) in grids(5) {
            let u = random_tt(23, g.vertex_shape(), (3, 2), Centering::Vertex);
            let dense = u.to_dense().unwrap();
            for axis in Axis::ALL {
                let tt = tt_deriv2_cell(&u, &g, axis).unwrap();
                assert_eq!(tt.ranks(), u.ranks(), "{name}: ranks must not change");
                let fg = fg_ops::deriv2_cell(&dense, &g, axis).unwrap();
                let d = rel_diff(&fg, &tt.to_dense().unwrap());
                assert!(d <= 1e-12, "{name} {axis:?}: rel diff {d}");
            }
        }
    }

    #[test]
    fn deriv2_rank_one_quadratic() {
        let g = grids(5).remove(0).1;
        let xv: Vec<f64> = g.axes[0].vertices.iter().map(|&x| x * x).collect();
        let ones = vec![1.0; g.axes[0].nv_total()];
        let u = TTTensor3::rank_one(&xv, &ones, &ones, Centering::Vertex).unwrap();
        let d = tt_deriv2_cell(&u, &g, Axis::X).unwrap();
        for ic in 1..g.axes[0].nc_total() - 1 {
            assert_relative_eq!(d.core1[[0, ic, 0]], 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn deriv2_equals_centered_first_derivative_difference() {
        let g = grids(6).remove(0).1;
        let u = random_tt(29, g.vertex_shape(), (2, 2), Centering::Vertex);
        let d1 = tt_deriv1_cell(&u, &g, Axis::X).unwrap().to_dense().unwrap();
        let d2 = tt_deriv2_cell(&u, &g, Axis::X).unwrap().to_dense().unwrap();
        let h = g.axes[0].cell_steps[0];
        let shape = g.cell_shape();
        let scale = u.norm();
        for i in 1..shape.0 - 1 {
            for j in 0..shape.1 {
                for k in 0..shape.2 {
                    let alt = (d1.data[[i + 1, j, k]] - d1.data[[i - 1, j, k]]) / (2.0 * h);
                    assert!(
                        (d2.data[[i, j, k]] - alt).abs() <= 1e-13 * scale.max(1.0),
                        "entry ({i},{j},{k})"
                    );
                }
            }
        }
    }

    #[test]
    fn laplacian_cell_matches_dense_within_eps() {
        let eps = 1e-10;
        for (name, g) in grids(5) {
            let u = random_tt(37, g.vertex_shape(), (2, 2), Centering::Vertex);
            let dense = u.to_dense().unwrap();
            let tt = tt_laplacian_cell(&u, &g, eps).unwrap();
            let fg = fg_ops::laplacian_cell(&dense, &g).unwrap();
            let d = rel_diff(&fg, &tt.to_dense().unwrap());
            assert!(d <= 10.0 * eps, "{name}: rel diff {d}");
            assert!(tt.max_rank() <= 3 * u.max_rank());
        }
    }

    #[test]
    fn laplacian_cell_of_harmonic_product_rounds_to_zero() {
        let g = grids(5).remove(0).1;
        let xv = g.axes[0].vertices.clone();
        let u = TTTensor3::rank_one(&xv, &xv, &xv, Centering::Vertex).unwrap();
        let lap = tt_laplacian_cell(&u, &g, 1e-12).unwrap();
        assert!(lap.norm() <= 1e-10 * u.norm());
    }

    #[test]
    fn interp_matches_dense_and_preserves_ranks() {
        for (name, g) in grids(5) {
            let mut u = random_tt(41, g.cell_shape(), (3, 2), Centering::Vertex);
            u.centering = Centering::Cell;
            let dense = u.to_dense().unwrap();
            for w in [InterpWeighting::AsPrinted, InterpWeighting::OppositeDistance] {
                let tt = tt_interp_vertex(&u, &g, w).unwrap();
                assert_eq!(tt.ranks(), u.ranks(), "{name}: ranks must not change");
                let fg = fg_ops::interp_vertex(&dense, &g, w).unwrap();
                let d = rel_diff(&fg, &tt.to_dense().unwrap());
                assert!(d <= 1e-12, "{name}: rel diff {d}");
            }
        }
    }

    #[test]
    fn laplacian_vertex_matches_dense() {
        let eps = 1e-11;
        for (name, g) in grids(5) {
            let u = random_tt(43, g.vertex_shape(), (2, 3), Centering::Vertex);
            let dense = u.to_dense().unwrap();
            let tt = tt_laplacian_vertex(&u, &g, InterpWeighting::AsPrinted, eps).unwrap();
            let fg = fg_ops::laplacian_vertex(&dense, &g, InterpWeighting::AsPrinted).unwrap();
            let d = rel_diff(&fg, &tt.to_dense().unwrap());
            assert!(d <= 100.0 * eps, "{name}: rel diff {d}");
        }
    }

    #[test]
    fn interior_mask_layers() {
        let g = Grid3::cube(GridAxis::regular(0.0, 1.0, 4, 1).unwrap()).unwrap();
        let [mx, my, mz] = interior_mask(&g);
        assert_eq!(mx, vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(mx, my);
        assert_eq!(my, mz);
        // Product equals the 3D interior indicator; complement sums to one.
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    let prod = mx[i] * my[j] * mz[k];
                    let expect = if g.is_boundary_vertex(i, j, k) { 0.0 } else { 1.0 };
                    assert_eq!(prod, expect);
                    assert_eq!(prod + (1.0 - prod), 1.0);
                }
            }
        }
    }

    #[test]
    fn set_dirichlet_matches_dense_and_bounds_ranks() {
        let eps = 1e-12;
        for (name, g) in grids(5) {
            let u = random_tt(47, g.vertex_shape(), (2, 2), Centering::Vertex);
            let gtt = random_tt(48, g.vertex_shape(), (2, 1), Centering::Vertex);
            let masked_u = tt_mask_interior(&u, &g).unwrap();
            let masked_g = tt_mask_interior(&gtt, &g).unwrap();
            let pre = masked_u.add(&gtt).unwrap().add(&masked_g.scale(-1.0).unwrap()).unwrap();
            let (p1, p2) = pre.ranks();
            let (u1, u2) = u.ranks();
            let (g1, g2) = gtt.ranks();
            assert!(p1 <= u1 + 2 * g1 && p2 <= u2 + 2 * g2);

            let out = tt_set_dirichlet(&u, &g, &gtt, eps).unwrap();
            let fg = fg_ops::set_boundary_from_field(
                &u.to_dense().unwrap(),
                &g,
                &gtt.to_dense().unwrap(),
            )
            .unwrap();
            let d = rel_diff(&fg, &out.to_dense().unwrap());
            assert!(d <= 100.0 * eps, "{name}: rel diff {d}");
        }
    }

    #[test]
    fn set_dirichlet_with_zero_boundary_data() {
        let g = grids(5).remove(0).1;
        let u = random_tt(53, g.vertex_shape(), (2, 2), Centering::Vertex);
        let zero = TTTensor3::zeros(
            g.vertex_shape().0,
            g.vertex_shape().1,
            g.vertex_shape().2,
            Centering::Vertex,
        );
        let out = tt_set_dirichlet(&u, &g, &zero, 1e-13).unwrap();
        let expect = fg_ops::mask_interior(&u.to_dense().unwrap(), &g).unwrap();
        let d = rel_diff(&expect, &out.to_dense().unwrap());
        assert!(d <= 1e-11);
    }
}
