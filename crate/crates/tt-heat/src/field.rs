//! Dense (full-grid) 3D fields.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::grid::Grid3;

/// Which grid entity the mode indices of a field address.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centering {
    Vertex,
    Cell,
}

/// Full 3D array tagged as vertex- or cell-centered.
#[derive(Clone, Debug)]
pub struct DenseField3 {
    pub data: Array3<f64>,
    pub centering: Centering,
}

impl DenseField3 {
    pub fn new(data: Array3<f64>, centering: Centering) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "dense field contains non-finite entries".into(),
            ));
        }
        Ok(DenseField3 { data, centering })
    }

    pub fn zeros(shape: (usize, usize, usize), centering: Centering) -> Self {
        DenseField3 {
            data: Array3::zeros(shape),
            centering,
        }
    }

    /// Sample `f(x, y, z)` at every vertex of the ghost-extended grid.
    pub fn sample_vertices(g: &Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let (n1, n2, n3) = g.vertex_shape();
        let data = Array3::from_shape_fn((n1, n2, n3), |(i, j, k)| {
            let (x, y, z) = g.vertex_coords(i, j, k);
            f(x, y, z)
        });
        Self::new(data, Centering::Vertex)
    }

    /// Sample `f(x, y, z)` at every cell center of the ghost-extended grid.
    pub fn sample_cells(g: &Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let (n1, n2, n3) = g.cell_shape();
        let data = Array3::from_shape_fn((n1, n2, n3), |(i, j, k)| {
            f(
                g.axes[0].centers[i],
                g.axes[1].centers[j],
                g.axes[2].centers[k],
            )
        });
        Self::new(data, Centering::Cell)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        let s = self.data.shape();
        (s[0], s[1], s[2])
    }

    /// Checks the field against the grid's vertex or cell extents.
    pub fn check_shape(&self, g: &Grid3, centering: Centering) -> Result<()> {
        let expect = match centering {
            Centering::Vertex => g.vertex_shape(),
            Centering::Cell => g.cell_shape(),
        };
        if self.centering != centering || self.shape() != expect {
            return Err(Error::ShapeMismatch(format!(
                "expected {:?} field of shape {:?}, got {:?} of shape {:?}",
                centering,
                expect,
                self.centering,
                self.shape()
            )));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `a * self + b * other`, entrywise.
    pub fn lin_comb(&self, a: f64, other: &DenseField3, b: f64) -> Result<DenseField3> {
        if self.shape() != other.shape() || self.centering != other.centering {
            return Err(Error::ShapeMismatch(format!(
                "lin_comb of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut data = self.data.clone();
        data.zip_mut_with(&other.data, |u, &v| *u = a * *u + b * v);
        Ok(DenseField3 {
            data,
            centering: self.centering,
        })
    }

    pub fn inner(&self, other: &DenseField3) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "inner of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridAxis;

    #[test]
    fn sampling_shapes_follow_grid() {
        let g = Grid3::cube(GridAxis::regular(0.0, 1.0, 4, 2).unwrap()).unwrap();
        let v = DenseField3::sample_vertices(&g, |x, _, _| x).unwrap();
        assert_eq!(v.shape(), (9, 9, 9));
        let c = DenseField3::sample_cells(&g, |x, _, _| x).unwrap();
        assert_eq!(c.shape(), (8, 8, 8));
        assert!(v.check_shape(&g, Centering::Vertex).is_ok());
        assert!(v.check_shape(&g, Centering::Cell).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Array3::zeros((2, 2, 2));
        a[[0, 0, 0]] = f64::NAN;
        assert!(DenseField3::new(a, Centering::Vertex).is_err());
    }
}
