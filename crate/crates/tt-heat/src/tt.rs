//! Three-dimensional tensor-train representation and its algebra.
//!
//! A grid function `A` of shape `(n1, n2, n3)` is stored as three cores
//! `G1: (1, n1, r1)`, `G2: (r1, n2, r2)`, `G3: (r2, n3, 1)` with
//!
//! ```text
//! A(i, j, k) = sum_{a1, a2} G1(0, i, a1) * G2(a1, j, a2) * G3(a2, k, 0).
//! ```
//!
//! `(r1, r2)` are the TT ranks; storage is `n1*r1 + r1*n2*r2 + r2*n3`
//! entries instead of `n1*n2*n3`. Construction from a dense tensor runs a
//! two-step truncated-SVD sweep over the unfoldings; re-compression after
//! arithmetic runs an orthogonalization sweep followed by a truncated-SVD
//! sweep. Both distribute a relative Frobenius budget `eps` as
//! `eps * |A| / sqrt(2)` per internal separation, which keeps the total
//! error at or below `eps * |A|`.

use nalgebra::DMatrix;
use ndarray::Array3;

use crate::error::{Error, Result};
use crate::field::{Centering, DenseField3};

/// Hard cap for densification, in entries.
pub const MAX_DENSE_ENTRIES: usize = 1 << 27;

/// Tensor-train representation of a 3D grid function.
#[derive(Clone, Debug)]
pub struct TTTensor3 {
    /// Shape `(1, n1, r1)`.
    pub core1: Array3<f64>,
    /// Shape `(r1, n2, r2)`.
    pub core2: Array3<f64>,
    /// Shape `(r2, n3, 1)`.
    pub core3: Array3<f64>,
    pub centering: Centering,
}

/// Diagnostics from a rank-capped truncation.
#[derive(Clone, Copy, Debug, Default)]
pub struct TruncationInfo {
    /// Whether the hard rank cap removed singular values that the tolerance
    /// alone would have kept.
    pub cap_active: bool,
}

impl TTTensor3 {
    /// Canonical zero tensor: ranks `(1, 1)`, all cores zero.
    pub fn zeros(n1: usize, n2: usize, n3: usize, centering: Centering) -> Self {
        TTTensor3 {
            core1: Array3::zeros((1, n1, 1)),
            core2: Array3::zeros((1, n2, 1)),
            core3: Array3::zeros((1, n3, 1)),
            centering,
        }
    }

    /// Separable (rank-1) tensor with entries `a(i) * b(j) * c(k)`.
    pub fn rank_one(a: &[f64], b: &[f64], c: &[f64], centering: Centering) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if v.is_empty() {
                return Err(Error::InvalidInput(format!("factor {name} is empty")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "factor {name} has non-finite entries"
                )));
            }
        }
        let fill = |v: &[f64]| {
            Array3::from_shape_vec((1, v.len(), 1), v.to_vec()).expect("rank-1 core shape")
        };
        let mut core = fill(a);
        let t = TTTensor3 {
            core1: std::mem::replace(&mut core, fill(b)),
            core2: std::mem::replace(&mut core, fill(c)),
            core3: core,
            centering,
        };
        Ok(t)
    }

    pub fn mode_sizes(&self) -> (usize, usize, usize) {
        (
            self.core1.dim().1,
            self.core2.dim().1,
            self.core3.dim().1,
        )
    }

    /// Internal ranks `(r1, r2)`.
    pub fn ranks(&self) -> (usize, usize) {
        (self.core1.dim().2, self.core2.dim().2)
    }

    pub fn max_rank(&self) -> usize {
        let (r1, r2) = self.ranks();
        r1.max(r2)
    }

    /// Total stored entries across the three cores.
    pub fn storage_entries(&self) -> usize {
        self.core1.len() + self.core2.len() + self.core3.len()
    }

    pub fn all_finite(&self) -> bool {
        self.core1.iter().all(|v| v.is_finite())
            && self.core2.iter().all(|v| v.is_finite())
            && self.core3.iter().all(|v| v.is_finite())
    }

    /// Single-entry evaluation by the chain contraction; cost `O(r^2)`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        let (n1, n2, n3) = self.mode_sizes();
        if i >= n1 || j >= n2 || k >= n3 {
            return Err(Error::IndexOutOfBounds {
                i,
                j,
                k,
                n1,
                n2,
                n3,
            });
        }
        let (r1, r2) = self.ranks();
        // row = G1(0, i, :)
        let mut mid = vec![0.0; r2];
        for a2 in 0..r2 {
            let mut s = 0.0;
            for a1 in 0..r1 {
                s += self.core1[[0, i, a1]] * self.core2[[a1, j, a2]];
            }
            mid[a2] = s;
        }
        let mut out = 0.0;
        for a2 in 0..r2 {
            out += mid[a2] * self.core3[[a2, k, 0]];
        }
        Ok(out)
    }

    /// Densify the full tensor. Errors when the result would exceed
    /// [`MAX_DENSE_ENTRIES`].
    pub fn to_dense(&self) -> Result<DenseField3> {
        let (n1, n2, n3) = self.mode_sizes();
        let entries = n1
            .checked_mul(n2)
            .and_then(|p| p.checked_mul(n3))
            .ok_or_else(|| Error::ResourceLimit("dense size overflows usize".into()))?;
        if entries > MAX_DENSE_ENTRIES {
            return Err(Error::ResourceLimit(format!(
                "densification of {entries} entries exceeds the cap of {MAX_DENSE_ENTRIES}"
            )));
        }
        let (r1, r2) = self.ranks();
        // front(i, j, a2) = sum_a1 G1(0, i, a1) G2(a1, j, a2)
        let mut front = Array3::<f64>::zeros((n1, n2, r2));
        for i in 0..n1 {
            for j in 0..n2 {
                for a2 in 0..r2 {
                    let mut s = 0.0;
                    for a1 in 0..r1 {
                        s += self.core1[[0, i, a1]] * self.core2[[a1, j, a2]];
                    }
                    front[[i, j, a2]] = s;
                }
            }
        }
        let mut data = Array3::<f64>::zeros((n1, n2, n3));
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let mut s = 0.0;
                    for a2 in 0..r2 {
                        s += front[[i, j, a2]] * self.core3[[a2, k, 0]];
                    }
                    data[[i, j, k]] = s;
                }
            }
        }
        DenseField3::new(data, self.centering)
    }

    /// TT construction from a dense tensor by the two-step truncated-SVD
    /// sweep. The reconstruction error is at most `eps * |T|` in the
    /// Frobenius norm; `max_rank` additionally caps both internal ranks.
    pub fn from_dense(t: &DenseField3, eps: f64, max_rank: Option<usize>) -> Result<Self> {
        Ok(Self::from_dense_capped(t, eps, max_rank)?.0)
    }

    /// As [`from_dense`](Self::from_dense), also reporting whether the rank
    /// cap truncated below the tolerance-selected ranks.
    pub fn from_dense_capped(
        t: &DenseField3,
        eps: f64,
        max_rank: Option<usize>,
    ) -> Result<(Self, TruncationInfo)> {
        if eps < 0.0 || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
        }
        if !t.all_finite() {
            return Err(Error::InvalidInput(
                "dense input contains non-finite entries".into(),
            ));
        }
        let (n1, n2, n3) = t.shape();
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidInput("dense input is empty".into()));
        }
        let norm = t.frobenius_norm();
        if norm == 0.0 {
            return Ok((
                Self::zeros(n1, n2, n3, t.centering),
                TruncationInfo::default(),
            ));
        }
        // Budget per internal separation (two separations for d = 3).
        let delta = eps * norm / std::f64::consts::SQRT_2;
        let mut info = TruncationInfo::default();

        // First unfolding: rows i, columns (j, k).
        let m1 = DMatrix::from_fn(n1, n2 * n3, |r, c| t.data[[r, c / n3, c % n3]]);
        let (u1, rest1, r1) = truncated_svd(m1, delta, max_rank, &mut info)?;
        let mut core1 = Array3::zeros((1, n1, r1));
        for i in 0..n1 {
            for a in 0..r1 {
                core1[[0, i, a]] = u1[(i, a)];
            }
        }

        // Second unfolding of the carry: rows (a1, j), columns k.
        let m2 = DMatrix::from_fn(r1 * n2, n3, |r, c| rest1[(r / n2, (r % n2) * n3 + c)]);
        let (u2, rest2, r2) = truncated_svd(m2, delta, max_rank, &mut info)?;
        let mut core2 = Array3::zeros((r1, n2, r2));
        for a1 in 0..r1 {
            for j in 0..n2 {
                for a2 in 0..r2 {
                    core2[[a1, j, a2]] = u2[(a1 * n2 + j, a2)];
                }
            }
        }
        let mut core3 = Array3::zeros((r2, n3, 1));
        for a2 in 0..r2 {
            for k in 0..n3 {
                core3[[a2, k, 0]] = rest2[(a2, k)];
            }
        }

        Ok((
            TTTensor3 {
                core1,
                core2,
                core3,
                centering: t.centering,
            },
            info,
        ))
    }

    /// Exact sum; output ranks are the sums of the input ranks.
    pub fn add(&self, other: &TTTensor3) -> Result<TTTensor3> {
        if self.mode_sizes() != other.mode_sizes() || self.centering != other.centering {
            return Err(Error::ShapeMismatch(format!(
                "add of {:?} and {:?}",
                self.mode_sizes(),
                other.mode_sizes()
            )));
        }
        let (n1, n2, n3) = self.mode_sizes();
        let (a1, a2) = self.ranks();
        let (b1, b2) = other.ranks();

        // First cores concatenate horizontally, last cores vertically, middle
        // cores form a block diagonal.
        let mut core1 = Array3::zeros((1, n1, a1 + b1));
        for i in 0..n1 {
            for a in 0..a1 {
                core1[[0, i, a]] = self.core1[[0, i, a]];
            }
            for b in 0..b1 {
                core1[[0, i, a1 + b]] = other.core1[[0, i, b]];
            }
        }
        let mut core2 = Array3::zeros((a1 + b1, n2, a2 + b2));
        for j in 0..n2 {
            for l in 0..a1 {
                for r in 0..a2 {
                    core2[[l, j, r]] = self.core2[[l, j, r]];
                }
            }
            for l in 0..b1 {
                for r in 0..b2 {
                    core2[[a1 + l, j, a2 + r]] = other.core2[[l, j, r]];
                }
            }
        }
        let mut core3 = Array3::zeros((a2 + b2, n3, 1));
        for k in 0..n3 {
            for a in 0..a2 {
                core3[[a, k, 0]] = self.core3[[a, k, 0]];
            }
            for b in 0..b2 {
                core3[[a2 + b, k, 0]] = other.core3[[b, k, 0]];
            }
        }
        Ok(TTTensor3 {
            core1,
            core2,
            core3,
            centering: self.centering,
        })
    }

    /// Scalar multiple; scales exactly one core so the ranks do not change.
    pub fn scale(&self, s: f64) -> Result<TTTensor3> {
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("scale factor {s} not finite")));
        }
        let mut out = self.clone();
        out.core1.mapv_inplace(|v| s * v);
        Ok(out)
    }

    /// Entrywise product with the rank-1 tensor `vx ⊗ vy ⊗ vz`; each core
    /// slice is scaled by the matching factor entry, so ranks are unchanged.
    pub fn hadamard_rank_one(&self, vx: &[f64], vy: &[f64], vz: &[f64]) -> Result<TTTensor3> {
        let (n1, n2, n3) = self.mode_sizes();
        if vx.len() != n1 || vy.len() != n2 || vz.len() != n3 {
            return Err(Error::ShapeMismatch(format!(
                "hadamard factors ({}, {}, {}) vs mode sizes ({n1}, {n2}, {n3})",
                vx.len(),
                vy.len(),
                vz.len()
            )));
        }
        let mut out = self.clone();
        for i in 0..n1 {
            out.core1
                .index_axis_mut(ndarray::Axis(1), i)
                .mapv_inplace(|v| v * vx[i]);
        }
        for j in 0..n2 {
            out.core2
                .index_axis_mut(ndarray::Axis(1), j)
                .mapv_inplace(|v| v * vy[j]);
        }
        for k in 0..n3 {
            out.core3
                .index_axis_mut(ndarray::Axis(1), k)
                .mapv_inplace(|v| v * vz[k]);
        }
        Ok(out)
    }

    /// Frobenius inner product by sequential core contraction; no
    /// densification.
    pub fn inner(&self, other: &TTTensor3) -> Result<f64> {
        if self.mode_sizes() != other.mode_sizes() {
            return Err(Error::ShapeMismatch(format!(
                "inner of {:?} and {:?}",
                self.mode_sizes(),
                other.mode_sizes()
            )));
        }
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for (ca, cb) in [
            (&self.core1, &other.core1),
            (&self.core2, &other.core2),
            (&self.core3, &other.core3),
        ] {
            let (ral, n, rar) = ca.dim();
            let (rbl, _, rbr) = cb.dim();
            let mut next = DMatrix::zeros(rar, rbr);
            for idx in 0..n {
                let ga = DMatrix::from_fn(ral, rar, |r, c| ca[[r, idx, c]]);
                let gb = DMatrix::from_fn(rbl, rbr, |r, c| cb[[r, idx, c]]);
                next += ga.transpose() * &m * gb;
            }
            m = next;
        }
        Ok(m[(0, 0)])
    }

    /// Frobenius norm, `sqrt(inner(self, self))`.
    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same shape").max(0.0).sqrt()
    }

    /// Rank re-compression within `eps * |self|` in the Frobenius norm.
    /// Never increases ranks; idempotent at fixed `eps` up to round-off.
    pub fn round(&self, eps: f64) -> TTTensor3 {
        self.round_capped(eps, None).0
    }

    /// As [`round`](Self::round) with a hard rank cap applied after the
    /// tolerance truncation.
    pub fn round_capped(&self, eps: f64, max_rank: Option<usize>) -> (TTTensor3, TruncationInfo) {
        let eps = eps.max(0.0);
        let (n1, n2, n3) = self.mode_sizes();
        let norm = self.norm();
        let mut info = TruncationInfo::default();
        if norm == 0.0 || !norm.is_finite() {
            if norm == 0.0 {
                return (Self::zeros(n1, n2, n3, self.centering), info);
            }
            // Non-finite data cannot be compressed meaningfully; hand it back.
            return (self.clone(), info);
        }
        let delta = eps * norm / std::f64::consts::SQRT_2;

        // Right-to-left orthogonalization.
        let (r1, r2) = self.ranks();
        let m3 = DMatrix::from_fn(r2, n3, |r, c| self.core3[[r, c, 0]]);
        let (l3, q3) = lq(m3); // (r2 x p2) * (p2 x n3)
        let p2 = q3.nrows();
        // Absorb L3 into core2 from the right.
        let mut c2 = Array3::zeros((r1, n2, p2));
        for a1 in 0..r1 {
            for j in 0..n2 {
                for b in 0..p2 {
                    let mut s = 0.0;
                    for a2 in 0..r2 {
                        s += self.core2[[a1, j, a2]] * l3[(a2, b)];
                    }
                    c2[[a1, j, b]] = s;
                }
            }
        }
        let m2 = DMatrix::from_fn(r1, n2 * p2, |r, c| c2[[r, c / p2, c % p2]]);
        let (l2, q2) = lq(m2); // (r1 x p1) * (p1 x n2*p2)
        let p1 = q2.nrows();
        let mut c1 = Array3::zeros((1, n1, p1));
        for i in 0..n1 {
            for b in 0..p1 {
                let mut s = 0.0;
                for a1 in 0..r1 {
                    s += self.core1[[0, i, a1]] * l2[(a1, b)];
                }
                c1[[0, i, b]] = s;
            }
        }

        // Left-to-right truncated-SVD sweep.
        let m1 = DMatrix::from_fn(n1, p1, |r, c| c1[[0, r, c]]);
        let (u1, w1, s1) = match truncated_svd(m1, delta, max_rank, &mut info) {
            Ok(v) => v,
            Err(_) => return (self.clone(), info),
        };
        let mut core1 = Array3::zeros((1, n1, s1));
        for i in 0..n1 {
            for a in 0..s1 {
                core1[[0, i, a]] = u1[(i, a)];
            }
        }
        // Carry w1 into the (right-orthogonal) second core.
        let mut m2t = DMatrix::zeros(s1 * n2, p2);
        for a in 0..s1 {
            for j in 0..n2 {
                for b in 0..p2 {
                    let mut s = 0.0;
                    for c in 0..p1 {
                        s += w1[(a, c)] * q2[(c, j * p2 + b)];
                    }
                    m2t[(a * n2 + j, b)] = s;
                }
            }
        }
        let (u2, w2, s2) = match truncated_svd(m2t, delta, max_rank, &mut info) {
            Ok(v) => v,
            Err(_) => return (self.clone(), info),
        };
        let mut core2 = Array3::zeros((s1, n2, s2));
        for a in 0..s1 {
            for j in 0..n2 {
                for b in 0..s2 {
                    core2[[a, j, b]] = u2[(a * n2 + j, b)];
                }
            }
        }
        let mut core3 = Array3::zeros((s2, n3, 1));
        for b in 0..s2 {
            for k in 0..n3 {
                let mut s = 0.0;
                for c in 0..p2 {
                    s += w2[(b, c)] * q3[(c, k)];
                }
                core3[[b, k, 0]] = s;
            }
        }
        (
            TTTensor3 {
                core1,
                core2,
                core3,
                centering: self.centering,
            },
            info,
        )
    }
}

/// LQ factorization `M = L * Q` with orthonormal rows in `Q`, via QR of the
/// transpose. Returns `(L: m x p, Q: p x n)` with `p = min(m, n)`.
fn lq(m: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.transpose().qr();
    let q = qr.q(); // n x p
    let r = qr.r(); // p x m
    (r.transpose(), q.transpose())
}

/// Truncated SVD with a Frobenius tail budget: keeps the smallest rank `r`
/// such that the discarded tail satisfies `sum sigma_k^2 <= delta^2`, then
/// applies the optional hard cap. Returns `(U_r, S_r * Vt_r, r)`.
fn truncated_svd(
    m: DMatrix<f64>,
    delta: f64,
    max_rank: Option<usize>,
    info: &mut TruncationInfo,
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    let crate::svd::Svd { u, sigma, vt } = crate::svd::jacobi_svd(&m);
    let full = sigma.len();
    let mut tail = 0.0;
    let mut rank = full;
    while rank > 1 {
        let next = tail + sigma[rank - 1] * sigma[rank - 1];
        if next > delta * delta {
            break;
        }
        tail = next;
        rank -= 1;
    }
    if let Some(cap) = max_rank {
        let cap = cap.max(1);
        if cap < rank {
            rank = cap;
            info.cap_active = true;
        }
    }
    let ur = u.columns(0, rank).into_owned();
    let mut svt = vt.rows(0, rank).into_owned();
    for r in 0..rank {
        let s = sigma[r];
        svt.row_mut(r).scale_mut(s);
    }
    Ok((ur, svt, rank))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_tt(
        seed: u64,
        n: (usize, usize, usize),
        ranks: (usize, usize),
        centering: Centering,
    ) -> TTTensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |shape: (usize, usize, usize)| {
            Array3::from_shape_fn(shape, |_| rng.gen_range(-1.0..1.0))
        };
        TTTensor3 {
            core1: fill((1, n.0, ranks.0)),
            core2: fill((ranks.0, n.1, ranks.1)),
            core3: fill((ranks.1, n.2, 1)),
            centering,
        }
    }

    fn dense_of(t: &TTTensor3) -> Array3<f64> {
        t.to_dense().unwrap().data
    }

    fn max_abs_diff(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rank_one_hand_products() {
        let t = TTTensor3::rank_one(&[1.0, 2.0], &[3.0], &[4.0, 5.0], Centering::Vertex).unwrap();
        assert_eq!(t.ranks(), (1, 1));
        assert_relative_eq!(t.get(0, 0, 0).unwrap(), 12.0);
        assert_relative_eq!(t.get(0, 0, 1).unwrap(), 15.0);
        assert_relative_eq!(t.get(1, 0, 0).unwrap(), 24.0);
        assert_relative_eq!(t.get(1, 0, 1).unwrap(), 30.0);
        // (1, 0, 1): 2 * 3 * 5
        assert_relative_eq!(t.get(1, 0, 1).unwrap(), 30.0);
    }

    #[test]
    fn rank_one_all_ones() {
        let ones = [1.0, 1.0];
        let t = TTTensor3::rank_one(&ones, &ones, &ones, Centering::Vertex).unwrap();
        for v in dense_of(&t).iter() {
            assert_relative_eq!(*v, 1.0);
        }
    }

    #[test]
    fn rank_one_rejects_empty() {
        assert!(TTTensor3::rank_one(&[], &[1.0], &[1.0], Centering::Vertex).is_err());
    }

    #[test]
    fn get_checks_bounds() {
        let t = TTTensor3::zeros(2, 3, 4, Centering::Vertex);
        assert_relative_eq!(t.get(1, 2, 3).unwrap(), 0.0);
        assert!(matches!(
            t.get(2, 0, 0),
            Err(Error::IndexOutOfBounds { .. })
        ));
    }

    #[test]
    fn get_matches_dense_on_seeded_tensor() {
        let t = random_tt(7, (5, 6, 4), (3, 2), Centering::Vertex);
        let full = dense_of(&t);
        assert_relative_eq!(
            t.get(2, 4, 1).unwrap(),
            full[[2, 4, 1]],
            max_relative = 1e-13
        );
    }

    #[test]
    fn from_dense_separable_gives_rank_one() {
        let n = 12;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let data = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            (xs[i] + 0.3).sin() * (2.0 * xs[j]).cos() * (xs[k] * xs[k] + 1.0)
        });
        let t = DenseField3::new(data, Centering::Vertex).unwrap();
        let tt = TTTensor3::from_dense(&t, 1e-12, None).unwrap();
        assert_eq!(tt.ranks(), (1, 1));
        let err = max_abs_diff(&dense_of(&tt), &t.data);
        assert!(err <= 1e-12 * t.frobenius_norm());
    }

    #[test]
    fn from_dense_zero_tensor_is_canonical() {
        let t = DenseField3::zeros((5, 5, 5), Centering::Cell);
        let tt = TTTensor3::from_dense(&t, 0.0, None).unwrap();
        assert_eq!(tt.ranks(), (1, 1));
        assert!(tt.core1.iter().all(|&v| v == 0.0));
        assert!(tt.core2.iter().all(|&v| v == 0.0));
        assert!(tt.core3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn from_dense_sin_sum_has_rank_two_unfoldings() {
        // The angle-addition formula splits sin(2 pi (x + y + z)) into exactly
        // two products at each separation, so both unfoldings have numerical
        // rank 2.
        let n = 20;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let data = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            (2.0 * std::f64::consts::PI * (xs[i] + xs[j] + xs[k])).sin()
        });
        let t = DenseField3::new(data, Centering::Vertex).unwrap();
        let eps = 1e-12;
        let thresh = eps * t.frobenius_norm();

        // Independent rank oracle: the symmetric block matrix
        // [[0, M], [M^T, 0]] has eigenvalues +-sigma_i, computed here with a
        // symmetric eigensolver rather than the crate's Jacobi sweep.
        let m1 = DMatrix::from_fn(n, n * n, |r, c| t.data[[r, c / n, c % n]]);
        let m2 = DMatrix::from_fn(n * n, n, |r, c| t.data[[r / n, r % n, c]]);
        let count = |m: DMatrix<f64>| {
            let (rows, cols) = m.shape();
            let dim = rows + cols;
            let mut jw = DMatrix::zeros(dim, dim);
            for r in 0..rows {
                for c in 0..cols {
                    jw[(r, rows + c)] = m[(r, c)];
                    jw[(rows + c, r)] = m[(r, c)];
                }
            }
            nalgebra::SymmetricEigen::new(jw)
                .eigenvalues
                .iter()
                .filter(|&&l| l > thresh)
                .count()
        };
        assert_eq!(count(m1), 2);
        assert_eq!(count(m2), 2);

        let tt = TTTensor3::from_dense(&t, eps, None).unwrap();
        assert_eq!(tt.ranks(), (2, 2));
        let err = max_abs_diff(&dense_of(&tt), &t.data);
        assert!(err <= 1e-11 * t.frobenius_norm());

        // A function of x + y alone drops to rank 1 at the second separation.
        let data2 = Array3::from_shape_fn((n, n, n), |(i, j, _)| {
            (2.0 * std::f64::consts::PI * (xs[i] + xs[j])).sin()
        });
        let t2 = DenseField3::new(data2, Centering::Vertex).unwrap();
        let tt2 = TTTensor3::from_dense(&t2, eps, None).unwrap();
        assert_eq!(tt2.ranks(), (2, 1));
    }

    #[test]
    fn from_dense_eps_zero_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = Array3::from_shape_fn((8, 8, 8), |_| rng.gen_range(-1.0..1.0));
        let t = DenseField3::new(data, Centering::Vertex).unwrap();
        let tt = TTTensor3::from_dense(&t, 0.0, None).unwrap();
        let back = dense_of(&tt);
        let rel = max_abs_diff(&back, &t.data) / t.frobenius_norm();
        assert!(rel <= 1e-13, "round trip error {rel}");
    }

    #[test]
    fn from_dense_respects_rank_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Array3::from_shape_fn((8, 8, 8), |_| rng.gen_range(-1.0..1.0));
        let t = DenseField3::new(data, Centering::Vertex).unwrap();
        let (tt, info) = TTTensor3::from_dense_capped(&t, 1e-14, Some(3)).unwrap();
        let (r1, r2) = tt.ranks();
        assert!(r1 <= 3 && r2 <= 3);
        assert!(info.cap_active);
    }

    #[test]
    fn add_is_exact_with_rank_sums() {
        let a = random_tt(1, (8, 8, 8), (2, 3), Centering::Vertex);
        let b = random_tt(2, (8, 8, 8), (1, 2), Centering::Vertex);
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.ranks(), (3, 5));
        let expect = &dense_of(&a) + &dense_of(&b);
        let err = max_abs_diff(&dense_of(&sum), &expect);
        assert!(err <= 1e-13 * (a.norm() + b.norm()));
    }

    #[test]
    fn add_rejects_shape_mismatch() {
        let a = TTTensor3::zeros(4, 4, 4, Centering::Vertex);
        let b = TTTensor3::zeros(4, 5, 4, Centering::Vertex);
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn subtracting_self_rounds_to_zero() {
        let a = random_tt(5, (6, 6, 6), (2, 2), Centering::Vertex);
        let diff = a.add(&a.scale(-1.0).unwrap()).unwrap();
        let r = diff.round(1e-12);
        assert_eq!(r.ranks(), (1, 1));
        assert!(r.norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn scale_matches_dense() {
        let a = random_tt(9, (6, 5, 7), (3, 2), Centering::Cell);
        let s = a.scale(-2.0).unwrap();
        assert_eq!(s.ranks(), a.ranks());
        let expect = dense_of(&a).mapv(|v| -2.0 * v);
        assert!(max_abs_diff(&dense_of(&s), &expect) <= 1e-14 * a.norm());
        // s = 1 keeps values identical.
        let id = a.scale(1.0).unwrap();
        assert_eq!(max_abs_diff(&dense_of(&id), &dense_of(&a)), 0.0);
        // s = 0 zeroes everything; rounding collapses the ranks.
        let z = a.scale(0.0).unwrap().round(1e-15);
        assert_eq!(z.ranks(), (1, 1));
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn hadamard_rank_one_matches_dense() {
        let a = random_tt(13, (5, 4, 6), (2, 3), Centering::Vertex);
        let vx: Vec<f64> = (0..5).map(|i| 0.5 + i as f64).collect();
        let vy: Vec<f64> = (0..4).map(|i| 1.0 - 0.1 * i as f64).collect();
        let vz: Vec<f64> = (0..6).map(|i| (-1.0f64).powi(i as i32)).collect();
        let h = a.hadamard_rank_one(&vx, &vy, &vz).unwrap();
        assert_eq!(h.ranks(), a.ranks());
        let full = dense_of(&a);
        let expect = Array3::from_shape_fn((5, 4, 6), |(i, j, k)| full[[i, j, k]] * vx[i] * vy[j] * vz[k]);
        assert!(max_abs_diff(&dense_of(&h), &expect) <= 1e-14 * a.norm().max(1.0));
    }

    #[test]
    fn hadamard_identity_and_boundary_zeroing() {
        let a = random_tt(14, (5, 5, 5), (2, 2), Centering::Vertex);
        let ones = vec![1.0; 5];
        let id = a.hadamard_rank_one(&ones, &ones, &ones).unwrap();
        assert_eq!(max_abs_diff(&dense_of(&id), &dense_of(&a)), 0.0);

        let mask = vec![0.0, 1.0, 1.0, 1.0, 0.0];
        let m = a.hadamard_rank_one(&mask, &ones, &ones).unwrap();
        let full = dense_of(&m);
        for j in 0..5 {
            for k in 0..5 {
                assert_eq!(full[[0, j, k]], 0.0);
                assert_eq!(full[[4, j, k]], 0.0);
            }
        }
    }

    #[test]
    fn inner_and_norm_against_dense() {
        let a = random_tt(21, (10, 10, 10), (3, 2), Centering::Vertex);
        let b = random_tt(22, (10, 10, 10), (2, 3), Centering::Vertex);
        let dense_dot: f64 = dense_of(&a)
            .iter()
            .zip(dense_of(&b).iter())
            .map(|(x, y)| x * y)
            .sum();
        let got = a.inner(&b).unwrap();
        assert_relative_eq!(got, dense_dot, max_relative = 1e-12);

        let zero = TTTensor3::zeros(10, 10, 10, Centering::Vertex);
        assert_eq!(a.inner(&zero).unwrap(), 0.0);

        let single = TTTensor3::rank_one(&[3.0], &[4.0], &[1.0], Centering::Vertex).unwrap();
        assert_relative_eq!(single.norm(), 12.0, max_relative = 1e-15);
    }

    #[test]
    fn round_collapses_duplicated_ranks() {
        let a = random_tt(31, (8, 8, 8), (2, 3), Centering::Vertex);
        let doubled = a.add(&a).unwrap();
        assert_eq!(doubled.ranks(), (4, 6));
        let rounded = doubled.round(1e-12);
        assert_eq!(rounded.ranks(), a.ranks());
        let expect = dense_of(&a).mapv(|v| 2.0 * v);
        let err = max_abs_diff(&dense_of(&rounded), &expect);
        assert!(err <= 1e-11 * a.norm());
    }

    #[test]
    fn round_zero_with_inflated_ranks() {
        let mut z = TTTensor3::zeros(6, 6, 6, Centering::Vertex);
        z.core1 = Array3::zeros((1, 6, 4));
        z.core2 = Array3::zeros((4, 6, 5));
        z.core3 = Array3::zeros((5, 6, 1));
        let r = z.round(1e-8);
        assert_eq!(r.ranks(), (1, 1));
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn round_drops_small_singular_component() {
        // Two orthonormal rank-1 terms with weights 1 and 1e-6; the unfolding
        // spectra are exactly {1, 1e-6}.
        let n = 8;
        let s = (1.0 / n as f64).sqrt();
        let u: Vec<f64> = vec![s; n];
        let v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { s } else { -s }).collect();
        let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12, "factors should be orthogonal");
        let big = TTTensor3::rank_one(&u, &u, &u, Centering::Vertex).unwrap();
        let small = TTTensor3::rank_one(&v, &v, &v, Centering::Vertex)
            .unwrap()
            .scale(1e-6)
            .unwrap();
        let a = big.add(&small).unwrap();
        let rounded = a.round(1e-4);
        assert_eq!(rounded.ranks(), (1, 1));
        let err = max_abs_diff(&dense_of(&rounded), &dense_of(&a));
        assert!(err <= 1e-4 * a.norm());
    }

    #[test]
    fn round_error_bound_over_seeds() {
        // The error is measured densely: the TT inner product of a
        // block-structured difference cancels catastrophically near zero.
        for seed in 0..100 {
            let a = random_tt(1000 + seed, (6, 7, 5), (4, 4), Centering::Vertex);
            let eps = match seed % 3 {
                0 => 1e-2,
                1 => 1e-6,
                _ => 1e-10,
            };
            let r = a.round(eps);
            let (r1, r2) = r.ranks();
            let (a1, a2) = a.ranks();
            assert!(r1 <= a1 && r2 <= a2, "round must not grow ranks");
            let da = dense_of(&a);
            let dr = dense_of(&r);
            let err = da
                .iter()
                .zip(dr.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let bound = eps * a.norm() * 1.0000001 + 1e-13 * a.norm();
            assert!(err <= bound, "seed {seed}: error {err} above bound {bound}");
        }
    }

    #[test]
    fn round_is_idempotent() {
        let a = random_tt(55, (7, 7, 7), (4, 3), Centering::Vertex);
        let r1 = a.round(1e-3);
        let r2 = r1.round(1e-3);
        assert_eq!(r1.ranks(), r2.ranks());
        let err = max_abs_diff(&dense_of(&r1), &dense_of(&r2));
        assert!(err <= 1e-12 * a.norm());
    }

    #[test]
    fn to_dense_respects_memory_cap() {
        let a = vec![1.0; 3000];
        let t = TTTensor3::rank_one(&a, &a, &a, Centering::Vertex).unwrap();
        assert!(matches!(t.to_dense(), Err(Error::ResourceLimit(_))));
    }
}
