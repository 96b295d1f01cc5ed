//! Benchmark scenarios and manufactured solutions.
//!
//! Three grid scenarios (equispaced, geometrically graded, remapped through
//! the univariate map derivative `4 e^{-2x}`) and three manufactured cases:
//!
//! * `u1 = sin(2 pi x) sin(2 pi y) sin(2 pi z)` — steady, used for the
//!   operator consistency study;
//! * `u2 = u1 * cos(2 pi t)` — separable and rank-1 in space;
//! * `u3 = exp(-(x + y + z - 3/2)^2) * t` — non-separable in space.
//!
//! Forcings are hand-derived closed forms of `du/dt - L u` for the
//! scenario's operator `L`; the test suite cross-checks them against an
//! independently coded route through the case derivatives.

use crate::error::{Error, Result};
use crate::field::{Centering, DenseField3};
use crate::grid::{Grid3, GridAxis};
use crate::stepper::Provider;
use crate::tt::TTTensor3;

const PI: f64 = std::f64::consts::PI;

/// Grid family of a study.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Regular,
    Variable,
    Remapped,
}

/// Grading factor of the coarsest (20-cell) graded grid.
const BASE_RATIO: f64 = 1.125;
const BASE_NC: f64 = 20.0;

impl Scenario {
    /// Unit-cube grid of the scenario at `nc` cells per direction. Graded
    /// grids keep a fixed grading map across refinements: the per-cell ratio
    /// is `1.125^(20/nc)`, so halving the cells splits each coarse cell and
    /// the 20-cell grid degrades by exactly 1.125 per cell.
    pub fn grid(self, nc: usize, n_ghost: usize) -> Result<Grid3> {
        let axis = match self {
            Scenario::Regular => GridAxis::regular(0.0, 1.0, nc, n_ghost)?,
            Scenario::Variable => {
                let ratio = BASE_RATIO.powf(BASE_NC / nc as f64);
                let h0 = if (ratio - 1.0).abs() < 1e-14 {
                    1.0 / nc as f64
                } else {
                    (ratio - 1.0) / (ratio.powi(nc as i32) - 1.0)
                };
                GridAxis::geometric(0.0, h0, ratio, nc, n_ghost)?
            }
            Scenario::Remapped => GridAxis::remapped(0.0, 1.0, nc, n_ghost, &Self::metric)?,
        };
        Grid3::cube(axis)
    }

    /// Derivative of the coordinate map `-2 e^{-2x}`.
    pub fn metric(x: f64) -> f64 {
        4.0 * (-2.0 * x).exp()
    }

    fn metric_deriv(x: f64) -> f64 {
        -8.0 * (-2.0 * x).exp()
    }

    /// 1D operator applied to an axis factor: the plain second derivative on
    /// Cartesian scenarios, the remapped form `(1/m) d/dx [(1/m) du/dx]`
    /// otherwise.
    fn apply_1d(self, d1: f64, d2: f64, x: f64) -> f64 {
        match self {
            Scenario::Regular | Scenario::Variable => d2,
            Scenario::Remapped => {
                let m = Self::metric(x);
                let mp = Self::metric_deriv(x);
                d2 / (m * m) - mp * d1 / (m * m * m)
            }
        }
    }
}

/// Manufactured case selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseId {
    U1,
    U2,
    U3,
}

#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub id: CaseId,
}

fn sin_factor(w: f64) -> f64 {
    (2.0 * PI * w).sin()
}

fn sin_factor_d1(w: f64) -> f64 {
    2.0 * PI * (2.0 * PI * w).cos()
}

fn sin_factor_d2(w: f64) -> f64 {
    -4.0 * PI * PI * (2.0 * PI * w).sin()
}

fn gauss(x: f64, y: f64, z: f64) -> f64 {
    let s = x + y + z - 1.5;
    (-s * s).exp()
}

impl ManufacturedCase {
    pub fn new(id: CaseId) -> Self {
        ManufacturedCase { id }
    }

    /// Exact solution value.
    pub fn solution(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        match self.id {
            CaseId::U1 => sin_factor(x) * sin_factor(y) * sin_factor(z),
            CaseId::U2 => sin_factor(x) * sin_factor(y) * sin_factor(z) * (2.0 * PI * t).cos(),
            CaseId::U3 => gauss(x, y, z) * t,
        }
    }

    pub fn time_derivative(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        match self.id {
            CaseId::U1 => 0.0,
            CaseId::U2 => {
                -2.0 * PI
                    * sin_factor(x)
                    * sin_factor(y)
                    * sin_factor(z)
                    * (2.0 * PI * t).sin()
            }
            CaseId::U3 => gauss(x, y, z),
        }
    }

    /// The scenario's spatial operator applied to the exact solution.
    pub fn laplacian(&self, scenario: Scenario, x: f64, y: f64, z: f64, t: f64) -> f64 {
        match self.id {
            CaseId::U1 | CaseId::U2 => {
                let theta = if self.id == CaseId::U1 {
                    1.0
                } else {
                    (2.0 * PI * t).cos()
                };
                let f = [sin_factor(x), sin_factor(y), sin_factor(z)];
                let terms = [
                    scenario.apply_1d(sin_factor_d1(x), sin_factor_d2(x), x) * f[1] * f[2],
                    scenario.apply_1d(sin_factor_d1(y), sin_factor_d2(y), y) * f[0] * f[2],
                    scenario.apply_1d(sin_factor_d1(z), sin_factor_d2(z), z) * f[0] * f[1],
                ];
                theta * (terms[0] + terms[1] + terms[2])
            }
            CaseId::U3 => {
                let s = x + y + z - 1.5;
                let phi = gauss(x, y, z);
                let d1 = -2.0 * s * phi;
                let d2 = (4.0 * s * s - 2.0) * phi;
                t * (scenario.apply_1d(d1, d2, x)
                    + scenario.apply_1d(d1, d2, y)
                    + scenario.apply_1d(d1, d2, z))
            }
        }
    }

    /// Closed-form forcing `du/dt - L u`, hand-simplified per case and
    /// scenario. On Cartesian scenarios:
    /// `f2 = u1 * (-2 pi sin(2 pi t) + 12 pi^2 cos(2 pi t))` and
    /// `f3 = e^{-s^2} (1 - 3 t (4 s^2 - 2))`; the remapped forms carry the
    /// metric of the coordinate map through `e^{4w} (a''/16 + a'/8)`.
    pub fn forcing(&self, scenario: Scenario, x: f64, y: f64, z: f64, t: f64) -> f64 {
        match (self.id, scenario) {
            (CaseId::U1, Scenario::Regular | Scenario::Variable) => {
                12.0 * PI * PI * sin_factor(x) * sin_factor(y) * sin_factor(z)
            }
            (CaseId::U2, Scenario::Regular | Scenario::Variable) => {
                sin_factor(x)
                    * sin_factor(y)
                    * sin_factor(z)
                    * (-2.0 * PI * (2.0 * PI * t).sin()
                        + 12.0 * PI * PI * (2.0 * PI * t).cos())
            }
            (CaseId::U1 | CaseId::U2, Scenario::Remapped) => {
                let theta = if self.id == CaseId::U1 {
                    1.0
                } else {
                    (2.0 * PI * t).cos()
                };
                let theta_dot = if self.id == CaseId::U1 {
                    0.0
                } else {
                    -2.0 * PI * (2.0 * PI * t).sin()
                };
                let f = [sin_factor(x), sin_factor(y), sin_factor(z)];
                let lap1d = |w: f64| {
                    (4.0 * w).exp() * (sin_factor_d2(w) / 16.0 + sin_factor_d1(w) / 8.0)
                };
                let lap = lap1d(x) * f[1] * f[2] + f[0] * lap1d(y) * f[2] + f[0] * f[1] * lap1d(z);
                f[0] * f[1] * f[2] * theta_dot - theta * lap
            }
            (CaseId::U3, Scenario::Regular | Scenario::Variable) => {
                let s = x + y + z - 1.5;
                let phi = gauss(x, y, z);
                phi * (1.0 - 3.0 * t * (4.0 * s * s - 2.0))
            }
            (CaseId::U3, Scenario::Remapped) => {
                let s = x + y + z - 1.5;
                let phi = gauss(x, y, z);
                let lap1d = |w: f64| {
                    (4.0 * w).exp() * ((4.0 * s * s - 2.0) / 16.0 - (-2.0 * s) / (-8.0))
                };
                phi * (1.0 - t * (lap1d(x) + lap1d(y) + lap1d(z)))
            }
        }
    }

    /// Space factor rank at machine tolerance, where known ahead of time.
    pub fn reference_rank(&self) -> Option<usize> {
        match self.id {
            CaseId::U1 | CaseId::U2 => Some(1),
            CaseId::U3 => Some(11),
        }
    }

    pub fn separable(&self) -> bool {
        matches!(self.id, CaseId::U1 | CaseId::U2)
    }
}

/// Everything a time-stepping run needs for one backend, with the spatial
/// decompositions precomputed once per grid.
pub struct FgProblem {
    space: DenseField3,
    space_aux: Option<DenseField3>,
    case: ManufacturedCase,
}

impl FgProblem {
    pub fn new(case: ManufacturedCase, scenario: Scenario, g: &Grid3) -> Result<Self> {
        let space = DenseField3::sample_vertices(g, |x, y, z| match case.id {
            CaseId::U1 | CaseId::U2 => sin_factor(x) * sin_factor(y) * sin_factor(z),
            CaseId::U3 => gauss(x, y, z),
        })?;
        // Time-independent spatial part of the forcing that multiplies t
        // (u3) or the full forcing shape (u1/u2 carry it via solution form).
        let space_aux = match case.id {
            CaseId::U3 => Some(DenseField3::sample_vertices(g, |x, y, z| {
                case.forcing(scenario, x, y, z, 1.0) - case.forcing(scenario, x, y, z, 0.0)
            })?),
            CaseId::U2 => Some(DenseField3::sample_vertices(g, |x, y, z| {
                // spatial shape of L u1 under this scenario
                case.laplacian(scenario, x, y, z, 0.0)
            })?),
            CaseId::U1 => None,
        };
        Ok(FgProblem {
            space,
            space_aux,
            case,
        })
    }

    pub fn initial(&self) -> Result<DenseField3> {
        self.solution_at(0.0)
    }

    pub fn solution_at(&self, t: f64) -> Result<DenseField3> {
        match self.case.id {
            CaseId::U1 => Ok(self.space.clone()),
            CaseId::U2 => self.space.lin_comb((2.0 * PI * t).cos(), &self.space, 0.0),
            CaseId::U3 => self.space.lin_comb(t, &self.space, 0.0),
        }
    }

    pub fn forcing_at(&self, t: f64) -> Result<DenseField3> {
        match self.case.id {
            CaseId::U1 => Ok(DenseField3::zeros(
                self.space.shape(),
                Centering::Vertex,
            )),
            // f2 = u1 * theta'(t) - theta(t) * (L u1)
            CaseId::U2 => {
                let theta = (2.0 * PI * t).cos();
                let theta_dot = -2.0 * PI * (2.0 * PI * t).sin();
                self.space
                    .lin_comb(theta_dot, self.space_aux.as_ref().expect("u2 aux"), -theta)
            }
            // f3 = phi + t * (f(1) - f(0))
            CaseId::U3 => self
                .space
                .lin_comb(1.0, self.space_aux.as_ref().expect("u3 aux"), t),
        }
    }

    pub fn boundary_at(&self, t: f64) -> Result<DenseField3> {
        self.solution_at(t)
    }
}

/// Tensor-train problem data. Separable cases build rank-1 decompositions
/// from axis samples; the non-separable case runs the full-sample TT
/// construction once per grid, under the configured rounding threshold and
/// optional hard rank cap.
pub struct TtProblem {
    space: TTTensor3,
    space_aux: Option<TTTensor3>,
    case: ManufacturedCase,
    eps: f64,
    /// Whether any construction hit the hard rank cap.
    pub cap_active: bool,
}

fn axis_samples(ax: &GridAxis, f: impl Fn(f64) -> f64) -> Vec<f64> {
    ax.vertices.iter().map(|&w| f(w)).collect()
}

impl TtProblem {
    pub fn new(
        case: ManufacturedCase,
        scenario: Scenario,
        g: &Grid3,
        eps: f64,
        rank_cap: Option<usize>,
    ) -> Result<Self> {
        let mut cap_active = false;
        let space = match case.id {
            CaseId::U1 | CaseId::U2 => TTTensor3::rank_one(
                &axis_samples(&g.axes[0], sin_factor),
                &axis_samples(&g.axes[1], sin_factor),
                &axis_samples(&g.axes[2], sin_factor),
                Centering::Vertex,
            )?,
            CaseId::U3 => {
                let dense = DenseField3::sample_vertices(g, gauss)?;
                let (tt, info) = TTTensor3::from_dense_capped(&dense, eps, rank_cap)?;
                cap_active |= info.cap_active;
                tt
            }
        };
        let space_aux = match case.id {
            CaseId::U1 => None,
            // Spatial shape of L u1: one rank-1 term per direction.
            CaseId::U2 => {
                let sf = [
                    axis_samples(&g.axes[0], sin_factor),
                    axis_samples(&g.axes[1], sin_factor),
                    axis_samples(&g.axes[2], sin_factor),
                ];
                let lap1d = |ax: &GridAxis| {
                    axis_samples(ax, |w| {
                        scenario.apply_1d(sin_factor_d1(w), sin_factor_d2(w), w)
                    })
                };
                let tx = TTTensor3::rank_one(
                    &lap1d(&g.axes[0]),
                    &sf[1],
                    &sf[2],
                    Centering::Vertex,
                )?;
                let ty = TTTensor3::rank_one(
                    &sf[0],
                    &lap1d(&g.axes[1]),
                    &sf[2],
                    Centering::Vertex,
                )?;
                let tz = TTTensor3::rank_one(
                    &sf[0],
                    &sf[1],
                    &lap1d(&g.axes[2]),
                    Centering::Vertex,
                )?;
                let (sum, info) = tx.add(&ty)?.add(&tz)?.round_capped(eps, rank_cap);
                cap_active |= info.cap_active;
                Some(sum)
            }
            // f3(t) = phi + t * psi with a fixed spatial psi.
            CaseId::U3 => {
                let case_copy = case;
                let dense = DenseField3::sample_vertices(g, |x, y, z| {
                    case_copy.forcing(scenario, x, y, z, 1.0)
                        - case_copy.forcing(scenario, x, y, z, 0.0)
                })?;
                let (tt, info) = TTTensor3::from_dense_capped(&dense, eps, rank_cap)?;
                cap_active |= info.cap_active;
                Some(tt)
            }
        };
        Ok(TtProblem {
            space,
            space_aux,
            case,
            eps,
            cap_active,
        })
    }

    pub fn initial(&self) -> Result<TTTensor3> {
        self.solution_at(0.0)
    }

    pub fn solution_at(&self, t: f64) -> Result<TTTensor3> {
        match self.case.id {
            CaseId::U1 => Ok(self.space.clone()),
            CaseId::U2 => self.space.scale((2.0 * PI * t).cos()),
            CaseId::U3 => self.space.scale(t),
        }
    }

    pub fn forcing_at(&self, t: f64) -> Result<TTTensor3> {
        match self.case.id {
            CaseId::U1 => {
                let (n1, n2, n3) = self.space.mode_sizes();
                Ok(TTTensor3::zeros(n1, n2, n3, Centering::Vertex))
            }
            CaseId::U2 => {
                let theta = (2.0 * PI * t).cos();
                let theta_dot = -2.0 * PI * (2.0 * PI * t).sin();
                let aux = self.space_aux.as_ref().expect("u2 aux");
                Ok(self
                    .space
                    .scale(theta_dot)?
                    .add(&aux.scale(-theta)?)?
                    .round(self.eps))
            }
            CaseId::U3 => {
                let aux = self.space_aux.as_ref().expect("u3 aux");
                Ok(self.space.add(&aux.scale(t)?)?.round(self.eps))
            }
        }
    }

    pub fn boundary_at(&self, t: f64) -> Result<TTTensor3> {
        self.solution_at(t)
    }
}

/// Borrowing adapters that fit the [`Provider`] signature of the stepper.
pub fn fg_providers<'a>(
    p: &'a FgProblem,
) -> (
    impl Fn(f64) -> Result<DenseField3> + 'a,
    impl Fn(f64) -> Result<DenseField3> + 'a,
) {
    (move |t| p.forcing_at(t), move |t| p.boundary_at(t))
}

pub fn tt_providers<'a>(
    p: &'a TtProblem,
) -> (
    impl Fn(f64) -> Result<TTTensor3> + 'a,
    impl Fn(f64) -> Result<TTTensor3> + 'a,
) {
    (move |t| p.forcing_at(t), move |t| p.boundary_at(t))
}

/// Convenience for call sites that need `&dyn Fn` providers.
pub fn as_provider<F>(f: &impl Fn(f64) -> Result<F>) -> Provider<'_, F> {
    f
}

impl std::str::FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u1" => Ok(CaseId::U1),
            "u2" => Ok(CaseId::U2),
            "u3" => Ok(CaseId::U3),
            other => Err(Error::InvalidInput(format!("unknown case '{other}'"))),
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Scenario::Regular),
            "variable" => Ok(Scenario::Variable),
            "remapped" => Ok(Scenario::Remapped),
            other => Err(Error::InvalidInput(format!("unknown scenario '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn variable_grid_anchors_the_base_grading() {
        let g = Scenario::Variable.grid(20, 2).unwrap();
        let ax = &g.axes[0];
        // Per-cell ratio 1.125 at the base level.
        for i in 2..ax.nc_total() - 3 {
            approx::assert_relative_eq!(
                ax.cell_steps[i + 1] / ax.cell_steps[i],
                1.125,
                max_relative = 1e-12
            );
        }
        // Unit physical length.
        let len: f64 = ax.cell_steps[2..22].iter().sum();
        approx::assert_relative_eq!(len, 1.0, max_relative = 1e-12);

        // Refinement keeps the grading map: the fine grid's pairwise cell
        // sums reproduce the coarse cells.
        let gf = Scenario::Variable.grid(40, 2).unwrap();
        let axf = &gf.axes[0];
        for ic in 0..20 {
            let coarse = ax.cell_steps[2 + ic];
            let fine = axf.cell_steps[2 + 2 * ic] + axf.cell_steps[2 + 2 * ic + 1];
            approx::assert_relative_eq!(coarse, fine, max_relative = 1e-10);
        }
    }

    #[test]
    fn remapped_metric_value() {
        approx::assert_relative_eq!(Scenario::metric(0.0), 4.0, max_relative = 1e-14);
        assert!(Scenario::metric(1.0) > 0.0);
    }

    #[test]
    fn u2_forcing_at_t0_matches_12pi2_u1() {
        let case = ManufacturedCase::new(CaseId::U2);
        let (x, y, z) = (0.3, 0.7, 0.45);
        let f = case.forcing(Scenario::Regular, x, y, z, 0.0);
        let u1 = ManufacturedCase::new(CaseId::U1).solution(x, y, z, 0.0);
        approx::assert_relative_eq!(f, 12.0 * PI * PI * u1, max_relative = 1e-13);
    }

    #[test]
    fn u3_starts_from_zero() {
        let case = ManufacturedCase::new(CaseId::U3);
        for &(x, y, z) in &[(0.0, 0.0, 0.0), (0.5, 0.25, 0.75), (1.0, 1.0, 1.0)] {
            assert_eq!(case.solution(x, y, z, 0.0), 0.0);
        }
    }

    #[test]
    fn pde_residual_vanishes_for_all_cases_and_scenarios() {
        // Independent route: du/dt and L u from the case derivative
        // formulas; f from the hand-simplified closed forms. Both must
        // cancel to round-off at random space-time points.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for id in [CaseId::U1, CaseId::U2, CaseId::U3] {
            let case = ManufacturedCase::new(id);
            for scenario in [Scenario::Regular, Scenario::Variable, Scenario::Remapped] {
                let mut worst = 0.0f64;
                for _ in 0..1000 {
                    let (x, y, z, t) = (
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                    );
                    let resid = case.time_derivative(x, y, z, t)
                        - case.laplacian(scenario, x, y, z, t)
                        - case.forcing(scenario, x, y, z, t);
                    worst = worst.max(resid.abs());
                }
                assert!(
                    worst <= 1e-10,
                    "{id:?} on {scenario:?}: residual {worst:e}"
                );
            }
        }
    }

    #[test]
    fn pde_residual_finite_difference_probe() {
        // A third, discretization-based route at loose tolerance: centered
        // differences in time and space approximate du/dt - Lap u.
        let case = ManufacturedCase::new(CaseId::U2);
        let scenario = Scenario::Regular;
        let d = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (x, y, z, t) = (
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.1..0.9),
            );
            let u = |x: f64, y: f64, z: f64, t: f64| case.solution(x, y, z, t);
            let ut = (u(x, y, z, t + d) - u(x, y, z, t - d)) / (2.0 * d);
            let lap = (u(x + d, y, z, t) - 2.0 * u(x, y, z, t) + u(x - d, y, z, t)
                + u(x, y + d, z, t)
                - 2.0 * u(x, y, z, t)
                + u(x, y - d, z, t)
                + u(x, y, z + d, t)
                - 2.0 * u(x, y, z, t)
                + u(x, y, z - d, t))
                / (d * d);
            let resid = ut - lap - case.forcing(scenario, x, y, z, t);
            assert!(resid.abs() <= 1e-4, "fd residual {resid:e}");
        }
    }

    #[test]
    fn tt_and_fg_problem_data_agree() {
        let case = ManufacturedCase::new(CaseId::U2);
        for scenario in [Scenario::Regular, Scenario::Variable, Scenario::Remapped] {
            let g = scenario.grid(8, 2).unwrap();
            let fg = FgProblem::new(case, scenario, &g).unwrap();
            let tt = TtProblem::new(case, scenario, &g, 1e-13, None).unwrap();
            for &t in &[0.0, 0.17, 0.5] {
                for (a, b) in [
                    (fg.solution_at(t).unwrap(), tt.solution_at(t).unwrap()),
                    (fg.forcing_at(t).unwrap(), tt.forcing_at(t).unwrap()),
                ] {
                    let bd = b.to_dense().unwrap();
                    let denom = a.frobenius_norm().max(1e-12);
                    let diff = a
                        .data
                        .iter()
                        .zip(bd.data.iter())
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    assert!(
                        diff / denom <= 1e-11,
                        "{scenario:?} t={t}: rel diff {}",
                        diff / denom
                    );
                }
            }
        }
    }

    #[test]
    fn u3_problem_data_agree_between_backends() {
        let case = ManufacturedCase::new(CaseId::U3);
        let g = Scenario::Regular.grid(10, 2).unwrap();
        let fg = FgProblem::new(case, Scenario::Regular, &g).unwrap();
        let tt = TtProblem::new(case, Scenario::Regular, &g, 1e-12, None).unwrap();
        assert!(!tt.cap_active);
        let a = fg.forcing_at(0.35).unwrap();
        let b = tt.forcing_at(0.35).unwrap().to_dense().unwrap();
        let denom = a.frobenius_norm();
        let diff = a
            .data
            .iter()
            .zip(b.data.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(diff / denom <= 1e-9, "rel diff {}", diff / denom);

        let capped = TtProblem::new(case, Scenario::Regular, &g, 1e-12, Some(3)).unwrap();
        assert!(capped.cap_active);
        assert!(capped.initial().unwrap().max_rank() <= 3);
    }
}
