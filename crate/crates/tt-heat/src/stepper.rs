//! Time integration for the heat equation on both field backends.
//!
//! The explicit Euler, implicit Euler and Crank-Nicolson updates, the
//! matrix-free heat operator `p -> p - tau*dt * Lap p`, the dimension-split
//! tridiagonal preconditioner and the PCG loop are written once against the
//! [`VertexField`] trait; the dense and tensor-train backends plug in
//! through it. The heat operator is never assembled as a matrix: every
//! Krylov iteration applies the discrete operators directly.

use crate::error::{Error, Result};
use crate::fg_ops;
use crate::field::DenseField3;
use crate::grid::{Axis, Grid3, GridAxis, InterpWeighting};
use crate::tt::TTTensor3;
use crate::tt_ops;

/// Time-marching scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Implicit,
    CrankNicolson,
}

/// Which representation a study runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Fg,
    Tt,
    Both,
}

/// When the implicit solve's boundary data is evaluated. `AsPrinted`
/// follows the reference algorithms (start of the step for implicit Euler,
/// the half step for the Crank-Nicolson implicit half); `TargetTime`
/// evaluates at the time being solved for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BcTimeConvention {
    #[default]
    AsPrinted,
    TargetTime,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub eps_round: f64,
    pub pcg_tol: f64,
    pub pcg_maxiter: usize,
    pub backend: Backend,
    pub initial_rank_cap: Option<usize>,
    pub bc_time: BcTimeConvention,
    pub interp: InterpWeighting,
}

impl SolverConfig {
    pub fn new(scheme: Scheme, dt: f64, t_final: f64, eps_round: f64) -> Self {
        SolverConfig {
            scheme,
            dt,
            t_final,
            eps_round,
            pcg_tol: 1e-8,
            pcg_maxiter: 500,
            backend: Backend::Both,
            initial_rank_cap: None,
            bc_time: BcTimeConvention::default(),
            interp: InterpWeighting::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.t_final < 0.0 || !self.t_final.is_finite() {
            return Err(Error::InvalidInput(format!(
                "t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        if self.t_final > 0.0 && self.dt > self.t_final * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "dt = {} exceeds t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.eps_round < 0.0 {
            return Err(Error::InvalidInput("eps_round must be >= 0".into()));
        }
        if !(self.pcg_tol > 0.0 && self.pcg_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "pcg_tol must lie in (0, 1), got {}",
                self.pcg_tol
            )));
        }
        if self.pcg_maxiter == 0 {
            return Err(Error::InvalidInput("pcg_maxiter must be >= 1".into()));
        }
        Ok(())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            "cn" | "crank-nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fg" => Ok(Backend::Fg),
            "tt" => Ok(Backend::Tt),
            "both" => Ok(Backend::Both),
            other => Err(Error::InvalidInput(format!("unknown backend '{other}'"))),
        }
    }
}

impl std::str::FromStr for BcTimeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(BcTimeConvention::AsPrinted),
            "target-time" => Ok(BcTimeConvention::TargetTime),
            other => Err(Error::InvalidInput(format!(
                "unknown boundary-time convention '{other}'"
            ))),
        }
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub max_rank: usize,
    pub pcg_iterations: usize,
    pub pcg_residual: f64,
    pub pcg_converged: bool,
}

/// The operations a field representation must provide to be time-stepped.
/// `eps` is the rounding threshold; the dense backend ignores it.
pub trait VertexField: Clone {
    fn laplacian_vertex(&self, g: &Grid3, interp: InterpWeighting, eps: f64) -> Result<Self>;
    /// Interior values from `self`, boundary layers from `bdata`.
    fn set_boundary(&self, g: &Grid3, bdata: &Self, eps: f64) -> Result<Self>;
    /// Zeroes all boundary layers.
    fn mask_interior(&self, g: &Grid3) -> Result<Self>;
    /// `a * self + b * other`, rounded at `eps`.
    fn lin_comb(&self, a: f64, other: &Self, b: f64, eps: f64) -> Result<Self>;
    /// `s * self`, exact.
    fn scaled(&self, s: f64) -> Result<Self>;
    fn inner(&self, other: &Self) -> Result<f64>;
    fn norm(&self) -> f64;
    /// Dimension-split tridiagonal solve, one factor per axis.
    fn precond_apply(&self, g: &Grid3, tau_dt: f64) -> Result<Self>;
    fn max_rank(&self) -> usize;
    fn storage_entries(&self) -> usize;
    fn all_finite(&self) -> bool;
}

impl VertexField for DenseField3 {
    fn laplacian_vertex(&self, g: &Grid3, interp: InterpWeighting, _eps: f64) -> Result<Self> {
        fg_ops::laplacian_vertex(self, g, interp)
    }

    fn set_boundary(&self, g: &Grid3, bdata: &Self, _eps: f64) -> Result<Self> {
        fg_ops::set_boundary_from_field(self, g, bdata)
    }

    fn mask_interior(&self, g: &Grid3) -> Result<Self> {
        fg_ops::mask_interior(self, g)
    }

    fn lin_comb(&self, a: f64, other: &Self, b: f64, _eps: f64) -> Result<Self> {
        DenseField3::lin_comb(self, a, other, b)
    }

    fn scaled(&self, s: f64) -> Result<Self> {
        Ok(DenseField3 {
            data: self.data.mapv(|v| s * v),
            centering: self.centering,
        })
    }

    fn inner(&self, other: &Self) -> Result<f64> {
        DenseField3::inner(self, other)
    }

    fn norm(&self) -> f64 {
        self.frobenius_norm()
    }

    fn precond_apply(&self, g: &Grid3, tau_dt: f64) -> Result<Self> {
        let mut out = self.clone();
        for axis in Axis::ALL {
            apply_axis_factor_fg(&mut out, g, axis, tau_dt)?;
        }
        Ok(out)
    }

    fn max_rank(&self) -> usize {
        1
    }

    fn storage_entries(&self) -> usize {
        self.data.len()
    }

    fn all_finite(&self) -> bool {
        DenseField3::all_finite(self)
    }
}

impl VertexField for TTTensor3 {
    fn laplacian_vertex(&self, g: &Grid3, interp: InterpWeighting, eps: f64) -> Result<Self> {
        tt_ops::tt_laplacian_vertex(self, g, interp, eps)
    }

    fn set_boundary(&self, g: &Grid3, bdata: &Self, eps: f64) -> Result<Self> {
        tt_ops::tt_set_dirichlet(self, g, bdata, eps)
    }

    fn mask_interior(&self, g: &Grid3) -> Result<Self> {
        tt_ops::tt_mask_interior(self, g)
    }

    fn lin_comb(&self, a: f64, other: &Self, b: f64, eps: f64) -> Result<Self> {
        Ok(self.scale(a)?.add(&other.scale(b)?)?.round(eps))
    }

    fn scaled(&self, s: f64) -> Result<Self> {
        self.scale(s)
    }

    fn inner(&self, other: &Self) -> Result<f64> {
        TTTensor3::inner(self, other)
    }

    fn norm(&self) -> f64 {
        TTTensor3::norm(self)
    }

    fn precond_apply(&self, g: &Grid3, tau_dt: f64) -> Result<Self> {
        let mut out = self.clone();
        for (axis, core) in [
            (Axis::X, &mut out.core1),
            (Axis::Y, &mut out.core2),
            (Axis::Z, &mut out.core3),
        ] {
            let ax = &g.axes[axis.index()];
            let factor = AxisFactor::new(ax, tau_dt);
            let (rl, n, rr) = core.dim();
            if n != ax.nv_total() {
                return Err(Error::ShapeMismatch(format!(
                    "core mode size {n} vs {} vertices",
                    ax.nv_total()
                )));
            }
            let mut fiber = vec![0.0; factor.len()];
            for a in 0..rl {
                for b in 0..rr {
                    for (m, iv) in factor.range().enumerate() {
                        fiber[m] = core[[a, iv, b]];
                    }
                    let solved = factor.solve(&fiber)?;
                    for (m, iv) in factor.range().enumerate() {
                        core[[a, iv, b]] = solved[m];
                    }
                }
            }
        }
        Ok(out)
    }

    fn max_rank(&self) -> usize {
        TTTensor3::max_rank(self)
    }

    fn storage_entries(&self) -> usize {
        TTTensor3::storage_entries(self)
    }

    fn all_finite(&self) -> bool {
        TTTensor3::all_finite(self)
    }
}

/// Solves a tridiagonal system in O(n). `lower` and `upper` hold the `n - 1`
/// off-diagonal entries. Fails on a vanishing pivot.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || lower.len() != n - 1 || upper.len() != n - 1 || rhs.len() != n {
        return Err(Error::InvalidInput(format!(
            "tridiagonal sizes: lower {}, diag {}, upper {}, rhs {}",
            lower.len(),
            n,
            upper.len(),
            rhs.len()
        )));
    }
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = f64::MIN_POSITIVE.max(1e-300) * (1.0 + scale);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() <= tiny {
        return Err(Error::SingularSystem { row: 0 });
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot.abs() <= tiny {
            return Err(Error::SingularSystem { row: i });
        }
        if i < n - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// One 1D factor of the dimension-split preconditioner: `I + tau*dt * L`
/// restricted to the interior vertex range, where `L` is the 3-point
/// negative-Laplacian stencil built from the axis's effective steps.
pub struct AxisFactor {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    start: usize,
}

impl AxisFactor {
    pub fn new(ax: &GridAxis, tau_dt: f64) -> Self {
        let range = ax.interior_vertices();
        let start = *range.start();
        let n = range.end() - start + 1;
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut upper = vec![0.0; n.saturating_sub(1)];
        let mut diag = vec![0.0; n];
        for m in 0..n {
            let iv = start + m;
            let hl = ax.deriv1_step(iv - 1);
            let hr = ax.deriv1_step(iv);
            diag[m] = 1.0 + tau_dt * 2.0 / (hl * hr);
            if m > 0 {
                lower[m - 1] = -tau_dt * 2.0 / (hl * (hl + hr));
            }
            if m + 1 < n {
                upper[m] = -tau_dt * 2.0 / (hr * (hl + hr));
            }
        }
        AxisFactor {
            lower,
            diag,
            upper,
            start,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        thomas(&self.lower, &self.diag, &self.upper, rhs)
    }
}

fn apply_axis_factor_fg(u: &mut DenseField3, g: &Grid3, axis: Axis, tau_dt: f64) -> Result<()> {
    let ax = &g.axes[axis.index()];
    let factor = AxisFactor::new(ax, tau_dt);
    let shape = u.shape();
    let (na, nb) = match axis {
        Axis::X => (shape.1, shape.2),
        Axis::Y => (shape.0, shape.2),
        Axis::Z => (shape.0, shape.1),
    };
    let mut fiber = vec![0.0; factor.len()];
    for a in 0..na {
        for b in 0..nb {
            for (m, iv) in factor.range().enumerate() {
                let idx = match axis {
                    Axis::X => [iv, a, b],
                    Axis::Y => [a, iv, b],
                    Axis::Z => [a, b, iv],
                };
                fiber[m] = u.data[idx];
            }
            let solved = factor.solve(&fiber)?;
            for (m, iv) in factor.range().enumerate() {
                let idx = match axis {
                    Axis::X => [iv, a, b],
                    Axis::Y => [a, iv, b],
                    Axis::Z => [a, b, iv],
                };
                u.data[idx] = solved[m];
            }
        }
    }
    Ok(())
}

/// Applies the discrete heat operator `p -> p - tau*dt * Lap p` on the
/// interior and zeroes the boundary layers of the result. Matrix-free: only
/// operator applications, no assembly.
pub fn heat_matvec<F: VertexField>(
    p: &F,
    g: &Grid3,
    tau_dt: f64,
    eps: f64,
    interp: InterpWeighting,
) -> Result<F> {
    let lap = p.laplacian_vertex(g, interp, eps)?;
    p.lin_comb(1.0, &lap, -tau_dt, eps)?.mask_interior(g)
}

/// Outcome of a PCG solve.
#[derive(Clone, Debug)]
pub struct PcgResult<F> {
    pub solution: F,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradient on the interior system
/// `(I - tau*dt*Lap) x = b` with homogeneous boundary layers. The solution,
/// residual and conjugate direction are rounded after every update; the
/// iteration stops when the residual norm drops below `tol` times its
/// initial value, or falls through at `maxiter` with the last iterate.
pub fn pcg<F: VertexField>(
    x0: &F,
    b: &F,
    g: &Grid3,
    tau_dt: f64,
    cfg: &SolverConfig,
    use_precond: bool,
) -> Result<PcgResult<F>> {
    let eps = cfg.eps_round;
    let apply = |p: &F| heat_matvec(p, g, tau_dt, eps, cfg.interp);
    let precond = |r: &F| -> Result<F> {
        if use_precond {
            r.precond_apply(g, tau_dt)
        } else {
            Ok(r.clone())
        }
    };

    let mut u = x0.clone();
    let mut r = b.lin_comb(1.0, &apply(&u)?, -1.0, eps)?;
    let r0 = r.norm();
    if r0 == 0.0 {
        return Ok(PcgResult {
            solution: u,
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rho = r.inner(&z)?;
    let mut res = r0;
    for iter in 1..=cfg.pcg_maxiter {
        let ap = apply(&p)?;
        let denom = p.inner(&ap)?;
        if !(denom.is_finite()) || denom <= 0.0 {
            // Rounding destroyed positive definiteness; hand back the best
            // iterate with the non-converged flag.
            return Ok(PcgResult {
                solution: u,
                iterations: iter,
                residual: res,
                converged: false,
            });
        }
        let alpha = rho / denom;
        u = u.lin_comb(1.0, &p, alpha, eps)?;
        r = r.lin_comb(1.0, &ap, -alpha, eps)?;
        res = r.norm();
        if res < cfg.pcg_tol * r0 {
            return Ok(PcgResult {
                solution: u,
                iterations: iter,
                residual: res,
                converged: true,
            });
        }
        z = precond(&r)?;
        let rho_new = r.inner(&z)?;
        p = z.lin_comb(1.0, &p, rho_new / rho, eps)?;
        rho = rho_new;
    }
    Ok(PcgResult {
        solution: u,
        iterations: cfg.pcg_maxiter,
        residual: res,
        converged: false,
    })
}

/// Time-dependent field source: forcing or boundary data sampled on the
/// full vertex grid at a requested time.
pub type Provider<'a, F> = &'a dyn Fn(f64) -> Result<F>;

/// One explicit Euler step from `t` to `t + dt`: boundary layers are set at
/// `t`, interior vertices get `u + dt*(Lap u + f(t))`, and the result is
/// rounded.
pub fn explicit_step<F: VertexField>(
    u: &F,
    g: &Grid3,
    forcing: Provider<F>,
    boundary: Provider<F>,
    t: f64,
    dt: f64,
    eps: f64,
    interp: InterpWeighting,
) -> Result<F> {
    let ubar = u.set_boundary(g, &boundary(t)?, eps)?;
    let lap = ubar.laplacian_vertex(g, interp, eps)?;
    let resid = lap.lin_comb(1.0, &forcing(t)?, 1.0, eps)?.mask_interior(g)?;
    ubar.lin_comb(1.0, &resid, dt, eps)
}

/// One implicit Euler step from `t` to `t + dt`: solves
/// `(I - dt*Lap) x = u_bc + dt*f(t + dt)` with PCG. The boundary data of
/// the solve follows `cfg.bc_time`; the known boundary values are folded
/// into the right side so the Krylov space stays homogeneous. The returned
/// field carries boundary layers at `t + dt`.
pub fn implicit_step<F: VertexField>(
    u: &F,
    g: &Grid3,
    forcing: Provider<F>,
    boundary: Provider<F>,
    t: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(F, PcgResult<F>)> {
    let eps = cfg.eps_round;
    let t_bc = match cfg.bc_time {
        BcTimeConvention::AsPrinted => t,
        BcTimeConvention::TargetTime => t + dt,
    };
    let gdata = boundary(t_bc)?;
    let ubar = u.set_boundary(g, &gdata, eps)?;
    let b_full = ubar.lin_comb(1.0, &forcing(t + dt)?, dt, eps)?;

    // Boundary lifting: w is the boundary extension (g on the layers, zero
    // inside); its heat image restricted to the interior moves to the right
    // side, so the linear system acts on zero-boundary fields only.
    let w = gdata.lin_comb(1.0, &gdata.mask_interior(g)?, -1.0, eps)?;
    let lap_w = w.laplacian_vertex(g, cfg.interp, eps)?;
    let lift = w.lin_comb(1.0, &lap_w, -dt, eps)?.mask_interior(g)?;
    let b_hom = b_full.mask_interior(g)?.lin_comb(1.0, &lift, -1.0, eps)?;

    let x0 = ubar.mask_interior(g)?;
    let sol = pcg(&x0, &b_hom, g, dt, cfg, true)?;
    let out = sol.solution.set_boundary(g, &boundary(t + dt)?, eps)?;
    Ok((
        out,
        PcgResult {
            solution: sol.solution,
            iterations: sol.iterations,
            residual: sol.residual,
            converged: sol.converged,
        },
    ))
}

/// One Crank-Nicolson step: an explicit half step with boundary data at `t`
/// followed by an implicit half step whose boundary handling follows
/// `cfg.bc_time` from the half time.
pub fn cn_step<F: VertexField>(
    u: &F,
    g: &Grid3,
    forcing: Provider<F>,
    boundary: Provider<F>,
    t: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(F, PcgResult<F>)> {
    let half = explicit_step(u, g, forcing, boundary, t, 0.5 * dt, cfg.eps_round, cfg.interp)?;
    let mut half_cfg = *cfg;
    half_cfg.dt = 0.5 * dt;
    implicit_step(&half, g, forcing, boundary, t + 0.5 * dt, 0.5 * dt, &half_cfg)
}

/// Runs the configured scheme from `t = 0` to `t_final`, recording per-step
/// rank and PCG diagnostics. Aborts with a divergence error when the field
/// stops being finite or its norm exceeds `1e12` times the initial norm.
pub fn run_simulation<F: VertexField>(
    u0: &F,
    g: &Grid3,
    forcing: Provider<F>,
    boundary: Provider<F>,
    cfg: &SolverConfig,
) -> Result<(F, Vec<StepReport>)> {
    cfg.validate()?;
    let n_steps = (cfg.t_final / cfg.dt).round() as usize;
    let norm0 = u0.norm();
    let mut u = u0.clone();
    let mut reports = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let t = step as f64 * cfg.dt;
        let (next, pcg_stats) = match cfg.scheme {
            Scheme::Explicit => (
                explicit_step(&u, g, forcing, boundary, t, cfg.dt, cfg.eps_round, cfg.interp)?,
                None,
            ),
            Scheme::Implicit => {
                let (next, s) = implicit_step(&u, g, forcing, boundary, t, cfg.dt, cfg)?;
                (next, Some(s))
            }
            Scheme::CrankNicolson => {
                let (next, s) = cn_step(&u, g, forcing, boundary, t, cfg.dt, cfg)?;
                (next, Some(s))
            }
        };
        u = next;
        let norm = u.norm();
        if !u.all_finite() || !norm.is_finite() || (norm0 > 0.0 && norm > 1e12 * norm0) {
            return Err(Error::Divergence {
                step,
                time: t + cfg.dt,
                detail: format!("field norm {norm:e} from initial {norm0:e}"),
            });
        }
        reports.push(StepReport {
            step: step + 1,
            time: t + cfg.dt,
            max_rank: u.max_rank(),
            pcg_iterations: pcg_stats.as_ref().map_or(0, |s| s.iterations),
            pcg_residual: pcg_stats.as_ref().map_or(0.0, |s| s.residual),
            pcg_converged: pcg_stats.as_ref().is_none_or(|s| s.converged),
        });
    }
    Ok((u, reports))
}

/// Largest-eigenvalue estimate of a linear map by power iteration with a
/// Rayleigh-quotient readout. Stops when the estimate's relative change
/// drops below `tol` or after `iters` applications.
pub fn power_method_lambda_max<F: VertexField>(
    op: impl Fn(&F) -> Result<F>,
    x0: &F,
    iters: usize,
    tol: f64,
) -> Result<f64> {
    let n0 = x0.norm();
    if n0 == 0.0 {
        return Err(Error::InvalidInput(
            "power method needs a nonzero start vector".into(),
        ));
    }
    let mut x = x0.scaled(1.0 / n0)?;
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = op(&x)?;
        let next = x.inner(&y)?;
        let ny = y.norm();
        if ny == 0.0 {
            return Ok(0.0);
        }
        let done = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            break;
        }
        x = y.scaled(1.0 / ny)?;
    }
    Ok(lambda)
}
