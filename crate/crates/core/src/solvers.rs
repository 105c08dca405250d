//! First-order solvers built on prox oracles, and the problem templates that
//! feed them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{LrinError, Result};
use crate::gauges::ScaledNorm;
use crate::mat_prox::{
    matrix_norm_value, matrix_prox, numerical_rank, singular_values, DEFAULT_RANK_THRESHOLD,
};
use crate::vec_prox::SearchMode;

/// A differentiable term with Lipschitz gradient.
pub trait SmoothTerm {
    fn value(&self, x: &DMatrix<f64>) -> f64;
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

/// `(point, step) -> prox_{step * h}(point)` for some closed convex `h`.
pub trait ProxOracle {
    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>>;
    /// `h(x)`; `f64::INFINITY` outside the domain of an indicator.
    fn value(&self, x: &DMatrix<f64>) -> Result<f64>;
    fn is_indicator(&self) -> bool {
        false
    }
}

/// The zero function.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroProx;

impl ProxOracle for ZeroProx {
    fn prox(&self, x: &DMatrix<f64>, _step: f64) -> Result<DMatrix<f64>> {
        Ok(x.clone())
    }

    fn value(&self, _x: &DMatrix<f64>) -> Result<f64> {
        Ok(0.0)
    }
}

/// A scaled low-rank inducing norm on matrices.
#[derive(Debug, Clone, Copy)]
pub struct NormProx {
    pub norm: ScaledNorm,
    pub mode: SearchMode,
}

impl ProxOracle for NormProx {
    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        Ok(matrix_prox(x, &self.norm.scaled(step)?, self.mode)?.x)
    }

    fn value(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(self.norm.apply(matrix_norm_value(x, &self.norm.spec)?))
    }
}

/// `0.5 ||X - target||_F^2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub target: DMatrix<f64>,
}

impl SmoothTerm for Quadratic {
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * (x - &self.target).norm_squared()
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x - &self.target
    }
}

impl ProxOracle for Quadratic {
    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        Ok((x + &self.target * step) / (1.0 + step))
    }

    fn value(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(SmoothTerm::value(self, x))
    }
}

/// `0.5 ||A X - B||_F^2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub design: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
}

impl LeastSquares {
    pub fn new(design: DMatrix<f64>, rhs: DMatrix<f64>) -> Result<Self> {
        if design.nrows() != rhs.nrows() {
            return Err(LrinError::Shape(format!(
                "design has {} rows, rhs has {}",
                design.nrows(),
                rhs.nrows()
            )));
        }
        Ok(LeastSquares { design, rhs })
    }

    /// `||A||_2^2`, the Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> Result<f64> {
        let s = singular_values(&self.design)?;
        Ok(s[0] * s[0])
    }

    pub fn unknown_shape(&self) -> (usize, usize) {
        (self.design.ncols(), self.rhs.ncols())
    }
}

impl SmoothTerm for LeastSquares {
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * (&self.design * x - &self.rhs).norm_squared()
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.design.transpose() * (&self.design * x - &self.rhs)
    }
}

impl ProxOracle for LeastSquares {
    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        let at = self.design.transpose();
        let n = self.design.ncols();
        let lhs = DMatrix::<f64>::identity(n, n) + &at * &self.design * step;
        let rhs = x + at * &self.rhs * step;
        let chol = lhs
            .cholesky()
            .ok_or_else(|| LrinError::InvalidParameter("I + step A^T A not positive".into()))?;
        Ok(chol.solve(&rhs))
    }

    fn value(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(SmoothTerm::value(self, x))
    }
}

/// Indicator of `{X : X_ij = M_ij for (i, j) in mask}`; `value` accepts
/// violations up to `1e-9 * max(1, ||M||_F)`.
#[derive(Debug, Clone)]
pub struct ObservationProjection {
    pub data: DMatrix<f64>,
    pub mask: Vec<(usize, usize)>,
}

impl ObservationProjection {
    fn max_violation(&self, x: &DMatrix<f64>) -> f64 {
        self.mask
            .iter()
            .map(|&(i, j)| (x[(i, j)] - self.data[(i, j)]).abs())
            .fold(0.0, f64::max)
    }
}

impl ProxOracle for ObservationProjection {
    fn prox(&self, x: &DMatrix<f64>, _step: f64) -> Result<DMatrix<f64>> {
        let mut out = x.clone();
        for &(i, j) in &self.mask {
            out[(i, j)] = self.data[(i, j)];
        }
        Ok(out)
    }

    fn value(&self, x: &DMatrix<f64>) -> Result<f64> {
        // Same relative scaling as the Douglas-Rachford stopping rule.
        let scale = self.data.norm().max(1.0);
        Ok(if self.max_violation(x) <= 1e-9 * scale {
            0.0
        } else {
            f64::INFINITY
        })
    }

    fn is_indicator(&self) -> bool {
        true
    }
}

/// `0.5 ||X - target||_F^2` restricted to the box `lo <= X_ij <= hi`.
#[derive(Debug, Clone)]
pub struct BoxedQuadratic {
    pub target: DMatrix<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ProxOracle for BoxedQuadratic {
    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        Ok(x.zip_map(&self.target, |xi, ti| {
            ((xi + step * ti) / (1.0 + step)).clamp(self.lo, self.hi)
        }))
    }

    fn value(&self, x: &DMatrix<f64>) -> Result<f64> {
        let inside = x.iter().all(|&v| v >= self.lo && v <= self.hi);
        Ok(if inside {
            0.5 * (x - &self.target).norm_squared()
        } else {
            f64::INFINITY
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Nesterov momentum with adaptive restart in proximal gradient.
    pub accelerate: bool,
    /// Douglas-Rachford step.
    pub gamma: f64,
    /// Douglas-Rachford relaxation, in (0, 2).
    pub alpha: f64,
    pub mode: SearchMode,
    pub rank_threshold: f64,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 100_000,
            accelerate: false,
            gamma: 1.0,
            alpha: 1.0,
            mode: SearchMode::BinarySearch,
            rank_threshold: DEFAULT_RANK_THRESHOLD,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub objective: f64,
    pub fixed_point_residual: f64,
    pub iterations: usize,
    pub numerical_rank: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
    /// Per-iteration `(objective, residual)` when tracing was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

const RESIDUAL_WINDOW: usize = 50;

/// Warn when the residual grew across the trailing window.
fn window_warning(history: &[f64]) -> Option<String> {
    if history.len() <= RESIDUAL_WINDOW {
        return None;
    }
    let last = history[history.len() - 1];
    let first = history[history.len() - 1 - RESIDUAL_WINDOW];
    (last > first).then(|| {
        format!(
            "residual increased over the last {RESIDUAL_WINDOW} iterations ({first:e} -> {last:e})"
        )
    })
}

fn rank_of(x: &DMatrix<f64>, threshold: f64) -> Result<usize> {
    Ok(numerical_rank(&singular_values(x)?, threshold))
}

fn check_config(cfg: &SolverConfig) -> Result<()> {
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(LrinError::InvalidParameter(
            "solver needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    Ok(())
}

/// Proximal gradient with step `1 / lipschitz`, optionally accelerated.
///
/// Stops when `||x_{k+1} - x_k|| / max(1, ||x_k||) <= cfg.tol`. The reported
/// residual is the same quantity for the composite map at the returned point.
pub fn prox_gradient(
    f: &dyn SmoothTerm,
    lipschitz: f64,
    g: &dyn ProxOracle,
    x0: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverReport)> {
    check_config(cfg)?;
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(LrinError::InvalidParameter(format!(
            "Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    let start = Instant::now();
    let step = 1.0 / lipschitz;
    let forward_backward =
        |y: &DMatrix<f64>| -> Result<DMatrix<f64>> { g.prox(&(y - f.gradient(y) * step), step) };
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut momentum = 1.0f64;
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let next = forward_backward(&y)?;
        let diff = &next - &x;
        let res = diff.norm() / x.norm().max(1.0);
        if cfg.accelerate {
            // Restart when the momentum direction opposes the step.
            if (&y - &next).dot(&diff) > 0.0 {
                momentum = 1.0;
                y = next.clone();
            } else {
                let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                y = &next + diff * ((momentum - 1.0) / m_next);
                momentum = m_next;
            }
        } else {
            y = next.clone();
        }
        x = next;
        history.push(res);
        if let Some(t) = trace.as_mut() {
            t.push((f.value(&x) + g.value(&x)?, res));
        }
        if res <= cfg.tol {
            converged = true;
            break;
        }
    }
    let check = forward_backward(&x)?;
    let fixed_point_residual = (&x - check).norm() / x.norm().max(1.0);
    let report = SolverReport {
        objective: f.value(&x) + g.value(&x)?,
        fixed_point_residual,
        iterations,
        numerical_rank: rank_of(&x, cfg.rank_threshold)?,
        converged,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        trace,
        warnings: window_warning(&history).into_iter().collect(),
    };
    Ok((x, report))
}

/// Douglas-Rachford splitting for `min A(x) + B(x)`:
///
/// ```text
/// x = prox_{gamma A}(z)
/// y = prox_{gamma B}(2x - z)
/// z = z + alpha (y - x)
/// ```
///
/// Stops when `||y - x|| <= cfg.tol * max(1, ||x||)`; returns
/// `prox_{gamma A}(z)` at the final `z`. A residual exceeding `1e6` times the
/// first one aborts with an error.
pub fn douglas_rachford(
    prox_a: &dyn ProxOracle,
    prox_b: &dyn ProxOracle,
    z0: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverReport)> {
    let (x, _, report) = douglas_rachford_pair(prox_a, prox_b, z0, cfg)?;
    Ok((x, report))
}

/// Douglas-Rachford returning both final points `x = prox_{gamma A}(z)` and
/// `y = prox_{gamma B}(2x - z)`; the report describes `x`.
fn douglas_rachford_pair(
    prox_a: &dyn ProxOracle,
    prox_b: &dyn ProxOracle,
    z0: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>, SolverReport)> {
    check_config(cfg)?;
    let (gamma, alpha) = (cfg.gamma, cfg.alpha);
    if !(gamma > 0.0) {
        return Err(LrinError::InvalidParameter(format!(
            "gamma must be > 0, got {gamma}"
        )));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(LrinError::InvalidParameter(format!(
            "alpha must lie in (0, 2), got {alpha}"
        )));
    }
    let start = Instant::now();
    let mut z = z0.clone();
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut history = Vec::new();
    let mut first_residual = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let x = prox_a.prox(&z, gamma)?;
        let y = prox_b.prox(&(&x * 2.0 - &z), gamma)?;
        let diff = &y - &x;
        let res = diff.norm();
        let initial = *first_residual.get_or_insert(res);
        if res > 1e6 * initial.max(f64::MIN_POSITIVE) || !res.is_finite() {
            return Err(LrinError::Diverged(format!(
                "Douglas-Rachford residual {res:e} at iteration {iterations} (initial {initial:e})"
            )));
        }
        z += diff * alpha;
        let rel = res / x.norm().max(1.0);
        history.push(rel);
        if let Some(t) = trace.as_mut() {
            t.push((prox_a.value(&x)? + prox_b.value(&x)?, rel));
        }
        if res <= cfg.tol * x.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    let x = prox_a.prox(&z, gamma)?;
    let y = prox_b.prox(&(&x * 2.0 - &z), gamma)?;
    let report = SolverReport {
        objective: prox_a.value(&x)? + prox_b.value(&x)?,
        fixed_point_residual: (&y - &x).norm() / x.norm().max(1.0),
        iterations,
        numerical_rank: rank_of(&x, cfg.rank_threshold)?,
        converged,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        trace,
        warnings: window_warning(&history).into_iter().collect(),
    };
    Ok((x, y, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    /// `min f(X)` subject to `X_ij = M_ij` on the mask.
    MatrixCompletion,
    /// `min 0.5 ||X - M||_F^2 + f(X)` subject to `lo <= X_ij <= hi`.
    BoxConstrainedLowRankApprox,
    /// `min 0.5 ||A X - M||_F^2 + f(X)`.
    RegularizedLeastSquares,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub data: DMatrix<f64>,
    /// Observed entries, zero-based `(row, col)`.
    pub mask: Vec<(usize, usize)>,
    pub norm: ScaledNorm,
    pub bounds: Option<(f64, f64)>,
    /// Design matrix `A` of the least-squares template.
    pub design: Option<DMatrix<f64>>,
}

impl ProblemSpec {
    pub fn completion(data: DMatrix<f64>, mask: Vec<(usize, usize)>, norm: ScaledNorm) -> Self {
        ProblemSpec {
            kind: ProblemKind::MatrixCompletion,
            data,
            mask,
            norm,
            bounds: None,
            design: None,
        }
    }

    pub fn least_squares(design: DMatrix<f64>, rhs: DMatrix<f64>, norm: ScaledNorm) -> Self {
        ProblemSpec {
            kind: ProblemKind::RegularizedLeastSquares,
            data: rhs,
            mask: Vec::new(),
            norm,
            bounds: None,
            design: Some(design),
        }
    }

    pub fn boxed(data: DMatrix<f64>, lo: f64, hi: f64, norm: ScaledNorm) -> Self {
        ProblemSpec {
            kind: ProblemKind::BoxConstrainedLowRankApprox,
            data,
            mask: Vec::new(),
            norm,
            bounds: Some((lo, hi)),
            design: None,
        }
    }

    /// Shape of the unknown matrix.
    pub fn unknown_shape(&self) -> (usize, usize) {
        match &self.design {
            Some(a) if self.kind == ProblemKind::RegularizedLeastSquares => {
                (a.ncols(), self.data.ncols())
            }
            _ => self.data.shape(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = self.data.shape();
        if let Some(&(i, j)) = self.mask.iter().find(|&&(i, j)| i >= n || j >= m) {
            return Err(LrinError::Shape(format!(
                "mask entry ({}, {}) outside a {n}x{m} matrix",
                i + 1,
                j + 1
            )));
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo <= hi) {
                return Err(LrinError::InvalidParameter(format!(
                    "box bounds {lo} > {hi}"
                )));
            }
        }
        let (un, um) = self.unknown_shape();
        self.norm.spec.check_dim(un.min(um))?;
        match self.kind {
            ProblemKind::MatrixCompletion if self.mask.is_empty() => Err(
                LrinError::InvalidParameter("matrix completion needs observed entries".into()),
            ),
            ProblemKind::RegularizedLeastSquares => match &self.design {
                Some(a) if a.nrows() == n => Ok(()),
                Some(a) => Err(LrinError::Shape(format!(
                    "design has {} rows, data has {n}",
                    a.nrows()
                ))),
                None => Err(LrinError::InvalidParameter(
                    "least squares needs a design matrix".into(),
                )),
            },
            ProblemKind::BoxConstrainedLowRankApprox if self.bounds.is_none() => Err(
                LrinError::InvalidParameter("box-constrained problem needs bounds".into()),
            ),
            _ => Ok(()),
        }
    }
}

fn dedup_mask(mask: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut m = mask.to_vec();
    m.sort_unstable();
    m.dedup();
    m
}

/// Matrix completion by Douglas-Rachford: projection onto the observations
/// and the prox of the norm term.
pub fn solve_matrix_completion(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverReport)> {
    spec.validate()?;
    if spec.kind != ProblemKind::MatrixCompletion {
        return Err(LrinError::InvalidParameter(
            "not a completion problem".into(),
        ));
    }
    let (n, m) = spec.data.shape();
    let mask = dedup_mask(&spec.mask);
    let observe = ObservationProjection {
        data: spec.data.clone(),
        mask,
    };
    let reg = NormProx {
        norm: spec.norm,
        mode: cfg.mode,
    };
    if observe.mask.len() == n * m {
        // The feasible set is a single point.
        let start = Instant::now();
        let x = spec.data.clone();
        let report = SolverReport {
            objective: reg.value(&x)?,
            fixed_point_residual: 0.0,
            iterations: 1,
            numerical_rank: rank_of(&x, cfg.rank_threshold)?,
            converged: true,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            trace: cfg
                .record_trace
                .then(|| vec![(reg.value(&x).unwrap_or(f64::NAN), 0.0)]),
            warnings: Vec::new(),
        };
        return Ok((x, report));
    }
    let z0 = observe.prox(&DMatrix::zeros(n, m), 1.0)?;
    let (x, y, mut report) = douglas_rachford_pair(&observe, &reg, &z0, cfg)?;
    // The regularizer's output carries the low-rank structure exactly; keep
    // it whenever it already agrees with the observations.
    if observe.value(&y)?.is_finite() {
        report.objective = reg.value(&y)?;
        report.numerical_rank = rank_of(&y, cfg.rank_threshold)?;
        return Ok((y, report));
    }
    Ok((x, report))
}

/// Regularized least squares by proximal gradient.
pub fn solve_least_squares_pg(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverReport)> {
    let (ls, reg) = least_squares_parts(spec, cfg)?;
    let (n, m) = spec.unknown_shape();
    prox_gradient(&ls, ls.lipschitz()?, &reg, &DMatrix::zeros(n, m), cfg)
}

/// Regularized least squares by Douglas-Rachford.
pub fn solve_least_squares_dr(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverReport)> {
    let (ls, reg) = least_squares_parts(spec, cfg)?;
    let (n, m) = spec.unknown_shape();
    douglas_rachford(&ls, &reg, &DMatrix::zeros(n, m), cfg)
}

fn least_squares_parts(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<(LeastSquares, NormProx)> {
    spec.validate()?;
    if spec.kind != ProblemKind::RegularizedLeastSquares {
        return Err(LrinError::InvalidParameter(
            "not a least-squares problem".into(),
        ));
    }
    let design = spec.design.clone().expect("validated");
    Ok((
        LeastSquares::new(design, spec.data.clone())?,
        NormProx {
            norm: spec.norm,
            mode: cfg.mode,
        },
    ))
}

/// Box-constrained low-rank approximation by Douglas-Rachford.
pub fn solve_box_constrained(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverReport)> {
    spec.validate()?;
    let (lo, hi) = match (spec.kind, spec.bounds) {
        (ProblemKind::BoxConstrainedLowRankApprox, Some(b)) => b,
        _ => {
            return Err(LrinError::InvalidParameter(
                "not a box-constrained problem".into(),
            ))
        }
    };
    let data_term = BoxedQuadratic {
        target: spec.data.clone(),
        lo,
        hi,
    };
    let reg = NormProx {
        norm: spec.norm,
        mode: cfg.mode,
    };
    let z0 = spec.data.map(|v| v.clamp(lo, hi));
    douglas_rachford(&data_term, &reg, &z0, cfg)
}
