//! Vector proximal mappings and dual-ball projections.
//!
//! All four primitives share one structure in sorted-magnitude space. With
//! `a` the sorted magnitudes of the input, the result `w` splits into
//!
//! ```text
//!   1 ..= k1        shrunk top      a_i / (1 + mu)   (l2)   or  a_i - lambda (l1)
//!   k1+1 ..= k2     plateau         t
//!   k2+1 ..= q      untouched tail  a_i
//! ```
//!
//! with `0 <= k1 < r <= k2 <= q`. For a fixed pair `(k1, k2)` the scalars
//! (`mu` or `lambda`, and `t`) follow from prefix sums: in closed form for
//! the l1 gauge and for the squared l2 gauge, and from a monotone Newton
//! iteration for the l2 ball radius equation. A pair is accepted when the
//! region inequalities hold.
//!
//! [`SearchMode::Enumerate`] evaluates all `r * (q - r + 1)` pairs.
//! [`SearchMode::BinarySearch`] uses two monotone predicates: for fixed `k1`
//! the tail test `a(k2+1) <= t` is false then true in `k2`, and the plateau
//! test `a(k1+1) <= top level` is false then true in `k1` once `k2` is chosen.
//!
//! Proxes of the unsquared norms follow from the projections by Moreau
//! decomposition, `prox_{gN}(z) = z - P_{g B}(z)` with `B` the unit ball of
//! the truncated gauge. Proxes of `(g/2) N^2` use the conjugate
//! `(1/(2g)) G^2` of the squared truncated gauge `G`, whose prox has the
//! same three-region form with a fixed multiplier.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{LrinError, Result};
use crate::gauges::{truncated_gauge, Gauge, MagnitudeProfile, NormFlavor, ScaledNorm};

/// Relative tolerance of the region inequalities.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Smallest multiplier passed to a prox; smaller values are raised to it.
pub const GAMMA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SearchMode {
    /// Exhaustive sweep over all candidate pairs. Reference mode.
    Enumerate,
    /// Nested binary search over the two integer parameters.
    #[default]
    BinarySearch,
}

impl FromStr for SearchMode {
    type Err = LrinError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "enumerate" | "enum" => Ok(SearchMode::Enumerate),
            "binary" | "binarysearch" | "binary-search" => Ok(SearchMode::BinarySearch),
            other => Err(LrinError::Parse(format!("unknown search mode '{other}'"))),
        }
    }
}

/// One `(k1, k2)` candidate with its scalars.
///
/// `mu` is the multiplier of the l2 family (top scaled by `1 / (1 + mu)`) or
/// the threshold `lambda` of the l1 family. `objective` is `0.5 * ||w - a||^2`
/// of the sorted result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSolution {
    pub k1: usize,
    pub k2: usize,
    pub mu: f64,
    pub t: f64,
    pub feasible: bool,
    pub objective: f64,
}

/// Result of a dual-ball projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutput {
    /// Projection in the original coordinate order.
    pub w: Vec<f64>,
    pub candidate: CandidateSolution,
    /// Number of `(k1, k2)` scalar solves performed.
    pub candidate_solves: usize,
    /// Set when the binary search had to fall back to enumeration.
    pub fallback: bool,
}

/// Result of a vector prox.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxOutput {
    pub x: Vec<f64>,
    /// `z - x`: the dual-ball projection (unsquared) or the prox of the
    /// conjugate (squared).
    pub dual: Vec<f64>,
    pub candidate: CandidateSolution,
    pub candidate_solves: usize,
    pub fallback: bool,
}

/// The per-problem part of the search.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    /// Projection onto `{ sqrt(S2 of top r) <= c }`.
    L2Ball { c: f64 },
    /// Prox of `(mu/2) * (truncated l2)^2`.
    L2Sq { mu: f64 },
    /// Projection onto `{ sum of top r magnitudes <= c }`.
    L1Ball { c: f64 },
    /// Prox of `(1/(2 gamma)) * (truncated l1)^2`.
    L1Sq { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Eval {
    k1: usize,
    k2: usize,
    mult: f64,
    t: f64,
}

impl Kernel {
    fn is_l2(self) -> bool {
        matches!(self, Kernel::L2Ball { .. } | Kernel::L2Sq { .. })
    }

    fn evaluate(self, p: &MagnitudeProfile, r: usize, k1: usize, k2: usize) -> Eval {
        let q = p.len();
        let plateau_sum = p.s1(k2) - p.s1(k1);
        let m = (k2 - k1) as f64;
        let pr = (r - k1) as f64;
        let (mult, t) = match self {
            Kernel::L2Ball { c } => {
                let mu = solve_l2_multiplier(p.s2(k1), plateau_sum, m, pr, c);
                (mu, plateau_sum / (m + mu * pr))
            }
            Kernel::L2Sq { mu } => (mu, plateau_sum / (m + mu * pr)),
            Kernel::L1Ball { c } => {
                let head = p.s1(k1);
                let kf = k1 as f64;
                let mut t = (plateau_sum * kf + pr * (c - head)) / (m * kf + pr * pr);
                let mut lambda = (plateau_sum - m * t) / pr;
                if k2 == q && t < 0.0 && k1 >= 1 {
                    // Plateau pinned at zero with slack in the subgradient sum.
                    t = 0.0;
                    lambda = (head - c) / kf;
                }
                if lambda < 0.0 {
                    lambda = 0.0;
                    t = plateau_sum / m;
                }
                (lambda, t)
            }
            Kernel::L1Sq { gamma } => {
                let head = p.s1(k1);
                let kk = k1 as f64 + gamma;
                let mut t = (kk * plateau_sum - pr * head) / (pr * pr + kk * m);
                let mut lambda = (plateau_sum - m * t) / pr;
                if k2 == q && t < 0.0 {
                    t = 0.0;
                    lambda = head / kk;
                }
                (lambda, t)
            }
        };
        Eval { k1, k2, mult, t }
    }

    /// Magnitude at which the shrunk top meets the plateau.
    fn top_level(self, e: &Eval) -> f64 {
        if self.is_l2() {
            (1.0 + e.mult) * e.t
        } else {
            e.t + e.mult
        }
    }

    /// `a(k2 + 1) <= t`: monotone in `k2` for fixed `k1`.
    fn tail_ok(self, p: &MagnitudeProfile, e: &Eval, tol: f64) -> bool {
        p.a(e.k2 + 1) <= e.t + tol
    }

    /// `a(k1 + 1) <= top level`: monotone in `k1`.
    fn plateau_ok(self, p: &MagnitudeProfile, e: &Eval, tol: f64) -> bool {
        p.a(e.k1 + 1) <= self.top_level(e) + tol
    }

    /// Largest violation of the acceptance conditions, 0 when feasible.
    fn violation(self, p: &MagnitudeProfile, r: usize, e: &Eval) -> f64 {
        let level = self.top_level(e);
        let mut v: f64 = 0.0;
        if e.k1 > 0 {
            v = v.max(level - p.a(e.k1));
        }
        v = v.max(p.a(e.k1 + 1) - level);
        v = v.max(e.t - p.a(e.k2));
        v = v.max(p.a(e.k2 + 1) - e.t);
        v = v.max(-e.t).max(-e.mult);
        let pr = (r - e.k1) as f64;
        let plateau_sum = p.s1(e.k2) - p.s1(e.k1);
        match self {
            Kernel::L2Ball { c } => {
                let head = p.s2(e.k1) / ((1.0 + e.mult) * (1.0 + e.mult));
                let g = (head + pr * e.t * e.t).sqrt();
                v = v.max((g - c).abs() / c.max(1.0));
            }
            Kernel::L1Ball { c } => {
                let g = p.s1(e.k1) - e.k1 as f64 * e.mult + pr * e.t;
                v = v.max((g - c).abs() / c.max(1.0));
                v = v.max(plateau_sum - pr * e.mult - (e.k2 - e.k1) as f64 * e.t);
            }
            Kernel::L1Sq { .. } => {
                v = v.max(plateau_sum - pr * e.mult - (e.k2 - e.k1) as f64 * e.t);
            }
            Kernel::L2Sq { .. } => {}
        }
        v
    }

    /// Sorted result for an accepted candidate.
    fn assemble(self, p: &MagnitudeProfile, e: &Eval) -> Vec<f64> {
        let a = p.magnitudes();
        let mut w = Vec::with_capacity(a.len());
        for (i, &ai) in a.iter().enumerate() {
            let idx = i + 1;
            let v = if idx <= e.k1 {
                if self.is_l2() {
                    ai / (1.0 + e.mult)
                } else {
                    ai - e.mult
                }
            } else if idx <= e.k2 {
                e.t
            } else {
                ai
            };
            w.push(v);
        }
        w
    }
}

/// Multiplier `mu >= 0` of the l2 ball candidate `(k1, k2)`:
/// the root of `head / (1+mu)^2 + pr * (plateau / (m + mu pr))^2 = c^2`,
/// clamped at 0.
///
/// Newton runs on `psi(mu) = E(mu)^(-1/2)`, which is concave and increasing,
/// so the iterates approach the root from the left without overshoot.
fn solve_l2_multiplier(head: f64, plateau: f64, m: f64, pr: f64, c: f64) -> f64 {
    let energy = |mu: f64| {
        let s = 1.0 + mu;
        let d = m + mu * pr;
        head / (s * s) + pr * plateau * plateau / (d * d)
    };
    let target = 1.0 / c;
    let e0 = energy(0.0);
    if e0 <= c * c {
        return 0.0;
    }
    let mut mu = 0.0f64;
    for _ in 0..200 {
        let s = 1.0 + mu;
        let d = m + mu * pr;
        let e = energy(mu);
        let psi = 1.0 / e.sqrt();
        if psi >= target {
            break;
        }
        let de = -2.0 * head / (s * s * s) - 2.0 * pr * pr * plateau * plateau / (d * d * d);
        let dpsi = -0.5 * de / (e * e.sqrt());
        if !(dpsi > 0.0) {
            break;
        }
        let step = (target - psi) / dpsi;
        let next = mu + step;
        if !(next > mu) {
            break;
        }
        mu = next;
        if step <= 1e-16 * (1.0 + mu) {
            break;
        }
    }
    mu
}

struct Search<'a> {
    kernel: Kernel,
    p: &'a MagnitudeProfile,
    r: usize,
    tol: f64,
    memo: Vec<Eval>,
}

impl<'a> Search<'a> {
    fn new(kernel: Kernel, p: &'a MagnitudeProfile, r: usize) -> Self {
        Search {
            kernel,
            p,
            r,
            tol: FEASIBILITY_TOL * p.scale(),
            memo: Vec::new(),
        }
    }

    fn eval(&mut self, k1: usize, k2: usize) -> Eval {
        if let Some(e) = self.memo.iter().find(|e| e.k1 == k1 && e.k2 == k2) {
            return *e;
        }
        let e = self.kernel.evaluate(self.p, self.r, k1, k2);
        self.memo.push(e);
        e
    }

    fn solves(&self) -> usize {
        self.memo.len()
    }

    fn feasible(&self, e: &Eval) -> bool {
        self.kernel.violation(self.p, self.r, e) <= self.tol
    }

    /// Lexicographically smallest feasible pair; the least violating pair if
    /// rounding leaves none.
    fn enumerate(&mut self) -> Eval {
        let q = self.p.len();
        let mut best: Option<(f64, Eval)> = None;
        let mut accepted: Option<Eval> = None;
        for k1 in 0..self.r {
            for k2 in self.r..=q {
                let e = self.eval(k1, k2);
                let v = self.kernel.violation(self.p, self.r, &e);
                if v <= self.tol {
                    match accepted {
                        None => accepted = Some(e),
                        Some(first) => self.debug_same_point(&first, &e),
                    }
                }
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, e));
                }
            }
        }
        accepted.unwrap_or_else(|| best.expect("at least one candidate").1)
    }

    // Several pairs can pass only at ties, where they describe the same point.
    fn debug_same_point(&self, first: &Eval, other: &Eval) {
        if cfg!(debug_assertions) {
            let a = self.kernel.assemble(self.p, first);
            let b = self.kernel.assemble(self.p, other);
            let gap = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            debug_assert!(
                gap <= 1e-6 * self.p.scale(),
                "two accepted candidates disagree: {first:?} vs {other:?} (gap {gap})"
            );
        }
    }

    fn best_k2(&mut self, k1: usize) -> Eval {
        let (mut lo, mut hi) = (self.r, self.p.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let e = self.eval(k1, mid);
            if self.kernel.tail_ok(self.p, &e, self.tol) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.eval(k1, lo)
    }

    /// Returns the pair and whether enumeration was needed.
    fn binary(&mut self) -> (Eval, bool) {
        let (mut lo, mut hi) = (0usize, self.r - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let e = self.best_k2(mid);
            if self.kernel.plateau_ok(self.p, &e, self.tol) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let e = self.best_k2(lo);
        if self.feasible(&e) {
            (e, false)
        } else {
            (self.enumerate(), true)
        }
    }

    fn run(mut self, mode: SearchMode) -> SortedResult {
        let (e, fallback) = match mode {
            SearchMode::Enumerate => (self.enumerate(), false),
            SearchMode::BinarySearch => self.binary(),
        };
        let w = self.kernel.assemble(self.p, &e);
        let objective = 0.5
            * w.iter()
                .zip(self.p.magnitudes())
                .map(|(wi, ai)| (wi - ai) * (wi - ai))
                .sum::<f64>();
        SortedResult {
            w,
            candidate: CandidateSolution {
                k1: e.k1,
                k2: e.k2,
                mu: e.mult,
                t: e.t,
                feasible: self.feasible(&e),
                objective,
            },
            solves: self.solves(),
            fallback,
        }
    }
}

struct SortedResult {
    w: Vec<f64>,
    candidate: CandidateSolution,
    solves: usize,
    fallback: bool,
}

fn project_sorted(
    p: &MagnitudeProfile,
    gauge: Gauge,
    r: usize,
    c: f64,
    mode: SearchMode,
) -> Result<SortedResult> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(LrinError::InvalidParameter(format!(
            "ball radius must be finite and non-negative, got {c}"
        )));
    }
    let g = truncated_gauge(p, gauge, r)?;
    let q = p.len();
    if g <= c {
        // Inside the ball: the single candidate with nothing shrunk.
        return Ok(SortedResult {
            w: p.magnitudes().to_vec(),
            candidate: CandidateSolution {
                k1: r,
                k2: r,
                mu: 0.0,
                t: p.a(r + 1),
                feasible: true,
                objective: 0.0,
            },
            solves: 1,
            fallback: false,
        });
    }
    if c == 0.0 {
        // The ball is {0}: a positive top-r gauge vanishes only at zero.
        let objective = 0.5 * p.s2(q);
        return Ok(SortedResult {
            w: vec![0.0; q],
            candidate: CandidateSolution {
                k1: 0,
                k2: q,
                mu: 0.0,
                t: 0.0,
                feasible: true,
                objective,
            },
            solves: 1,
            fallback: false,
        });
    }
    let kernel = match gauge {
        Gauge::L2 => Kernel::L2Ball { c },
        Gauge::L1 => Kernel::L1Ball { c },
    };
    Ok(Search::new(kernel, p, r).run(mode))
}

fn wrap_projection(p: &MagnitudeProfile, res: SortedResult) -> ProjectionOutput {
    ProjectionOutput {
        w: p.unsort(&res.w),
        candidate: res.candidate,
        candidate_solves: res.solves,
        fallback: res.fallback,
    }
}

/// Euclidean projection onto `{ w : sum of the r largest w_i^2 <= c^2 }`.
pub fn project_truncated_l2_ball(
    z: &[f64],
    r: usize,
    c: f64,
    mode: SearchMode,
) -> Result<ProjectionOutput> {
    let p = MagnitudeProfile::new(z)?;
    let res = project_sorted(&p, Gauge::L2, r, c, mode)?;
    Ok(wrap_projection(&p, res))
}

/// Euclidean projection onto `{ w : sum of the r largest |w_i| <= c }`.
pub fn project_kyfan_l1_ball(
    z: &[f64],
    r: usize,
    c: f64,
    mode: SearchMode,
) -> Result<ProjectionOutput> {
    let p = MagnitudeProfile::new(z)?;
    let res = project_sorted(&p, Gauge::L1, r, c, mode)?;
    Ok(wrap_projection(&p, res))
}

/// Prox of `f` at `z` from a precomputed profile.
pub fn prox_profile(p: &MagnitudeProfile, f: &ScaledNorm, mode: SearchMode) -> Result<ProxOutput> {
    let r = f.spec.r;
    f.spec.check_dim(p.len())?;
    let gamma = f.gamma.max(GAMMA_FLOOR);
    let res = match (f.spec.flavor, f.squared) {
        (flavor, false) => project_sorted(p, flavor.dual_gauge(), r, gamma, mode)?,
        (NormFlavor::FrobeniusR, true) => {
            Search::new(Kernel::L2Sq { mu: 1.0 / gamma }, p, r).run(mode)
        }
        (NormFlavor::SpectralR, true) => Search::new(Kernel::L1Sq { gamma }, p, r).run(mode),
    };
    // Sorted x is non-increasing and non-negative in exact arithmetic; the
    // running minimum only removes rounding-level inversions at ties.
    let mut xs: Vec<f64> = p
        .magnitudes()
        .iter()
        .zip(&res.w)
        .map(|(a, w)| (a - w).max(0.0))
        .collect();
    for i in 1..xs.len() {
        xs[i] = xs[i].min(xs[i - 1]);
    }
    let x = p.unsort(&xs);
    let dual = p.unsort(&res.w);
    Ok(ProxOutput {
        x,
        dual,
        candidate: res.candidate,
        candidate_solves: res.solves,
        fallback: res.fallback,
    })
}

/// Prox of `f` at `z`: `argmin_x 0.5 ||x - z||^2 + f(x)`.
pub fn prox_vec(z: &[f64], f: &ScaledNorm, mode: SearchMode) -> Result<ProxOutput> {
    prox_profile(&MagnitudeProfile::new(z)?, f, mode)
}

/// Upper bound on candidate solves in enumeration mode: `r (q - r) + q + 1`.
pub fn enumerate_solve_bound(q: usize, r: usize) -> usize {
    r * (q - r) + q + 1
}

/// Upper bound on candidate solves in binary search mode:
/// `4 (1 + log2(r + 1)) (1 + log2(q - r + 1))`.
pub fn binary_solve_bound(q: usize, r: usize) -> f64 {
    4.0 * (1.0 + ((r + 1) as f64).log2()) * (1.0 + ((q - r + 1) as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauges::NormSpec;

    const MODES: [SearchMode; 2] = [SearchMode::Enumerate, SearchMode::BinarySearch];

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn f(flavor: NormFlavor, r: usize, gamma: f64, squared: bool) -> ScaledNorm {
        ScaledNorm::new(NormSpec::new(flavor, r).unwrap(), gamma, squared).unwrap()
    }

    #[test]
    fn l2_ball_examples() {
        for mode in MODES {
            let out = project_truncated_l2_ball(&[2.0, 0.0], 1, 1.0, mode).unwrap();
            assert_vec_close(&out.w, &[1.0, 0.0], 1e-15);
            let out = project_truncated_l2_ball(&[3.0, 4.0, 0.0], 2, 1.0, mode).unwrap();
            assert_vec_close(&out.w, &[0.6, 0.8, 0.0], 1e-14);
            let out = project_truncated_l2_ball(&[1.0, 1.0, 1.0], 2, 1.0, mode).unwrap();
            let h = 0.5f64.sqrt();
            assert_vec_close(&out.w, &[h, h, h], 1e-14);
            assert!(out.candidate.feasible);
        }
    }

    #[test]
    fn kyfan_ball_examples() {
        for mode in MODES {
            let out = project_kyfan_l1_ball(&[3.0, 1.0], 2, 1.0, mode).unwrap();
            assert_vec_close(&out.w, &[1.0, 0.0], 1e-15);
            let out = project_kyfan_l1_ball(&[3.0, 0.5], 1, 1.0, mode).unwrap();
            assert_vec_close(&out.w, &[1.0, 0.5], 1e-15);
            let out = project_kyfan_l1_ball(&[2.0, 2.0, 0.0], 2, 2.0, mode).unwrap();
            assert_vec_close(&out.w, &[1.0, 1.0, 0.0], 1e-15);
        }
    }

    #[test]
    fn zero_radius_projects_to_origin() {
        for mode in MODES {
            let out = project_truncated_l2_ball(&[3.0, -1.0, 0.5], 2, 0.0, mode).unwrap();
            assert_eq!(out.w, vec![0.0; 3]);
            let out = project_kyfan_l1_ball(&[3.0, -1.0, 0.5], 1, 0.0, mode).unwrap();
            assert_eq!(out.w, vec![0.0; 3]);
        }
        assert!(project_kyfan_l1_ball(&[1.0], 1, -1.0, SearchMode::Enumerate).is_err());
    }

    #[test]
    fn prox_examples() {
        use NormFlavor::*;
        for mode in MODES {
            let out = prox_vec(&[3.0, 4.0], &f(FrobeniusR, 2, 1.0, false), mode).unwrap();
            assert_vec_close(&out.x, &[2.4, 3.2], 1e-14);
            let out = prox_vec(&[3.0, 1.0], &f(FrobeniusR, 1, 1.0, false), mode).unwrap();
            assert_vec_close(&out.x, &[2.0, 0.0], 1e-15);
            let out = prox_vec(&[3.0, 1.0], &f(FrobeniusR, 1, 1.0, true), mode).unwrap();
            assert_vec_close(&out.x, &[1.5, 0.0], 1e-15);
            let out = prox_vec(&[0.5, -0.2, 0.1], &f(SpectralR, 2, 1.0, false), mode).unwrap();
            assert_eq!(out.x, vec![0.0; 3]);
            let z = [1.0, -2.0, 0.25];
            let out = prox_vec(&z, &f(FrobeniusR, 3, 1.0, true), mode).unwrap();
            assert_vec_close(&out.x, &[0.5, -1.0, 0.125], 1e-15);
        }
    }

    #[test]
    fn zero_input_is_fixed() {
        use NormFlavor::*;
        for mode in MODES {
            for flavor in [FrobeniusR, SpectralR] {
                for squared in [false, true] {
                    let out = prox_vec(&[0.0; 4], &f(flavor, 2, 0.7, squared), mode).unwrap();
                    assert_eq!(out.x, vec![0.0; 4]);
                }
            }
        }
    }

    #[test]
    fn scalar_case_counts_one_solve() {
        use NormFlavor::*;
        for mode in MODES {
            for flavor in [FrobeniusR, SpectralR] {
                for squared in [false, true] {
                    for z in [0.3, 5.0] {
                        let out = prox_vec(&[z], &f(flavor, 1, 1.0, squared), mode).unwrap();
                        assert_eq!(out.candidate_solves, 1);
                    }
                }
            }
        }
    }

    #[test]
    fn solve_counts_on_large_instance() {
        let z: Vec<f64> = (0..1000)
            .map(|i| ((i * 7919) % 1000) as f64 / 100.0)
            .collect();
        let fr = f(NormFlavor::FrobeniusR, 5, 3.0, false);
        let bin = prox_vec(&z, &fr, SearchMode::BinarySearch).unwrap();
        assert!(!bin.fallback);
        assert!(bin.candidate_solves as f64 <= binary_solve_bound(1000, 5));
        assert!(binary_solve_bound(1000, 5) <= 161.0);
        let en = prox_vec(&z, &fr, SearchMode::Enumerate).unwrap();
        assert!(en.candidate_solves <= 5 * 995 + 1001);
        assert_vec_close(&bin.x, &en.x, 1e-12);
    }

    #[test]
    fn multiplier_newton_hits_radius() {
        let mu = solve_l2_multiplier(25.0, 3.0, 2.0, 1.0, 0.5);
        let e = 25.0 / (1.0 + mu).powi(2) + 9.0 / (2.0 + mu).powi(2);
        assert!((e.sqrt() - 0.5).abs() < 1e-14);
        assert_eq!(solve_l2_multiplier(0.1, 0.1, 1.0, 1.0, 10.0), 0.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "enumerate".parse::<SearchMode>().unwrap(),
            SearchMode::Enumerate
        );
        assert_eq!(
            "binary".parse::<SearchMode>().unwrap(),
            SearchMode::BinarySearch
        );
        assert!("other".parse::<SearchMode>().is_err());
    }
}
