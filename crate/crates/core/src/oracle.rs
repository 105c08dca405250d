//! Independent checks for every prox and projection in the crate.
//!
//! * [`certify_prox`] tests the optimality conditions of the prox directly,
//!   using only the closed-form norm values and truncated gauges.
//! * [`perturbation_probe`] compares the prox objective at the candidate with
//!   randomly displaced points.
//! * [`reference_prox_slow`] recomputes the prox by a different route: on the
//!   cone of sorted non-negative vectors the truncated gauges are smooth or
//!   linear, so the dual problem is a (weighted) isotonic regression solved
//!   by pool-adjacent-violators, wrapped in a scalar bisection for the
//!   multiplier.
//!
//! Instances for randomized suites are described by [`InstanceDescriptor`]
//! lines, so a failing case can be replayed from its manifest entry.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

use crate::error::{LrinError, Result};
use crate::gauges::{
    norm_value, truncated_gauge, MagnitudeProfile, NormFlavor, NormSpec, ScaledNorm,
};
use crate::rng;
use crate::vec_prox::{binary_solve_bound, prox_vec, SearchMode};

/// Default relative tolerance of [`certify_prox`].
pub const CERTIFICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// Excess of the dual gauge of `z - x` over its bound.
    pub dual_residual: f64,
    /// Gap in the pairing equality `<z - x, x> = ...`.
    pub alignment_residual: f64,
    pub pass: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Certificate with the default tolerance.
pub fn certify_prox(z: &[f64], x: &[f64], f: &ScaledNorm) -> Result<Certificate> {
    certify_prox_with_tol(z, x, f, CERTIFICATE_TOL)
}

/// `x = prox_f(z)` holds iff, with `y = z - x` and `G` the truncated gauge
/// dual to the norm `N`:
///
/// * unsquared `f = g N`: `G(y) <= g` and `<y, x> = g N(x)`;
/// * squared `f = (g/2) N^2`: `G(y) <= g N(x)` and `<y, x> = g N(x)^2`.
///
/// The dual residual is compared against `tol * max(1, ||z||)` and the
/// alignment residual, which is quadratic in the data, against
/// `tol * max(1, ||z||)^2`.
pub fn certify_prox_with_tol(
    z: &[f64],
    x: &[f64],
    f: &ScaledNorm,
    tol: f64,
) -> Result<Certificate> {
    if z.len() != x.len() {
        return Err(LrinError::Shape(format!(
            "z has length {}, x has length {}",
            z.len(),
            x.len()
        )));
    }
    let y: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
    let py = MagnitudeProfile::new(&y)?;
    let px = MagnitudeProfile::new(x)?;
    let spec = f.spec;
    let dual = truncated_gauge(&py, spec.flavor.dual_gauge(), spec.r)?;
    let nx = norm_value(&px, &spec)?;
    let pairing = dot(&y, x);
    let (bound, target) = if f.squared {
        (f.gamma * nx, f.gamma * nx * nx)
    } else {
        (f.gamma, f.gamma * nx)
    };
    let dual_residual = (dual - bound).max(0.0);
    let alignment_residual = (pairing - target).abs();
    let scale = norm2(z).max(1.0);
    let pass = dual_residual <= tol * scale && alignment_residual <= tol * scale * scale;
    Ok(Certificate {
        dual_residual,
        alignment_residual,
        pass,
    })
}

/// `0.5 ||x - z||^2 + f(x)`.
pub fn prox_objective(z: &[f64], x: &[f64], f: &ScaledNorm) -> Result<f64> {
    let d: f64 = z.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(0.5 * d + f.eval(x)?)
}

/// True iff no sampled displacement `x + delta d` (unit `d`, `delta` in
/// `{radius, radius/10, radius/100}`) lowers the prox objective by more than
/// `1e-12` relative to its magnitude.
pub fn perturbation_probe(
    z: &[f64],
    x: &[f64],
    f: &ScaledNorm,
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<bool> {
    if trials == 0 || !(radius > 0.0) {
        return Err(LrinError::InvalidParameter(
            "perturbation probe needs trials >= 1 and radius > 0".into(),
        ));
    }
    let mut rng = rng::stream(seed, "perturbation_probe");
    let base = prox_objective(z, x, f)?;
    let slack = 1e-12 * base.abs().max(1.0);
    let mut trial = vec![0.0; x.len()];
    for _ in 0..trials {
        let mut d: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
        let nd = norm2(&d);
        if nd == 0.0 {
            continue;
        }
        d.iter_mut().for_each(|v| *v /= nd);
        for delta in [radius, radius / 10.0, radius / 100.0] {
            for ((t, xi), di) in trial.iter_mut().zip(x).zip(&d) {
                *t = xi + delta * di;
            }
            if base > prox_objective(z, &trial, f)? + slack {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Weighted isotonic regression onto non-increasing sequences:
/// `argmin sum_i weights[i] (v_i - targets[i])^2` with `v_1 >= ... >= v_q`.
pub fn isotonic_nonincreasing(targets: &[f64], weights: &[f64]) -> Vec<f64> {
    // (weighted sum, total weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(targets.len());
    for (&y, &w) in targets.iter().zip(weights) {
        blocks.push((w * y, w, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (s1, w1, _) = blocks[n - 2];
            let (s2, w2, _) = blocks[n - 1];
            if s1 / w1 < s2 / w2 {
                let (s, w, c) = blocks.pop().unwrap();
                let last = blocks.last_mut().unwrap();
                last.0 += s;
                last.1 += w;
                last.2 += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(targets.len());
    for (s, w, c) in blocks {
        out.extend(std::iter::repeat_n(s / w, c));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowProx {
    pub x: Vec<f64>,
    /// Bisection steps spent on the scalar multiplier.
    pub iterations: usize,
    pub converged: bool,
}

const SLOW_MAX_ITER: usize = 100_000;

fn bisect<F: FnMut(f64) -> f64>(mut h: F, mut lo: f64, mut hi: f64) -> (f64, usize, bool) {
    // h increasing, h(lo) <= 0 <= h(hi).
    let mut it = 0;
    while it < SLOW_MAX_ITER {
        it += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return (mid, it, true);
        }
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi), it, false)
}

/// Reference prox by isotonic regression on sorted magnitudes and scalar
/// bisection. Slow but independent of the candidate search.
pub fn reference_prox_slow(z: &[f64], f: &ScaledNorm) -> Result<SlowProx> {
    let p = MagnitudeProfile::new(z)?;
    f.spec.check_dim(p.len())?;
    let a = p.magnitudes();
    let q = a.len();
    let r = f.spec.r;
    let gamma = f.gamma;
    let clamp = |v: Vec<f64>| v.into_iter().map(|x| x.max(0.0)).collect::<Vec<f64>>();
    let ones = vec![1.0; q];

    // Dual part w on the sorted non-negative cone.
    let l2_step = |mu: f64| {
        let weights: Vec<f64> = (0..q).map(|i| if i < r { 1.0 + mu } else { 1.0 }).collect();
        let targets: Vec<f64> = a.iter().zip(&weights).map(|(ai, wi)| ai / wi).collect();
        clamp(isotonic_nonincreasing(&targets, &weights))
    };
    let l1_step = |lambda: f64| {
        let targets: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(i, ai)| if i < r { ai - lambda } else { *ai })
            .collect();
        clamp(isotonic_nonincreasing(&targets, &ones))
    };
    let top_sq = |w: &[f64]| w[..r].iter().map(|v| v * v).sum::<f64>().sqrt();
    let top_abs = |w: &[f64]| w[..r].iter().sum::<f64>();

    let (w, iterations, converged) = match (f.spec.flavor, f.squared) {
        (NormFlavor::FrobeniusR, false) => {
            if p.s2(r).sqrt() <= gamma {
                (a.to_vec(), 1, true)
            } else {
                let mut hi = 1.0;
                while top_sq(&l2_step(hi)) > gamma {
                    hi *= 2.0;
                }
                let (mu, it, ok) = bisect(|mu| gamma - top_sq(&l2_step(mu)), 0.0, hi);
                (l2_step(mu), it, ok)
            }
        }
        (NormFlavor::SpectralR, false) => {
            if p.s1(r) <= gamma {
                (a.to_vec(), 1, true)
            } else {
                let mut hi = a[0];
                while top_abs(&l1_step(hi)) > gamma {
                    hi *= 2.0;
                }
                let (lambda, it, ok) = bisect(|l| gamma - top_abs(&l1_step(l)), 0.0, hi);
                (l1_step(lambda), it, ok)
            }
        }
        (NormFlavor::FrobeniusR, true) => (l2_step(1.0 / gamma), 1, true),
        (NormFlavor::SpectralR, true) => {
            // lambda = G(w(lambda)) / gamma, left side increasing, right decreasing.
            let mut hi = p.s1(r) / gamma;
            if hi == 0.0 {
                (a.to_vec(), 1, true)
            } else {
                while hi - top_abs(&l1_step(hi)) / gamma < 0.0 {
                    hi *= 2.0;
                }
                let (lambda, it, ok) = bisect(|l| l - top_abs(&l1_step(l)) / gamma, 0.0, hi);
                (l1_step(lambda), it, ok)
            }
        }
    };
    let dual = p.unsort(&w);
    let x = z.iter().zip(&dual).map(|(zi, wi)| zi - wi).collect();
    Ok(SlowProx {
        x,
        iterations,
        converged,
    })
}

/// One randomized instance, replayable from its manifest line
/// `seed=<u64> q=<q> r=<r> flavor=<fro|spec> gamma=<f64> squared=<bool>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceDescriptor {
    pub seed: u64,
    pub q: usize,
    pub r: usize,
    pub flavor: NormFlavor,
    pub gamma: f64,
    pub squared: bool,
}

impl fmt::Display for InstanceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed={} q={} r={} flavor={} gamma={:e} squared={}",
            self.seed, self.q, self.r, self.flavor, self.gamma, self.squared
        )
    }
}

impl FromStr for InstanceDescriptor {
    type Err = LrinError;

    fn from_str(line: &str) -> Result<Self> {
        let mut seed = None;
        let mut q = None;
        let mut r = None;
        let mut flavor = None;
        let mut gamma = None;
        let mut squared = None;
        let bad = |k: &str| LrinError::Parse(format!("bad manifest field '{k}' in '{line}'"));
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(tok))?;
            match k {
                "seed" => seed = Some(v.parse().map_err(|_| bad(k))?),
                "q" => q = Some(v.parse().map_err(|_| bad(k))?),
                "r" => r = Some(v.parse().map_err(|_| bad(k))?),
                "flavor" => flavor = Some(v.parse()?),
                "gamma" => gamma = Some(v.parse().map_err(|_| bad(k))?),
                "squared" => squared = Some(v.parse().map_err(|_| bad(k))?),
                _ => return Err(bad(k)),
            }
        }
        let missing = |k: &str| LrinError::Parse(format!("manifest line missing '{k}': '{line}'"));
        Ok(InstanceDescriptor {
            seed: seed.ok_or_else(|| missing("seed"))?,
            q: q.ok_or_else(|| missing("q"))?,
            r: r.ok_or_else(|| missing("r"))?,
            flavor: flavor.ok_or_else(|| missing("flavor"))?,
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            squared: squared.ok_or_else(|| missing("squared"))?,
        })
    }
}

impl InstanceDescriptor {
    /// Draw a descriptor: `q` uniform in `1..=max_q`, `r` uniform in `1..=q`,
    /// `gamma` log-uniform in `[1e-3, 1e3]`, flavor and squared uniform.
    pub fn sample(seed: u64, max_q: usize) -> Self {
        let mut rng = rng::stream(seed, "instance_descriptor");
        let q = rng.random_range(1..=max_q);
        let r = rng.random_range(1..=q);
        let flavor = if rng.random_bool(0.5) {
            NormFlavor::FrobeniusR
        } else {
            NormFlavor::SpectralR
        };
        let gamma = 10f64.powf(rng.random_range(-3.0..=3.0));
        InstanceDescriptor {
            seed,
            q,
            r,
            flavor,
            gamma,
            squared: rng.random_bool(0.5),
        }
    }

    pub fn norm(&self) -> Result<ScaledNorm> {
        ScaledNorm::new(
            NormSpec::new(self.flavor, self.r)?,
            self.gamma,
            self.squared,
        )
    }

    /// The input vector. Entries are Gaussian with a log-uniform scale in
    /// `[0.1, 100]`; a third of the instances carry injected ties, sign-flipped
    /// duplicates and zeros.
    pub fn vector(&self) -> Vec<f64> {
        let mut rng = rng::stream(self.seed, "instance_vector");
        let scale = 10f64.powf(rng.random_range(-1.0..=2.0));
        let mut z: Vec<f64> = (0..self.q)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                scale * v
            })
            .collect();
        if self.q > 1 && rng.random_bool(1.0 / 3.0) {
            let edits = rng.random_range(1..=self.q);
            for _ in 0..edits {
                let i = rng.random_range(0..self.q);
                let j = rng.random_range(0..self.q);
                z[i] = match rng.random_range(0..3) {
                    0 => z[j],
                    1 => -z[j],
                    _ => 0.0,
                };
            }
        }
        z
    }
}

/// Outcome of checking one instance in both search modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub descriptor: InstanceDescriptor,
    /// Certificate of the binary-search result.
    pub certificate: Certificate,
    /// `max_i |x_binary - x_enumerate|`.
    pub mode_gap: f64,
    pub binary_solves: usize,
    pub enumerate_solves: usize,
    /// `max(1, max_i |z_i|)`.
    pub input_scale: f64,
}

/// Componentwise agreement required between the two search modes, relative
/// to `max(1, max_i |z_i|)`.
pub const MODE_AGREEMENT_TOL: f64 = 1e-12;

impl Audit {
    /// Run both modes on the instance and certify the binary-search output
    /// with tolerance `tol`.
    pub fn run(descriptor: &InstanceDescriptor, tol: f64) -> Result<Audit> {
        let z = descriptor.vector();
        let f = descriptor.norm()?;
        let b = prox_vec(&z, &f, SearchMode::BinarySearch)?;
        let e = prox_vec(&z, &f, SearchMode::Enumerate)?;
        let mode_gap =
            b.x.iter()
                .zip(&e.x)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
        Ok(Audit {
            descriptor: *descriptor,
            certificate: certify_prox_with_tol(&z, &b.x, &f, tol)?,
            mode_gap,
            binary_solves: b.candidate_solves,
            enumerate_solves: e.candidate_solves,
            input_scale: z.iter().fold(1.0f64, |m, v| m.max(v.abs())),
        })
    }

    /// `None` when every check passed, else a description of the first
    /// failure.
    pub fn failure(&self) -> Option<String> {
        let d = &self.descriptor;
        if !self.certificate.pass {
            return Some(format!(
                "certificate failed (dual residual {:e}, alignment residual {:e})",
                self.certificate.dual_residual, self.certificate.alignment_residual
            ));
        }
        if !(self.mode_gap <= MODE_AGREEMENT_TOL * self.input_scale) {
            return Some(format!("search modes differ by {:e}", self.mode_gap));
        }
        let bound = binary_solve_bound(d.q, d.r);
        if self.binary_solves as f64 > bound {
            return Some(format!(
                "binary search used {} candidate solves, bound {bound:.1}",
                self.binary_solves
            ));
        }
        None
    }
}

/// Render descriptors as manifest text, one per line.
pub fn write_manifest(items: &[InstanceDescriptor]) -> String {
    let mut s = String::new();
    for d in items {
        s.push_str(&d.to_string());
        s.push('\n');
    }
    s
}

/// Parse manifest text; blank lines and `#` comments are skipped.
pub fn read_manifest(text: &str) -> Result<Vec<InstanceDescriptor>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}
