//! Sampled numerical verification: the Lyapunov inequalities on a ball, and
//! the contraction, extension, and derivative-defect bounds checked against
//! the Runge-Kutta reference solver.
//!
//! Nothing here is a proof. The exact certificates live in [`crate::lyapunov`];
//! this module hunts for counterexamples on deterministic low-discrepancy
//! samples, so a pass is strong evidence and a failure is a concrete witness.
//! Axis-aligned points are always part of the sample set because degenerate
//! directions are where strict decrease tends to fail first.

use std::ops::RangeInclusive;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, BoundsError, StabilityData};
use crate::dynamics::{self, DynamicsError};
use crate::picard::{self, GkEvaluator, PicardError};
use crate::polyalg::{CompiledPoly, PolyError, Polynomial, VectorField};
use crate::ratio::format_rational;
use crate::sampling;

/// Absolute slack added to every lemma bound to absorb integrator error.
pub const ORACLE_SLACK: f64 = 1e-6;

/// `gamma_hat` must clear this to call the candidate decreasing.
pub const DECREASE_TOLERANCE: f64 = 1e-9;

/// Interior time points per interval when a check needs its own time grid.
const TIME_GRID: usize = 21;

/// Lattice resolution per dimension for Lipschitz estimation.
const LIPSCHITZ_GRID: usize = 15;

/// Errors from malformed inputs or failed preconditions.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("interval width must be positive, got {0}")]
    BadWidth(f64),
    #[error("Lipschitz constant must be positive, got {0}")]
    BadLipschitz(f64),
    #[error("candidate does not vanish at the origin: V(0) = {0}")]
    OriginNotFixed(String),
    #[error("candidate must not depend on t")]
    TimeDependentCandidate,
    #[error("candidate has {candidate} variables but the field has {field}")]
    ArityMismatch { candidate: usize, field: usize },
    #[error("width {t} is not below min(r/Q, 1/L) = min({r_over_q}, {inv_l})")]
    WidthTooLarge { t: f64, r_over_q: f64, inv_l: f64 },
    #[error("piecewise horizon {horizon} does not reach the integration endpoint {delta}")]
    HorizonShort { horizon: f64, delta: f64 },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Picard(#[from] PicardError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Sampled extrema of `V/||x||^2` and of the decrease rate on a ball.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// Smallest sampled `V(x)/||x||^2`.
    pub alpha_hat: f64,
    /// Largest sampled `V(x)/||x||^2`.
    pub beta_hat: f64,
    /// Negated largest sampled `grad V(x).f(x)/||x||^2`; positive means the
    /// candidate decreased at every sample.
    pub gamma_hat: f64,
    pub n_samples: usize,
    pub worst_points: WorstPoints,
}

/// Up to five extremal sample points per metric, worst first.
#[derive(Debug, Clone, Default, Serialize)]
pub struct WorstPoints {
    /// Points attaining the smallest `V/||x||^2`.
    pub alpha: Vec<Vec<f64>>,
    /// Points attaining the largest `V/||x||^2`.
    pub beta: Vec<Vec<f64>>,
    /// Points where the decrease is weakest.
    pub gamma: Vec<Vec<f64>>,
}

impl VerificationReport {
    pub fn is_decreasing(&self) -> bool {
        self.gamma_hat > DECREASE_TOLERANCE
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_decreasing() {
            "decreasing"
        } else {
            "not decreasing"
        }
    }
}

/// One line of a lemma check table: the empirical supremum against the
/// theoretical bound, with the slack that was granted.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub k: usize,
    /// Largest sampled ratio of the bounded quantity to `||x||`.
    pub observed: f64,
    /// Theoretical coefficient of `||x||` in the bound.
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Result of a check whose hypothesis can fail honestly: either the bound was
/// tested, or the certificate inequality needed for it did not hold.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtensionOutcome {
    Checked(LemmaRow),
    /// `c(k)` reached the overshoot constant, so the bound has no content.
    Skipped { c_k: f64, overshoot: f64 },
}

impl ExtensionOutcome {
    pub fn row(&self) -> Option<&LemmaRow> {
        match self {
            ExtensionOutcome::Checked(row) => Some(row),
            ExtensionOutcome::Skipped { .. } => None,
        }
    }

    pub fn passed(&self) -> bool {
        self.row().is_some_and(|r| r.pass)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Indices of the five most extreme values, worst first.
fn extremal_points(samples: &[Vec<f64>], values: &[f64], smallest: bool) -> Vec<Vec<f64>> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if !smallest {
        idx.reverse();
    }
    idx.into_iter().take(5).map(|i| samples[i].clone()).collect()
}

/// Sample `V/||x||^2` and `grad V.f/||x||^2` at deterministic nonzero points
/// of the ball (axis points at radii {0.1, 0.5, 1} times `radius`, then a
/// low-discrepancy fill) and report the extrema with witnesses.
///
/// The candidate must be t-free and vanish at the origin. Reports are
/// reproducible: the sample sequence and the fold order are fixed.
pub fn check_lyapunov(
    v: &Polynomial,
    f: &VectorField,
    radius: f64,
    n_samples: usize,
) -> Result<VerificationReport, VerifyError> {
    if !(radius > 0.0) {
        return Err(VerifyError::BadRadius(radius));
    }
    let n = f.dim();
    if v.nvars() != n {
        return Err(VerifyError::ArityMismatch { candidate: v.nvars(), field: n });
    }
    if v.deg_t() != 0 {
        return Err(VerifyError::TimeDependentCandidate);
    }
    if !v.constant_term().is_zero() {
        return Err(VerifyError::OriginNotFixed(format_rational(&v.constant_term())));
    }

    let vc = v.compile();
    let grads: Vec<CompiledPoly> = (1..=n)
        .map(|i| v.differentiate(i).map(|g| g.compile()))
        .collect::<Result<_, _>>()?;
    let fc = f.compile();

    let samples = sampling::sample_ball(n, radius, n_samples);
    let mut value_ratios = Vec::with_capacity(samples.len());
    let mut slope_ratios = Vec::with_capacity(samples.len());
    let mut fx = vec![0.0; n];
    for x in &samples {
        let nsq: f64 = x.iter().map(|v| v * v).sum();
        fc.eval_into(x, &mut fx);
        let slope: f64 = grads.iter().zip(&fx).map(|(g, fi)| g.eval_x(x) * fi).sum();
        value_ratios.push(vc.eval_x(x) / nsq);
        slope_ratios.push(slope / nsq);
    }

    let alpha_hat = value_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_hat = value_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst_slope = slope_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(VerificationReport {
        alpha_hat,
        beta_hat,
        gamma_hat: -worst_slope,
        n_samples: samples.len(),
        worst_points: WorstPoints {
            alpha: extremal_points(&samples, &value_ratios, true),
            beta: extremal_points(&samples, &value_ratios, false),
            gamma: extremal_points(&samples, &slope_ratios, false),
        },
    })
}

/// Check the fixed-point contraction: for each k, the gap between the true
/// flow and the k-th iterate is at most `(TL)^k` times the largest flow norm,
/// both suprema taken over the sampled tube `[0, T] x B_r`.
///
/// Preconditions are recomputed on the doubled ball and enforced: `T` must be
/// below both `r/Q` (so trajectories cannot leave the region where the
/// estimates hold) and `1/L`. Violations are errors, not silent skips.
pub fn check_contraction(
    f: &VectorField,
    r: f64,
    t: f64,
    k_range: RangeInclusive<usize>,
    n_samples: usize,
    h: f64,
) -> Result<Vec<LemmaRow>, VerifyError> {
    if !(r > 0.0) {
        return Err(VerifyError::BadRadius(r));
    }
    if !(t > 0.0) {
        return Err(VerifyError::BadWidth(t));
    }

    let lipschitz = dynamics::estimate_l(f, 2.0 * r, LIPSCHITZ_GRID);
    let fc = f.compile();
    let mut fx = vec![0.0; f.dim()];
    let sup_f = sampling::sample_ball(f.dim(), 2.0 * r, n_samples.max(256))
        .iter()
        .map(|x| {
            fc.eval_into(x, &mut fx);
            norm(&fx)
        })
        .fold(0.0, f64::max);
    let r_over_q = r / sup_f;
    let inv_l = 1.0 / lipschitz;
    if !(t < r_over_q.min(inv_l)) {
        return Err(VerifyError::WidthTooLarge { t, r_over_q, inv_l });
    }

    let ks: Vec<usize> = k_range.collect();
    let iterates: Vec<Vec<CompiledPoly>> = ks
        .iter()
        .map(|&k| picard::picard_iterate(f, k).map(|y| y.compile()))
        .collect::<Result<_, _>>()?;

    let n = f.dim();
    let samples = sampling::sample_ball(n, r, n_samples);
    let mut sup_flow = 0.0_f64;
    let mut sup_gap = vec![0.0_f64; ks.len()];
    let mut point = vec![0.0; n + 1];
    for x in &samples {
        let traj = dynamics::simulate(f, x, t, h)?;
        point[1..].copy_from_slice(x);
        for (ti, state) in traj.times.iter().zip(&traj.states) {
            sup_flow = sup_flow.max(norm(state));
            point[0] = *ti;
            for (slot, compiled) in sup_gap.iter_mut().zip(&iterates) {
                let gap2: f64 = compiled
                    .iter()
                    .zip(state)
                    .map(|(c, s)| {
                        let d = c.eval(&point) - s;
                        d * d
                    })
                    .sum();
                *slot = slot.max(gap2.sqrt());
            }
        }
    }

    Ok(ks
        .iter()
        .zip(&sup_gap)
        .map(|(&k, &observed)| {
            let bound = (t * lipschitz).powi(k as i32) * sup_flow;
            LemmaRow { k, observed, bound, slack: ORACLE_SLACK, pass: observed <= bound + ORACLE_SLACK }
        })
        .collect())
}

/// Check the piecewise extension against the flow: `||G(s, x) - phi(s, x)||`
/// must stay within `c(k) ||x||` for sampled `x` in the ball and every
/// integrator grid time `s` up to the integration endpoint.
///
/// When `c(k)` is not below the overshoot constant the inequality carries no
/// information, and the check reports itself skipped rather than passing
/// vacuously.
pub fn check_extension(
    f: &VectorField,
    data: &StabilityData,
    t: f64,
    n_pieces: usize,
    k: usize,
    n_samples: usize,
    h: f64,
) -> Result<ExtensionOutcome, VerifyError> {
    let c_k = bounds::c_of_k(data.overshoot, t, data.lipschitz, k, n_pieces)?;
    if c_k >= data.overshoot {
        return Ok(ExtensionOutcome::Skipped { c_k, overshoot: data.overshoot });
    }
    let delta = data.delta();
    let horizon = t * n_pieces as f64;
    if horizon < delta {
        return Err(VerifyError::HorizonShort { horizon, delta });
    }

    let width = BigRational::from_float(t).ok_or(VerifyError::BadWidth(t))?;
    let evaluator = GkEvaluator::new(f, k, n_pieces, &width)?;
    let samples = sampling::sample_ball(f.dim(), data.r, n_samples);

    let mut observed = 0.0_f64;
    let mut pass = true;
    for x in &samples {
        let traj = dynamics::simulate(f, x, delta, h)?;
        let nx = norm(x);
        for (si, state) in traj.times.iter().zip(&traj.states) {
            let gs = evaluator.eval(*si, x)?;
            let gap = gs.iter().zip(state).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            observed = observed.max(gap / nx);
            if gap > c_k * nx + ORACLE_SLACK {
                pass = false;
            }
        }
    }

    Ok(ExtensionOutcome::Checked(LemmaRow {
        k,
        observed,
        bound: c_k,
        slack: ORACLE_SLACK,
        pass,
    }))
}

/// Check the defect of the k-th iterate on a single interval: the symbolic
/// mismatch between advancing the approximation in time and pushing it along
/// the field stays within `(TL)^k / T * ||x||` at sampled `(t, x)`.
///
/// At k = 1 the iterate is the identity and the defect reduces to `f` itself,
/// so the check degenerates to the Lipschitz inequality at the origin.
pub fn check_derivative_defect(
    f: &VectorField,
    t: f64,
    lipschitz: f64,
    k_range: RangeInclusive<usize>,
    r: f64,
    n_samples: usize,
) -> Result<Vec<LemmaRow>, VerifyError> {
    if !(r > 0.0) {
        return Err(VerifyError::BadRadius(r));
    }
    if !(t > 0.0) {
        return Err(VerifyError::BadWidth(t));
    }
    if !(lipschitz > 0.0) {
        return Err(VerifyError::BadLipschitz(lipschitz));
    }

    let n = f.dim();
    let samples = sampling::sample_ball(n, r, n_samples);
    let times = sampling::uniform_times(0.0, t, TIME_GRID);
    let mut rows = Vec::new();
    let mut point = vec![0.0; n + 1];
    for k in k_range {
        let iterate = picard::picard_iterate(f, k)?;
        let defect = picard::derivative_defect(f, &iterate)?.compile();
        let bound = (t * lipschitz).powi(k as i32) / t;
        let mut observed = 0.0_f64;
        let mut pass = true;
        for x in &samples {
            let nx = norm(x);
            point[1..].copy_from_slice(x);
            for &ti in &times {
                point[0] = ti;
                let dn = defect.iter().map(|c| c.eval(&point).powi(2)).sum::<f64>().sqrt();
                observed = observed.max(dn / nx);
                if dn > bound * nx + ORACLE_SLACK {
                    pass = false;
                }
            }
        }
        rows.push(LemmaRow { k, observed, bound, slack: ORACLE_SLACK, pass });
    }
    Ok(rows)
}

/// Check the defect across the chained pieces: on piece i the single-interval
/// defect is evaluated at the piece's entry point `w = G(i T, x)`, and the
/// bound picks up the factor `K + c(k)` because `||w||` is itself only
/// controlled through the extension estimate. Skips, like [`check_extension`],
/// when `c(k)` reaches the overshoot constant.
pub fn check_piecewise_defect(
    f: &VectorField,
    data: &StabilityData,
    t: f64,
    n_pieces: usize,
    k: usize,
    n_samples: usize,
) -> Result<ExtensionOutcome, VerifyError> {
    let c_k = bounds::c_of_k(data.overshoot, t, data.lipschitz, k, n_pieces)?;
    if c_k >= data.overshoot {
        return Ok(ExtensionOutcome::Skipped { c_k, overshoot: data.overshoot });
    }

    let width = BigRational::from_float(t).ok_or(VerifyError::BadWidth(t))?;
    let iterate = picard::picard_iterate(f, k)?;
    let defect = picard::derivative_defect(f, &iterate)?.compile();
    let evaluator = GkEvaluator::from_base(iterate, n_pieces, width)?;

    let n = f.dim();
    let samples = sampling::sample_ball(n, data.r, n_samples);
    let times = sampling::uniform_times(0.0, t, TIME_GRID);
    let bound = (t * data.lipschitz).powi(k as i32) / t * (data.overshoot + c_k);

    let mut observed = 0.0_f64;
    let mut pass = true;
    let mut point = vec![0.0; n + 1];
    for x in &samples {
        let nx = norm(x);
        for i in 0..n_pieces {
            let entry = if i == 0 { x.clone() } else { evaluator.eval(i as f64 * t, x)? };
            point[1..].copy_from_slice(&entry);
            for &u in &times {
                point[0] = u;
                let dn = defect.iter().map(|c| c.eval(&point).powi(2)).sum::<f64>().sqrt();
                observed = observed.max(dn / nx);
                if dn > bound * nx + ORACLE_SLACK {
                    pass = false;
                }
            }
        }
    }

    Ok(ExtensionOutcome::Checked(LemmaRow {
        k,
        observed,
        bound,
        slack: ORACLE_SLACK,
        pass,
    }))
}
