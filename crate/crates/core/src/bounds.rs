//! Feasibility conditions tying the stability constants (K, λ, L) to the
//! chained-approximation parameters (T, N, k), the error constant c(k), and
//! the explicit degree bound 2q^{Nk−1} for the resulting certificate.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Relative slack applied to every strict inequality: `a < b` is accepted
/// only when `a < b − slack·max(1, |a|, |b|)`, so borderline float noise
/// reads as infeasible rather than flipping verdicts between platforms.
pub const STRICTNESS_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("overshoot constant must be at least 1, got {0}")]
    BadOvershoot(f64),
    #[error("decay rate must be positive, got {0}")]
    BadDecay(f64),
    #[error("Lipschitz bound must be positive, got {0}")]
    BadLipschitz(f64),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("field degree must be at least 1")]
    BadFieldDegree,
    #[error("contraction factor T*L must be below 1, got {0}")]
    ContractionFactor(f64),
}

/// Exponential-stability constants of a system on a ball of radius r:
/// trajectories obey ‖x(t)‖ ≤ K‖x(0)‖e^{−λt}, f has Lipschitz bound L on
/// the enlarged ball B_{4Kr}, and q is the field's polynomial degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityData {
    #[serde(rename = "K")]
    pub overshoot: f64,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub r: f64,
    pub q: u32,
}

impl StabilityData {
    pub fn new(
        overshoot: f64,
        lambda: f64,
        lipschitz: f64,
        r: f64,
        q: u32,
    ) -> Result<Self, BoundsError> {
        if !(overshoot >= 1.0) {
            return Err(BoundsError::BadOvershoot(overshoot));
        }
        if !(lambda > 0.0) {
            return Err(BoundsError::BadDecay(lambda));
        }
        if !(lipschitz > 0.0) {
            return Err(BoundsError::BadLipschitz(lipschitz));
        }
        if !(r > 0.0) {
            return Err(BoundsError::BadRadius(r));
        }
        if q < 1 {
            return Err(BoundsError::BadFieldDegree);
        }
        Ok(StabilityData { overshoot, lambda, lipschitz, r, q })
    }

    /// The integration horizon δ = ln(2K²)/(2λ) used by the construction.
    pub fn delta(&self) -> f64 {
        (2.0 * self.overshoot * self.overshoot).ln() / (2.0 * self.lambda)
    }
}

/// How δ was chosen when the certificate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// δ fixed to ln(2K²)/(2λ) and the two derived conditions checked.
    Canonical,
    /// δ swept jointly with T against the unsubstituted conditions.
    FreeDelta,
}

/// A parameter set that passed every feasibility condition, together with
/// the evaluated quantities and the margin of every strict inequality
/// (positive means satisfied; margins within [`STRICTNESS_SLACK`] of zero
/// are treated as violations).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub data: StabilityData,
    pub mode: SearchMode,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n_pieces: usize,
    pub k: usize,
    pub delta: f64,
    pub c_k: f64,
    pub cond1_lhs: f64,
    pub cond2_lhs: f64,
    pub cond2_rhs: f64,
    #[serde(serialize_with = "biguint_as_string")]
    pub degree_bound: BigUint,
    pub residuals: BTreeMap<String, f64>,
    pub slack: f64,
}

fn biguint_as_string<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub condition: String,
    pub residual: f64,
}

/// Parameters that failed at least one condition, with every violated
/// condition named alongside its (negative or near-zero) margin.
#[derive(Debug, Clone, Serialize)]
pub struct InfeasibilityReport {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n_pieces: usize,
    pub k: usize,
    pub delta: f64,
    pub c_k: Option<f64>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ConditionOutcome {
    Feasible { certificate: BoundCertificate },
    Infeasible { report: InfeasibilityReport },
}

impl ConditionOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ConditionOutcome::Feasible { .. })
    }

    pub fn certificate(&self) -> Option<&BoundCertificate> {
        match self {
            ConditionOutcome::Feasible { certificate } => Some(certificate),
            ConditionOutcome::Infeasible { .. } => None,
        }
    }
}

/// Outcome of a grid search over (T, k) or (T, δ, k).
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Feasible { certificate: BoundCertificate },
    Infeasible { grid_points: usize, k_max: usize },
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&BoundCertificate> {
        match self {
            SearchOutcome::Feasible { certificate } => Some(certificate),
            SearchOutcome::Infeasible { .. } => None,
        }
    }
}

fn strictly_less(a: f64, b: f64) -> bool {
    a < b - STRICTNESS_SLACK * a.abs().max(b.abs()).max(1.0)
}

/// The chained-approximation error constant
/// c(k) = Σ_{i=0}^{N−1} (e^{TL} + K(TL)^k)^i · K²(TL)^k.
pub fn c_of_k(overshoot: f64, t: f64, lipschitz: f64, k: usize, n_pieces: usize) -> Result<f64, BoundsError> {
    assert!(k >= 1, "iteration count must be at least 1");
    assert!(n_pieces >= 1, "piece count must be at least 1");
    let d = t * lipschitz;
    if !(d < 1.0) {
        return Err(BoundsError::ContractionFactor(d));
    }
    let rate = d.powi(k as i32);
    let growth = (d).exp() + overshoot * rate;
    let mut sum = 0.0;
    let mut geo = 1.0;
    for _ in 0..n_pieces {
        sum += geo;
        geo *= growth;
    }
    Ok(overshoot * overshoot * rate * sum)
}

/// 2·q^{Nk−1}, the a priori degree of the constructed certificate. Exact
/// big-integer arithmetic: the value outgrows machine words immediately.
pub fn degree_formula(q: u32, n_pieces: usize, k: usize) -> BigUint {
    assert!(q >= 1 && n_pieces >= 1 && k >= 1, "q, N, k must all be at least 1");
    let exp = u32::try_from(n_pieces * k - 1).expect("N*k too large for an exponent");
    BigUint::from(2u32) * BigUint::from(q).pow(exp)
}

struct ConditionSet {
    delta: f64,
    c_k: Option<f64>,
    cond1_lhs: f64,
    cond2_lhs: f64,
    cond2_rhs: f64,
    margins: Vec<(&'static str, f64)>,
}

/// Evaluate every condition at δ fixed to ln(2K²)/(2λ):
///   c(k)² + δ·K(TL)^k/T·(1+c(k))(K+c(k)) < 1/2
///   c(k)² < λ/(K·L·ln 2K²)·(1 − (2K²)^{−L/λ})
/// plus the structural requirements T < 1/(2L), NT > δ, TL < 1, c(k) < K.
fn evaluate_canonical(data: &StabilityData, t: f64, n_pieces: usize, k: usize) -> ConditionSet {
    let (kk, l, lam) = (data.overshoot, data.lipschitz, data.lambda);
    let delta = data.delta();
    let mut margins: Vec<(&'static str, f64)> = vec![
        ("t_below_half_inverse_lipschitz", 1.0 / (2.0 * l) - t),
        ("horizon_exceeds_delta", n_pieces as f64 * t - delta),
        ("contraction_factor_below_one", 1.0 - t * l),
    ];
    let mut set = ConditionSet {
        delta,
        c_k: None,
        cond1_lhs: f64::NAN,
        cond2_lhs: f64::NAN,
        cond2_rhs: f64::NAN,
        margins: Vec::new(),
    };
    if let Ok(c) = c_of_k(kk, t, l, k, n_pieces) {
        let d = t * l;
        let rate = d.powi(k as i32) / t;
        let two_k2 = 2.0 * kk * kk;
        set.c_k = Some(c);
        set.cond1_lhs = c * c + delta * kk * rate * (1.0 + c) * (kk + c);
        set.cond2_lhs = c * c;
        set.cond2_rhs = lam / (kk * l * two_k2.ln()) * (1.0 - two_k2.powf(-l / lam));
        margins.push(("c_below_overshoot", kk - c));
        margins.push(("derivative_condition", 0.5 - set.cond1_lhs));
        margins.push(("positivity_condition", set.cond2_rhs - set.cond2_lhs));
    }
    set.margins = margins;
    set
}

/// Evaluate the conditions with δ free, before it is substituted out:
///   K²e^{−2λδ} + c(k)² + 2δ·K(TL)^k/T·(1+c(k))(K+c(k)) < 1
///   δ·K·c(k)² < (1/2L)·(1 − e^{−2Lδ})
/// plus the same structural requirements (NT > δ for the chosen δ).
fn evaluate_free_delta(
    data: &StabilityData,
    t: f64,
    n_pieces: usize,
    k: usize,
    delta: f64,
) -> ConditionSet {
    let (kk, l, lam) = (data.overshoot, data.lipschitz, data.lambda);
    let mut margins: Vec<(&'static str, f64)> = vec![
        ("t_below_half_inverse_lipschitz", 1.0 / (2.0 * l) - t),
        ("horizon_exceeds_delta", n_pieces as f64 * t - delta),
        ("contraction_factor_below_one", 1.0 - t * l),
    ];
    let mut set = ConditionSet {
        delta,
        c_k: None,
        cond1_lhs: f64::NAN,
        cond2_lhs: f64::NAN,
        cond2_rhs: f64::NAN,
        margins: Vec::new(),
    };
    if let Ok(c) = c_of_k(kk, t, l, k, n_pieces) {
        let d = t * l;
        let rate = d.powi(k as i32) / t;
        set.c_k = Some(c);
        set.cond1_lhs = kk * kk * (-2.0 * lam * delta).exp()
            + c * c
            + 2.0 * delta * kk * rate * (1.0 + c) * (kk + c);
        set.cond2_lhs = delta * kk * c * c;
        set.cond2_rhs = (1.0 - (-2.0 * l * delta).exp()) / (2.0 * l);
        margins.push(("c_below_overshoot", kk - c));
        margins.push(("derivative_condition", 1.0 - set.cond1_lhs));
        margins.push(("positivity_condition", set.cond2_rhs - set.cond2_lhs));
    }
    set.margins = margins;
    set
}

fn outcome_from(
    data: &StabilityData,
    mode: SearchMode,
    t: f64,
    n_pieces: usize,
    k: usize,
    set: ConditionSet,
) -> ConditionOutcome {
    let violations: Vec<Violation> = set
        .margins
        .iter()
        .filter(|(_, margin)| !strictly_less(0.0, *margin))
        .map(|(name, margin)| Violation { condition: (*name).to_string(), residual: *margin })
        .collect();
    if violations.is_empty() {
        let residuals =
            set.margins.iter().map(|(n, m)| ((*n).to_string(), *m)).collect::<BTreeMap<_, _>>();
        ConditionOutcome::Feasible {
            certificate: BoundCertificate {
                data: *data,
                mode,
                t,
                n_pieces,
                k,
                delta: set.delta,
                c_k: set.c_k.expect("feasible implies c(k) defined"),
                cond1_lhs: set.cond1_lhs,
                cond2_lhs: set.cond2_lhs,
                cond2_rhs: set.cond2_rhs,
                degree_bound: degree_formula(data.q, n_pieces, k),
                residuals,
                slack: STRICTNESS_SLACK,
            },
        }
    } else {
        ConditionOutcome::Infeasible {
            report: InfeasibilityReport {
                t,
                n_pieces,
                k,
                delta: set.delta,
                c_k: set.c_k,
                violations,
            },
        }
    }
}

/// Check every feasibility condition at fixed (T, N, k) with the canonical
/// δ = ln(2K²)/(2λ). Infeasibility is a value carrying all violations.
pub fn check_conditions(data: &StabilityData, t: f64, n_pieces: usize, k: usize) -> ConditionOutcome {
    assert!(t > 0.0 && n_pieces >= 1 && k >= 1, "T > 0, N >= 1, k >= 1 required");
    let set = evaluate_canonical(data, t, n_pieces, k);
    outcome_from(data, SearchMode::Canonical, t, n_pieces, k, set)
}

/// Check the unsubstituted conditions at fixed (T, N, k) and a chosen δ.
pub fn check_conditions_free_delta(
    data: &StabilityData,
    t: f64,
    n_pieces: usize,
    k: usize,
    delta: f64,
) -> ConditionOutcome {
    assert!(t > 0.0 && n_pieces >= 1 && k >= 1 && delta > 0.0, "T, δ > 0, N, k >= 1 required");
    let set = evaluate_free_delta(data, t, n_pieces, k, delta);
    outcome_from(data, SearchMode::FreeDelta, t, n_pieces, k, set)
}

/// Smallest piece count with N·T strictly above δ: ⌈δ/T⌉, bumped by one when
/// the ratio lands on (or within slack of) an integer.
fn pieces_for(delta: f64, t: f64) -> usize {
    let mut n = (delta / t).ceil() as usize;
    if n == 0 {
        n = 1;
    }
    while n as f64 * t <= delta * (1.0 + STRICTNESS_SLACK) {
        n += 1;
    }
    n
}

/// Sweep T over a uniform grid in (0, 1/(2L)), derive N from δ, and take the
/// smallest feasible k ≤ k_max per T. Returns the certificate minimizing
/// N·k, ties broken by smaller k, then smaller N, then grid order. The
/// objective N·k stands in for the degree 2q^{Nk−1}, which is monotone in it.
pub fn search_bound(data: &StabilityData, t_grid_size: usize, k_max: usize) -> SearchOutcome {
    assert!(t_grid_size >= 1 && k_max >= 1, "grid size and k_max must be at least 1");
    let t_max = 1.0 / (2.0 * data.lipschitz);
    let delta = data.delta();
    let mut best: Option<BoundCertificate> = None;
    for j in 1..=t_grid_size {
        let t = j as f64 * t_max / (t_grid_size + 1) as f64;
        let n_pieces = pieces_for(delta, t);
        for k in 1..=k_max {
            if let ConditionOutcome::Feasible { certificate } = check_conditions(data, t, n_pieces, k) {
                if better(&certificate, &best) {
                    best = Some(certificate);
                }
                break;
            }
        }
    }
    match best {
        Some(certificate) => SearchOutcome::Feasible { certificate },
        None => SearchOutcome::Infeasible { grid_points: t_grid_size, k_max },
    }
}

/// Like [`search_bound`], but sweeps δ over a uniform grid in (0, 2δ₀]
/// (δ₀ the canonical value) jointly with T, using the unsubstituted
/// conditions. Often feasible at smaller N·k than the canonical mode.
pub fn search_bound_free_delta(
    data: &StabilityData,
    t_grid_size: usize,
    k_max: usize,
    delta_grid_size: usize,
) -> SearchOutcome {
    assert!(
        t_grid_size >= 1 && k_max >= 1 && delta_grid_size >= 1,
        "grid sizes and k_max must be at least 1"
    );
    let t_max = 1.0 / (2.0 * data.lipschitz);
    let delta0 = data.delta();
    let mut best: Option<BoundCertificate> = None;
    for j in 1..=t_grid_size {
        let t = j as f64 * t_max / (t_grid_size + 1) as f64;
        for m in 1..=delta_grid_size {
            let delta = 2.0 * delta0 * m as f64 / delta_grid_size as f64;
            let n_pieces = pieces_for(delta, t);
            for k in 1..=k_max {
                if let ConditionOutcome::Feasible { certificate } =
                    check_conditions_free_delta(data, t, n_pieces, k, delta)
                {
                    if better(&certificate, &best) {
                        best = Some(certificate);
                    }
                    break;
                }
            }
        }
    }
    match best {
        Some(certificate) => SearchOutcome::Feasible { certificate },
        None => SearchOutcome::Infeasible { grid_points: t_grid_size * delta_grid_size, k_max },
    }
}

fn better(candidate: &BoundCertificate, best: &Option<BoundCertificate>) -> bool {
    let Some(b) = best else { return true };
    let key = |c: &BoundCertificate| (c.n_pieces * c.k, c.k, c.n_pieces);
    key(candidate) < key(b)
}

/// Feasibility report for the quadratic shortcut, which skips the chained
/// construction entirely: with c₁ = K²δL it asks for
/// K²e^{−2λδ} + c₁² + 2KδL(1+c₁)(K+c₁) < 1 along with KδL < 1.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticReport {
    pub feasible: bool,
    /// First δ on the ascending grid satisfying both inequalities.
    pub delta: Option<f64>,
    /// Left-hand side at that δ.
    pub lhs: Option<f64>,
    /// Smallest left-hand side seen over the whole grid, and where.
    pub min_lhs: f64,
    pub min_lhs_delta: f64,
    pub grid_points: usize,
}

/// Sweep δ over a uniform grid in (0, 1/(2L)) and report the first δ (if
/// any) at which a plain quadratic certificate is guaranteed to exist.
pub fn quadratic_test(data: &StabilityData, delta_grid_size: usize) -> QuadraticReport {
    assert!(delta_grid_size >= 1, "grid size must be at least 1");
    let (kk, l, lam) = (data.overshoot, data.lipschitz, data.lambda);
    let d_max = 1.0 / (2.0 * l);
    let mut report = QuadraticReport {
        feasible: false,
        delta: None,
        lhs: None,
        min_lhs: f64::INFINITY,
        min_lhs_delta: f64::NAN,
        grid_points: delta_grid_size,
    };
    for m in 1..=delta_grid_size {
        let delta = m as f64 * d_max / (delta_grid_size + 1) as f64;
        let c1 = kk * kk * delta * l;
        if !strictly_less(kk * delta * l, 1.0) {
            continue;
        }
        let lhs = kk * kk * (-2.0 * lam * delta).exp()
            + c1 * c1
            + 2.0 * kk * delta * l * (1.0 + c1) * (kk + c1);
        if lhs < report.min_lhs {
            report.min_lhs = lhs;
            report.min_lhs_delta = delta;
        }
        if !report.feasible && strictly_less(lhs, 1.0) {
            report.feasible = true;
            report.delta = Some(delta);
            report.lhs = Some(lhs);
        }
    }
    report
}
