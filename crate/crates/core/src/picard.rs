//! Picard iteration on polynomial candidate trajectories and its piecewise
//! extension over consecutive time intervals.
//!
//! One Picard step maps a candidate trajectory y(t,x) to x + ∫₀ᵗ f(y(s,x))ds.
//! Starting from the zero candidate, k steps produce an exact polynomial
//! approximation of the flow map on a short interval. [`extend`] chains N
//! copies of that approximation: piece i+1 re-seeds the base polynomial at
//! the previous piece's endpoint, so the chain covers [0, N·T] while staying
//! polynomial in the initial state. [`GkEvaluator`] performs the same
//! chaining numerically, one interval at a time, which avoids materializing
//! the composed pieces when their term count is prohibitive.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::polyalg::{CompiledPoly, PolyError, Polynomial, VectorField};
use crate::ratio::{format_rational, rat_to_f64};

/// Default ceiling on the stored term count of any one trajectory map.
pub const DEFAULT_TERM_CAP: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum PicardError {
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("piece count must be at least 1")]
    ZeroPieces,
    #[error("interval width must be positive, got {0}")]
    NonpositiveWidth(String),
    #[error("time {s} lies outside the covered range [0, {max}]")]
    TimeOutOfRange { s: f64, max: f64 },
    #[error(
        "term cap {cap} exceeded building piece {piece}: about {predicted_terms} terms expected \
         (x-degree may reach {predicted_degree}); raise the cap to materialize anyway"
    )]
    TermCapExceeded {
        cap: usize,
        piece: usize,
        predicted_terms: BigUint,
        predicted_degree: BigUint,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A polynomial map (t, x) ↦ z(t,x) ∈ R^n, one component per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrajectory {
    components: Vec<Polynomial>,
}

impl PolyTrajectory {
    /// Wrap components, which must all share the arity n = component count.
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let n = components.len();
        for c in &components {
            if c.nvars() != n {
                return Err(PolyError::DimensionMismatch { left: n, right: c.nvars() });
            }
        }
        Ok(PolyTrajectory { components })
    }

    /// The zero map, the seed of the iteration.
    pub fn zero(n: usize) -> Self {
        PolyTrajectory { components: vec![Polynomial::zero(n); n] }
    }

    /// The identity map (t, x) ↦ x.
    pub fn identity(n: usize) -> Self {
        PolyTrajectory { components: (1..=n).map(|i| Polynomial::var(n, i)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    /// Maximum state degree over all components.
    pub fn deg_x(&self) -> u32 {
        self.components.iter().map(Polynomial::deg_x).max().unwrap_or(0)
    }

    /// Maximum time degree over all components.
    pub fn deg_t(&self) -> u32 {
        self.components.iter().map(Polynomial::deg_t).max().unwrap_or(0)
    }

    /// Total stored term count across components.
    pub fn num_terms(&self) -> usize {
        self.components.iter().map(Polynomial::num_terms).sum()
    }

    pub fn eval_f64(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        let mut point = Vec::with_capacity(x.len() + 1);
        point.push(t);
        point.extend_from_slice(x);
        self.components.iter().map(|c| c.eval_f64(&point)).collect()
    }

    pub fn eval_rational(
        &self,
        t: &BigRational,
        x: &[BigRational],
    ) -> Result<Vec<BigRational>, PolyError> {
        let mut point = Vec::with_capacity(x.len() + 1);
        point.push(t.clone());
        point.extend_from_slice(x);
        self.components.iter().map(|c| c.eval_rational(&point)).collect()
    }

    /// Freeze time at an exact value, leaving a polynomial map in x alone.
    pub fn at_time(&self, t: &BigRational) -> Vec<Polynomial> {
        self.components.iter().map(|c| c.substitute_t(t)).collect()
    }

    /// Substitute a polynomial map of x for the state variables, keeping t.
    pub fn compose_inner(&self, inner: &[Polynomial]) -> Result<PolyTrajectory, PolyError> {
        let n = self.dim();
        if inner.len() != n {
            return Err(PolyError::ArityMismatch { expected: n, got: inner.len() });
        }
        let mut subst = Vec::with_capacity(n + 1);
        subst.push(Polynomial::time(n));
        subst.extend_from_slice(inner);
        let components = self
            .components
            .iter()
            .map(|c| c.compose(&subst))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyTrajectory { components })
    }

    /// Float-coefficient snapshots of every component, for fast sampling.
    pub fn compile(&self) -> Vec<CompiledPoly> {
        self.components.iter().map(Polynomial::compile).collect()
    }
}

/// One Picard step: y ↦ x + ∫₀ᵗ f(y(s,x)) ds, exact in rational arithmetic.
pub fn picard_step(f: &VectorField, y: &PolyTrajectory) -> Result<PolyTrajectory, PolyError> {
    let n = f.dim();
    if y.dim() != n {
        return Err(PolyError::DimensionMismatch { left: n, right: y.dim() });
    }
    let mut subst = Vec::with_capacity(n + 1);
    subst.push(Polynomial::time(n));
    subst.extend_from_slice(y.components());
    let mut components = Vec::with_capacity(n);
    for (i, fi) in f.components().iter().enumerate() {
        let integrand = fi.compose(&subst)?;
        let integral = integrand.indefinite_integrate_t();
        components.push(&Polynomial::var(n, i + 1) + &integral);
    }
    Ok(PolyTrajectory { components })
}

/// k-fold Picard step from the zero seed. The first step always lands on the
/// identity map because f vanishes at the origin.
pub fn picard_iterate(f: &VectorField, k: usize) -> Result<PolyTrajectory, PicardError> {
    picard_iterate_capped(f, k, usize::MAX)
}

fn picard_iterate_capped(
    f: &VectorField,
    k: usize,
    cap: usize,
) -> Result<PolyTrajectory, PicardError> {
    if k == 0 {
        return Err(PicardError::ZeroIterations);
    }
    let n = f.dim();
    let q = f.degree() as u128;
    let mut y = PolyTrajectory::zero(n);
    for step in 0..k {
        if step > 0 {
            // Degree recursion for one step: deg_x scales by q, deg_t gains
            // q·deg_t + 1 from the composed integrand. Dense monomial
            // counting on those bounds predicts the cost before paying it.
            let dx = q.saturating_mul(y.deg_x() as u128);
            let dt = q.saturating_mul(y.deg_t() as u128) + 1;
            let predicted = BigUint::from(n)
                * BigUint::from(dt + 1)
                * monomial_count(n, &BigUint::from(dx));
            if predicted > BigUint::from(cap) {
                return Err(PicardError::TermCapExceeded {
                    cap,
                    piece: 0,
                    predicted_terms: predicted,
                    predicted_degree: BigUint::from(f.degree()).pow(saturating_exp(k, 1)),
                });
            }
        }
        y = picard_step(f, &y)?;
    }
    Ok(y)
}

/// Number of monomials in n variables of degree at most `deg`.
fn monomial_count(n: usize, deg: &BigUint) -> BigUint {
    let mut acc = BigUint::one();
    for j in 1..=n as u64 {
        acc = acc * (deg + BigUint::from(j)) / BigUint::from(j);
    }
    acc
}

/// q-exponent N·k − 1 clamped into u32; the counts in play keep it tiny.
fn saturating_exp(nk: usize, sub: usize) -> u32 {
    u32::try_from(nk.saturating_sub(sub)).unwrap_or(u32::MAX)
}

/// The chained approximation: piece i covers [iT, iT+T], re-seeded at the
/// previous piece's endpoint so the joints match exactly.
#[derive(Debug, Clone)]
pub struct PiecewiseApprox {
    pieces: Vec<PolyTrajectory>,
    width: BigRational,
    k: usize,
}

impl PiecewiseApprox {
    pub fn pieces(&self) -> &[PolyTrajectory] {
        &self.pieces
    }

    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> &BigRational {
        &self.width
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    /// Exact total time covered, N·T.
    pub fn horizon(&self) -> BigRational {
        &self.width * BigRational::from_integer(self.pieces.len().into())
    }

    /// Maximum state degree over all pieces.
    pub fn deg_x(&self) -> u32 {
        self.pieces.iter().map(PolyTrajectory::deg_x).max().unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.pieces.iter().map(PolyTrajectory::num_terms).sum()
    }

    /// Evaluate at global time s ∈ [0, N·T]: selects piece ⌊s/T⌋ (clamped to
    /// the last piece at the right endpoint) at local time s − iT.
    pub fn eval(&self, s: f64, x: &[f64]) -> Result<Vec<f64>, PicardError> {
        let tw = rat_to_f64(&self.width);
        let max = tw * self.pieces.len() as f64;
        let slack = 1e-12 * max.max(1.0);
        if !(s >= -slack && s <= max + slack) {
            return Err(PicardError::TimeOutOfRange { s, max });
        }
        let i = ((s / tw).floor() as usize).min(self.pieces.len() - 1);
        let local = (s - i as f64 * tw).max(0.0);
        Ok(self.pieces[i].eval_f64(local, x)?)
    }

    /// Exact-arithmetic version of [`eval`](Self::eval).
    pub fn eval_rational(
        &self,
        s: &BigRational,
        x: &[BigRational],
    ) -> Result<Vec<BigRational>, PicardError> {
        let max = self.horizon();
        if s.is_negative() || *s > max {
            return Err(PicardError::TimeOutOfRange {
                s: rat_to_f64(s),
                max: rat_to_f64(&max),
            });
        }
        let ratio = s / &self.width;
        let mut i: usize = ratio
            .floor()
            .to_integer()
            .try_into()
            .expect("piece index fits usize");
        i = i.min(self.pieces.len() - 1);
        let local = s - BigRational::from_integer(i.into()) * &self.width;
        Ok(self.pieces[i].eval_rational(&local, x)?)
    }

    /// A numeric evaluator that chains the base piece instead of reading the
    /// stored compositions; useful for cross-checks and cheap sampling.
    pub fn evaluator(&self) -> GkEvaluator {
        GkEvaluator::from_base(self.pieces[0].clone(), self.pieces.len(), self.width.clone())
            .expect("stored approximation is well formed")
    }
}

/// Chain N copies of the k-step Picard approximation over intervals of width
/// T, materializing every composed piece. Construction is rejected when the
/// dense-count prediction for a piece exceeds `cap`: the composed maps grow
/// like q^{Nk−1} in state degree, which turns pathological quickly.
pub fn extend(
    f: &VectorField,
    k: usize,
    n_pieces: usize,
    width: &BigRational,
    cap: usize,
) -> Result<PiecewiseApprox, PicardError> {
    if n_pieces == 0 {
        return Err(PicardError::ZeroPieces);
    }
    if !width.is_positive() {
        return Err(PicardError::NonpositiveWidth(format_rational(width)));
    }
    let base = picard_iterate_capped(f, k, cap)?;
    let mut pieces = vec![base];
    for piece in 1..n_pieces {
        let inner = pieces[piece - 1].at_time(width);
        let inner_degs: Vec<u32> = inner.iter().map(Polynomial::deg_x).collect();
        let predicted = predict_composed_terms(&pieces[0], &inner_degs);
        if predicted > BigUint::from(cap) {
            return Err(PicardError::TermCapExceeded {
                cap,
                piece,
                predicted_terms: predicted,
                predicted_degree: BigUint::from(f.degree())
                    .pow(saturating_exp(n_pieces * k, 1)),
            });
        }
        let next = pieces[0].compose_inner(&inner)?;
        pieces.push(next);
    }
    Ok(PiecewiseApprox { pieces, width: width.clone(), k })
}

/// Dense-count bound on base ∘ inner: per component, the worst composed
/// x-degree over the base's monomials times the surviving t-degrees.
fn predict_composed_terms(base: &PolyTrajectory, inner_degs: &[u32]) -> BigUint {
    let n = base.dim();
    let mut total = BigUint::zero();
    for comp in base.components() {
        let mut dmax: u128 = 0;
        for m in comp.terms().keys() {
            let mut d: u128 = 0;
            for j in 1..=n {
                d += m.0[j] as u128 * inner_degs[j - 1] as u128;
            }
            dmax = dmax.max(d);
        }
        let dt = comp.deg_t() as u64;
        total += BigUint::from(dt + 1) * monomial_count(n, &BigUint::from(dmax));
    }
    total
}

/// Numeric evaluator for the chained approximation that never materializes
/// the composed pieces: it steps the base map across whole intervals and
/// finishes with the local remainder. Algebraically identical to evaluating
/// the stored pieces, but memory stays proportional to the base alone.
pub struct GkEvaluator {
    base: PolyTrajectory,
    compiled: Vec<CompiledPoly>,
    width: BigRational,
    width_f: f64,
    n_pieces: usize,
}

impl GkEvaluator {
    pub fn new(
        f: &VectorField,
        k: usize,
        n_pieces: usize,
        width: &BigRational,
    ) -> Result<Self, PicardError> {
        let base = picard_iterate(f, k)?;
        GkEvaluator::from_base(base, n_pieces, width.clone())
    }

    pub fn from_base(
        base: PolyTrajectory,
        n_pieces: usize,
        width: BigRational,
    ) -> Result<Self, PicardError> {
        if n_pieces == 0 {
            return Err(PicardError::ZeroPieces);
        }
        if !width.is_positive() {
            return Err(PicardError::NonpositiveWidth(format_rational(&width)));
        }
        let compiled = base.compile();
        let width_f = rat_to_f64(&width);
        Ok(GkEvaluator { base, compiled, width, width_f, n_pieces })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn n_pieces(&self) -> usize {
        self.n_pieces
    }

    pub fn horizon(&self) -> f64 {
        self.width_f * self.n_pieces as f64
    }

    pub fn eval(&self, s: f64, x: &[f64]) -> Result<Vec<f64>, PicardError> {
        let max = self.horizon();
        let slack = 1e-12 * max.max(1.0);
        if !(s >= -slack && s <= max + slack) {
            return Err(PicardError::TimeOutOfRange { s, max });
        }
        let i = ((s / self.width_f).floor() as usize).min(self.n_pieces - 1);
        let n = self.dim();
        let mut point = vec![0.0; n + 1];
        let mut w = x.to_vec();
        for _ in 0..i {
            point[0] = self.width_f;
            point[1..].copy_from_slice(&w);
            for (c, slot) in self.compiled.iter().zip(w.iter_mut()) {
                *slot = c.eval(&point);
            }
        }
        point[0] = (s - i as f64 * self.width_f).max(0.0);
        point[1..].copy_from_slice(&w);
        Ok(self.compiled.iter().map(|c| c.eval(&point)).collect())
    }

    /// Exact chained evaluation; agrees with the materialized pieces exactly
    /// on rational inputs.
    pub fn eval_rational(
        &self,
        s: &BigRational,
        x: &[BigRational],
    ) -> Result<Vec<BigRational>, PicardError> {
        let max = &self.width * BigRational::from_integer(self.n_pieces.into());
        if s.is_negative() || *s > max {
            return Err(PicardError::TimeOutOfRange {
                s: rat_to_f64(s),
                max: rat_to_f64(&max),
            });
        }
        let mut i: usize = (s / &self.width)
            .floor()
            .to_integer()
            .try_into()
            .expect("piece index fits usize");
        i = i.min(self.n_pieces - 1);
        let mut w = x.to_vec();
        for _ in 0..i {
            w = self.base.eval_rational(&self.width, &w)?;
        }
        let local = s - BigRational::from_integer(i.into()) * &self.width;
        Ok(self.base.eval_rational(&local, &w)?)
    }
}

/// The symbolic defect d(t,x) = (∂y/∂x)·f(x) − ∂y/∂t, the residual of y
/// against the flow equation along field directions. It vanishes identically
/// only for the true flow map.
pub fn derivative_defect(
    f: &VectorField,
    y: &PolyTrajectory,
) -> Result<PolyTrajectory, PolyError> {
    let n = f.dim();
    if y.dim() != n {
        return Err(PolyError::DimensionMismatch { left: n, right: y.dim() });
    }
    let mut components = Vec::with_capacity(n);
    for yi in y.components() {
        let mut acc = Polynomial::zero(n);
        for (j, fj) in f.components().iter().enumerate() {
            acc = &acc + &(&yi.differentiate(j + 1)? * fj);
        }
        acc = &acc - &yi.differentiate(0)?;
        components.push(acc);
    }
    Ok(PolyTrajectory { components })
}
