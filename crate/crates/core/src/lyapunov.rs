//! Lyapunov candidates built by integrating the squared piecewise flow
//! approximation, together with exact rational Gram certificates.
//!
//! The candidate is `V(x) = integral of ||G(s, x)||^2 over s in [0, delta]`,
//! evaluated piece by piece. Because each piece is polynomial in (s, x), every
//! block integral is a quadratic form in the s-coefficients of the piece: with
//! `R_a(x)` the coefficient of `s^a`, the block contributes
//! `sum_{a,b} R_a(x)^T R_b(x) * w^{a+b+1}/(a+b+1)` for a block of width `w`.
//! Storing that moment matrix alongside the coefficient basis gives a
//! sum-of-squares witness that can be checked in exact arithmetic: the matrix
//! is positive semidefinite and the quadratic form expands back to `V`
//! term for term.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::picard::{PiecewiseApprox, PolyTrajectory};
use crate::polyalg::{PolyError, Polynomial, VectorField};

/// Errors from candidate construction and certificate checking.
#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("integration endpoint must be positive, got {0}")]
    NonpositiveDelta(BigRational),
    #[error("integration endpoint {delta} exceeds the approximation horizon {horizon}")]
    DeltaBeyondHorizon { delta: BigRational, horizon: BigRational },
    #[error("matrix row {row} has {got} entries, expected {expected}")]
    NotSquare { row: usize, got: usize, expected: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One additive block of the certificate: the quadratic form
/// `basis^T * matrix * basis` with a symmetric rational matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramBlock {
    /// Coefficient polynomials of the block's piece, grouped by s-power:
    /// entry `a*n + c` is the coefficient of `s^a` in coordinate `c + 1`.
    pub basis: Vec<Polynomial>,
    /// Moment matrix of the block; row-major, entries as [numer, denom].
    #[serde(with = "rational_matrix")]
    pub matrix: Vec<Vec<BigRational>>,
}

/// A sum of Gram blocks, one per integration interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramForm {
    pub blocks: Vec<GramBlock>,
}

/// A constructed candidate with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    /// The candidate: a t-free polynomial in x vanishing at the origin.
    #[serde(rename = "V")]
    pub v: Polynomial,
    /// Upper integration endpoint.
    #[serde(with = "rational_pair")]
    pub delta: BigRational,
    /// Number of flow pieces the integral actually touched.
    pub pieces_used: usize,
    pub gram: GramForm,
}

/// Verdict of an exact positive-semidefiniteness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsdOutcome {
    pub is_psd: bool,
    /// Pivot index (in the original matrix) certifying failure.
    pub witness: Option<usize>,
}

impl GramForm {
    /// Expand `sum over blocks of basis^T * matrix * basis` by brute force,
    /// skipping exactly-zero entries. This is the reconstruction half of the
    /// certificate: the result must equal the stored candidate term for term.
    pub fn reconstruct(&self) -> Polynomial {
        let nvars = self
            .blocks
            .first()
            .and_then(|b| b.basis.first())
            .map_or(0, Polynomial::nvars);
        let two = BigRational::from_integer(BigInt::from(2));
        let mut acc = Polynomial::zero(nvars);
        for block in &self.blocks {
            for (i, bi) in block.basis.iter().enumerate() {
                if bi.is_zero() {
                    continue;
                }
                // Stored matrices are symmetric, so the strict upper triangle
                // counts twice.
                for (j, bj) in block.basis.iter().enumerate().skip(i) {
                    let entry = &block.matrix[i][j];
                    if entry.is_zero() || bj.is_zero() {
                        continue;
                    }
                    let weight = if i == j { entry.clone() } else { entry * &two };
                    acc.checked_add_scaled(&(bi * bj), &weight)
                        .expect("basis entries share one arity");
                }
            }
        }
        acc
    }

    /// Run `psd_check` on every block; the first failure is reported as
    /// (block index, pivot witness).
    pub fn check_psd(&self) -> Result<(), (usize, usize)> {
        for (b, block) in self.blocks.iter().enumerate() {
            let outcome =
                psd_check(&block.matrix).expect("stored Gram matrices are square and symmetric");
            if !outcome.is_psd {
                return Err((b, outcome.witness.unwrap_or(0)));
            }
        }
        Ok(())
    }
}

/// `w^(a+b+1) / (a+b+1)`, the integral of `s^(a+b)` over [0, w].
fn moment(w_pows: &[BigRational], a: usize, b: usize) -> BigRational {
    let e = a + b + 1;
    &w_pows[e] / BigRational::from_integer(BigInt::from(e))
}

/// Gram block and integral contribution of one piece over [0, width].
fn block_for_piece(piece: &PolyTrajectory, width: &BigRational) -> (GramBlock, Polynomial) {
    let n = piece.dim();
    let n_slices = piece.deg_t() as usize + 1;
    let slices: Vec<Vec<Polynomial>> = piece
        .components()
        .iter()
        .map(|p| {
            let mut v = p.t_coefficients();
            v.resize(n_slices, Polynomial::zero(n));
            v
        })
        .collect();

    let mut basis = Vec::with_capacity(n_slices * n);
    for a in 0..n_slices {
        for slice in &slices {
            basis.push(slice[a].clone());
        }
    }

    let mut w_pows = vec![BigRational::one()];
    for e in 1..=(2 * n_slices) {
        w_pows.push(&w_pows[e - 1] * width);
    }

    let size = n_slices * n;
    let mut matrix = vec![vec![BigRational::zero(); size]; size];
    for a in 0..n_slices {
        for b in 0..n_slices {
            let mom = moment(&w_pows, a, b);
            for c in 0..n {
                matrix[a * n + c][b * n + c] = mom.clone();
            }
        }
    }

    let two = BigRational::from_integer(BigInt::from(2));
    let mut v = Polynomial::zero(n);
    for comp in &slices {
        for a in 0..n_slices {
            if comp[a].is_zero() {
                continue;
            }
            for b in a..n_slices {
                if comp[b].is_zero() {
                    continue;
                }
                let mut coef = moment(&w_pows, a, b);
                if a != b {
                    coef = &coef * &two;
                }
                v.checked_add_scaled(&(&comp[a] * &comp[b]), &coef)
                    .expect("slices share the component arity");
            }
        }
    }

    (GramBlock { basis, matrix }, v)
}

/// Integrate `||g(s, x)||^2` over s in [0, delta] exactly.
///
/// Pieces wholly inside the range contribute over their full width; the piece
/// containing `delta` contributes a truncated block. Requires
/// `0 < delta <= n_pieces * width`. The candidate vanishes at the origin
/// because every piece fixes it, and it carries one Gram block per interval
/// touched, so positivity can be certified after the fact in exact
/// arithmetic.
pub fn construct_v(
    g: &PiecewiseApprox,
    delta: &BigRational,
) -> Result<LyapunovResult, LyapunovError> {
    if !delta.is_positive() {
        return Err(LyapunovError::NonpositiveDelta(delta.clone()));
    }
    let horizon = g.horizon();
    if delta > &horizon {
        return Err(LyapunovError::DeltaBeyondHorizon { delta: delta.clone(), horizon });
    }
    let width = g.width();
    let full = (delta / width)
        .floor()
        .to_integer()
        .to_usize()
        .expect("piece count fits in usize");
    let rem = delta - &(BigRational::from_integer(BigInt::from(full)) * width);

    let mut blocks = Vec::new();
    let mut v = Polynomial::zero(g.dim());
    for piece in &g.pieces()[..full] {
        let (block, part) = block_for_piece(piece, width);
        blocks.push(block);
        v.checked_add_assign(&part).expect("pieces share the field arity");
    }
    if !rem.is_zero() {
        let (block, part) = block_for_piece(&g.pieces()[full], &rem);
        blocks.push(block);
        v.checked_add_assign(&part).expect("pieces share the field arity");
    }

    debug_assert!(v.constant_term().is_zero(), "candidate must vanish at the origin");
    let pieces_used = blocks.len();
    Ok(LyapunovResult { v, delta: delta.clone(), pieces_used, gram: GramForm { blocks } })
}

/// The certificate alone, without assembling the candidate polynomial.
pub fn gram_extract(
    g: &PiecewiseApprox,
    delta: &BigRational,
) -> Result<GramForm, LyapunovError> {
    construct_v(g, delta).map(|r| r.gram)
}

/// Candidate for the two-step approximation `x + s f(x)` in closed form:
///
/// `V(x) = delta ||x||^2 + delta^2 x.f(x) + (delta^3 / 3) ||f(x)||^2`
///
/// with the single Gram block over basis (x1..xn, f1..fn). Equal, basis and
/// matrix included, to `construct_v` on a one-piece two-step approximation
/// with width `delta`.
pub fn closed_form_quadratic(
    f: &VectorField,
    delta: &BigRational,
) -> Result<LyapunovResult, LyapunovError> {
    if !delta.is_positive() {
        return Err(LyapunovError::NonpositiveDelta(delta.clone()));
    }
    let n = f.dim();
    let d2 = delta * delta;
    let d3 = &d2 * delta;
    let m01 = &d2 / BigRational::from_integer(BigInt::from(2));
    let m11 = &d3 / BigRational::from_integer(BigInt::from(3));

    let mut basis: Vec<Polynomial> = (1..=n).map(|c| Polynomial::var(n, c)).collect();
    basis.extend(f.components().iter().cloned());

    let size = 2 * n;
    let mut matrix = vec![vec![BigRational::zero(); size]; size];
    let mut v = Polynomial::zero(n);
    for c in 0..n {
        matrix[c][c] = delta.clone();
        matrix[c][n + c] = m01.clone();
        matrix[n + c][c] = m01.clone();
        matrix[n + c][n + c] = m11.clone();

        let xc = &basis[c];
        let fc = &basis[n + c];
        v = &v + &(xc * xc).scale(delta);
        v = &v + &(xc * fc).scale(&d2);
        v = &v + &(fc * fc).scale(&m11);
    }

    Ok(LyapunovResult {
        v,
        delta: delta.clone(),
        pieces_used: 1,
        gram: GramForm { blocks: vec![GramBlock { basis, matrix }] },
    })
}

/// Exact positive-semidefiniteness test by LDL^T elimination with
/// largest-diagonal pivoting, entirely in rational arithmetic.
///
/// Rejects non-square or non-symmetric input. On failure the outcome carries
/// the pivot index (in the original indexing) where semidefiniteness broke:
/// either a negative diagonal entry surfaced, or the diagonal hit zero while
/// its row still had mass, which forces a negative 2x2 minor.
#[allow(clippy::needless_range_loop)] // symmetric double-indexing reads clearer than zipped iterators
pub fn psd_check(m: &[Vec<BigRational>]) -> Result<PsdOutcome, LyapunovError> {
    let size = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != size {
            return Err(LyapunovError::NotSquare { row: i, got: row.len(), expected: size });
        }
    }
    for i in 0..size {
        for j in (i + 1)..size {
            if m[i][j] != m[j][i] {
                return Err(LyapunovError::NotSymmetric { i, j });
            }
        }
    }

    let mut a = m.to_vec();
    let mut active: Vec<usize> = (0..size).collect();
    while !active.is_empty() {
        let pos = (0..active.len())
            .max_by(|&p, &q| a[active[p]][active[p]].cmp(&a[active[q]][active[q]]))
            .expect("active set is nonempty");
        let p = active[pos];
        let pivot = a[p][p].clone();

        if pivot.is_negative() {
            return Ok(PsdOutcome { is_psd: false, witness: Some(p) });
        }
        if pivot.is_zero() {
            // No positive diagonal remains, so the rest must vanish entirely.
            for &i in &active {
                for &j in &active {
                    if !a[i][j].is_zero() {
                        return Ok(PsdOutcome { is_psd: false, witness: Some(i) });
                    }
                }
            }
            return Ok(PsdOutcome { is_psd: true, witness: None });
        }

        active.remove(pos);
        let pivot_row = a[p].clone();
        for &i in &active {
            if a[i][p].is_zero() {
                continue;
            }
            let factor = &a[i][p] / &pivot;
            for &j in &active {
                if pivot_row[j].is_zero() {
                    continue;
                }
                a[i][j] = &a[i][j] - &(&factor * &pivot_row[j]);
            }
        }
    }
    Ok(PsdOutcome { is_psd: true, witness: None })
}

fn rational_to_pair(v: &BigRational) -> (serde_json::Number, serde_json::Number) {
    (
        crate::polyalg::bigint_to_number(v.numer()),
        crate::polyalg::bigint_to_number(v.denom()),
    )
}

fn pair_to_rational(
    numer: &serde_json::Number,
    denom: &serde_json::Number,
) -> Result<BigRational, String> {
    let n = crate::polyalg::number_to_bigint(numer)?;
    let d = crate::polyalg::number_to_bigint(denom)?;
    if d.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(n, d))
}

mod rational_pair {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        rational_to_pair(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let (numer, denom) = <(serde_json::Number, serde_json::Number)>::deserialize(d)?;
        pair_to_rational(&numer, &denom).map_err(D::Error::custom)
    }
}

mod rational_matrix {
    use super::*;

    #[allow(clippy::ptr_arg)]
    pub fn serialize<S: Serializer>(m: &Vec<Vec<BigRational>>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<_>> =
            m.iter().map(|row| row.iter().map(rational_to_pair).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<Vec<BigRational>>, D::Error> {
        let rows =
            <Vec<Vec<(serde_json::Number, serde_json::Number)>>>::deserialize(d)?;
        rows.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|(n, den)| pair_to_rational(&n, &den).map_err(D::Error::custom))
                    .collect()
            })
            .collect()
    }
}
