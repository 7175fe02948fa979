//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms live in a `BTreeMap` keyed by the graded-lex [`Monomial`] order, so
//! every iteration, serialization, and Gram basis derived from a polynomial
//! is deterministic. Coefficients are `BigRational`; nothing here rounds.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::monomial::Monomial;
use super::PolyError;
use crate::ratio::rat_to_f64;

/// Sparse polynomial in (t, x1..xn) with `BigRational` coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    /// Zero polynomial in n state variables.
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    /// Constant polynomial.
    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::constant(nvars), c);
        }
        p
    }

    /// The polynomial x_i (1-based state index).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.terms.insert(Monomial::var(nvars, i), BigRational::one());
        p
    }

    /// The polynomial t.
    pub fn time(nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.terms.insert(Monomial::time(nvars), BigRational::one());
        p
    }

    /// Build from raw (monomial, coefficient) pairs; zero coefficients drop.
    pub fn from_terms<I>(nvars: usize, iter: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, BigRational)>,
    {
        let mut p = Self::zero(nvars);
        for (m, c) in iter {
            if m.nvars() != nvars {
                return Err(PolyError::DimensionMismatch { left: nvars, right: m.nvars() });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Number of state variables (t is always implicitly present).
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Immutable view of the term map.
    pub fn terms(&self) -> &BTreeMap<Monomial, BigRational> {
        &self.terms
    }

    /// Number of stored (nonzero) terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree in the state variables; 0 for the zero polynomial.
    pub fn deg_x(&self) -> u32 {
        self.terms.keys().map(Monomial::deg_x).max().unwrap_or(0)
    }

    /// Degree in t; 0 for the zero polynomial.
    pub fn deg_t(&self) -> u32 {
        self.terms.keys().map(Monomial::deg_t).max().unwrap_or(0)
    }

    /// Coefficient of a monomial (zero when absent).
    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// The constant term.
    pub fn constant_term(&self) -> BigRational {
        self.coeff(&Monomial::constant(self.nvars))
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }

    /// Scale the terms by the denominators' lcm, returning integer
    /// coefficients and that lcm. Coefficient denominators are positive by
    /// `Ratio`'s normalization, so the lcm is too.
    fn integerized(terms: &BTreeMap<Monomial, BigRational>) -> (Vec<(Monomial, BigInt)>, BigInt) {
        let mut den = BigInt::one();
        for c in terms.values() {
            den = den.lcm(c.denom());
        }
        let scaled = terms
            .iter()
            .map(|(m, c)| (m.clone(), c.numer() * (&den / c.denom())))
            .collect();
        (scaled, den)
    }

    /// Sum; errors when the operands disagree on variable count.
    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    /// Difference; errors when the operands disagree on variable count.
    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    /// In-place sum; errors when the operands disagree on variable count.
    /// Accumulators should prefer this over `+`, which clones its left side.
    pub fn checked_add_assign(&mut self, other: &Polynomial) -> Result<(), PolyError> {
        self.check_dim(other)?;
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
        Ok(())
    }

    /// In-place `self += other * factor` without materializing the scaled
    /// intermediate.
    pub fn checked_add_scaled(
        &mut self,
        other: &Polynomial,
        factor: &BigRational,
    ) -> Result<(), PolyError> {
        self.check_dim(other)?;
        if factor.is_zero() {
            return Ok(());
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * factor);
        }
        Ok(())
    }

    /// Product; errors when the operands disagree on variable count.
    ///
    /// Denominators are cleared up front so the quadratic inner loop runs on
    /// integers with no gcd reduction per term pair; each output coefficient
    /// is normalized exactly once at the end.
    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.nvars);
        if self.terms.is_empty() || other.terms.is_empty() {
            return Ok(out);
        }
        let (a_terms, a_den) = Self::integerized(&self.terms);
        let (b_terms, b_den) = Self::integerized(&other.terms);
        let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &a_terms {
            for (mb, cb) in &b_terms {
                let product = ca * cb;
                match acc.entry(ma.mul(mb)) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += product;
                    }
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(product);
                    }
                }
            }
        }
        let den = a_den * b_den;
        for (m, numerator) in acc {
            if !numerator.is_zero() {
                out.terms.insert(m, BigRational::new(numerator, den.clone()));
            }
        }
        Ok(out)
    }

    /// Multiply by a scalar.
    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        let mut out = Self::zero(self.nvars);
        for (m, a) in &self.terms {
            out.terms.insert(m.clone(), a * c);
        }
        out
    }

    /// Non-negative integer power by repeated multiplication.
    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Self::constant(self.nvars, BigRational::one());
        for _ in 0..e {
            out = out.checked_mul(self).expect("same arity");
        }
        out
    }

    /// Substitute `subst[0]` for t and `subst[i]` for x_i. All substituted
    /// polynomials must share one variable count, which the result adopts.
    pub fn compose(&self, subst: &[Polynomial]) -> Result<Polynomial, PolyError> {
        if subst.len() != self.nvars + 1 {
            return Err(PolyError::ArityMismatch { expected: self.nvars + 1, got: subst.len() });
        }
        let target = subst[0].nvars();
        for s in subst {
            if s.nvars() != target {
                return Err(PolyError::DimensionMismatch { left: target, right: s.nvars() });
            }
        }
        // Cache powers of each substituted variable: compositions reuse them
        // heavily and they dominate the cost.
        let mut powers: Vec<Vec<Polynomial>> =
            vec![vec![Polynomial::constant(target, BigRational::one())]; subst.len()];
        let power = |slot: usize, e: u32, powers: &mut Vec<Vec<Polynomial>>| -> Polynomial {
            while powers[slot].len() <= e as usize {
                let next = powers[slot].last().unwrap().checked_mul(&subst[slot]).unwrap();
                powers[slot].push(next);
            }
            powers[slot][e as usize].clone()
        };
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target, c.clone());
            for (slot, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = term.checked_mul(&power(slot, e, &mut powers))?;
                }
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// Partial derivative; var 0 is t, 1..=n are the state variables.
    pub fn differentiate(&self, var: usize) -> Result<Polynomial, PolyError> {
        if var > self.nvars {
            return Err(PolyError::VarIndexOutOfRange { var, nvars: self.nvars });
        }
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut me = m.clone();
            me.0[var] = e - 1;
            out.add_term(me, c * BigRational::from_integer(BigInt::from(e)));
        }
        Ok(out)
    }

    /// Antiderivative in t with zero constant of integration.
    pub fn indefinite_integrate_t(&self) -> Polynomial {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut me = m.clone();
            me.0[0] += 1;
            let denom = BigRational::from_integer(BigInt::from(me.0[0]));
            out.terms.insert(me, c / denom);
        }
        out
    }

    /// Definite integral of t over [lo, hi]; the result is t-free.
    pub fn integrate_t(&self, lo: &BigRational, hi: &BigRational) -> Polynomial {
        let max_e = self.deg_t() as usize + 1;
        let mut lo_pow = Vec::with_capacity(max_e + 1);
        let mut hi_pow = Vec::with_capacity(max_e + 1);
        lo_pow.push(BigRational::one());
        hi_pow.push(BigRational::one());
        for i in 1..=max_e {
            lo_pow.push(&lo_pow[i - 1] * lo);
            hi_pow.push(&hi_pow[i - 1] * hi);
        }
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e1 = m.deg_t() as usize + 1;
            let weight = (&hi_pow[e1] - &lo_pow[e1]) / BigRational::from_integer(BigInt::from(e1));
            let mut me = m.clone();
            me.0[0] = 0;
            out.add_term(me, c * weight);
        }
        out
    }

    /// Substitute a rational value for t; the result is t-free.
    pub fn substitute_t(&self, value: &BigRational) -> Polynomial {
        let mut pow = vec![BigRational::one()];
        for i in 1..=self.deg_t() as usize {
            pow.push(&pow[i - 1] * value);
        }
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut me = m.clone();
            me.0[0] = 0;
            out.add_term(me, c * &pow[m.deg_t() as usize]);
        }
        out
    }

    /// Split into coefficient polynomials by t-power: result[j] is the
    /// (t-free) coefficient of t^j, padded with zeros up to deg_t.
    pub fn t_coefficients(&self) -> Vec<Polynomial> {
        let mut out = vec![Self::zero(self.nvars); self.deg_t() as usize + 1];
        for (m, c) in &self.terms {
            let j = m.deg_t() as usize;
            let mut me = m.clone();
            me.0[0] = 0;
            out[j].add_term(me, c.clone());
        }
        out
    }

    fn point_exponents<'a, T>(&self, point: &'a [T]) -> Result<(Option<&'a T>, &'a [T]), PolyError> {
        if point.len() == self.nvars + 1 {
            Ok((Some(&point[0]), &point[1..]))
        } else if point.len() == self.nvars {
            if self.deg_t() != 0 {
                return Err(PolyError::ArityMismatch { expected: self.nvars + 1, got: point.len() });
            }
            Ok((None, point))
        } else {
            Err(PolyError::ArityMismatch { expected: self.nvars + 1, got: point.len() })
        }
    }

    /// Exact evaluation. `point` is (t, x1..xn), or just (x1..xn) for a
    /// t-free polynomial.
    pub fn eval_rational(&self, point: &[BigRational]) -> Result<BigRational, PolyError> {
        let (t, xs) = self.point_exponents(point)?;
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            if m.deg_t() > 0 {
                let tv = t.expect("deg_t checked");
                for _ in 0..m.deg_t() {
                    v *= tv;
                }
            }
            for (i, x) in xs.iter().enumerate() {
                for _ in 0..m.0[i + 1] {
                    v *= x;
                }
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Floating evaluation with the same point convention.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        let (t, xs) = self.point_exponents(point)?;
        let t = t.copied().unwrap_or(0.0);
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut v = rat_to_f64(c);
            if m.deg_t() > 0 {
                v *= t.powi(m.deg_t() as i32);
            }
            for (i, &x) in xs.iter().enumerate() {
                let e = m.0[i + 1];
                if e > 0 {
                    v *= x.powi(e as i32);
                }
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Precompute f64 coefficients for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (rat_to_f64(c), m.0.clone().into_boxed_slice()))
                .collect(),
        }
    }
}

/// f64 snapshot of a polynomial for hot evaluation loops.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    terms: Vec<(f64, Box<[u32]>)>,
}

impl CompiledPoly {
    /// Evaluate at (t, x1..xn).
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.nvars + 1);
        let mut acc = 0.0;
        for (c, exps) in &self.terms {
            let mut v = *c;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    v *= point[i].powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }

    /// Evaluate a t-free compiled polynomial at (x1..xn).
    pub fn eval_x(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (c, exps) in &self.terms {
            let mut v = *c;
            debug_assert_eq!(exps[0], 0, "eval_x needs a t-free polynomial");
            for (i, &xi) in x.iter().enumerate() {
                let e = exps[i + 1];
                if e > 0 {
                    v *= xi.powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial arity mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial arity mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial arity mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Highest terms first reads like handwritten math.
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let one = abs.is_one();
            if !one || m.is_constant() {
                write!(f, "{}", crate::ratio::format_rational(&abs))?;
            }
            if !m.is_constant() {
                if !one {
                    write!(f, "*")?;
                }
                write!(f, "{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[{} vars]({})", self.nvars, self)
    }
}

pub(crate) fn bigint_to_number(i: &BigInt) -> serde_json::Number {
    serde_json::from_str(&i.to_string()).expect("integer literal is valid JSON")
}

pub(crate) fn number_to_bigint(n: &serde_json::Number) -> Result<BigInt, String> {
    n.to_string()
        .parse::<BigInt>()
        .map_err(|_| format!("expected integer, got {n}"))
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    e: Vec<u32>,
    c: (serde_json::Number, serde_json::Number),
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    nvars: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    /// Terms serialize as `{"e": [e0, e1, ..], "c": [numer, denom]}` with e0
    /// the t exponent; arbitrary-precision JSON numbers keep it bit-exact.
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRepr {
                    e: m.0.clone(),
                    c: (bigint_to_number(c.numer()), bigint_to_number(c.denom())),
                })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        let mut p = Polynomial::zero(repr.nvars);
        for t in repr.terms {
            if t.e.len() != repr.nvars + 1 {
                return Err(D::Error::custom(format!(
                    "exponent vector length {} does not match nvars {} + 1",
                    t.e.len(),
                    repr.nvars
                )));
            }
            let numer = number_to_bigint(&t.c.0).map_err(D::Error::custom)?;
            let denom = number_to_bigint(&t.c.1).map_err(D::Error::custom)?;
            if denom.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            p.add_term(Monomial(t.e), BigRational::new(numer, denom));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    fn x(i: usize) -> Polynomial {
        Polynomial::var(2, i)
    }

    #[test]
    fn adds_and_cancels() {
        let p = &x(1) + &x(2);
        let q = &x(1) - &x(2);
        let sum = &p + &q;
        assert_eq!(sum, x(1).scale(&rat(2, 1)));
        let diff = &p - &p;
        assert!(diff.is_zero());
        assert_eq!(diff.deg_x(), 0, "zero polynomial has degree 0");
    }

    #[test]
    fn multiplies_difference_of_squares() {
        let p = &x(1) + &x(2);
        let q = &x(1) - &x(2);
        let prod = &p * &q;
        let expect = &(&x(1) * &x(1)) - &(&x(2) * &x(2));
        assert_eq!(prod, expect);
    }

    #[test]
    fn cube_of_picard_seed_matches_hand_expansion() {
        // (x - x^3 t)^3 = x^3 - 3 x^5 t + 3 x^7 t^2 - x^9 t^3
        let n = 1;
        let xv = Polynomial::var(n, 1);
        let t = Polynomial::time(n);
        let p = &xv - &(&xv.pow(3) * &t);
        let cube = p.pow(3);
        let expect = Polynomial::from_terms(
            n,
            vec![
                (Monomial(vec![0, 3]), rat(1, 1)),
                (Monomial(vec![1, 5]), rat(-3, 1)),
                (Monomial(vec![2, 7]), rat(3, 1)),
                (Monomial(vec![3, 9]), rat(-1, 1)),
            ],
        )
        .unwrap();
        assert_eq!(cube, expect);
    }

    #[test]
    fn compose_expands_binomial() {
        // x1^2 with x1 -> x1 + t gives x1^2 + 2 x1 t + t^2
        let n = 1;
        let p = Polynomial::var(n, 1).pow(2);
        let subst = vec![Polynomial::time(n), &Polynomial::var(n, 1) + &Polynomial::time(n)];
        let got = p.compose(&subst).unwrap();
        let expect = Polynomial::from_terms(
            n,
            vec![
                (Monomial(vec![0, 2]), rat(1, 1)),
                (Monomial(vec![1, 1]), rat(2, 1)),
                (Monomial(vec![2, 0]), rat(1, 1)),
            ],
        )
        .unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn compose_identity_is_noop() {
        let p = &(&x(1) * &x(2)) + &Polynomial::time(2).pow(3);
        let subst = vec![Polynomial::time(2), x(1), x(2)];
        assert_eq!(p.compose(&subst).unwrap(), p);
    }

    #[test]
    fn compose_arity_checked() {
        let p = x(1);
        assert!(matches!(
            p.compose(&[Polynomial::time(2)]),
            Err(PolyError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn integrates_monomials_over_quarter_interval() {
        let n = 1;
        let t = Polynomial::time(n);
        let zero = BigRational::zero();
        let quarter = rat(1, 4);
        // definite integral of s over [0, 1/4] is 1/32
        assert_eq!(t.integrate_t(&zero, &quarter), Polynomial::constant(n, rat(1, 32)));
        // definite integral of s^2 over [0, 1/4] is 1/192
        assert_eq!(t.pow(2).integrate_t(&zero, &quarter), Polynomial::constant(n, rat(1, 192)));
    }

    #[test]
    fn indefinite_integral_then_derivative_round_trips() {
        let n = 1;
        let xv = Polynomial::var(n, 1);
        let t = Polynomial::time(n);
        let p = &(&xv.pow(3) * &t.pow(2)) + &xv;
        let back = p.indefinite_integrate_t().differentiate(0).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn differentiates_each_variable() {
        // d/dx1 (x1^2 x2) = 2 x1 x2, d/dx2 (x1^2 x2) = x1^2, d/dt = 0
        let p = &x(1).pow(2) * &x(2);
        let d1 = p.differentiate(1).unwrap();
        assert_eq!(d1, (&x(1) * &x(2)).scale(&rat(2, 1)));
        let d2 = p.differentiate(2).unwrap();
        assert_eq!(d2, x(1).pow(2));
        assert!(p.differentiate(0).unwrap().is_zero());
        assert!(p.differentiate(3).is_err());
    }

    #[test]
    fn evaluates_exactly_and_in_floats() {
        // 2 x2^2 (x1^2 - 1) at (x1, x2) = (1/5, 1/10) is -12/625 = -0.0192
        let two = Polynomial::constant(2, rat(2, 1));
        let p = &(&two * &x(2).pow(2)) * &(&x(1).pow(2) - &Polynomial::constant(2, rat(1, 1)));
        let exact = p.eval_rational(&[BigRational::zero(), rat(1, 5), rat(1, 10)]).unwrap();
        assert_eq!(exact, rat(-12, 625));
        let float = p.eval_f64(&[0.0, 0.2, 0.1]).unwrap();
        assert!((float - (-0.0192)).abs() < 1e-15);
        // t-free polynomial accepts the short point form
        let short = p.eval_f64(&[0.2, 0.1]).unwrap();
        assert_eq!(short, float);
        // but a t-dependent polynomial rejects it
        let q = Polynomial::time(2);
        assert!(q.eval_f64(&[0.2, 0.1]).is_err());
    }

    #[test]
    fn compiled_eval_matches_slow_path() {
        let p = &(&x(1).pow(3) * &Polynomial::time(2)) - &x(2).scale(&rat(7, 3));
        let c = p.compile();
        let pt = [0.3, -1.2, 0.8];
        assert!((c.eval(&pt) - p.eval_f64(&pt).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn t_coefficients_split_by_power() {
        let n = 1;
        let xv = Polynomial::var(n, 1);
        let t = Polynomial::time(n);
        let p = &(&xv - &(&xv.pow(3) * &t)) + &(&xv.pow(5) * &t.pow(2)).scale(&rat(3, 2));
        let cs = p.t_coefficients();
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0], xv);
        assert_eq!(cs[1], -&xv.pow(3));
        assert_eq!(cs[2], xv.pow(5).scale(&rat(3, 2)));
    }

    #[test]
    fn substitute_t_collapses_time() {
        let n = 1;
        let xv = Polynomial::var(n, 1);
        let p = &xv - &(&xv.pow(3) * &Polynomial::time(n));
        let at_quarter = p.substitute_t(&rat(1, 4));
        assert_eq!(at_quarter, &xv - &xv.pow(3).scale(&rat(1, 4)));
        assert_eq!(at_quarter.deg_t(), 0);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let n = 2;
        let huge = BigRational::new(BigInt::from(7u32).pow(200), BigInt::from(3u32).pow(321));
        let p = Polynomial::from_terms(
            n,
            vec![
                (Monomial(vec![2, 1, 0]), huge),
                (Monomial(vec![0, 0, 3]), rat(-5, 8)),
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: Polynomial = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn display_is_readable() {
        let n = 1;
        let xv = Polynomial::var(n, 1);
        let p = &xv - &(&xv.pow(3) * &Polynomial::time(n));
        assert_eq!(p.to_string(), "-t*x1^3 + x1");
    }
}
