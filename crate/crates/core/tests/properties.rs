//! Randomized algebraic laws. The unit suites pin concrete values; this file
//! checks the identities that must hold for arbitrary inputs: ring axioms,
//! evaluation as a homomorphism, calculus inverses, the PSD test on matrices
//! that are positive or negative by construction, and monotonicity of the
//! chained error constant.

use approx::relative_eq;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use convlyap::bounds::c_of_k;
use convlyap::lyapunov::psd_check;
use convlyap::polyalg::{Monomial, Polynomial};

fn rational() -> impl Strategy<Value = BigRational> {
    (-9i64..=9, 1i64..=9).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

/// Sparse polynomial in `nvars` state variables plus t, exponents at most 3.
fn poly(nvars: usize) -> impl Strategy<Value = Polynomial> {
    let term = (proptest::collection::vec(0u32..=3, nvars + 1), rational());
    proptest::collection::vec(term, 0..=5).prop_map(move |terms| {
        Polynomial::from_terms(nvars, terms.into_iter().map(|(e, c)| (Monomial(e), c)))
            .expect("exponent vectors match the arity")
    })
}

/// Evaluation point including the t slot.
fn point(nvars: usize) -> impl Strategy<Value = Vec<BigRational>> {
    proptest::collection::vec(rational(), nvars + 1)
}

/// Sum of absolute term values: the natural scale for float roundoff, since
/// cancellation can leave an exact result far smaller than any term.
fn term_magnitude(p: &Polynomial, x: &[f64]) -> f64 {
    p.terms()
        .iter()
        .map(|(m, c)| {
            let mut v = c.to_f64().unwrap().abs();
            for (slot, &e) in m.0.iter().enumerate() {
                v *= x[slot].abs().powi(e as i32);
            }
            v
        })
        .sum::<f64>()
        .max(1.0)
}

proptest! {
    #[test]
    fn addition_commutes(a in poly(2), b in poly(2)) {
        prop_assert_eq!(&a + &b, &b + &a);
    }

    #[test]
    fn multiplication_commutes(a in poly(2), b in poly(2)) {
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn multiplication_distributes(a in poly(2), b in poly(2), c in poly(2)) {
        let left = &a * &(&b + &c);
        let right = &(&a * &b) + &(&a * &c);
        prop_assert_eq!(left, right);
    }

    #[test]
    fn multiplication_associates(a in poly(1), b in poly(1), c in poly(1)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(a in poly(2), b in poly(2), x in point(2)) {
        let sum = (&a + &b).eval_rational(&x).unwrap();
        prop_assert_eq!(sum, a.eval_rational(&x).unwrap() + b.eval_rational(&x).unwrap());
        let prod = (&a * &b).eval_rational(&x).unwrap();
        prop_assert_eq!(prod, a.eval_rational(&x).unwrap() * b.eval_rational(&x).unwrap());
    }

    #[test]
    fn float_evaluation_tracks_the_exact_value(a in poly(2), x in point(2)) {
        let exact_f = a.eval_rational(&x).unwrap().to_f64().unwrap();
        let xf: Vec<f64> = x.iter().map(|r| r.to_f64().unwrap()).collect();
        let float = a.eval_f64(&xf).unwrap();
        let tol = 1e-12 * term_magnitude(&a, &xf);
        prop_assert!(
            relative_eq!(float, exact_f, max_relative = 1e-9, epsilon = tol),
            "float {} vs exact {}", float, exact_f
        );
    }

    #[test]
    fn compiled_evaluation_matches_eval_f64(a in poly(2), x in point(2)) {
        let xf: Vec<f64> = x.iter().map(|r| r.to_f64().unwrap()).collect();
        let direct = a.eval_f64(&xf).unwrap();
        let compiled = a.compile().eval(&xf);
        let tol = 1e-13 * term_magnitude(&a, &xf);
        prop_assert!(
            relative_eq!(direct, compiled, max_relative = 1e-12, epsilon = tol),
            "direct {} vs compiled {}", direct, compiled
        );
    }

    #[test]
    fn differentiation_inverts_integration_in_t(a in poly(2)) {
        let back = a.indefinite_integrate_t().differentiate(0).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn definite_integral_agrees_with_the_antiderivative(
        a in poly(2),
        lo in rational(),
        hi in rational(),
    ) {
        let anti = a.indefinite_integrate_t();
        let expected = &anti.substitute_t(&hi) - &anti.substitute_t(&lo);
        prop_assert_eq!(a.integrate_t(&lo, &hi), expected);
    }

    #[test]
    fn composition_commutes_with_evaluation(a in poly(2), x in point(1)) {
        // Substitute single-variable polynomials, then evaluate; must agree
        // with evaluating the substitutions first.
        let subs = [
            Polynomial::time(1),
            &Polynomial::var(1, 1) * &Polynomial::var(1, 1),
            Polynomial::var(1, 1),
        ];
        let composed = a.compose(&subs).unwrap();
        let direct = composed.eval_rational(&x).unwrap();
        let inner: Vec<BigRational> =
            subs.iter().map(|s| s.eval_rational(&x).unwrap()).collect();
        prop_assert_eq!(direct, a.eval_rational(&inner).unwrap());
    }

    #[test]
    fn gram_products_are_psd(entries in proptest::collection::vec(-5i64..=5, 9)) {
        // B^T B is PSD for any real B.
        let b: Vec<Vec<BigRational>> = entries
            .chunks(3)
            .map(|row| row.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
            .collect();
        let mut m = vec![vec![BigRational::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for row in &b {
                    m[i][j] = &m[i][j] + &(&row[i] * &row[j]);
                }
            }
        }
        let outcome = psd_check(&m).unwrap();
        prop_assert!(outcome.is_psd, "B^T B rejected for B = {:?}", entries);
    }

    #[test]
    fn negative_diagonal_is_never_psd(
        entries in proptest::collection::vec(-5i64..=5, 9),
        slot in 0usize..3,
        drop in 1i64..=20,
    ) {
        let b: Vec<Vec<BigRational>> = entries
            .chunks(3)
            .map(|row| row.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
            .collect();
        let mut m = vec![vec![BigRational::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for row in &b {
                    m[i][j] = &m[i][j] + &(&row[i] * &row[j]);
                }
            }
        }
        // Push one diagonal entry strictly below zero: a PSD matrix cannot
        // have one, so the test must reject and name a witness.
        let sink = &m[slot][slot] + BigRational::from_integer(BigInt::from(drop));
        m[slot][slot] = -sink;
        let outcome = psd_check(&m).unwrap();
        prop_assert!(!outcome.is_psd);
        prop_assert!(outcome.witness.is_some());
    }

    #[test]
    fn chained_error_constant_decreases_in_k(
        t in 0.05f64..0.3,
        l in 0.5f64..2.0,
        n_pieces in 1usize..5,
        k in 1usize..6,
    ) {
        prop_assume!(t * l < 1.0);
        let lo = c_of_k(1.0, t, l, k + 1, n_pieces).unwrap();
        let hi = c_of_k(1.0, t, l, k, n_pieces).unwrap();
        prop_assert!(lo < hi, "c({}) = {} not below c({}) = {}", k + 1, lo, k, hi);
    }

    #[test]
    fn scaling_matches_repeated_addition(a in poly(2), times in 0u32..6) {
        let factor = BigRational::from_integer(BigInt::from(times));
        let mut acc = Polynomial::zero(a.nvars());
        for _ in 0..times {
            acc = &acc + &a;
        }
        prop_assert_eq!(a.scale(&factor), acc);
    }
}

#[test]
fn one_is_the_multiplicative_identity() {
    let one = Polynomial::constant(2, BigRational::one());
    let x = Polynomial::var(2, 1);
    assert_eq!(&x * &one, x);
}
