//! Export of the SOS feasibility problem: monomial basis, ball polynomial,
//! and constraint-role structure for an external SDP solver. No solving
//! happens here; the output is solver-agnostic problem data.

use clap::{Args, ValueEnum};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use convlyap::polyalg::Polynomial;

use crate::{load_system, parse_positive_rational, print_json, CmdResult, Failure, EXIT_RESOURCE};

/// Materializing the basis is pointless past this size; no solver will
/// accept a Gram matrix this wide anyway.
const MAX_BASIS: u64 = 100_000;

#[derive(Args)]
pub struct ExportSosArgs {
    /// File with one equation per component
    #[arg(long)]
    system: std::path::PathBuf,
    /// Ball radius as an exact rational ("1", "1/4", "0.25")
    #[arg(long)]
    radius: String,
    /// Total degree 2d of the candidate (must be even)
    #[arg(long)]
    degree: u32,
    /// Which constraint structure to emit
    #[arg(long, value_enum, default_value = "full")]
    form: SosForm,
}

/// The two exported constraint structures. `Full` leaves the candidate an
/// unrestricted polynomial and certifies its lower bound with two multiplier
/// slots; `Reduced` bakes the lower bound into the candidate template
/// (an SOS unknown plus alpha*||x||^2), which removes one slot.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SosForm {
    Full,
    Reduced,
}

#[derive(Serialize)]
struct SosProblemExport {
    /// State dimension.
    n: usize,
    /// Half-degree: the basis spans monomials up to degree d.
    d: u32,
    /// Number of basis monomials, (n+d)!/(n!d!).
    basis_size: u64,
    /// Exponent vectors of the basis, graded and then lexicographic with
    /// earlier variables dominant.
    basis: Vec<Vec<u32>>,
    /// Ball constraint g(x) = r^2 - ||x||^2 with exact coefficients.
    ball: Polynomial,
    form: SosForm,
    /// Feasibility problem: nothing to minimize.
    objective: Option<String>,
    candidate: CandidateTemplate,
    constraints: Vec<ConstraintRole>,
    multipliers: Vec<MultiplierSlot>,
}

#[derive(Serialize)]
struct CandidateTemplate {
    name: String,
    max_degree: u32,
    vanishes_at_origin: bool,
    /// Whether the template itself is an SOS unknown (reduced form) or an
    /// unrestricted polynomial whose bounds the multipliers certify.
    sos_template: bool,
    /// Independent entries of a symmetric basis_size x basis_size Gram
    /// parametrization of the candidate.
    gram_unknowns: u64,
}

#[derive(Serialize)]
struct ConstraintRole {
    role: String,
    statement: String,
}

#[derive(Serialize)]
struct MultiplierSlot {
    name: String,
    role: String,
    /// True when the slot multiplies g(x) rather than standing alone.
    ball_weighted: bool,
}

pub fn cmd_export_sos(args: ExportSosArgs) -> CmdResult {
    let f = load_system(&args.system)?;
    if args.degree == 0 || !args.degree.is_multiple_of(2) {
        return Err(Failure::usage(format!(
            "--degree must be a positive even integer, got {}",
            args.degree
        )));
    }
    let radius = parse_positive_rational(&args.radius, "radius")?;
    let n = f.dim();
    let d = args.degree / 2;

    let size = binomial(n as u64 + d as u64, d as u64);
    if size > BigUint::from(MAX_BASIS) {
        return Err(Failure {
            code: EXIT_RESOURCE,
            message: format!("basis would hold {size} monomials; refusing to materialize"),
        });
    }
    let basis_size = u64::try_from(&size).expect("bounded by MAX_BASIS");
    let basis = monomials_up_to(n, d);
    debug_assert_eq!(basis.len() as u64, basis_size);

    let export = SosProblemExport {
        n,
        d,
        basis_size,
        basis,
        ball: ball_polynomial(n, &radius),
        form: args.form,
        objective: None,
        candidate: CandidateTemplate {
            name: "V".to_string(),
            max_degree: args.degree,
            vanishes_at_origin: true,
            sos_template: args.form == SosForm::Reduced,
            gram_unknowns: basis_size * (basis_size + 1) / 2,
        },
        constraints: constraints(args.form),
        multipliers: multipliers(args.form),
    };
    print_json(&export)?;
    Ok(0)
}

fn constraints(form: SosForm) -> Vec<ConstraintRole> {
    let lower = match form {
        SosForm::Full => "V(x) - alpha*||x||^2 = s0(x) + g(x)*s1(x)",
        SosForm::Reduced => {
            "V(x) = alpha*||x||^2 + sigma(x) + g(x)*s1(x) with sigma an SOS unknown"
        }
    };
    vec![
        ConstraintRole {
            role: "lower_bound".to_string(),
            statement: lower.to_string(),
        },
        ConstraintRole {
            role: "upper_bound".to_string(),
            statement: "V(x) <= beta*||x||^2 on the ball; beta exists for any polynomial \
                        candidate, so no slot is attached"
                .to_string(),
        },
        ConstraintRole {
            role: "derivative".to_string(),
            statement: "-grad V(x) . f(x) - gamma*||x||^2 = s2(x) + g(x)*s3(x)".to_string(),
        },
    ]
}

fn multipliers(form: SosForm) -> Vec<MultiplierSlot> {
    let mut slots = Vec::new();
    if form == SosForm::Full {
        slots.push(MultiplierSlot {
            name: "s0".to_string(),
            role: "lower_bound".to_string(),
            ball_weighted: false,
        });
    }
    slots.push(MultiplierSlot {
        name: "s1".to_string(),
        role: "lower_bound".to_string(),
        ball_weighted: true,
    });
    slots.push(MultiplierSlot {
        name: "s2".to_string(),
        role: "derivative".to_string(),
        ball_weighted: false,
    });
    slots.push(MultiplierSlot {
        name: "s3".to_string(),
        role: "derivative".to_string(),
        ball_weighted: true,
    });
    slots
}

/// g(x) = r^2 - sum of squares of the coordinates.
fn ball_polynomial(n: usize, radius: &BigRational) -> Polynomial {
    let mut g = Polynomial::constant(n, radius * radius);
    for i in 1..=n {
        let xi = Polynomial::var(n, i);
        g = &g - &(&xi * &xi);
    }
    g
}

/// All exponent vectors in `n` variables of total degree at most `d`,
/// graded, and within a grade lexicographic with earlier variables dominant.
fn monomials_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    for total in 0..=d {
        fill_grade(n, 0, total, &mut current, &mut out);
    }
    out
}

fn fill_grade(n: usize, pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == n {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_grade(n, pos + 1, remaining - e, current, out);
    }
    current[pos] = 0;
}

/// Exact binomial coefficient; each partial product divides evenly.
fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}
