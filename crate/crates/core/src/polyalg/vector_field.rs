//! Polynomial vector fields f: R^n -> R^n with f(0) = 0.

use num_rational::BigRational;
use num_traits::Zero;

use super::polynomial::{CompiledPoly, Polynomial};
use super::PolyError;

/// Autonomous polynomial vector field. Components are t-free polynomials in
/// x1..xn and the origin is required to be an equilibrium.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    components: Vec<Polynomial>,
    n: usize,
    q: u32,
}

impl VectorField {
    /// Build from components, validating arity, t-freeness, and f(0) = 0.
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let n = components.len();
        if n == 0 {
            return Err(PolyError::ArityMismatch { expected: 1, got: 0 });
        }
        for (i, c) in components.iter().enumerate() {
            if c.nvars() != n {
                return Err(PolyError::DimensionMismatch { left: n, right: c.nvars() });
            }
            if c.deg_t() != 0 {
                return Err(PolyError::VarIndexOutOfRange { var: 0, nvars: n });
            }
            if !c.constant_term().is_zero() {
                return Err(PolyError::NonzeroConstantTerm { component: i + 1 });
            }
        }
        let q = components.iter().map(Polynomial::deg_x).max().unwrap_or(0);
        Ok(VectorField { components, n, q })
    }

    /// State dimension n.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Maximum component degree q (0 only for the zero field).
    pub fn degree(&self) -> u32 {
        self.q
    }

    /// Component polynomials in order f1..fn.
    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    /// Exact evaluation at a state point.
    pub fn eval_rational(&self, x: &[BigRational]) -> Result<Vec<BigRational>, PolyError> {
        self.components.iter().map(|c| c.eval_rational(x)).collect()
    }

    /// Floating evaluation at a state point.
    pub fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.components.iter().map(|c| c.eval_f64(x)).collect()
    }

    /// Symbolic Jacobian: row i, column j holds d f_i / d x_j.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.components
            .iter()
            .map(|c| (1..=self.n).map(|j| c.differentiate(j).expect("index in range")).collect())
            .collect()
    }

    /// Compile all components for fast f64 evaluation.
    pub fn compile(&self) -> CompiledVectorField {
        CompiledVectorField {
            comps: self.components.iter().map(Polynomial::compile).collect(),
        }
    }
}

/// f64 snapshot of a vector field for simulation loops.
#[derive(Clone, Debug)]
pub struct CompiledVectorField {
    comps: Vec<CompiledPoly>,
}

impl CompiledVectorField {
    /// Evaluate at a state point, writing into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval_x(x);
        }
    }
}
