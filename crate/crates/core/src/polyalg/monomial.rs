//! Monomials over (t, x1..xn) with a graded lexicographic order.

use std::cmp::Ordering;
use std::fmt;

/// Exponent vector of length n+1. Slot 0 is the time variable t, slots
/// 1..=n are the state variables x1..xn. The ordering is graded lex:
/// higher total degree first, ties broken lexicographically from slot 0.
/// Fixing one global order keeps term maps and Gram bases deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    /// Constant monomial for n state variables (all exponents zero).
    pub fn constant(nvars: usize) -> Self {
        Monomial(vec![0; nvars + 1])
    }

    /// Monomial t^1.
    pub fn time(nvars: usize) -> Self {
        let mut e = vec![0; nvars + 1];
        e[0] = 1;
        Monomial(e)
    }

    /// Monomial x_i^1 for 1-based state index i.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i >= 1 && i <= nvars, "state index {i} out of range 1..={nvars}");
        let mut e = vec![0; nvars + 1];
        e[i] = 1;
        Monomial(e)
    }

    /// Number of state variables (slots minus the t slot).
    pub fn nvars(&self) -> usize {
        self.0.len() - 1
    }

    /// Exponent of t.
    pub fn deg_t(&self) -> u32 {
        self.0[0]
    }

    /// Total degree in the state variables only.
    pub fn deg_x(&self) -> u32 {
        self.0[1..].iter().sum()
    }

    /// Total degree including t.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// True when every exponent is zero.
    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (exponents add).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Lexicographic on exponents, padding the shorter with zeros so the
        // order stays total even across arities.
        let n = self.0.len().max(other.0.len());
        for i in 0..n {
            let a = self.0.get(i).copied().unwrap_or(0);
            let b = other.0.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    /// Render as `t^a*x1^b*x2` style, or `1` for the constant monomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if i == 0 {
                write!(f, "t")?;
            } else {
                write!(f, "x{i}")?;
            }
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_orders_by_degree_first() {
        let n = 2;
        let c = Monomial::constant(n);
        let t = Monomial::time(n);
        let x1 = Monomial::var(n, 1);
        let x1x2 = x1.mul(&Monomial::var(n, 2));
        assert!(c < t);
        assert!(t > x1, "t precedes x1 lexicographically, so t is greater");
        assert!(x1x2 > t, "degree 2 beats degree 1");
        assert!(x1x2 > x1);
    }

    #[test]
    fn degree_queries_split_t_from_x() {
        let m = Monomial(vec![3, 1, 2]);
        assert_eq!(m.deg_t(), 3);
        assert_eq!(m.deg_x(), 3);
        assert_eq!(m.total_degree(), 6);
        assert_eq!(m.nvars(), 2);
    }

    #[test]
    fn displays_readably() {
        let m = Monomial(vec![2, 0, 1]);
        assert_eq!(m.to_string(), "t^2*x2");
        assert_eq!(Monomial::constant(2).to_string(), "1");
    }
}
