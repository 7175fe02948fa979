//! Parser for polynomial ODE systems written as `x1' = -x2; x2' = ...`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::polynomial::Polynomial;
use super::vector_field::VectorField;
use super::PolyError;

/// Parse a system description into a vector field.
///
/// Grammar: one statement `x<i>' = <expr>` per component, separated by `;`
/// or newlines. Expressions use `+ - * ^` with nonnegative integer powers,
/// parentheses, rational literals `a/b`, and exact decimal literals
/// (`2.1` means 21/10). Component indices must cover x1..xn exactly once,
/// and the right-hand sides may not have constant terms.
pub fn parse_system(text: &str) -> Result<VectorField, PolyError> {
    let statements = split_statements(text);
    if statements.is_empty() {
        return Err(err(1, 1, "empty system"));
    }
    let n = statements.len();
    let mut components: Vec<Option<Polynomial>> = vec![None; n];
    for (stmt, line, col) in &statements {
        let mut p = Parser::new(stmt, *line, *col, n)?;
        let (index, poly) = p.parse_statement()?;
        if index > n {
            return Err(err(
                *line,
                *col,
                &format!("component x{index} declared but only {n} statements present"),
            ));
        }
        if components[index - 1].is_some() {
            return Err(err(*line, *col, &format!("component x{index} defined twice")));
        }
        components[index - 1] = Some(poly);
    }
    for (i, c) in components.iter().enumerate() {
        if c.is_none() {
            return Err(err(1, 1, &format!("component x{} is never defined", i + 1)));
        }
    }
    VectorField::new(components.into_iter().map(Option::unwrap).collect())
}

fn err(line: usize, col: usize, msg: &str) -> PolyError {
    PolyError::Parse { line, col, msg: msg.to_string() }
}

/// Split on `;` and newlines, tracking the (line, col) where each statement
/// begins so diagnostics can point into the original text.
fn split_statements(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut line = 1;
    let mut col = 1;
    let mut start: Option<(usize, usize)> = None;
    for ch in text.chars() {
        if ch == ';' || ch == '\n' {
            if let Some((l, c)) = start.take() {
                out.push((std::mem::take(&mut cur), l, c));
            }
            cur.clear();
        } else {
            if start.is_none() && !ch.is_whitespace() {
                start = Some((line, col));
            }
            if start.is_some() {
                cur.push(ch);
            }
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    if let Some((l, c)) = start {
        out.push((cur, l, c));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(usize),
    Num(BigRational),
    Prime,
    Equals,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    nvars: usize,
}

impl Parser {
    fn new(stmt: &str, line: usize, col0: usize, nvars: usize) -> Result<Parser, PolyError> {
        let mut p = Parser {
            toks: Vec::new(),
            pos: 0,
            line,
            end_col: col0 + stmt.chars().count(),
            nvars,
        };
        p.lex(stmt, col0)?;
        Ok(p)
    }

    fn lex(&mut self, stmt: &str, col0: usize) -> Result<(), PolyError> {
        let chars: Vec<char> = stmt.chars().collect();
        let line = self.line;
        let mut i = 0;
        while i < chars.len() {
            let col = col0 + i;
            let ch = chars[i];
            let simple = match ch {
                '\'' => Some(Tok::Prime),
                '=' => Some(Tok::Equals),
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '^' => Some(Tok::Caret),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                _ => None,
            };
            if let Some(tok) = simple {
                self.toks.push((tok, line, col));
                i += 1;
                continue;
            }
            if ch.is_whitespace() {
                i += 1;
                continue;
            }
            if ch.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let int_val: BigInt = chars[start..i].iter().collect::<String>().parse().expect("digits");
                // a/b and a.b bind at the literal level; `/` is not an
                // operator anywhere else in the grammar.
                let tok = if i < chars.len() && chars[i] == '/' {
                    i += 1;
                    let dstart = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if dstart == i {
                        return Err(err(line, col, "expected digits after / in rational literal"));
                    }
                    let den: BigInt = chars[dstart..i].iter().collect::<String>().parse().unwrap();
                    if den.is_zero() {
                        return Err(err(line, col, "zero denominator in rational literal"));
                    }
                    Tok::Num(BigRational::new(int_val, den))
                } else if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    let dstart = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if dstart == i {
                        return Err(err(line, col, "expected digits after decimal point"));
                    }
                    let frac: String = chars[dstart..i].iter().collect();
                    let scale = BigInt::from(10u32).pow(frac.len() as u32);
                    let fval: BigInt = frac.parse().unwrap();
                    Tok::Num(BigRational::from_integer(int_val) + BigRational::new(fval, scale))
                } else {
                    Tok::Num(BigRational::from_integer(int_val))
                };
                self.toks.push((tok, line, col));
                continue;
            }
            if ch == 'x' {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i == start + 1 {
                    return Err(err(line, col, "expected digits after x in variable name"));
                }
                let idx: String = chars[start + 1..i].iter().collect();
                let idx: usize = idx
                    .parse()
                    .map_err(|_| err(line, col, "variable index too large"))?;
                if idx == 0 {
                    return Err(err(line, col, "variable indices start at x1"));
                }
                self.toks.push((Tok::Var(idx), line, col));
                continue;
            }
            return Err(err(line, col, &format!("unexpected character '{ch}'")));
        }
        Ok(())
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((self.line, self.end_col))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), PolyError> {
        let (l, c) = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(_) => Err(err(l, c, &format!("expected {what}"))),
            None => Err(err(l, c, &format!("expected {what}, found end of statement"))),
        }
    }

    fn parse_statement(&mut self) -> Result<(usize, Polynomial), PolyError> {
        let (l, c) = self.here();
        let index = match self.bump() {
            Some(Tok::Var(i)) => i,
            _ => return Err(err(l, c, "expected component name x<i>")),
        };
        self.expect(Tok::Prime, "' after component name")?;
        self.expect(Tok::Equals, "= after x<i>'")?;
        let poly = self.parse_expr()?;
        if self.pos != self.toks.len() {
            let (l, c) = self.here();
            return Err(err(l, c, "unexpected trailing input"));
        }
        Ok((index, poly))
    }

    fn parse_expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = &acc + &self.parse_term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = &acc - &self.parse_term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.parse_factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.bump();
            acc = &acc * &self.parse_factor()?;
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Polynomial, PolyError> {
        let mut negate = false;
        loop {
            match self.peek() {
                Some(Tok::Minus) => {
                    negate = !negate;
                    self.bump();
                }
                Some(Tok::Plus) => {
                    self.bump();
                }
                _ => break,
            }
        }
        let base = self.parse_power()?;
        Ok(if negate { -&base } else { base })
    }

    fn parse_power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.parse_primary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let (l, c) = self.here();
            match self.bump() {
                Some(Tok::Num(v)) if v.is_integer() && !v.is_negative() => {
                    let e: u32 = v
                        .to_integer()
                        .try_into()
                        .map_err(|_| err(l, c, "exponent too large"))?;
                    Ok(base.pow(e))
                }
                _ => Err(err(l, c, "expected nonnegative integer exponent after ^")),
            }
        } else {
            Ok(base)
        }
    }

    fn parse_primary(&mut self) -> Result<Polynomial, PolyError> {
        let (l, c) = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Polynomial::constant(self.nvars, v)),
            Some(Tok::Var(i)) => {
                if i > self.nvars {
                    return Err(err(
                        l,
                        c,
                        &format!("variable x{i} out of range; system has {} components", self.nvars),
                    ));
                }
                Ok(Polynomial::var(self.nvars, i))
            }
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some(_) => Err(err(l, c, "expected number, variable, or parenthesized expression")),
            None => Err(err(l, c, "unexpected end of statement")),
        }
    }
}
