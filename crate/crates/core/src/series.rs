//! Truncated power series in two variables with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{LabError, Result};

/// Truncation order used for exact polynomials (constants, variables before
/// they meet a truncated operand).
pub const EXACT: u32 = u32::MAX;

/// `Σ c_{ij} x^i y^j` over `i + j ≤ order`, with zero coefficients never
/// stored. Binary operations truncate at the smaller of the two orders.
#[derive(Clone, Debug)]
pub struct BivariateSeries {
    order: u32,
    terms: BTreeMap<(u32, u32), BigRational>,
    vars: Option<[&'static str; 2]>,
}

impl BivariateSeries {
    pub fn constant(c: BigRational, order: u32) -> Self {
        let mut s = Self::empty(order, None);
        s.insert((0, 0), c);
        s
    }

    /// The first (`index = 0`) or second variable.
    pub fn variable(index: usize, vars: [&'static str; 2], order: u32) -> Self {
        let mut s = Self::empty(order, Some(vars));
        let exp = if index == 0 { (1, 0) } else { (0, 1) };
        s.insert(exp, BigRational::one());
        s
    }

    pub fn from_terms(
        terms: impl IntoIterator<Item = ((u32, u32), BigRational)>,
        vars: [&'static str; 2],
        order: u32,
    ) -> Self {
        let mut s = Self::empty(order, Some(vars));
        for (e, c) in terms {
            s.insert(e, c);
        }
        s
    }

    fn empty(order: u32, vars: Option<[&'static str; 2]>) -> Self {
        Self {
            order,
            terms: BTreeMap::new(),
            vars,
        }
    }

    fn insert(&mut self, (i, j): (u32, u32), c: BigRational) {
        if u64::from(i) + u64::from(j) > u64::from(self.order) || c.is_zero() {
            return;
        }
        let slot = self.terms.entry((i, j)).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn vars(&self) -> Option<[&'static str; 2]> {
        self.vars
    }

    pub fn with_vars(mut self, vars: [&'static str; 2]) -> Self {
        self.vars = Some(vars);
        self
    }

    pub fn coefficient(&self, i: u32, j: u32) -> BigRational {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &BigRational)> {
        self.terms.iter()
    }

    /// Lowest total degree of a stored term, or `None` for zero.
    pub fn min_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(i, j)| i + j).min()
    }

    pub fn truncate(&self, order: u32) -> Self {
        let order = order.min(self.order);
        let mut out = Self::empty(order, self.vars);
        for (e, c) in &self.terms {
            out.insert(*e, c.clone());
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = Self::empty(self.order, self.vars);
        for (e, c) in &self.terms {
            out.insert(*e, c * k);
        }
        out
    }

    /// Sets the first variable to zero, leaving a series in the second.
    pub fn restrict_first_to_zero(&self) -> Self {
        let mut out = Self::empty(self.order, self.vars);
        for (&(i, j), c) in &self.terms {
            if i == 0 {
                out.insert((0, j), c.clone());
            }
        }
        out
    }

    /// For a series in the second variable only: the lowest exponent present
    /// and its coefficient.
    pub fn leading_in_second(&self) -> Option<(u32, BigRational)> {
        self.terms
            .iter()
            .filter(|((i, _), _)| *i == 0)
            .map(|(&(_, j), c)| (j, c.clone()))
            .min_by_key(|(j, _)| *j)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(BigRational::one(), self.order).with_vars_of(self), |acc, _| {
            acc * self.clone()
        })
    }

    fn with_vars_of(mut self, other: &Self) -> Self {
        self.vars = self.vars.or(other.vars);
        self
    }

    /// `self(x(s, t), y(s, t))`. The substituted series must have no constant
    /// term, otherwise truncation would be meaningless.
    pub fn compose(&self, x: &Self, y: &Self) -> Result<Self> {
        if !x.coefficient(0, 0).is_zero() || !y.coefficient(0, 0).is_zero() {
            return Err(LabError::NotInvertible);
        }
        let order = self.order.min(x.order).min(y.order);
        let vars = x.vars.or(y.vars);
        let max_i = self.terms.keys().map(|e| e.0).max().unwrap_or(0);
        let max_j = self.terms.keys().map(|e| e.1).max().unwrap_or(0);
        let xs = powers(x, max_i, order);
        let ys = powers(y, max_j, order);
        let mut out = Self::empty(order, vars);
        for (&(i, j), c) in &self.terms {
            let term = xs[i as usize].clone() * ys[j as usize].clone();
            for (e, t) in term.terms {
                out.insert(e, t * c);
            }
        }
        Ok(out)
    }
}

fn powers(s: &BivariateSeries, max: u32, order: u32) -> Vec<BivariateSeries> {
    let mut out = vec![BivariateSeries::constant(BigRational::one(), order)];
    for k in 1..=max as usize {
        let next = out[k - 1].clone() * s.clone();
        out.push(next);
    }
    out
}

impl PartialEq for BivariateSeries {
    /// Equality of the common truncation.
    fn eq(&self, other: &Self) -> bool {
        let order = self.order.min(other.order);
        self.truncate(order).terms == other.truncate(order).terms
    }
}

impl Zero for BivariateSeries {
    fn zero() -> Self {
        Self::empty(EXACT, None)
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for BivariateSeries {
    fn one() -> Self {
        Self::constant(BigRational::one(), EXACT)
    }
}

impl Add for BivariateSeries {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut out = Self::empty(self.order.min(rhs.order), self.vars.or(rhs.vars));
        for (e, c) in self.terms.into_iter().chain(rhs.terms) {
            out.insert(e, c);
        }
        out
    }
}

impl Neg for BivariateSeries {
    type Output = Self;

    fn neg(self) -> Self {
        let mut out = Self::empty(self.order, self.vars);
        for (e, c) in self.terms {
            out.insert(e, -c);
        }
        out
    }
}

impl Sub for BivariateSeries {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for BivariateSeries {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::empty(self.order.min(rhs.order), self.vars.or(rhs.vars));
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &rhs.terms {
                out.insert((i1 + i2, j1 + j2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for BivariateSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y] = self.vars.unwrap_or(["x", "y"]);
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        // Graded order: by total degree, then by descending power of x.
        let mut keys: Vec<&(u32, u32)> = self.terms.keys().collect();
        keys.sort_by_key(|&&(i, j)| (i + j, std::cmp::Reverse(i)));
        for (n, key) in keys.into_iter().enumerate() {
            let c = &self.terms[key];
            let (i, j) = *key;
            let sign = if c.is_negative() { "-" } else { "+" };
            if n == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            let monomial = [(x, i), (y, j)]
                .iter()
                .filter(|(_, e)| *e > 0)
                .map(|(v, e)| if *e == 1 { v.to_string() } else { format!("{v}^{e}") })
                .collect::<Vec<_>>()
                .join("*");
            match (mag.is_one(), monomial.is_empty()) {
                (true, false) => write!(f, "{monomial}")?,
                (_, true) => write!(f, "{mag}")?,
                (false, false) => write!(f, "{mag}*{monomial}")?,
            }
        }
        if self.order != EXACT {
            write!(f, " + O({})", self.order + 1)?;
        }
        Ok(())
    }
}

/// Shorthand for an integer rational.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
