//! Monomial-basis polynomials and their depth-optimal homomorphic evaluation.
//!
//! Evaluation uses a baby-step giant-step split over power-of-two powers of
//! the input: a degree-`d` polynomial with `D = ceil(log2(d + 1))` is written
//! `p = lo + x^(2^(D-1)) * hi` with both halves of degree below `2^(D-1)`,
//! recursively. Scalar coefficients are folded in by plaintext
//! multiplications at the bottom of the recursion, so the result sits exactly
//! `D` levels below the input.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{HomBackend, SlotVector};
use crate::error::{Error, Result};

/// Polynomial with real coefficients, lowest power first.
///
/// Serialized as a JSON array of coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    /// Builds a polynomial, trimming trailing zero coefficients.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
        }
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Ok(Self { coeffs })
    }

    pub fn identity() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// True when every even-power coefficient is zero.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|c| *c == 0.0)
    }

    /// Horner evaluation at a scalar.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn plan(&self) -> EvalPlan {
        EvalPlan::for_poly(self)
    }
}

/// Shape of the evaluation circuit for one polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalPlan {
    /// Block size `k`: pieces of degree below `k` are assembled from the baby
    /// powers `x, x^2, ..., x^(k/2)`.
    pub baby_steps: usize,
    /// Number of degree-`< k` blocks combined through giant powers
    /// `x^k, x^(2k), x^(4k), ...`.
    pub giant_steps: usize,
    pub depth: u32,
    /// Ciphertext-ciphertext multiplications, including power computation.
    pub mul_count: usize,
}

fn ceil_log2(v: usize) -> u32 {
    if v <= 1 {
        0
    } else {
        usize::BITS - (v - 1).leading_zeros()
    }
}

/// Index of the last nonzero coefficient, or `None` for the zero polynomial.
fn effective_degree(coeffs: &[f64]) -> Option<usize> {
    coeffs.iter().rposition(|c| *c != 0.0)
}

impl EvalPlan {
    pub fn for_poly(p: &Polynomial) -> Self {
        let d = p.degree();
        let depth = ceil_log2(d + 1);
        let root = (d as f64 + 1.0).sqrt().ceil() as usize;
        let baby_steps = root.next_power_of_two();
        let giant_steps = (d + 1).div_ceil(baby_steps);

        let mut powers = BTreeMap::new();
        let splits = if d == 0 {
            0
        } else {
            count_products(p.coeffs(), &mut powers)
        };
        // x^(2^j) for j >= 1 each cost one squaring.
        let max_power = powers.keys().next_back().copied().unwrap_or(0u32);
        let mul_count = splits + max_power as usize;
        Self {
            baby_steps,
            giant_steps,
            depth,
            mul_count,
        }
    }
}

/// Counts ciphertext products in the split tree; records which power-of-two
/// exponents (as log2) are needed.
fn count_products(coeffs: &[f64], powers: &mut BTreeMap<u32, ()>) -> usize {
    let Some(d) = effective_degree(coeffs) else {
        return 0;
    };
    if d == 0 {
        return 0;
    }
    let half_log = ceil_log2(d + 1) - 1;
    let half = 1usize << half_log;
    powers.insert(half_log, ());
    let hi = &coeffs[half..=d];
    let lo = &coeffs[..half];
    let hi_ct = effective_degree(hi).is_some_and(|h| h > 0);
    let mut n = count_products(hi, powers) + count_products(lo, powers);
    if hi_ct {
        n += 1;
    }
    n
}

enum Term {
    Const(f64),
    Ct(SlotVector),
}

struct Powers<'a, B: ?Sized> {
    backend: &'a B,
    /// `cache[j]` holds `x^(2^j)`.
    cache: Vec<SlotVector>,
}

impl<B: HomBackend + ?Sized> Powers<'_, B> {
    fn get(&mut self, log: u32) -> Result<&SlotVector> {
        while self.cache.len() <= log as usize {
            let last = self.cache.last().expect("x is always cached");
            let next = self.backend.mul(last, last)?;
            self.cache.push(next);
        }
        Ok(&self.cache[log as usize])
    }
}

fn eval_split<B: HomBackend + ?Sized>(coeffs: &[f64], powers: &mut Powers<'_, B>) -> Result<Term> {
    let Some(d) = effective_degree(coeffs) else {
        return Ok(Term::Const(0.0));
    };
    if d == 0 {
        return Ok(Term::Const(coeffs[0]));
    }
    let half_log = ceil_log2(d + 1) - 1;
    let half = 1usize << half_log;
    let hi = eval_split(&coeffs[half..=d], powers)?;
    let lo = eval_split(&coeffs[..half], powers)?;
    let backend = powers.backend;
    let x_half = powers.get(half_log)?;
    let prod = match hi {
        Term::Const(c) => backend.mul_plain(x_half, c.into())?,
        Term::Ct(h) => backend.mul(x_half, &h)?,
    };
    let sum = match lo {
        Term::Const(0.0) => prod,
        Term::Const(c) => backend.add_plain(&prod, c.into())?,
        Term::Ct(l) => backend.add(&prod, &l)?,
    };
    Ok(Term::Ct(sum))
}

/// Applies `poly` slotwise to `x`.
///
/// If `x` does not have `depth` levels to spare above the backend's reserve,
/// it is bootstrapped once up front (or [`Error::DepthExhausted`] is returned
/// when auto-bootstrap is off).
pub fn eval<B: HomBackend + ?Sized>(
    backend: &B,
    poly: &Polynomial,
    x: &SlotVector,
) -> Result<SlotVector> {
    let depth = ceil_log2(poly.degree() + 1);
    let params = backend.params();
    let reserve = if params.auto_bootstrap {
        params.level_reserve
    } else {
        0
    };
    let x = if x.level() >= depth + reserve {
        x.clone()
    } else if params.auto_bootstrap {
        backend.bootstrap(x)?
    } else {
        return Err(Error::DepthExhausted {
            level: x.level(),
            needed: depth,
        });
    };
    if poly.degree() == 0 {
        let zero = backend.sub(&x, &x)?;
        return backend.add_plain(&zero, poly.coeffs[0].into());
    }
    let mut powers = Powers {
        backend,
        cache: vec![x],
    };
    match eval_split(poly.coeffs(), &mut powers)? {
        Term::Ct(ct) => Ok(ct),
        Term::Const(_) => unreachable!("nonconstant polynomial yields a ciphertext"),
    }
}
