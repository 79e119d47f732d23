//! Composite polynomial approximation of `sign`.
//!
//! `sign(x)` on `[-1, -2^-alpha] ∪ [2^-alpha, 1]` is approximated by
//! `f^{d_f}(g^{d_g}(x))`: a steep odd polynomial `g` first pushes small
//! magnitudes away from zero, then a flat-at-±1 odd polynomial `f` drives
//! values onto ±1.
//!
//! `f` is the closed-form family `f_n(x) = sum_{i=0}^{n} binom(2i, i) / 4^i
//! * x (1 - x^2)^i` (degree `2n + 1`), whose derivatives at ±1 vanish to
//! order `n`. `g` is taken from the dyadic-coefficient family of steep odd
//! polynomials `g_n` for degrees 3 to 9; other degrees fall back to `g = f`.

use rand::{Rng, SeedableRng};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::backend::{BackendParams, ExactBackend, HomBackend, SlotVector};
use crate::error::{Error, Result};
use crate::poly::{self, Polynomial};

/// Inputs may exceed `[-1, 1]` by at most this much before evaluation fails.
pub const DOMAIN_TOLERANCE: f64 = 1e-3;
/// Certification threshold on the margin-region error.
pub const ERROR_BOUND: f64 = 1e-4;
/// Smallest accepted certification grid.
pub const MIN_GRID: usize = 10_000;

const CERTIFY_SEED: u64 = 0x5167_4e00;

/// Closed-form `f_n` of degree `2n + 1`.
pub fn closed_form_f(n: usize) -> Polynomial {
    let mut coeffs = vec![0.0; 2 * n + 2];
    let mut central = 1.0; // binom(2i, i) / 4^i
    for i in 0..=n {
        if i > 0 {
            central *= (2 * i - 1) as f64 / (2 * i) as f64;
        }
        // x (1 - x^2)^i = sum_k binom(i, k) (-1)^k x^(2k+1)
        let mut binom = 1.0;
        for k in 0..=i {
            if k > 0 {
                binom *= (i - k + 1) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[2 * k + 1] += central * sign * binom;
        }
    }
    Polynomial::new(coeffs).expect("finite coefficients")
}

/// Steep odd polynomial of the given degree, when tabulated.
pub fn steep_g(degree: usize) -> Option<Polynomial> {
    let numerators: &[f64] = match degree {
        3 => &[2126.0, -1359.0],
        5 => &[3334.0, -6108.0, 3796.0],
        7 => &[4589.0, -16577.0, 25614.0, -12860.0],
        9 => &[5850.0, -34974.0, 97015.0, -113492.0, 46623.0],
        _ => return None,
    };
    let mut coeffs = vec![0.0; degree + 1];
    for (k, c) in numerators.iter().enumerate() {
        coeffs[2 * k + 1] = c / 1024.0;
    }
    Some(Polynomial::new(coeffs).expect("finite coefficients"))
}

/// Parameters of the composite approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct SignConfig {
    /// Margin exponent: inputs are separated from zero by at least `2^-alpha`.
    pub alpha: u32,
    pub d_f: u32,
    pub d_g: u32,
    f: Polynomial,
    g: Polynomial,
}

impl Default for SignConfig {
    /// `alpha = 12`, two applications each of degree-9 `f` and `g`.
    ///
    /// This configuration does not reach a `1e-4` margin error; see
    /// [`SignConfig::certified`] for one that does.
    fn default() -> Self {
        Self::new(12, 2, 2, 9).expect("valid default")
    }
}

impl SignConfig {
    /// Builds the standard pair of the given odd degree.
    pub fn new(alpha: u32, d_f: u32, d_g: u32, degree: usize) -> Result<Self> {
        if degree.is_multiple_of(2) {
            return Err(Error::InvalidSignConfig(format!(
                "degree {degree} is not odd"
            )));
        }
        let f = closed_form_f((degree - 1) / 2);
        let g = steep_g(degree).unwrap_or_else(|| f.clone());
        Self::with_polynomials(alpha, d_f, d_g, f, g)
    }

    /// Degree-9 pair with `d_g = 5`, `d_f = 2`, which certifies below `1e-4`
    /// at `alpha = 12`.
    pub fn certified() -> Self {
        Self::new(12, 2, 5, 9).expect("valid config")
    }

    pub fn with_polynomials(
        alpha: u32,
        d_f: u32,
        d_g: u32,
        f: Polynomial,
        g: Polynomial,
    ) -> Result<Self> {
        if alpha == 0 || alpha > 52 {
            return Err(Error::InvalidSignConfig(format!(
                "alpha {alpha} outside 1..=52"
            )));
        }
        if d_f + d_g == 0 {
            return Err(Error::InvalidSignConfig(
                "at least one polynomial application is required".into(),
            ));
        }
        for (name, p) in [("f", &f), ("g", &g)] {
            if !p.is_odd() {
                return Err(Error::InvalidSignConfig(format!(
                    "{name} has nonzero even coefficients"
                )));
            }
            let steps = 4096;
            let worst = (0..=steps)
                .map(|i| p.eval_scalar(i as f64 / steps as f64).abs())
                .fold(0.0, f64::max);
            if worst > 1.0 + 1e-9 {
                return Err(Error::InvalidSignConfig(format!(
                    "{name} leaves [-1, 1] (reaches {worst})"
                )));
            }
        }
        Ok(Self {
            alpha,
            d_f,
            d_g,
            f,
            g,
        })
    }

    pub fn f(&self) -> &Polynomial {
        &self.f
    }

    pub fn g(&self) -> &Polynomial {
        &self.g
    }

    pub fn deg_f(&self) -> usize {
        self.f.degree()
    }

    pub fn deg_g(&self) -> usize {
        self.g.degree()
    }

    pub fn margin(&self) -> f64 {
        (-(self.alpha as f64)).exp2()
    }
}

/// Homomorphic evaluator for a [`SignConfig`].
#[derive(Debug, Clone)]
pub struct CompositeSign {
    config: SignConfig,
    depth: u32,
}

impl CompositeSign {
    pub fn new(config: SignConfig) -> Self {
        let depth = config.d_g * config.g.plan().depth + config.d_f * config.f.plan().depth;
        Self { config, depth }
    }

    pub fn config(&self) -> &SignConfig {
        &self.config
    }

    /// Levels consumed by one evaluation.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Evaluates the composite on every slot. Fails if a slot lies outside
    /// `[-1, 1]` by more than [`DOMAIN_TOLERANCE`].
    pub fn eval<B: HomBackend + ?Sized>(&self, backend: &B, ct: &SlotVector) -> Result<SlotVector> {
        let bound = 1.0 + DOMAIN_TOLERANCE;
        backend.ensure_range(ct, -bound, bound)?;
        let mut y = ct.clone();
        for _ in 0..self.config.d_g {
            y = poly::eval(backend, &self.config.g, &y)?;
        }
        for _ in 0..self.config.d_f {
            y = poly::eval(backend, &self.config.f, &y)?;
        }
        backend.record_sign();
        Ok(y)
    }

    pub fn eval_scalar(&self, x: f64) -> f64 {
        let mut y = x;
        for _ in 0..self.config.d_g {
            y = self.config.g.eval_scalar(y);
        }
        for _ in 0..self.config.d_f {
            y = self.config.f.eval_scalar(y);
        }
        y
    }
}

/// Evaluates the sign approximation described by `config` on `ct`.
pub fn sign_eval<B: HomBackend + ?Sized>(
    backend: &B,
    ct: &SlotVector,
    config: &SignConfig,
) -> Result<SlotVector> {
    CompositeSign::new(config.clone()).eval(backend, ct)
}

/// Outcome of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCertificate {
    pub alpha: u32,
    pub d_f: u32,
    pub d_g: u32,
    pub max_err: f64,
    pub grid_size: usize,
    pub margin: f64,
    pub error_bound: f64,
    /// Input at which `max_err` was attained.
    pub worst_input: f64,
    pub passed: bool,
}

/// Measures the worst deviation from `±1` over the margin region.
///
/// The region `[-1, -2^-alpha] ∪ [2^-alpha, 1]` is covered by `grid_size`
/// evenly spaced points (half per side, endpoints included) plus
/// `grid_size / 10` uniform random points, all evaluated on the exact
/// backend.
pub fn certify(config: &SignConfig, grid_size: usize) -> Result<ErrorCertificate> {
    if grid_size < MIN_GRID {
        return Err(Error::InvalidSignConfig(format!(
            "grid size {grid_size} is below the minimum {MIN_GRID}"
        )));
    }
    let margin = config.margin();
    let per_side = grid_size / 2;
    let step = (1.0 - margin) / (per_side - 1) as f64;
    let mut xs: Vec<f64> = Vec::with_capacity(grid_size + grid_size / 10 + 2);
    for i in 0..per_side {
        let x = if i + 1 == per_side {
            1.0
        } else {
            margin + step * i as f64
        };
        xs.push(x);
        xs.push(-x);
    }
    let mut rng = rand::rngs::SmallRng::seed_from_u64(CERTIFY_SEED);
    for _ in 0..grid_size / 10 {
        let x: f64 = rng.random_range(margin..=1.0);
        xs.push(if rng.random::<bool>() { x } else { -x });
    }

    let backend = ExactBackend::new(BackendParams::default())?;
    let sign = CompositeSign::new(config.clone());
    let chunk = backend.params().slot_count();
    let worst_of = |part: &[f64]| -> Result<(f64, f64)> {
        let ct = backend.encrypt(part)?;
        let out = backend.decrypt(&sign.eval(&backend, &ct)?)?;
        Ok(part
            .iter()
            .zip(&out)
            .map(|(x, y)| ((y - x.signum()).abs(), *x))
            .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a }))
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = xs.par_chunks(chunk).map(worst_of).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = xs.chunks(chunk).map(worst_of).collect::<Result<_>>()?;
    let (max_err, worst_input) = parts
        .into_iter()
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });

    Ok(ErrorCertificate {
        alpha: config.alpha,
        d_f: config.d_f,
        d_g: config.d_g,
        max_err,
        grid_size,
        margin,
        error_bound: ERROR_BOUND,
        worst_input,
        passed: max_err < ERROR_BOUND,
    })
}
