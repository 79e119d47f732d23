//! SIMD homomorphic-vector backends.
//!
//! A [`SlotVector`] stands in for a CKKS ciphertext: a fixed-width vector of
//! real slots plus the bookkeeping a leveled scheme imposes (remaining
//! multiplicative level, accumulated noise estimate). Two backends implement
//! [`HomBackend`]:
//!
//! * [`ExactBackend`] evaluates every operation in plain `f64` arithmetic.
//! * [`CkksSimulator`] performs the same arithmetic but injects additive
//!   Gaussian noise on every multiplication, rotation and bootstrap.
//!
//! Both share the level model: a fresh vector starts at `L - K`, each
//! ciphertext or plaintext multiplication consumes one level, and an
//! operation whose result would drop below `level_reserve` first bootstraps
//! the lowest operand back to `L - K` (when `auto_bootstrap` is on).

use std::borrow::Cow;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Abstract per-operation costs used to turn operation counts into a
/// hardware-independent runtime estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub cost_add: f64,
    pub cost_mul_ct: f64,
    pub cost_mul_plain: f64,
    pub cost_rot: f64,
    pub cost_bootstrap: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        // Rough ratios of SEAL timings at N = 2^16.
        Self {
            cost_add: 1.0,
            cost_mul_ct: 20.0,
            cost_mul_plain: 5.0,
            cost_rot: 18.0,
            cost_bootstrap: 4000.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.cost_add,
            self.cost_mul_ct,
            self.cost_mul_plain,
            self.cost_rot,
            self.cost_bootstrap,
        ];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidParams(
                "costs must be finite and non-negative".into(),
            ));
        }
        if !(self.cost_bootstrap >= self.cost_mul_ct && self.cost_mul_ct >= self.cost_add) {
            return Err(Error::InvalidParams(
                "cost model requires cost_bootstrap >= cost_mul_ct >= cost_add".into(),
            ));
        }
        Ok(())
    }

    /// Cost of a set of counted operations.
    pub fn cost_of(&self, c: &OpCounters) -> f64 {
        (c.n_add + c.n_sub) as f64 * self.cost_add
            + c.n_mul_ct as f64 * self.cost_mul_ct
            + c.n_mul_plain as f64 * self.cost_mul_plain
            + c.n_rot as f64 * self.cost_rot
            + c.n_bootstrap as f64 * self.cost_bootstrap
    }
}

/// Ring and level parameters of the simulated scheme.
///
/// Defaults follow a 128-bit-secure RNS-CKKS setup: `N = 2^16`, `L = 35`,
/// bootstrapping consuming `K = 14` levels, leaving an effective depth of 21.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendParams {
    pub ring_degree: usize,
    pub max_level: u32,
    pub bootstrap_cost: u32,
    /// Bits of fractional precision of the encoding scale.
    pub scale_precision: u32,
    pub noise_std_per_mul: f64,
    pub noise_std_per_rot: f64,
    /// Largest slot magnitude the encoding can hold.
    pub max_magnitude: f64,
    /// Lowest level an operation result may sit at before a bootstrap is
    /// inserted.
    pub level_reserve: u32,
    pub auto_bootstrap: bool,
    /// Ciphertext modulus size. Metadata only; nothing is reduced modulo it.
    pub modulus_bits: u32,
    /// Seed of the simulator's noise stream.
    pub seed: u64,
    #[serde(flatten)]
    pub cost: CostModel,
}

impl Default for BackendParams {
    fn default() -> Self {
        Self {
            ring_degree: 1 << 16,
            max_level: 35,
            bootstrap_cost: 14,
            scale_precision: 40,
            noise_std_per_mul: 1e-9,
            noise_std_per_rot: 1e-9,
            max_magnitude: (1u64 << 20) as f64,
            level_reserve: 1,
            auto_bootstrap: true,
            modulus_bits: 1763,
            seed: 0,
            cost: CostModel::default(),
        }
    }
}

impl BackendParams {
    pub fn with_ring_degree(mut self, ring_degree: usize) -> Self {
        self.ring_degree = ring_degree;
        self
    }

    pub fn with_noise(mut self, per_mul: f64, per_rot: f64) -> Self {
        self.noise_std_per_mul = per_mul;
        self.noise_std_per_rot = per_rot;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parses a TOML document; missing keys keep their defaults.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let params: Self = toml::from_str(s).map_err(|e| Error::InvalidParams(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn slot_count(&self) -> usize {
        self.ring_degree / 2
    }

    /// Level of a freshly encrypted or freshly bootstrapped vector.
    pub fn fresh_level(&self) -> u32 {
        self.max_level - self.bootstrap_cost
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.ring_degree < 2 || !self.ring_degree.is_power_of_two() {
            return bad("ring_degree must be a power of two >= 2");
        }
        if self.max_level <= self.bootstrap_cost {
            return bad("max_level must exceed bootstrap_cost");
        }
        if self.auto_bootstrap && self.level_reserve >= self.fresh_level() {
            return bad("level_reserve must leave at least one usable level after bootstrap");
        }
        for (name, v) in [
            ("noise_std_per_mul", self.noise_std_per_mul),
            ("noise_std_per_rot", self.noise_std_per_rot),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0")));
            }
        }
        if !(self.max_magnitude.is_finite() && self.max_magnitude > 0.0) {
            return bad("max_magnitude must be positive");
        }
        self.cost.validate()
    }
}

/// An encrypted vector of `slot_count` real slots.
///
/// Slot values are not readable from outside the crate except through
/// [`HomBackend::decrypt`].
#[derive(Debug, Clone)]
pub struct SlotVector {
    id: u64,
    slots: Vec<f64>,
    level: u32,
    noise_est: f64,
    encrypted: bool,
}

impl SlotVector {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn noise_estimate(&self) -> f64 {
        self.noise_est
    }

    pub fn is_encrypted(&self) -> bool {
        self.encrypted
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Identifier used to correlate operations in a recorded trace.
    pub fn id(&self) -> u64 {
        self.id
    }
}

/// Plaintext operand of `mul_plain` / `add_plain`: a scalar broadcast to all
/// slots or a slot array (missing trailing entries read as zero).
#[derive(Debug, Clone, Copy)]
pub enum Plaintext<'a> {
    Scalar(f64),
    Slots(&'a [f64]),
}

impl From<f64> for Plaintext<'_> {
    fn from(v: f64) -> Self {
        Plaintext::Scalar(v)
    }
}

impl<'a> From<&'a [f64]> for Plaintext<'a> {
    fn from(v: &'a [f64]) -> Self {
        Plaintext::Slots(v)
    }
}

impl<'a> From<&'a Vec<f64>> for Plaintext<'a> {
    fn from(v: &'a Vec<f64>) -> Self {
        Plaintext::Slots(v)
    }
}

impl Plaintext<'_> {
    /// `f(x, c)` for every slot `x` and its plaintext operand `c`.
    fn map(&self, xs: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        match self {
            Plaintext::Scalar(c) => xs.iter().map(|x| f(*x, *c)).collect(),
            Plaintext::Slots(cs) => {
                let k = cs.len().min(xs.len());
                let mut out: Vec<f64> = xs[..k].iter().zip(*cs).map(|(x, c)| f(*x, *c)).collect();
                out.extend(xs[k..].iter().map(|x| f(*x, 0.0)));
                out
            }
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            Plaintext::Scalar(v) => v.abs(),
            Plaintext::Slots(s) => s.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Snapshot of operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OpCounters {
    pub n_add: u64,
    pub n_sub: u64,
    pub n_mul_ct: u64,
    pub n_mul_plain: u64,
    pub n_rot: u64,
    pub n_sign: u64,
    pub n_bootstrap: u64,
    pub modeled_cost: f64,
}

impl OpCounters {
    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            n_add: self.n_add - earlier.n_add,
            n_sub: self.n_sub - earlier.n_sub,
            n_mul_ct: self.n_mul_ct - earlier.n_mul_ct,
            n_mul_plain: self.n_mul_plain - earlier.n_mul_plain,
            n_rot: self.n_rot - earlier.n_rot,
            n_sign: self.n_sign - earlier.n_sign,
            n_bootstrap: self.n_bootstrap - earlier.n_bootstrap,
            modeled_cost: self.modeled_cost - earlier.modeled_cost,
        }
    }

    pub fn merge(&self, other: &OpCounters) -> OpCounters {
        OpCounters {
            n_add: self.n_add + other.n_add,
            n_sub: self.n_sub + other.n_sub,
            n_mul_ct: self.n_mul_ct + other.n_mul_ct,
            n_mul_plain: self.n_mul_plain + other.n_mul_plain,
            n_rot: self.n_rot + other.n_rot,
            n_sign: self.n_sign + other.n_sign,
            n_bootstrap: self.n_bootstrap + other.n_bootstrap,
            modeled_cost: self.modeled_cost + other.modeled_cost,
        }
    }
}

#[derive(Debug, Default)]
struct AtomicCounters {
    add: AtomicU64,
    sub: AtomicU64,
    mul_ct: AtomicU64,
    mul_plain: AtomicU64,
    rot: AtomicU64,
    sign: AtomicU64,
    bootstrap: AtomicU64,
}

impl AtomicCounters {
    fn snapshot(&self, cost: &CostModel) -> OpCounters {
        let mut c = OpCounters {
            n_add: self.add.load(Ordering::Relaxed),
            n_sub: self.sub.load(Ordering::Relaxed),
            n_mul_ct: self.mul_ct.load(Ordering::Relaxed),
            n_mul_plain: self.mul_plain.load(Ordering::Relaxed),
            n_rot: self.rot.load(Ordering::Relaxed),
            n_sign: self.sign.load(Ordering::Relaxed),
            n_bootstrap: self.bootstrap.load(Ordering::Relaxed),
            modeled_cost: 0.0,
        };
        c.modeled_cost = cost.cost_of(&c);
        c
    }

    fn reset(&self) {
        for c in [
            &self.add,
            &self.sub,
            &self.mul_ct,
            &self.mul_plain,
            &self.rot,
            &self.sign,
            &self.bootstrap,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }
}

/// One recorded operation. Ids refer to [`SlotVector::id`]; `level` is the
/// level of the produced vector. Bootstraps inserted automatically are not
/// recorded, only explicit ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOp {
    Encrypt {
        out: u64,
        level: u32,
    },
    Add {
        out: u64,
        a: u64,
        b: u64,
        level: u32,
    },
    Sub {
        out: u64,
        a: u64,
        b: u64,
        level: u32,
    },
    Mul {
        out: u64,
        a: u64,
        b: u64,
        level: u32,
    },
    MulPlain {
        out: u64,
        a: u64,
        level: u32,
    },
    AddPlain {
        out: u64,
        a: u64,
        level: u32,
    },
    Rotate {
        out: u64,
        a: u64,
        level: u32,
    },
    Bootstrap {
        out: u64,
        a: u64,
        level: u32,
    },
}

/// Operations every backend supports. Operations never mutate their inputs.
pub trait HomBackend: Send + Sync {
    fn params(&self) -> &BackendParams;

    /// Encrypts `values` into the leading slots; the rest are zero.
    fn encrypt(&self, values: &[f64]) -> Result<SlotVector>;
    fn decrypt(&self, ct: &SlotVector) -> Result<Vec<f64>>;

    fn add(&self, a: &SlotVector, b: &SlotVector) -> Result<SlotVector>;
    fn sub(&self, a: &SlotVector, b: &SlotVector) -> Result<SlotVector>;
    fn mul(&self, a: &SlotVector, b: &SlotVector) -> Result<SlotVector>;
    fn mul_plain(&self, a: &SlotVector, c: Plaintext<'_>) -> Result<SlotVector>;
    fn add_plain(&self, a: &SlotVector, c: Plaintext<'_>) -> Result<SlotVector>;
    /// Cyclic left rotation by `steps` slots; negative steps rotate right.
    fn rotate(&self, a: &SlotVector, steps: i64) -> Result<SlotVector>;
    fn bootstrap(&self, a: &SlotVector) -> Result<SlotVector>;

    /// Counts one evaluation of the sign approximation. Its constituent
    /// multiplications are counted separately by the operations themselves.
    fn record_sign(&self);

    /// Simulation-side domain assertion. It inspects slots without going
    /// through `decrypt`, so it models a precondition rather than a leak.
    fn ensure_range(&self, ct: &SlotVector, lo: f64, hi: f64) -> Result<()>;

    fn counters(&self) -> OpCounters;
    fn reset_counters(&self);
    /// Number of `decrypt` calls served so far.
    fn decrypt_calls(&self) -> u64;
}

/// Noise injected by a backend after each noisy operation.
pub trait NoiseModel: Send + Sync {
    fn perturb(&self, slots: &mut [f64], std: f64, stream: u64);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoNoise;

impl NoiseModel for NoNoise {
    fn perturb(&self, _slots: &mut [f64], _std: f64, _stream: u64) {}
}

/// Independent zero-mean Gaussian noise per slot. Every noisy operation draws
/// from its own stream derived from the seed and the operation's sequence
/// number, so sequential runs are reproducible.
#[derive(Debug, Clone, Copy)]
pub struct GaussianNoise {
    seed: u64,
}

impl NoiseModel for GaussianNoise {
    fn perturb(&self, slots: &mut [f64], std: f64, stream: u64) {
        if std == 0.0 {
            return;
        }
        let mut rng = SmallRng::seed_from_u64(
            self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17),
        );
        for s in slots.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *s += std * z;
        }
    }
}

/// Level-tracking backend parameterised by its noise model.
#[derive(Debug)]
pub struct LeveledBackend<N> {
    params: BackendParams,
    noise: N,
    counters: AtomicCounters,
    next_id: AtomicU64,
    noise_stream: AtomicU64,
    decrypts: AtomicU64,
    trace: Option<Mutex<Vec<TraceOp>>>,
}

/// Plain `f64` reference backend.
pub type ExactBackend = LeveledBackend<NoNoise>;
/// CKKS-fidelity simulator with Gaussian noise.
pub type CkksSimulator = LeveledBackend<GaussianNoise>;

impl LeveledBackend<NoNoise> {
    pub fn new(params: BackendParams) -> Result<Self> {
        Self::with_noise_model(params, NoNoise)
    }
}

impl LeveledBackend<GaussianNoise> {
    pub fn new(params: BackendParams) -> Result<Self> {
        let seed = params.seed;
        Self::with_noise_model(params, GaussianNoise { seed })
    }
}

/// `noise * max|v|`, skipping the scan when there is no noise to scale.
fn scaled_noise(noise: f64, v: &[f64]) -> f64 {
    if noise == 0.0 {
        0.0
    } else {
        noise * v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl<N: NoiseModel> LeveledBackend<N> {
    pub fn with_noise_model(params: BackendParams, noise: N) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            noise,
            counters: AtomicCounters::default(),
            next_id: AtomicU64::new(0),
            noise_stream: AtomicU64::new(0),
            decrypts: AtomicU64::new(0),
            trace: None,
        })
    }

    /// Enables recording of every explicit operation.
    pub fn recording(mut self) -> Self {
        self.trace = Some(Mutex::new(Vec::new()));
        self
    }

    /// Recorded operations so far (empty unless [`Self::recording`] was used).
    pub fn trace(&self) -> Vec<TraceOp> {
        self.trace
            .as_ref()
            .map(|t| t.lock().expect("trace lock poisoned").clone())
            .unwrap_or_default()
    }

    fn log(&self, op: TraceOp) {
        if let Some(t) = &self.trace {
            t.lock().expect("trace lock poisoned").push(op);
        }
    }

    fn fresh_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    fn inject(&self, slots: &mut [f64], std: f64) {
        if std > 0.0 {
            let stream = self.noise_stream.fetch_add(1, Ordering::Relaxed);
            self.noise.perturb(slots, std, stream);
        }
    }

    fn check_len(&self, a: &SlotVector) -> Result<()> {
        let expected = self.params.slot_count();
        if a.slots.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: a.slots.len(),
            });
        }
        if !a.encrypted {
            return Err(Error::NotEncrypted);
        }
        Ok(())
    }

    fn check_magnitude(&self, slots: &[f64]) -> Result<()> {
        let bound = self.params.max_magnitude;
        // Full scan without early exit so it vectorizes; NaN fails the test.
        if slots.iter().fold(true, |ok, v| ok & (v.abs() <= bound)) {
            return Ok(());
        }
        let index = slots
            .iter()
            .position(|v| v.abs() > bound || v.is_nan())
            .unwrap_or(0);
        Err(Error::Overflow {
            index,
            value: slots[index],
            bound,
        })
    }

    fn make(&self, slots: Vec<f64>, level: u32, noise_est: f64) -> Result<SlotVector> {
        self.check_magnitude(&slots)?;
        Ok(SlotVector {
            id: self.fresh_id(),
            slots,
            level,
            noise_est,
            encrypted: true,
        })
    }

    fn refresh(&self, a: &SlotVector) -> Result<SlotVector> {
        self.counters.bootstrap.fetch_add(1, Ordering::Relaxed);
        let mut slots = a.slots.clone();
        let std = self.params.noise_std_per_mul;
        self.inject(&mut slots, std);
        self.make(slots, self.params.fresh_level(), std)
    }

    /// Smallest operand level that still admits one more multiplication.
    fn min_level_for_mul(&self) -> u32 {
        if self.params.auto_bootstrap {
            1 + self.params.level_reserve
        } else {
            1
        }
    }

    fn lift_one<'a>(&self, a: &'a SlotVector) -> Result<Cow<'a, SlotVector>> {
        if a.level >= self.min_level_for_mul() {
            return Ok(Cow::Borrowed(a));
        }
        if !self.params.auto_bootstrap {
            return Err(Error::DepthExhausted {
                level: a.level,
                needed: 1,
            });
        }
        Ok(Cow::Owned(self.refresh(a)?))
    }

    /// Bootstraps the lower operand until the pair can absorb one
    /// multiplication. Operands sharing an id are lifted together.
    fn lift_pair<'a>(
        &self,
        a: &'a SlotVector,
        b: &'a SlotVector,
    ) -> Result<(Cow<'a, SlotVector>, Cow<'a, SlotVector>)> {
        if a.id == b.id {
            let l = self.lift_one(a)?;
            return Ok((l.clone(), l));
        }
        let mut a = Cow::Borrowed(a);
        let mut b = Cow::Borrowed(b);
        let need = self.min_level_for_mul();
        while a.level.min(b.level) < need {
            if !self.params.auto_bootstrap {
                return Err(Error::DepthExhausted {
                    level: a.level.min(b.level),
                    needed: 1,
                });
            }
            if a.level <= b.level {
                a = Cow::Owned(self.refresh(&a)?);
            } else {
                b = Cow::Owned(self.refresh(&b)?);
            }
        }
        Ok((a, b))
    }

    fn zip_with(
        &self,
        a: &SlotVector,
        b: &SlotVector,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Vec<f64>> {
        self.check_len(a)?;
        self.check_len(b)?;
        Ok(a.slots
            .iter()
            .zip(&b.slots)
            .map(|(x, y)| f(*x, *y))
            .collect())
    }
}

impl<N: NoiseModel> HomBackend for LeveledBackend<N> {
    fn params(&self) -> &BackendParams {
        &self.params
    }

    fn encrypt(&self, values: &[f64]) -> Result<SlotVector> {
        let n = self.params.slot_count();
        if values.len() > n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: values.len(),
            });
        }
        let mut slots = vec![0.0; n];
        slots[..values.len()].copy_from_slice(values);
        let out = self.make(slots, self.params.fresh_level(), 0.0)?;
        self.log(TraceOp::Encrypt {
            out: out.id,
            level: out.level,
        });
        Ok(out)
    }

    fn decrypt(&self, ct: &SlotVector) -> Result<Vec<f64>> {
        if !ct.encrypted {
            return Err(Error::NotEncrypted);
        }
        self.decrypts.fetch_add(1, Ordering::Relaxed);
        Ok(ct.slots.clone())
    }

    fn add(&self, a: &SlotVector, b: &SlotVector) -> Result<SlotVector> {
        let slots = self.zip_with(a, b, |x, y| x + y)?;
        self.counters.add.fetch_add(1, Ordering::Relaxed);
        let out = self.make(slots, a.level.min(b.level), a.noise_est + b.noise_est)?;
        self.log(TraceOp::Add {
            out: out.id,
            a: a.id,
            b: b.id,
            level: out.level,
        });
        Ok(out)
    }

    fn sub(&self, a: &SlotVector, b: &SlotVector) -> Result<SlotVector> {
        let slots = self.zip_with(a, b, |x, y| x - y)?;
        self.counters.sub.fetch_add(1, Ordering::Relaxed);
        let out = self.make(slots, a.level.min(b.level), a.noise_est + b.noise_est)?;
        self.log(TraceOp::Sub {
            out: out.id,
            a: a.id,
            b: b.id,
            level: out.level,
        });
        Ok(out)
    }

    fn mul(&self, a: &SlotVector, b: &SlotVector) -> Result<SlotVector> {
        self.check_len(a)?;
        self.check_len(b)?;
        let (la, lb) = self.lift_pair(a, b)?;
        let mut slots = self.zip_with(&la, &lb, |x, y| x * y)?;
        self.counters.mul_ct.fetch_add(1, Ordering::Relaxed);
        let std = self.params.noise_std_per_mul;
        self.inject(&mut slots, std);
        let noise =
            scaled_noise(la.noise_est, &lb.slots) + scaled_noise(lb.noise_est, &la.slots) + std;
        let out = self.make(slots, la.level.min(lb.level) - 1, noise)?;
        self.log(TraceOp::Mul {
            out: out.id,
            a: a.id,
            b: b.id,
            level: out.level,
        });
        Ok(out)
    }

    fn mul_plain(&self, a: &SlotVector, c: Plaintext<'_>) -> Result<SlotVector> {
        self.check_len(a)?;
        if let Plaintext::Slots(s) = c {
            if s.len() > a.slots.len() {
                return Err(Error::LengthMismatch {
                    expected: a.slots.len(),
                    found: s.len(),
                });
            }
        }
        let la = self.lift_one(a)?;
        let mut slots = c.map(&la.slots, |x, c| x * c);
        self.counters.mul_plain.fetch_add(1, Ordering::Relaxed);
        let std = self.params.noise_std_per_mul;
        self.inject(&mut slots, std);
        let out = self.make(slots, la.level - 1, la.noise_est * c.max_abs() + std)?;
        self.log(TraceOp::MulPlain {
            out: out.id,
            a: a.id,
            level: out.level,
        });
        Ok(out)
    }

    fn add_plain(&self, a: &SlotVector, c: Plaintext<'_>) -> Result<SlotVector> {
        self.check_len(a)?;
        if let Plaintext::Slots(s) = c {
            if s.len() > a.slots.len() {
                return Err(Error::LengthMismatch {
                    expected: a.slots.len(),
                    found: s.len(),
                });
            }
        }
        let slots = c.map(&a.slots, |x, c| x + c);
        self.counters.add.fetch_add(1, Ordering::Relaxed);
        let out = self.make(slots, a.level, a.noise_est)?;
        self.log(TraceOp::AddPlain {
            out: out.id,
            a: a.id,
            level: out.level,
        });
        Ok(out)
    }

    fn rotate(&self, a: &SlotVector, steps: i64) -> Result<SlotVector> {
        self.check_len(a)?;
        let n = a.slots.len();
        if steps.unsigned_abs() as usize >= n {
            return Err(Error::InvalidRotation {
                steps,
                slot_count: n,
            });
        }
        let shift = steps.rem_euclid(n as i64) as usize;
        let mut slots = a.slots.clone();
        slots.rotate_left(shift);
        self.counters.rot.fetch_add(1, Ordering::Relaxed);
        let std = self.params.noise_std_per_rot;
        self.inject(&mut slots, std);
        let out = self.make(slots, a.level, a.noise_est + std)?;
        self.log(TraceOp::Rotate {
            out: out.id,
            a: a.id,
            level: out.level,
        });
        Ok(out)
    }

    fn bootstrap(&self, a: &SlotVector) -> Result<SlotVector> {
        self.check_len(a)?;
        let out = self.refresh(a)?;
        self.log(TraceOp::Bootstrap {
            out: out.id,
            a: a.id,
            level: out.level,
        });
        Ok(out)
    }

    fn record_sign(&self) {
        self.counters.sign.fetch_add(1, Ordering::Relaxed);
    }

    fn ensure_range(&self, ct: &SlotVector, lo: f64, hi: f64) -> Result<()> {
        match ct.slots.iter().position(|v| !(*v >= lo && *v <= hi)) {
            Some(index) => Err(Error::DomainViolation {
                index,
                value: ct.slots[index],
                lo,
                hi,
            }),
            None => Ok(()),
        }
    }

    fn counters(&self) -> OpCounters {
        self.counters.snapshot(&self.params.cost)
    }

    fn reset_counters(&self) {
        self.counters.reset();
    }

    fn decrypt_calls(&self) -> u64 {
        self.decrypts.load(Ordering::Relaxed)
    }
}
