//! End-to-end private voting over prompt-ensemble logits.
//!
//! Client: encrypt one ciphertext per prompt, each holding that prompt's
//! logits for up to `copies` examples. Server: sum the prompt ciphertexts,
//! scale by `1/m`, normalize into `[0, 1]` and run the argmax. Client:
//! decrypt and read one-hot windows.

use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::argmax::{self, NormBounds, PackingLayout};
use crate::backend::{BackendParams, HomBackend, OpCounters, SlotVector};
use crate::bench::BackendKind;
use crate::error::{Error, Result};
use crate::sign::{CompositeSign, SignConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    /// `m` rows (one per prompt) of `n` logits.
    pub logits: Vec<Vec<f64>>,
}

/// Validated batch of per-prompt logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitBatch {
    pub m: usize,
    pub n: usize,
    pub bounds: NormBounds,
    pub examples: Vec<Example>,
}

#[derive(Serialize, Deserialize)]
struct LogitFile {
    m: usize,
    n: usize,
    d_min: f64,
    d_max: f64,
    examples: Vec<Example>,
}

impl LogitBatch {
    pub fn new(m: usize, n: usize, bounds: NormBounds, examples: Vec<Example>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Schema(format!(
                "m and n must be positive (m={m}, n={n})"
            )));
        }
        for ex in &examples {
            if ex.logits.len() != m {
                return Err(Error::DimensionMismatch {
                    id: ex.id.clone(),
                    detail: format!("expected {m} prompt rows, found {}", ex.logits.len()),
                });
            }
            for (i, row) in ex.logits.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        id: ex.id.clone(),
                        detail: format!("row {i} has {} logits, expected {n}", row.len()),
                    });
                }
                if let Some(v) = row.iter().find(|v| !bounds.contains(**v)) {
                    return Err(Error::BoundsViolation {
                        id: ex.id.clone(),
                        value: *v,
                        d_min: bounds.d_min,
                        d_max: bounds.d_max,
                    });
                }
            }
        }
        Ok(Self {
            m,
            n,
            bounds,
            examples,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: LogitFile = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        let bounds = NormBounds::new(f.d_min, f.d_max)?;
        Self::new(f.m, f.n, bounds, f.examples)
    }

    pub fn to_json_string(&self) -> String {
        let f = LogitFile {
            m: self.m,
            n: self.n,
            d_min: self.bounds.d_min,
            d_max: self.bounds.d_max,
            examples: self.examples.clone(),
        };
        serde_json::to_string(&f).expect("batch serializes")
    }
}

/// Reads and validates a logit file.
pub fn load_logits(path: impl AsRef<Path>) -> Result<LogitBatch> {
    LogitBatch::from_json_str(&std::fs::read_to_string(path)?)
}

/// Decoded result for one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResult {
    pub id: String,
    pub one_hot: Vec<u8>,
    pub label: usize,
    /// Counts for the argmax pass that served this example (shared by every
    /// example packed into the same ciphertext).
    pub counters: OpCounters,
}

/// Modeled cost split by server phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub aggregate: f64,
    pub argmax: f64,
    /// Normalization and output masking.
    pub other: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn add(&mut self, phases: &PhaseCounters) {
        self.aggregate += phases.aggregate.modeled_cost;
        self.argmax += phases.argmax.modeled_cost;
        self.other += phases.other.modeled_cost;
        self.total = self.aggregate + self.argmax + self.other;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseCounters {
    pub aggregate: OpCounters,
    pub argmax: OpCounters,
    pub other: OpCounters,
}

impl PhaseCounters {
    pub fn total(&self) -> OpCounters {
        self.aggregate.merge(&self.argmax).merge(&self.other)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VoteOptions {
    /// Zero every slot outside the `n` output positions before returning.
    pub mask_outputs: bool,
}

#[derive(Debug, Clone)]
pub struct VoteOutcome {
    pub results: Vec<VoteResult>,
    pub breakdown: CostBreakdown,
    /// Number of argmax evaluations (one per ciphertext).
    pub argmax_passes: usize,
}

/// Sign approximation settings as they appear in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignSettings {
    pub alpha: u32,
    pub d_f: u32,
    pub d_g: u32,
    pub degree: usize,
}

impl Default for SignSettings {
    fn default() -> Self {
        let c = SignConfig::certified();
        Self {
            alpha: c.alpha,
            d_f: c.d_f,
            d_g: c.d_g,
            degree: c.deg_f(),
        }
    }
}

impl SignSettings {
    pub fn build(&self) -> Result<SignConfig> {
        SignConfig::new(self.alpha, self.d_f, self.d_g, self.degree)
    }
}

/// Settings for a vote run. Backend parameters sit at the top level of the
/// TOML document; sign settings live under `[sign]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoteConfig {
    pub backend: BackendKind,
    pub mask_outputs: bool,
    pub sign: SignSettings,
    #[serde(flatten)]
    pub params: BackendParams,
}

impl Default for VoteConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Exact,
            mask_outputs: false,
            sign: SignSettings::default(),
            params: BackendParams::default(),
        }
    }
}

impl VoteConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::InvalidParams(e.to_string()))?;
        cfg.params.validate()?;
        cfg.sign.build()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn options(&self) -> VoteOptions {
        VoteOptions {
            mask_outputs: self.mask_outputs,
        }
    }
}

/// Slotwise sum of `cts` scaled by `1/m`.
pub fn aggregate<B: HomBackend + ?Sized>(
    backend: &B,
    cts: &[SlotVector],
    m: usize,
) -> Result<SlotVector> {
    if cts.is_empty() || cts.len() != m {
        return Err(Error::Schema(format!(
            "expected {m} prompt ciphertexts, got {}",
            cts.len()
        )));
    }
    let first_len = cts[0].len();
    if let Some(ct) = cts.iter().find(|c| c.len() != first_len) {
        return Err(Error::LengthMismatch {
            expected: first_len,
            found: ct.len(),
        });
    }
    let mut acc = cts[0].clone();
    for ct in &cts[1..] {
        acc = backend.add(&acc, ct)?;
    }
    backend.mul_plain(&acc, (1.0 / m as f64).into())
}

/// Client side: one ciphertext per prompt for a chunk of at most
/// `layout.copies` examples. Padding slots carry `d_min` so they normalize
/// to zero.
pub fn encrypt_prompts<B: HomBackend + ?Sized>(
    backend: &B,
    examples: &[Example],
    m: usize,
    layout: &PackingLayout,
    bounds: &NormBounds,
) -> Result<Vec<SlotVector>> {
    (0..m)
        .map(|i| {
            let rows: Vec<&[f64]> = examples.iter().map(|ex| ex.logits[i].as_slice()).collect();
            backend.encrypt(&layout.place(&rows, bounds.d_min)?)
        })
        .collect()
}

/// Server side: never decrypts. Returns the encrypted one-hot windows and
/// per-phase operation counts.
pub fn server_vote<B: HomBackend + ?Sized>(
    backend: &B,
    prompt_cts: &[SlotVector],
    bounds: &NormBounds,
    layout: &PackingLayout,
    sign: &CompositeSign,
    opts: VoteOptions,
) -> Result<(SlotVector, PhaseCounters)> {
    let t0 = backend.counters();
    let summed = aggregate(backend, prompt_cts, prompt_cts.len())?;
    let t1 = backend.counters();
    let normalized = argmax::normalize_windows(backend, &summed, bounds, layout)?;
    let t2 = backend.counters();
    let mut z = argmax::secpe_argmax(backend, &normalized, layout, sign)?;
    let t3 = backend.counters();
    if opts.mask_outputs {
        z = argmax::mask_outputs(backend, &z, layout)?;
    }
    let t4 = backend.counters();
    let phases = PhaseCounters {
        aggregate: t1.since(&t0),
        argmax: t3.since(&t2),
        other: t2.since(&t1).merge(&t4.since(&t3)),
    };
    Ok((z, phases))
}

/// Label from decrypted window values: the first slot rounding to 1, or the
/// largest slot when none does (only possible when the gap precondition is
/// violated).
pub fn decode_label(window: &[f64]) -> (Vec<u8>, usize) {
    let one_hot = argmax::round_one_hot(window);
    let label = one_hot.iter().position(|v| *v == 1).unwrap_or_else(|| {
        window
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if *v > best.1 {
                    (i, *v)
                } else {
                    best
                }
            })
            .0
    });
    (one_hot, label)
}

/// Runs the full encrypt / aggregate / argmax / decrypt flow for every
/// example. Results follow input order.
pub fn vote<B: HomBackend + ?Sized>(
    backend: &B,
    batch: &LogitBatch,
    config: &SignConfig,
    opts: VoteOptions,
) -> Result<VoteOutcome> {
    let layout = PackingLayout::new(batch.n, backend.params().slot_count())?;
    let sign = CompositeSign::new(config.clone());
    let mut results = Vec::with_capacity(batch.examples.len());
    let mut breakdown = CostBreakdown::default();
    let mut passes = 0;
    for chunk in batch.examples.chunks(layout.copies) {
        let cts = encrypt_prompts(backend, chunk, batch.m, &layout, &batch.bounds)?;
        let (z, phases) = server_vote(backend, &cts, &batch.bounds, &layout, &sign, opts)?;
        passes += 1;
        breakdown.add(&phases);
        let slots = backend.decrypt(&z)?;
        let counters = phases.total();
        for (ex, window) in chunk.iter().zip(layout.extract(&slots, chunk.len())) {
            let (one_hot, label) = decode_label(&window);
            results.push(VoteResult {
                id: ex.id.clone(),
                one_hot,
                label,
                counters,
            });
        }
    }
    Ok(VoteOutcome {
        results,
        breakdown,
        argmax_passes: passes,
    })
}

/// Plaintext aggregate-then-argmax with first-index tie-break.
pub fn oracle_vote(batch: &LogitBatch) -> Vec<usize> {
    batch
        .examples
        .iter()
        .map(|ex| {
            let mut sum = vec![0.0; batch.n];
            for row in &ex.logits {
                for (s, v) in sum.iter_mut().zip(row) {
                    *s += v;
                }
            }
            sum.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                    if *v > best.1 {
                        (i, *v)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

/// Random batch whose mean logits have a normalized runner-up gap of at least
/// `min_gap`. Per-prompt deviations sum to zero across prompts, and values
/// are rounded to four decimals.
pub fn synthetic_batch(
    seed: u64,
    m: usize,
    n: usize,
    count: usize,
    bounds: NormBounds,
    min_gap: f64,
) -> Result<LogitBatch> {
    let mut rng = rand::rngs::SmallRng::seed_from_u64(seed);
    let span = bounds.d_max - bounds.d_min;
    let round = |v: f64| (v * 1e4).round() / 1e4;
    let examples = (0..count)
        .map(|k| {
            let mut mean: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..0.7)).collect();
            let (winner, _) = mean
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |b, (i, v)| if *v > b.1 { (i, *v) } else { b },
                );
            let runner_up = mean
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != winner)
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            if n > 1 && mean[winner] - runner_up < min_gap {
                mean[winner] = runner_up + min_gap;
            }
            let mut dev: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(-0.12..0.12)).collect())
                .collect();
            for j in 0..n {
                let avg = dev.iter().map(|r| r[j]).sum::<f64>() / m as f64;
                dev.iter_mut().for_each(|r| r[j] -= avg);
            }
            let logits = dev
                .iter()
                .map(|r| {
                    r.iter()
                        .zip(&mean)
                        .map(|(d, mu)| round(bounds.d_min + (mu + d) * span))
                        .collect()
                })
                .collect();
            Example {
                id: format!("ex{k:04}"),
                logits,
            }
        })
        .collect();
    LogitBatch::new(m, n, bounds, examples)
}
