//! Operation-count benchmarks of the two argmax methods.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::argmax::{self, NormBounds, PackingLayout};
use crate::backend::{BackendParams, CkksSimulator, ExactBackend, HomBackend};
use crate::error::{Error, Result};
use crate::sign::{CompositeSign, SignConfig};

pub use crate::ensemble::CostBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Secpe,
    Phoenix,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Secpe => "secpe",
            Method::Phoenix => "phoenix",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "secpe" => Ok(Method::Secpe),
            "phoenix" => Ok(Method::Phoenix),
            other => Err(Error::InvalidBench(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Sim,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Exact => "exact",
            BackendKind::Sim => "sim",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(BackendKind::Exact),
            "sim" => Ok(BackendKind::Sim),
            other => Err(Error::InvalidBench(format!("unknown backend {other:?}"))),
        }
    }
}

impl BackendKind {
    pub fn build(self, params: BackendParams) -> Result<Box<dyn HomBackend>> {
        Ok(match self {
            BackendKind::Exact => Box::new(ExactBackend::new(params)?),
            BackendKind::Sim => Box::new(CkksSimulator::new(params)?),
        })
    }
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: Method,
    pub n: usize,
    pub backend: BackendKind,
    pub sign_ops: u64,
    pub rotations: u64,
    /// Ciphertext-ciphertext multiplications.
    pub mults: u64,
    pub bootstraps: u64,
    pub modeled_cost: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub methods: Vec<Method>,
    pub backend: BackendKind,
    pub params: BackendParams,
    pub seed: u64,
    pub sign: SignConfig,
}

/// Uniform window on `[0, 1]^n` resampled until the gap between the largest
/// and second-largest value is at least `min_gap`.
pub fn gapped_window<R: Rng>(rng: &mut R, n: usize, min_gap: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if n < 2 || runner_up_gap(&w) >= min_gap {
            return w;
        }
    }
}

/// Difference between the largest and second-largest entry.
pub fn runner_up_gap(w: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in w {
        if *v > first {
            second = first;
            first = *v;
        } else if *v > second {
            second = *v;
        }
    }
    first - second
}

/// Runs `f` and returns its result with the elapsed milliseconds. The
/// browser target has no monotonic clock in std, so it reports 0 there.
#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

fn check_dims(dims: &[usize], slot_count: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidBench("no dimensions requested".into()));
    }
    for &n in dims {
        if !n.is_power_of_two() || n < 2 || n > slot_count / 2 {
            return Err(Error::InvalidBench(format!(
                "dimension {n} must be a power of two in [2, {}]",
                slot_count / 2
            )));
        }
    }
    Ok(())
}

/// Runs every `(method, n)` cell on a fully packed ciphertext of random
/// gapped windows. Records are sorted by method, then `n`.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    check_dims(&cfg.dims, cfg.params.slot_count())?;
    if cfg.methods.is_empty() {
        return Err(Error::InvalidBench("no methods requested".into()));
    }
    let sign = CompositeSign::new(cfg.sign.clone());
    let min_gap = 2.0 * cfg.sign.margin();
    let bounds = NormBounds::new(0.0, 1.0)?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();

    let mut records = Vec::new();
    for &method in &methods {
        for &n in &dims {
            let cell_seed = cfg.seed ^ ((n as u64) << 8) ^ method as u64;
            let backend = cfg.backend.build(cfg.params.clone().with_seed(cell_seed))?;
            let layout = PackingLayout::new(n, backend.params().slot_count())?;
            let mut rng = rand::rngs::SmallRng::seed_from_u64(cell_seed);
            let windows: Vec<Vec<f64>> = (0..layout.copies)
                .map(|_| gapped_window(&mut rng, n, min_gap))
                .collect();
            let ct = argmax::pack(backend.as_ref(), &windows, &layout, &bounds)?;
            let before = backend.counters();
            let (result, wall_ms) = timed(|| match method {
                Method::Secpe => argmax::secpe_argmax(backend.as_ref(), &ct, &layout, &sign),
                Method::Phoenix => argmax::phoenix_argmax(backend.as_ref(), &ct, &layout, &sign),
            });
            result?;
            let d = backend.counters().since(&before);
            records.push(BenchRecord {
                method,
                n,
                backend: cfg.backend,
                sign_ops: d.n_sign,
                rotations: d.n_rot,
                mults: d.n_mul_ct,
                bootstraps: d.n_bootstrap,
                modeled_cost: d.modeled_cost,
                wall_ms,
            });
        }
    }
    Ok(records)
}

pub const CSV_HEADER: &str =
    "method,n,backend,sign_ops,rotations,mults,bootstraps,modeled_cost,wall_ms";

/// Writes records as CSV. With `with_wall_time = false` the `wall_ms` column
/// is written as `0` so output depends only on the inputs.
pub fn write_csv<W: Write>(mut w: W, records: &[BenchRecord], with_wall_time: bool) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let wall = if with_wall_time { r.wall_ms } else { 0.0 };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.3}",
            r.method,
            r.n,
            r.backend,
            r.sign_ops,
            r.rotations,
            r.mults,
            r.bootstraps,
            r.modeled_cost,
            wall
        )?;
    }
    Ok(())
}

/// `modeled_cost(phoenix) / modeled_cost(secpe)` per `n`, for every `n`
/// present for both methods, in ascending `n`.
pub fn speedup_curve(records: &[BenchRecord]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.method == Method::Secpe)
        .filter_map(|s| {
            records
                .iter()
                .find(|p| p.method == Method::Phoenix && p.n == s.n)
                .map(|p| (s.n, p.modeled_cost / s.modeled_cost))
        })
        .collect();
    out.sort_by_key(|(n, _)| *n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dims: Vec<usize>) -> BenchConfig {
        BenchConfig {
            dims,
            methods: vec![Method::Phoenix, Method::Secpe],
            backend: BackendKind::Exact,
            params: BackendParams::default().with_ring_degree(256),
            seed: 11,
            sign: SignConfig::certified(),
        }
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(run_bench(&cfg(vec![3])).is_err());
        assert!(run_bench(&cfg(vec![1])).is_err());
        assert!(run_bench(&cfg(vec![128])).is_err());
        assert!(run_bench(&cfg(vec![])).is_err());
    }

    #[test]
    fn records_are_sorted_and_counted() {
        let recs = run_bench(&cfg(vec![8, 2, 4])).unwrap();
        let keys: Vec<(Method, usize)> = recs.iter().map(|r| (r.method, r.n)).collect();
        assert_eq!(
            keys,
            vec![
                (Method::Secpe, 2),
                (Method::Secpe, 4),
                (Method::Secpe, 8),
                (Method::Phoenix, 2),
                (Method::Phoenix, 4),
                (Method::Phoenix, 8)
            ]
        );
        for r in &recs {
            let log = r.n.trailing_zeros() as u64;
            match r.method {
                Method::Secpe => assert_eq!((r.sign_ops, r.rotations), (log + 1, log + 1)),
                Method::Phoenix => assert_eq!(r.sign_ops, r.n as u64),
            }
        }
    }

    #[test]
    fn csv_is_deterministic_without_wall_time() {
        let render = || {
            let recs = run_bench(&cfg(vec![4])).unwrap();
            let mut buf = Vec::new();
            write_csv(&mut buf, &recs, false).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render();
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a, render());
    }

    #[test]
    fn gap_sampler() {
        let mut rng = rand::rngs::SmallRng::seed_from_u64(1);
        for _ in 0..50 {
            let w = gapped_window(&mut rng, 64, 1e-2);
            assert!(runner_up_gap(&w) >= 1e-2);
        }
        assert_eq!(runner_up_gap(&[0.5, 0.5]), 0.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("secpe".parse::<Method>().unwrap(), Method::Secpe);
        assert_eq!("sim".parse::<BackendKind>().unwrap(), BackendKind::Sim);
        assert!("other".parse::<Method>().is_err());
    }
}
