//! Regenerates the bundled batches under `data/`.
//!
//! ```text
//! cargo run -p hevote-core --example make_batches -- data
//! ```

use std::fs;
use std::path::PathBuf;

use hevote_core::argmax::NormBounds;
use hevote_core::ensemble::{oracle_vote, synthetic_batch};

fn main() -> hevote_core::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    let bounds = NormBounds::new(-10.0, 10.0)?;
    let min_gap = 4e-3;

    fs::create_dir_all(root.join("synthetic"))?;
    let sample = synthetic_batch(7, 5, 4, 16, bounds, min_gap)?;
    fs::write(root.join("sample_batch.json"), sample.to_json_string())?;
    fs::write(
        root.join("sample_labels.json"),
        serde_json::to_string(&oracle_vote(&sample)).expect("labels serialize"),
    )?;

    for (i, m) in [1usize, 3, 5, 40].into_iter().enumerate() {
        for (j, n) in [2usize, 4, 256].into_iter().enumerate() {
            let count = if n == 256 { 8 } else { 32 };
            let seed = 100 + 10 * i as u64 + j as u64;
            let batch = synthetic_batch(seed, m, n, count, bounds, min_gap)?;
            fs::write(
                root.join("synthetic").join(format!("m{m}_n{n}.json")),
                batch.to_json_string(),
            )?;
        }
    }
    Ok(())
}
