//! Trains the built-in similarity matcher on a benchmark directory and
//! reports F1 on the validation and test splits.
//!
//!     cargo run --release --example train_matcher -- data/fodors-zagats

use em_explain::data::load_benchmark_dataset;
use em_explain::matcher::{score_pairs, train_baseline_matcher, BaselineMatcher, TrainConfig};

fn main() -> em_explain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/fodors-zagats".into());
    let dataset = load_benchmark_dataset(&dir)?;
    let model = train_baseline_matcher(&dataset, &TrainConfig::default())?;
    let matcher = BaselineMatcher::new(model);
    for split in ["valid", "test"] {
        let pairs = dataset.pairs(split);
        let (records, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let scores = score_pairs(&matcher, &records, 64)?;
        let (mut tp, mut fp, mut fneg) = (0, 0, 0);
        for (s, y) in scores.iter().zip(&labels) {
            match (*s > matcher.model.threshold, *y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        let f1 = 2.0 * tp as f64 / (2 * tp + fp + fneg).max(1) as f64;
        println!("{split}: {} pairs, F1 {f1:.3} (tp {tp}, fp {fp}, fn {fneg})", records.len());
    }
    Ok(())
}
