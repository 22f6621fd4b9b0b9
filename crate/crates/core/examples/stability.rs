//! Measures how much explanations change between two seeds at a small and a
//! default neighborhood size.
//!
//!     cargo run --release --example stability -- data/fodors-zagats 20

use em_explain::data::load_benchmark_dataset;
use em_explain::evaluation::{select_pairs, stability, Class};
use em_explain::explainer::ExplainerConfig;
use em_explain::matcher::{train_baseline_matcher, BaselineMatcher, TrainConfig};

fn main() -> em_explain::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data/fodors-zagats".into());
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let dataset = load_benchmark_dataset(&dir)?;
    let matcher = BaselineMatcher::new(train_baseline_matcher(&dataset, &TrainConfig::default())?);
    for class in [Class::Match, Class::NonMatch] {
        let pairs = select_pairs(&matcher, &dataset, "test", class, n, 1, 64)?;
        for size in [50, 500] {
            let mut config = ExplainerConfig::default();
            config.sampling.s_min = size;
            config.sampling.s_max = size;
            let report = stability(&matcher, &pairs, &config, (1, 2), 1)?;
            println!(
                "{:<8} |Z| = {size:>4}: mean similarity {:.3} over {} pairs",
                class.as_str(),
                report.mean.unwrap_or(f64::NAN),
                pairs.len()
            );
        }
    }
    Ok(())
}
