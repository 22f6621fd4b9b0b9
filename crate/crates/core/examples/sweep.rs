//! Sweeps the number of features per explanation and prints the table as CSV.
//!
//!     cargo run --release --example sweep -- data/fodors-zagats 30

use em_explain::data::load_benchmark_dataset;
use em_explain::evaluation::{select_pairs, sweep, Class, SweepAxis};
use em_explain::explainer::ExplainerConfig;
use em_explain::matcher::{train_baseline_matcher, BaselineMatcher, TrainConfig};

fn main() -> em_explain::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data/fodors-zagats".into());
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);
    let dataset = load_benchmark_dataset(&dir)?;
    let matcher = BaselineMatcher::new(train_baseline_matcher(&dataset, &TrainConfig::default())?);
    let mut by_class = Vec::new();
    for class in [Class::Match, Class::NonMatch] {
        by_class.push((class, select_pairs(&matcher, &dataset, "test", class, n, 1, 64)?));
    }
    let table = sweep(
        &matcher,
        &by_class,
        &ExplainerConfig::default(),
        SweepAxis::K,
        &[1, 3, 5, 7],
        1,
        1,
    )?;
    print!("{}", table.to_csv());
    Ok(())
}
