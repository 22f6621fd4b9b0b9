//! Explains one test pair with the full explainer and prints, per record,
//! the chosen granularity and the selected spans with weight and potential.
//!
//!     cargo run --example explain_pair -- data/fodors-zagats 17

use em_explain::data::load_benchmark_dataset;
use em_explain::explainer::{explain, ExplainerConfig};
use em_explain::matcher::{train_baseline_matcher, BaselineMatcher, TrainConfig};

fn main() -> em_explain::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data/fodors-zagats".into());
    let row: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let dataset = load_benchmark_dataset(&dir)?;
    let matcher = BaselineMatcher::new(train_baseline_matcher(&dataset, &TrainConfig::default())?);
    let pair = dataset
        .pair("test", row)
        .ok_or_else(|| em_explain::Error::Config(format!("no test pair {row}")))?;

    let explanation = explain(&matcher, &pair, &ExplainerConfig::default(), 1)?;
    for e in explanation.explanations() {
        println!(
            "record {}: score {:.3}, granularity {}, predicted strength {:.3} after {} step(s), actual {:.3}",
            e.side.as_str(),
            e.score,
            e.granularity,
            e.cfs_hat,
            e.k_g,
            e.cfs_actual
        );
        for x in &e.entries {
            println!("  {:>8.4} {:>8.4}  {}: {:?}", x.w, x.p, x.feature.attribute, x.feature.text);
        }
    }
    Ok(())
}
