//! Contrasts the joint LIME explanation of a pair with the dual explanation
//! with potential. LIME can only say what to remove, so for a non-match it
//! rarely finds a way to flip the decision.
//!
//!     cargo run --example lime_baseline -- data/fodors-zagats 17

use em_explain::data::load_benchmark_dataset;
use em_explain::explainer::{explain, ExplainerConfig, Explanation};
use em_explain::lime::{explain_lime, LimeConfig};
use em_explain::matcher::{train_baseline_matcher, BaselineMatcher, TrainConfig};

fn show(name: &str, e: &Explanation) {
    println!(
        "{name} ({}): predicted strength {:.3}, actual {:.3}",
        e.side.as_str(),
        e.cfs_hat,
        e.cfs_actual
    );
    for x in &e.entries {
        println!(
            "  {} {:>8.4} {:>8.4}  {}: {:?}",
            x.feature.side.as_str(),
            x.w,
            x.p,
            x.feature.attribute,
            x.feature.text
        );
    }
}

fn main() -> em_explain::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data/fodors-zagats".into());
    let row: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(17);
    let dataset = load_benchmark_dataset(&dir)?;
    let matcher = BaselineMatcher::new(train_baseline_matcher(&dataset, &TrainConfig::default())?);
    let pair = dataset
        .pair("test", row)
        .ok_or_else(|| em_explain::Error::Config(format!("no test pair {row}")))?;

    let lime = explain_lime(&matcher, &pair, &LimeConfig::default(), 1)?;
    show("LIME", &lime.joint);
    let dual = explain(&matcher, &pair, &ExplainerConfig::default(), 1)?;
    for e in dual.explanations() {
        show("dual", e);
    }
    Ok(())
}
