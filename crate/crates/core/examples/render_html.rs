//! Writes the HTML report of one explanation.
//!
//!     cargo run --example render_html -- data/fodors-zagats 3 report.html

use em_explain::data::load_benchmark_dataset;
use em_explain::explainer::{explain, ExplainerConfig};
use em_explain::matcher::{train_baseline_matcher, BaselineMatcher, TrainConfig};
use em_explain::render::render;

fn main() -> em_explain::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data/fodors-zagats".into());
    let row: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let out = args.next().unwrap_or_else(|| "explanation.html".into());
    let dataset = load_benchmark_dataset(&dir)?;
    let matcher = BaselineMatcher::new(train_baseline_matcher(&dataset, &TrainConfig::default())?);
    let pair = dataset
        .pair("test", row)
        .ok_or_else(|| em_explain::Error::Config(format!("no test pair {row}")))?;
    let explanation = explain(&matcher, &pair, &ExplainerConfig::default(), 1)?;
    let rendered = render(&explanation, &pair);
    std::fs::write(&out, &rendered.html)?;
    println!("{}\nwrote {out}", rendered.summary);
    Ok(())
}
