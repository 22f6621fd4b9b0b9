//! Compares counterfactual F1 and perturbation error of LEMON, dual LIME and
//! LEMON without attribution potential on the test split of a dataset.
//!
//!     cargo run --release --example counterfactual_metrics -- data/fodors-zagats

use std::time::Instant;

use em_explain::data::load_benchmark_dataset;
use em_explain::evaluation::{counterfactual_metrics, explain_all, perturbation_error, select_pairs, Class};
use em_explain::explainer::ExplainerConfig;
use em_explain::matcher::{train_baseline_matcher, BaselineMatcher, TrainConfig};

fn main() -> em_explain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/fodors-zagats".into());
    let seed = 1;
    let dataset = load_benchmark_dataset(&dir)?;
    let matcher = BaselineMatcher::new(train_baseline_matcher(&dataset, &TrainConfig::default())?);
    let methods = [
        ("lemon", ExplainerConfig::default()),
        ("lime", ExplainerConfig::lime()),
        (
            "lemon w/o potential",
            ExplainerConfig {
                disable_potential: true,
                ..Default::default()
            },
        ),
    ];
    for class in [Class::Match, Class::NonMatch] {
        let pairs = select_pairs(&matcher, &dataset, "test", class, 500, seed, 64)?;
        for (name, config) in &methods {
            let start = Instant::now();
            let explanations = explain_all(&matcher, &pairs, config, seed, 1)?;
            let cf = counterfactual_metrics(&matcher, &pairs, &explanations, config, seed, 1)?;
            let pe = perturbation_error(&matcher, &pairs, &explanations, config, seed, 1)?;
            println!(
                "{:<9} {:<20} pairs {:>3}  CR {:.3}  CP {:.3}  CF1 {:.3}  PE {:.3}  ({:.1}s)",
                class.as_str(),
                name,
                pairs.len(),
                cf.cr.unwrap_or(f64::NAN),
                cf.cp.unwrap_or(f64::NAN),
                cf.cf1.unwrap_or(f64::NAN),
                pe.pe.unwrap_or(f64::NAN),
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
