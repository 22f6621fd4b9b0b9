use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::parallel_map;
use crate::data::RecordPair;
use crate::error::MatcherError;
use crate::explainer::{ExplainerConfig, Explanation, PairExplanation};
use crate::interpretable::{PerturbationVector, State};
use crate::matcher::{score_one, Matcher};
use crate::seed::{stream, KeyPart};
use crate::surrogate::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub pair_id: String,
    pub side: String,
    /// Number of perturbed features.
    pub count: usize,
    /// How many of the perturbed features were injected.
    pub injected: usize,
    /// Predicted change of every perturbed feature.
    pub deltas: Vec<f64>,
    pub predicted: f64,
    pub realized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationErrorReport {
    pub experiments: usize,
    pub mae: Option<f64>,
    pub pe: Option<f64>,
    /// Explanations without any selected feature.
    pub skipped: usize,
    pub records: Vec<PerturbationRecord>,
}

impl PerturbationErrorReport {
    pub fn from_records(records: Vec<PerturbationRecord>, skipped: usize) -> Self {
        let l = records.len();
        let (mae, pe) = if l == 0 {
            (None, None)
        } else {
            let mae = records
                .iter()
                .map(|r| (r.realized - r.predicted).abs())
                .sum::<f64>()
                / l as f64;
            let magnitude = records
                .iter()
                .map(|r| r.deltas.iter().map(|d| d.abs()).sum::<f64>())
                .sum::<f64>()
                / l as f64;
            (Some(mae), (magnitude > 0.0).then(|| mae / magnitude))
        };
        PerturbationErrorReport {
            experiments: l,
            mae,
            pe,
            skipped,
            records,
        }
    }
}

fn experiments_for<M: Matcher + ?Sized>(
    matcher: &M,
    pair: &RecordPair,
    e: &Explanation,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<Vec<PerturbationRecord>, MatcherError> {
    let space = e.space(pair);
    let mut out = Vec::new();
    for count in 1..=3usize.min(e.entries.len()) {
        let mut rng = stream(
            seed,
            &[
                KeyPart::from("perturbation"),
                KeyPart::from(pair.pair_id.as_str()),
                KeyPart::from(e.side.as_str()),
                KeyPart::from(count),
            ],
        );
        let chosen = index::sample(&mut rng, e.entries.len(), count);
        let mut z = PerturbationVector::all_present(e.dim);
        let mut deltas = Vec::with_capacity(count);
        for i in chosen.iter() {
            let entry = &e.entries[i];
            let inject = e.mode == Mode::Lemon && rng.gen_bool(0.5);
            if inject {
                z.states[entry.feature.index] = State::M;
                deltas.push(entry.p);
            } else {
                z.states[entry.feature.index] = State::A;
                deltas.push(-entry.w);
            }
        }
        let (translated, plan) = space.translate(&z, matcher, &mut rng, config.sampling.batch_size)?;
        let realized = match plan.score {
            Some(s) => s,
            None => score_one(matcher, &translated)?,
        };
        out.push(PerturbationRecord {
            pair_id: pair.pair_id.clone(),
            side: e.side.as_str().to_string(),
            count,
            injected: z.states.iter().filter(|s| **s == State::M).count(),
            predicted: e.score + deltas.iter().sum::<f64>(),
            deltas,
            realized,
        });
    }
    Ok(out)
}

/// Perturbs 1, 2 and 3 random selected features of every explanation,
/// each removed or (for explanations with potential) injected with equal
/// probability, and compares the realized score to the additive prediction.
pub fn perturbation_error<M: Matcher + ?Sized>(
    matcher: &M,
    pairs: &[RecordPair],
    explanations: &[PairExplanation],
    config: &ExplainerConfig,
    seed: u64,
    workers: usize,
) -> Result<PerturbationErrorReport, MatcherError> {
    assert_eq!(pairs.len(), explanations.len());
    let items: Vec<(&RecordPair, &PairExplanation)> = pairs.iter().zip(explanations).collect();
    let per_pair: Vec<(Vec<PerturbationRecord>, usize)> = parallel_map(&items, workers, |(pair, pe)| {
        let mut records = Vec::new();
        let mut skipped = 0;
        for e in pe.explanations() {
            if e.entries.is_empty() {
                skipped += 1;
                continue;
            }
            records.extend(experiments_for(matcher, pair, e, config, seed)?);
        }
        Ok::<_, MatcherError>((records, skipped))
    })?;
    let skipped = per_pair.iter().map(|(_, s)| s).sum();
    let records = per_pair.into_iter().flat_map(|(r, _)| r).collect();
    Ok(PerturbationErrorReport::from_records(records, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(deltas: Vec<f64>, predicted: f64, realized: f64) -> PerturbationRecord {
        PerturbationRecord {
            pair_id: "p".into(),
            side: "a".into(),
            count: deltas.len(),
            injected: 0,
            deltas,
            predicted,
            realized,
        }
    }

    #[test]
    fn pe_arithmetic() {
        let r = PerturbationErrorReport::from_records(
            vec![rec(vec![-0.2], 0.7, 0.8), rec(vec![0.1, 0.1], 0.5, 0.4)],
            0,
        );
        assert!((r.mae.unwrap() - 0.1).abs() < 1e-12);
        assert!((r.pe.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_report() {
        let r = PerturbationErrorReport::from_records(vec![], 3);
        assert_eq!(r.pe, None);
        assert_eq!(r.skipped, 3);
    }
}
