//! Quantitative evaluation of explainers: counterfactual recall, precision
//! and F1, perturbation error, stability, and parameter sweeps.

mod faithfulness;
mod stability;
mod sweep;

pub use faithfulness::{perturbation_error, PerturbationErrorReport, PerturbationRecord};
pub use stability::{explanation_similarity, stability, PairSimilarity, StabilityReport};
pub use sweep::{sweep, SweepAxis, SweepRow, SweepTable};

use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, RecordPair};
use crate::error::{Error, ExplainError, MatcherError};
use crate::explainer::{actual_cfs, explain, ExplainerConfig, Explanation, PairExplanation, CFS_TOLERANCE};
use crate::matcher::{score_one, score_pairs, Matcher};
use crate::seed::{stream, KeyPart};

/// Pairs per predicted class used for counterfactual metrics.
pub const PAIRS_PER_CLASS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Match,
    #[serde(alias = "non-match")]
    NonMatch,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Match => "match",
            Class::NonMatch => "nonmatch",
        }
    }
}

impl std::str::FromStr for Class {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "match" => Ok(Class::Match),
            "nonmatch" | "non-match" => Ok(Class::NonMatch),
            _ => Err(format!("unknown class {s:?}, expected match or nonmatch")),
        }
    }
}

/// Pairs of `split` the matcher assigns to `class`, subsampled to at most
/// `n` with a seeded draw; split order is kept.
pub fn select_pairs<M: Matcher + ?Sized>(
    matcher: &M,
    dataset: &Dataset,
    split: &str,
    class: Class,
    n: usize,
    seed: u64,
    batch_size: usize,
) -> Result<Vec<RecordPair>, MatcherError> {
    let pairs: Vec<RecordPair> = dataset.pairs(split).into_iter().map(|(p, _)| p).collect();
    let scores = score_pairs(matcher, &pairs, batch_size)?;
    let want_match = class == Class::Match;
    let members: Vec<RecordPair> = pairs
        .into_iter()
        .zip(scores)
        .filter(|(_, s)| (*s > matcher.threshold()) == want_match)
        .map(|(p, _)| p)
        .collect();
    if members.len() <= n {
        return Ok(members);
    }
    let mut rng = stream(seed, &["select".into(), split.into(), class.as_str().into()]);
    let mut keep: Vec<usize> = index::sample(&mut rng, members.len(), n).into_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| members[i].clone()).collect())
}

/// Runs `f` over `items` on a pool of `workers` threads; output order
/// follows input order.
pub fn parallel_map<T, U, E, F>(items: &[T], workers: usize, f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().map(f).collect())
}

pub fn explain_all<M: Matcher + ?Sized>(
    matcher: &M,
    pairs: &[RecordPair],
    config: &ExplainerConfig,
    seed: u64,
    workers: usize,
) -> Result<Vec<PairExplanation>, ExplainError> {
    parallel_map(pairs, workers, |p| explain(matcher, p, config, seed))
}

/// The explanation a user following the greedy strategy would act on: the
/// only side predicted to reach `epsilon` if exactly one does, otherwise the
/// side with fewer steps, ties going to the larger predicted strength and
/// then to record `a`.
pub fn greedy_pick(explanation: &PairExplanation, epsilon: f64) -> &Explanation {
    let (a, b) = match explanation {
        PairExplanation::Joint(j) => return &j.joint,
        PairExplanation::Dual(d) => (&d.for_a, &d.for_b),
    };
    let ra = a.cfs_hat >= epsilon - CFS_TOLERANCE;
    let rb = b.cfs_hat >= epsilon - CFS_TOLERANCE;
    if ra != rb {
        return if ra { a } else { b };
    }
    if a.k_g < b.k_g || (a.k_g == b.k_g && a.cfs_hat >= b.cfs_hat) {
        a
    } else {
        b
    }
}

/// Whether any side of the explanation predicts a flip.
pub fn is_recalled(explanation: &PairExplanation, epsilon: f64) -> bool {
    explanation
        .explanations()
        .iter()
        .any(|e| e.cfs_hat >= epsilon - CFS_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualMetrics {
    pub pairs: usize,
    pub recalled: usize,
    pub successful: usize,
    /// `None` when there are no pairs.
    pub cr: Option<f64>,
    /// `None` when no pair is recalled.
    pub cp: Option<f64>,
    pub cf1: Option<f64>,
}

/// `2 CR CP / (CR + CP)`, 0 when either is 0.
pub fn cf1(cr: f64, cp: f64) -> f64 {
    if cr == 0.0 || cp == 0.0 {
        0.0
    } else {
        2.0 * cr * cp / (cr + cp)
    }
}

impl CounterfactualMetrics {
    pub fn from_counts(pairs: usize, recalled: usize, successful: usize) -> Self {
        let cr = (pairs > 0).then(|| recalled as f64 / pairs as f64);
        let cp = (recalled > 0).then(|| successful as f64 / recalled as f64);
        let f1 = match (cr, cp) {
            (Some(r), Some(p)) => Some(cf1(r, p)),
            (Some(_), None) => Some(0.0),
            _ => None,
        };
        CounterfactualMetrics {
            pairs,
            recalled,
            successful,
            cr,
            cp,
            cf1: f1,
        }
    }
}

/// Re-executes the greedy strategy of the picked explanation with fresh
/// injection sampling and reports its realized strength.
pub fn replay_greedy<M: Matcher + ?Sized>(
    matcher: &M,
    pair: &RecordPair,
    explanation: &Explanation,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<f64, MatcherError> {
    let space = explanation.space(pair);
    let z = explanation.greedy_vector();
    let mut rng = stream(
        seed,
        &[
            KeyPart::from("replay"),
            KeyPart::from(pair.pair_id.as_str()),
            KeyPart::from(explanation.side.as_str()),
            KeyPart::from(explanation.granularity),
        ],
    );
    let (translated, plan) = space.translate(&z, matcher, &mut rng, config.sampling.batch_size)?;
    let realized = match plan.score {
        Some(s) => s,
        None => score_one(matcher, &translated)?,
    };
    Ok(actual_cfs(
        explanation.score,
        explanation.threshold,
        realized,
        config.literal_cfs,
    ))
}

/// Counterfactual recall, precision and F1 of explanations already computed
/// for `pairs`.
pub fn counterfactual_metrics<M: Matcher + ?Sized>(
    matcher: &M,
    pairs: &[RecordPair],
    explanations: &[PairExplanation],
    config: &ExplainerConfig,
    seed: u64,
    workers: usize,
) -> Result<CounterfactualMetrics, MatcherError> {
    assert_eq!(pairs.len(), explanations.len());
    let items: Vec<(&RecordPair, &PairExplanation)> = pairs.iter().zip(explanations).collect();
    let outcomes: Vec<Option<bool>> = parallel_map(&items, workers, |(pair, e)| {
        if !is_recalled(e, config.epsilon) {
            return Ok::<_, MatcherError>(None);
        }
        let picked = greedy_pick(e, config.epsilon);
        Ok(Some(replay_greedy(matcher, pair, picked, config, seed)? > 0.0))
    })?;
    let recalled = outcomes.iter().filter(|o| o.is_some()).count();
    let successful = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(CounterfactualMetrics::from_counts(pairs.len(), recalled, successful))
}

/// Explains `pairs` and computes their counterfactual metrics.
pub fn evaluate_counterfactual<M: Matcher + ?Sized>(
    matcher: &M,
    pairs: &[RecordPair],
    config: &ExplainerConfig,
    seed: u64,
    workers: usize,
) -> Result<(CounterfactualMetrics, Vec<PairExplanation>), Error> {
    let explanations = explain_all(matcher, pairs, config, seed, workers)?;
    let metrics = counterfactual_metrics(matcher, pairs, &explanations, config, seed, workers)?;
    Ok((metrics, explanations))
}

/// SHA-256 over the table and split files of a benchmark directory.
pub fn dataset_hash(dir: impl AsRef<Path>) -> std::io::Result<String> {
    let dir = dir.as_ref();
    let mut h = Sha256::new();
    for name in ["tableA.csv", "tableB.csv", "train.csv", "valid.csv", "test.csv"] {
        let bytes = std::fs::read(dir.join(name))?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
