//! The black-box matcher contract.
//!
//! Explainers only ever call [`Matcher::predict_batch`]: no gradients, no
//! access to matcher features. Anything that maps record pairs to a score in
//! `[0, 1]` can be explained, whether it runs in-process ([`BaselineMatcher`],
//! [`FnMatcher`]) or behind the `em-matcher/1` protocol ([`external`]).

mod baseline;
pub mod external;
pub mod protocol;
mod similarity;

use serde::{Deserialize, Serialize};

use crate::data::RecordPair;
use crate::error::MatcherError;

pub use baseline::{train_baseline_matcher, BaselineMatcher, BaselineMatcherModel, TrainConfig, TrainingMeta};
pub use similarity::{levenshtein_similarity, similarity_features, token_jaccard, FeatureSchema};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_BATCH_SIZE: usize = 64;

/// A match score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MatchScore(f64);

impl MatchScore {
    pub fn new(value: f64) -> Result<Self, MatcherError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(MatchScore(value))
        } else {
            Err(MatcherError::InvalidScore(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for MatchScore {
    type Error = MatcherError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        MatchScore::new(v)
    }
}

impl From<MatchScore> for f64 {
    fn from(s: MatchScore) -> f64 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub threshold: f64,
    pub batch_size: usize,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            threshold: DEFAULT_THRESHOLD,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), MatcherError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(MatcherError::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.batch_size == 0 {
            return Err(MatcherError::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Any procedure that scores record pairs.
///
/// Implementations must be deterministic for a fixed matcher and safe to call
/// from several threads; a pair is classified a match iff its score exceeds
/// [`Matcher::threshold`].
pub trait Matcher: Send + Sync {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError>;

    fn threshold(&self) -> f64 {
        DEFAULT_THRESHOLD
    }

    /// True when the threshold was not supplied by the matcher itself and
    /// [`DEFAULT_THRESHOLD`] is assumed.
    fn threshold_defaulted(&self) -> bool {
        false
    }
}

impl<M: Matcher + ?Sized> Matcher for &M {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        (**self).predict_batch(pairs)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
    fn threshold_defaulted(&self) -> bool {
        (**self).threshold_defaulted()
    }
}

impl<M: Matcher + ?Sized> Matcher for Box<M> {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        (**self).predict_batch(pairs)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
    fn threshold_defaulted(&self) -> bool {
        (**self).threshold_defaulted()
    }
}

impl<M: Matcher + ?Sized> Matcher for std::sync::Arc<M> {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        (**self).predict_batch(pairs)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
    fn threshold_defaulted(&self) -> bool {
        (**self).threshold_defaulted()
    }
}

/// Wraps a plain scoring function as a matcher. Scores are clamped to `[0, 1]`.
pub struct FnMatcher<F> {
    f: F,
    threshold: f64,
}

impl<F> FnMatcher<F>
where
    F: Fn(&RecordPair) -> f64 + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnMatcher {
            f,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

impl<F> Matcher for FnMatcher<F>
where
    F: Fn(&RecordPair) -> f64 + Send + Sync,
{
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        pairs
            .iter()
            .map(|p| MatchScore::new((self.f)(p).clamp(0.0, 1.0)))
            .collect()
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Scores `pairs` in chunks of at most `batch_size`, preserving order.
pub fn score_pairs<M: Matcher + ?Sized>(
    matcher: &M,
    pairs: &[RecordPair],
    batch_size: usize,
) -> Result<Vec<f64>, MatcherError> {
    let mut out = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(batch_size.max(1)) {
        let scores = matcher.predict_batch(chunk)?;
        if scores.len() != chunk.len() {
            return Err(MatcherError::Shape {
                expected: chunk.len(),
                got: scores.len(),
            });
        }
        out.extend(scores.into_iter().map(MatchScore::get));
    }
    Ok(out)
}

pub fn score_one<M: Matcher + ?Sized>(matcher: &M, pair: &RecordPair) -> Result<f64, MatcherError> {
    Ok(score_pairs(matcher, std::slice::from_ref(pair), 1)?[0])
}
