//! LIME adapted to entity matching: one joint explanation over the tokens of
//! both records, where a token is either kept or removed.

use serde::{Deserialize, Serialize};

use crate::data::RecordPair;
use crate::error::ExplainError;
use crate::explainer::{explain_at, ExplainerConfig, JointExplanation};
use crate::interpretable::Scope;
use crate::matcher::{score_one, Matcher};
use crate::surrogate::SamplingParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    /// Features in the explanation; twice the per-record default since one
    /// explanation covers both records.
    pub k: usize,
    pub epsilon: f64,
    pub sampling: SamplingParams,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            k: 10,
            epsilon: 0.1,
            sampling: SamplingParams::default(),
        }
    }
}

impl LimeConfig {
    fn as_explainer(&self) -> ExplainerConfig {
        ExplainerConfig {
            k: self.k,
            epsilon: self.epsilon,
            sampling: self.sampling,
            disable_dual: true,
            disable_potential: true,
            fixed_granularity: Some(1),
            ..Default::default()
        }
    }
}

pub fn explain_lime<M: Matcher + ?Sized>(
    matcher: &M,
    pair: &RecordPair,
    config: &LimeConfig,
    seed: u64,
) -> Result<JointExplanation, ExplainError> {
    let wrap = |source| ExplainError {
        pair_id: pair.pair_id.clone(),
        granularity: 1,
        source,
    };
    let score = score_one(matcher, pair).map_err(wrap)?;
    let joint = explain_at(
        matcher,
        pair,
        Scope::Both,
        1,
        config.k,
        score,
        &config.as_explainer(),
        seed,
    )
    .map_err(wrap)?;
    Ok(JointExplanation {
        pair_id: pair.pair_id.clone(),
        joint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;
    use crate::explainer::{explain, PairExplanation};
    use crate::matcher::{similarity_features, FnMatcher};
    use crate::surrogate::Mode;

    #[test]
    fn equals_fully_ablated_explainer() {
        let a = Record::from_pairs([("name", "art's deli"), ("city", "studio city")]);
        let b = Record::from_pairs([("name", "art's delicatessen"), ("city", "studio city")]);
        let pair = RecordPair::new("x", a, b).unwrap();
        let m = FnMatcher::new(|p: &RecordPair| similarity_features(p)[0]);
        let lime = explain_lime(&m, &pair, &LimeConfig::default(), 3).unwrap();
        let ablated = explain(
            &m,
            &pair,
            &ExplainerConfig {
                disable_dual: true,
                disable_potential: true,
                fixed_granularity: Some(1),
                ..Default::default()
            },
            3,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&PairExplanation::Joint(lime.clone())).unwrap(),
            serde_json::to_string(&ablated).unwrap()
        );
        assert_eq!(lime.joint.mode, Mode::Lime);
        assert!(lime.joint.entries.iter().all(|e| e.p == 0.0));
    }
}
