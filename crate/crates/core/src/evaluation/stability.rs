use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{explain_all, parallel_map};
use crate::data::{Location, RecordPair, Side};
use crate::error::ExplainError;
use crate::explainer::{ExplainerConfig, Explanation, PairExplanation};
use crate::matcher::Matcher;

type TokenKey = (Side, Location, String, usize);

/// Spreads every feature's `(w, p)` evenly over its tokens.
fn per_token(e: &Explanation) -> BTreeMap<TokenKey, (f64, f64)> {
    let mut out = BTreeMap::new();
    for entry in &e.entries {
        let f = &entry.feature;
        let n = f.span.length.max(1) as f64;
        for j in 0..f.span.length.max(1) {
            let key = (f.side, f.location, f.attribute.clone(), f.span.start + j);
            let slot = out.entry(key).or_insert((0.0, 0.0));
            slot.0 += entry.w / n;
            slot.1 += entry.p / n;
        }
    }
    out
}

fn meet(r: f64, q: f64) -> f64 {
    if r * q > 0.0 {
        r.abs().min(q.abs())
    } else {
        0.0
    }
}

/// Weighted Jaccard similarity of two explanations of the same pair, after
/// splitting multi-token features into single tokens. Values of the same
/// token count as overlapping only when their signs agree. Two explanations
/// without any weight are identical.
pub fn explanation_similarity(e1: &Explanation, e2: &Explanation) -> f64 {
    let t1 = per_token(e1);
    let t2 = per_token(e2);
    let mut inter = 0.0;
    let mut union = 0.0;
    for (k, &(w1, p1)) in &t1 {
        match t2.get(k) {
            Some(&(w2, p2)) => {
                inter += meet(w1, w2) + meet(p1, p2);
                union += w1.abs().max(w2.abs()) + p1.abs().max(p2.abs());
            }
            None => union += w1.abs() + p1.abs(),
        }
    }
    for (k, &(w2, p2)) in &t2 {
        if !t1.contains_key(k) {
            union += w2.abs() + p2.abs();
        }
    }
    if union == 0.0 {
        1.0
    } else {
        inter / union
    }
}

fn pair_similarity(x: &PairExplanation, y: &PairExplanation) -> f64 {
    let xs = x.explanations();
    let ys = y.explanations();
    assert_eq!(xs.len(), ys.len(), "explanations must have the same shape");
    xs.iter()
        .zip(&ys)
        .map(|(a, b)| explanation_similarity(a, b))
        .sum::<f64>()
        / xs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    pub pair_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seeds: (u64, u64),
    pub mean: Option<f64>,
    pub pairs: Vec<PairSimilarity>,
}

/// Mean similarity between explanations of each pair under two seeds. Dual
/// explanations are compared side by side and averaged.
pub fn stability<M: Matcher + ?Sized>(
    matcher: &M,
    pairs: &[RecordPair],
    config: &ExplainerConfig,
    seeds: (u64, u64),
    workers: usize,
) -> Result<StabilityReport, ExplainError> {
    let first = explain_all(matcher, pairs, config, seeds.0, workers)?;
    let second = explain_all(matcher, pairs, config, seeds.1, workers)?;
    let items: Vec<(&PairExplanation, &PairExplanation)> = first.iter().zip(&second).collect();
    let sims: Vec<f64> = parallel_map(&items, workers, |(x, y)| {
        Ok::<_, ExplainError>(pair_similarity(x, y))
    })?;
    let mean = (!sims.is_empty()).then(|| sims.iter().sum::<f64>() / sims.len() as f64);
    Ok(StabilityReport {
        seeds,
        mean,
        pairs: pairs
            .iter()
            .zip(sims)
            .map(|(p, similarity)| PairSimilarity {
                pair_id: p.pair_id.clone(),
                similarity,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainer::{Entry, FeatureRef};
    use crate::interpretable::{Scope, Span};
    use crate::surrogate::Mode;

    fn entry(start: usize, length: usize, w: f64, p: f64) -> Entry {
        Entry {
            feature: FeatureRef {
                index: start,
                side: Side::A,
                attribute: "title".into(),
                location: Location::AttributeValue,
                span: Span { start, length },
                text: String::new(),
            },
            w,
            p,
        }
    }

    fn expl(entries: Vec<Entry>) -> Explanation {
        Explanation {
            pair_id: "p".into(),
            side: Scope::A,
            granularity: 1,
            threshold: 0.5,
            score: 0.9,
            entries,
            cfs_hat: 0.0,
            cfs_actual: 0.0,
            k_g: 0,
            realized_score: 0.9,
            seed: 0,
            mode: Mode::Lemon,
            dim: 8,
            samples: 0,
            d_max: 5,
            name_features: false,
        }
    }

    #[test]
    fn hand_values() {
        let a = expl(vec![entry(0, 1, 0.4, 0.0)]);
        let b = expl(vec![entry(0, 1, 0.2, 0.0)]);
        assert!((explanation_similarity(&a, &b) - 0.5).abs() < 1e-12);
        assert_eq!(explanation_similarity(&a, &a), 1.0);
        let c = expl(vec![entry(3, 1, 0.4, 0.1)]);
        assert_eq!(explanation_similarity(&a, &c), 0.0);
        assert_eq!(explanation_similarity(&expl(vec![]), &expl(vec![])), 1.0);
    }

    #[test]
    fn opposite_signs_do_not_overlap() {
        let a = expl(vec![entry(0, 1, 0.3, 0.0)]);
        let b = expl(vec![entry(0, 1, -0.1, 0.0)]);
        assert_eq!(explanation_similarity(&a, &b), 0.0);
    }

    #[test]
    fn granularity_normalized() {
        // one 2-token feature vs the same mass on two single tokens
        let a = expl(vec![entry(0, 2, 0.4, 0.2)]);
        let b = expl(vec![entry(0, 1, 0.2, 0.1), entry(1, 1, 0.2, 0.1)]);
        assert!((explanation_similarity(&a, &b) - 1.0).abs() < 1e-12);
        // union counts magnitudes of unshared tokens
        let c = expl(vec![entry(0, 1, 0.2, 0.1), entry(5, 1, -0.3, 0.0)]);
        let s = explanation_similarity(&b, &c);
        assert!((s - 0.3 / (0.3 + 0.3 + 0.3)).abs() < 1e-12);
    }
}
