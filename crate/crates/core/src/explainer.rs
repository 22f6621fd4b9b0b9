//! Dual explanations with attribution potential and counterfactual
//! granularity.
//!
//! Each record of a pair gets its own explanation over its own tokens. For a
//! granularity `n = 1, 2, 4, ...` the explainer fits a surrogate, predicts how
//! many steps of the greedy counterfactual strategy would flip the decision,
//! checks that prediction against the matcher, and stops at the first
//! granularity where both predicted and actual strength reach `epsilon`.

use serde::{Deserialize, Serialize};

use crate::data::{Location, RecordPair, Side};
use crate::error::{ExplainError, MatcherError};
use crate::interpretable::{
    build_space, max_tokens, InterpretableSpace, PerturbationVector, Scope, Span, SpaceOptions,
    State,
};
use crate::matcher::{score_one, Matcher};
use crate::seed::{stream, KeyPart};
use crate::surrogate::{
    attributions, fit_surrogate, sample_neighborhood, FitOptions, Mode, SamplingParams,
};

/// Slack in `>= epsilon` comparisons so that sums such as
/// `0.5 - (0.9 - 0.3 - 0.2)` count as reaching `0.1`.
pub const CFS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    pub k: usize,
    pub epsilon: f64,
    pub sampling: SamplingParams,
    /// One joint explanation over both records, with `2 K` features.
    pub disable_dual: bool,
    /// Sample and fit without the `M` state; all potentials are 0.
    pub disable_potential: bool,
    /// Skip the granularity search and use this granularity.
    pub fixed_granularity: Option<usize>,
    pub name_features: bool,
    pub strict_no_intercept: bool,
    /// Evaluate actual strength as `p - (f(x) - f(z))` / `f(x) + f(z) - p`
    /// instead of measuring the threshold crossing of `f(z)`.
    pub literal_cfs: bool,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            k: 5,
            epsilon: 0.1,
            sampling: SamplingParams::default(),
            disable_dual: false,
            disable_potential: false,
            fixed_granularity: None,
            name_features: false,
            strict_no_intercept: false,
            literal_cfs: false,
        }
    }
}

impl ExplainerConfig {
    /// The configuration of plain dual LIME: no potential, granularity 1.
    pub fn lime() -> Self {
        ExplainerConfig {
            disable_potential: true,
            fixed_granularity: Some(1),
            ..Default::default()
        }
    }

    pub fn mode(&self) -> Mode {
        if self.disable_potential {
            Mode::Lime
        } else {
            Mode::Lemon
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k < 1 {
            return Err("k must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return Err("epsilon must be positive".into());
        }
        if self.fixed_granularity == Some(0) {
            return Err("granularity must be at least 1".into());
        }
        if self.sampling.s_min < 1 || self.sampling.s_min > self.sampling.s_max {
            return Err("need 1 <= s_min <= s_max".into());
        }
        if self.sampling.batch_size < 1 {
            return Err("batch size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRef {
    pub index: usize,
    pub side: Side,
    pub attribute: String,
    pub location: Location,
    pub span: Span,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub feature: FeatureRef,
    pub w: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub pair_id: String,
    pub side: Scope,
    pub granularity: usize,
    pub threshold: f64,
    pub score: f64,
    pub entries: Vec<Entry>,
    pub cfs_hat: f64,
    pub cfs_actual: f64,
    pub k_g: usize,
    /// Matcher score of the pair after the greedy counterfactual perturbation.
    pub realized_score: f64,
    pub seed: u64,
    pub mode: Mode,
    pub dim: usize,
    pub samples: usize,
    pub d_max: usize,
    pub name_features: bool,
}

impl Explanation {
    /// Whether the matcher predicts a match for the explained pair.
    pub fn is_match(&self) -> bool {
        self.score > self.threshold
    }

    /// Rebuilds the interpretable space the explanation refers to.
    pub fn space(&self, pair: &RecordPair) -> InterpretableSpace {
        build_space(
            pair,
            self.side,
            SpaceOptions {
                granularity: self.granularity,
                name_features: self.name_features,
            },
        )
    }

    /// Entries that can raise the score, as `(entry, max(-w, p))`, largest first.
    pub fn inc(&self) -> Vec<(usize, f64)> {
        sorted_positive(self.entries.iter().map(|e| (-e.w).max(e.p)))
    }

    /// Entries whose removal lowers the score, as `(entry, w)`, largest first.
    pub fn dec(&self) -> Vec<(usize, f64)> {
        sorted_positive(self.entries.iter().map(|e| e.w))
    }

    /// Predicted strength of the first `k` greedy steps.
    pub fn predicted_cfs(&self, k: usize) -> f64 {
        predicted_cfs(self.score, self.threshold, &self.steps(), k)
    }

    fn steps(&self) -> Vec<f64> {
        let list = if self.is_match() { self.dec() } else { self.inc() };
        list.into_iter().map(|(_, v)| v).collect()
    }

    /// Smallest step count predicted to reach `epsilon`.
    pub fn greedy_k(&self, epsilon: f64) -> usize {
        greedy_k(self.score, self.threshold, &self.steps(), epsilon)
    }

    /// The perturbation of the greedy counterfactual strategy with `k_g` steps.
    pub fn greedy_vector(&self) -> PerturbationVector {
        let mut z = PerturbationVector::all_present(self.dim);
        if self.is_match() {
            for (i, _) in self.dec().into_iter().take(self.k_g) {
                z.states[self.entries[i].feature.index] = State::A;
            }
        } else {
            for (i, _) in self.inc().into_iter().take(self.k_g) {
                let e = &self.entries[i];
                z.states[e.feature.index] = if -e.w > e.p { State::A } else { State::M };
            }
        }
        z
    }
}

fn sorted_positive(values: impl Iterator<Item = f64>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = values.enumerate().filter(|(_, x)| *x > 0.0).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1));
    v
}

/// Predicted strength after `k` steps with step magnitudes `steps` (DEC on
/// the match side, INC otherwise).
pub fn predicted_cfs(score: f64, threshold: f64, steps: &[f64], k: usize) -> f64 {
    let moved: f64 = steps.iter().take(k).sum();
    if score > threshold {
        threshold - (score - moved)
    } else {
        score + moved - threshold
    }
}

/// `min k` with predicted strength at least `epsilon`, else `steps.len()`.
pub fn greedy_k(score: f64, threshold: f64, steps: &[f64], epsilon: f64) -> usize {
    (0..=steps.len())
        .find(|&k| predicted_cfs(score, threshold, steps, k) >= epsilon - CFS_TOLERANCE)
        .unwrap_or(steps.len())
}

/// Strength realized by the greedy perturbation, whose translated pair
/// scored `realized`. Positive exactly when the decision flips.
pub fn actual_cfs(score: f64, threshold: f64, realized: f64, literal: bool) -> f64 {
    match (score > threshold, literal) {
        (true, false) => threshold - realized,
        (false, false) => realized - threshold,
        (true, true) => threshold - (score - realized),
        (false, true) => score + realized - threshold,
    }
}

fn reaches(x: f64, epsilon: f64) -> bool {
    x >= epsilon - CFS_TOLERANCE
}

/// Harmonic-mean ranking key; pairs with a non-positive value rank last.
pub fn harmonic_key(cfs_hat: f64, cfs: f64) -> f64 {
    if cfs_hat > 0.0 && cfs > 0.0 {
        cfs_hat * cfs / (cfs_hat + cfs)
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualExplanation {
    pub pair_id: String,
    pub for_a: Explanation,
    pub for_b: Explanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointExplanation {
    pub pair_id: String,
    pub joint: Explanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairExplanation {
    Dual(DualExplanation),
    Joint(JointExplanation),
}

impl PairExplanation {
    pub fn pair_id(&self) -> &str {
        match self {
            PairExplanation::Dual(d) => &d.pair_id,
            PairExplanation::Joint(j) => &j.pair_id,
        }
    }

    pub fn explanations(&self) -> Vec<&Explanation> {
        match self {
            PairExplanation::Dual(d) => vec![&d.for_a, &d.for_b],
            PairExplanation::Joint(j) => vec![&j.joint],
        }
    }
}

/// Stream key for the randomness of one explanation step.
pub(crate) fn step_stream(
    seed: u64,
    label: &str,
    pair_id: &str,
    scope: Scope,
    granularity: usize,
) -> crate::seed::StreamRng {
    stream(
        seed,
        &[
            KeyPart::from(label),
            KeyPart::from(pair_id),
            KeyPart::from(scope.as_str()),
            KeyPart::from(granularity),
        ],
    )
}

/// Explains the pair at one fixed granularity.
#[allow(clippy::too_many_arguments)]
pub(crate) fn explain_at<M: Matcher + ?Sized>(
    matcher: &M,
    pair: &RecordPair,
    scope: Scope,
    granularity: usize,
    k: usize,
    score: f64,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<Explanation, MatcherError> {
    let mode = config.mode();
    let threshold = matcher.threshold();
    let space = build_space(
        pair,
        scope,
        SpaceOptions {
            granularity,
            name_features: config.name_features,
        },
    );
    let mut rng = step_stream(seed, "neighborhood", &pair.pair_id, scope, granularity);
    let sample = sample_neighborhood(&space, mode, matcher, &mut rng, &config.sampling)?;
    let fit = fit_surrogate(
        &sample,
        score,
        &FitOptions {
            strict_no_intercept: config.strict_no_intercept,
            ..FitOptions::new(k)
        },
    );
    let entries = attributions(&fit)
        .into_iter()
        .map(|a| {
            let f = &space.features()[a.feature];
            Entry {
                feature: FeatureRef {
                    index: a.feature,
                    side: f.side,
                    attribute: pair.side(f.side).attributes()[f.attribute_index].name.clone(),
                    location: f.location,
                    span: f.span,
                    text: space.feature_text(a.feature),
                },
                w: a.w,
                p: a.p,
            }
        })
        .collect();
    let mut e = Explanation {
        pair_id: pair.pair_id.clone(),
        side: scope,
        granularity,
        threshold,
        score,
        entries,
        cfs_hat: 0.0,
        cfs_actual: 0.0,
        k_g: 0,
        realized_score: score,
        seed,
        mode,
        dim: space.dim(),
        samples: sample.entries.len(),
        d_max: sample.d_max,
        name_features: config.name_features,
    };
    e.k_g = e.greedy_k(config.epsilon);
    e.cfs_hat = e.predicted_cfs(e.k_g);
    let z = e.greedy_vector();
    let mut rng = step_stream(seed, "counterfactual", &pair.pair_id, scope, granularity);
    let (translated, plan) = space.translate(&z, matcher, &mut rng, config.sampling.batch_size)?;
    e.realized_score = match plan.score {
        Some(s) => s,
        None => score_one(matcher, &translated)?,
    };
    e.cfs_actual = actual_cfs(score, threshold, e.realized_score, config.literal_cfs);
    Ok(e)
}

/// Explains the records in `scope`, searching granularities `1, 2, 4, ...`
/// below `2N` unless the configuration fixes one.
pub fn explain_scope<M: Matcher + ?Sized>(
    matcher: &M,
    pair: &RecordPair,
    scope: Scope,
    score: f64,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<Explanation, ExplainError> {
    let k = if scope == Scope::Both && config.disable_dual {
        2 * config.k
    } else {
        config.k
    };
    let wrap = |granularity: usize| {
        move |source| ExplainError {
            pair_id: pair.pair_id.clone(),
            granularity,
            source,
        }
    };
    if let Some(n) = config.fixed_granularity {
        return explain_at(matcher, pair, scope, n, k, score, config, seed).map_err(wrap(n));
    }
    let n_max = scope
        .sides()
        .iter()
        .map(|s| max_tokens(pair.side(*s)))
        .max()
        .unwrap_or(1);
    let mut best: Option<(f64, Explanation)> = None;
    let mut n = 1;
    while n < 2 * n_max {
        let e = explain_at(matcher, pair, scope, n, k, score, config, seed).map_err(wrap(n))?;
        if reaches(e.cfs_hat, config.epsilon) && reaches(e.cfs_actual, config.epsilon) {
            return Ok(e);
        }
        let key = harmonic_key(e.cfs_hat, e.cfs_actual);
        if best.as_ref().map_or(true, |(b, _)| key > *b) {
            best = Some((key, e));
        }
        n *= 2;
    }
    Ok(best.expect("at least one granularity is tried").1)
}

/// Explains a pair: one explanation per record, or a single joint one when
/// dual explanations are disabled.
pub fn explain<M: Matcher + ?Sized>(
    matcher: &M,
    pair: &RecordPair,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<PairExplanation, ExplainError> {
    let score = score_one(matcher, pair).map_err(|source| ExplainError {
        pair_id: pair.pair_id.clone(),
        granularity: 0,
        source,
    })?;
    if config.disable_dual {
        let joint = explain_scope(matcher, pair, Scope::Both, score, config, seed)?;
        return Ok(PairExplanation::Joint(JointExplanation {
            pair_id: pair.pair_id.clone(),
            joint,
        }));
    }
    let for_a = explain_scope(matcher, pair, Scope::A, score, config, seed)?;
    let for_b = explain_scope(matcher, pair, Scope::B, score, config, seed)?;
    Ok(PairExplanation::Dual(DualExplanation {
        pair_id: pair.pair_id.clone(),
        for_a,
        for_b,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;
    use crate::matcher::FnMatcher;

    #[test]
    fn predicted_strength_arithmetic() {
        let dec = [0.3, 0.2];
        assert!((predicted_cfs(0.9, 0.5, &dec, 1) - -0.1).abs() < 1e-12);
        assert!((predicted_cfs(0.9, 0.5, &dec, 2) - 0.1).abs() < 1e-12);
        assert!((predicted_cfs(0.2, 0.5, &[0.25, 0.2], 2) - 0.15).abs() < 1e-12);
        assert!((predicted_cfs(0.9, 0.5, &dec, 0) - -0.4).abs() < 1e-12);
        assert!((predicted_cfs(0.2, 0.5, &[], 0) - -0.3).abs() < 1e-12);
    }

    #[test]
    fn greedy_k_cases() {
        assert_eq!(greedy_k(0.9, 0.5, &[0.3, 0.2], 0.1), 2);
        assert_eq!(greedy_k(0.2, 0.5, &[], 0.1), 0);
        assert_eq!(greedy_k(0.9, 0.5, &[0.3, 0.3, 0.05, 0.05], 0.5), 4);
    }

    #[test]
    fn actual_strength_forms() {
        assert!((actual_cfs(0.9, 0.5, 0.3, false) - 0.2).abs() < 1e-12);
        assert_eq!(actual_cfs(0.9, 0.5, 0.5, false), 0.0);
        assert!((actual_cfs(0.2, 0.5, 0.65, false) - 0.15).abs() < 1e-12);
        assert!((actual_cfs(0.9, 0.5, 0.3, true) - -0.1).abs() < 1e-12);
    }

    #[test]
    fn harmonic_ranking() {
        assert!((harmonic_key(0.2, 0.2) - 0.1).abs() < 1e-12);
        assert_eq!(harmonic_key(0.2, 0.0), f64::NEG_INFINITY);
        assert_eq!(harmonic_key(-0.1, 0.3), f64::NEG_INFINITY);
    }

    fn entry(index: usize, w: f64, p: f64) -> Entry {
        Entry {
            feature: FeatureRef {
                index,
                side: Side::A,
                attribute: "t".into(),
                location: Location::AttributeValue,
                span: Span { start: index, length: 1 },
                text: String::new(),
            },
            w,
            p,
        }
    }

    fn explanation(score: f64, entries: Vec<Entry>) -> Explanation {
        let mut e = Explanation {
            pair_id: "p".into(),
            side: Scope::A,
            granularity: 1,
            threshold: 0.5,
            score,
            entries,
            cfs_hat: 0.0,
            cfs_actual: 0.0,
            k_g: 0,
            realized_score: score,
            seed: 0,
            mode: Mode::Lemon,
            dim: 10,
            samples: 0,
            d_max: 5,
            name_features: false,
        };
        e.k_g = e.greedy_k(0.1);
        e.cfs_hat = e.predicted_cfs(e.k_g);
        e
    }

    #[test]
    fn greedy_vectors() {
        let e = explanation(0.9, vec![entry(7, 0.2, 0.0), entry(3, 0.3, 0.0), entry(1, -0.1, 0.0)]);
        assert_eq!(e.k_g, 2);
        let z = e.greedy_vector();
        assert_eq!(z.states[3], State::A);
        assert_eq!(z.states[7], State::A);
        assert_eq!(z.distance(), 2);

        let e = explanation(0.2, vec![entry(0, -0.2, 0.1), entry(1, 0.05, 0.3)]);
        let z = e.greedy_vector();
        assert_eq!(e.k_g, 2);
        assert_eq!(z.states[0], State::A);
        assert_eq!(z.states[1], State::M);
        assert!((e.cfs_hat - 0.2).abs() < 1e-12);
    }

    #[test]
    fn decisive_token_found_at_first_granularity() {
        let a = Record::from_pairs([("title", "sony bravia kdl40 television black")]);
        let b = Record::from_pairs([("title", "sony kdl40 tv")]);
        let pair = RecordPair::new("toy", a, b).unwrap();
        let m = FnMatcher::new(|p: &RecordPair| {
            let t = p.a.get("title").unwrap().render();
            if t.split(' ').any(|w| w == "kdl40") {
                0.9
            } else {
                0.1
            }
        });
        let e = explain_scope(&m, &pair, Scope::A, 0.9, &ExplainerConfig::default(), 5).unwrap();
        assert_eq!(e.granularity, 1);
        assert_eq!(e.k_g, 1);
        assert_eq!(e.entries[0].feature.text, "kdl40");
        assert!((e.entries[0].w - 0.8).abs() < 0.02);
        assert!(e.cfs_actual >= 0.1 && e.cfs_hat >= 0.1);
        assert_eq!(e.realized_score, 0.1);
    }

    #[test]
    fn explanations_are_deterministic() {
        let a = Record::from_pairs([("title", "belkin shield micra tint"), ("price", "47.88")]);
        let b = Record::from_pairs([("title", "belkin micra purple"), ("price", "12.49")]);
        let pair = RecordPair::new("d", a, b).unwrap();
        let m = FnMatcher::new(|p: &RecordPair| {
            let f = crate::matcher::similarity_features(p);
            f.iter().sum::<f64>() / f.len() as f64
        });
        let cfg = ExplainerConfig::default();
        let x = explain(&m, &pair, &cfg, 9).unwrap();
        let y = explain(&m, &pair, &cfg, 9).unwrap();
        assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
        assert_eq!(x.explanations().len(), 2);
        let joint = explain(
            &m,
            &pair,
            &ExplainerConfig {
                disable_dual: true,
                ..cfg
            },
            9,
        )
        .unwrap();
        assert_eq!(joint.explanations()[0].side, Scope::Both);
        assert!(joint.explanations()[0].entries.len() <= 10);
    }
}
