//! Interpretable representation of a record pair and its translation back
//! into record pairs.
//!
//! A space featurizes the tokens of one record (or of both, for joint
//! explanations) at a granularity of `n` consecutive tokens. A perturbation
//! assigns every feature a [`State`]: kept (`P`), removed (`A`), or copied
//! into the other record where it raises the match score the most (`M`).
//! Finding that best injection point is approximated by scoring `L` sampled
//! combinations of injection targets and keeping the best one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{tokenize, AttributeValue, Attribute, Location, Record, RecordPair, Side};
use crate::error::MatcherError;
use crate::matcher::{score_pairs, Matcher};

/// At most this many injection targets are counted per attribute.
pub const TARGETS_PER_ATTRIBUTE: usize = 3;
/// At most this many injection targets are counted per feature.
pub const TARGETS_TOTAL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    P,
    A,
    M,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerturbationVector {
    pub states: Vec<State>,
}

impl PerturbationVector {
    pub fn all_present(d: usize) -> Self {
        PerturbationVector {
            states: vec![State::P; d],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Hamming distance to the all-`P` vector.
    pub fn distance(&self) -> usize {
        self.states.iter().filter(|s| **s != State::P).count()
    }

    pub fn has_matched(&self) -> bool {
        self.states.contains(&State::M)
    }
}

/// Which records a space featurizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    A,
    B,
    Both,
}

impl Scope {
    pub fn sides(self) -> &'static [Side] {
        match self {
            Scope::A => &[Side::A],
            Scope::B => &[Side::B],
            Scope::Both => &[Side::A, Side::B],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::A => "a",
            Scope::B => "b",
            Scope::Both => "both",
        }
    }
}

impl From<Side> for Scope {
    fn from(s: Side) -> Self {
        match s {
            Side::A => Scope::A,
            Side::B => Scope::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InterpretableFeature {
    pub side: Side,
    pub location: Location,
    pub attribute_index: usize,
    pub span: Span,
    pub granularity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValueKind {
    Text,
    Number,
    Null,
}

#[derive(Debug, Clone)]
struct RecordTokens {
    values: Vec<Vec<String>>,
    names: Vec<Vec<String>>,
    kinds: Vec<ValueKind>,
}

impl RecordTokens {
    fn new(r: &Record) -> Self {
        let attrs = r.attributes();
        RecordTokens {
            values: attrs.iter().map(|a| tokenize(&a.value)).collect(),
            names: attrs
                .iter()
                .map(|a| a.name.split_whitespace().map(str::to_string).collect())
                .collect(),
            kinds: attrs
                .iter()
                .map(|a| match a.value {
                    AttributeValue::Text(_) => ValueKind::Text,
                    AttributeValue::Number(_) => ValueKind::Number,
                    AttributeValue::Null => ValueKind::Null,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceOptions {
    pub granularity: usize,
    /// Also featurize attribute-name tokens.
    pub name_features: bool,
}

impl SpaceOptions {
    pub fn new(granularity: usize) -> Self {
        SpaceOptions {
            granularity,
            name_features: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InterpretableSpace {
    pair: RecordPair,
    scope: Scope,
    granularity: usize,
    features: Vec<InterpretableFeature>,
    degenerate: bool,
    schema_matched: bool,
    tokens: [RecordTokens; 2],
}

fn side_index(s: Side) -> usize {
    match s {
        Side::A => 0,
        Side::B => 1,
    }
}

fn group(
    out: &mut Vec<InterpretableFeature>,
    side: Side,
    location: Location,
    attribute_index: usize,
    count: usize,
    n: usize,
) {
    let mut start = 0;
    while start < count {
        let length = n.min(count - start);
        out.push(InterpretableFeature {
            side,
            location,
            attribute_index,
            span: Span { start, length },
            granularity: n,
        });
        start += length;
    }
}

/// Builds the interpretable space of `pair` for the records in `scope`.
///
/// Tokens of every attribute are grouped into consecutive runs of
/// `granularity` tokens; the last run of an attribute may be shorter. A
/// scope without any token gets a single no-op feature.
pub fn build_space(pair: &RecordPair, scope: Scope, options: SpaceOptions) -> InterpretableSpace {
    assert!(options.granularity >= 1, "granularity must be at least 1");
    let n = options.granularity;
    let tokens = [RecordTokens::new(&pair.a), RecordTokens::new(&pair.b)];
    let mut features = Vec::new();
    for &side in scope.sides() {
        let t = &tokens[side_index(side)];
        for (ai, toks) in t.values.iter().enumerate() {
            group(&mut features, side, Location::AttributeValue, ai, toks.len(), n);
        }
        if options.name_features {
            for (ai, toks) in t.names.iter().enumerate() {
                group(&mut features, side, Location::AttributeName, ai, toks.len(), n);
            }
        }
    }
    let degenerate = features.is_empty();
    if degenerate {
        features.push(InterpretableFeature {
            side: scope.sides()[0],
            location: Location::AttributeValue,
            attribute_index: 0,
            span: Span {
                start: 0,
                length: 0,
            },
            granularity: n,
        });
    }
    let schema_matched = pair
        .a
        .attributes()
        .iter()
        .any(|x| pair.b.get(&x.name).is_some());
    InterpretableSpace {
        pair: pair.clone(),
        scope,
        granularity: n,
        features,
        degenerate,
        schema_matched,
        tokens,
    }
}

/// Largest token count of any non-empty text value, or 1 when there is none.
pub fn max_tokens(record: &Record) -> usize {
    record
        .attributes()
        .iter()
        .filter_map(|a| a.value.as_text())
        .map(|s| s.split_whitespace().count())
        .max()
        .filter(|&m| m > 0)
        .unwrap_or(1)
}

impl InterpretableSpace {
    pub fn pair(&self) -> &RecordPair {
        &self.pair
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn granularity(&self) -> usize {
        self.granularity
    }

    pub fn features(&self) -> &[InterpretableFeature] {
        &self.features
    }

    /// Number of interpretable features, `d_x`.
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn schema_matched(&self) -> bool {
        self.schema_matched
    }

    /// The tokens a feature covers.
    pub fn feature_tokens(&self, i: usize) -> &[String] {
        let f = &self.features[i];
        if self.degenerate {
            return &[];
        }
        let t = &self.tokens[side_index(f.side)];
        let toks = match f.location {
            Location::AttributeValue => &t.values[f.attribute_index],
            Location::AttributeName => &t.names[f.attribute_index],
        };
        &toks[f.span.start..f.span.start + f.span.length]
    }

    pub fn feature_text(&self, i: usize) -> String {
        self.feature_tokens(i).join(" ")
    }

    fn is_number_feature(&self, f: &InterpretableFeature) -> bool {
        f.location == Location::AttributeValue
            && self.tokens[side_index(f.side)].kinds[f.attribute_index] == ValueKind::Number
    }

    /// Legal injection targets of feature `i` per attribute of the other
    /// record, as `(attribute index, number of targets)`.
    fn target_attributes(&self, i: usize) -> Vec<(usize, usize)> {
        let f = &self.features[i];
        if self.degenerate {
            return Vec::new();
        }
        let other = &self.tokens[side_index(f.side.other())];
        match f.location {
            Location::AttributeName => (0..other.names.len()).map(|ai| (ai, 1)).collect(),
            Location::AttributeValue => {
                let numeric = self.is_number_feature(f);
                other
                    .kinds
                    .iter()
                    .enumerate()
                    .filter_map(|(ai, kind)| match kind {
                        ValueKind::Text | ValueKind::Null => Some((ai, other.values[ai].len() + 1)),
                        ValueKind::Number if numeric => Some((ai, 1)),
                        ValueKind::Number => None,
                    })
                    .collect()
            }
        }
    }

    /// Injection targets of feature `i`, capped per attribute and in total.
    pub fn count_injection_targets(&self, i: usize) -> usize {
        self.target_attributes(i)
            .iter()
            .map(|&(_, c)| c.min(TARGETS_PER_ATTRIBUTE))
            .sum::<usize>()
            .min(TARGETS_TOTAL)
    }

    /// Number of target combinations sampled for `z`: the largest target
    /// count among its `M` features, 0 without any.
    pub fn injection_samples(&self, z: &PerturbationVector) -> usize {
        z.states
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == State::M)
            .map(|(i, _)| self.count_injection_targets(i))
            .max()
            .unwrap_or(0)
    }

    /// Draws one injection target for feature `i`. The target attribute is
    /// uniform over legal attributes, except that with a matched schema the
    /// attribute of the same name is drawn with probability 1/2. The position
    /// within the attribute is uniform.
    pub fn sample_injection_target<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> InjectionTarget {
        let f = &self.features[i];
        let attrs = self.target_attributes(i);
        if attrs.is_empty() {
            return InjectionTarget::Unplaced;
        }
        let own_name = &self.pair.side(f.side).attributes()[f.attribute_index].name;
        let other = self.pair.side(f.side.other());
        let same = if self.schema_matched {
            attrs
                .iter()
                .position(|&(ai, _)| &other.attributes()[ai].name == own_name)
        } else {
            None
        };
        let pick = match same {
            Some(s) if attrs.len() > 1 => {
                if rng.gen_bool(0.5) {
                    s
                } else {
                    let k = rng.gen_range(0..attrs.len() - 1);
                    if k >= s {
                        k + 1
                    } else {
                        k
                    }
                }
            }
            _ => rng.gen_range(0..attrs.len()),
        };
        let (attribute_index, count) = attrs[pick];
        let kind = self.tokens[side_index(f.side.other())].kinds[attribute_index];
        match (f.location, kind) {
            (Location::AttributeName, _) => InjectionTarget::AppendName { attribute_index },
            (Location::AttributeValue, ValueKind::Number) => InjectionTarget::Overwrite { attribute_index },
            (Location::AttributeValue, _) => InjectionTarget::Insert {
                attribute_index,
                gap: rng.gen_range(0..count),
            },
        }
    }

    /// Samples the candidate translations of `z`: one pair when `z` has no
    /// `M` feature, otherwise `L` pairs, one per sampled target combination.
    pub fn candidates<R: Rng + ?Sized>(&self, z: &PerturbationVector, rng: &mut R) -> Candidates {
        assert_eq!(z.len(), self.dim(), "perturbation vector length must equal d_x");
        let l = self.injection_samples(z);
        let matched: Vec<usize> = z
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == State::M)
            .map(|(i, _)| i)
            .collect();
        if l == 0 {
            let injections: Vec<PlannedInjection> = matched
                .iter()
                .map(|&feature| PlannedInjection {
                    feature,
                    target: InjectionTarget::Unplaced,
                })
                .collect();
            let pair = self.materialize(z, &injections);
            return Candidates {
                samples: 0,
                pairs: vec![pair],
                combinations: vec![injections],
            };
        }
        let mut pairs = Vec::with_capacity(l);
        let mut combinations = Vec::with_capacity(l);
        for _ in 0..l {
            let combo: Vec<PlannedInjection> = matched
                .iter()
                .map(|&feature| PlannedInjection {
                    feature,
                    target: self.sample_injection_target(feature, rng),
                })
                .collect();
            pairs.push(self.materialize(z, &combo));
            combinations.push(combo);
        }
        Candidates {
            samples: l,
            pairs,
            combinations,
        }
    }

    /// Applies removals and the given injections to the pair.
    pub fn materialize(&self, z: &PerturbationVector, injections: &[PlannedInjection]) -> RecordPair {
        let mut edits = [
            RecordEdits::new(&self.tokens[0]),
            RecordEdits::new(&self.tokens[1]),
        ];
        if !self.degenerate {
            for (i, s) in z.states.iter().enumerate() {
                if *s != State::A {
                    continue;
                }
                let f = &self.features[i];
                let e = &mut edits[side_index(f.side)];
                let keep = match f.location {
                    Location::AttributeValue => &mut e.keep_values[f.attribute_index],
                    Location::AttributeName => &mut e.keep_names[f.attribute_index],
                };
                for k in keep.iter_mut().skip(f.span.start).take(f.span.length) {
                    *k = false;
                }
            }
            for (order, inj) in injections.iter().enumerate() {
                let f = &self.features[inj.feature];
                let e = &mut edits[side_index(f.side.other())];
                match inj.target {
                    InjectionTarget::Unplaced => {}
                    InjectionTarget::Insert { attribute_index, gap } => {
                        e.inserts[attribute_index].push((gap, order, inj.feature));
                    }
                    InjectionTarget::Overwrite { attribute_index } => {
                        let x = self.pair.side(f.side).attributes()[f.attribute_index]
                            .value
                            .as_number()
                            .expect("overwrite source is numeric");
                        e.overwrite[attribute_index] = Some(x);
                    }
                    InjectionTarget::AppendName { attribute_index } => {
                        e.name_appends[attribute_index].push(inj.feature);
                    }
                }
            }
        }
        let a = self.apply(Side::A, &edits[0]);
        let b = self.apply(Side::B, &edits[1]);
        RecordPair {
            pair_id: self.pair.pair_id.clone(),
            a,
            b,
        }
    }

    fn apply(&self, side: Side, e: &RecordEdits) -> Record {
        let original = self.pair.side(side);
        if e.is_noop() {
            return original.clone();
        }
        let toks = &self.tokens[side_index(side)];
        let mut attributes: Vec<Attribute> = Vec::with_capacity(original.len());
        for (ai, attr) in original.attributes().iter().enumerate() {
            let value_changed = e.keep_values[ai].iter().any(|k| !k)
                || !e.inserts[ai].is_empty()
                || e.overwrite[ai].is_some();
            let value = if !value_changed {
                attr.value.clone()
            } else if let Some(x) = e.overwrite[ai] {
                AttributeValue::Number(x)
            } else if toks.kinds[ai] == ValueKind::Number {
                // the single token of a number was removed
                AttributeValue::Null
            } else {
                let mut inserts = e.inserts[ai].clone();
                inserts.sort_by_key(|&(gap, order, _)| (gap, order));
                let mut out: Vec<&str> = Vec::new();
                let mut it = inserts.iter().peekable();
                let values = &toks.values[ai];
                for gap in 0..=values.len() {
                    while let Some(&&(g, _, feature)) = it.peek() {
                        if g != gap {
                            break;
                        }
                        out.extend(self.feature_tokens(feature).iter().map(String::as_str));
                        it.next();
                    }
                    if gap < values.len() && e.keep_values[ai][gap] {
                        out.push(&values[gap]);
                    }
                }
                AttributeValue::Text(out.join(" "))
            };
            let name_changed =
                e.keep_names[ai].iter().any(|k| !k) || !e.name_appends[ai].is_empty();
            let name = if !name_changed {
                attr.name.clone()
            } else {
                let mut parts: Vec<&str> = toks.names[ai]
                    .iter()
                    .zip(&e.keep_names[ai])
                    .filter(|(_, k)| **k)
                    .map(|(t, _)| t.as_str())
                    .collect();
                for &feature in &e.name_appends[ai] {
                    parts.extend(self.feature_tokens(feature).iter().map(String::as_str));
                }
                parts.join(" ")
            };
            attributes.push(Attribute { name, value });
        }
        dedupe_names(&mut attributes);
        Record::new(attributes).expect("names were made unique")
    }

    /// Translates `z` into a record pair. Without `M` features the result is
    /// exact and the matcher is not called; otherwise the sampled combination
    /// with the highest match score is returned.
    pub fn translate<M, R>(
        &self,
        z: &PerturbationVector,
        matcher: &M,
        rng: &mut R,
        batch_size: usize,
    ) -> Result<(RecordPair, InjectionPlan), MatcherError>
    where
        M: Matcher + ?Sized,
        R: Rng + ?Sized,
    {
        let cands = self.candidates(z, rng);
        if cands.samples == 0 {
            let Candidates {
                mut pairs,
                mut combinations,
                ..
            } = cands;
            return Ok((
                pairs.pop().unwrap(),
                InjectionPlan {
                    samples: 0,
                    injections: combinations.pop().unwrap(),
                    score: None,
                },
            ));
        }
        let scores = score_pairs(matcher, &cands.pairs, batch_size)?;
        Ok(cands.select(&scores))
    }
}

/// Renaming can make two attribute names equal; later duplicates get a
/// `#k` suffix.
fn dedupe_names(attributes: &mut [Attribute]) {
    let mut seen = std::collections::HashSet::new();
    for a in attributes.iter_mut() {
        if seen.insert(a.name.clone()) {
            continue;
        }
        let mut k = 2;
        loop {
            let candidate = format!("{}#{k}", a.name);
            if seen.insert(candidate.clone()) {
                a.name = candidate;
                break;
            }
            k += 1;
        }
    }
}

struct RecordEdits {
    keep_values: Vec<Vec<bool>>,
    keep_names: Vec<Vec<bool>>,
    /// (gap, injection order, feature)
    inserts: Vec<Vec<(usize, usize, usize)>>,
    overwrite: Vec<Option<f64>>,
    name_appends: Vec<Vec<usize>>,
}

impl RecordEdits {
    fn new(t: &RecordTokens) -> Self {
        let n = t.values.len();
        RecordEdits {
            keep_values: t.values.iter().map(|v| vec![true; v.len()]).collect(),
            keep_names: t.names.iter().map(|v| vec![true; v.len()]).collect(),
            inserts: vec![Vec::new(); n],
            overwrite: vec![None; n],
            name_appends: vec![Vec::new(); n],
        }
    }

    fn is_noop(&self) -> bool {
        self.keep_values.iter().flatten().all(|k| *k)
            && self.keep_names.iter().flatten().all(|k| *k)
            && self.inserts.iter().all(Vec::is_empty)
            && self.overwrite.iter().all(Option::is_none)
            && self.name_appends.iter().all(Vec::is_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectionTarget {
    /// Insert the feature's tokens before token `gap` of a text attribute
    /// (`gap == len` appends).
    Insert { attribute_index: usize, gap: usize },
    /// Replace a numeric attribute value with the feature's number.
    Overwrite { attribute_index: usize },
    /// Append the feature's name tokens to an attribute name.
    AppendName { attribute_index: usize },
    /// No legal target; the feature behaves as present.
    Unplaced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedInjection {
    pub feature: usize,
    pub target: InjectionTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    /// Number of target combinations sampled (`L`).
    pub samples: usize,
    pub injections: Vec<PlannedInjection>,
    /// Match score of the chosen combination, when the matcher was called.
    pub score: Option<f64>,
}

/// Candidate translations of one perturbation vector.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub samples: usize,
    pub pairs: Vec<RecordPair>,
    pub combinations: Vec<Vec<PlannedInjection>>,
}

impl Candidates {
    /// Keeps the first candidate with the highest score.
    pub fn select(mut self, scores: &[f64]) -> (RecordPair, InjectionPlan) {
        assert_eq!(scores.len(), self.pairs.len());
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        let pair = self.pairs.swap_remove(best);
        let injections = self.combinations.swap_remove(best);
        (
            pair,
            InjectionPlan {
                samples: self.samples,
                injections,
                score: Some(scores[best]),
            },
        )
    }
}
