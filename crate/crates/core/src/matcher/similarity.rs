use serde::{Deserialize, Serialize};

use crate::data::{tokenize, AttributeValue, Record, RecordPair};

/// Features emitted per compared attribute: token Jaccard, normalized
/// Levenshtein similarity, scaled numeric difference, missing indicator.
pub const PER_ATTRIBUTE: usize = 4;

/// The attribute names compared by the similarity features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub attributes: Vec<String>,
}

impl FeatureSchema {
    /// Attribute names present in both records, in the order of `a`.
    pub fn shared(a: &Record, b: &Record) -> Self {
        FeatureSchema {
            attributes: a
                .attributes()
                .iter()
                .filter(|x| b.get(&x.name).is_some())
                .map(|x| x.name.clone())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.attributes.len() * PER_ATTRIBUTE + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for a in &self.attributes {
            for f in ["jaccard", "levenshtein", "numeric_diff", "missing"] {
                out.push(format!("{a}.{f}"));
            }
        }
        out.push("record.jaccard".into());
        out
    }

    pub fn features(&self, pair: &RecordPair) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for name in &self.attributes {
            let x = pair.a.get(name).unwrap_or(&AttributeValue::Null);
            let y = pair.b.get(name).unwrap_or(&AttributeValue::Null);
            attribute_features(x, y, &mut out);
        }
        out.push(set_jaccard(&record_token_set(&pair.a), &record_token_set(&pair.b)));
        out
    }
}

fn attribute_features(x: &AttributeValue, y: &AttributeValue, out: &mut Vec<f64>) {
    let tx = token_set(x);
    let ty = token_set(y);
    if tx.is_empty() || ty.is_empty() {
        out.extend([0.0, 0.0, 0.0, 1.0]);
        return;
    }
    let numeric = match (x, y) {
        (AttributeValue::Number(p), AttributeValue::Number(q)) => {
            let m = p.abs().max(q.abs());
            if m == 0.0 {
                0.0
            } else {
                (p - q).abs() / m
            }
        }
        _ => 0.0,
    };
    out.extend([
        set_jaccard(&tx, &ty),
        levenshtein_similarity(&x.render().to_lowercase(), &y.render().to_lowercase()),
        numeric,
        0.0,
    ]);
}

fn token_set(v: &AttributeValue) -> Vec<String> {
    let mut t: Vec<String> = tokenize(v).into_iter().map(|s| s.to_lowercase()).collect();
    t.sort_unstable();
    t.dedup();
    t
}

fn record_token_set(r: &Record) -> Vec<String> {
    let mut t: Vec<String> = r
        .attributes()
        .iter()
        .flat_map(|a| tokenize(&a.value))
        .map(|s| s.to_lowercase())
        .collect();
    t.sort_unstable();
    t.dedup();
    t
}

fn set_jaccard(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Jaccard coefficient of the lowercase token sets; 0 when both are empty.
pub fn token_jaccard(x: &AttributeValue, y: &AttributeValue) -> f64 {
    set_jaccard(&token_set(x), &token_set(y))
}

/// `1 - levenshtein(x, y) / max(|x|, |y|)` over characters; 1 for two empty strings.
pub fn levenshtein_similarity(x: &str, y: &str) -> f64 {
    let n = x.chars().count().max(y.chars().count());
    if n == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(x, y) as f64 / n as f64
}

/// Similarity features of a pair over the attribute names both records share.
pub fn similarity_features(pair: &RecordPair) -> Vec<f64> {
    FeatureSchema::shared(&pair.a, &pair.b).features(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: Record, b: Record) -> RecordPair {
        RecordPair::new("t", a, b).unwrap()
    }

    #[test]
    fn identical_values() {
        let r = Record::from_pairs([("title", "belkin shield micra")]);
        let f = similarity_features(&pair(r.clone(), r));
        assert_eq!(f, vec![1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn brand_and_model_number() {
        let a = Record::from_pairs([("brand", "belkin"), ("modelno", "f8z646ttc01")]);
        let b = Record::from_pairs([("brand", "belkin"), ("modelno", "f8z646ttc02")]);
        let f = similarity_features(&pair(a, b));
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[4], 0.0);
        assert!((f[5] - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn both_null_is_missing() {
        let a = Record::from_pairs([("x", AttributeValue::Null)]);
        let b = Record::from_pairs([("x", AttributeValue::Null)]);
        let f = similarity_features(&pair(a, b));
        assert_eq!(&f[..4], &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(f[4], 0.0);
    }

    #[test]
    fn numeric_difference_scaled() {
        let a = Record::from_pairs([("price", 47.88)]);
        let b = Record::from_pairs([("price", 12.49)]);
        let f = similarity_features(&pair(a, b));
        assert!((f[2] - (47.88 - 12.49) / 47.88).abs() < 1e-12);
        assert_eq!(f[3], 0.0);
    }

    #[test]
    fn no_shared_names_uses_record_level_only() {
        let a = Record::from_pairs([("x", "a b")]);
        let b = Record::from_pairs([("y", "b c")]);
        let f = similarity_features(&pair(a, b));
        assert_eq!(f.len(), 1);
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-12);
    }
}
