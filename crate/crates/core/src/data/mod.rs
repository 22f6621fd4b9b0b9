//! Records, record pairs and benchmark datasets.
//!
//! A [`Record`] is an ordered list of attribute name/value pairs. Values are
//! text, numbers or null; text is split on whitespace into tokens, while a
//! number is a single token and null has none.

mod csv_io;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

pub use csv_io::{load_benchmark_dataset, save_benchmark_dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Text(String),
    Number(f64),
    Null,
}

impl AttributeValue {
    pub fn is_null(&self) -> bool {
        matches!(self, AttributeValue::Null)
    }

    pub fn is_number(&self) -> bool {
        matches!(self, AttributeValue::Number(_))
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttributeValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttributeValue::Number(x) => Some(*x),
            _ => None,
        }
    }

    /// The value as it would be printed; null renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            AttributeValue::Text(s) => s.clone(),
            AttributeValue::Number(x) => format_number(*x),
            AttributeValue::Null => String::new(),
        }
    }
}

impl From<&str> for AttributeValue {
    fn from(s: &str) -> Self {
        AttributeValue::Text(s.to_string())
    }
}

impl From<String> for AttributeValue {
    fn from(s: String) -> Self {
        AttributeValue::Text(s)
    }
}

impl From<f64> for AttributeValue {
    fn from(x: f64) -> Self {
        AttributeValue::Number(x)
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub value: AttributeValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    attributes: Vec<Attribute>,
}

impl Record {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(DataError::Invalid(format!(
                    "duplicate attribute name {:?}",
                    a.name
                )));
            }
        }
        Ok(Record { attributes })
    }

    /// Convenience constructor for tests and examples. Panics on duplicate names.
    pub fn from_pairs<N, V, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (N, V)>,
        N: Into<String>,
        V: Into<AttributeValue>,
    {
        let attributes = pairs
            .into_iter()
            .map(|(n, v)| Attribute {
                name: n.into(),
                value: v.into(),
            })
            .collect();
        Record::new(attributes).expect("attribute names must be unique")
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&AttributeValue> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .map(|a| &a.value)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// All value tokens of the record, attribute by attribute.
    pub fn tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        for (attribute_index, attr) in self.attributes.iter().enumerate() {
            for (position, text) in tokenize(&attr.value).into_iter().enumerate() {
                out.push(Token {
                    text,
                    attribute_index,
                    position,
                    location: Location::AttributeValue,
                });
            }
        }
        out
    }
}

impl<'de> Deserialize<'de> for Record {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            attributes: Vec<Attribute>,
        }
        let raw = Raw::deserialize(d)?;
        Record::new(raw.attributes).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordPair {
    pub pair_id: String,
    pub a: Record,
    pub b: Record,
}

impl RecordPair {
    pub fn new(pair_id: impl Into<String>, a: Record, b: Record) -> Result<Self, DataError> {
        if a.is_empty() || b.is_empty() {
            return Err(DataError::Invalid(
                "both records of a pair need at least one attribute".into(),
            ));
        }
        Ok(RecordPair {
            pair_id: pair_id.into(),
            a,
            b,
        })
    }

    pub fn side(&self, side: Side) -> &Record {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }
}

impl<'de> Deserialize<'de> for RecordPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(default)]
            pair_id: String,
            a: Record,
            b: Record,
        }
        let raw = Raw::deserialize(d)?;
        RecordPair::new(raw.pair_id, raw.a, raw.b).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::A => "a",
            Side::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    AttributeValue,
    AttributeName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub attribute_index: usize,
    pub position: usize,
    pub location: Location,
}

/// Splits a value into token texts. Text is split on runs of whitespace with
/// punctuation left attached; a number is one token; null has no tokens.
pub fn tokenize(value: &AttributeValue) -> Vec<String> {
    match value {
        AttributeValue::Text(s) => s.split_whitespace().map(str::to_string).collect(),
        AttributeValue::Number(x) => vec![format_number(*x)],
        AttributeValue::Null => Vec::new(),
    }
}

/// Caps the total number of whitespace-separated words over the text
/// attributes, counted in attribute order. Attributes that fit are left
/// untouched; the attribute that crosses the cap is cut and every later text
/// attribute becomes empty.
pub fn truncate_record(record: &Record, max_words: usize) -> Record {
    assert!(max_words >= 1, "max_words must be at least 1");
    let mut remaining = max_words;
    let attributes = record
        .attributes
        .iter()
        .map(|attr| {
            let value = match &attr.value {
                AttributeValue::Text(s) => {
                    let words: Vec<&str> = s.split_whitespace().collect();
                    if words.len() <= remaining {
                        remaining -= words.len();
                        attr.value.clone()
                    } else {
                        let kept = words[..remaining].join(" ");
                        remaining = 0;
                        AttributeValue::Text(kept)
                    }
                }
                other => other.clone(),
            };
            Attribute {
                name: attr.name.clone(),
                value,
            }
        })
        .collect();
    Record { attributes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a_index: usize,
    pub b_index: usize,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub ids: Vec<String>,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub table_a: Table,
    pub table_b: Table,
    /// Split name to candidate pairs, in file order. Always has train, valid
    /// and test.
    pub splits: Vec<(String, Vec<LabeledPair>)>,
}

impl Dataset {
    pub fn split(&self, name: &str) -> Option<&[LabeledPair]> {
        self.splits
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn candidate_count(&self) -> usize {
        self.splits.iter().map(|(_, v)| v.len()).sum()
    }

    pub fn match_count(&self) -> usize {
        self.splits
            .iter()
            .flat_map(|(_, v)| v.iter())
            .filter(|p| p.label)
            .count()
    }

    /// The record pair at `row` of `split`, identified as `"{split}/{row}"`.
    pub fn pair(&self, split: &str, row: usize) -> Option<RecordPair> {
        let lp = self.split(split)?.get(row)?;
        Some(RecordPair {
            pair_id: format!("{split}/{row}"),
            a: self.table_a.records[lp.a_index].clone(),
            b: self.table_b.records[lp.b_index].clone(),
        })
    }

    pub fn pairs(&self, split: &str) -> Vec<(RecordPair, bool)> {
        let n = self.split(split).map_or(0, |s| s.len());
        (0..n)
            .map(|row| {
                let label = self.split(split).unwrap()[row].label;
                (self.pair(split, row).unwrap(), label)
            })
            .collect()
    }

    /// Applies [`truncate_record`] to every record of both tables.
    pub fn truncated(&self, max_words: usize) -> Dataset {
        let trunc = |t: &Table| Table {
            ids: t.ids.clone(),
            records: t
                .records
                .iter()
                .map(|r| truncate_record(r, max_words))
                .collect(),
        };
        Dataset {
            table_a: trunc(&self.table_a),
            table_b: trunc(&self.table_b),
            splits: self.splits.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_title_value() {
        let v = AttributeValue::from("belkin shield micra for ipod touch tint");
        assert_eq!(tokenize(&v).len(), 7);
    }

    #[test]
    fn tokenize_empty_and_whitespace() {
        assert!(tokenize(&AttributeValue::from("")).is_empty());
        assert!(tokenize(&AttributeValue::from("   \t ")).is_empty());
        assert_eq!(
            tokenize(&AttributeValue::from("  apple pan  the ")),
            vec!["apple", "pan", "the"]
        );
    }

    #[test]
    fn tokenize_number_and_null() {
        assert_eq!(tokenize(&AttributeValue::Number(47.88)), vec!["47.88"]);
        assert_eq!(tokenize(&AttributeValue::Number(1995.0)), vec!["1995"]);
        assert!(tokenize(&AttributeValue::Null).is_empty());
    }

    #[test]
    fn punctuation_stays_attached() {
        let v = AttributeValue::from("tint-royal purple, 12224 ventura blvd.");
        assert_eq!(
            tokenize(&v),
            vec!["tint-royal", "purple,", "12224", "ventura", "blvd."]
        );
    }

    fn words(n: usize, prefix: &str) -> String {
        (0..n)
            .map(|i| format!("{prefix}{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn truncate_long_description() {
        let r = Record::from_pairs([("description", words(300, "w"))]);
        let t = truncate_record(&r, 256);
        assert_eq!(tokenize(t.get("description").unwrap()).len(), 256);
    }

    #[test]
    fn truncate_under_limit_is_identity() {
        let r = Record::from_pairs([("title", words(10, "w"))]);
        assert_eq!(truncate_record(&r, 256), r);
    }

    #[test]
    fn truncate_is_greedy_in_attribute_order() {
        let r = Record::from_pairs([("x", words(200, "x")), ("y", words(200, "y"))]);
        let t = truncate_record(&r, 256);
        assert_eq!(t.get("x"), r.get("x"));
        let y = tokenize(t.get("y").unwrap());
        assert_eq!(y.len(), 56);
        assert_eq!(y[55], "y55");
    }

    #[test]
    fn truncate_leaves_numbers_alone() {
        let r = Record::from_pairs([
            ("t", AttributeValue::from("a b c")),
            ("price", AttributeValue::Number(3.5)),
            ("u", AttributeValue::from("d e")),
        ]);
        let t = truncate_record(&r, 2);
        assert_eq!(t.get("t").unwrap(), &AttributeValue::from("a b"));
        assert_eq!(t.get("price").unwrap(), &AttributeValue::Number(3.5));
        assert_eq!(t.get("u").unwrap(), &AttributeValue::from(""));
    }

    #[test]
    fn duplicate_names_rejected() {
        let attrs = vec![
            Attribute {
                name: "x".into(),
                value: AttributeValue::Null,
            },
            Attribute {
                name: "x".into(),
                value: AttributeValue::Null,
            },
        ];
        assert!(Record::new(attrs).is_err());
    }

    #[test]
    fn json_shape() {
        let r = Record::from_pairs([
            ("title", AttributeValue::from("ipod")),
            ("price", AttributeValue::Number(47.88)),
            ("brand", AttributeValue::Null),
            ("color", AttributeValue::from("")),
        ]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"attributes":[{"name":"title","value":"ipod"},{"name":"price","value":47.88},{"name":"brand","value":null},{"name":"color","value":""}]}"#
        );
        let back: Record = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(back.get("brand").unwrap().is_null());
        assert_eq!(back.get("color").unwrap(), &AttributeValue::from(""));
    }

    #[test]
    fn empty_pair_rejected() {
        let a = Record::from_pairs([("x", "1")]);
        let b = Record::new(vec![]).unwrap();
        assert!(RecordPair::new("p", a, b).is_err());
    }
}
