//! Explanations for entity-matching decisions.
//!
//! Given a black-box [`Matcher`](matcher::Matcher) that scores record pairs,
//! the explainer attributes the score to token spans of each record. Every
//! span carries a weight (how much the score drops when the span is removed)
//! and a potential (how much it could rise if the span were copied into the
//! other record). The granularity of the spans is chosen per record so that
//! the explanation is counterfactually useful.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod explainer;
pub mod interpretable;
pub mod lime;
pub mod matcher;
pub mod render;
pub mod seed;
pub mod surrogate;

pub use error::{Error, Result};
