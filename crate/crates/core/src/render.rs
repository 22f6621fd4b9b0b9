//! Self-contained HTML reports of explanations.
//!
//! Each explanation becomes a panel: a header with the score and decision,
//! both records with the selected spans highlighted, and an inline SVG bar
//! chart. A feature's bar runs from 0 to `w` (green when positive, red when
//! negative) and a gray bar continues from `w` to `w + p`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{tokenize, Location, RecordPair, Side};
use crate::explainer::{Explanation, PairExplanation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedExplanation {
    pub html: String,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Positive,
    Negative,
    Potential,
}

/// A bar segment on the attribution axis, `from <= to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub from: f64,
    pub to: f64,
    pub kind: SegmentKind,
}

/// Bar segments of an entry: the attribution, then the potential if any.
pub fn bar_segments(w: f64, p: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    if w != 0.0 {
        out.push(Segment {
            from: w.min(0.0),
            to: w.max(0.0),
            kind: if w > 0.0 {
                SegmentKind::Positive
            } else {
                SegmentKind::Negative
            },
        });
    }
    if p != 0.0 {
        out.push(Segment {
            from: w.min(w + p),
            to: w.max(w + p),
            kind: SegmentKind::Potential,
        });
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:sans-serif;margin:1.5em;color:#222}\
.panel{border:1px solid #ccc;border-radius:4px;padding:1em;margin-bottom:1.5em}\
table.rec{border-collapse:collapse;margin:.5em 0}\
table.rec td{padding:2px 8px;border-bottom:1px solid #eee;vertical-align:top}\
td.name{color:#666}\
mark{padding:0 2px;border-radius:2px}\
mark.pos{background:#c8e6c9}mark.neg{background:#ffcdd2}mark.pot{background:#e0e0e0}\
.meta{color:#555;font-size:.9em}";

const BAR_WIDTH: f64 = 360.0;
const ROW_HEIGHT: f64 = 22.0;
const LABEL_WIDTH: f64 = 220.0;

fn color(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::Positive => "#2e7d32",
        SegmentKind::Negative => "#c62828",
        SegmentKind::Potential => "#9e9e9e",
    }
}

fn chart(e: &Explanation) -> String {
    let scale = e
        .entries
        .iter()
        .flat_map(|x| [x.w.abs(), (x.w + x.p).abs()])
        .fold(0.0f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let half = BAR_WIDTH / 2.0;
    let x_of = |v: f64| LABEL_WIDTH + half + v / scale * half;
    let height = ROW_HEIGHT * e.entries.len().max(1) as f64 + 20.0;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" role="img">"#,
        LABEL_WIDTH + BAR_WIDTH + 10.0
    );
    for (row, entry) in e.entries.iter().enumerate() {
        let y = ROW_HEIGHT * row as f64 + 4.0;
        let label = format!("{}: {}", entry.feature.attribute, entry.feature.text);
        let _ = write!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 6.0,
            y + 13.0,
            escape(&label)
        );
        for seg in bar_segments(entry.w, entry.p) {
            let _ = write!(
                s,
                r#"<rect x="{:.2}" y="{y}" width="{:.2}" height="16" fill="{}"><title>w = {:.4}, p = {:.4}</title></rect>"#,
                x_of(seg.from),
                (x_of(seg.to) - x_of(seg.from)).max(0.5),
                color(seg.kind),
                entry.w,
                entry.p
            );
        }
    }
    let _ = write!(
        s,
        r##"<line x1="{0}" y1="0" x2="{0}" y2="{1}" stroke="#333" stroke-width="1"/>"##,
        x_of(0.0),
        height - 16.0
    );
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{:+.3}</text><text x="{}" y="{}" font-size="10" text-anchor="middle">{:+.3}</text></svg>"#,
        x_of(-scale),
        height - 4.0,
        -scale,
        x_of(scale),
        height - 4.0,
        scale
    );
    s
}

fn highlight_class(w: f64, p: f64) -> &'static str {
    if w > 0.0 {
        "pos"
    } else if w < 0.0 && -w >= p {
        "neg"
    } else {
        "pot"
    }
}

fn record_table(pair: &RecordPair, side: Side, e: &Explanation) -> String {
    let record = pair.side(side);
    let mut s = String::from(r#"<table class="rec">"#);
    for (ai, attr) in record.attributes().iter().enumerate() {
        let marks_for = |location: Location, position: usize| {
            e.entries.iter().find(|x| {
                let f = &x.feature;
                f.side == side
                    && f.location == location
                    && record.position(&f.attribute) == Some(ai)
                    && position >= f.span.start
                    && position < f.span.start + f.span.length
            })
        };
        let render_tokens = |tokens: &[String], location: Location| {
            let mut out = String::new();
            for (j, t) in tokens.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                match marks_for(location, j) {
                    Some(x) => {
                        let _ = write!(
                            out,
                            r#"<mark class="{}" title="w = {:.4}, p = {:.4}">{}</mark>"#,
                            highlight_class(x.w, x.p),
                            x.w,
                            x.p,
                            escape(t)
                        );
                    }
                    None => out.push_str(&escape(t)),
                }
            }
            out
        };
        let name_tokens: Vec<String> = attr.name.split_whitespace().map(str::to_string).collect();
        let value_tokens = tokenize(&attr.value);
        let _ = write!(
            s,
            r#"<tr><td class="name">{}</td><td>{}</td></tr>"#,
            render_tokens(&name_tokens, Location::AttributeName),
            render_tokens(&value_tokens, Location::AttributeValue)
        );
    }
    s.push_str("</table>");
    s
}

fn panel(pair: &RecordPair, e: &Explanation) -> String {
    let title = match e.side.sides() {
        [Side::A] => "Explanation for record a",
        [Side::B] => "Explanation for record b",
        _ => "Joint explanation",
    };
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<section class="panel"><h2>{title}</h2><p class="meta">granularity {} &middot; {} features &middot; k<sub>g</sub> = {} &middot; predicted strength {:.3} &middot; actual strength {:.3}</p>"#,
        e.granularity,
        e.entries.len(),
        e.k_g,
        e.cfs_hat,
        e.cfs_actual
    );
    for side in [Side::A, Side::B] {
        let _ = write!(s, "<h3>Record {}</h3>{}", side.as_str(), record_table(pair, side, e));
    }
    s.push_str(&chart(e));
    s.push_str("</section>");
    s
}

fn summary(explanation: &PairExplanation) -> String {
    let first = explanation.explanations()[0];
    let label = if first.is_match() { "match" } else { "non-match" };
    let mut s = format!(
        "pair {}: score {:.4} vs threshold {:.2}, predicted {label}",
        explanation.pair_id(),
        first.score,
        first.threshold
    );
    for e in explanation.explanations() {
        let top: Vec<String> = e
            .entries
            .iter()
            .take(3)
            .map(|x| format!("{:?} ({:+.3}/{:+.3})", x.feature.text, x.w, x.p))
            .collect();
        let _ = write!(s, "\n  {}: n={} top {}", e.side.as_str(), e.granularity, top.join(", "));
    }
    s
}

/// Renders an explanation of `pair` as a standalone HTML document.
pub fn render(explanation: &PairExplanation, pair: &RecordPair) -> RenderedExplanation {
    let first = explanation.explanations()[0];
    let label = if first.is_match() { "match" } else { "non-match" };
    let mut html = String::new();
    let _ = write!(
        html,
        r#"<!DOCTYPE html><html lang="en"><head><meta charset="utf-8"><title>Explanation {}</title><style>{STYLE}</style></head><body><h1>Pair {}</h1><p>Match score <b>{:.4}</b> against threshold {:.2}: predicted <b>{label}</b>.</p>"#,
        escape(explanation.pair_id()),
        escape(explanation.pair_id()),
        first.score,
        first.threshold
    );
    for e in explanation.explanations() {
        html.push_str(&panel(pair, e));
    }
    html.push_str("</body></html>\n");
    RenderedExplanation {
        html,
        summary: summary(explanation),
    }
}
