use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{counterfactual_metrics, explain_all, perturbation_error, stability, Class};
use crate::data::RecordPair;
use crate::error::Error;
use crate::explainer::{explain, ExplainerConfig};
use crate::matcher::Matcher;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Neighborhood size `|Z_x|`; reports CF1, PE and stability.
    SampleSize,
    /// Features per explanation; reports CF1 and PE.
    K,
    /// Neighborhood size; reports the median wall-clock time per explanation.
    Runtime,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sample_size" | "sample-size" => Ok(SweepAxis::SampleSize),
            "k" | "K" => Ok(SweepAxis::K),
            "runtime" => Ok(SweepAxis::Runtime),
            _ => Err(format!("unknown sweep axis {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: usize,
    pub class: Class,
    pub pairs: usize,
    pub cr: Option<f64>,
    pub cp: Option<f64>,
    pub cf1: Option<f64>,
    pub pe: Option<f64>,
    pub stability: Option<f64>,
    pub median_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "axis",
            "value",
            "class",
            "pairs",
            "cr",
            "cp",
            "cf1",
            "pe",
            "stability",
            "median_seconds",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            let axis = serde_json::to_value(r.axis).expect("axis serializes");
            w.write_record([
                axis.as_str().unwrap_or_default().to_string(),
                r.value.to_string(),
                r.class.as_str().to_string(),
                r.pairs.to_string(),
                cell(r.cr),
                cell(r.cp),
                cell(r.cf1),
                cell(r.pe),
                cell(r.stability),
                cell(r.median_seconds),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    })
}

/// Evaluates `base` with one parameter varied over `values`, per class.
/// Runtime measurements always run on a single thread.
pub fn sweep<M: Matcher + ?Sized>(
    matcher: &M,
    pairs_by_class: &[(Class, Vec<RecordPair>)],
    base: &ExplainerConfig,
    axis: SweepAxis,
    values: &[usize],
    seed: u64,
    workers: usize,
) -> Result<SweepTable, Error> {
    let mut rows = Vec::new();
    for &value in values {
        let mut config = base.clone();
        match axis {
            SweepAxis::SampleSize | SweepAxis::Runtime => {
                config.sampling.s_min = value;
                config.sampling.s_max = value;
            }
            SweepAxis::K => config.k = value,
        }
        for (class, pairs) in pairs_by_class {
            let mut row = SweepRow {
                axis,
                value,
                class: *class,
                pairs: pairs.len(),
                cr: None,
                cp: None,
                cf1: None,
                pe: None,
                stability: None,
                median_seconds: None,
            };
            if axis == SweepAxis::Runtime {
                let mut times = Vec::with_capacity(pairs.len());
                for p in pairs {
                    let start = Instant::now();
                    explain(matcher, p, &config, seed)?;
                    times.push(start.elapsed().as_secs_f64());
                }
                row.median_seconds = median(times);
            } else {
                let explanations = explain_all(matcher, pairs, &config, seed, workers)?;
                let cf = counterfactual_metrics(matcher, pairs, &explanations, &config, seed, workers)?;
                let pe = perturbation_error(matcher, pairs, &explanations, &config, seed, workers)?;
                row.cr = cf.cr;
                row.cp = cf.cp;
                row.cf1 = cf.cf1;
                row.pe = pe.pe;
                if axis == SweepAxis::SampleSize {
                    row.stability =
                        stability(matcher, pairs, &config, (seed, seed.wrapping_add(1)), workers)?.mean;
                }
            }
            rows.push(row);
        }
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(vec![]), None);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn csv_layout() {
        let t = SweepTable {
            rows: vec![SweepRow {
                axis: SweepAxis::K,
                value: 3,
                class: Class::NonMatch,
                pairs: 4,
                cr: Some(0.5),
                cp: Some(1.0),
                cf1: Some(2.0 / 3.0),
                pe: None,
                stability: None,
                median_seconds: None,
            }],
        };
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "axis,value,class,pairs,cr,cp,cf1,pe,stability,median_seconds");
        assert!(lines.next().unwrap().starts_with("k,3,nonmatch,4,0.5,1,0.666"));
    }
}
