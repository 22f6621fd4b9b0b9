//! Neighborhood sampling and the sparse weighted linear surrogate.
//!
//! The surrogate regresses `f(z) - f(x)` on dummy-coded feature states, with
//! `P` as the reference level: one dummy for `A` per feature, plus one for
//! `M` when attribution potential is on. Features are added by forward
//! selection, both dummies of a feature at once.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::MatcherError;
use crate::interpretable::{Candidates, InterpretableSpace, PerturbationVector, State};
use crate::matcher::{score_pairs, Matcher};

pub const DEFAULT_S_MIN: usize = 500;
pub const DEFAULT_S_MAX: usize = 3000;
pub const RIDGE: f64 = 1e-6;
/// Forward selection stops when the best candidate improves the SSE by no more.
pub const MIN_SSE_GAIN: f64 = 1e-12;

/// Sampling and fitting with (`Lemon`) or without (`Lime`) the `M` state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lime,
    Lemon,
}

impl Mode {
    fn columns_per_feature(self) -> usize {
        match self {
            Mode::Lime => 1,
            Mode::Lemon => 2,
        }
    }
}

/// `exp(-2 D / D_max)` for a vector at Hamming distance `distance`.
pub fn kernel_weight(distance: usize, d_max: usize) -> f64 {
    (-2.0 * distance as f64 / d_max as f64).exp()
}

/// `max(5, floor(d_x / 5))`.
pub fn d_max(d_x: usize) -> usize {
    (d_x / 5).max(5)
}

/// Upper bound of the `M`-subset size, `max(3, floor(d_x / 3))`.
pub fn m_subset_max(d_x: usize) -> usize {
    (d_x / 3).max(3)
}

/// `max(s_min, min(30 d_x, s_max))`.
pub fn sample_size(d_x: usize, s_min: usize, s_max: usize) -> usize {
    (30 * d_x).min(s_max).max(s_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub s_min: usize,
    pub s_max: usize,
    pub batch_size: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            s_min: DEFAULT_S_MIN,
            s_max: DEFAULT_S_MAX,
            batch_size: crate::matcher::DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodEntry {
    pub z: PerturbationVector,
    pub y: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSample {
    pub mode: Mode,
    pub dim: usize,
    pub d_max: usize,
    pub entries: Vec<NeighborhoodEntry>,
}

/// Draws one perturbation vector: an `A`-subset of size uniform in
/// `[0, D_max]`, then in lemon mode an `M`-subset among the remaining
/// features whose size is 0 with probability 1/2 and otherwise uniform in
/// `[0, max(3, floor(d_x / 3))]`.
pub fn draw_vector<R: Rng + ?Sized>(d_x: usize, mode: Mode, rng: &mut R) -> PerturbationVector {
    let mut z = PerturbationVector::all_present(d_x);
    let a_size = rng.gen_range(0..=d_max(d_x)).min(d_x);
    for i in index::sample(rng, d_x, a_size).iter() {
        z.states[i] = State::A;
    }
    if mode == Mode::Lemon {
        let m_size = if rng.gen_bool(0.5) {
            0
        } else {
            rng.gen_range(0..=m_subset_max(d_x))
        };
        let free: Vec<usize> = (0..d_x).filter(|&i| z.states[i] == State::P).collect();
        let m_size = m_size.min(free.len());
        for k in index::sample(rng, free.len(), m_size).iter() {
            z.states[free[k]] = State::M;
        }
    }
    z
}

/// Vectors translated and scored per round; bounds memory for long records.
const VECTORS_PER_ROUND: usize = 256;

/// Samples `S` vectors, translates each into a record pair, scores the pairs
/// in batches and attaches kernel weights.
pub fn sample_neighborhood<M, R>(
    space: &InterpretableSpace,
    mode: Mode,
    matcher: &M,
    rng: &mut R,
    params: &SamplingParams,
) -> Result<NeighborhoodSample, MatcherError>
where
    M: Matcher + ?Sized,
    R: Rng + ?Sized,
{
    let d_x = space.dim();
    let s = sample_size(d_x, params.s_min, params.s_max);
    let dm = d_max(d_x);
    let vectors: Vec<PerturbationVector> = (0..s).map(|_| draw_vector(d_x, mode, rng)).collect();
    let mut entries = Vec::with_capacity(s);
    for chunk in vectors.chunks(VECTORS_PER_ROUND) {
        let cands: Vec<Candidates> = chunk.iter().map(|z| space.candidates(z, rng)).collect();
        let flat: Vec<_> = cands.iter().flat_map(|c| c.pairs.iter().cloned()).collect();
        let scores = score_pairs(matcher, &flat, params.batch_size)?;
        let mut offset = 0;
        for (z, c) in chunk.iter().zip(&cands) {
            let n = c.pairs.len();
            let y = scores[offset..offset + n]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            offset += n;
            entries.push(NeighborhoodEntry {
                weight: kernel_weight(z.distance(), dm),
                z: z.clone(),
                y,
            });
        }
    }
    Ok(NeighborhoodSample {
        mode,
        dim: d_x,
        d_max: dm,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub k: usize,
    pub ridge: f64,
    /// Regress raw scores with no intercept instead of `y - f(x)`.
    pub strict_no_intercept: bool,
}

impl FitOptions {
    pub fn new(k: usize) -> Self {
        FitOptions {
            k,
            ridge: RIDGE,
            strict_no_intercept: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFit {
    pub mode: Mode,
    /// Selected features in selection order.
    pub selected: Vec<usize>,
    pub beta_a: Vec<f64>,
    /// Empty in lime mode.
    pub beta_m: Vec<f64>,
    pub sse: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub feature: usize,
    pub w: f64,
    pub p: f64,
}

/// Weighted normal equations over all dummy columns.
struct Normal {
    gram: DMatrix<f64>,
    b: DVector<f64>,
    tt: f64,
}

fn column(state: State, feature: usize, mode: Mode) -> Option<usize> {
    match (state, mode) {
        (State::P, _) => None,
        (State::A, Mode::Lime) => Some(feature),
        (State::A, Mode::Lemon) => Some(2 * feature),
        (State::M, Mode::Lemon) => Some(2 * feature + 1),
        // lime samples never hold M; treat it as the reference level
        (State::M, Mode::Lime) => None,
    }
}

fn normal_equations(sample: &NeighborhoodSample, targets: &[f64]) -> Normal {
    let c = sample.dim * sample.mode.columns_per_feature();
    let mut gram = DMatrix::zeros(c, c);
    let mut b = DVector::zeros(c);
    let mut tt = 0.0;
    let mut cols = Vec::new();
    for (e, t) in sample.entries.iter().zip(targets) {
        cols.clear();
        cols.extend(
            e.z.states
                .iter()
                .enumerate()
                .filter_map(|(i, s)| column(*s, i, sample.mode)),
        );
        for &j in &cols {
            b[j] += e.weight * t;
            for &k in &cols {
                gram[(j, k)] += e.weight;
            }
        }
        tt += e.weight * t * t;
    }
    Normal { gram, b, tt }
}

/// Ridge solution on `cols` and its weighted SSE.
fn solve(n: &Normal, cols: &[usize], ridge: f64) -> (DVector<f64>, f64) {
    let m = cols.len();
    let mut g = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    for (r, &i) in cols.iter().enumerate() {
        b[r] = n.b[i];
        for (c, &j) in cols.iter().enumerate() {
            g[(r, c)] = n.gram[(i, j)];
        }
    }
    let mut reg = g.clone();
    for r in 0..m {
        reg[(r, r)] += ridge;
    }
    let beta = reg
        .cholesky()
        .map(|ch| ch.solve(&b))
        .unwrap_or_else(|| DVector::zeros(m));
    let sse = n.tt - 2.0 * beta.dot(&b) + beta.dot(&(&g * &beta));
    (beta, sse)
}

/// Fits the surrogate by forward selection of at most `options.k` features.
pub fn fit_surrogate(sample: &NeighborhoodSample, f_x: f64, options: &FitOptions) -> SurrogateFit {
    assert!(options.k >= 1, "K must be at least 1");
    let offset = if options.strict_no_intercept { 0.0 } else { f_x };
    let targets: Vec<f64> = sample.entries.iter().map(|e| e.y - offset).collect();
    let lemon = sample.mode == Mode::Lemon;
    let empty = SurrogateFit {
        mode: sample.mode,
        selected: Vec::new(),
        beta_a: Vec::new(),
        beta_m: Vec::new(),
        sse: 0.0,
        degenerate: true,
    };
    let Some(first) = targets.first() else {
        return empty;
    };
    if targets.iter().all(|t| t == first) {
        return SurrogateFit {
            sse: sample
                .entries
                .iter()
                .zip(&targets)
                .map(|(e, t)| e.weight * t * t)
                .sum(),
            ..empty
        };
    }

    let normal = normal_equations(sample, &targets);
    let feature_cols = |i: usize| -> Vec<usize> {
        if lemon {
            vec![2 * i, 2 * i + 1]
        } else {
            vec![i]
        }
    };
    let mut selected: Vec<usize> = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    let mut current_sse = normal.tt;
    let mut beta = DVector::zeros(0);
    while selected.len() < options.k.min(sample.dim) {
        let mut best: Option<(usize, f64, DVector<f64>)> = None;
        for i in 0..sample.dim {
            if selected.contains(&i) {
                continue;
            }
            let mut trial = cols.clone();
            trial.extend(feature_cols(i));
            let (b, sse) = solve(&normal, &trial, options.ridge);
            if best.as_ref().map_or(true, |(_, s, _)| sse < *s) {
                best = Some((i, sse, b));
            }
        }
        let Some((i, sse, b)) = best else { break };
        if current_sse - sse <= MIN_SSE_GAIN {
            break;
        }
        selected.push(i);
        cols.extend(feature_cols(i));
        current_sse = sse;
        beta = b;
    }

    let per = sample.mode.columns_per_feature();
    let beta_a = (0..selected.len()).map(|r| beta[per * r]).collect();
    let beta_m = if lemon {
        (0..selected.len()).map(|r| beta[2 * r + 1]).collect()
    } else {
        Vec::new()
    };
    SurrogateFit {
        mode: sample.mode,
        degenerate: selected.is_empty(),
        selected,
        beta_a,
        beta_m,
        sse: current_sse,
    }
}

/// `w_i = -beta_A`, `p_i = beta_M` (0 in lime mode) for each selected feature.
pub fn attributions(fit: &SurrogateFit) -> Vec<Attribution> {
    fit.selected
        .iter()
        .enumerate()
        .map(|(r, &feature)| Attribution {
            feature,
            w: -fit.beta_a[r],
            p: fit.beta_m.get(r).copied().unwrap_or(0.0),
        })
        .collect()
}
