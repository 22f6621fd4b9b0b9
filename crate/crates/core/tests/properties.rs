use std::collections::BTreeMap;

use em_explain::data::{tokenize, Attribute, AttributeValue, Location, Record, RecordPair, Side};
use em_explain::evaluation::{cf1, explanation_similarity, CounterfactualMetrics};
use em_explain::explainer::{Entry, Explanation, FeatureRef};
use em_explain::interpretable::{build_space, PerturbationVector, Scope, SpaceOptions, Span, State};
use em_explain::matcher::FnMatcher;
use em_explain::surrogate::{kernel_weight, Mode};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 8] = ["sony", "tv", "46", "lcd", "black", "kdl-46", "the", "x"];

fn value() -> impl Strategy<Value = AttributeValue> {
    prop_oneof![
        1 => Just(AttributeValue::Null),
        1 => prop::sample::select(vec![0.0, 12.49, 47.88, -3.5, 1e6]).prop_map(AttributeValue::Number),
        4 => prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..6)
            .prop_map(|w| AttributeValue::Text(w.join(" "))),
    ]
}

fn record(names: &'static [&'static str]) -> impl Strategy<Value = Record> {
    prop::collection::vec(value(), names.len()).prop_map(move |values| {
        Record::new(
            names
                .iter()
                .zip(values)
                .map(|(n, value)| Attribute {
                    name: n.to_string(),
                    value,
                })
                .collect(),
        )
        .unwrap()
    })
}

fn pair() -> impl Strategy<Value = RecordPair> {
    (record(&["title", "brand", "price"]), record(&["title", "maker"]))
        .prop_filter_map("pair needs an attribute", |(a, b)| RecordPair::new("p", a, b).ok())
}

fn scope() -> impl Strategy<Value = Scope> {
    prop_oneof![Just(Scope::A), Just(Scope::B), Just(Scope::Both)]
}

fn side_tokens(r: &Record) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for a in r.attributes() {
        for t in tokenize(&a.value) {
            *m.entry(t).or_insert(0) += 1;
        }
    }
    m
}

fn entry(side: Side, start: usize, length: usize, w: f64, p: f64) -> Entry {
    Entry {
        feature: FeatureRef {
            index: start,
            side,
            attribute: "title".into(),
            location: Location::AttributeValue,
            span: Span { start, length },
            text: String::new(),
        },
        w,
        p,
    }
}

fn explanation(entries: Vec<Entry>) -> Explanation {
    Explanation {
        pair_id: "p".into(),
        side: Scope::A,
        granularity: 1,
        threshold: 0.5,
        score: 0.7,
        entries,
        cfs_hat: 0.0,
        cfs_actual: 0.0,
        k_g: 0,
        realized_score: 0.7,
        seed: 0,
        mode: Mode::Lemon,
        dim: 10,
        samples: 0,
        d_max: 5,
        name_features: false,
    }
}

fn entries() -> impl Strategy<Value = Vec<Entry>> {
    prop::collection::vec(
        (
            prop_oneof![Just(Side::A), Just(Side::B)],
            0usize..6,
            1usize..4,
            -1.0f64..1.0,
            -1.0f64..1.0,
        )
            .prop_map(|(s, start, len, w, p)| entry(s, start, len, w, p)),
        0..6,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pair_json_round_trip(p in pair()) {
        let json = serde_json::to_string(&p).unwrap();
        let back: RecordPair = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn features_cover_every_token_once(p in pair(), scope in scope(), n in 1usize..9) {
        let space = build_space(&p, scope, SpaceOptions::new(n));
        let mut covered = BTreeMap::new();
        for i in 0..space.dim() {
            prop_assert!(space.feature_tokens(i).len() <= n);
            for t in space.feature_tokens(i) {
                *covered.entry(t.clone()).or_insert(0usize) += 1;
            }
        }
        let mut expected = BTreeMap::new();
        for &side in scope.sides() {
            for (t, c) in side_tokens(p.side(side)) {
                *expected.entry(t).or_insert(0) += c;
            }
        }
        prop_assert_eq!(&covered, &expected);
        prop_assert_eq!(space.is_degenerate(), expected.is_empty());
        prop_assert!(space.dim() >= 1);
    }

    #[test]
    fn all_present_translates_to_original(p in pair(), scope in scope(), n in 1usize..5) {
        let space = build_space(&p, scope, SpaceOptions::new(n));
        let m = FnMatcher::new(|_| 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (t, _) = space.translate(&PerturbationVector::all_present(space.dim()), &m, &mut rng, 64).unwrap();
        prop_assert_eq!(t, p);
    }

    #[test]
    fn removal_drops_exactly_the_feature_tokens(p in pair(), n in 1usize..4, mask in prop::collection::vec(any::<bool>(), 40)) {
        let space = build_space(&p, Scope::A, SpaceOptions::new(n));
        prop_assume!(!space.is_degenerate());
        let mut z = PerturbationVector::all_present(space.dim());
        let mut expected = side_tokens(&p.a);
        for i in 0..space.dim() {
            if mask[i % mask.len()] {
                z.states[i] = State::A;
                for t in space.feature_tokens(i) {
                    *expected.get_mut(t).unwrap() -= 1;
                }
            }
        }
        expected.retain(|_, c| *c > 0);
        let m = FnMatcher::new(|_| 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (t, _) = space.translate(&z, &m, &mut rng, 64).unwrap();
        prop_assert_eq!(side_tokens(&t.a), expected);
        prop_assert_eq!(&t.b, &p.b);
    }

    #[test]
    fn matched_tokens_appear_in_both_records(p in pair(), n in 1usize..4, pick in 0usize..16, seed in 0u64..1000) {
        let space = build_space(&p, Scope::A, SpaceOptions::new(n));
        prop_assume!(!space.is_degenerate());
        let i = pick % space.dim();
        prop_assume!(space.count_injection_targets(i) > 0);
        let mut z = PerturbationVector::all_present(space.dim());
        z.states[i] = State::M;
        let m = FnMatcher::new(|p: &RecordPair| (p.b.tokens().len() as f64 / 50.0).min(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, _) = space.translate(&z, &m, &mut rng, 64).unwrap();
        prop_assert_eq!(&t.a, &p.a);
        let other = side_tokens(&t.b);
        for tok in space.feature_tokens(i) {
            prop_assert!(other.contains_key(tok), "{tok:?} missing from {:?}", t.b);
        }
    }

    #[test]
    fn similarity_symmetric_and_bounded(x in entries(), y in entries()) {
        let (a, b) = (explanation(x), explanation(y));
        let s = explanation_similarity(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - explanation_similarity(&b, &a)).abs() < 1e-12);
        prop_assert!((explanation_similarity(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_decreases_with_distance(d_max in 1usize..60, d in 0usize..200) {
        let k0 = kernel_weight(d, d_max);
        let k1 = kernel_weight(d + 1, d_max);
        prop_assert!(k1 < k0 && k1 > 0.0 && k0 <= 1.0);
    }

    #[test]
    fn cf1_consistent_with_cr_and_cp(pairs in 1usize..600, r in 0usize..600, s in 0usize..600) {
        let recalled = r % (pairs + 1);
        let successful = s % (recalled + 1);
        let m = CounterfactualMetrics::from_counts(pairs, recalled, successful);
        let (cr, cp) = (m.cr.unwrap(), m.cp.unwrap_or(0.0));
        prop_assert!((m.cf1.unwrap() - cf1(cr, cp)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&m.cf1.unwrap()));
    }
}
