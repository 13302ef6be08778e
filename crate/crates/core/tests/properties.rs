mod common;

use proptest::prelude::*;
use serpscale::dominance::{rule1_non_inferior, rule2_non_inferior};
use serpscale::metrics::{self, Discount, Metric};
use serpscale::trec::{self, EvalOptions, QrelsOptions};
use serpscale::{Depth, GainMap, GradeCensus, GradeScale, MetricSpec, Rational, ScoreValue, Serp};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn gain_maps() -> impl Strategy<Value = GainMap> {
    prop_oneof![
        Just(GainMap::binary()),
        Just(GainMap::four_level()),
        Just(GainMap::linear(GradeScale::numbered(3).unwrap())),
        Just(GainMap::exponential(GradeScale::numbered(5).unwrap())),
    ]
}

/// A SERP over the map's grades with a census that can supply it plus some extra documents.
fn scored_case() -> impl Strategy<Value = (GainMap, Serp, GradeCensus, usize)> {
    gain_maps().prop_flat_map(|map| {
        let grades = map.scale().size() as u8;
        (
            Just(map),
            prop::collection::vec(0..grades, 1..14),
            prop::collection::vec(0u64..4, grades as usize),
            1usize..16,
        )
            .prop_map(|(map, grades, extra, k)| {
                let serp = Serp::new(grades).unwrap();
                let mut counts = GradeCensus::of_serp(&serp, map.scale().size()).counts().to_vec();
                for (c, e) in counts.iter_mut().zip(extra) {
                    *c += e;
                }
                counts[1] += 1;
                (map, serp, GradeCensus::new(counts), k)
            })
    })
}

fn specs(k: usize) -> Vec<MetricSpec> {
    let d = Depth::At(k);
    vec![
        MetricSpec::precision(k),
        MetricSpec::rr(d),
        MetricSpec::r1(d),
        MetricSpec::rbp_half(d),
        MetricSpec::new(Metric::Rbp { persistence: q(9, 10) }, Depth::Full).unwrap(),
        MetricSpec::ap(d),
        MetricSpec::ap(Depth::Full),
        MetricSpec::new(Metric::Dcg(Discount::Microsoft), d).unwrap(),
        MetricSpec::ndcg(d),
        MetricSpec::new(Metric::Ndcg(Discount::JarvelinKekalainen { base: 3 }), d).unwrap(),
        MetricSpec::err(d),
    ]
}

proptest! {
    #[test]
    fn bounded_metrics_stay_in_unit_interval((map, serp, census, k) in scored_case()) {
        for spec in specs(k) {
            if matches!(spec.metric(), Metric::FirstRelevantRank | Metric::Dcg(_)) {
                continue;
            }
            let v = spec.value(&serp, &map, &census).unwrap();
            prop_assert!(v >= ScoreValue::integer(0) && v <= ScoreValue::integer(1), "{} = {}", spec, v);
        }
    }

    #[test]
    fn raising_a_grade_never_hurts((map, serp, census, k) in scored_case(), pos in any::<prop::sample::Index>()) {
        let pos = pos.index(serp.len());
        let top = map.scale().size() as u8 - 1;
        prop_assume!(serp.grades()[pos] < top);
        let raised = serp.with_grade(pos, serp.grades()[pos] + 1);
        let mut counts = census.counts().to_vec();
        counts[usize::from(serp.grades()[pos]) + 1] += 1;
        let census = GradeCensus::new(counts);
        prop_assert!(rule1_non_inferior(&raised, &serp).unwrap());
        for spec in specs(k) {
            let (a, b) = (spec.value(&raised, &map, &census).unwrap(), spec.value(&serp, &map, &census).unwrap());
            if spec.higher_is_better() {
                prop_assert!(a >= b, "{}", spec);
            } else {
                prop_assert!(a <= b, "{}", spec);
            }
        }
    }

    #[test]
    fn err_is_rr_for_binary_gains(grades in prop::collection::vec(0u8..2, 1..40)) {
        let serp = Serp::new(grades).unwrap();
        let k = serp.len();
        prop_assert_eq!(
            metrics::expected_reciprocal_rank(&serp, &GainMap::binary(), k).unwrap(),
            metrics::reciprocal_rank(&serp, k)
        );
    }

    #[test]
    fn dcg_is_linear_in_gains((map, serp, _census, k) in scored_case(), num in 1i64..8) {
        let scale = q(num, 8);
        let scaled = GainMap::new(map.scale().clone(), map.gains().iter().map(|g| g * &scale).collect());
        prop_assume!(scaled.is_ok());
        let scaled = scaled.unwrap();
        for discount in [Discount::Microsoft, Discount::JarvelinKekalainen { base: 2 }] {
            let base = metrics::dcg(&serp, &map, discount, k).unwrap();
            let got = metrics::dcg(&serp, &scaled, discount, k).unwrap();
            let expected = match &base {
                ScoreValue::Exact(v) => ScoreValue::exact(v * &scale),
                ScoreValue::Log(l) => ScoreValue::log_ratio(l.gain().scaled(&scale), None),
            };
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn rule2_matches_swap_closure(a in prop::collection::vec(0u8..3, 1..8), seed in any::<u64>()) {
        let reachable = common::swap_closure(&a);
        // a pseudo-random rearrangement of the same grades
        let mut b = a.clone();
        let mut state = seed | 1;
        for i in (1..b.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            b.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let closed = rule2_non_inferior(&Serp::new(a.clone()).unwrap(), &Serp::new(b.clone()).unwrap()).unwrap();
        prop_assert_eq!(closed, reachable.contains(&b));
    }

    #[test]
    fn qrels_round_trip(records in prop::collection::btree_map((0u8..5, 0u16..40), 0u8..4, 0..60)) {
        let text: String = records
            .iter()
            .map(|((t, d), g)| format!("t{t} 0 doc{d} {g}\n"))
            .collect();
        let parsed = trec::parse_qrels(text.as_bytes(), QrelsOptions::default()).unwrap();
        let again = trec::parse_qrels(trec::write_qrels(&parsed).as_bytes(), QrelsOptions::default()).unwrap();
        prop_assert_eq!(parsed, again);
    }

    #[test]
    fn run_round_trip(records in prop::collection::btree_map((0u8..4, 0u16..30), (1i64..50, 0u32..6), 0..60)) {
        let text: String = records
            .iter()
            .map(|((t, d), (rank, score))| format!("t{t} Q0 doc{d} {rank} {score}.5 sys\n"))
            .collect();
        let parsed = trec::parse_run(text.as_bytes()).unwrap();
        let again = trec::parse_run(trec::write_run(&parsed).as_bytes()).unwrap();
        prop_assert_eq!(parsed, again);
    }

    #[test]
    fn evaluate_ignores_record_order(
        grades in prop::collection::vec(0u8..3, 12),
        order in Just((0..12usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let qrels: Vec<String> = grades
            .iter()
            .enumerate()
            .map(|(i, g)| format!("t{} 0 d{i} {g}\n", i % 3))
            .collect();
        let run: Vec<String> = (0..12).map(|i| format!("t{} Q0 d{i} {} {} s\n", i % 3, i / 3 + 1, 12 - i)).collect();
        let join = |lines: &[String], order: &[usize]| -> String { order.iter().map(|&i| lines[i].as_str()).collect() };
        let identity: Vec<usize> = (0..12).collect();
        let map = GainMap::linear(GradeScale::numbered(3).unwrap());
        let specs = [MetricSpec::ap(Depth::Full), MetricSpec::ndcg(Depth::At(3)), MetricSpec::rbp_half(Depth::Full)];
        let report = |q: &str, r: &str| {
            let qrels = trec::parse_qrels(q.as_bytes(), QrelsOptions::default()).unwrap();
            let runs = trec::parse_run(r.as_bytes()).unwrap();
            trec::evaluate(&runs, &qrels, &map, &specs, &EvalOptions::default()).unwrap().to_tsv(6)
        };
        prop_assert_eq!(
            report(&join(&qrels, &identity), &join(&run, &identity)),
            report(&join(&qrels, &order), &join(&run, &order))
        );
    }
}
