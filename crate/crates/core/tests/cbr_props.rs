mod common;

use proptest::prelude::*;

use common::*;
use ulearn_core::cases::{format_stereotypes, parse_stereotypes, Case, CaseBase, DemotionRule, Solution};
use ulearn_core::context::{aggregate_similarity, validate_instance, ContextTemplate, FacetWeights, RawContext, SimilarityParams};
use ulearn_core::engine::EngineConfig;

fn weights() -> impl Strategy<Value = [f64; 10]> {
    proptest::array::uniform10(0.0f64..1.0).prop_filter("some weight", |w| w.iter().sum::<f64>() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn similarity_is_bounded_and_matches_oracle(seed in any::<u64>(), w in weights()) {
        let mut rng = rng(seed);
        let (a, b) = (Ctx::random(&mut rng), Ctx::random(&mut rng));
        let s = aggregate_similarity(&a.snapshot(), &b.snapshot(), &FacetWeights::new(w).unwrap(), &SimilarityParams::default());
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s - oracle_similarity(&a, &b, &w, 5_000.0)).abs() < 1e-9);
    }

    #[test]
    fn weighting_a_perfect_facet_never_lowers_the_score(seed in any::<u64>(), w in weights(), bump in 0.0f64..5.0) {
        let mut rng = rng(seed);
        let a = Ctx::random(&mut rng);
        let mut b = Ctx::random(&mut rng);
        b.device = a.device;
        let params = SimilarityParams::default();
        let before = aggregate_similarity(&a.snapshot(), &b.snapshot(), &FacetWeights::new(w).unwrap(), &params);
        let mut more = w;
        more[2] += bump;
        let after = aggregate_similarity(&a.snapshot(), &b.snapshot(), &FacetWeights::new(more).unwrap(), &params);
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn retrieval_is_a_sorted_full_scan(seed in any::<u64>(), k in 0usize..12) {
        let mut rng = rng(seed);
        let pool: Vec<Ctx> = (0..15).map(|_| Ctx::random(&mut rng)).collect();
        let mut cb = CaseBase::new();
        for (i, c) in pool.iter().enumerate() {
            cb.add_case(Case::point(format!("c{i:02}"), c.snapshot(), Solution::default())).unwrap();
        }
        for _ in 0..4 {
            cb.record_feedback("c05", 0.0, &DemotionRule::default()).unwrap();
        }
        let q = Ctx::random(&mut rng);
        let got: Vec<(String, f64)> = cb
            .retrieve_k_nearest(&q.snapshot(), &FacetWeights::default(), &SimilarityParams::default(), k)
            .into_iter()
            .map(|r| (r.case.id.clone(), r.similarity))
            .collect();
        let mut want: Vec<(String, f64)> = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 5)
            .map(|(i, c)| (format!("c{i:02}"), oracle_similarity(&q, c, &DEFAULT_WEIGHTS, 5_000.0)))
            .collect();
        want.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        want.truncate(k);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g.1 - w.1).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_is_idempotent(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let t = ContextTemplate::standard();
        let s = Ctx::random(&mut rng).snapshot();
        prop_assert_eq!(validate_instance(&t, &RawContext::from(&s)).unwrap(), s);
    }

    #[test]
    fn feedback_keeps_outcome_in_range(fb in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
        let mut rng = rng(1);
        let mut cb = CaseBase::new();
        cb.add_case(Case::point("x", Ctx::random(&mut rng).snapshot(), Solution::default())).unwrap();
        let mut all = vec![0.5];
        for f in fb {
            let o = cb.record_feedback("x", f, &DemotionRule::default()).unwrap();
            all.push(f);
            prop_assert!((o - all.iter().sum::<f64>() / all.len() as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn config_and_stereotype_files_round_trip() {
    let text = std::fs::read_to_string(fixture("engine.conf")).unwrap();
    let c = EngineConfig::parse(&text).unwrap();
    assert_eq!(c, EngineConfig::default());
    assert_eq!(EngineConfig::parse(&c.to_text()).unwrap(), c);
    let catalog = parse_stereotypes(&std::fs::read_to_string(fixture("stereotypes.jsonl")).unwrap()).unwrap();
    assert_eq!(catalog.len(), 2);
    assert_eq!(parse_stereotypes(&format_stereotypes(&catalog)).unwrap(), catalog);
}
