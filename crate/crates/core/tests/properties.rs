use hrcap::{
    apply_delta, avg_rank, deferred_acceptance, enumerate_stable, enumerate_weakly_stable, generate, is_stable,
    normalize_instance, parse_document, parse_instance, serialize_document, serialize_instance, solve,
    solve_min_avg_expand, solve_min_avg_reduce, Budget, CapacityMode, Document, GenSpec, ListLength, ProblemKind,
    ProblemSpec, SolverConfig,
};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = GenSpec> {
    (1usize..=5, 1usize..=5, 1u32..=3, any::<u64>(), 0usize..=5, any::<bool>()).prop_map(
        |(nr, nh, hi, seed, k, full)| GenSpec {
            capacity_mode: CapacityMode::Uniform { lo: 1, hi },
            list_length: if full { ListLength::Full } else { ListLength::Prefix(k.clamp(1, nr.max(nh))) },
            ..GenSpec::strict(nr, nh, seed)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn da_is_stable_and_enumerated(spec in spec_strategy()) {
        let inst = generate(&spec).unwrap();
        let m = deferred_acceptance(&inst).unwrap();
        prop_assert!(is_stable(&inst, &m).unwrap());
        prop_assert!(enumerate_stable(&inst, 1_000_000).unwrap().contains(&m));
    }

    #[test]
    fn strict_weak_and_plain_enumeration_agree(spec in spec_strategy()) {
        let inst = generate(&spec).unwrap();
        let mut a = enumerate_stable(&inst, 1_000_000).unwrap();
        let mut b = enumerate_weakly_stable(&inst, 1_000_000).unwrap();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn text_format_round_trips(spec in spec_strategy(), ties in 0usize..=2) {
        let spec = GenSpec { resident_ties: ties.min(spec.num_residents), ..spec };
        let Ok(inst) = generate(&spec) else { return Ok(()) };
        let text = serialize_instance(&inst);
        prop_assert_eq!(parse_instance(&text).unwrap(), inst.clone());
        let mut doc = Document::new(inst);
        doc.target = Some(7);
        doc.budget = Some(2);
        prop_assert_eq!(parse_document(&serialize_document(&doc)).unwrap(), doc);
    }

    #[test]
    fn more_budget_never_hurts(spec in spec_strategy(), b in 0u32..=2) {
        let inst = normalize_instance(&generate(&spec).unwrap());
        let cfg = SolverConfig::default();
        let now = solve_min_avg_expand(&inst, b, &cfg).unwrap();
        let more = solve_min_avg_expand(&inst, b + 1, &cfg).unwrap();
        prop_assert!(more.objective <= now.objective);
        let g = apply_delta(&inst, &more.delta).unwrap();
        prop_assert!(is_stable(&g, &more.matching).unwrap());
        prop_assert_eq!(avg_rank(&g, &more.matching).unwrap(), more.objective);
    }

    #[test]
    fn removal_results_are_stable(spec in spec_strategy(), b in 0u32..=2) {
        let inst = normalize_instance(&generate(&spec).unwrap());
        let cfg = SolverConfig::default();
        let Ok(res) = solve_min_avg_reduce(&inst, b, &cfg) else { return Ok(()) };
        prop_assert_eq!(res.delta.total(), b as u64);
        let g = apply_delta(&inst, &res.delta).unwrap();
        prop_assert!(is_stable(&g, &res.matching).unwrap());
    }

    #[test]
    fn worker_count_does_not_change_results(spec in spec_strategy()) {
        let inst = normalize_instance(&generate(&spec).unwrap());
        let problem = ProblemSpec { kind: ProblemKind::MinAvgExpand, budget: Budget::Global(2), target: None };
        let one = solve(&inst, &problem, &SolverConfig { workers: Some(1), ..SolverConfig::default() }).unwrap();
        let four = solve(&inst, &problem, &SolverConfig { workers: Some(4), ..SolverConfig::default() }).unwrap();
        prop_assert_eq!(one, four);
    }
}
