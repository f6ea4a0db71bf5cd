use hrcap::gadgets::{
    build_expansion_gadget, build_reduction_gadget, build_t4_split_gadget, check_normal_form, lemma1_lift,
    project_split, project_village, split_lift, theorem2_lift, Layout, Role,
};
use hrcap::{
    apply_delta, enumerate_weakly_stable, generate, is_stable, parse_document, serialize_document, validate_instance,
    CapacityMode, GenSpec, ListLength,
};

fn smt(n: usize, ties: usize, seed: u64) -> hrcap::Instance {
    generate(&GenSpec {
        resident_ties: ties,
        ..GenSpec::strict(n, n, seed)
    })
    .unwrap()
}

#[test]
fn generated_sources_are_in_normal_form() {
    for seed in 0..20 {
        assert!(check_normal_form(&smt(3, 2, seed)));
    }
}

#[test]
fn village_lifts_project_back() {
    for seed in 0..10 {
        let src = smt(3, 1, seed);
        for build in [build_expansion_gadget, build_reduction_gadget] {
            let out = build(&src, 0).unwrap();
            assert!(validate_instance(&out.instance).is_empty());
            let Layout::Village(layout) = &out.layout else { panic!() };
            for m in enumerate_weakly_stable(&src, 100_000).unwrap() {
                let lifted = if out.instance.capacities()[layout.v1(0, 1)] == 0 {
                    lemma1_lift(&src, &m, layout)
                } else {
                    theorem2_lift(&src, &m, layout)
                };
                let (t, gm) = lifted.unwrap();
                let g = apply_delta(&out.instance, &t).unwrap();
                assert!(is_stable(&g, &gm).unwrap());
                assert_eq!(project_village(layout, &gm), Some(m));
            }
        }
    }
}

#[test]
fn gadget_documents_round_trip_with_roles() {
    // source target 9 scales to n·9 + 2nL
    let out = build_expansion_gadget(&smt(2, 1, 3), 9).unwrap();
    let doc = out.to_document();
    let text = serialize_document(&doc);
    let back = parse_document(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.target, Some(22));
    assert!(text.contains("y r"));
    let roles: Vec<&Role> = out.roles.iter().map(|(_, r)| r).collect();
    assert!(roles.iter().any(|r| matches!(r, Role::X(1))));
}

#[test]
fn split_lifts_round_trip() {
    for seed in 0..30 {
        let spec = GenSpec {
            capacity_mode: CapacityMode::Uniform { lo: 1, hi: 2 },
            hospital_ties: 2,
            list_length: ListLength::Prefix(3),
            ..GenSpec::strict(4, 3, seed)
        };
        let Ok(src) = generate(&spec) else { continue };
        let out = build_t4_split_gadget(&src, 0).unwrap();
        let Layout::Split(layout) = &out.layout else { panic!() };
        for m in enumerate_weakly_stable(&src, 100_000).unwrap() {
            let (t, gm) = split_lift(&src, layout, &m).unwrap();
            let g = apply_delta(&out.instance, &t).unwrap();
            assert!(is_stable(&g, &gm).unwrap(), "seed {seed}");
            assert_eq!(project_split(layout, &gm), m);
        }
    }
}
