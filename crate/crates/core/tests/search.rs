use fairalloc::*;
use proptest::prelude::*;

fn tiny_instance() -> impl Strategy<Value = Instance> {
    (1usize..=4, 1usize..=9).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(1u64..=20, m),
            prop::collection::vec(prop::collection::vec(any::<bool>(), m), n),
        )
            .prop_map(|(values, mask)| {
                let interest = mask
                    .iter()
                    .map(|row| (0..row.len()).filter(|&r| row[r]).collect())
                    .collect();
                Instance::new(values, interest).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 96,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn instance_text_round_trip(inst in tiny_instance()) {
        let again = parse_instance(&write_instance(&inst)).unwrap();
        prop_assert_eq!(again, inst);
    }

    #[test]
    fn solve_meets_its_guarantee(inst in tiny_instance()) {
        let opts = SolveOptions { check_invariants: true, ..SolveOptions::default() };
        let report = solve(&inst, &opts, None).unwrap();
        prop_assert!(report.invariant_failures.is_empty(), "{:?}", report.invariant_failures);
        prop_assert!(verify_allocation(&inst, &report.allocation, report.guaranteed).unwrap());
        let opt = brute_force_opt(&inst).unwrap();
        prop_assert!(report.tau_star >= opt);
    }

    #[test]
    fn probe_at_optimum_succeeds(inst in tiny_instance()) {
        let opt = brute_force_opt(&inst).unwrap();
        let params = Params::default();
        let res = solve_for_tau(&inst, opt, &params, ExtendOptions { check_invariants: true }, None);
        let ok = res.unwrap();
        prop_assert!(ok.invariant_failures.is_empty());
        let threshold = Rational::from_integer(opt as i128) / params.beta;
        prop_assert!(verify_allocation(&inst, &ok.allocation, threshold).unwrap());
    }

    #[test]
    fn minimal_edges_are_minimal(
        inst in tiny_instance(),
        target in 1i128..=60,
    ) {
        let all: Vec<usize> = (0..inst.num_resources()).collect();
        let target = Rational::from_integer(target);
        match build_minimal_thin_edge(0, target, &all, &inst) {
            Some(e) => {
                prop_assert!(is_minimal_edge(&e, target, &inst));
                prop_assert!(Rational::from_integer(e.value as i128) >= target);
            }
            None => prop_assert!(Rational::from_integer(inst.value_sum() as i128) < target),
        }
    }
}

#[test]
fn parallel_probing_is_sound() {
    for seed in 0..30 {
        let inst = generate_random(5, 9, 20, 0.5, seed).unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        for jobs in [1, 2, 4] {
            let opts = SolveOptions {
                jobs,
                ..SolveOptions::default()
            };
            let report = solve(&inst, &opts, None).unwrap();
            assert!(report.tau_star >= opt, "seed {seed} jobs {jobs}");
            assert!(verify_allocation(&inst, &report.allocation, report.guaranteed).unwrap());
        }
    }
}

#[test]
fn alternation_through_a_fat_resource() {
    // Resource 0 is fat; 1 and 2 are thin. Player 1 holds the fat resource
    // and can be satisfied by the thin ones instead, freeing 0 for player 0.
    let inst = Instance::new(vec![2, 1, 1], vec![vec![0], vec![0, 1, 2]]).unwrap();
    let params = Params::new(Rational::from_integer(26));
    let mut m = PartialMatching::new(2, 3);
    m.set_fat(1, 0).unwrap();
    let iedge = build_minimal_thin_edge(1, params.beta_target(), &[1, 2], &inst).unwrap();
    let path = [Node::Player(0), Node::Resource(0), Node::Player(1)];
    alternate_along(&mut m, &path, &iedge, &params, &inst).unwrap();
    assert_eq!(m.fat_resource(0), Some(0));
    assert_eq!(m.fat_resource(1), None);
    assert_eq!(m.thin_edge(1).unwrap().resources, vec![1, 2]);
    assert_eq!(m.fat_count(), 1);
}

/// A two-layer tree that collapses twice in a row; the expected trace was
/// checked by hand and is kept byte-for-byte.
#[test]
fn deep_tree_trace_is_frozen() {
    let inst = parse_instance(include_str!("data/deep_tree.txt")).unwrap();
    let mut events: Vec<TraceEvent> = Vec::new();
    let ok = solve_for_tau(
        &inst,
        27,
        &Params::default(),
        ExtendOptions {
            check_invariants: true,
        },
        Some(&mut events),
    )
    .unwrap();
    assert!(ok.invariant_failures.is_empty());
    assert_eq!(ok.collapses, 6);
    let text: String = events.iter().map(|e| format!("{e}\n")).collect();
    assert_eq!(text, include_str!("data/deep_tree.trace"));
}
