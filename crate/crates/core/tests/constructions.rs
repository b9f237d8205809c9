use hcpack_core::geometry::verify_bin;
use hcpack_core::languages::{
    build_separated_family, consecutive_classes, count_good_words, warmup_family, BuildMode, CountMode,
    FamilyKind, FamilyOptions, LanguageError,
};
use hcpack_core::online::{
    adversarial_plan, offline_certificate, run_bounded_space, ClassHarmonic, RunOptions, Scale,
    SegmentOrder,
};
use hcpack_core::packing::{build_u, Selection};
use hcpack_core::Rat;
use num_bigint::BigUint;
use proptest::prelude::*;

/// Words over `[k] \ {k-1}` of length `f` with letter `k` somewhere on every set.
fn brute_force(k: u32, f: usize, sets: &[Vec<usize>]) -> u64 {
    let alphabet: Vec<u32> = (1..=k).filter(|&x| x != k - 1).collect();
    let mut word = vec![0usize; f];
    let mut good = 0;
    loop {
        if sets.iter().all(|s| s.iter().any(|&p| alphabet[word[p]] == k)) {
            good += 1;
        }
        let mut i = f;
        loop {
            if i == 0 {
                return good;
            }
            i -= 1;
            word[i] += 1;
            if word[i] < alphabet.len() {
                break;
            }
            word[i] = 0;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inclusion_exclusion_matches_enumeration(
        k in 3u32..7,
        f in 1usize..7,
        masks in prop::collection::vec(1u32..128, 0..5),
    ) {
        let sets: Vec<Vec<usize>> = masks
            .iter()
            .map(|m| (0..f).filter(|p| m & (1 << p) != 0).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        let exact = count_good_words(k, f, &sets, CountMode::exact()).unwrap();
        prop_assert_eq!(exact.exact_value().cloned(), Some(BigUint::from(brute_force(k, f, &sets))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn enumerated_families_certify_and_pack(d in 4usize..9, s in 2u32..5, seed in any::<u64>()) {
        let classes = consecutive_classes(s);
        match build_separated_family(d, &classes, FamilyKind::Consecutive, seed, BuildMode::Enumerate, &FamilyOptions::default()) {
            Ok(fam) => {
                prop_assert!(fam.certify().is_ok());
                let eps = Rat::new(1, (s * s) as i64);
                let u = build_u(&fam, &eps, &Selection::PerClassBudget(16)).unwrap();
                prop_assert!(verify_bin(u.bin()).is_ok());
                prop_assert_eq!(u.weight_by_cubes(), u.weight().clone());
            }
            Err(e) => {
                let expected = matches!(
                    e,
                    LanguageError::FSetBudgetExhausted { .. } | LanguageError::EnumerateCapExceeded { .. }
                );
                prop_assert!(expected, "unexpected error: {}", e);
            }
        }
    }

    #[test]
    fn baseline_never_beats_the_certificate(d in 2usize..4, m in 1u32..4, descending in any::<bool>()) {
        let fam = warmup_family(d).unwrap();
        let kmax = d as i64;
        let u = build_u(&fam, &Rat::new(1, kmax * kmax), &Selection::All).unwrap();
        let order = if descending { SegmentOrder::Descending } else { SegmentOrder::Ascending };
        let plan = adversarial_plan(&u, m, &Scale::Minimal, &order).unwrap();
        prop_assert!(plan.certified_ratio() * Rat::from(2u32) >= plan.weight);
        let inst = plan.instance().unwrap();
        let mut run = run_bounded_space(&mut ClassHarmonic::new(m), &inst, m, RunOptions::default()).unwrap();
        run.report.attach(&plan);
        prop_assert!(run.max_open <= m as usize);
        prop_assert_eq!(run.report.bound_holds(), Some(true));
        prop_assert!(offline_certificate(&u, &plan).unwrap().check(&inst));
    }
}
