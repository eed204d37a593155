mod common;

use std::collections::BTreeSet;

use ddpp_core::bramble::{gen_grid, hitting_path, validate_bramble};
use ddpp_core::weave::{bramble_from_well_linked, Verdict, WeaveConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn done_brambles_are_certified(r in 3usize..6, t in 1usize..3, skip in 0usize..3) {
        let (g, labels) = gen_grid(r).unwrap();
        let p = labels.paths[0].clone();
        let x: BTreeSet<usize> = p.iter().copied().skip(skip).collect();
        if let Verdict::Done(b) = bramble_from_well_linked(&g, &p, &x, t, &WeaveConfig::relaxed()).unwrap() {
            prop_assert!(validate_bramble(&g, &b).is_ok());
            prop_assert!(b.depth() <= 2);
            prop_assert_eq!(b.len(), t);
        }
    }

    #[test]
    fn hitting_path_hits_planted_bags(seed in 0u64..10_000) {
        let (inst, bramble) = common::planted(seed);
        let p = hitting_path(&inst.graph, &bramble).unwrap();
        prop_assert!(inst.graph.is_path(&p));
        for bag in &bramble.bags {
            prop_assert!(p.iter().any(|v| bag.contains(v)));
        }
    }
}

#[test]
fn radial_path_of_j6_yields_bramble() {
    let (g, labels) = gen_grid(6).unwrap();
    let p = labels.paths[0].clone();
    let x: BTreeSet<usize> = p.iter().copied().collect();
    let out = bramble_from_well_linked(&g, &p, &x, 2, &WeaveConfig::relaxed()).unwrap();
    let Verdict::Done(b) = out else { panic!("{out:?}") };
    assert!(validate_bramble(&g, &b).is_ok());
}
