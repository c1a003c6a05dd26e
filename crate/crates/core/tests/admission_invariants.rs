mod common;

use common::{is_integral, loop_flow, plan_violations, random_instance, TOL};
use proptest::prelude::*;
use vlbcac::admission::plan_admission;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solved_plans_respect_every_invariant(seed in any::<u64>()) {
        let inst = random_instance(seed);
        let out = plan_admission(&inst.topology, &inst.offered, &inst.resources, &inst.weights).unwrap();
        let bad = plan_violations(&inst, &out.exact, TOL);
        prop_assert!(bad.is_empty(), "LP plan: {bad:?}");
        prop_assert!(loop_flow(&out.exact, &inst.topology) <= TOL);

        let bad = plan_violations(&inst, &out.floored, TOL);
        prop_assert!(bad.is_empty(), "floored plan: {bad:?}");
        prop_assert!(is_integral(&out.floored));
        prop_assert!(out.floored.total_admitted() <= out.exact.total_admitted() + TOL);
        for i in 0..inst.topology.n() {
            for j in 0..inst.topology.n() {
                prop_assert!(out.floored.admitted.get(i, j) <= inst.offered.get(i, j).floor());
            }
        }
    }

    #[test]
    fn more_capacity_never_admits_less(seed in any::<u64>(), extra in 0.0f64..50.0) {
        let inst = random_instance(seed);
        let mut richer = inst.resources.clone();
        richer.cpu.iter_mut().for_each(|c| *c += extra);
        richer.mem.iter_mut().for_each(|m| *m += extra);
        let mut max_admit = inst.weights;
        max_admit.phi = 0.0;
        let base = plan_admission(&inst.topology, &inst.offered, &inst.resources, &max_admit).unwrap();
        let more = plan_admission(&inst.topology, &inst.offered, &richer, &max_admit).unwrap();
        prop_assert!(more.exact.total_admitted() >= base.exact.total_admitted() - TOL);
    }
}

#[test]
fn zero_capacity_admits_nothing() {
    let mut inst = random_instance(7);
    inst.resources.cpu.iter_mut().for_each(|c| *c = 0.0);
    let out = plan_admission(
        &inst.topology,
        &inst.offered,
        &inst.resources,
        &inst.weights,
    )
    .unwrap();
    assert!(out.exact.total_admitted() <= TOL);
    assert_eq!(out.floored.total_admitted(), 0.0);
}
