use specrep_harness::faults::{inject, FaultKind, DEFAULT_DELTA};

#[test]
fn every_fault_class_is_caught_near_its_magnitude() {
    for kind in FaultKind::ALL {
        for seed in 0..6 {
            let o = inject(kind, seed, DEFAULT_DELTA).unwrap();
            let c = o.detected_by.unwrap_or_else(|| panic!("{kind} seed {seed} missed: {:?}", o.checks));
            assert!(!c.pass);
            assert!(c.residual >= DEFAULT_DELTA / 10.0 && c.residual <= DEFAULT_DELTA * 10.0);
        }
    }
}

#[test]
fn fault_names_round_trip() {
    for kind in FaultKind::ALL {
        assert_eq!(kind.name().parse::<FaultKind>().unwrap(), kind);
    }
    assert!("bogus".parse::<FaultKind>().is_err());
}

#[test]
fn detecting_checks_are_the_expected_ones() {
    let name = |k| inject(k, 3, DEFAULT_DELTA).unwrap().detected_by.unwrap().name;
    assert_eq!(name(FaultKind::NonIdempotentProjection), "atom-idempotency");
    assert!(name(FaultKind::BrokenCondition1).starts_with("condition1"));
    assert_eq!(name(FaultKind::NonNormalBlock), "integrability");
    assert_eq!(name(FaultKind::DenormalizedMeasure), "normalization");
}
