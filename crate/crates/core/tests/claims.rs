use evolvolin_core::oracles::{run_claim_suite, run_lemma1_suite, ClaimId};

#[test]
fn every_claim_holds_on_seeded_instances() {
    for claim in ClaimId::ALL {
        let instances = if claim == ClaimId::Cantaloupe {
            20
        } else {
            100
        };
        let res = run_claim_suite(claim, instances, 2024, 1.0).unwrap();
        assert_eq!(
            res.passed(),
            instances,
            "{claim}: {:?}",
            res.reports().find(|r| !r.passed)
        );
        assert_eq!(res.starved(), 0);
    }
}

#[test]
fn doubled_decrease_is_detected() {
    let res = run_claim_suite(ClaimId::Banana, 200, 2024, 2.0).unwrap();
    assert!(res.failed() > 0);
}

#[test]
fn suites_are_reproducible() {
    let a = run_claim_suite(ClaimId::Date, 5, 9, 1.0).unwrap();
    let b = run_claim_suite(ClaimId::Date, 5, 9, 1.0).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        run_lemma1_suite(20, 9).unwrap(),
        run_lemma1_suite(20, 9).unwrap()
    );
}
