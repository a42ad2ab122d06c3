use ddval_ledger::{
    apply_tx, replay, to_fixed, Address, ContentHash, ContractState, Phase, Rejection, SignedTx, Tx, FIXED_POINT,
};
use proptest::prelude::*;

const OWNER: Address = Address(0);
const A: Address = Address(1);
const B: Address = Address(2);
const OUTSIDER: Address = Address(9);

fn h(tag: &str) -> ContentHash {
    ContentHash::of(tag.as_bytes())
}

fn tx(sender: Address, tx: Tx) -> SignedTx {
    SignedTx { sender, tx }
}

fn create(window: u64, max_rounds: u64) -> SignedTx {
    tx(
        OWNER,
        Tx::Create {
            whitelist: vec![A, B],
            model_hash: h("model"),
            window,
            max_rounds,
        },
    )
}

fn submit(sender: Address, round: u64, result: u64) -> SignedTx {
    tx(
        sender,
        Tx::SubmitRound {
            round,
            gradient_hash: h(&format!("{sender}-{round}")),
            test_result: result,
        },
    )
}

fn apply_all(state: ContractState, txs: &[SignedTx]) -> ContractState {
    txs.iter().fold(state, |s, t| {
        apply_tx(&s, t).unwrap_or_else(|r| panic!("{t:?} rejected: {r}"))
    })
}

fn rejects(state: &ContractState, t: SignedTx, expected: Rejection) {
    assert_eq!(apply_tx(state, &t), Err(expected), "{t:?}");
}

fn training_state() -> ContractState {
    apply_all(
        ContractState::default(),
        &[
            create(10, 100),
            tx(OWNER, Tx::Fund { amount: 1000 }),
            tx(A, Tx::SignalReady),
            tx(B, Tx::SignalReady),
        ],
    )
}

/// Constant results with W = 10 leave Training after round 11.
fn valuation_state() -> ContractState {
    let mut s = training_state();
    for round in 1..=11 {
        assert_eq!(s.swarm.phase, Phase::Training, "round {round}");
        s = apply_all(s, &[submit(A, round, 700), submit(B, round, 700)]);
    }
    s
}

fn reported_state(values: Vec<u64>) -> ContractState {
    apply_all(
        valuation_state(),
        &[
            tx(A, Tx::SubmitFeatures { hash: h("fa") }),
            tx(B, Tx::SubmitFeatures { hash: h("fb") }),
            tx(A, Tx::ReportContribution { values: values.clone() }),
            tx(B, Tx::ReportContribution { values }),
        ],
    )
}

#[test]
fn training_ends_one_round_after_the_window() {
    let mut s = training_state();
    for round in 1..=10 {
        s = apply_all(s, &[submit(A, round, 700), submit(B, round, 700)]);
        assert_eq!(s.swarm.phase, Phase::Training);
    }
    s = apply_all(s, &[submit(A, 11, 700)]);
    assert_eq!(s.swarm.phase, Phase::Training);
    s = apply_all(s, &[submit(B, 11, 700)]);
    assert_eq!(s.swarm.phase, Phase::Valuation);
    assert_eq!(s.swarm.round_results.len(), 11);
}

#[test]
fn round_result_is_the_lowest_submission() {
    let s = apply_all(training_state(), &[submit(A, 1, 800), submit(B, 1, 600)]);
    assert_eq!(s.swarm.round_results, vec![600]);
}

#[test]
fn improving_results_run_to_the_cap() {
    let mut s = apply_all(
        ContractState::default(),
        &[create(3, 30), tx(A, Tx::SignalReady), tx(B, Tx::SignalReady)],
    );
    for round in 1..=30u64 {
        assert_eq!(s.swarm.phase, Phase::Training);
        s = apply_all(s, &[submit(A, round, round * 10), submit(B, round, round * 10)]);
    }
    assert_eq!(s.swarm.phase, Phase::Valuation);
    assert_eq!(s.swarm.round_results.len(), 30);
}

#[test]
fn creation_rules() {
    rejects(&ContractState::default(), tx(A, Tx::SignalReady), Rejection::NotCreated);
    rejects(
        &ContractState::default(),
        tx(OWNER, Tx::Fund { amount: 5 }),
        Rejection::NotCreated,
    );
    let s = apply_all(ContractState::default(), &[create(10, 100)]);
    rejects(&s, create(10, 100), Rejection::AlreadyCreated);
    for bad in [
        Tx::Create {
            whitelist: vec![],
            model_hash: h("m"),
            window: 1,
            max_rounds: 1,
        },
        Tx::Create {
            whitelist: vec![A, A],
            model_hash: h("m"),
            window: 1,
            max_rounds: 1,
        },
        Tx::Create {
            whitelist: vec![A],
            model_hash: h("m"),
            window: 0,
            max_rounds: 1,
        },
    ] {
        rejects(&ContractState::default(), tx(OWNER, bad), Rejection::InvalidCreate);
    }
}

#[test]
fn access_control() {
    let setup = apply_all(ContractState::default(), &[create(10, 100)]);
    rejects(&setup, tx(OUTSIDER, Tx::SignalReady), Rejection::NotWhitelisted);
    rejects(&setup, tx(OWNER, Tx::SignalReady), Rejection::NotWhitelisted);
    rejects(&setup, tx(OUTSIDER, Tx::Fund { amount: 5 }), Rejection::NotWhitelisted);
    let training = training_state();
    rejects(&training, submit(OUTSIDER, 1, 1), Rejection::NotWhitelisted);
    let valuation = valuation_state();
    rejects(
        &valuation,
        tx(OUTSIDER, Tx::SubmitFeatures { hash: h("x") }),
        Rejection::NotWhitelisted,
    );
    rejects(
        &valuation,
        tx(OUTSIDER, Tx::ReportContribution { values: vec![0, 0] }),
        Rejection::NotWhitelisted,
    );
    let reported = reported_state(vec![1, 1]);
    rejects(&reported, tx(OUTSIDER, Tx::Payout), Rejection::NotWhitelisted);
}

#[test]
fn readiness_rules() {
    let s = apply_all(ContractState::default(), &[create(10, 100), tx(A, Tx::SignalReady)]);
    assert_eq!(s.swarm.phase, Phase::Setup);
    rejects(&s, tx(A, Tx::SignalReady), Rejection::AlreadyReady);
    rejects(&s, submit(A, 1, 1), Rejection::WrongPhase(Phase::Setup));
    rejects(
        &training_state(),
        tx(A, Tx::SignalReady),
        Rejection::WrongPhase(Phase::Training),
    );
}

#[test]
fn round_submission_rules() {
    let s = apply_all(training_state(), &[submit(A, 1, 5)]);
    rejects(&s, submit(A, 1, 6), Rejection::DuplicateRound);
    rejects(&s, submit(B, 2, 6), Rejection::WrongRound { expected: 1, found: 2 });
    let s = apply_all(s, &[submit(B, 1, 5)]);
    rejects(&s, submit(B, 1, 5), Rejection::DuplicateRound);
    rejects(&s, submit(A, 3, 5), Rejection::WrongRound { expected: 2, found: 3 });
}

#[test]
fn phase_safety() {
    let training = training_state();
    rejects(
        &training,
        tx(A, Tx::SubmitFeatures { hash: h("f") }),
        Rejection::WrongPhase(Phase::Training),
    );
    rejects(
        &training,
        tx(A, Tx::ReportContribution { values: vec![0, 0] }),
        Rejection::WrongPhase(Phase::Training),
    );
    let setup = apply_all(ContractState::default(), &[create(10, 100)]);
    rejects(
        &setup,
        tx(A, Tx::ReportContribution { values: vec![0, 0] }),
        Rejection::WrongPhase(Phase::Setup),
    );
    rejects(&training, tx(OWNER, Tx::Payout), Rejection::WrongPhase(Phase::Training));

    let valuation = valuation_state();
    rejects(&valuation, submit(A, 12, 1), Rejection::WrongPhase(Phase::Valuation));
    let finished = apply_all(reported_state(vec![1, 1]), &[tx(OWNER, Tx::Payout)]);
    assert_eq!(finished.swarm.phase, Phase::Finished);
    rejects(&finished, submit(A, 12, 1), Rejection::WrongPhase(Phase::Finished));
    rejects(
        &finished,
        tx(A, Tx::ReportContribution { values: vec![1, 1] }),
        Rejection::WrongPhase(Phase::Finished),
    );
}

#[test]
fn valuation_rules() {
    let s = valuation_state();
    rejects(
        &s,
        tx(A, Tx::ReportContribution { values: vec![1, 1] }),
        Rejection::FeaturesIncomplete,
    );
    let s = apply_all(s, &[tx(A, Tx::SubmitFeatures { hash: h("fa") })]);
    rejects(
        &s,
        tx(A, Tx::SubmitFeatures { hash: h("fa2") }),
        Rejection::DuplicateFeatures,
    );
    let s = apply_all(s, &[tx(B, Tx::SubmitFeatures { hash: h("fb") })]);
    rejects(
        &s,
        tx(A, Tx::ReportContribution { values: vec![1] }),
        Rejection::WrongReportLength { expected: 2, found: 1 },
    );
    rejects(
        &s,
        tx(
            A,
            Tx::ReportContribution {
                values: vec![FIXED_POINT / 4, FIXED_POINT / 4 + 1],
            },
        ),
        Rejection::ExceedsCap,
    );
    rejects(&s, tx(A, Tx::Payout), Rejection::MissingReports);
    let s = apply_all(s, &[tx(A, Tx::ReportContribution { values: vec![3, 4] })]);
    rejects(
        &s,
        tx(A, Tx::ReportContribution { values: vec![3, 4] }),
        Rejection::DuplicateReport,
    );
    rejects(
        &s,
        tx(B, Tx::ReportContribution { values: vec![3, 5] }),
        Rejection::ReportMismatch,
    );
    rejects(&s, tx(OWNER, Tx::Payout), Rejection::MissingReports);
}

#[test]
fn payout_settles_once_and_conserves() {
    let s = reported_state(vec![to_fixed(0.2), to_fixed(0.1)]);
    rejects(&s, tx(OWNER, Tx::Fund { amount: 0 }), Rejection::InvalidAmount);
    rejects(&s, tx(OWNER, Tx::Fund { amount: u64::MAX }), Rejection::InvalidAmount);
    let paid = apply_all(s, &[tx(OWNER, Tx::Payout)]);
    assert_eq!(paid.token.balances[&A], 400);
    assert_eq!(paid.token.balances[&B], 200);
    assert_eq!(paid.token.balances[&OWNER], 400);
    assert_eq!(paid.token.escrow, 0);
    assert!(paid.token.conserved());
    rejects(&paid, tx(OWNER, Tx::Payout), Rejection::DoublePayout);
    rejects(&paid, tx(A, Tx::Payout), Rejection::DoublePayout);
    rejects(&paid, tx(OWNER, Tx::Fund { amount: 1 }), Rejection::DoublePayout);
}

#[test]
fn rejected_transactions_change_nothing() {
    let s = valuation_state();
    let before = serde_json::to_vec(&s).unwrap();
    for t in [submit(A, 12, 1), tx(OUTSIDER, Tx::Payout), tx(A, Tx::SignalReady)] {
        assert!(apply_tx(&s, &t).is_err());
        assert_eq!(serde_json::to_vec(&s).unwrap(), before);
    }
}

fn happy_path() -> Vec<SignedTx> {
    let mut log = vec![
        create(2, 6),
        tx(OWNER, Tx::Fund { amount: 999 }),
        tx(A, Tx::SignalReady),
        tx(B, Tx::SignalReady),
    ];
    for round in 1..=3 {
        log.push(submit(A, round, 500));
        log.push(submit(B, round, 500));
    }
    log.extend([
        tx(A, Tx::SubmitFeatures { hash: h("fa") }),
        tx(B, Tx::SubmitFeatures { hash: h("fb") }),
        tx(
            A,
            Tx::ReportContribution {
                values: vec![to_fixed(0.13), to_fixed(0.21)],
            },
        ),
        tx(
            B,
            Tx::ReportContribution {
                values: vec![to_fixed(0.13), to_fixed(0.21)],
            },
        ),
        tx(B, Tx::Fund { amount: 17 }),
        tx(OWNER, Tx::Payout),
    ]);
    log
}

fn any_tx() -> impl Strategy<Value = SignedTx> {
    let sender = (0u64..5).prop_map(Address);
    let body = prop_oneof![
        Just(Tx::SignalReady),
        (1u64..6, 0u64..1000).prop_map(|(round, r)| Tx::SubmitRound {
            round,
            gradient_hash: ContentHash::of(&round.to_le_bytes()),
            test_result: r,
        }),
        (0u8..3).prop_map(|b| Tx::SubmitFeatures {
            hash: ContentHash::of(&[b])
        }),
        proptest::collection::vec(0u64..FIXED_POINT / 3, 0..4).prop_map(|values| Tx::ReportContribution { values }),
        (0u64..500).prop_map(|amount| Tx::Fund { amount }),
        Just(Tx::Payout),
        Just(Tx::Create {
            whitelist: vec![Address(3)],
            model_hash: ContentHash::of(b"other"),
            window: 1,
            max_rounds: 1,
        }),
    ];
    (sender, body).prop_map(|(sender, tx)| SignedTx { sender, tx })
}

fn noisy_log() -> impl Strategy<Value = Vec<SignedTx>> {
    proptest::collection::vec((any_tx(), 0usize..20), 0..40).prop_map(|noise| {
        let mut log = happy_path();
        for (t, at) in noise {
            let at = at.min(log.len());
            log.insert(at, t);
        }
        log
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ledger_invariants_hold_after_every_transaction(log in noisy_log()) {
        let mut state = ContractState::default();
        for t in &log {
            let outcome = apply_tx(&state, t);
            let created = state.swarm.owner.is_some();
            let outsider = !state.swarm.whitelist.contains(&t.sender) && Some(t.sender) != state.swarm.owner;
            if let Ok(next) = &outcome {
                if created && outsider {
                    prop_assert!(false, "outsider {:?} changed state", t);
                }
                prop_assert!(next.swarm.phase >= state.swarm.phase);
                match t.tx {
                    Tx::SubmitRound { .. } => prop_assert_eq!(state.swarm.phase, Phase::Training),
                    Tx::ReportContribution { .. } | Tx::SubmitFeatures { .. } => {
                        prop_assert_eq!(state.swarm.phase, Phase::Valuation)
                    }
                    _ => {}
                }
                state = next.clone();
            }
            prop_assert!(state.token.conserved());
        }
    }

    #[test]
    fn replicas_replaying_one_log_agree_bitwise(log in noisy_log()) {
        let a = serde_json::to_vec(&replay(&log)).unwrap();
        let b = serde_json::to_vec(&replay(&log)).unwrap();
        prop_assert_eq!(a, b);
    }
}
