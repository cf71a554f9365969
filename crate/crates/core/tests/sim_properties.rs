use escalation::extension::{DoseRule, RuleKind};
use escalation::order::SafetyParams;
use escalation::sim::{
    replicate, replicate_results, replicate_rng, run_replicate, run_trial, sample_arrivals, LogKind, Outcome,
    Scenario, TrialResult,
};
use escalation::tally::Tally;
use proptest::prelude::*;

fn scenario(kind: RuleKind, seed: u64) -> Scenario {
    let params = SafetyParams::new(3, 2).unwrap();
    Scenario {
        doses: 3,
        mtd_mean: 3.0,
        mtd_sd: Scenario::default_mtd_sd(),
        arrival_rate: 2.5,
        participants: 40,
        titration_wait: 1.0,
        rule: DoseRule::for_three_plus_three(kind, params).unwrap(),
        reps: 20,
        seed,
    }
}

fn kinds() -> impl Strategy<Value = RuleKind> {
    prop_oneof![Just(RuleKind::Kan), Just(RuleKind::Galois)]
}

/// Each participant's contribution to the final tally, from their dose
/// history alone.
fn ledger(result: &TrialResult, dims: usize) -> Tally {
    let mut tally = Tally::zero(dims).unwrap();
    for p in &result.participants {
        let Some(last) = p.doses.last() else { continue };
        match last.outcome {
            Outcome::Tolerated => tally.record(last.dose, 0, 1).unwrap(),
            Outcome::Toxicity => {
                tally.record(last.dose, 1, 1).unwrap();
                if p.doses.len() > 1 {
                    tally.record(last.dose - 1, 0, 1).unwrap();
                }
            }
        }
    }
    tally
}

fn check_trial(s: &Scenario, r: &TrialResult) -> Result<(), TestCaseError> {
    let dosed = r.enrolled() as u32;
    let toxic = r.participants.iter().filter(|p| p.doses.last().is_some_and(|a| a.outcome == Outcome::Toxicity)).count() as u32;
    let titration_tox = r
        .participants
        .iter()
        .filter(|p| p.doses.len() > 1 && p.doses.last().unwrap().outcome == Outcome::Toxicity)
        .count() as u32;
    prop_assert_eq!(r.final_tally.total_n(), dosed + titration_tox);
    prop_assert_eq!(r.final_tally.total_tox(), toxic);
    prop_assert_eq!(&ledger(r, s.doses), &r.final_tally);
    prop_assert_eq!(&r.replay_tally().unwrap(), &r.final_tally);
    prop_assert_eq!(dosed as usize + r.queue_leftover, s.participants);

    for p in &r.participants {
        for w in p.doses.windows(2) {
            prop_assert_eq!(w[1].dose, w[0].dose + 1);
            prop_assert_eq!(w[0].outcome, Outcome::Tolerated);
            prop_assert!((w[1].start - (w[0].resolve + s.titration_wait)).abs() < 1e-12);
        }
        for a in &p.doses {
            prop_assert!(a.dose >= 1 && a.dose <= s.doses);
            prop_assert_eq!(a.outcome == Outcome::Toxicity, a.dose as f64 > p.mtd);
            prop_assert!(a.resolve >= a.start);
        }
        if let Some(first) = p.doses.first() {
            prop_assert!(first.start >= p.arrival);
        }
    }

    // Dequeues follow arrival order.
    let enqueued: Vec<usize> = r.events.iter().filter(|e| e.kind == LogKind::Enqueue).filter_map(|e| e.participant).collect();
    let dequeued: Vec<usize> = r.events.iter().filter(|e| e.kind == LogKind::Dequeue).filter_map(|e| e.participant).collect();
    prop_assert_eq!(&enqueued[..dequeued.len()], &dequeued[..]);

    // Every enrollment decision is no bolder than the resolved tally alone
    // would allow.
    let mut tally = Tally::zero(s.doses).unwrap();
    let mut last_ok: Vec<Option<usize>> = vec![None; r.participants.len()];
    for e in &r.events {
        match (e.kind, e.participant, e.dose) {
            (LogKind::Tolerated, Some(p), Some(d)) => {
                if let Some(prev) = last_ok[p] {
                    tally.retract(prev, 0, 1).unwrap();
                }
                tally.record(d, 0, 1).unwrap();
                last_ok[p] = Some(d);
            }
            (LogKind::Toxicity, Some(_), Some(d)) => tally.record(d, 1, 1).unwrap(),
            (LogKind::Enroll | LogKind::Dequeue, Some(_), Some(d)) => {
                prop_assert!(d >= 1);
                prop_assert!(d as u32 <= s.rule.recommend(&tally).unwrap());
            }
            _ => {}
        }
    }
    let expected = if r.queue_leftover > 0 { 0 } else { s.rule.recommend(&r.final_tally).unwrap() };
    prop_assert_eq!(r.final_rec, expected);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn trial_invariants(kind in kinds(), seed in any::<u64>(), wait in prop_oneof![Just(1.0), 0.0f64..4.0], rate in 0.5f64..5.0) {
        let mut s = scenario(kind, seed);
        s.titration_wait = wait;
        s.arrival_rate = rate;
        let r = run_trial(&s, &mut replicate_rng(seed, 0)).unwrap();
        check_trial(&s, &r)?;
    }

    #[test]
    fn no_titration_with_infinite_wait(kind in kinds(), seed in any::<u64>()) {
        let mut s = scenario(kind, seed);
        s.titration_wait = f64::INFINITY;
        let r = run_trial(&s, &mut replicate_rng(seed, 3)).unwrap();
        prop_assert_eq!(r.titrations(), 0);
        prop_assert!(r.events.iter().all(|e| e.kind != LogKind::Updose));
        check_trial(&s, &r)?;
    }
}

#[test]
fn replicates_are_reproducible_and_thread_independent() {
    for kind in [RuleKind::Kan, RuleKind::Galois] {
        let s = scenario(kind, 7);
        let parallel = replicate_results(&s).unwrap();
        let serial: Vec<TrialResult> = (0..s.reps).map(|i| run_replicate(&s, i).unwrap()).collect();
        assert_eq!(parallel, serial);
        assert_eq!(replicate(&s).unwrap(), replicate(&s).unwrap());
        let other = replicate(&scenario(kind, 8)).unwrap();
        assert_ne!(replicate(&s).unwrap().rec_freq, other.rec_freq);
    }
}

#[test]
fn mean_arrival_gap_matches_rate() {
    let mut rng = replicate_rng(11, 0);
    let n = 200_000;
    let times = sample_arrivals(2.5, n, &mut rng).unwrap();
    assert_eq!(times[0], 0.0);
    assert!(times.windows(2).all(|w| w[1] >= w[0]));
    let mean_gap = times[n - 1] / (n - 1) as f64;
    assert!((mean_gap - 0.4).abs() < 0.004, "mean gap {mean_gap}");
}

#[test]
fn summary_frequencies_sum_to_one() {
    let s = scenario(RuleKind::Galois, 3);
    let sum = replicate(&s).unwrap();
    assert_eq!(sum.rec_freq.len(), 4);
    assert!((sum.rec_freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(sum.reps, 20);
}
