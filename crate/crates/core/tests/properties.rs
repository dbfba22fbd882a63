use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ratsim::config::{Config, PAPER_200, PAPER_600};
use ratsim::design_tuning::min_attention_probability;
use ratsim::economics::{
    expected_reward_share, expected_u_p, expected_u_v, payoff_lookup, u_p_fraud, u_v_offline,
};
use ratsim::equilibrium::{
    check_ideal_security, find_symmetric_equilibria, proposer_utility_slope,
    validator_utility_slope, verify_equilibrium,
};
use ratsim::montecarlo::{simulate_replicas, table_expectation};
use ratsim::protocol_engine::{run_epoch, trigger_decision, EngineSettings};
use ratsim::state_commitment::{build_commitment, verify_solution, AttentionSolution};
use ratsim::{
    run_sweep, simulate, ContractState, EquilibriumKind, HashAlgorithm, L2State, Params, Profile,
    ProposerAction, RewardSplit, SimConfig, Sweep, TestOutcome, ThreatModel,
};

fn money() -> impl Strategy<Value = f64> {
    0.0..5.0
}

fn prob() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0]
}

fn model() -> impl Strategy<Value = ThreatModel> {
    prop_oneof![Just(ThreatModel::Baseline), Just(ThreatModel::Evasion)]
}

prop_compose! {
    fn params()(
        f_v in money(), c_m in money(), r_v in money(), c_off in money(),
        c_fail in money(), f_p in money(), c_fraud in money(), r_fraud in money(),
        n in 1u32..=50, pi_a in prob(), d_v in money(),
    ) -> Params {
        Params { f_v, c_m, r_v, c_off, c_fail, f_p, c_fraud, r_fraud, n, pi_a, d_v }
    }
}

prop_compose! {
    fn wide_params()(
        f_v in 0.0..1e3, c_m in 0.0..1e3, r_v in 0.0..1e4, c_off in 0.0..1e5,
        c_fail in 0.0..1e4, f_p in 0.0..1e3, c_fraud in 0.0..1e4, r_fraud in 0.0..1e4,
        n in 1u32..=1000, pi_a in prob(), d_v in 0.0..1e5,
    ) -> Params {
        Params { f_v, c_m, r_v, c_off, c_fail, f_p, c_fraud, r_fraud, n, pi_a, d_v }
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

prop_compose! {
    fn strict_params()(
        base in params(), pi_a in 0.05..=1.0, c_off in 1.0..1000.0, frac in 0.0..0.99,
        f_p in 0.01..5.0,
    ) -> Params {
        let c_m = frac * pi_a / f64::from(base.n) * c_off;
        Params { pi_a, c_off, d_v: c_off, c_m, f_p, ..base }
    }
}

fn leaves() -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(any::<u8>(), 0..40), 2..20)
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn expected_u_v_is_affine_in_own_q(p in params(), pi_p in prob(), pi_bar in prob(), m in model()) {
        let h = 1e-6;
        for q in [0.25, 0.5, 0.75] {
            let fd = (expected_u_v(&p, q + h, pi_p, pi_bar, m) - expected_u_v(&p, q - h, pi_p, pi_bar, m)) / (2.0 * h);
            let slope = validator_utility_slope(&p, pi_p, pi_bar, m);
            prop_assert!((fd - slope).abs() <= 1e-9, "fd {fd} slope {slope}");
        }
        let mid = expected_u_v(&p, 0.5, pi_p, pi_bar, m);
        let ends = 0.5 * (expected_u_v(&p, 0.0, pi_p, pi_bar, m) + expected_u_v(&p, 1.0, pi_p, pi_bar, m));
        prop_assert!((mid - ends).abs() <= 1e-12 * mid.abs().max(1.0));
    }

    #[test]
    fn proposer_slope_matches_differences(p in params(), pi_v in prob(), x in 0.01..0.99) {
        let h = 1e-6;
        let fd = (expected_u_p(&p, x + h, pi_v) - expected_u_p(&p, x - h, pi_v)) / (2.0 * h);
        prop_assert!((fd - proposer_utility_slope(&p, pi_v)).abs() <= 1e-9);
        prop_assert_eq!(proposer_utility_slope(&p, 1.0), p.f_p + p.c_fraud);
    }

    #[test]
    fn slope_at_honest_proposer_is_closed_form(p in wide_params(), pi_bar in prob(), m in model()) {
        let slope = validator_utility_slope(&p, 1.0, pi_bar, m);
        let closed = p.pi_a / f64::from(p.n) * p.c_off - p.c_m;
        prop_assert!((slope - closed).abs() <= 1e-12 * closed.abs().max(1.0));
    }

    #[test]
    fn models_agree_for_honest_proposer(p in wide_params(), pi_bar in prob()) {
        prop_assert_eq!(
            u_v_offline(&p, 1.0, pi_bar, ThreatModel::Baseline),
            u_v_offline(&p, 1.0, pi_bar, ThreatModel::Evasion)
        );
    }

    #[test]
    fn fraud_payoff_falls_with_attention(p in params(), a in prob(), b in prob()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(u_p_fraud(&p, hi) <= u_p_fraud(&p, lo) + 1e-12);
    }

    #[test]
    fn condition_check_ignores_model(p in wide_params()) {
        let base = check_ideal_security(&p, ThreatModel::Baseline);
        let evasion = check_ideal_security(&p, ThreatModel::Evasion);
        prop_assert_eq!(format!("{base:?}"), format!("{evasion:?}"));
        prop_assert_eq!(base, evasion);
    }

    #[test]
    fn min_attention_scales(c_m in 0.0..10.0, d_v in 1.0..1e4, n in 1u32..500, k in 0.01..100.0) {
        let a = min_attention_probability::<f64>(c_m, n, d_v).unwrap();
        let b = min_attention_probability::<f64>(k * c_m, n, k * d_v).unwrap();
        prop_assert!((a.pi_a - b.pi_a).abs() <= 1e-12 * a.pi_a.max(1e-300) + 1e-300);
    }

    #[test]
    fn commitment_round_trip(leaves in leaves(), block in any::<u64>()) {
        let state = L2State::new(leaves, block).unwrap();
        let c = build_commitment(&state).unwrap();
        prop_assert!(verify_solution(&c.sigma, &c.solution()));
        prop_assert_eq!(build_commitment(&state.clone()).unwrap(), c);
    }

    #[test]
    fn commitment_binds_leaves(a in leaves(), b in leaves()) {
        prop_assume!(a != b);
        let sa = build_commitment(&L2State::new(a, 0).unwrap()).unwrap().sigma;
        let sb = build_commitment(&L2State::new(b, 0).unwrap()).unwrap().sigma;
        prop_assert_ne!(sa, sb);
    }

    #[test]
    fn single_bit_perturbation_fails(leaves in leaves(), bit in 0usize..512) {
        let c = build_commitment(&L2State::new(leaves, 0).unwrap()).unwrap();
        let sol = c.solution();
        let bad = if bit < 256 {
            AttentionSolution { left: sol.left.flip_bit(bit), ..sol }
        } else {
            AttentionSolution { right: sol.right.flip_bit(bit - 256), ..sol }
        };
        prop_assert!(!verify_solution(&c.sigma, &bad));
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn found_points_verify(p in params(), m in model()) {
        for point in find_symmetric_equilibria(&p, m, 21) {
            let profile = Profile { pi_p: point.pi_p, pi_v: point.pi_v };
            prop_assert!(verify_equilibrium(&p, profile, m, 101).is_ok(), "{point:?}");
        }
    }

    #[test]
    fn strict_condition_yields_ideal_point(p in strict_params(), m in model()) {
        let check = check_ideal_security(&p, m);
        prop_assert!(check.margin > 0.0 && p.f_p + p.c_fraud > 0.0);
        let found = find_symmetric_equilibria(&p, m, 21);
        prop_assert!(found.iter().any(|e| e.kind == EquilibriumKind::PureIdeal));
        prop_assert!(!found.iter().any(|e| e.pi_v == 1.0 && e.pi_p < 1.0));
    }

    #[test]
    fn sweep_rows_are_monotone_and_consistent(
        c_m in 0.0..1.0, lo in 1.0..100.0, span in 1.0..1e4, points in 2usize..40, log in any::<bool>(),
    ) {
        let spec = Sweep {
            c_off_min: lo,
            c_off_max: lo + span,
            points,
            log_scale: log,
            n_values: vec![1, 5, 10, 50, 100],
            c_m,
            extra_c_off: vec![],
        };
        let rows = run_sweep(&spec).unwrap();
        for pair in rows.windows(2) {
            if pair[0].n == pair[1].n {
                prop_assert!(pair[1].c_off > pair[0].c_off);
                prop_assert!(pair[1].min_pi_a <= pair[0].min_pi_a);
            }
        }
        for row in &rows {
            for other in rows.iter().filter(|r| r.c_off == row.c_off && r.n > row.n) {
                prop_assert!(other.min_pi_a >= row.min_pi_a);
            }
            let p = Params {
                f_v: 1.0, c_m, r_v: 1.0, c_off: row.c_off, c_fail: 1.0, f_p: 1.0,
                c_fraud: 1.0, r_fraud: 1.0, n: row.n, pi_a: row.min_pi_a, d_v: row.c_off,
            };
            prop_assert!(check_ideal_security(&p, ThreatModel::Baseline).margin >= -1e-12);
        }
    }

    #[test]
    fn settlement_is_conserved(
        p in params(), pi_p in prob(), pi_v in prob(), m in model(), seed in any::<u64>(),
        equal in any::<bool>(),
    ) {
        let split = if equal { RewardSplit::EqualRealized } else { RewardSplit::PaperExpected };
        let settings = EngineSettings::new(m, split, seed);
        let profile = Profile { pi_p, pi_v };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut contract = ContractState::new(p.n as usize, p.d_v);
        for _ in 0..20 {
            let before = contract.clone();
            let (after, report) = run_epoch(contract, &p, &profile, &settings, &mut rng);
            let reward = match split {
                RewardSplit::PaperExpected => expected_reward_share(p.r_v, p.n, pi_v),
                RewardSplit::EqualRealized => p.r_v / report.n_online.max(1) as f64,
            };
            for (i, outcome) in report.outcomes.iter().enumerate() {
                let online = outcome.this_validator_online;
                let cost = if online { p.c_m } else { 0.0 };
                let r = if online && outcome.proposer_action == ProposerAction::Fraud { reward } else { 0.0 };
                let cell = payoff_lookup(outcome, &p, cost, r, m).unwrap();
                let delta = after.validators[i].balance - before.validators[i].balance;
                prop_assert!((delta - cell.validator).abs() <= 1e-9 * cell.validator.abs().max(1.0));
                prop_assert_eq!(cell.proposer, report.proposer_payoff);
            }
            let proposer_delta = after.proposer_balance - before.proposer_balance;
            prop_assert!((proposer_delta - report.proposer_payoff).abs() <= 1e-9 * report.proposer_payoff.abs().max(1.0));

            match report.record.outcome {
                TestOutcome::StateMismatch => {
                    let t = report.record.target.unwrap();
                    prop_assert_eq!(report.proposer_action, ProposerAction::Fraud);
                    prop_assert!(report.outcomes[t].this_validator_online);
                }
                TestOutcome::Pass => {
                    prop_assert_eq!(report.proposer_action, ProposerAction::Honest);
                }
                _ => {}
            }
            if m == ThreatModel::Evasion && report.proposer_action == ProposerAction::Fraud {
                prop_assert_eq!(report.record.outcome, TestOutcome::NotTriggered);
            }
            contract = after;
        }
    }

    #[test]
    fn config_round_trip_is_idempotent(p in params(), pi_p in prob(), pi_v in prob(), seed in any::<u64>()) {
        let p = Params { d_v: p.d_v.max(p.c_off), ..p };
        let text = format!(
            "f_v = {}\nc_m = {}\nr_v = {}\nc_off = {}\nc_fail = {}\nf_p = {}\nc_fraud = {}\n\
             r_fraud = {}\nn = {}\npi_a = {}\nd_v = {}\npi_p = {pi_p}\npi_v = {pi_v}\nseed = {seed}\n",
            p.f_v, p.c_m, p.r_v, p.c_off, p.c_fail, p.f_p, p.c_fraud, p.r_fraud, p.n, p.pi_a, p.d_v
        );
        let first = Config::parse(&text).unwrap();
        let once = first.to_cfg_string();
        let second = Config::parse(&once).unwrap();
        prop_assert_eq!(&second, &first);
        prop_assert_eq!(second.to_cfg_string(), once);
    }
}

#[test]
fn beacon_bit_flips_half_the_triggers() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 100_000;
    let mut flips = 0;
    for _ in 0..trials {
        let sigma = ratsim::Digest(rng.random());
        let beacon = ratsim::Digest(rng.random());
        let flipped = beacon.flip_bit(rng.random_range(0..256));
        flips += usize::from(
            trigger_decision(&sigma, &beacon, 0.5) != trigger_decision(&sigma, &flipped, 0.5),
        );
    }
    let rate = flips as f64 / trials as f64;
    assert!((rate - 0.5).abs() <= 0.02, "flip rate {rate}");
}

#[test]
fn mixed_equilibrium_is_indifferent() {
    let p = Params {
        f_v: 1.0,
        c_m: 0.1,
        r_v: 100.0,
        c_off: 500.0,
        c_fail: 1000.0,
        f_p: 1.0,
        c_fraud: 100.0,
        r_fraud: 50.0,
        n: 10,
        pi_a: 0.0,
        d_v: 500.0,
    };
    for m in ThreatModel::ALL {
        let found = find_symmetric_equilibria(&p, m, 101);
        let mixed: Vec<_> = found
            .iter()
            .filter(|e| e.kind == EquilibriumKind::Mixed)
            .collect();
        assert!(!mixed.is_empty(), "{m}: {found:?}");
        for e in mixed {
            assert!(e.pi_p > 0.0 && e.pi_p < 1.0 && e.pi_v > 0.0 && e.pi_v < 1.0);
            assert!(proposer_utility_slope(&p, e.pi_v).abs() <= 1e-9);
            assert!(validator_utility_slope(&p, e.pi_p, e.pi_v, m).abs() <= 1e-9);
        }
    }
}

#[test]
fn evasion_event_rates() {
    let params = Params {
        f_v: 1.0,
        c_m: 0.1,
        r_v: 100.0,
        c_off: 500.0,
        c_fail: 1000.0,
        f_p: 1.0,
        c_fraud: 100.0,
        r_fraud: 50.0,
        n: 4,
        pi_a: 0.2,
        d_v: 500.0,
    };
    let config = SimConfig {
        params,
        profile: Profile {
            pi_p: 0.6,
            pi_v: 0.3,
        },
        epochs: 100_000,
        seed: 3,
        model: ThreatModel::Evasion,
        reward_split: RewardSplit::PaperExpected,
        hash: HashAlgorithm::Sha256,
    };
    let r = simulate(&config).unwrap();
    let m = config.epochs as f64;
    let expected_trigger = params.pi_a * 0.6;
    let sd = (expected_trigger * (1.0 - expected_trigger) / m).sqrt();
    assert!(
        (r.trigger_rate - expected_trigger).abs() <= 3.0 * sd,
        "{}",
        r.trigger_rate
    );

    let frauds = r.fraud_rate * m;
    let detect = 1.0 - 0.7_f64.powi(4);
    let sd = (detect * (1.0 - detect) / frauds).sqrt();
    assert!(
        (r.detection_rate - detect).abs() <= 3.0 * sd,
        "{}",
        r.detection_rate
    );

    let oracle = table_expectation(&params, &config.profile, config.model, config.reward_split);
    assert!((r.empirical_u_v - oracle.validator).abs() <= 3.0 * r.std_err_u_v);
    assert!((r.empirical_u_p - oracle.proposer).abs() <= 3.0 * r.std_err_u_p);
}

#[test]
fn equal_split_matches_binomial_oracle() {
    let config = SimConfig {
        params: Config::parse(PAPER_200).unwrap().params,
        profile: Profile {
            pi_p: 0.5,
            pi_v: 0.5,
        },
        epochs: 100_000,
        seed: 21,
        model: ThreatModel::Baseline,
        reward_split: RewardSplit::EqualRealized,
        hash: HashAlgorithm::Keccak256,
    };
    let r = simulate(&config).unwrap();
    assert!(r.table_z_u_v.abs() <= 3.0, "{}", r.table_z_u_v);
    assert!(r.table_z_u_p.abs() <= 3.0, "{}", r.table_z_u_p);
}

#[test]
fn replicas_are_reproducible() {
    let config = SimConfig {
        params: Config::parse(PAPER_600).unwrap().params,
        profile: Profile {
            pi_p: 0.9,
            pi_v: 0.8,
        },
        epochs: 5_000,
        seed: 0,
        model: ThreatModel::Baseline,
        reward_split: RewardSplit::PaperExpected,
        hash: HashAlgorithm::Sha256,
    };
    let seeds = [1, 2, 3, 4];
    let a = simulate_replicas(&config, &seeds).unwrap();
    let b = simulate_replicas(&config, &seeds).unwrap();
    assert_eq!(a, b);
    for (report, &seed) in a.iter().zip(&seeds) {
        let single = simulate(&SimConfig { seed, ..config }).unwrap();
        assert_eq!(report.to_text(), single.to_text());
    }
    assert_ne!(a[0].to_text(), a[1].to_text());
}
