//! Monte Carlo driver: runs many epochs of the protocol engine and compares
//! the empirical utilities with closed-form expectations.
//!
//! Two closed forms are reported. The *analytic* values come from the
//! expected-utility equations with `own_q = pi_v`. The *table* values are the
//! exact expectation of the payoff table over all outcome combinations,
//! written out independently of both the engine and [`payoff_lookup`]. They
//! differ by the fee an offline validator keeps when someone else catches
//! fraud, so the gap is visible whenever `pi_p < 1`.
//!
//! [`payoff_lookup`]: crate::economics::payoff_lookup

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::economics::{
    expected_reward_share, expected_u_p, expected_u_v, EconomicParams, PayoffPair, ProposerAction,
    StrategyProfile, ThreatModel,
};
use crate::equilibrium::{proposer_utility_slope, validator_utility_slope, EQUILIBRIUM_TOLERANCE};
use crate::error::{Error, Result};
use crate::protocol_engine::{
    run_epoch, ContractState, EngineSettings, EpochReport, RewardSplit, TestOutcome,
};
use crate::scalar::Scalar;
use crate::state_commitment::HashAlgorithm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: EconomicParams<f64>,
    pub profile: StrategyProfile<f64>,
    pub epochs: u64,
    pub seed: u64,
    pub model: ThreatModel,
    pub reward_split: RewardSplit,
    pub hash: HashAlgorithm,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.profile.validate()?;
        if self.epochs < 1 {
            return Err(Error::param("epochs", "at least one epoch is required"));
        }
        Ok(())
    }
}

/// Welford accumulator; exact for constant streams.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean from the sample variance.
    pub fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let variance = self.m2 / (self.count - 1) as f64;
        (variance / self.count as f64).sqrt()
    }
}

/// Standardized gap between an estimate and its reference value.
///
/// With zero sample variance the band collapses to a point; gaps within
/// `1e-12` relative are treated as rounding and reported as zero.
pub fn z_score(empirical: f64, std_err: f64, expected: f64) -> f64 {
    let gap = empirical - expected;
    if std_err > 0.0 {
        return gap / std_err;
    }
    if gap.abs() <= 1e-12 * expected.abs().max(1.0) {
        0.0
    } else {
        gap.signum() * f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub epochs: u64,
    pub seed: u64,
    pub model: ThreatModel,
    pub reward_split: RewardSplit,
    pub hash: HashAlgorithm,
    pub empirical_u_v: f64,
    pub std_err_u_v: f64,
    pub empirical_u_p: f64,
    pub std_err_u_p: f64,
    pub trigger_rate: f64,
    pub timeout_rate: f64,
    pub fraud_rate: f64,
    /// Fraction of fraudulent epochs in which fraud was detected.
    pub detection_rate: f64,
    pub analytic_u_v: f64,
    pub analytic_u_p: f64,
    pub table_u_v: f64,
    pub table_u_p: f64,
    pub z_u_v: f64,
    pub z_u_p: f64,
    pub table_z_u_v: f64,
    pub table_z_u_p: f64,
    pub clamp_events: u64,
}

const REPORT_FIELDS: [&str; 22] = [
    "epochs",
    "seed",
    "model",
    "reward_split",
    "hash",
    "empirical_u_v",
    "std_err_u_v",
    "empirical_u_p",
    "std_err_u_p",
    "trigger_rate",
    "timeout_rate",
    "fraud_rate",
    "detection_rate",
    "analytic_u_v",
    "analytic_u_p",
    "table_u_v",
    "table_u_p",
    "z_u_v",
    "z_u_p",
    "table_z_u_v",
    "table_z_u_p",
    "clamp_events",
];

impl SimReport {
    fn values(&self) -> [String; 22] {
        [
            self.epochs.to_string(),
            self.seed.to_string(),
            self.model.to_string(),
            self.reward_split.to_string(),
            self.hash.to_string(),
            self.empirical_u_v.to_string(),
            self.std_err_u_v.to_string(),
            self.empirical_u_p.to_string(),
            self.std_err_u_p.to_string(),
            self.trigger_rate.to_string(),
            self.timeout_rate.to_string(),
            self.fraud_rate.to_string(),
            self.detection_rate.to_string(),
            self.analytic_u_v.to_string(),
            self.analytic_u_p.to_string(),
            self.table_u_v.to_string(),
            self.table_u_p.to_string(),
            self.z_u_v.to_string(),
            self.z_u_p.to_string(),
            self.table_z_u_v.to_string(),
            self.table_z_u_p.to_string(),
            self.clamp_events.to_string(),
        ]
    }

    /// One `key = value` line per field.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in REPORT_FIELDS.iter().zip(self.values()) {
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }

    pub fn csv_header() -> String {
        REPORT_FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }
}

/// Exact expectation of the payoff table for a symmetric profile.
///
/// Each validator is online with `pi_v`; the reward an online validator
/// receives on a caught fraud follows `split`.
pub fn table_expectation<T: Scalar>(
    params: &EconomicParams<T>,
    profile: &StrategyProfile<T>,
    model: ThreatModel,
    split: RewardSplit,
) -> PayoffPair<T> {
    let one = T::one();
    let StrategyProfile { pi_p, pi_v: q } = *profile;
    let n = T::from_count(params.n);
    let others = params.n - 1;

    let test_prob = |action| {
        if model.tests_possible(action) {
            params.pi_a
        } else {
            T::zero()
        }
    };
    let share = match split {
        RewardSplit::PaperExpected => expected_reward_share(params.r_v, params.n, q),
        RewardSplit::EqualRealized => {
            // E[r_v / (1 + K)], K ~ Binomial(N - 1, q)
            let mut coef = one;
            let mut total = T::zero();
            for k in 0..=others {
                if k > 0 {
                    coef = coef * T::from_count(others - k + 1) / T::from_count(k);
                }
                let weight = coef * q.powi(k as i32) * (one - q).powi((others - k) as i32);
                total = total + weight * params.r_v / T::from_count(k + 1);
            }
            total
        }
    };
    let someone_else_online = one - (one - q).powi(others as i32);

    let honest_online = params.f_v - params.c_m;
    let honest_offline = params.f_v - test_prob(ProposerAction::Honest) / n * params.c_off;
    let fraud_online = params.f_v - params.c_m + share;
    let fraud_offline = someone_else_online * params.f_v
        - (one - someone_else_online) * params.c_fail
        - test_prob(ProposerAction::Fraud) / n * params.c_off;

    let validator = pi_p * (q * honest_online + (one - q) * honest_offline)
        + (one - pi_p) * (q * fraud_online + (one - q) * fraud_offline);

    let detected = one - (one - q).powi(params.n as i32);
    let proposer = pi_p * params.f_p
        + (one - pi_p)
            * (detected * (-params.c_fraud) + (one - detected) * (params.f_p + params.r_fraud));

    PayoffPair {
        validator,
        proposer,
    }
}

/// Runs the configured number of epochs.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    simulate_observed(config, |_| {})
}

/// Like [`simulate`], handing every epoch report to `observer`.
pub fn simulate_observed(
    config: &SimConfig,
    mut observer: impl FnMut(&EpochReport),
) -> Result<SimReport> {
    config.validate()?;
    let params = &config.params;
    let mut settings = EngineSettings::new(config.model, config.reward_split, config.seed);
    settings.beacon.algo = config.hash;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut contract = ContractState::new(params.n as usize, params.d_v);

    let mut u_v = RunningStats::default();
    let mut u_p = RunningStats::default();
    let (mut triggers, mut timeouts, mut frauds, mut detections, mut clamps) = (0u64, 0, 0, 0, 0);

    for _ in 0..config.epochs {
        let (next, report) = run_epoch(contract, params, &config.profile, &settings, &mut rng);
        contract = next;

        u_v.push(report.mean_validator_payoff());
        u_p.push(report.proposer_payoff);
        triggers += u64::from(report.triggered);
        timeouts += u64::from(report.record.outcome == TestOutcome::Timeout);
        if report.proposer_action == ProposerAction::Fraud {
            frauds += 1;
            detections += u64::from(report.detected);
        }
        clamps += u64::from(report.clamped);
        observer(&report);
    }

    let m = config.epochs as f64;
    let StrategyProfile { pi_p, pi_v } = config.profile;
    let analytic_u_v = expected_u_v(params, pi_v, pi_p, pi_v, config.model);
    let analytic_u_p = expected_u_p(params, pi_p, pi_v);
    let table = table_expectation(params, &config.profile, config.model, config.reward_split);

    Ok(SimReport {
        epochs: config.epochs,
        seed: config.seed,
        model: config.model,
        reward_split: config.reward_split,
        hash: config.hash,
        empirical_u_v: u_v.mean(),
        std_err_u_v: u_v.std_err(),
        empirical_u_p: u_p.mean(),
        std_err_u_p: u_p.std_err(),
        trigger_rate: triggers as f64 / m,
        timeout_rate: timeouts as f64 / m,
        fraud_rate: frauds as f64 / m,
        detection_rate: if frauds > 0 {
            detections as f64 / frauds as f64
        } else {
            0.0
        },
        analytic_u_v,
        analytic_u_p,
        table_u_v: table.validator,
        table_u_p: table.proposer,
        z_u_v: z_score(u_v.mean(), u_v.std_err(), analytic_u_v),
        z_u_p: z_score(u_p.mean(), u_p.std_err(), analytic_u_p),
        table_z_u_v: z_score(u_v.mean(), u_v.std_err(), table.validator),
        table_z_u_p: z_score(u_p.mean(), u_p.std_err(), table.proposer),
        clamp_events: clamps,
    })
}

/// Independent replicas of `config`, one per seed, run on separate threads.
pub fn simulate_replicas(config: &SimConfig, seeds: &[u64]) -> Result<Vec<SimReport>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let replica = SimConfig { seed, ..*config };
                scope.spawn(move || simulate(&replica))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replica panicked"))
            .collect()
    })
}

fn best_response<T: Scalar>(slope: T, current: T) -> T {
    let tol = T::lit(EQUILIBRIUM_TOLERANCE);
    if slope > tol {
        T::one()
    } else if slope < -tol {
        T::zero()
    } else {
        current
    }
}

/// Alternating best responses: each round the validators respond to the
/// current proposer strategy, then the proposer responds to the new
/// validator strategy. The trajectory starts with `start` and holds one
/// profile per round.
pub fn best_response_dynamics<T: Scalar>(
    params: &EconomicParams<T>,
    start: StrategyProfile<T>,
    model: ThreatModel,
    rounds: usize,
) -> Vec<StrategyProfile<T>> {
    let mut trajectory = Vec::with_capacity(rounds + 1);
    let mut profile = start;
    trajectory.push(profile);
    for _ in 0..rounds {
        let slope = validator_utility_slope(params, profile.pi_p, profile.pi_v, model);
        profile.pi_v = best_response(slope, profile.pi_v);
        profile.pi_p = best_response(proposer_utility_slope(params, profile.pi_v), profile.pi_p);
        trajectory.push(profile);
    }
    trajectory
}
