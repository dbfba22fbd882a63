//! Epoch state machine of the attention test protocol.
//!
//! Each epoch the proposer posts a state root, the contract decides from the
//! root and the L1 beacon whether to test and whom, the target answers (or
//! times out), fraud is caught by any online validator and every account is
//! settled from the payoff table. Response latency is collapsed into the
//! online/offline draw: an online target answers in time, an offline one
//! times out. Disputes always resolve in favour of the honest side.

use std::fmt;

use rand::Rng;

use crate::economics::{
    expected_reward_share, payoff_lookup, EconomicParams, EpochOutcome, ProposerAction,
    StrategyProfile, TestResult, ThreatModel,
};
use crate::error::{Error, Result};
use crate::state_commitment::{
    build_commitment_with, corrupt_commitment_with, verify_solution_with, Digest, HashAlgorithm,
    L2State, StateCommitment,
};

/// Domain separation tag for the trigger decision.
pub const TRIGGER_TAG: &[u8] = b"TRIG";
/// Domain separation tag for target selection.
pub const SELECT_TAG: &[u8] = b"SEL";
/// Domain separation tag for the simulated L1 block hash stream.
pub const BEACON_TAG: &[u8] = b"BEACON";

/// Simulated L1 block hashes, a deterministic function of run seed and epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomBeacon {
    pub seed: u64,
    pub algo: HashAlgorithm,
}

impl RandomBeacon {
    pub fn new(seed: u64) -> Self {
        RandomBeacon {
            seed,
            algo: HashAlgorithm::Sha256,
        }
    }

    pub fn l1_block_hash(&self, epoch: u64) -> Digest {
        self.algo
            .digest_parts(&[BEACON_TAG, &self.seed.to_be_bytes(), &epoch.to_be_bytes()])
    }
}

fn unit_from_u64(x: u64) -> f64 {
    // top 53 bits, so the result stays strictly below 1
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Whether the contract opens an attention test for `sigma`.
///
/// `u` is the first 8 bytes (big endian) of `H(sigma || beacon || "TRIG")`
/// scaled to `[0, 1)`; the test fires when `u < pi_a`.
pub fn trigger_decision(sigma: &Digest, beacon: &Digest, pi_a: f64) -> bool {
    trigger_decision_with(sigma, beacon, pi_a, HashAlgorithm::Sha256)
}

pub fn trigger_decision_with(
    sigma: &Digest,
    beacon: &Digest,
    pi_a: f64,
    algo: HashAlgorithm,
) -> bool {
    let h = algo.digest_parts(&[&sigma.0, &beacon.0, TRIGGER_TAG]);
    unit_from_u64(h.window_u64(0)) < pi_a
}

/// Uniform target index in `[0, n)`.
///
/// Draws 8-byte windows from `H(sigma || beacon || "SEL")` and its iterated
/// rehashes, rejecting values at or above `floor(2^64 / n) * n`.
pub fn select_validator(sigma: &Digest, beacon: &Digest, n: usize) -> usize {
    select_validator_with(sigma, beacon, n, HashAlgorithm::Sha256)
}

pub fn select_validator_with(
    sigma: &Digest,
    beacon: &Digest,
    n: usize,
    algo: HashAlgorithm,
) -> usize {
    assert!(n >= 1, "cannot select from an empty validator set");
    if n == 1 {
        return 0;
    }
    let n = n as u128;
    let zone = (1u128 << 64) / n * n;
    let mut h = algo.digest_parts(&[&sigma.0, &beacon.0, SELECT_TAG]);
    loop {
        for offset in (0..32).step_by(8) {
            let x = u128::from(h.window_u64(offset));
            if x < zone {
                return (x % n) as usize;
            }
        }
        h = algo.digest(&h.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatorAccount {
    pub id: usize,
    pub deposit: f64,
    /// Cumulative settled payoff.
    pub balance: f64,
    pub online_this_epoch: bool,
    /// Set once a penalty had to be clamped at the remaining deposit.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingTest {
    pub target: usize,
    pub deadline_epoch: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractState {
    pub epoch: u64,
    pub recorded: Option<StateCommitment>,
    pub pending_test: Option<PendingTest>,
    pub validators: Vec<ValidatorAccount>,
    pub proposer_balance: f64,
}

impl ContractState {
    pub fn new(n: usize, deposit: f64) -> Self {
        ContractState {
            epoch: 0,
            recorded: None,
            pending_test: None,
            validators: (0..n)
                .map(|id| ValidatorAccount {
                    id,
                    deposit,
                    balance: 0.0,
                    online_this_epoch: false,
                    clamped: false,
                })
                .collect(),
            proposer_balance: 0.0,
        }
    }

    pub fn record_commitment(&mut self, commitment: StateCommitment) {
        self.recorded = Some(commitment);
        self.pending_test = None;
    }

    pub fn open_test(&mut self, target: usize) -> Result<()> {
        if self.recorded.is_none() {
            return Err(Error::InvalidOutcome(
                "no recorded commitment to test".into(),
            ));
        }
        if target >= self.validators.len() {
            return Err(Error::param("target", format!("no validator {target}")));
        }
        self.pending_test = Some(PendingTest {
            target,
            deadline_epoch: self.epoch,
        });
        Ok(())
    }

    /// Clears per-epoch state and advances the epoch counter.
    pub fn close_epoch(&mut self) {
        self.recorded = None;
        self.pending_test = None;
        for v in &mut self.validators {
            v.online_this_epoch = false;
        }
        self.epoch += 1;
    }
}

/// Applies the timeout penalty to the pending test's target. The deposit is
/// reduced by at most what is left of it.
pub fn resolve_timeout(
    mut contract: ContractState,
    target: usize,
    c_off: f64,
) -> Result<ContractState> {
    match contract.pending_test {
        Some(p) if p.target == target => {}
        _ => return Err(Error::NoPendingTest(target)),
    }
    let account = &mut contract.validators[target];
    if c_off > account.deposit {
        account.clamped = true;
    }
    account.deposit -= c_off.min(account.deposit);
    contract.pending_test = None;
    Ok(contract)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestOutcome {
    NotTriggered,
    Pass,
    Timeout,
    StateMismatch,
}

impl TestOutcome {
    pub fn name(self) -> &'static str {
        match self {
            TestOutcome::NotTriggered => "not_triggered",
            TestOutcome::Pass => "pass",
            TestOutcome::Timeout => "timeout",
            TestOutcome::StateMismatch => "state_mismatch",
        }
    }

    fn as_result(self) -> TestResult {
        match self {
            TestOutcome::NotTriggered => TestResult::NotTested,
            TestOutcome::Pass => TestResult::Pass,
            TestOutcome::Timeout => TestResult::Timeout,
            TestOutcome::StateMismatch => TestResult::StateMismatch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestOutcomeRecord {
    pub outcome: TestOutcome,
    pub target: Option<usize>,
}

/// How the reward pool is paid out when fraud is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardSplit {
    /// Every online validator receives the expected share formula.
    #[default]
    PaperExpected,
    /// The pool is split evenly among the validators actually online.
    EqualRealized,
}

impl RewardSplit {
    pub fn name(self) -> &'static str {
        match self {
            RewardSplit::PaperExpected => "paper-expected",
            RewardSplit::EqualRealized => "equal-realized",
        }
    }
}

impl fmt::Display for RewardSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RewardSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-expected" => Ok(RewardSplit::PaperExpected),
            "equal-realized" => Ok(RewardSplit::EqualRealized),
            other => Err(Error::param(
                "reward_split",
                format!("unknown split `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    pub model: ThreatModel,
    pub reward_split: RewardSplit,
    pub beacon: RandomBeacon,
    pub leaves_per_state: usize,
    pub leaf_len: usize,
}

impl EngineSettings {
    pub fn new(model: ThreatModel, reward_split: RewardSplit, seed: u64) -> Self {
        EngineSettings {
            model,
            reward_split,
            beacon: RandomBeacon::new(seed),
            leaves_per_state: 4,
            leaf_len: 32,
        }
    }
}

/// Everything that happened in one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: u64,
    pub proposer_action: ProposerAction,
    pub triggered: bool,
    pub record: TestOutcomeRecord,
    /// Per-validator view of the epoch, indexed by validator id.
    pub outcomes: Vec<EpochOutcome>,
    pub validator_payoffs: Vec<f64>,
    pub proposer_payoff: f64,
    pub n_online: usize,
    pub detected: bool,
    pub clamped: bool,
}

impl EpochReport {
    pub fn mean_validator_payoff(&self) -> f64 {
        // running mean keeps constant payoffs exact
        let mut mean = 0.0;
        for (i, &x) in self.validator_payoffs.iter().enumerate() {
            mean += (x - mean) / (i + 1) as f64;
        }
        mean
    }

    /// Tab-separated event log line: epoch, proposer action, triggered,
    /// target, outcome, online count, detection.
    pub fn log_line(&self) -> String {
        let target = self
            .record
            .target
            .map_or_else(|| "-".to_string(), |t| t.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.epoch,
            self.proposer_action.name(),
            u8::from(self.triggered),
            target,
            self.record.outcome.name(),
            self.n_online,
            u8::from(self.detected),
        )
    }
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Runs one epoch and settles every account.
pub fn run_epoch<R: Rng + ?Sized>(
    mut contract: ContractState,
    params: &EconomicParams<f64>,
    profile: &StrategyProfile<f64>,
    settings: &EngineSettings,
    rng: &mut R,
) -> (ContractState, EpochReport) {
    let algo = settings.beacon.algo;
    let n = contract.validators.len();
    let epoch = contract.epoch;

    // Proposer commits.
    let action = if bernoulli(rng, profile.pi_p) {
        ProposerAction::Honest
    } else {
        ProposerAction::Fraud
    };
    let state = L2State::synthetic(
        rng,
        settings.leaves_per_state.max(2),
        settings.leaf_len,
        epoch,
    )
    .expect("at least two leaves");
    let honest = build_commitment_with(&state, algo).expect("valid state");
    let posted = match action {
        ProposerAction::Honest => honest,
        ProposerAction::Fraud => {
            corrupt_commitment_with(&state, rng.random(), algo).expect("valid state")
        }
    };
    contract.record_commitment(posted);

    // Validators decide whether to do their job this epoch.
    for v in &mut contract.validators {
        v.online_this_epoch = bernoulli(rng, profile.pi_v);
    }
    let n_online = contract
        .validators
        .iter()
        .filter(|v| v.online_this_epoch)
        .count();

    // Contract-side trigger and target selection.
    let beacon = settings.beacon.l1_block_hash(epoch);
    let triggered = settings.model.tests_possible(action)
        && trigger_decision_with(&posted.sigma, &beacon, params.pi_a, algo);
    let mut record = TestOutcomeRecord {
        outcome: TestOutcome::NotTriggered,
        target: None,
    };
    let mut clamped = false;
    if triggered {
        let target = select_validator_with(&posted.sigma, &beacon, n, algo);
        contract.open_test(target).expect("commitment recorded");
        let outcome = if contract.validators[target].online_this_epoch {
            // An attentive validator derives the children of the true state.
            if verify_solution_with(&posted.sigma, &honest.solution(), algo) {
                contract.pending_test = None;
                TestOutcome::Pass
            } else {
                // Escalates to the dispute game, which the honest validator wins.
                contract.pending_test = None;
                TestOutcome::StateMismatch
            }
        } else {
            let was_clamped = contract.validators[target].clamped;
            contract = resolve_timeout(contract, target, params.c_off).expect("pending test");
            clamped = contract.validators[target].clamped && !was_clamped;
            TestOutcome::Timeout
        };
        record = TestOutcomeRecord {
            outcome,
            target: Some(target),
        };
    }

    let detected = action == ProposerAction::Fraud && n_online > 0;

    // Settlement.
    let reward = match settings.reward_split {
        RewardSplit::PaperExpected => expected_reward_share(params.r_v, params.n, profile.pi_v),
        RewardSplit::EqualRealized if n_online > 0 => params.r_v / n_online as f64,
        RewardSplit::EqualRealized => 0.0,
    };
    let mut outcomes = Vec::with_capacity(n);
    let mut validator_payoffs = Vec::with_capacity(n);
    let mut proposer_payoff = None;
    for (i, v) in contract.validators.iter_mut().enumerate() {
        let online = v.online_this_epoch;
        let test_result = match record.target {
            Some(t) if t == i => record.outcome.as_result(),
            _ => TestResult::NotTested,
        };
        let outcome = EpochOutcome {
            proposer_action: action,
            this_validator_online: online,
            any_other_validator_online: n_online > usize::from(online),
            test_result,
        };
        let cost = if online { params.c_m } else { 0.0 };
        let realized_reward = if online && action == ProposerAction::Fraud {
            reward
        } else {
            0.0
        };
        let cell = payoff_lookup(&outcome, params, cost, realized_reward, settings.model)
            .expect("engine only produces table outcomes");
        debug_assert!(proposer_payoff.is_none_or(|p| p == cell.proposer));
        proposer_payoff.get_or_insert(cell.proposer);
        v.balance += cell.validator;
        outcomes.push(outcome);
        validator_payoffs.push(cell.validator);
    }
    let proposer_payoff = proposer_payoff.expect("at least one validator");
    contract.proposer_balance += proposer_payoff;

    contract.close_epoch();
    let report = EpochReport {
        epoch,
        proposer_action: action,
        triggered,
        record,
        outcomes,
        validator_payoffs,
        proposer_payoff,
        n_online,
        detected,
        clamped,
    };
    (contract, report)
}
