//! Game parameters, the state-dependent payoff tables and the closed-form
//! expected utilities of validators and the proposer.
//!
//! Two routes to the same numbers live here: [`payoff_lookup`] returns one
//! realized cell of the payoff table, while the `u_*` functions give the
//! expected utilities. The Monte Carlo module ties the two together.
//!
//! The validator's own online probability (`own_q`) is kept separate from the
//! probability that each *other* validator is online (`pi_bar_v`). The
//! symmetric expression is recovered with `own_q == pi_bar_v`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{is_probability, Scalar};

/// All monetary and probability parameters of the game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomicParams<T> {
    /// Validator standard fee per epoch.
    pub f_v: T,
    /// Marginal cost of being online for one epoch.
    pub c_m: T,
    /// Total fraud-detection reward pool.
    pub r_v: T,
    /// Penalty for failing an attention test.
    pub c_off: T,
    /// Per-validator penalty when fraud goes undetected.
    pub c_fail: T,
    /// Proposer standard fee per epoch.
    pub f_p: T,
    /// Proposer penalty when fraud is detected.
    pub c_fraud: T,
    /// Proposer illicit profit when fraud is finalized.
    pub r_fraud: T,
    /// Number of registered validators.
    pub n: u32,
    /// Per-epoch system-wide attention test trigger probability.
    pub pi_a: T,
    /// Validator staked deposit.
    pub d_v: T,
}

impl<T: Scalar> EconomicParams<T> {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("f_v", self.f_v),
            ("c_m", self.c_m),
            ("r_v", self.r_v),
            ("c_off", self.c_off),
            ("c_fail", self.c_fail),
            ("f_p", self.f_p),
            ("c_fraud", self.c_fraud),
            ("r_fraud", self.r_fraud),
            ("d_v", self.d_v),
        ];
        for (name, value) in non_negative {
            if !value.is_finite() || value < T::zero() {
                return Err(Error::param(
                    name,
                    format!("must be finite and >= 0, got {value}"),
                ));
            }
        }
        if self.n < 1 {
            return Err(Error::param("n", "at least one validator is required"));
        }
        if !is_probability(self.pi_a) {
            return Err(Error::param(
                "pi_a",
                format!("must lie in [0, 1], got {}", self.pi_a),
            ));
        }
        if self.c_off > self.d_v {
            return Err(Error::param(
                "c_off",
                format!("penalty {} exceeds staked deposit {}", self.c_off, self.d_v),
            ));
        }
        Ok(())
    }

    /// Probability that one particular validator is the target of a test in
    /// a given epoch.
    pub fn individual_test_probability(&self) -> T {
        self.pi_a / T::from_count(self.n)
    }

    pub fn cast<U: Scalar>(&self) -> EconomicParams<U> {
        let c = |x: T| U::lit(x.to_f64().expect("finite parameter"));
        EconomicParams {
            f_v: c(self.f_v),
            c_m: c(self.c_m),
            r_v: c(self.r_v),
            c_off: c(self.c_off),
            c_fail: c(self.c_fail),
            f_p: c(self.f_p),
            c_fraud: c(self.c_fraud),
            r_fraud: c(self.r_fraud),
            n: self.n,
            pi_a: c(self.pi_a),
            d_v: c(self.d_v),
        }
    }
}

/// Proposer honesty probability and the symmetric validator online probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyProfile<T> {
    pub pi_p: T,
    pub pi_v: T,
}

impl<T: Scalar> StrategyProfile<T> {
    pub fn new(pi_p: T, pi_v: T) -> Result<Self> {
        let profile = StrategyProfile { pi_p, pi_v };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_probability(self.pi_p) {
            return Err(Error::param(
                "pi_p",
                format!("must lie in [0, 1], got {}", self.pi_p),
            ));
        }
        if !is_probability(self.pi_v) {
            return Err(Error::param(
                "pi_v",
                format!("must lie in [0, 1], got {}", self.pi_v),
            ));
        }
        Ok(())
    }

    /// Honest proposer, every validator attentive.
    pub fn ideal() -> Self {
        StrategyProfile {
            pi_p: T::one(),
            pi_v: T::one(),
        }
    }
}

/// Adversary model for the proposer.
///
/// Under `Evasion` a fraudulent proposer can keep the attention test from
/// triggering on fraudulent submissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ThreatModel {
    #[default]
    Baseline,
    Evasion,
}

impl ThreatModel {
    pub const ALL: [ThreatModel; 2] = [ThreatModel::Baseline, ThreatModel::Evasion];

    pub fn name(self) -> &'static str {
        match self {
            ThreatModel::Baseline => "baseline",
            ThreatModel::Evasion => "evasion",
        }
    }

    /// Whether an attention test can fire for a submission made under `action`.
    pub fn tests_possible(self, action: ProposerAction) -> bool {
        !(self == ThreatModel::Evasion && action == ProposerAction::Fraud)
    }
}

impl fmt::Display for ThreatModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ThreatModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ThreatModel::Baseline),
            "evasion" => Ok(ThreatModel::Evasion),
            other => Err(Error::param("model", format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProposerAction {
    Honest,
    Fraud,
}

impl ProposerAction {
    pub fn name(self) -> &'static str {
        match self {
            ProposerAction::Honest => "honest",
            ProposerAction::Fraud => "fraud",
        }
    }
}

/// Attention test result from the point of view of one validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestResult {
    NotTested,
    Pass,
    Timeout,
    StateMismatch,
}

/// One realized row of the payoff table, seen by a single validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpochOutcome {
    pub proposer_action: ProposerAction,
    pub this_validator_online: bool,
    pub any_other_validator_online: bool,
    pub test_result: TestResult,
}

impl EpochOutcome {
    pub fn validate(&self) -> Result<()> {
        match self.test_result {
            TestResult::Pass if !self.this_validator_online => Err(Error::InvalidOutcome(
                "pass requires an online validator".into(),
            )),
            TestResult::Timeout if self.this_validator_online => Err(Error::InvalidOutcome(
                "timeout requires an offline validator".into(),
            )),
            TestResult::StateMismatch
                if !self.this_validator_online || self.proposer_action != ProposerAction::Fraud =>
            {
                Err(Error::InvalidOutcome(
                    "state mismatch requires an online validator and a fraudulent root".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PayoffPair<T> {
    pub validator: T,
    pub proposer: T,
}

/// Expected share of the reward pool for one attentive validator when each of
/// the other `n - 1` validators is online with probability `pi_bar_v`.
pub fn expected_reward_share<T: Scalar>(r_v: T, n: u32, pi_bar_v: T) -> T {
    let others = T::from_count(n.saturating_sub(1));
    r_v / (T::one() + others * pi_bar_v)
}

/// Probability that none of the other `n - 1` validators is online.
fn nobody_else_online<T: Scalar>(n: u32, pi_bar_v: T) -> T {
    (T::one() - pi_bar_v).powi(n as i32 - 1)
}

/// Utility of an online validator.
pub fn u_v_online<T: Scalar>(params: &EconomicParams<T>, pi_p: T, pi_bar_v: T) -> T {
    params.f_v - params.c_m
        + (T::one() - pi_p) * expected_reward_share(params.r_v, params.n, pi_bar_v)
}

/// Utility of an offline validator.
///
/// `Baseline` charges the expected test penalty regardless of the proposer's
/// action; `Evasion` charges it only when the proposer is honest.
pub fn u_v_offline<T: Scalar>(
    params: &EconomicParams<T>,
    pi_p: T,
    pi_bar_v: T,
    model: ThreatModel,
) -> T {
    let test_penalty = params.individual_test_probability() * params.c_off;
    let failure = (T::one() - pi_p) * nobody_else_online(params.n, pi_bar_v) * params.c_fail;
    match model {
        ThreatModel::Baseline => pi_p * params.f_v - test_penalty - failure,
        ThreatModel::Evasion => pi_p * (params.f_v - test_penalty) - failure,
    }
}

/// Expected validator utility when the validator is online with probability
/// `own_q` and every other validator with probability `pi_bar_v`.
pub fn expected_u_v<T: Scalar>(
    params: &EconomicParams<T>,
    own_q: T,
    pi_p: T,
    pi_bar_v: T,
    model: ThreatModel,
) -> T {
    own_q * u_v_online(params, pi_p, pi_bar_v)
        + (T::one() - own_q) * u_v_offline(params, pi_p, pi_bar_v, model)
}

pub fn u_p_honest<T: Scalar>(params: &EconomicParams<T>) -> T {
    params.f_p
}

/// Utility of a fraudulent proposer; fraud is caught when at least one of
/// the `n` validators is online.
pub fn u_p_fraud<T: Scalar>(params: &EconomicParams<T>, pi_v: T) -> T {
    let undetected = (T::one() - pi_v).powi(params.n as i32);
    (T::one() - undetected) * (-params.c_fraud) + undetected * (params.f_p + params.r_fraud)
}

pub fn expected_u_p<T: Scalar>(params: &EconomicParams<T>, pi_p: T, pi_v: T) -> T {
    pi_p * u_p_honest(params) + (T::one() - pi_p) * u_p_fraud(params, pi_v)
}

/// Looks up the payoff table cell for a realized outcome.
///
/// `realized_cost` replaces the table's expected cost (`c_m` when this
/// validator was online this epoch, otherwise zero) and `realized_reward`
/// replaces the expected reward share. A state mismatch is a detected fraud
/// whose dispute the validator wins.
pub fn payoff_lookup<T: Scalar>(
    outcome: &EpochOutcome,
    params: &EconomicParams<T>,
    realized_cost: T,
    realized_reward: T,
    model: ThreatModel,
) -> Result<PayoffPair<T>> {
    outcome.validate()?;
    let action = outcome.proposer_action;
    if !model.tests_possible(action) && outcome.test_result != TestResult::NotTested {
        return Err(Error::InvalidOutcome(
            "under evasion a fraudulent root is never tested".into(),
        ));
    }

    let penalty = if outcome.test_result == TestResult::Timeout {
        params.c_off
    } else {
        T::zero()
    };
    let base = params.f_v - realized_cost;

    let pair = match action {
        ProposerAction::Honest => PayoffPair {
            validator: base - penalty,
            proposer: params.f_p,
        },
        ProposerAction::Fraud if outcome.this_validator_online => PayoffPair {
            validator: base + realized_reward,
            proposer: -params.c_fraud,
        },
        ProposerAction::Fraud if outcome.any_other_validator_online => PayoffPair {
            validator: base - penalty,
            proposer: -params.c_fraud,
        },
        ProposerAction::Fraud => PayoffPair {
            validator: -penalty - params.c_fail,
            proposer: params.f_p + params.r_fraud,
        },
    };
    Ok(pair)
}
