//! Simulation and analysis of randomized attention tests (RAT) for
//! optimistic rollups.
//!
//! The analytic modules ([`economics`], [`equilibrium`], [`design_tuning`])
//! are generic over the scalar type; the aliases below fix them to `f64`,
//! which is what the simulator and the CLI use.

pub mod cli;
pub mod config;
pub mod design_tuning;
pub mod economics;
pub mod equilibrium;
mod error;
pub mod montecarlo;
pub mod protocol_engine;
pub mod scalar;
pub mod state_commitment;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use design_tuning::{run_sweep, ChallengePeriod, CostModel, MinAttention, SweepRow, SweepSpec};
pub use economics::{
    EconomicParams, EpochOutcome, PayoffPair, ProposerAction, StrategyProfile, TestResult,
    ThreatModel,
};
pub use equilibrium::{ConditionCheck, EquilibriumKind, EquilibriumPoint};
pub use montecarlo::{simulate, SimConfig, SimReport};
pub use protocol_engine::{ContractState, RewardSplit, TestOutcome};
pub use state_commitment::{Digest, HashAlgorithm, L2State, StateCommitment};

pub type Params = EconomicParams<f64>;
pub type Params32 = EconomicParams<f32>;
pub type Profile = StrategyProfile<f64>;
pub type Profile32 = StrategyProfile<f32>;
pub type Payoff = PayoffPair<f64>;
pub type Check = ConditionCheck<f64>;
pub type Equilibrium = EquilibriumPoint<f64>;
pub type Costs = CostModel<f64>;
pub type Sweep = SweepSpec<f64>;
