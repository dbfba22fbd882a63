//! Ideal security conditions, utility slopes and symmetric equilibrium search.

use crate::economics::{
    expected_u_p, expected_u_v, u_p_fraud, u_p_honest, u_v_offline, u_v_online, EconomicParams,
    ProposerAction, StrategyProfile, ThreatModel,
};
use crate::scalar::Scalar;

/// Tolerance on deviation gains, in currency units.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-9;

const CONDITION_TOLERANCE: f64 = 1e-12;

/// Default grid resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck<T> {
    /// Marginal cost of attentiveness, `c_m`.
    pub lhs: T,
    /// Expected per-epoch test penalty of an offline validator, `pi_a / N * c_off`.
    pub rhs: T,
    pub satisfied: bool,
    /// `rhs - lhs`.
    pub margin: T,
    /// `f_p >= -c_fraud`.
    pub proposer_condition_satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    PureIdeal,
    PureOther,
    Mixed,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::PureIdeal => "pure_ideal",
            EquilibriumKind::PureOther => "pure_other",
            EquilibriumKind::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint<T> {
    pub pi_p: T,
    pub pi_v: T,
    pub kind: EquilibriumKind,
    pub validator_deviation_gain: T,
    pub proposer_deviation_gain: T,
}

/// A profile that failed the deviation check, with the gains that sank it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection<T> {
    pub pi_p: T,
    pub pi_v: T,
    pub validator_deviation_gain: T,
    pub proposer_deviation_gain: T,
}

/// Expected attention test penalty an offline validator pays per epoch when
/// the proposer takes `action`.
pub fn expected_test_penalty<T: Scalar>(
    params: &EconomicParams<T>,
    action: ProposerAction,
    model: ThreatModel,
) -> T {
    if model.tests_possible(action) {
        params.individual_test_probability() * params.c_off
    } else {
        T::zero()
    }
}

/// Checks both ideal security conditions. The validator side is evaluated
/// against an honest proposer, which is why the result does not depend on
/// whether fraudulent roots can evade the test.
pub fn check_ideal_security<T: Scalar>(
    params: &EconomicParams<T>,
    model: ThreatModel,
) -> ConditionCheck<T> {
    let lhs = params.c_m;
    let rhs = expected_test_penalty(params, ProposerAction::Honest, model);
    let margin = rhs - lhs;
    ConditionCheck {
        lhs,
        rhs,
        satisfied: margin >= -T::lit(CONDITION_TOLERANCE),
        margin,
        proposer_condition_satisfied: u_p_honest(params) >= u_p_fraud(params, T::one()),
    }
}

/// Slope of the validator's expected utility in its own online probability.
pub fn validator_utility_slope<T: Scalar>(
    params: &EconomicParams<T>,
    pi_p: T,
    pi_bar_v: T,
    model: ThreatModel,
) -> T {
    u_v_online(params, pi_p, pi_bar_v) - u_v_offline(params, pi_p, pi_bar_v, model)
}

/// Slope of the proposer's expected utility in its honesty probability.
pub fn proposer_utility_slope<T: Scalar>(params: &EconomicParams<T>, pi_v: T) -> T {
    u_p_honest(params) - u_p_fraud(params, pi_v)
}

fn unit_grid<T: Scalar>(points: usize) -> impl Iterator<Item = T> {
    let last = T::from_usize(points - 1).unwrap();
    (0..points).map(move |i| {
        if i + 1 == points {
            T::one()
        } else {
            T::from_usize(i).unwrap() / last
        }
    })
}

fn classify<T: Scalar>(pi_p: T, pi_v: T) -> EquilibriumKind {
    let corner = |x: T| x == T::zero() || x == T::one();
    if pi_p == T::one() && pi_v == T::one() {
        EquilibriumKind::PureIdeal
    } else if corner(pi_p) && corner(pi_v) {
        EquilibriumKind::PureOther
    } else {
        EquilibriumKind::Mixed
    }
}

/// Checks that neither side gains from a unilateral deviation.
///
/// The validator deviates in its own online probability while every other
/// validator keeps `profile.pi_v`; the proposer deviates in `pi_p`. Both
/// utilities are affine in the deviating coordinate so the endpoints decide;
/// the `grid` points corroborate.
pub fn verify_equilibrium<T: Scalar>(
    params: &EconomicParams<T>,
    profile: StrategyProfile<T>,
    model: ThreatModel,
    grid: usize,
) -> Result<EquilibriumPoint<T>, Rejection<T>> {
    let grid = grid.max(2);
    let StrategyProfile { pi_p, pi_v } = profile;

    let v_now = expected_u_v(params, pi_v, pi_p, pi_v, model);
    let validator_gain = unit_grid::<T>(grid)
        .map(|q| expected_u_v(params, q, pi_p, pi_v, model) - v_now)
        .fold(T::zero(), T::max);

    let p_now = expected_u_p(params, pi_p, pi_v);
    let proposer_gain = unit_grid::<T>(grid)
        .map(|p| expected_u_p(params, p, pi_v) - p_now)
        .fold(T::zero(), T::max);

    let tol = T::lit(EQUILIBRIUM_TOLERANCE);
    if validator_gain <= tol && proposer_gain <= tol {
        Ok(EquilibriumPoint {
            pi_p,
            pi_v,
            kind: classify(pi_p, pi_v),
            validator_deviation_gain: validator_gain,
            proposer_deviation_gain: proposer_gain,
        })
    } else {
        Err(Rejection {
            pi_p,
            pi_v,
            validator_deviation_gain: validator_gain,
            proposer_deviation_gain: proposer_gain,
        })
    }
}

/// Root of `f` on `[lo, hi]` given a sign change, by bisection.
fn bisect<T: Scalar>(mut lo: T, mut hi: T, f: impl Fn(T) -> T) -> T {
    let mut f_lo = f(lo);
    if f_lo == T::zero() {
        return lo;
    }
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return mid;
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Brackets every sign change of `f` over a uniform grid and refines each
/// root by bisection.
fn roots_on_grid<T: Scalar>(resolution: usize, f: impl Fn(T) -> T) -> Vec<T> {
    let xs: Vec<T> = unit_grid(resolution).collect();
    let mut roots = Vec::new();
    for pair in xs.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (f(a), f(b));
        if fa == T::zero() {
            roots.push(a);
        } else if (fa < T::zero()) != (fb < T::zero()) && fb != T::zero() {
            roots.push(bisect(a, b, &f));
        }
    }
    if let Some(&last) = xs.last() {
        if f(last) == T::zero() {
            roots.push(last);
        }
    }
    roots
}

/// Finds symmetric equilibria on a `resolution x resolution` grid, plus
/// interior candidates that solve the indifference conditions.
///
/// Interior candidates pair a proposer indifferent in `pi_v` with a validator
/// indifferent in `pi_p`, or a validator indifferent in `pi_v` with the
/// proposer at either pure strategy. Every
/// returned point passes [`verify_equilibrium`]; duplicates within `1e-6`
/// are merged.
pub fn find_symmetric_equilibria<T: Scalar>(
    params: &EconomicParams<T>,
    model: ThreatModel,
    resolution: usize,
) -> Vec<EquilibriumPoint<T>> {
    let resolution = resolution.max(10);
    let mut candidates: Vec<StrategyProfile<T>> = Vec::new();

    let axis: Vec<T> = unit_grid(resolution).collect();
    for &pi_p in &axis {
        for &pi_v in &axis {
            candidates.push(StrategyProfile { pi_p, pi_v });
        }
    }

    for pi_v in roots_on_grid(resolution, |v| proposer_utility_slope(params, v)) {
        for pi_p in roots_on_grid(resolution, |p| {
            validator_utility_slope(params, p, pi_v, model)
        }) {
            candidates.push(StrategyProfile { pi_p, pi_v });
        }
    }
    for pi_p in [T::zero(), T::one()] {
        for pi_v in roots_on_grid(resolution, |v| {
            validator_utility_slope(params, pi_p, v, model)
        }) {
            candidates.push(StrategyProfile { pi_p, pi_v });
        }
    }

    let dedup = T::lit(1e-6);
    let mut found: Vec<EquilibriumPoint<T>> = Vec::new();
    for candidate in candidates {
        let Ok(point) = verify_equilibrium(params, candidate, model, resolution) else {
            continue;
        };
        let duplicate = found
            .iter()
            .any(|q| (q.pi_p - point.pi_p).abs() <= dedup && (q.pi_v - point.pi_v).abs() <= dedup);
        if !duplicate {
            found.push(point);
        }
    }
    found.sort_by(|a, b| {
        b.pi_p
            .partial_cmp(&a.pi_p)
            .unwrap()
            .then(b.pi_v.partial_cmp(&a.pi_v).unwrap())
    });
    found
}
