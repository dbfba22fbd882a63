//! Parameter design: operating cost conversion, minimum attention test
//! probability, challenge frequencies and the penalty sweep.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::{is_probability, Scalar};

const MINUTES_PER_DAY: u64 = 24 * 60;

/// Monthly operating cost of a validator and the epoch calendar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel<T> {
    pub monthly_cost: T,
    pub days_per_month: u32,
    pub epoch_minutes: u32,
}

impl<T: Scalar> CostModel<T> {
    pub fn new(monthly_cost: T, days_per_month: u32, epoch_minutes: u32) -> Result<Self> {
        let model = CostModel {
            monthly_cost,
            days_per_month,
            epoch_minutes,
        };
        model.validate()?;
        Ok(model)
    }

    /// 30-day months and 10-minute epochs.
    pub fn monthly(monthly_cost: T) -> Result<Self> {
        Self::new(monthly_cost, 30, 10)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.monthly_cost.is_finite() && self.monthly_cost > T::zero()) {
            return Err(Error::param("monthly_cost", "must be strictly positive"));
        }
        if self.days_per_month == 0 {
            return Err(Error::param("days_per_month", "must be strictly positive"));
        }
        if self.epoch_minutes == 0 {
            return Err(Error::param("epoch_minutes", "must be strictly positive"));
        }
        Ok(())
    }
}

/// Epochs in one month as an exact fraction.
pub fn epochs_per_month_exact<T>(cost: &CostModel<T>) -> Ratio<u64> {
    Ratio::new(
        u64::from(cost.days_per_month) * MINUTES_PER_DAY,
        u64::from(cost.epoch_minutes),
    )
}

pub fn epochs_per_month<T: Scalar>(cost: &CostModel<T>) -> T {
    ratio_to_scalar(epochs_per_month_exact(cost))
}

fn ratio_to_scalar<T: Scalar>(r: Ratio<u64>) -> T {
    T::from_u64(*r.numer()).unwrap() / T::from_u64(*r.denom()).unwrap()
}

/// Marginal cost of one epoch of attentiveness.
pub fn per_epoch_cost<T: Scalar>(cost: &CostModel<T>) -> T {
    let epochs = epochs_per_month_exact(cost);
    // monthly / (num / den) == monthly * den / num
    cost.monthly_cost * T::from_u64(*epochs.denom()).unwrap()
        / T::from_u64(*epochs.numer()).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinAttention<T> {
    pub pi_a: T,
    /// `false` when more than one test per epoch would be required.
    pub feasible: bool,
}

/// Smallest trigger probability meeting the attentiveness condition with the
/// penalty set to the whole deposit `d_v`.
pub fn min_attention_probability<T: Scalar>(c_m: T, n: u32, d_v: T) -> Result<MinAttention<T>> {
    if n == 0 {
        return Err(Error::param("n", "at least one validator is required"));
    }
    if d_v == T::zero() {
        return Err(Error::ZeroDeposit);
    }
    if !(d_v > T::zero() && d_v.is_finite()) {
        return Err(Error::param("d_v", format!("must be positive, got {d_v}")));
    }
    if !(c_m >= T::zero() && c_m.is_finite()) {
        return Err(Error::param("c_m", format!("must be >= 0, got {c_m}")));
    }
    let pi_a = c_m * T::from_count(n) / d_v;
    Ok(MinAttention {
        pi_a,
        feasible: pi_a <= T::one(),
    })
}

fn epochs_per_day<T: Scalar>(epoch_minutes: u32) -> T {
    ratio_to_scalar(Ratio::new(MINUTES_PER_DAY, u64::from(epoch_minutes)))
}

/// Expected number of system-wide attention tests per day.
pub fn tests_per_day<T: Scalar>(pi_a: T, epoch_minutes: u32) -> Result<T> {
    if !is_probability(pi_a) {
        return Err(Error::param(
            "pi_a",
            format!("must lie in [0, 1], got {pi_a}"),
        ));
    }
    if epoch_minutes == 0 {
        return Err(Error::param("epoch_minutes", "must be strictly positive"));
    }
    Ok(pi_a * epochs_per_day(epoch_minutes))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChallengePeriod<T> {
    pub epochs: T,
    pub days: T,
}

/// Mean time between direct challenges of one validator when the trigger
/// probability sits exactly at its minimum, `c_off / c_m` epochs.
pub fn individual_challenge_period<T: Scalar>(
    c_off: T,
    c_m: T,
    epoch_minutes: u32,
) -> Result<ChallengePeriod<T>> {
    if c_m == T::zero() {
        return Err(Error::NeverChallenged);
    }
    if epoch_minutes == 0 {
        return Err(Error::param("epoch_minutes", "must be strictly positive"));
    }
    let epochs = c_off / c_m;
    Ok(ChallengePeriod {
        epochs,
        days: epochs / epochs_per_day::<T>(epoch_minutes),
    })
}

/// Grid over the penalty axis and the validator counts to evaluate.
///
/// The penalty is set to the deposit, so each sampled `c_off` is also the
/// deposit used for the row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    pub c_off_min: T,
    pub c_off_max: T,
    pub points: usize,
    pub log_scale: bool,
    pub n_values: Vec<u32>,
    pub c_m: T,
    /// Extra penalty values merged into the grid (e.g. annotated points).
    pub extra_c_off: Vec<T>,
}

impl<T: Scalar> SweepSpec<T> {
    /// Log-spaced 64 points over `[10, 10000]` for `N` in `{5, 10, 50, 100}`.
    pub fn with_defaults(c_m: T) -> Self {
        SweepSpec {
            c_off_min: T::lit(10.0),
            c_off_max: T::lit(10_000.0),
            points: 64,
            log_scale: true,
            n_values: vec![5, 10, 50, 100],
            c_m,
            extra_c_off: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_off_min > T::zero() && self.c_off_min <= self.c_off_max) {
            return Err(Error::param("c_off_min", "need 0 < c_off_min <= c_off_max"));
        }
        if !self.c_off_max.is_finite() {
            return Err(Error::param("c_off_max", "must be finite"));
        }
        if self.points < 2 {
            return Err(Error::param("points", "need at least 2 points"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::param(
                "n_values",
                "need a non-empty list of positive counts",
            ));
        }
        if !(self.c_m >= T::zero() && self.c_m.is_finite()) {
            return Err(Error::param("c_m", "must be >= 0"));
        }
        if self
            .extra_c_off
            .iter()
            .any(|&c| !(c > T::zero() && c.is_finite()))
        {
            return Err(Error::param("extra_c_off", "penalties must be positive"));
        }
        Ok(())
    }

    /// Penalty samples in ascending order, endpoints exact.
    pub fn c_off_grid(&self) -> Vec<T> {
        let last = T::from_usize(self.points - 1).unwrap();
        let mut grid: Vec<T> = (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.c_off_min;
                }
                if i + 1 == self.points {
                    return self.c_off_max;
                }
                let t = T::from_usize(i).unwrap() / last;
                if self.log_scale {
                    let (lo, hi) = (self.c_off_min.ln(), self.c_off_max.ln());
                    (lo + t * (hi - lo)).exp()
                } else {
                    self.c_off_min + t * (self.c_off_max - self.c_off_min)
                }
            })
            .collect();
        grid.extend(self.extra_c_off.iter().copied());
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub n: u32,
    pub c_off: T,
    pub min_pi_a: T,
    pub feasible: bool,
}

/// Evaluates the minimum trigger probability over the sweep grid, ordered by
/// `n` and then by ascending penalty. Infeasible rows are kept and flagged.
pub fn run_sweep<T: Scalar>(spec: &SweepSpec<T>) -> Result<Vec<SweepRow<T>>> {
    spec.validate()?;
    let grid = spec.c_off_grid();
    let mut n_values = spec.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();

    let mut rows = Vec::with_capacity(n_values.len() * grid.len());
    for &n in &n_values {
        for &c_off in &grid {
            let min = min_attention_probability(spec.c_m, n, c_off)?;
            rows.push(SweepRow {
                n,
                c_off,
                min_pi_a: min.pi_a,
                feasible: min.feasible,
            });
        }
    }
    Ok(rows)
}
