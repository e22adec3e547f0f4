//! Optimal capacity and per-slot shares for a coalition.
//!
//! For a fixed coalition the expected payoff is concave in the shares, so
//! the optimum is characterised by its KKT system: in every slot the
//! marginal utilities `xi beta_i l_i e^{-xi h_i}` of the served SPs equal a
//! common multiplier `lambda_t`, and the multipliers sum to the marginal
//! price `d + d' I`. Interior solutions have a closed form; everything else
//! goes through [`optimal_plan_numeric`], which is the source of truth.

use serde::{Deserialize, Serialize};

use crate::economics::{cost, utility_unchecked, EconomicParams};
use crate::error::{Error, Result};
use crate::game::PlayerSet;
use crate::traffic::LoadMatrix;

const MAX_ITERATIONS: usize = 200;

/// How a plan was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Coalition cannot install anything, or nobody has load.
    Trivial,
    ClosedForm,
    Numeric,
}

/// Installed capacity and per-slot shares of one coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub coalition: PlayerSet,
    /// vcores
    pub capacity: f64,
    /// Expected payoff at the optimum, dollars.
    pub objective: f64,
    pub method: SolveMethod,
    /// SP ids that own a row in `shares`, ascending.
    members: Vec<usize>,
    horizon: usize,
    shares: Vec<f64>,
}

impl AllocationPlan {
    /// Nothing installed, nothing shared.
    pub fn zero(coalition: PlayerSet, horizon: usize) -> Self {
        Self {
            coalition,
            capacity: 0.0,
            objective: 0.0,
            method: SolveMethod::Trivial,
            members: Vec::new(),
            horizon,
            shares: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// SPs that hold a share row (members of the coalition with the InP present).
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Shares of `player` over the horizon; `None` for the InP and non-members.
    pub fn shares_of(&self, player: usize) -> Option<&[f64]> {
        let k = self.members.iter().position(|&p| p == player)?;
        Some(&self.shares[k * self.horizon..(k + 1) * self.horizon])
    }

    pub fn share(&self, player: usize, t: usize) -> f64 {
        self.shares_of(player).map_or(0.0, |row| row[t])
    }

    /// Sum of all shares at slot `t`.
    pub fn used_capacity(&self, t: usize) -> f64 {
        self.members.iter().map(|&p| self.share(p, t)).sum()
    }

    /// Infrastructure cost of this plan.
    pub fn cost(&self, params: &EconomicParams) -> f64 {
        cost(params, self.capacity).unwrap_or(0.0)
    }
}

/// Why the closed form cannot be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inapplicable {
    /// Some SP of the coalition has load in some slots but not in others.
    MixedZeroLoads,
    /// The capacity formula is not positive.
    NonPositiveCapacity,
    /// A share came out negative.
    NegativeShare,
}

/// Plan from the interior closed form, or the reason it does not apply.
pub fn optimal_plan_closed_form(
    coalition: PlayerSet,
    expected: &LoadMatrix,
    params: &EconomicParams,
) -> Result<std::result::Result<AllocationPlan, Inapplicable>> {
    check_dims(coalition, expected, params)?;
    let horizon = expected.horizon();
    if !coalition.has_inp() {
        return Ok(Ok(AllocationPlan::zero(coalition, horizon)));
    }
    let xi = params.saturation;
    let mut active = Vec::new();
    for sp in coalition.sps() {
        let beta = params.benefit[sp - 1];
        let row = expected.row(sp - 1);
        let positive = row.iter().filter(|&&l| beta * l > 0.0).count();
        if positive == horizon {
            active.push(sp);
        } else if positive > 0 {
            return Ok(Err(Inapplicable::MixedZeroLoads));
        }
    }
    if active.is_empty() {
        return Ok(Ok(AllocationPlan::zero(coalition, horizon)));
    }
    let n = active.len() as f64;
    let price = params.marginal_price();
    // log of xi beta l, per active SP and slot
    let log_a: Vec<Vec<f64>> = active
        .iter()
        .map(|&sp| {
            let beta = params.benefit[sp - 1];
            expected.row(sp - 1).iter().map(|&l| (xi * beta * l).ln()).collect()
        })
        .collect();
    let mean_log: Vec<f64> = (0..horizon).map(|t| log_a.iter().map(|r| r[t]).sum::<f64>() / n).collect();
    let geo_sum: f64 = mean_log.iter().map(|m| m.exp()).sum();
    let capacity = n / xi * (geo_sum / price).ln();
    if !(capacity > 0.0) {
        return Ok(Err(Inapplicable::NonPositiveCapacity));
    }
    let mut shares = Vec::with_capacity(active.len() * horizon);
    for row in &log_a {
        for t in 0..horizon {
            let h = capacity / n + (row[t] - mean_log[t]) / xi;
            if h < 0.0 {
                return Ok(Err(Inapplicable::NegativeShare));
            }
            shares.push(h);
        }
    }
    let mut plan = AllocationPlan {
        coalition,
        capacity,
        objective: 0.0,
        method: SolveMethod::ClosedForm,
        members: active,
        horizon,
        shares,
    };
    plan.objective = expected_payoff(&plan, expected, params);
    Ok(Ok(plan))
}

/// Per-slot water-filling data: `ln(xi beta l)` of the SPs with load,
/// sorted in decreasing order, and their prefix sums.
struct Slot {
    order: Vec<usize>,
    log_a: Vec<f64>,
    prefix: Vec<f64>,
}

impl Slot {
    /// `(ln lambda, served count)` at capacity `c`; `None` if nobody has load.
    fn level(&self, xi: f64, c: f64) -> Option<(f64, usize)> {
        let m = self.log_a.len();
        if m == 0 {
            return None;
        }
        let mut k = 1;
        loop {
            let log_lambda = (self.prefix[k - 1] - xi * c) / k as f64;
            if k == m || self.log_a[k] <= log_lambda {
                return Some((log_lambda, k));
            }
            k += 1;
        }
    }
}

/// Plan from the KKT conditions, handling `h >= 0` and zero loads explicitly.
///
/// Each slot is solved exactly by water-filling over the sorted marginal
/// values. The multiplier sum `g(C)` is convex and decreasing, so Newton's
/// method started left of the root increases monotonically onto it; a
/// bisection bracket guards against rounding.
pub fn optimal_plan_numeric(
    coalition: PlayerSet,
    expected: &LoadMatrix,
    params: &EconomicParams,
) -> Result<AllocationPlan> {
    check_dims(coalition, expected, params)?;
    let horizon = expected.horizon();
    if !coalition.has_inp() {
        return Ok(AllocationPlan::zero(coalition, horizon));
    }
    let xi = params.saturation;
    let members: Vec<usize> =
        coalition.sps().filter(|&sp| expected.row(sp - 1).iter().any(|&l| params.benefit[sp - 1] * l > 0.0)).collect();
    if members.is_empty() {
        return Ok(AllocationPlan::zero(coalition, horizon));
    }
    let slots: Vec<Slot> = (0..horizon)
        .map(|t| {
            let mut entries: Vec<(usize, f64)> = members
                .iter()
                .enumerate()
                .filter_map(|(k, &sp)| {
                    let a = xi * params.benefit[sp - 1] * expected.get(sp - 1, t);
                    (a > 0.0).then(|| (k, a.ln()))
                })
                .collect();
            entries.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            let mut prefix = Vec::with_capacity(entries.len());
            let mut acc = 0.0;
            for e in &entries {
                acc += e.1;
                prefix.push(acc);
            }
            Slot { order: entries.iter().map(|e| e.0).collect(), log_a: entries.iter().map(|e| e.1).collect(), prefix }
        })
        .collect();

    let price = params.marginal_price();
    let g = |c: f64| -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for s in &slots {
            if let Some((log_lambda, k)) = s.level(xi, c) {
                let lambda = log_lambda.exp();
                value += lambda;
                slope -= xi * lambda / k as f64;
            }
        }
        (value, slope)
    };

    let (g0, _) = g(0.0);
    let capacity = if g0 <= price {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = members.len() as f64 / xi * (g0 / price).ln();
        let mut c = 0.0;
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let (value, slope) = g(c);
            let residual = value - price;
            if residual.abs() <= 1e-14 * price {
                converged = true;
                break;
            }
            if residual > 0.0 {
                lo = c;
            } else {
                hi = c;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                converged = true;
                break;
            }
            let newton = c - residual / slope;
            c = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        if !converged {
            return Err(Error::NoConvergence(format!(
                "capacity search for coalition {coalition:?} stalled after {MAX_ITERATIONS} iterations"
            )));
        }
        c
    };

    let mut shares = vec![0.0; members.len() * horizon];
    if capacity > 0.0 {
        for (t, s) in slots.iter().enumerate() {
            let Some((log_lambda, k)) = s.level(xi, capacity) else { continue };
            for j in 0..k {
                let h = (s.log_a[j] - log_lambda) / xi;
                shares[s.order[j] * horizon + t] = h.max(0.0);
            }
        }
    }
    let mut plan =
        AllocationPlan { coalition, capacity, objective: 0.0, method: SolveMethod::Numeric, members, horizon, shares };
    plan.objective = expected_payoff(&plan, expected, params);
    Ok(plan)
}

/// Closed form when it applies, numeric otherwise.
pub fn optimal_plan(coalition: PlayerSet, expected: &LoadMatrix, params: &EconomicParams) -> Result<AllocationPlan> {
    match optimal_plan_closed_form(coalition, expected, params)? {
        Ok(plan) => Ok(plan),
        Err(_) => optimal_plan_numeric(coalition, expected, params),
    }
}

/// Expected utilities under `plan` minus its cost.
pub fn expected_payoff(plan: &AllocationPlan, expected: &LoadMatrix, params: &EconomicParams) -> f64 {
    let revenue: f64 = plan
        .members
        .iter()
        .map(|&sp| {
            let beta = params.benefit[sp - 1];
            let shares = plan.shares_of(sp).unwrap_or(&[]);
            expected
                .row(sp - 1)
                .iter()
                .zip(shares)
                .map(|(&l, &h)| utility_unchecked(beta, params.saturation, l, h))
                .sum::<f64>()
        })
        .sum();
    revenue - plan.cost(params)
}

fn check_dims(coalition: PlayerSet, expected: &LoadMatrix, params: &EconomicParams) -> Result<()> {
    let sps = coalition.count() - 1;
    if expected.sps() != sps || params.benefit.len() != sps {
        return Err(Error::DimensionMismatch(format!(
            "{} players need {sps} SP rows and benefits, got {} rows and {} benefits",
            coalition.count(),
            expected.sps(),
            params.benefit.len()
        )));
    }
    if expected.horizon() == 0 {
        return Err(Error::invalid("horizon", "must be at least one slot"));
    }
    Ok(())
}
