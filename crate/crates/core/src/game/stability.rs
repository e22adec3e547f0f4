//! Stability of the grand coalition: core checks, stability values, the
//! deviation threshold and the Hoeffding lower bound.

use serde::{Deserialize, Serialize};

use super::lp::{maximize, LinearProgram, Relation};
use super::{shapley, PlayerSet, ValueTable};
use crate::allocation::AllocationPlan;
use crate::economics::EconomicParams;
use crate::error::{Error, Result};
use crate::traffic::LoadModel;

/// `R ⊆ S` with `Δ_j(R) > Δ_j(S) + tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupermodularityViolation {
    pub player: usize,
    pub smaller: PlayerSet,
    pub larger: PlayerSet,
    /// `Δ_j(R) - Δ_j(S)`, positive.
    pub gap: f64,
}

/// Every pair `R ⊆ S ⊆ N \ {j}` where `j` adds more to `R` than to `S`.
pub fn check_supermodularity(table: &ValueTable, tolerance: f64) -> Vec<SupermodularityViolation> {
    let grand = table.grand();
    let mut out = Vec::new();
    for j in 0..table.players() {
        for s in grand.without(j).subsets() {
            let delta_s = table.value(s.with(j)) - table.value(s);
            for r in s.subsets() {
                let gap = table.value(r.with(j)) - table.value(r) - delta_s;
                if gap > tolerance {
                    out.push(SupermodularityViolation { player: j, smaller: r, larger: s, gap });
                }
            }
        }
    }
    out
}

/// Efficient and unblocked by every proper coalition, up to `tolerance`.
pub fn check_core(table: &ValueTable, allocation: &[f64], tolerance: f64) -> bool {
    if allocation.len() != table.players() {
        return false;
    }
    let total: f64 = allocation.iter().sum();
    if (total - table.grand_value()).abs() > tolerance {
        return false;
    }
    let grand = table.grand();
    PlayerSet::all(table.players())
        .filter(|s| *s != grand && !s.is_empty())
        .all(|s| coalition_sum(allocation, s) >= table.value(s) - tolerance)
}

fn coalition_sum(x: &[f64], s: PlayerSet) -> f64 {
    s.members().map(|i| x[i]).sum()
}

fn proper_coalitions(count: usize) -> impl Iterator<Item = PlayerSet> {
    PlayerSet::all(count).filter(|s| !s.is_empty() && !s.is_grand())
}

/// Smallest slack `Σ_S x - v(S)` over proper nonempty coalitions.
pub fn stability_value_hat(table: &ValueTable, allocation: &[f64]) -> f64 {
    proper_coalitions(table.players())
        .map(|s| coalition_sum(allocation, s) - table.value(s))
        .fold(f64::INFINITY, f64::min)
}

/// Largest achievable smallest slack over efficient allocations (least-core LP).
pub fn stability_value_lp(table: &ValueTable) -> Result<f64> {
    let n = table.players();
    let scale = table.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    // z = (x+ , x-, s+, s-)
    let width = 2 * n + 2;
    let mut objective = vec![0.0; width];
    objective[2 * n] = 1.0;
    objective[2 * n + 1] = -1.0;
    let mut rows = Vec::new();
    for s in proper_coalitions(n) {
        let mut a = vec![0.0; width];
        for i in s.members() {
            a[i] = 1.0;
            a[n + i] = -1.0;
        }
        a[2 * n] = -1.0;
        a[2 * n + 1] = 1.0;
        rows.push((a, Relation::Ge, table.value(s) / scale));
    }
    let mut eff = vec![0.0; width];
    for i in 0..n {
        eff[i] = 1.0;
        eff[n + i] = -1.0;
    }
    rows.push((eff, Relation::Eq, table.grand_value() / scale));
    let (value, _) = maximize(&LinearProgram { objective, rows })?;
    Ok(value * scale)
}

/// The deviation threshold and whether the game was degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaHat {
    pub value: f64,
    /// `v(N) <= 0`: nothing to share, threshold pinned at 0.
    pub degenerate: bool,
}

/// Threshold built from a stability value `sigma`:
/// `min(v(N)/n, sigma / max_S(|S| + (n - 2|S|)(v(S) + sigma)/v(N)))`.
pub fn delta_from_stability_value(table: &ValueTable, sigma: f64) -> DeltaHat {
    let v_n = table.grand_value();
    if v_n <= 0.0 {
        return DeltaHat { value: 0.0, degenerate: true };
    }
    let n = table.players() as f64;
    let denominator = proper_coalitions(table.players())
        .map(|s| {
            let size = s.len() as f64;
            size + (n - 2.0 * size) * (table.value(s) + sigma) / v_n
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let second = if denominator <= 0.0 { f64::INFINITY } else { sigma / denominator };
    DeltaHat { value: (v_n / n).min(second).max(0.0), degenerate: false }
}

/// Threshold anchored on the expected Shapley value.
pub fn delta_hat(table: &ValueTable, shapley_expected: &[f64]) -> DeltaHat {
    delta_from_stability_value(table, stability_value_hat(table, shapley_expected))
}

/// Width of the revenue interval of `player` at slot `t` under the grand plan.
pub fn utility_range(
    player: usize,
    t: usize,
    plan: &AllocationPlan,
    models: &[LoadModel],
    params: &EconomicParams,
) -> Result<f64> {
    if player == 0 {
        return Ok(0.0);
    }
    match models.get(player - 1) {
        Some(LoadModel::Bounded(m)) => {
            let (lo, hi) = m.load_bounds(t);
            let beta = params.benefit[player - 1];
            Ok(beta * -(-params.saturation * plan.share(player, t)).exp_m1() * (hi - lo))
        }
        Some(LoadModel::Fbm(_)) => {
            Err(Error::ModelMismatch("revenue ranges need bounded loads; the fBm model has unbounded support".into()))
        }
        None => Err(Error::DimensionMismatch(format!("no traffic model for player {player}"))),
    }
}

/// `Σ_t range(u_i^t)^2` per player (InP first, always 0).
pub fn range_square_sums(plan: &AllocationPlan, models: &[LoadModel], params: &EconomicParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0];
    for sp in 1..=models.len() {
        let mut acc = 0.0;
        for t in 0..plan.horizon() {
            acc += utility_range(sp, t, plan, models, params)?.powi(2);
        }
        out.push(acc);
    }
    Ok(out)
}

/// `max(1 - 2 exp(-2 delta^2 / Σ range^2), 0)`, and 1 when there is no range.
pub fn hoeffding_bound(delta_hat: f64, range_square_sum: f64) -> f64 {
    if range_square_sum <= 0.0 {
        return 1.0;
    }
    (1.0 - 2.0 * (-2.0 * delta_hat * delta_hat / range_square_sum).exp()).max(0.0)
}

/// Per-player bounds and their product.
pub fn stability_lower_bound(delta_hat: f64, range_square_sums: &[f64]) -> (Vec<f64>, f64) {
    let per_player: Vec<f64> = range_square_sums.iter().map(|&r| hoeffding_bound(delta_hat, r)).collect();
    let nu = per_player.iter().product();
    (per_player, nu)
}

/// Everything the bounded-model stability analysis produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub shapley_expected: Vec<f64>,
    pub sigma_hat: f64,
    pub delta_hat: DeltaHat,
    pub per_player_bound: Vec<f64>,
    pub nu_lower_bound: f64,
    /// `Σ_t range(u_i^t)^2` per player.
    pub range_square_sums: Vec<f64>,
}

/// Runs the full analysis on a table built from `models`.
pub fn stability_report(table: &ValueTable, models: &[LoadModel], params: &EconomicParams) -> Result<StabilityReport> {
    let plan = table
        .grand_plan()
        .ok_or_else(|| Error::invalid("table", "stability analysis needs the plans behind the values"))?;
    let ranges = range_square_sums(plan, models, params)?;
    stability_report_from_ranges(table, ranges)
}

/// Same as [`stability_report`] with precomputed range sums.
pub fn stability_report_from_ranges(table: &ValueTable, range_square_sums: Vec<f64>) -> Result<StabilityReport> {
    let x = shapley(table.values())?;
    let sigma_hat = stability_value_hat(table, &x);
    let delta = delta_from_stability_value(table, sigma_hat);
    let (per_player_bound, nu_lower_bound) = stability_lower_bound(delta.value, &range_square_sums);
    Ok(StabilityReport {
        shapley_expected: x,
        sigma_hat,
        delta_hat: delta,
        per_player_bound,
        nu_lower_bound,
        range_square_sums,
    })
}
