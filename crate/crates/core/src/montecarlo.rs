//! Monte Carlo over load realizations.
//!
//! Every coalition keeps the plan it chose on expected loads; a realization
//! only re-prices those plans. With `w = beta (1 - e^{-xi h})` precomputed
//! per coalition, SP and slot, each realized value is a handful of dot
//! products.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::AllocationPlan;
use crate::economics::EconomicParams;
use crate::error::{Error, Result};
use crate::game::{shapley, shapley_into, shapley_weights, ValueTable};
use crate::seed::realization_seed;
use crate::traffic::{LoadMatrix, LoadSampler};

const HOURS_PER_YEAR: f64 = 8760.0;
const BALANCE_TOLERANCE: f64 = 1e-9;

/// How the infrastructure cost is split into per-player payments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaymentMode {
    /// Expected revenue minus expected Shapley payoff, fixed up front.
    ExAnte,
    /// Collected revenue minus realized Shapley payoff.
    #[default]
    ExPost,
}

impl std::str::FromStr for PaymentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex-ante" => Ok(Self::ExAnte),
            "ex-post" => Ok(Self::ExPost),
            other => Err(Error::invalid("payment_mode", format!("expected `ex-ante` or `ex-post`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub realizations: usize,
    pub master_seed: u64,
    pub payment_mode: PaymentMode,
    /// Keep each realization's load matrix in its outcome.
    pub keep_loads: bool,
}

impl SimulationOptions {
    pub fn new(realizations: usize, master_seed: u64) -> Self {
        Self { realizations, master_seed, payment_mode: PaymentMode::default(), keep_loads: false }
    }
}

/// Everything computed for one realization. Per-player vectors start with the InP.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutcome {
    pub realization_id: usize,
    pub loads: Option<LoadMatrix>,
    /// Realized value of every coalition, indexed by bitmask.
    pub realized_values: Vec<f64>,
    pub shapley: Vec<f64>,
    /// Revenue collected under the grand plan.
    pub collected: Vec<f64>,
    /// Collected minus expected revenue under the grand plan.
    pub deviations: Vec<f64>,
    pub payments: Vec<f64>,
    pub rewards: Vec<f64>,
    pub payback_slot: Option<usize>,
}

/// `w = beta (1 - e^{-xi h})` for every member row of a plan.
struct PlanWeights {
    rows: Vec<(usize, Vec<f64>)>,
    cost: f64,
}

impl PlanWeights {
    fn new(plan: &AllocationPlan, params: &EconomicParams) -> Self {
        let rows = plan
            .members()
            .iter()
            .map(|&sp| {
                let beta = params.benefit[sp - 1];
                let w = plan
                    .shares_of(sp)
                    .expect("member row")
                    .iter()
                    .map(|&h| beta * -(-params.saturation * h).exp_m1())
                    .collect();
                (sp, w)
            })
            .collect();
        Self { rows, cost: plan.cost(params) }
    }

    fn revenue_of(&self, sp: usize, loads: &LoadMatrix) -> f64 {
        self.rows
            .iter()
            .find(|(p, _)| *p == sp)
            .map_or(0.0, |(_, w)| w.iter().zip(loads.row(sp - 1)).map(|(w, l)| w * l).sum())
    }

    fn value(&self, loads: &LoadMatrix) -> f64 {
        self.rows.iter().map(|(sp, w)| w.iter().zip(loads.row(sp - 1)).map(|(w, l)| w * l).sum::<f64>()).sum::<f64>()
            - self.cost
    }
}

/// Smallest slot at which cumulative revenue covers the upfront cost.
fn payback(weights: &PlanWeights, loads: &LoadMatrix) -> Option<usize> {
    let mut balance = -weights.cost;
    if balance >= 0.0 {
        return Some(0);
    }
    for t in 0..loads.horizon() {
        balance += weights.rows.iter().map(|(sp, w)| w[t] * loads.get(sp - 1, t)).sum::<f64>();
        if balance >= 0.0 {
            return Some(t);
        }
    }
    None
}

fn check_horizon(sampler: &LoadSampler, params: &EconomicParams) -> Result<()> {
    if sampler.horizon() != params.horizon() || sampler.models().len() != params.sps() {
        return Err(Error::DimensionMismatch(format!(
            "sampler has {} SPs over {} slots, economics {} SPs over {} slots",
            sampler.models().len(),
            sampler.horizon(),
            params.sps(),
            params.horizon()
        )));
    }
    Ok(())
}

fn check_balance(what: &str, omega: usize, got: f64, want: f64, scale: f64) -> Result<()> {
    if (got - want).abs() > BALANCE_TOLERANCE * scale.max(want.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::InvariantViolated(format!("realization {omega}: {what} is {got}, expected {want}")));
    }
    Ok(())
}

/// Samples `realizations` load matrices and prices every coalition's plan on each.
///
/// Realization `w` draws from `realization_seed(master_seed, w)`, and results
/// come back in realization order, so the output does not depend on the
/// number of worker threads.
pub fn simulate(
    sampler: &LoadSampler,
    table: &ValueTable,
    params: &EconomicParams,
    options: &SimulationOptions,
) -> Result<Vec<RealizationOutcome>> {
    check_horizon(sampler, params)?;
    if options.realizations == 0 {
        return Err(Error::invalid("realizations", "must be at least 1"));
    }
    if table.plans().len() != table.values().len() || table.players() != params.sps() + 1 {
        return Err(Error::invalid("table", "simulation needs a value table built from this scenario"));
    }
    let n = table.players();
    let weights: Vec<PlanWeights> = table.plans().iter().map(|p| PlanWeights::new(p, params)).collect();
    let grand = weights.last().expect("grand plan");
    let expected_collected: Vec<f64> =
        (0..n).map(|i| if i == 0 { 0.0 } else { grand.revenue_of(i, sampler.expected()) }).collect();
    let shapley_expected = shapley(table.values())?;
    let sw = shapley_weights(n);

    (0..options.realizations)
        .into_par_iter()
        .map(|omega| {
            let loads = sampler.sample(realization_seed(options.master_seed, omega as u64));
            let realized_values: Vec<f64> =
                weights.iter().map(|w| if w.rows.is_empty() { -w.cost } else { w.value(&loads) }).collect();
            let mut x = vec![0.0; n];
            shapley_into(&realized_values, &sw, &mut x);
            let collected: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { grand.revenue_of(i, &loads) }).collect();
            let deviations: Vec<f64> = collected.iter().zip(&expected_collected).map(|(u, e)| u - e).collect();
            let payments: Vec<f64> = match options.payment_mode {
                PaymentMode::ExAnte => expected_collected.iter().zip(&shapley_expected).map(|(u, x)| u - x).collect(),
                PaymentMode::ExPost => collected.iter().zip(&x).map(|(u, x)| u - x).collect(),
            };
            let rewards: Vec<f64> = x.iter().zip(&payments).map(|(x, p)| x + p).collect();

            let total_collected: f64 = collected.iter().sum();
            let v_n = *realized_values.last().expect("grand value");
            let scale = total_collected.abs() + grand.cost;
            check_balance("sum of Shapley payoffs", omega, x.iter().sum(), v_n, scale)?;
            check_balance("sum of payments", omega, payments.iter().sum(), grand.cost, scale)?;
            check_balance("sum of rewards", omega, rewards.iter().sum(), total_collected, scale)?;

            Ok(RealizationOutcome {
                realization_id: omega,
                payback_slot: payback(grand, &loads),
                loads: options.keep_loads.then_some(loads),
                realized_values,
                shapley: x,
                collected,
                deviations,
                payments,
                rewards,
            })
        })
        .collect()
}

/// Payback slot of the grand plan for each realization, without the coalition analysis.
pub fn payback_slots(
    sampler: &LoadSampler,
    plan: &AllocationPlan,
    params: &EconomicParams,
    realizations: usize,
    master_seed: u64,
) -> Result<Vec<Option<usize>>> {
    check_horizon(sampler, params)?;
    let weights = PlanWeights::new(plan, params);
    Ok((0..realizations)
        .into_par_iter()
        .map(|omega| payback(&weights, &sampler.sample(realization_seed(master_seed, omega as u64))))
        .collect())
}

/// Payback slot of each outcome.
pub fn payback_distribution(outcomes: &[RealizationOutcome]) -> Vec<Option<usize>> {
    outcomes.iter().map(|o| o.payback_slot).collect()
}

/// Elapsed years at the start of `slot`.
pub fn slot_to_years(slot: usize, slot_hours: f64) -> f64 {
    slot as f64 * slot_hours / HOURS_PER_YEAR
}

/// Share of realizations in which each player's payoff is nonnegative, and
/// in which all of them are at once.
pub fn profitability_probabilities(outcomes: &[RealizationOutcome]) -> (Vec<f64>, f64) {
    let n = outcomes.first().map_or(0, |o| o.shapley.len());
    let total = outcomes.len().max(1) as f64;
    let per_player = (0..n).map(|i| outcomes.iter().filter(|o| o.shapley[i] >= 0.0).count() as f64 / total).collect();
    let joint = outcomes.iter().filter(|o| is_profitable(o)).count() as f64 / total;
    (per_player, joint)
}

pub fn is_profitable(outcome: &RealizationOutcome) -> bool {
    outcome.shapley.iter().all(|&x| x >= 0.0)
}

/// Every player's revenue deviation is strictly inside `delta_hat`.
pub fn is_stable(outcome: &RealizationOutcome, delta_hat: f64) -> bool {
    outcome.deviations.iter().all(|z| z.abs() < delta_hat)
}

pub fn empirical_stability_frequency(outcomes: &[RealizationOutcome], delta_hat: f64) -> f64 {
    outcomes.iter().filter(|o| is_stable(o, delta_hat)).count() as f64 / outcomes.len().max(1) as f64
}

/// Empirical quantiles, linearly interpolated between order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub p05: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
}

impl QuantileSummary {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            p05: q(0.05),
            p25: q(0.25),
            median: q(0.5),
            p75: q(0.75),
            p95: q(0.95),
            max: v[v.len() - 1],
        })
    }
}

/// Payback statistics; censored realizations never pay back and are left out of the quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaybackSummary {
    pub slots: Option<QuantileSummary>,
    pub years: Option<QuantileSummary>,
    pub censored: usize,
}

impl PaybackSummary {
    pub fn of(slots: &[Option<usize>], slot_hours: f64) -> Self {
        let observed: Vec<usize> = slots.iter().flatten().copied().collect();
        let as_f64: Vec<f64> = observed.iter().map(|&s| s as f64).collect();
        let years: Vec<f64> = observed.iter().map(|&s| slot_to_years(s, slot_hours)).collect();
        Self {
            slots: QuantileSummary::of(&as_f64),
            years: QuantileSummary::of(&years),
            censored: slots.len() - observed.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub realizations: usize,
    pub per_player_profit_prob: Vec<f64>,
    pub joint_profit_prob: f64,
    /// Present when a deviation threshold was supplied.
    pub empirical_stability_freq: Option<f64>,
    pub shapley_payoff: Vec<QuantileSummary>,
    pub payment: Vec<QuantileSummary>,
    pub reward: Vec<QuantileSummary>,
    pub collected: Vec<QuantileSummary>,
    pub payback: PaybackSummary,
}

pub fn summarize(outcomes: &[RealizationOutcome], delta_hat: Option<f64>, slot_hours: f64) -> SimulationSummary {
    let (per_player_profit_prob, joint_profit_prob) = profitability_probabilities(outcomes);
    let n = per_player_profit_prob.len();
    let per_player = |f: &dyn Fn(&RealizationOutcome) -> &[f64]| -> Vec<QuantileSummary> {
        (0..n).filter_map(|i| QuantileSummary::of(&outcomes.iter().map(|o| f(o)[i]).collect::<Vec<_>>())).collect()
    };
    SimulationSummary {
        realizations: outcomes.len(),
        joint_profit_prob,
        empirical_stability_freq: delta_hat.map(|d| empirical_stability_frequency(outcomes, d)),
        shapley_payoff: per_player(&|o| &o.shapley),
        payment: per_player(&|o| &o.payments),
        reward: per_player(&|o| &o.rewards),
        collected: per_player(&|o| &o.collected),
        payback: PaybackSummary::of(&payback_distribution(outcomes), slot_hours),
        per_player_profit_prob,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_value_table, delta_hat, stability_report};
    use crate::traffic::{BoundedLoadModel, FbmLoadModel, LoadModel, RateProfile, SineComponent};
    use approx::assert_relative_eq;

    fn profile(base: f64, amp: f64, phase: f64) -> RateProfile {
        RateProfile::new(base, vec![SineComponent { amplitude: amp, phase }], 24).unwrap()
    }

    fn params(sps: usize, hours: f64) -> EconomicParams {
        EconomicParams {
            capacity_price: 10.94,
            maintenance_price: 16.25 / 730.0,
            investment_hours: hours,
            slot_hours: 1.0,
            benefit: vec![6e-6; sps],
            saturation: 0.03,
        }
    }

    fn bounded(sigma: f64, sps: usize, hours: usize) -> (LoadSampler, EconomicParams) {
        let models = (0..sps)
            .map(|k| {
                LoadModel::Bounded(
                    BoundedLoadModel::new(profile(2000.0, 600.0, 4.0 * k as f64), sigma, 3600.0).unwrap(),
                )
            })
            .collect();
        (LoadSampler::new(models, hours).unwrap(), params(sps, hours as f64))
    }

    fn run(
        sampler: &LoadSampler,
        p: &EconomicParams,
        n: usize,
        mode: PaymentMode,
    ) -> (ValueTable, Vec<RealizationOutcome>) {
        let table = build_value_table(sampler.expected(), p).unwrap();
        let opts = SimulationOptions { payment_mode: mode, ..SimulationOptions::new(n, 7) };
        let outcomes = simulate(sampler, &table, p, &opts).unwrap();
        (table, outcomes)
    }

    #[test]
    fn zero_uncertainty_reproduces_the_nominal_game() {
        let (sampler, p) = bounded(0.0, 2, 72);
        let (table, outcomes) = run(&sampler, &p, 5, PaymentMode::ExPost);
        let x = shapley(table.values()).unwrap();
        assert!(table.grand_value() > 0.0);
        for o in &outcomes {
            for (a, b) in o.realized_values.iter().zip(table.values()) {
                assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-9);
            }
            for (a, b) in o.shapley.iter().zip(&x) {
                assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-9);
            }
            assert!(o.deviations.iter().all(|z| z.abs() <= 1e-9 * table.grand_value()));
        }
        let slots = payback_distribution(&outcomes);
        assert!(slots.iter().all(|s| *s == slots[0] && s.is_some()));
        let d = delta_hat(&table, &x).value;
        assert!(d > 0.0);
        assert_eq!(empirical_stability_frequency(&outcomes, d), 1.0);
        assert_eq!(empirical_stability_frequency(&outcomes, 0.0), 0.0);
    }

    #[test]
    fn payment_modes_agree_without_uncertainty() {
        let (sampler, p) = bounded(0.0, 2, 48);
        let (table, ante) = run(&sampler, &p, 2, PaymentMode::ExAnte);
        let (_, post) = run(&sampler, &p, 2, PaymentMode::ExPost);
        for (a, b) in ante.iter().zip(&post) {
            for (x, y) in a.payments.iter().zip(&b.payments) {
                assert_relative_eq!(x, y, epsilon = 1e-6);
            }
        }
        // the InP collects nothing, so ex ante it is paid its expected payoff
        let x = shapley(table.values()).unwrap();
        assert_relative_eq!(ante[0].payments[0], -x[0]);
    }

    #[test]
    fn accounting_identities_hold() {
        for mode in [PaymentMode::ExAnte, PaymentMode::ExPost] {
            let (sampler, p) = bounded(0.5, 3, 48);
            let (table, outcomes) = run(&sampler, &p, 50, mode);
            let cost = table.grand_plan().unwrap().cost(&p);
            for o in &outcomes {
                let v_n = *o.realized_values.last().unwrap();
                let scale = o.collected.iter().sum::<f64>() + cost;
                assert!((o.shapley.iter().sum::<f64>() - v_n).abs() <= 1e-9 * scale);
                assert!((o.payments.iter().sum::<f64>() - cost).abs() <= 1e-9 * scale);
                assert!((o.rewards.iter().sum::<f64>() - o.collected.iter().sum::<f64>()).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn shapley_per_realization_matches_permutations() {
        let (sampler, p) = bounded(0.4, 2, 24);
        let (_, outcomes) = run(&sampler, &p, 1, PaymentMode::ExPost);
        let v = &outcomes[0].realized_values;
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut x = [0.0; 3];
        for order in orders {
            let mut s = 0usize;
            for i in order {
                x[i] += (v[s | 1 << i] - v[s]) / 6.0;
                s |= 1 << i;
            }
        }
        for (a, b) in outcomes[0].shapley.iter().zip(x) {
            assert_relative_eq!(*a, b, max_relative = 1e-12, epsilon = 1e-9);
        }
    }

    #[test]
    fn null_player_gets_nothing() {
        let mut models: Vec<LoadModel> = (0..2)
            .map(|_| LoadModel::Bounded(BoundedLoadModel::new(profile(2000.0, 600.0, 0.0), 0.5, 3600.0).unwrap()))
            .collect();
        models
            .push(LoadModel::Bounded(BoundedLoadModel::new(RateProfile::constant(0.0).unwrap(), 0.5, 3600.0).unwrap()));
        let sampler = LoadSampler::new(models, 24).unwrap();
        let (_, outcomes) = run(&sampler, &params(3, 24.0), 20, PaymentMode::ExPost);
        assert!(outcomes.iter().all(|o| o.shapley[3] == 0.0));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let (sampler, p) = bounded(0.3, 3, 48);
        let table = build_value_table(sampler.expected(), &p).unwrap();
        let opts = SimulationOptions::new(64, 99);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate(&sampler, &table, &p, &opts).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| simulate(&sampler, &table, &p, &opts).unwrap());
        assert_eq!(one, many);
    }

    #[test]
    fn zero_cost_pays_back_immediately() {
        let models =
            vec![LoadModel::Bounded(BoundedLoadModel::new(RateProfile::constant(0.0).unwrap(), 0.5, 3600.0).unwrap())];
        let sampler = LoadSampler::new(models, 24).unwrap();
        let p = params(1, 24.0);
        let (table, outcomes) = run(&sampler, &p, 3, PaymentMode::ExPost);
        assert_eq!(table.grand_plan().unwrap().capacity, 0.0);
        assert!(outcomes.iter().all(|o| o.payback_slot == Some(0)));
        let summary = PaybackSummary::of(&payback_distribution(&outcomes), 1.0);
        assert_eq!(summary.years.unwrap().max, 0.0);
    }

    #[test]
    fn summary_invariants() {
        let models = (0..2)
            .map(|k| {
                LoadModel::Fbm(FbmLoadModel::new(profile(2000.0, 600.0, 6.0 * k as f64), 0.8, 0.7, 3600.0).unwrap())
            })
            .collect();
        let sampler = LoadSampler::new(models, 96).unwrap();
        let p = params(2, 96.0);
        let (table, outcomes) = run(&sampler, &p, 100, PaymentMode::ExPost);
        let d = delta_hat(&table, &shapley(table.values()).unwrap()).value;
        let s = summarize(&outcomes, Some(d), 1.0);
        let min = s.per_player_profit_prob.iter().copied().fold(1.0, f64::min);
        assert!(s.joint_profit_prob <= min);
        assert_eq!(s.payback.censored + s.payback.slots.as_ref().map_or(0, |q| q.count), 100);
        assert!(matches!(stability_report(&table, sampler.models(), &p), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn quantiles() {
        let q = QuantileSummary::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.min, q.p25, q.median, q.p75, q.max, q.mean), (1.0, 2.0, 3.0, 4.0, 5.0, 3.0));
        assert_relative_eq!(q.p05, 1.2);
        assert!(QuantileSummary::of(&[]).is_none());
    }
}
