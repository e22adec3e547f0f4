use rayon::prelude::*;

use super::PlayerSet;
use crate::allocation::{optimal_plan, AllocationPlan};
use crate::economics::{utility_unchecked, EconomicParams};
use crate::error::{Error, Result};
use crate::traffic::LoadMatrix;

/// Expected value of every coalition, indexed by bitmask, plus the plan behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    count: usize,
    values: Vec<f64>,
    plans: Vec<AllocationPlan>,
}

impl ValueTable {
    /// A table with values only, for games that do not come from a scenario.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let count = player_count(values.len())?;
        if values[0] != 0.0 {
            return Err(Error::invalid("values[0]", "the empty coalition must be worth 0"));
        }
        Ok(Self { count, values, plans: Vec::new() })
    }

    pub fn players(&self) -> usize {
        self.count
    }

    pub fn grand(&self) -> PlayerSet {
        PlayerSet::grand(self.count).expect("count validated at construction")
    }

    pub fn value(&self, s: PlayerSet) -> f64 {
        self.values[s.bits() as usize]
    }

    pub fn grand_value(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn plan(&self, s: PlayerSet) -> Option<&AllocationPlan> {
        self.plans.get(s.bits() as usize)
    }

    pub fn grand_plan(&self) -> Option<&AllocationPlan> {
        self.plans.last()
    }

    pub fn plans(&self) -> &[AllocationPlan] {
        &self.plans
    }
}

/// Number of players of a game given by `len = 2^n` values.
pub(crate) fn player_count(len: usize) -> Result<usize> {
    if !len.is_power_of_two() || len < 4 {
        let expected = len.next_power_of_two().max(4);
        return Err(Error::MissingSubset { expected, got: len });
    }
    let count = len.trailing_zeros() as usize;
    PlayerSet::grand(count)?;
    Ok(count)
}

/// Solves the plan of every coalition (in parallel) and records its expected value.
pub fn build_value_table(expected: &LoadMatrix, params: &EconomicParams) -> Result<ValueTable> {
    let count = expected.sps() + 1;
    let plans: Vec<AllocationPlan> = PlayerSet::all(count)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|s| {
            if s.is_productive() {
                optimal_plan(s, expected, params)
            } else {
                Ok(AllocationPlan::zero(s, expected.horizon()))
            }
        })
        .collect::<Result<_>>()?;
    let values = plans.iter().map(|p| p.objective).collect();
    Ok(ValueTable { count, values, plans })
}

/// Value of a coalition's fixed plan under realized loads.
pub fn realized_value(plan: &AllocationPlan, loads: &LoadMatrix, params: &EconomicParams) -> Result<f64> {
    if loads.horizon() != plan.horizon() || loads.sps() + 1 != plan.coalition.count() {
        return Err(Error::DimensionMismatch(format!(
            "plan covers {} players over {} slots, loads have {} SP rows over {} slots",
            plan.coalition.count(),
            plan.horizon(),
            loads.sps(),
            loads.horizon()
        )));
    }
    let revenue: f64 = plan
        .members()
        .iter()
        .map(|&sp| {
            let shares = plan.shares_of(sp).expect("member has a row");
            let beta = params.benefit[sp - 1];
            loads
                .row(sp - 1)
                .iter()
                .zip(shares)
                .map(|(&l, &h)| utility_unchecked(beta, params.saturation, l, h))
                .sum::<f64>()
        })
        .sum();
    Ok(revenue - plan.cost(params))
}

/// `v(S + i) - v(S)`.
pub fn marginal_contribution(table: &ValueTable, player: usize, s: PlayerSet) -> Result<f64> {
    if s.contains(player) {
        return Err(Error::PlayerInCoalition { player, coalition: s.bits() });
    }
    if player >= table.players() || s.count() != table.players() {
        return Err(Error::DimensionMismatch(format!(
            "player {player} or coalition {s:?} not in a {}-player game",
            table.players()
        )));
    }
    Ok(table.value(s.with(player)) - table.value(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::optimal_plan_numeric;
    use approx::assert_relative_eq;

    fn params(benefit: Vec<f64>, hours: f64) -> EconomicParams {
        EconomicParams {
            capacity_price: 1.0,
            maintenance_price: 0.01,
            investment_hours: hours,
            slot_hours: 1.0,
            benefit,
            saturation: 0.03,
        }
    }

    fn three_player() -> (LoadMatrix, EconomicParams) {
        let loads = LoadMatrix::from_rows(vec![vec![8e5, 1e6, 3e5, 6e5], vec![2e5, 9e5, 7e5, 1e6]]).unwrap();
        (loads, params(vec![1e-3, 2e-3], 4.0))
    }

    #[test]
    fn two_player_veto_structure() {
        let loads = LoadMatrix::from_rows(vec![vec![1e6; 3]]).unwrap();
        let p = params(vec![1e-3], 3.0);
        let table = build_value_table(&loads, &p).unwrap();
        assert_eq!(&table.values()[..3], &[0.0, 0.0, 0.0]);
        let grand = optimal_plan(PlayerSet::grand(2).unwrap(), &loads, &p).unwrap();
        assert_eq!(table.grand_value(), grand.objective);
        assert!(table.grand_value() > 0.0);
    }

    #[test]
    fn all_zero_loads_give_zero_table() {
        let table = build_value_table(&LoadMatrix::zeros(3, 5), &params(vec![1e-3; 3], 5.0)).unwrap();
        assert!(table.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grand_coalition_dominates() {
        let (loads, p) = three_player();
        let table = build_value_table(&loads, &p).unwrap();
        for s in PlayerSet::all(3) {
            let numeric = if s.is_productive() { optimal_plan_numeric(s, &loads, &p).unwrap().objective } else { 0.0 };
            assert_relative_eq!(table.value(s), numeric, max_relative = 1e-9, epsilon = 1e-9);
            assert!(table.grand_value() >= table.value(s));
            for r in s.subsets() {
                assert!(table.value(r) <= table.value(s) + 1e-9);
            }
        }
    }

    #[test]
    fn realized_value_at_the_mean_is_nominal() {
        let (loads, p) = three_player();
        let table = build_value_table(&loads, &p).unwrap();
        for plan in table.plans() {
            assert_relative_eq!(realized_value(plan, &loads, &p).unwrap(), table.value(plan.coalition), epsilon = 1e-9);
        }
    }

    #[test]
    fn realized_value_of_zero_loads_is_minus_cost() {
        let (loads, p) = three_player();
        let plan = optimal_plan(PlayerSet::grand(3).unwrap(), &loads, &p).unwrap();
        assert!(plan.capacity > 0.0);
        let v = realized_value(&plan, &LoadMatrix::zeros(2, 4), &p).unwrap();
        assert_eq!(v, -plan.cost(&p));
    }

    #[test]
    fn realized_value_matches_brute_force() {
        let (loads, p) = three_player();
        let plan = optimal_plan(PlayerSet::grand(3).unwrap(), &loads, &p).unwrap();
        let random = LoadMatrix::from_rows(vec![vec![1.1e6, 2e5, 4e5, 0.0], vec![3e5, 3e5, 1.2e6, 5e5]]).unwrap();
        let mut brute = -(p.capacity_price + p.maintenance_price * p.investment_hours) * plan.capacity;
        for t in 0..4 {
            for sp in 1..=2 {
                brute += p.benefit[sp - 1] * random.get(sp - 1, t) * (1.0 - (-p.saturation * plan.share(sp, t)).exp());
            }
        }
        assert_relative_eq!(realized_value(&plan, &random, &p).unwrap(), brute, max_relative = 1e-12);
        assert!(realized_value(&plan, &LoadMatrix::zeros(2, 3), &p).is_err());
    }

    #[test]
    fn marginal_contributions() {
        let (loads, p) = three_player();
        let table = build_value_table(&loads, &p).unwrap();
        let empty = PlayerSet::empty(3).unwrap();
        assert_eq!(marginal_contribution(&table, 0, empty).unwrap(), 0.0);
        let inp = PlayerSet::from_members(&[0], 3).unwrap();
        let direct = optimal_plan_numeric(inp.with(2), &loads, &p).unwrap().objective;
        assert_relative_eq!(marginal_contribution(&table, 2, inp).unwrap(), direct, max_relative = 1e-9);
        assert!(matches!(marginal_contribution(&table, 0, inp), Err(Error::PlayerInCoalition { .. })));
    }

    #[test]
    fn sole_sp_adds_everything() {
        let loads = LoadMatrix::from_rows(vec![vec![1e6; 2]]).unwrap();
        let table = build_value_table(&loads, &params(vec![1e-3], 2.0)).unwrap();
        let inp = PlayerSet::from_members(&[0], 2).unwrap();
        assert_eq!(marginal_contribution(&table, 1, inp).unwrap(), table.grand_value());
    }

    #[test]
    fn value_list_must_cover_every_subset() {
        assert!(matches!(ValueTable::from_values(vec![0.0; 6]), Err(Error::MissingSubset { expected: 8, got: 6 })));
        assert!(ValueTable::from_values(vec![0.0; 8]).is_ok());
    }
}
