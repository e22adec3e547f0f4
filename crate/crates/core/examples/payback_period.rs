// When cumulative revenue of the grand coalition first covers its cost,
// for a five- and a ten-year commitment.

use std::path::Path;

use coinvest::allocation::optimal_plan;
use coinvest::game::PlayerSet;
use coinvest::montecarlo::{payback_slots, PaybackSummary};
use coinvest::scenario::ScenarioConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/two_sp_fbm.toml");
    let base = ScenarioConfig::from_path(&path)?.validate()?;
    for years in [5.0, 10.0] {
        let s = base.with_investment_years(years)?;
        let plan = optimal_plan(PlayerSet::grand(s.players())?, &s.expected_loads(), s.params())?;
        let slots = payback_slots(&s.sampler()?, &plan, s.params(), 200, 3)?;
        let summary = PaybackSummary::of(&slots, s.params().slot_hours);
        match summary.years {
            Some(q) => println!(
                "I = {years:>4} y: {:.0} vcores, payback median {:.2} y ({:.1}% of I), 5-95% [{:.2}, {:.2}] y, {} never",
                plan.capacity,
                q.median,
                100.0 * q.median / years,
                q.p05,
                q.p95,
                summary.censored
            ),
            None => println!("I = {years:>4} y: no realization pays back"),
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
