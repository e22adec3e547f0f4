// Upfront payments and end-of-game rewards, with payments fixed from
// expected revenue (ex ante) or from collected revenue (ex post).
//
// The reward is the realized Shapley payoff plus the payment, so the rewards
// add up to the revenue actually collected. The InP collects nothing itself;
// its payment is negative.

use std::path::Path;

use coinvest::game::build_value_table;
use coinvest::montecarlo::{simulate, PaymentMode, SimulationOptions};
use coinvest::scenario::ScenarioConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/two_sp_bounded.toml");
    let scenario = ScenarioConfig::from_path(&path)?.validate()?;
    let names = scenario.player_names();
    let table = build_value_table(&scenario.expected_loads(), scenario.params())?;
    let cost = table.grand_plan().map_or(0.0, |p| p.cost(scenario.params()));
    println!("infrastructure cost ${cost:.0}");

    for mode in [PaymentMode::ExAnte, PaymentMode::ExPost] {
        let options = SimulationOptions { payment_mode: mode, ..SimulationOptions::new(3, 42) };
        println!("{mode:?}");
        for outcome in simulate(&scenario.sampler()?, &table, scenario.params(), &options)? {
            let cells: Vec<String> = names
                .iter()
                .enumerate()
                .map(|(i, n)| format!("{n} p={:>9.0} r={:>9.0}", outcome.payments[i], outcome.rewards[i]))
                .collect();
            println!("  #{}: {}", outcome.realization_id, cells.join(" | "));
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
