// How often each player ends up with a nonnegative realized Shapley payoff
// as fBm noise takes over the traffic trend.

use std::path::Path;

use coinvest::game::build_value_table;
use coinvest::montecarlo::{profitability_probabilities, simulate, SimulationOptions};
use coinvest::scenario::ScenarioConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/two_sp_fbm.toml");
    let scenario = ScenarioConfig::from_path(&path)?.validate()?;
    println!("alpha   {}  joint", scenario.player_names().join("   "));
    for alpha in [0.001, 0.25, 0.5, 0.75, 1.0] {
        let s = scenario.with_alpha(alpha)?;
        let table = build_value_table(&s.expected_loads(), s.params())?;
        let outcomes = simulate(&s.sampler()?, &table, s.params(), &SimulationOptions::new(100, 7))?;
        let (per_player, joint) = profitability_probabilities(&outcomes);
        let cells: Vec<String> = per_player.iter().map(|p| format!("{p:.2}")).collect();
        println!("{alpha:<6}  {}  {joint:.2}", cells.join("  "));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
