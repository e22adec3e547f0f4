// Capacity each coalition would install, and how the grand coalition splits it per hour.

use std::path::Path;

use coinvest::allocation::optimal_plan;
use coinvest::game::PlayerSet;
use coinvest::scenario::ScenarioConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/two_sp_bounded.toml");
    let scenario = ScenarioConfig::from_path(&path)?.validate()?;
    let names = scenario.player_names();
    let expected = scenario.expected_loads();
    let params = scenario.params();

    println!("marginal price of a vcore over the horizon: ${:.2}", params.marginal_price());
    for s in PlayerSet::all(scenario.players()).filter(|s| s.is_productive()) {
        let plan = optimal_plan(s, &expected, params)?;
        println!(
            "{:<14} C = {:>7.2} vcores  cost ${:>10.0}  expected payoff ${:>12.0}  ({:?})",
            s.label(&names),
            plan.capacity,
            plan.cost(params),
            plan.objective,
            plan.method,
        );
    }

    let grand = optimal_plan(PlayerSet::grand(scenario.players())?, &expected, params)?;
    println!("\nhour  {}", names[1..].join("  "));
    for t in 0..24 {
        let shares: Vec<String> = grand.members().iter().map(|&sp| format!("{:6.1}", grand.share(sp, t))).collect();
        println!("{t:>4}  {}", shares.join("  "));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
