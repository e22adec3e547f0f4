// Analytic stability guarantee against an empirical check, across load spreads.
//
// The three comparable SPs keep a wide margin. Adding a large and a small SP
// shrinks the smallest coalition surplus, and the large SP's revenue swings
// dwarf what is left.

use std::path::Path;

use coinvest::game::{build_value_table, stability_report};
use coinvest::montecarlo::{empirical_stability_frequency, simulate, SimulationOptions};
use coinvest::scenario::{Scenario, ScenarioConfig};

const REALIZATIONS: usize = 200;

fn sweep(label: &str, scenario: &Scenario) -> Result<(), Box<dyn std::error::Error>> {
    println!("{label}");
    println!("  sigma   delta_hat    nu_lb  empirical");
    for sigma in [0.001, 0.25, 0.5] {
        let s = scenario.with_sigma(sigma)?;
        let table = build_value_table(&s.expected_loads(), s.params())?;
        let report = stability_report(&table, s.models(), s.params())?;
        let outcomes = simulate(&s.sampler()?, &table, s.params(), &SimulationOptions::new(REALIZATIONS, 11))?;
        let freq = empirical_stability_frequency(&outcomes, report.delta_hat.value);
        println!("  {sigma:<6} {:>10.0} {:>8.4} {:>10.3}", report.delta_hat.value, report.nu_lower_bound, freq);
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/five_sp_bounded.toml");
    let scenario = ScenarioConfig::from_path(&path)?.validate()?;
    sweep("InP + SP1..SP3", &scenario.with_sps(&[1, 2, 3])?)?;
    sweep("all five SPs", &scenario)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
