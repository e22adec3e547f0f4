// Shapley payoffs of the expected game, and whether they sit in its core.

use std::path::Path;

use coinvest::game::{build_value_table, check_core, check_supermodularity, shapley, stability_value_hat};
use coinvest::scenario::ScenarioConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/five_sp_bounded.toml");
    let scenario = ScenarioConfig::from_path(&path)?.validate()?;
    let names = scenario.player_names();
    let table = build_value_table(&scenario.expected_loads(), scenario.params())?;
    let x = shapley(table.values())?;

    println!("v(N) = ${:.0}", table.grand_value());
    for (name, xi) in names.iter().zip(&x) {
        println!("  {name:<4} ${xi:>12.0}  ({:.1}%)", 100.0 * xi / table.grand_value());
    }

    let tolerance = 1e-7 * table.grand_value().abs();
    let violations = check_supermodularity(&table, tolerance);
    println!("supermodular: {}", violations.is_empty());
    for v in violations.iter().take(3) {
        println!(
            "  {} adds ${:.1} more to {} than to {}",
            names[v.player],
            v.gap,
            v.smaller.label(&names),
            v.larger.label(&names)
        );
    }
    println!("Shapley in the core: {}", check_core(&table, &x, tolerance));
    println!("smallest coalition surplus: ${:.0}", stability_value_hat(&table, &x));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
