// Daily request profiles and one sampled week of load for each uncertainty model.
//
// Run with `cargo run --example load_traffic`.

use std::path::Path;

use coinvest::scenario::ScenarioConfig;
use coinvest::seed::realization_seed;

const WEEK: usize = 24 * 7;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["two_sp_bounded", "two_sp_fbm"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"));
        let scenario = ScenarioConfig::from_path(&path)?.validate()?;
        let expected = scenario.expected_loads();
        let realized = scenario.sampler()?.sample(realization_seed(1, 0));

        println!("{name}: {} SPs over {} hourly slots", scenario.players() - 1, scenario.horizon());
        for (k, sp) in scenario.player_names().iter().skip(1).enumerate() {
            let week = |row: &[f64]| row[..WEEK].iter().sum::<f64>();
            let peak = (0..24).max_by(|&a, &b| expected.get(k, a).total_cmp(&expected.get(k, b))).unwrap_or(0);
            println!(
                "  {sp}: first week expected {:.3e} requests, sampled {:.3e}; daily peak at hour {peak}",
                week(expected.row(k)),
                week(realized.row(k)),
            );
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
