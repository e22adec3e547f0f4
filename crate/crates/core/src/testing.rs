//! Random instances shared by unit tests.

use rand::Rng;

use crate::economics::EconomicParams;
use crate::traffic::LoadMatrix;

/// 1..=max_sps SPs with positive loads over `horizon` hourly slots, priced so
/// that the grand coalition usually installs capacity.
pub(crate) fn random_instance<R: Rng>(rng: &mut R, max_sps: usize, horizon: usize) -> (LoadMatrix, EconomicParams) {
    let sps = rng.random_range(1..=max_sps);
    let rows = (0..sps)
        .map(|_| {
            let level = rng.random_range(1e5..1e6);
            (0..horizon).map(|_| level * rng.random_range(0.2..1.8)).collect()
        })
        .collect();
    priced(rng, rows, horizon)
}

/// Like [`random_instance`], but every SP's load is a multiple of one shared daily shape.
pub(crate) fn common_shape_instance<R: Rng>(
    rng: &mut R,
    max_sps: usize,
    horizon: usize,
) -> (LoadMatrix, EconomicParams) {
    let sps = rng.random_range(1..=max_sps);
    let shape: Vec<f64> = (0..horizon).map(|_| rng.random_range(0.2..1.8)).collect();
    let rows = (0..sps)
        .map(|_| {
            let level = rng.random_range(1e5..1e6);
            shape.iter().map(|s| level * s).collect()
        })
        .collect();
    priced(rng, rows, horizon)
}

fn priced<R: Rng>(rng: &mut R, rows: Vec<Vec<f64>>, horizon: usize) -> (LoadMatrix, EconomicParams) {
    let sps = rows.len();
    let params = EconomicParams {
        capacity_price: rng.random_range(0.5..5.0),
        maintenance_price: rng.random_range(0.0..0.05),
        investment_hours: horizon as f64,
        slot_hours: 1.0,
        benefit: (0..sps).map(|_| rng.random_range(1e-4..1e-3)).collect(),
        saturation: 0.03,
    };
    (LoadMatrix::from_rows(rows).unwrap(), params)
}
