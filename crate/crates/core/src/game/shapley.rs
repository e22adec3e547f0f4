use super::value_table::player_count;
use crate::error::{Error, Result};

/// `|S|! (n - |S| - 1)! / n!` for `|S| = 0..n`.
pub(crate) fn shapley_weights(n: usize) -> Vec<f64> {
    let fact: Vec<f64> = (0..=n)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect()
}

/// Shapley value of a game given as `2^n` coalition values indexed by bitmask.
pub fn shapley(values: &[f64]) -> Result<Vec<f64>> {
    let n = player_count(values.len())?;
    if values[0] != 0.0 {
        return Err(Error::invalid("values[0]", "the empty coalition must be worth 0"));
    }
    let weights = shapley_weights(n);
    let mut out = vec![0.0; n];
    shapley_into(values, &weights, &mut out);
    Ok(out)
}

/// Allocation-free kernel; `weights` from [`shapley_weights`].
pub(crate) fn shapley_into(values: &[f64], weights: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (i, x) in out.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut acc = 0.0;
        for s in 0..values.len() {
            if s & bit == 0 {
                acc += weights[s.count_ones() as usize] * (values[s | bit] - values[s]);
            }
        }
        *x = acc;
    }
    debug_assert_eq!(values.len(), 1 << n);
}
