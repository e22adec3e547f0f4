// Exact fBm paths: sampled mean of `max(0, f_t)` against `t^H / sqrt(2 pi)`.

use coinvest::traffic::FbmGenerator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PATHS: usize = 20_000;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("  H     t    sampled  expected");
    for hurst in [0.3, 0.5, 0.7, 0.9] {
        let generator = FbmGenerator::new(hurst, 101)?;
        let mut sums = [0.0; 3];
        let mut path = vec![0.0; 101];
        for _ in 0..PATHS {
            generator.sample_into(&mut rng, &mut path);
            for (sum, t) in sums.iter_mut().zip([1, 10, 100]) {
                *sum += path[t].max(0.0);
            }
        }
        for (sum, t) in sums.iter().zip([1, 10, 100]) {
            let expected = (t as f64).powf(hurst) / (2.0 * std::f64::consts::PI).sqrt();
            println!("{hurst:>4} {t:>5} {:>10.4} {expected:>9.4}", sum / PATHS as f64);
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
