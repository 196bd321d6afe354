//! Inputs shared by the benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wxfuse_core::synthetic::{filler_stations, generate_world, jordan_stations, SyntheticWorld, WorldConfig};

/// Jordan stations plus `fillers` others over one year.
pub fn world(fillers: usize, year: i32) -> SyntheticWorld {
    let mut stations = jordan_stations();
    stations.extend(filler_stations(fillers, 5));
    generate_world(&WorldConfig::new(stations, year, year, 5))
}

/// One year of by-year CSV text.
pub fn year_csv(fillers: usize, year: i32) -> String {
    world(fillers, year).year_lines(year).map(|l| l + "\n").collect()
}

/// Standardised-looking regression rows with a smooth target.
pub fn regression_rows(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y = x.iter().map(|r| r.iter().sum::<f64>().sin() + rng.random_range(-0.1..0.1)).collect();
    (x, y)
}
