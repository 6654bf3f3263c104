#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thrift_core::DerivedPoint;

/// Random unbalanced panel of level-regression points: `g` is the
/// regressor and `-c_star` the response.
pub fn random_level_points(seed: u64, max_countries: usize, max_years: usize) -> Vec<DerivedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_countries = rng.random_range(3..=max_countries);
    let n_years = rng.random_range(3..=max_years);
    let mut points = Vec::new();
    for c in 0..n_countries {
        let country_effect: f64 = rng.random_range(-1.0..1.0);
        let gdp_scale: f64 = rng.random_range(0.5..20.0);
        for t in 0..n_years {
            if rng.random_bool(0.25) {
                continue;
            }
            let x: f64 = rng.random_range(-0.2..0.3);
            let y = 0.4 * x + country_effect + 0.05 * t as f64 + rng.random_range(-0.1..0.1);
            points.push(DerivedPoint {
                country: format!("C{c:02}"),
                year: 1990 + t as i32,
                gdp: gdp_scale * rng.random_range(0.8..1.2),
                g: Some(x),
                c_star: -y,
                delta_g: None,
                delta_c_star: None,
                theta_c: None,
                passes_screen: false,
            });
        }
    }
    points
}
