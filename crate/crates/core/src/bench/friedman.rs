use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::Features;

/// `10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5`.
pub fn friedman_f(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// Uniform inputs on `[0,1]^d` with noisy labels; also returns the
/// noiseless values.
pub fn friedman_generate(n: usize, d: usize, sigma: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if d < 5 {
        return Err(Error::config("d", format!("must be >= 5, got {d}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::config("sigma", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let x = Features::from_rows(n, d, rows)?;
    let f: Vec<f64> = (0..n).map(|i| friedman_f(x.row(i))).collect();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::config("sigma", e.to_string()))?;
    let y = f.iter().map(|v| v + noise.sample(&mut rng)).collect();
    let ds = Dataset {
        x,
        y,
        feature_names: (1..=d).map(|k| format!("x{k}")).collect(),
        label_name: "y".into(),
        bounds: vec![(0.0, 1.0); d],
        categories: Default::default(),
    };
    Ok((ds, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values() {
        let x = [0.5; 10];
        let expect = 10.0 * (PI / 4.0).sin() + 5.0 + 2.5;
        assert!((friedman_f(&x) - expect).abs() < 1e-12);
        assert!((friedman_f(&x) - 14.5711).abs() < 1e-4);
        assert!(friedman_f(&[0.0, 0.7, 0.5, 0.0, 0.0]).abs() < 1e-15);
    }

    #[test]
    fn noiseless_labels_equal_f() {
        let (ds, f) = friedman_generate(50, 6, 0.0, 1).unwrap();
        assert_eq!(ds.y, f);
        assert!(ds.x.as_row_major().iter().all(|v| (0.0..1.0).contains(v)));
        assert!(friedman_generate(5, 4, 1.0, 0).is_err());
    }
}
