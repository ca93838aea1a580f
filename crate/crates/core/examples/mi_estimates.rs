//! The three estimators on data with known mutual information.
//!
//! `cargo run --release --example mi_estimates`

use predgame::mi::{mi_ksg, mi_plugin, mi_ross};
use predgame::SimRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SimRng::seed_from_u64(0);
    let n = 5000;

    // Y copies X with probability 0.9, otherwise uniform over 4 symbols.
    let x: Vec<u64> = (0..n).map(|_| rng.random_range(0..4)).collect();
    let y: Vec<u64> = x.iter().map(|&v| if rng.random_bool(0.9) { v } else { rng.random_range(0..4) }).collect();
    let (p_same, p_other): (f64, f64) = (0.9 + 0.1 / 4.0, 0.1 / 4.0);
    let exact = (4f64).ln() + p_same * p_same.ln() + 3.0 * p_other * p_other.ln();
    println!("plug-in  {:.4} nats (exact {exact:.4})", mi_plugin(&x, &y)?.in_nats());

    let std = Normal::new(0.0, 1.0)?;
    for rho in [0.0, 0.6, 0.9] {
        let a: Vec<f64> = (0..n).map(|_| std.sample(&mut rng)).collect();
        let b: Vec<f64> = a.iter().map(|v| rho * v + (1.0 - rho * rho).sqrt() * std.sample(&mut rng)).collect();
        let est = mi_ksg(&a, 1, &b, 1, 3, 1)?.in_nats();
        println!("KSG      {est:.4} nats for rho {rho} (exact {:.4})", 0.5 * (1.0 / (1.0 - rho * rho)).ln());
    }

    // Two well separated classes: I(X; C) approaches H(C) = ln 2.
    let labels: Vec<u64> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let pts: Vec<f64> = labels.iter().map(|&c| 6.0 * c as f64 + std.sample(&mut rng)).collect();
    let est = mi_ross(&pts, 1, &labels, 3, 2)?;
    println!("Ross     {:.4} bits for separated classes (ceiling 1 bit)", est.bits());
    Ok(())
}
