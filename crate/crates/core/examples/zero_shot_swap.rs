//! Trains a homogeneous team, then replaces two of its agents by scripted
//! partners without further training. Conventions that ignore observations
//! lose most of their return.
//!
//! `cargo run --release --example zero_shot_swap -- [preset] [out]`

use predgame::config;
use predgame::harness::{run_family, FamilyOptions, RunDir};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "smoke".into());
    let out = args.next().unwrap_or_else(|| "out/examples".into());
    let opts = FamilyOptions::new(&out);
    for kind in ["homogeneous", "zero_shot_swap"] {
        let cfg = config::load(Some(&preset), None, &[format!("scenario.kind=\"{kind}\"")])?;
        for o in run_family(&cfg, &opts)? {
            if kind == "zero_shot_swap" {
                println!(
                    "seed {}: baseline {:.3} -> with scripted partners {:.3} (drop {:.3})",
                    o.seed,
                    o.metric("baseline_return").unwrap_or(f64::NAN),
                    o.metric("return").unwrap_or(f64::NAN),
                    o.metric("return_drop").unwrap_or(f64::NAN)
                );
                println!("  checkpoint hashes: {}", RunDir::new(&o.dir).baseline_manifest().display());
            }
        }
    }
    Ok(())
}
