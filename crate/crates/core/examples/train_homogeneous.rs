//! Four independent learners trained together, then evaluated and
//! diagnosed.
//!
//! `cargo run --release --example train_homogeneous -- [preset] [out]`
//! (defaults: `smoke`, `out/examples`). Try `desk-ff` for converged
//! conventions in a few minutes.

use predgame::config;
use predgame::harness::{run_family, FamilyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "smoke".into());
    let out = args.next().unwrap_or_else(|| "out/examples".into());
    let cfg = config::load(Some(&preset), None, &["scenario.kind=\"homogeneous\"".into()])?;
    let opts = FamilyOptions { verbose: true, ..FamilyOptions::new(&out) };
    for o in run_family(&cfg, &opts)? {
        println!("seed {} -> {}", o.seed, o.dir.display());
        for r in &o.rows {
            println!("  {:<22} {:>8.4} {}", r.metric, r.value, r.units);
        }
    }
    Ok(())
}
