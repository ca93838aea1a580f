//! Two learners trained alongside two scripted partners whose phase changes
//! every episode, so a fixed convention cannot work.
//!
//! `cargo run --release --example train_with_heuristics -- [arch] [steps] [out]`
//! (defaults: `rnn`, `40960`, `out/examples`).

use predgame::config;
use predgame::harness::{run_family, FamilyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let arch = args.next().unwrap_or_else(|| "rnn".into());
    let steps = args.next().unwrap_or_else(|| "40960".into());
    let out = args.next().unwrap_or_else(|| "out/examples".into());
    let overrides = [
        format!("network.arch=\"{arch}\""),
        format!("ppo.total_timesteps={steps}"),
        "scenario.kind=\"train_with_heuristics\"".into(),
        "scenario.n_seeds=1".into(),
    ];
    let cfg = config::load(Some("smoke"), None, &overrides)?;
    let opts = FamilyOptions { verbose: true, ..FamilyOptions::new(&out) };
    for o in run_family(&cfg, &opts)? {
        println!("seed {} return {:.3}", o.seed, o.metric("return").unwrap_or(f64::NAN));
        for m in ["mi_obs_action", "mi_hidden_action"] {
            if let Some(v) = o.metric(m) {
                println!("  {m} {v:.3} bits");
            }
        }
    }
    Ok(())
}
