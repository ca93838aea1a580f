//! Percentile bootstrap intervals, and the aggregate tables written by
//! `report` over a directory of finished runs.
//!
//! `cargo run --release --example bootstrap_report -- [out]`
//! (run `train_homogeneous` first to have something to aggregate).

use predgame::harness::{bootstrap_ci, report, DEFAULT_RESAMPLES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds = [9.1, 9.6, 8.7, 9.9, 9.4];
    let ci = bootstrap_ci(&seeds, 0.95, DEFAULT_RESAMPLES, 0)?;
    println!("mean {:.3}, 95% CI [{:.3}, {:.3}] from {} resamples", ci.mean, ci.lo, ci.hi, ci.resamples);

    let out = std::env::args().nth(1).unwrap_or_else(|| "out/examples".into());
    match report(out.as_ref()) {
        Ok(r) => {
            println!("{} runs aggregated into {}", r.n_runs, r.summary_path.display());
            for s in &r.summary {
                println!(
                    "  {:<22} {:<4} blind={:<5} {:<22} {:.3} [{:.3}, {:.3}] n={}",
                    s.scenario, s.arch, s.blind, s.metric, s.mean, s.ci_lo, s.ci_hi, s.n_seeds
                );
            }
        }
        Err(e) => println!("no report for {out}: {e}"),
    }
    Ok(())
}
