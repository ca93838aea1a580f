//! Compares the analytic PPO loss gradient against central finite
//! differences for feed-forward and recurrent policies.
//!
//! `cargo run --release --example gradient_check`

use predgame::env::ActionSpec;
use predgame::nn::{Activation, Arch, Policy};
use predgame::ppo::gradcheck::{max_relative_error, random_minibatch};
use predgame::ppo::PpoConfig;
use predgame::SimRng;
use rand::SeedableRng;

fn main() {
    let spec = ActionSpec { n_heads: 4, n_actions: 4 };
    let mut rng = SimRng::seed_from_u64(0);
    for (arch, steps) in [(Arch::Ff, 1), (Arch::Rnn, 8)] {
        for act in [Activation::Relu, Activation::Tanh] {
            let mut policy = Policy::new(arch, 8, 16, spec, act, &mut rng);
            let mb = random_minibatch(&policy, 32, steps, &mut rng, 0.2);
            let err = max_relative_error(&mut policy, &mb, &PpoConfig::default(), 24, &mut rng);
            println!("{arch:?} {act:?} ({steps}-step sequences): max relative error {err:.2e}");
        }
    }
}
