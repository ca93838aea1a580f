//! Saves a recurrent policy, loads it back and checks that both produce
//! bit-identical outputs over an episode.
//!
//! `cargo run --example checkpoint_roundtrip`

use predgame::env::ActionSpec;
use predgame::nn::{load_checkpoint, save_checkpoint, Activation, Arch, Policy, Tensor};
use predgame::SimRng;
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SimRng::seed_from_u64(0);
    let spec = ActionSpec { n_heads: 4, n_actions: 4 };
    let policy = Policy::new(Arch::Rnn, 8, 32, spec, Activation::Relu, &mut rng);
    let dir = std::env::temp_dir().join(format!("predgame-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("agent_0.ckpt");
    save_checkpoint(&path, &policy.to_checkpoint())?;
    let restored = Policy::from_checkpoint(load_checkpoint(&path)?)?;
    println!("{} bytes, {} tensors", std::fs::metadata(&path)?.len(), restored.params().len());

    let (mut h1, mut h2) = (policy.initial_hidden(1), restored.initial_hidden(1));
    for t in 0..10 {
        let obs = Tensor::from_vec(&[1, 8], (0..8).map(|_| f64::from(rng.random_range(0..2u8))).collect())?;
        let a = policy.infer(&obs, &mut h1, &[t == 0])?;
        let b = restored.infer(&obs, &mut h2, &[t == 0])?;
        assert_eq!(a.logits, b.logits);
        assert_eq!(h1, h2);
    }
    println!("outputs and recurrent state identical over 10 steps");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
