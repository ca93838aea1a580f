use rand::Rng;

use super::layers::{dense_backward, dense_forward, sigmoid, Activation};
use super::params::uniform_fan_in;
use super::tensor::gemm_nt;
use super::{Gradients, NnError, ParamSet, PolicyOutput, Tensor};
use crate::env::ActionSpec;

const EMBED_W: usize = 0;
const EMBED_B: usize = 1;
const IN_W: usize = 2;
const IN_B: usize = 3;
const HID_W: usize = 4;
const HID_B: usize = 5;
const HEAD_W: usize = 6;
const HEAD_B: usize = 7;
const VALUE_W: usize = 8;
const VALUE_B: usize = 9;

/// Recurrent actor-critic: dense embedding, gated recurrent cell, and linear
/// actor/critic heads reading the recurrent state.
///
/// Gate layout inside the fused `[hidden, 3·hidden]` matrices is
/// `[reset | update | candidate]`:
///
/// ```text
/// r  = σ(x·Wr + br + h·Ur + cr)
/// z  = σ(x·Wz + bz + h·Uz + cz)
/// n  = tanh(x·Wn + bn + r ⊙ (h·Un + cn))
/// h' = (1 − z) ⊙ h + z ⊙ n
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RnnPolicy {
    params: ParamSet,
    obs_dim: usize,
    embed_dim: usize,
    hidden: usize,
    spec: ActionSpec,
    activation: Activation,
}

/// Everything the backward pass needs from an unroll, stored time-major
/// (`row = t · batch + b`).
#[derive(Debug, Clone)]
pub struct RnnCache {
    steps: usize,
    batch: usize,
    x: Vec<f64>,
    embed_pre: Vec<f64>,
    embed: Vec<f64>,
    h_prev: Vec<f64>,
    gh_cand: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    h: Vec<f64>,
    starts: Vec<bool>,
}

impl RnnCache {
    /// Recurrent state after each step, `[steps · batch, hidden]`.
    pub fn hidden_states(&self) -> &[f64] {
        &self.h
    }
}

impl RnnPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        embed_dim: usize,
        hidden: usize,
        spec: ActionSpec,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let n_out = spec.n_heads * spec.n_actions;
        let mut p = ParamSet::new();
        p.push("embed.weight", uniform_fan_in(rng, obs_dim, embed_dim));
        p.push("embed.bias", Tensor::zeros(&[embed_dim]));
        p.push("gru.input.weight", uniform_fan_in(rng, embed_dim, 3 * hidden));
        p.push("gru.input.bias", Tensor::zeros(&[3 * hidden]));
        p.push("gru.hidden.weight", uniform_fan_in(rng, hidden, 3 * hidden));
        p.push("gru.hidden.bias", Tensor::zeros(&[3 * hidden]));
        p.push("actor.head.weight", uniform_fan_in(rng, hidden, n_out));
        p.push("actor.head.bias", Tensor::zeros(&[n_out]));
        p.push("critic.head.weight", uniform_fan_in(rng, hidden, 1));
        p.push("critic.head.bias", Tensor::zeros(&[1]));
        Self {
            params: p,
            obs_dim,
            embed_dim,
            hidden,
            spec,
            activation,
        }
    }

    pub fn from_params(params: ParamSet, spec: ActionSpec, activation: Activation) -> Result<Self, NnError> {
        let names = [
            "embed.weight",
            "embed.bias",
            "gru.input.weight",
            "gru.input.bias",
            "gru.hidden.weight",
            "gru.hidden.bias",
            "actor.head.weight",
            "actor.head.bias",
            "critic.head.weight",
            "critic.head.bias",
        ];
        let mut ordered = ParamSet::new();
        for n in names {
            ordered.push(n, params.require(n)?.clone());
        }
        let e = ordered.tensors()[EMBED_W].shape().to_vec();
        let u = ordered.tensors()[HID_W].shape().to_vec();
        if e.len() != 2 || u.len() != 2 || u[1] != 3 * u[0] {
            return Err(NnError::Shape("recurrent tensor shapes are inconsistent".into()));
        }
        if ordered.tensors()[HEAD_W].shape() != [u[0], spec.n_heads * spec.n_actions] {
            return Err(NnError::Shape("actor head does not match action spec".into()));
        }
        Ok(Self {
            params: ordered,
            obs_dim: e[0],
            embed_dim: e[1],
            hidden: u[0],
            spec,
            activation,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn spec(&self) -> ActionSpec {
        self.spec
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// One recurrent step for a batch. Rows flagged in `starts` begin a new
    /// episode and see a zero previous state.
    pub fn step(&self, obs: &Tensor, h_prev: &Tensor, starts: &[bool]) -> Result<(PolicyOutput, Tensor), NnError> {
        let (out, cache, h) = self.unroll(obs, starts, h_prev, 1)?;
        drop(cache);
        Ok((out, h))
    }

    /// Runs `steps` recurrent steps over time-major observations
    /// `[steps · batch, obs_dim]` starting from `h0: [batch, hidden]`.
    pub fn unroll(
        &self,
        obs: &Tensor,
        starts: &[bool],
        h0: &Tensor,
        steps: usize,
    ) -> Result<(PolicyOutput, RnnCache, Tensor), NnError> {
        let hd = self.hidden;
        if obs.shape().len() != 2 || obs.cols() != self.obs_dim {
            return Err(NnError::Shape(format!(
                "expected observations [rows, {}], got {:?}",
                self.obs_dim,
                obs.shape()
            )));
        }
        if steps == 0 || obs.rows() % steps != 0 {
            return Err(NnError::Shape(format!("{} rows do not split into {steps} steps", obs.rows())));
        }
        let batch = obs.rows() / steps;
        if h0.shape() != [batch, hd] {
            return Err(NnError::Shape(format!(
                "expected hidden state [{batch}, {hd}], got {:?}",
                h0.shape()
            )));
        }
        if starts.len() != obs.rows() {
            return Err(NnError::Shape("one episode-start flag per row is required".into()));
        }
        let rows = obs.rows();
        let t = self.params.tensors();
        let act = self.activation;

        let embed_pre = dense_forward(obs.data(), rows, &t[EMBED_W], &t[EMBED_B]);
        let embed: Vec<f64> = embed_pre.iter().map(|&v| act.apply(v)).collect();
        let gx = dense_forward(&embed, rows, &t[IN_W], &t[IN_B]);

        let mut h_prev_all = vec![0.0; rows * hd];
        let mut gh_cand = vec![0.0; rows * hd];
        let mut r_all = vec![0.0; rows * hd];
        let mut z_all = vec![0.0; rows * hd];
        let mut n_all = vec![0.0; rows * hd];
        let mut h_all = vec![0.0; rows * hd];
        let mut h = h0.data().to_vec();

        for s in 0..steps {
            let base = s * batch;
            for b in 0..batch {
                if starts[base + b] {
                    h[b * hd..(b + 1) * hd].iter_mut().for_each(|v| *v = 0.0);
                }
            }
            h_prev_all[base * hd..(base + batch) * hd].copy_from_slice(&h);
            let gh = dense_forward(&h, batch, &t[HID_W], &t[HID_B]);
            for b in 0..batch {
                let row = base + b;
                let gxr = &gx[row * 3 * hd..(row + 1) * 3 * hd];
                let ghr = &gh[b * 3 * hd..(b + 1) * 3 * hd];
                for j in 0..hd {
                    let r = sigmoid(gxr[j] + ghr[j]);
                    let z = sigmoid(gxr[hd + j] + ghr[hd + j]);
                    let c = ghr[2 * hd + j];
                    let n = (gxr[2 * hd + j] + r * c).tanh();
                    let hp = h[b * hd + j];
                    let hn = (1.0 - z) * hp + z * n;
                    let k = row * hd + j;
                    r_all[k] = r;
                    z_all[k] = z;
                    n_all[k] = n;
                    gh_cand[k] = c;
                    h_all[k] = hn;
                    h[b * hd + j] = hn;
                }
            }
        }

        let logits = dense_forward(&h_all, rows, &t[HEAD_W], &t[HEAD_B]);
        let values = dense_forward(&h_all, rows, &t[VALUE_W], &t[VALUE_B]);
        let out = PolicyOutput {
            logits: Tensor::from_vec(&[rows, self.spec.n_heads * self.spec.n_actions], logits)?,
            values,
        };
        let cache = RnnCache {
            steps,
            batch,
            x: obs.data().to_vec(),
            embed_pre,
            embed,
            h_prev: h_prev_all,
            gh_cand,
            r: r_all,
            z: z_all,
            n: n_all,
            h: h_all,
            starts: starts.to_vec(),
        };
        Ok((out, cache, Tensor::from_vec(&[batch, hd], h)?))
    }

    /// Backpropagation through time over a cached unroll.
    pub fn backward(&self, cache: &RnnCache, d_logits: &[f64], d_values: &[f64], grads: &mut Gradients) {
        let t = self.params.tensors();
        let hd = self.hidden;
        let batch = cache.batch;
        let rows = cache.steps * batch;
        let act = self.activation;

        let mut d_h = vec![0.0; rows * hd];
        {
            let (lo, hi) = grads.split_at_mut(HEAD_B);
            dense_backward(&cache.h, rows, &t[HEAD_W], d_logits, &mut lo[HEAD_W], &mut hi[0], Some(&mut d_h));
        }
        {
            let mut d_hv = vec![0.0; rows * hd];
            let (lo, hi) = grads.split_at_mut(VALUE_B);
            dense_backward(&cache.h, rows, &t[VALUE_W], d_values, &mut lo[VALUE_W], &mut hi[0], Some(&mut d_hv));
            d_h.iter_mut().zip(&d_hv).for_each(|(a, b)| *a += b);
        }

        let mut d_gx = vec![0.0; rows * 3 * hd];
        let mut d_gh = vec![0.0; rows * 3 * hd];
        let mut carry = vec![0.0; batch * hd];
        let mut d_hp = vec![0.0; batch * hd];
        for s in (0..cache.steps).rev() {
            let base = s * batch;
            for b in 0..batch {
                let row = base + b;
                for j in 0..hd {
                    let k = row * hd + j;
                    let dh = d_h[k] + carry[b * hd + j];
                    let (r, z, n, hp) = (cache.r[k], cache.z[k], cache.n[k], cache.h_prev[k]);
                    let dn_pre = dh * z * (1.0 - n * n);
                    let dz_pre = dh * (n - hp) * z * (1.0 - z);
                    let dr_pre = dn_pre * cache.gh_cand[k] * r * (1.0 - r);
                    let g = row * 3 * hd;
                    d_gx[g + j] = dr_pre;
                    d_gx[g + hd + j] = dz_pre;
                    d_gx[g + 2 * hd + j] = dn_pre;
                    d_gh[g + j] = dr_pre;
                    d_gh[g + hd + j] = dz_pre;
                    d_gh[g + 2 * hd + j] = dn_pre * r;
                    d_hp[b * hd + j] = dh * (1.0 - z);
                }
            }
            // d_hp += d_gh[step] · Uᵀ
            gemm_nt(
                &d_gh[base * 3 * hd..(base + batch) * 3 * hd],
                t[HID_W].data(),
                &mut d_hp,
                batch,
                3 * hd,
                hd,
                1.0,
            );
            for b in 0..batch {
                let cut = cache.starts[base + b];
                for j in 0..hd {
                    carry[b * hd + j] = if cut { 0.0 } else { d_hp[b * hd + j] };
                }
            }
        }

        {
            let (lo, hi) = grads.split_at_mut(HID_B);
            dense_backward(&cache.h_prev, rows, &t[HID_W], &d_gh, &mut lo[HID_W], &mut hi[0], None);
        }
        let mut d_embed = vec![0.0; rows * self.embed_dim];
        {
            let (lo, hi) = grads.split_at_mut(IN_B);
            dense_backward(&cache.embed, rows, &t[IN_W], &d_gx, &mut lo[IN_W], &mut hi[0], Some(&mut d_embed));
        }
        for ((d, &x), &y) in d_embed.iter_mut().zip(&cache.embed_pre).zip(&cache.embed) {
            *d *= act.grad(x, y);
        }
        let (lo, hi) = grads.split_at_mut(EMBED_B);
        dense_backward(&cache.x, rows, &t[EMBED_W], &d_embed, &mut lo[EMBED_W], &mut hi[0], None);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;

    fn spec() -> ActionSpec {
        ActionSpec { n_heads: 4, n_actions: 4 }
    }

    fn random_h(batch: usize, hd: usize, seed: u64) -> Tensor {
        let mut rng = SimRng::seed_from_u64(seed);
        Tensor::from_vec(&[batch, hd], (0..batch * hd).map(|_| rng.random_range(-0.9..0.9)).collect()).unwrap()
    }

    #[test]
    fn zero_parameters_halve_the_state() {
        let mut rng = SimRng::seed_from_u64(0);
        let mut p = RnnPolicy::new(8, 16, 16, spec(), Activation::Relu, &mut rng);
        p.params_mut().tensors_mut().iter_mut().for_each(|t| t.fill(0.0));
        let h0 = random_h(2, 16, 1);
        let obs = Tensor::from_vec(&[2, 8], vec![1.0; 16]).unwrap();
        let (_, h1) = p.step(&obs, &h0, &[false, false]).unwrap();
        for (a, b) in h1.data().iter().zip(h0.data()) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn zero_state_gives_gated_candidate() {
        let mut rng = SimRng::seed_from_u64(2);
        let p = RnnPolicy::new(8, 16, 16, spec(), Activation::Relu, &mut rng);
        let obs = Tensor::from_vec(&[1, 8], (0..8).map(|i| (i % 2) as f64).collect()).unwrap();
        let (_, cache, h1) = p.unroll(&obs, &[false], &Tensor::zeros(&[1, 16]), 1).unwrap();
        for j in 0..16 {
            let expected = cache.z[j] * cache.n[j];
            assert!((h1.data()[j] - expected).abs() < 1e-15);
            assert!(h1.data()[j].abs() < 1.0);
        }
    }

    #[test]
    fn episode_start_resets_state() {
        let mut rng = SimRng::seed_from_u64(3);
        let p = RnnPolicy::new(8, 16, 16, spec(), Activation::Relu, &mut rng);
        let obs = Tensor::from_vec(&[1, 8], vec![0.5; 8]).unwrap();
        let (_, a) = p.step(&obs, &random_h(1, 16, 4), &[true]).unwrap();
        let (_, b) = p.step(&obs, &Tensor::zeros(&[1, 16]), &[false]).unwrap();
        assert_eq!(a, b);
    }

    /// Scalar loop recomputation of a single step.
    fn scalar_step(p: &RnnPolicy, x: &[f64], h: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        let t = p.params().tensors();
        let hd = p.hidden();
        let lin = |x: &[f64], w: &Tensor, b: &Tensor| -> Vec<f64> {
            let (fi, fo) = (w.shape()[0], w.shape()[1]);
            (0..fo)
                .map(|j| b.data()[j] + (0..fi).map(|i| x[i] * w.data()[i * fo + j]).sum::<f64>())
                .collect()
        };
        let e: Vec<f64> = lin(x, &t[EMBED_W], &t[EMBED_B]).into_iter().map(|v| v.max(0.0)).collect();
        let gx = lin(&e, &t[IN_W], &t[IN_B]);
        let gh = lin(h, &t[HID_W], &t[HID_B]);
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let hn: Vec<f64> = (0..hd)
            .map(|j| {
                let r = sig(gx[j] + gh[j]);
                let z = sig(gx[hd + j] + gh[hd + j]);
                let n = (gx[2 * hd + j] + r * gh[2 * hd + j]).tanh();
                (1.0 - z) * h[j] + z * n
            })
            .collect();
        let logits = lin(&hn, &t[HEAD_W], &t[HEAD_B]);
        let v = lin(&hn, &t[VALUE_W], &t[VALUE_B])[0];
        (logits, v, hn)
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = SimRng::seed_from_u64(7);
        let p = RnnPolicy::new(8, 128, 128, spec(), Activation::Relu, &mut rng);
        let h0 = random_h(3, 128, 8);
        let obs = Tensor::from_vec(&[3, 8], (0..24).map(|i| ((i * 3) as f64).sin()).collect()).unwrap();
        let (out, h1) = p.step(&obs, &h0, &[false; 3]).unwrap();
        for b in 0..3 {
            let (logits, v, hn) = scalar_step(&p, obs.row(b), h0.row(b));
            for (x, y) in logits.iter().zip(out.logits.row(b)) {
                assert!((x - y).abs() <= 1e-12);
            }
            assert!((v - out.values[b]).abs() <= 1e-12);
            for (x, y) in hn.iter().zip(h1.row(b)) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hidden_state_stays_bounded() {
        let mut rng = SimRng::seed_from_u64(12);
        let p = RnnPolicy::new(8, 32, 32, spec(), Activation::Relu, &mut rng);
        let mut h = Tensor::zeros(&[4, 32]);
        for s in 0..200 {
            let obs = Tensor::from_vec(&[4, 8], (0..32).map(|i| ((i + s) as f64 * 0.7).sin() * 5.0).collect()).unwrap();
            h = p.step(&obs, &h, &[false; 4]).unwrap().1;
            assert!(h.data().iter().all(|v| v.abs() < 1.0));
        }
    }
}
