//! Finite-difference check of the hand-written backward pass.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::net::{Batch, Net, N_EVENTS, N_IN};
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::rng;

const STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms; central
/// differences of an O(10) loss carry about 1e-10 of rounding noise.
const GRAD_FLOOR: f64 = 1e-5;

/// Batch-sum loss and its gradient at `params`.
pub fn loss_and_grad(mcfg: &ModelConfig, params: &[f64], batch: &Batch, lambda_sta: f64, lambda_pos: f64) -> (f64, Vec<f64>) {
    let net = Net::new(mcfg);
    let cache = net.forward(params, batch);
    let mut g = vec![0.0; net.n_params];
    let s = net.loss_backward(params, batch, &cache, lambda_sta, lambda_pos, 1.0, &mut g);
    (s.loss, g)
}

/// Random inputs and targets with a few masked frames.
pub fn random_batch(b: usize, l: usize, seed: u64) -> Batch {
    let mut r = rng::stream(seed, &[rng::tag::FEATURES]);
    let mut batch = Batch::new(b, l);
    for row in 0..batch.rows() {
        let valid = r.gen_bool(0.8);
        batch.valid[row] = valid;
        if valid {
            for k in 0..N_IN {
                batch.x[row * N_IN + k] = StandardNormal.sample(&mut r);
            }
        }
        batch.label[row] = r.gen_range(0..N_EVENTS as u8);
        batch.pos[row] = [r.gen_range(0.0..4.0), r.gen_range(0.0..3.0)];
    }
    batch
}

/// Maximum relative error between the analytic gradient and central
/// differences (step 1e-5) over every parameter of a tiny model initialized
/// from `mcfg.seed`.
pub fn grad_check(mcfg: &ModelConfig, batch: &Batch, lambda_sta: f64, lambda_pos: f64) -> Result<f64> {
    mcfg.validate()?;
    if mcfg.state_hidden > 8 || mcfg.traj_hidden > 8 {
        return Err(Error::config("grad_check expects hidden sizes of at most 8"));
    }
    let net = Net::new(mcfg);
    let mut p = net.init(&mut rng::stream(mcfg.seed, &[rng::tag::INIT]), [2.0, 1.5]);
    let (_, g) = loss_and_grad(mcfg, &p, batch, lambda_sta, lambda_pos);
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + STEP;
        let (lp, _) = loss_and_grad(mcfg, &p, batch, lambda_sta, lambda_pos);
        p[i] = orig - STEP;
        let (lm, _) = loss_and_grad(mcfg, &p, batch, lambda_sta, lambda_pos);
        p[i] = orig;
        let fd = (lp - lm) / (2.0 * STEP);
        let err = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(GRAD_FLOOR);
        worst = worst.max(err);
    }
    Ok(worst)
}
