//! Seeded synthetic q/k/v workloads.
//!
//! `Gaussian` draws every vector i.i.d. standard normal. `Needle` starts
//! from the Gaussian draw and then plants one retrievable token: per
//! (layer, kv group) a unit direction is chosen, the needle key is
//! `strength` times that direction, every other key has its component along
//! the direction damped, and the final prompt query plus all decode queries
//! point straight at it. Under full attention the needle then absorbs
//! almost all score mass, so evicting it is maximally visible.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use sage_core::attention::{SequenceInputs, StepInputs};
use sage_core::ModelConfig;

use crate::SimError;

/// How much the needle direction is damped out of all non-needle keys.
const DAMP: f64 = 0.9;

/// Query gain on the needle direction; 3x a typical Gaussian norm drives
/// the needle logit to `3 * strength` regardless of head dimension.
fn query_gain(head_dim: usize) -> f64 {
    3.0 * (head_dim as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Workload {
    Gaussian,
    Needle { position: usize, strength: f64 },
}

impl Workload {
    pub fn label(&self) -> String {
        match self {
            Workload::Gaussian => "gaussian".to_string(),
            Workload::Needle { position, strength } => {
                format!("needle(position={position}, strength={strength})")
            }
        }
    }
}

/// Prefill and decode inputs for one sequence: `prefill[layer][token]`,
/// `decode[step][layer]`.
#[derive(Debug, Clone)]
pub struct WorkloadData {
    pub prefill: SequenceInputs<f64>,
    pub decode: Vec<Vec<StepInputs<f64>>>,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn gaussian_step(rng: &mut ChaCha8Rng, config: &ModelConfig) -> StepInputs<f64> {
    StepInputs {
        q: (0..config.q_heads).map(|_| gaussian_vec(rng, config.head_dim)).collect(),
        k: (0..config.kv_heads).map(|_| gaussian_vec(rng, config.head_dim)).collect(),
        v: (0..config.kv_heads).map(|_| gaussian_vec(rng, config.head_dim)).collect(),
    }
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn damp_along(key: &mut [f64], dir: &[f64]) {
    let proj: f64 = key.iter().zip(dir).map(|(a, b)| a * b).sum();
    for (k, d) in key.iter_mut().zip(dir) {
        *k -= DAMP * proj * d;
    }
}

/// Deterministic workload for (seed, lengths, geometry, kind). The draw
/// never depends on the policy or budget, so runs that share a seed share
/// their inputs exactly.
pub fn generate_workload(
    seed: u64,
    prefill_len: usize,
    steps: usize,
    config: &ModelConfig,
    workload: Workload,
) -> Result<WorkloadData, SimError> {
    if prefill_len < 2 {
        return Err(SimError::InvalidSpec(format!(
            "prefill length must be at least 2, got {prefill_len}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut prefill: SequenceInputs<f64> = (0..config.layers)
        .map(|_| (0..prefill_len).map(|_| gaussian_step(&mut rng, config)).collect())
        .collect();
    let mut decode: Vec<Vec<StepInputs<f64>>> = (0..steps)
        .map(|_| (0..config.layers).map(|_| gaussian_step(&mut rng, config)).collect())
        .collect();

    if let Workload::Needle { position, strength } = workload {
        if position >= prefill_len {
            return Err(SimError::NeedleOutsideEvictable { position, seq_len: prefill_len });
        }
        if strength <= 0.0 {
            return Err(SimError::InvalidSpec("needle strength must be positive".into()));
        }
        let gain = query_gain(config.head_dim);
        let group = config.group_size();
        // One retrieval direction per (layer, kv head).
        let dirs: Vec<Vec<Vec<f64>>> = (0..config.layers)
            .map(|_| {
                (0..config.kv_heads)
                    .map(|_| unit(gaussian_vec(&mut rng, config.head_dim)))
                    .collect()
            })
            .collect();

        for (layer, tokens) in prefill.iter_mut().enumerate() {
            for (pos, tok) in tokens.iter_mut().enumerate() {
                for (kv_head, key) in tok.k.iter_mut().enumerate() {
                    let dir = &dirs[layer][kv_head];
                    if pos == position {
                        *key = dir.iter().map(|d| strength * d).collect();
                    } else {
                        damp_along(key, dir);
                    }
                }
            }
            // The last prompt token asks for the needle.
            let last = tokens.last_mut().expect("prefill_len >= 2");
            for (q_head, q) in last.q.iter_mut().enumerate() {
                let dir = &dirs[layer][q_head / group];
                *q = dir.iter().map(|d| gain * d).collect();
            }
        }
        for step in &mut decode {
            for (layer, inputs) in step.iter_mut().enumerate() {
                for (kv_head, key) in inputs.k.iter_mut().enumerate() {
                    damp_along(key, &dirs[layer][kv_head]);
                }
                // Generation keeps retrieving the needle.
                for (q_head, q) in inputs.q.iter_mut().enumerate() {
                    let dir = &dirs[layer][q_head / group];
                    *q = dir.iter().map(|d| gain * d).collect();
                }
            }
        }
    }

    Ok(WorkloadData { prefill, decode })
}
