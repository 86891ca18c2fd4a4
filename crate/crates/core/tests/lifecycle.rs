//! Whole-lifecycle invariants: prefill -> compress -> decode.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sage_core::attention::{decode_attend, prefill_full, CacheRef, SequenceInputs, StepInputs};
use sage_core::cache::BudgetPlan;
use sage_core::policies::{PolicyConfig, PolicyKind, PolicyState};
use sage_core::rope::PositioningMode;
use sage_core::ModelConfig;

fn gaussian_inputs(rng: &mut ChaCha8Rng, config: &ModelConfig) -> StepInputs<f64> {
    let vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..config.head_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    StepInputs {
        q: (0..config.q_heads).map(|_| vec(rng)).collect(),
        k: (0..config.kv_heads).map(|_| vec(rng)).collect(),
        v: (0..config.kv_heads).map(|_| vec(rng)).collect(),
    }
}

fn gaussian_sequence(seed: u64, config: &ModelConfig, n: usize) -> SequenceInputs<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.layers)
        .map(|_| (0..n).map(|_| gaussian_inputs(&mut rng, config)).collect())
        .collect()
}

fn decode_step(seed: u64, config: &ModelConfig, position: usize) -> Vec<StepInputs<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(position as u64));
    (0..config.layers).map(|_| gaussian_inputs(&mut rng, config)).collect()
}

fn fingerprint(entries: &[&sage_core::TokenKv<f64>]) -> u64 {
    let mut h = DefaultHasher::new();
    for e in entries {
        e.position.hash(&mut h);
        for x in e.key.iter().chain(&e.value) {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

#[test]
fn sage_compression_is_single_pass() {
    let config = ModelConfig::new(2, 4, 2, 8).unwrap();
    let n = 64;
    let plan = BudgetPlan::new(24, 6, 3, 12);
    assert!(plan.gqa_identity_holds(config.group_size()));

    let seq = gaussian_sequence(3, &config, n);
    let prefill = prefill_full(&seq, &config, false).unwrap();
    let policy = PolicyConfig::new(PolicyKind::Sage, plan);
    let mut state =
        PolicyState::compress(&policy, &config, prefill.cache, &prefill.last_rows).unwrap();

    let PolicyState::Reduced { cache, .. } = &state else {
        panic!("expected a reduced cache below budget");
    };
    let topk_before: Vec<Vec<Vec<usize>>> = (0..config.layers)
        .map(|l| (0..config.q_heads).map(|h| cache.topk_positions(l, h)).collect())
        .collect();
    let sink_before: Vec<u64> = (0..config.layers)
        .flat_map(|l| {
            (0..config.kv_heads)
                .map(move |h| (l, h))
        })
        .map(|(l, h)| {
            let PolicyState::Reduced { cache, .. } = &state else { unreachable!() };
            fingerprint(&cache.sink_entries(l, h).iter().collect::<Vec<_>>())
        })
        .collect();

    for step in 0..20 {
        let inputs = decode_step(99, &config, step);
        state.push_token(&inputs, n + step, config.rope_base).unwrap();
        let PolicyState::Reduced { cache, .. } = &state else { unreachable!() };
        for l in 0..config.layers {
            for h in 0..config.q_heads {
                // Frozen selection and stable visible length at every step.
                assert_eq!(cache.topk_positions(l, h), topk_before[l][h]);
                assert_eq!(cache.visible_len(l, h), plan.per_head_visible_len());
                let view = cache.head_view(l, h);
                assert!(view.windows(2).all(|w| w[0].position < w[1].position));
            }
        }
        let sink_now: Vec<u64> = (0..config.layers)
            .flat_map(|l| (0..config.kv_heads).map(move |h| (l, h)))
            .map(|(l, h)| fingerprint(&cache.sink_entries(l, h).iter().collect::<Vec<_>>()))
            .collect();
        assert_eq!(sink_now, sink_before);
    }
}

#[test]
fn compression_releases_memory_and_blocktopk_retains_pool() {
    let config = ModelConfig::new(2, 2, 2, 8).unwrap();
    let n = 64;
    let seq = gaussian_sequence(5, &config, n);
    let prefill = prefill_full(&seq, &config, false).unwrap();

    let plan = BudgetPlan::new(24, 6, 6, 12);
    let sage = PolicyConfig::new(PolicyKind::Sage, plan);
    let state =
        PolicyState::compress(&sage, &config, prefill.cache.clone(), &prefill.last_rows).unwrap();
    // H_kv * (S + R + 1) + H_q * k per layer.
    assert_eq!(state.retained_entries_per_layer(), 2 * (6 + 12 + 1) + 2 * 6);

    let stream_plan = BudgetPlan::new(24, 6, 0, 18);
    let stream = PolicyConfig::new(PolicyKind::StreamLlmAbs, stream_plan);
    let state =
        PolicyState::compress(&stream, &config, prefill.cache.clone(), &prefill.last_rows)
            .unwrap();
    // Exactly B tokens per kv head survive.
    assert_eq!(state.retained_entries_per_layer(), 2 * 24);

    let mut blocks = PolicyConfig::new(PolicyKind::BlockTopK, BudgetPlan::new(24, 6, 0, 6));
    blocks.block_size = 4;
    let state =
        PolicyState::compress(&blocks, &config, prefill.cache, &prefill.last_rows).unwrap();
    // The dynamic policy keeps the whole prefill as candidates.
    assert_eq!(state.retained_entries_per_layer(), 2 * n);
}

#[test]
fn full_policy_decode_is_exactly_reference() {
    let config = ModelConfig::new(1, 2, 1, 8).unwrap();
    let n = 32;
    let seq = gaussian_sequence(7, &config, n);
    let prefill = prefill_full(&seq, &config, false).unwrap();
    let reference_cache = prefill.cache.clone();

    let policy = PolicyConfig::new(PolicyKind::Full, BudgetPlan::new(n, 0, 0, n));
    let mut state =
        PolicyState::compress(&policy, &config, prefill.cache, &prefill.last_rows).unwrap();
    let mut reference = PolicyState::Full {
        cache: reference_cache,
        group_size: config.group_size(),
    };

    for step in 0..8 {
        let inputs = decode_step(11, &config, step);
        state.push_token(&inputs, n + step, config.rope_base).unwrap();
        reference.push_token(&inputs, n + step, config.rope_base).unwrap();
        let q: Vec<Vec<Vec<f64>>> = inputs.iter().map(|i| i.q.clone()).collect();
        for l in 0..config.layers {
            for h in 0..config.q_heads {
                let view_a = state.head_view(l, h, &q[l][h], config.rope_base).unwrap();
                let view_b = reference.head_view(l, h, &q[l][h], config.rope_base).unwrap();
                assert_eq!(fingerprint(&view_a), fingerprint(&view_b));
            }
        }
    }
}

#[test]
fn sage_keeping_everything_matches_full_attention() {
    // k = E retains the whole evictable segment; decode must reproduce the
    // full-attention outputs to within accumulation noise.
    let config = ModelConfig::new(2, 4, 2, 8).unwrap();
    let n = 48;
    let seq = gaussian_sequence(13, &config, n);
    let prefill = prefill_full(&seq, &config, false).unwrap();

    let sink = 4;
    let recent = 8;
    let evictable = n - 1 - sink - recent;
    let plan = BudgetPlan::new(
        sink + config.group_size() * evictable + recent,
        sink,
        evictable,
        recent,
    );
    let seg = sage_core::cache::partition_cache(prefill.cache.clone(), sink, recent).unwrap();
    let reduced =
        sage_core::policies::sage_compress(seg, &prefill.last_rows, &plan).unwrap();

    let q_last: Vec<Vec<Vec<f64>>> =
        (0..config.layers).map(|l| seq[l][n - 1].q.clone()).collect();
    let full = decode_attend(
        &q_last,
        &CacheRef::Full { cache: &prefill.cache, group_size: config.group_size() },
        PositioningMode::Absolute,
        config.rope_base,
    )
    .unwrap();
    let kept = decode_attend(
        &q_last,
        &CacheRef::Reduced(&reduced),
        PositioningMode::Absolute,
        config.rope_base,
    )
    .unwrap();
    for l in 0..config.layers {
        for h in 0..config.q_heads {
            let err: f64 = full.outputs[l][h]
                .iter()
                .zip(&kept.outputs[l][h])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-12, "layer {l} head {h}: err {err}");
        }
    }
}
