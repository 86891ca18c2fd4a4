//! Scaled-dot-product attention for prefill and decode under grouped-query
//! attention.
//!
//! The harness supplies raw (un-rotated) per-token q/k/v vectors; rotation is
//! applied here according to the positioning mode. Query head `h` reads kv
//! head `h / G`. Prefill runs causally over the whole prompt and hands back
//! the last token's score row per head, which is what drives top-k eviction.

use thiserror::Error;

use crate::cache::{FullKvCache, ReducedKvCache, SegmentedKvCache, TokenKv};
use crate::config::ModelConfig;
use crate::rope::{apply_rotation, positions_for, PositioningMode, RopeError};
use crate::trace::AttentionTrace;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error("softmax over an empty logit vector")]
    EmptyInput,
    #[error("attention over an empty cache view")]
    EmptyCache,
    #[error("prefill needs at least 2 tokens, got {0}")]
    SequenceTooShort(usize),
    #[error(transparent)]
    Rope(#[from] RopeError),
    #[error("attention input shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Raw q/k/v vectors of one token at one layer.
#[derive(Debug, Clone)]
pub struct StepInputs<T> {
    /// `[q_heads][head_dim]`
    pub q: Vec<Vec<T>>,
    /// `[kv_heads][head_dim]`
    pub k: Vec<Vec<T>>,
    /// `[kv_heads][head_dim]`
    pub v: Vec<Vec<T>>,
}

/// Prompt inputs indexed `[layer][token]`.
pub type SequenceInputs<T> = Vec<Vec<StepInputs<T>>>;

/// Scores and outputs of one decode step, indexed `[layer][q_head]`.
/// Score vectors run over that head's visible cache positions and sum to 1.
#[derive(Debug, Clone)]
pub struct AttentionStep<T> {
    pub scores: Vec<Vec<Vec<T>>>,
    pub outputs: Vec<Vec<Vec<T>>>,
}

/// Numerically stable softmax (max subtraction, so constant shifts of the
/// logits cancel exactly).
pub fn softmax_stable<T: Scalar>(logits: &[T]) -> Result<Vec<T>, AttentionError> {
    if logits.is_empty() {
        return Err(AttentionError::EmptyInput);
    }
    let max = logits.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let exps: Vec<T> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum = exps.iter().fold(T::zero(), |a, &b| a + b);
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Attention of a single query head over an explicit cache view.
///
/// The query token is assumed to be the view's final entry (its KV is pushed
/// before attending), so its rotation position is the last view position in
/// either mode. Pre-rope keys are rotated here at the mode's position;
/// already-rotated keys are used as stored.
pub fn attend_head<T: Scalar>(
    q_raw: &[T],
    entries: &[&TokenKv<T>],
    mode: PositioningMode,
    rope_base: T,
) -> Result<(Vec<T>, Vec<T>), AttentionError> {
    if entries.is_empty() {
        return Err(AttentionError::EmptyCache);
    }
    let d = q_raw.len();
    let positions = positions_for(entries, mode);
    let q_pos = *positions.last().expect("nonempty view");
    let q_rot = apply_rotation(q_raw, T::from_usize_lossy(q_pos), rope_base)?;
    let scale = T::one() / T::from_usize_lossy(d).sqrt();

    let mut logits = Vec::with_capacity(entries.len());
    for (entry, &pos) in entries.iter().zip(&positions) {
        let logit = if entry.pre_rope {
            let k_rot = apply_rotation(&entry.key, T::from_usize_lossy(pos), rope_base)?;
            dot(&q_rot, &k_rot)
        } else {
            debug_assert_eq!(pos, entry.position, "stored-rotated keys imply absolute mode");
            dot(&q_rot, &entry.key)
        };
        logits.push(logit * scale);
    }

    let scores = softmax_stable(&logits)?;
    let mut output = vec![T::zero(); d];
    for (entry, &w) in entries.iter().zip(&scores) {
        for (o, &v) in output.iter_mut().zip(&entry.value) {
            *o = *o + w * v;
        }
    }
    Ok((scores, output))
}

/// A cache a decode step can attend against.
pub enum CacheRef<'a, T> {
    Full { cache: &'a FullKvCache<T>, group_size: usize },
    Segmented { cache: &'a SegmentedKvCache<T>, group_size: usize },
    Reduced(&'a ReducedKvCache<T>),
}

impl<'a, T: Scalar> CacheRef<'a, T> {
    pub fn head_view(&self, layer: usize, q_head: usize) -> Vec<&'a TokenKv<T>> {
        match self {
            CacheRef::Full { cache, group_size } => {
                cache.head_entries(layer, q_head / group_size).iter().collect()
            }
            CacheRef::Segmented { cache, group_size } => {
                cache.head_view(layer, q_head / group_size)
            }
            CacheRef::Reduced(cache) => cache.head_view(layer, q_head),
        }
    }

    fn layers(&self) -> usize {
        match self {
            CacheRef::Full { cache, .. } => cache.layers(),
            CacheRef::Segmented { cache, .. } => cache.layers(),
            CacheRef::Reduced(cache) => cache.layers(),
        }
    }
}

/// One decode step over every layer and query head of `cache`.
/// `q[layer][q_head]` are the new token's raw query vectors.
pub fn decode_attend<T: Scalar>(
    q: &[Vec<Vec<T>>],
    cache: &CacheRef<'_, T>,
    mode: PositioningMode,
    rope_base: T,
) -> Result<AttentionStep<T>, AttentionError> {
    if q.len() != cache.layers() {
        return Err(AttentionError::ShapeMismatch(format!(
            "query covers {} layers, cache has {}",
            q.len(),
            cache.layers()
        )));
    }
    let mut scores = Vec::with_capacity(q.len());
    let mut outputs = Vec::with_capacity(q.len());
    for (layer, layer_q) in q.iter().enumerate() {
        let mut layer_scores = Vec::with_capacity(layer_q.len());
        let mut layer_outputs = Vec::with_capacity(layer_q.len());
        for (q_head, q_raw) in layer_q.iter().enumerate() {
            let view = cache.head_view(layer, q_head);
            let (s, o) = attend_head(q_raw, &view, mode, rope_base)?;
            layer_scores.push(s);
            layer_outputs.push(o);
        }
        scores.push(layer_scores);
        outputs.push(layer_outputs);
    }
    Ok(AttentionStep { scores, outputs })
}

/// Everything prefill produces: the raw-key cache, the last token's score
/// row per (layer, q head), and optionally every causal row as a trace.
#[derive(Debug)]
pub struct PrefillOutput<T> {
    pub cache: FullKvCache<T>,
    /// `[layer][q_head]`, each of length N (position `N-1` is the last
    /// token's self score).
    pub last_rows: Vec<Vec<Vec<T>>>,
    pub trace: Option<AttentionTrace>,
}

/// Causal attention over the whole prompt.
///
/// Builds per-layer caches holding the raw keys (`pre_rope = true`; policies
/// decide at compression time whether to bake in absolute rotations) and
/// computes each position's score row with absolute-position rotation, which
/// during prefill coincides with window-relative numbering. Desk-scale
/// O(N² · L · H) — fine for the sequence lengths this crate targets.
pub fn prefill_full<T: Scalar>(
    seq: &SequenceInputs<T>,
    config: &ModelConfig,
    record_trace: bool,
) -> Result<PrefillOutput<T>, AttentionError> {
    if seq.len() != config.layers {
        return Err(AttentionError::ShapeMismatch(format!(
            "sequence covers {} layers, config has {}",
            seq.len(),
            config.layers
        )));
    }
    let n = seq.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(AttentionError::SequenceTooShort(n));
    }
    for (l, layer) in seq.iter().enumerate() {
        if layer.len() != n {
            return Err(AttentionError::ShapeMismatch(format!(
                "layer {l} has {} tokens, expected {n}",
                layer.len()
            )));
        }
        for (t, tok) in layer.iter().enumerate() {
            if tok.q.len() != config.q_heads
                || tok.k.len() != config.kv_heads
                || tok.v.len() != config.kv_heads
                || tok.q.iter().any(|v| v.len() != config.head_dim)
                || tok.k.iter().any(|v| v.len() != config.head_dim)
                || tok.v.iter().any(|v| v.len() != config.head_dim)
            {
                return Err(AttentionError::ShapeMismatch(format!(
                    "layer {l} token {t} does not match the model geometry"
                )));
            }
        }
    }

    let base = T::from_f64_lossy(config.rope_base);
    let scale = T::one() / T::from_usize_lossy(config.head_dim).sqrt();
    let group = config.group_size();

    let mut trace = record_trace.then(|| {
        AttentionTrace::zeroed(config.layers as u32, config.q_heads as u32, n as u32, n as u32)
    });
    let mut cache_entries = Vec::with_capacity(config.layers);
    let mut last_rows = Vec::with_capacity(config.layers);

    for (layer, tokens) in seq.iter().enumerate() {
        // Rotate keys and queries once at their absolute positions.
        let mut rot_keys: Vec<Vec<Vec<T>>> = vec![Vec::with_capacity(n); config.kv_heads];
        let mut rot_q: Vec<Vec<Vec<T>>> = vec![Vec::with_capacity(n); config.q_heads];
        for (pos, tok) in tokens.iter().enumerate() {
            let p = T::from_usize_lossy(pos);
            for (h, k) in tok.k.iter().enumerate() {
                rot_keys[h].push(apply_rotation(k, p, base)?);
            }
            for (h, q) in tok.q.iter().enumerate() {
                rot_q[h].push(apply_rotation(q, p, base)?);
            }
        }

        let mut layer_last_rows = vec![Vec::new(); config.q_heads];
        for q_head in 0..config.q_heads {
            let kv_head = q_head / group;
            for pos in 0..n {
                if pos + 1 < n && trace.is_none() {
                    continue; // only the last row is needed
                }
                let q = &rot_q[q_head][pos];
                let logits: Vec<T> =
                    (0..=pos).map(|j| dot(q, &rot_keys[kv_head][j]) * scale).collect();
                let row = softmax_stable(&logits)?;
                if let Some(t) = trace.as_mut() {
                    let row32: Vec<f32> =
                        row.iter().map(|s| s.to_f32().unwrap_or(0.0)).collect();
                    t.set_row(layer as u32, q_head as u32, pos as u32, &row32);
                }
                if pos + 1 == n {
                    layer_last_rows[q_head] = row;
                }
            }
        }
        last_rows.push(layer_last_rows);

        let layer_cache: Vec<Vec<TokenKv<T>>> = (0..config.kv_heads)
            .map(|h| {
                tokens
                    .iter()
                    .enumerate()
                    .map(|(pos, tok)| {
                        TokenKv::new(tok.k[h].clone(), tok.v[h].clone(), pos, true)
                    })
                    .collect()
            })
            .collect();
        cache_entries.push(layer_cache);
    }

    Ok(PrefillOutput {
        cache: FullKvCache::from_entries(cache_entries),
        last_rows,
        trace,
    })
}
