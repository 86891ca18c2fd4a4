//! Eviction policies over a prefilled cache.
//!
//! Every policy starts from the same full cache and answers two questions:
//! what survives compression, and what is visible to a query head at each
//! decode step.
//!
//! * `Full` keeps everything and keeps growing.
//! * `StreamLlmR` / `StreamLlmAbs` keep sink + recent; the R variant stores
//!   pre-rotation keys and renumbers the window at attention time, the Abs
//!   variant bakes absolute rotations in.
//! * `Sage` runs a one-time per-query-head top-k over the evictable segment,
//!   scored by the last prompt token's attention row; after that only the
//!   recent FIFO moves.
//! * `BlockTopK` keeps the whole evictable pool, summarizes fixed contiguous
//!   key blocks (min/max or mean pooling) and re-selects the top blocks for
//!   every step's query — the dynamic baseline.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::StepInputs;
use crate::cache::{
    build_reduced, partition_cache, BudgetPlan, CacheError, FullKvCache, ReducedKvCache,
    SegmentedKvCache, Selections, TokenKv,
};
use crate::config::ModelConfig;
use crate::rope::{apply_rotation, PositioningMode, RopeError};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("top-k of {k} exceeds {len} candidates")]
    KTooLarge { k: usize, len: usize },
    #[error("invalid budget plan: {0}")]
    InvalidPlan(String),
    #[error("cannot summarize an empty block")]
    EmptyBlock,
    #[error("score rows do not match the cache: {0}")]
    ScoresShape(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Rope(#[from] RopeError),
}

/// Which eviction policy drives a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Full,
    StreamLlmR,
    StreamLlmAbs,
    Sage,
    BlockTopK,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyKind::Full => "full",
            PolicyKind::StreamLlmR => "streamllm-r",
            PolicyKind::StreamLlmAbs => "streamllm-abs",
            PolicyKind::Sage => "sage",
            PolicyKind::BlockTopK => "block-topk",
        };
        f.write_str(name)
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(PolicyKind::Full),
            "streamllm-r" => Ok(PolicyKind::StreamLlmR),
            "streamllm" | "streamllm-abs" => Ok(PolicyKind::StreamLlmAbs),
            "sage" => Ok(PolicyKind::Sage),
            "block-topk" | "quest" => Ok(PolicyKind::BlockTopK),
            other => Err(format!("unknown policy '{other}'")),
        }
    }
}

/// Block-summary pooling for the dynamic baseline. MinMax is Quest-style
/// (upper bound on in-block dot products); Mean is InfLLM-style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    MinMax,
    Mean,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::MinMax => "minmax",
            Pooling::Mean => "mean",
        })
    }
}

pub const DEFAULT_BLOCK_SIZE: usize = 16;

/// A policy plus its budget split and block parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub plan: BudgetPlan,
    /// BlockTopK only.
    pub block_size: usize,
    /// BlockTopK only.
    pub pooling: Pooling,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, plan: BudgetPlan) -> Self {
        Self { kind, plan, block_size: DEFAULT_BLOCK_SIZE, pooling: Pooling::MinMax }
    }

    pub fn validate(&self, group_size: usize) -> Result<(), PolicyError> {
        let p = &self.plan;
        match self.kind {
            PolicyKind::Full => Ok(()),
            PolicyKind::Sage => {
                if !p.gqa_identity_holds(group_size) {
                    return Err(PolicyError::InvalidPlan(format!(
                        "S + G*k + R must equal B: {} + {}*{} + {} != {}",
                        p.sink, group_size, p.topk, p.recent, p.budget
                    )));
                }
                if p.topk == 0 {
                    return Err(PolicyError::InvalidPlan("sage needs k >= 1".into()));
                }
                Ok(())
            }
            PolicyKind::StreamLlmR | PolicyKind::StreamLlmAbs => {
                if p.topk != 0 {
                    return Err(PolicyError::InvalidPlan("streamllm has no top-k share".into()));
                }
                if p.sink + p.recent != p.budget {
                    return Err(PolicyError::InvalidPlan(format!(
                        "S + R must equal B: {} + {} != {}",
                        p.sink, p.recent, p.budget
                    )));
                }
                Ok(())
            }
            PolicyKind::BlockTopK => {
                if self.block_size == 0 {
                    return Err(PolicyError::InvalidPlan("block size must be >= 1".into()));
                }
                if p.budget <= p.sink + p.recent
                    || (p.budget - p.sink - p.recent) / self.block_size == 0
                {
                    return Err(PolicyError::InvalidPlan(
                        "budget leaves no room for a selected block".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Blocks a BlockTopK step may select: `floor((B - S - R) / C)`.
    pub fn selected_block_count(&self) -> usize {
        (self.plan.budget - self.plan.sink - self.plan.recent) / self.block_size
    }
}

/// Indices of the `k` largest scores, ties broken toward the lower index,
/// returned in ascending index order.
pub fn top_k_indices<T: Scalar>(scores: &[T], k: usize) -> Result<Vec<usize>, PolicyError> {
    if k > scores.len() {
        return Err(PolicyError::KTooLarge { k, len: scores.len() });
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

fn rotate_entry_absolute<T: Scalar>(entry: &mut TokenKv<T>, base: T) -> Result<(), RopeError> {
    if entry.pre_rope {
        entry.key = apply_rotation(&entry.key, T::from_usize_lossy(entry.position), base)?;
        entry.pre_rope = false;
    }
    Ok(())
}

/// One-time top-k compression guided by the last prompt token's scores.
///
/// `last_rows[layer][q_head]` must cover every position before the last
/// token (length >= N-1); the row is restricted to the evictable segment and
/// each query head selects independently. Kept keys get their absolute
/// rotation baked in.
pub fn sage_compress<T: Scalar>(
    seg: SegmentedKvCache<T>,
    last_rows: &[Vec<Vec<T>>],
    plan: &BudgetPlan,
) -> Result<ReducedKvCache<T>, PolicyError> {
    sage_compress_with_base(seg, last_rows, plan, T::from_f64_lossy(crate::config::DEFAULT_ROPE_BASE))
}

pub fn sage_compress_with_base<T: Scalar>(
    seg: SegmentedKvCache<T>,
    last_rows: &[Vec<Vec<T>>],
    plan: &BudgetPlan,
    rope_base: T,
) -> Result<ReducedKvCache<T>, PolicyError> {
    if plan.topk == 0 {
        return Err(PolicyError::InvalidPlan("sage needs k >= 1".into()));
    }
    if plan.topk > seg.evictable_len() {
        return Err(PolicyError::KTooLarge { k: plan.topk, len: seg.evictable_len() });
    }
    if last_rows.len() != seg.layers() {
        return Err(PolicyError::ScoresShape(format!(
            "{} score layers for {} cache layers",
            last_rows.len(),
            seg.layers()
        )));
    }
    let q_heads = last_rows.first().map_or(0, Vec::len);
    if q_heads == 0 || q_heads % seg.kv_heads() != 0 {
        return Err(PolicyError::ScoresShape(format!(
            "{} query heads do not group over {} kv heads",
            q_heads,
            seg.kv_heads()
        )));
    }
    let evict_start = seg.sink_len();
    let evict_end = evict_start + seg.evictable_len();

    let mut selections: Selections = Vec::with_capacity(seg.layers());
    for (l, layer_rows) in last_rows.iter().enumerate() {
        let mut layer_sel = Vec::with_capacity(q_heads);
        for (h, row) in layer_rows.iter().enumerate() {
            if row.len() < evict_end {
                return Err(PolicyError::ScoresShape(format!(
                    "layer {l} head {h} row of {} does not cover the evictable segment \
                     ending at {evict_end}",
                    row.len()
                )));
            }
            layer_sel.push(top_k_indices(&row[evict_start..evict_end], plan.topk)?);
        }
        selections.push(layer_sel);
    }

    let mut reduced = build_reduced(seg, &selections)?;
    reduced.for_each_entry_mut(|e| {
        rotate_entry_absolute(e, rope_base).expect("even head_dim enforced upstream")
    });
    Ok(reduced)
}

/// Static sink + recent compression. Keeps the first `S` entries and the
/// final `B - S` (recent window including the last token). With `B >= N`
/// there is nothing to evict and the full cache is wrapped unchanged, with
/// enough FIFO headroom to grow to the budget before sliding.
pub fn streamllm_compress<T: Scalar>(
    full: FullKvCache<T>,
    plan: &BudgetPlan,
    mode: PositioningMode,
    q_heads: usize,
) -> Result<ReducedKvCache<T>, PolicyError> {
    streamllm_compress_with_base(
        full,
        plan,
        mode,
        q_heads,
        T::from_f64_lossy(crate::config::DEFAULT_ROPE_BASE),
    )
}

pub fn streamllm_compress_with_base<T: Scalar>(
    full: FullKvCache<T>,
    plan: &BudgetPlan,
    mode: PositioningMode,
    q_heads: usize,
    rope_base: T,
) -> Result<ReducedKvCache<T>, PolicyError> {
    if plan.topk != 0 || plan.sink + plan.recent != plan.budget {
        return Err(PolicyError::InvalidPlan(
            "streamllm plan needs k == 0 and S + R == B".into(),
        ));
    }
    if plan.budget <= plan.sink {
        return Err(PolicyError::InvalidPlan("budget must exceed the sink".into()));
    }
    let n = full.seq_len();
    let recent_cap = plan.budget - plan.sink - 1;

    let mut reduced = if plan.budget >= n {
        ReducedKvCache::from_full_uncompressed(full, plan.sink, recent_cap, q_heads)
    } else {
        let seg = partition_cache(full, plan.sink, recent_cap)?;
        let empty: Selections = vec![vec![Vec::new(); q_heads]; seg.layers()];
        build_reduced(seg, &empty)?
    };

    if mode == PositioningMode::Absolute {
        reduced.for_each_entry_mut(|e| {
            rotate_entry_absolute(e, rope_base).expect("even head_dim enforced upstream")
        });
    }
    Ok(reduced)
}

/// Pooled representation of one contiguous key block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockSummary<T> {
    MinMax { min: Vec<T>, max: Vec<T> },
    Mean(Vec<T>),
}

impl<T: Scalar> BlockSummary<T> {
    /// Query-conditioned block score: `sum_i max(q_i*min_i, q_i*max_i)` for
    /// MinMax (an upper bound on any in-block dot product), `q . mean` for
    /// Mean pooling.
    pub fn score(&self, q: &[T]) -> T {
        match self {
            BlockSummary::MinMax { min, max } => q
                .iter()
                .zip(min.iter().zip(max))
                .fold(T::zero(), |acc, (&qi, (&mn, &mx))| acc + (qi * mn).max(qi * mx)),
            BlockSummary::Mean(mean) => {
                q.iter().zip(mean).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            }
        }
    }
}

/// Elementwise min/max vectors or the mean vector over a block of keys.
pub fn block_summarize<T: Scalar>(
    keys: &[&[T]],
    pooling: Pooling,
) -> Result<BlockSummary<T>, PolicyError> {
    let first = *keys.first().ok_or(PolicyError::EmptyBlock)?;
    match pooling {
        Pooling::MinMax => {
            let mut min = first.to_vec();
            let mut max = first.to_vec();
            for key in &keys[1..] {
                for ((mn, mx), &x) in min.iter_mut().zip(max.iter_mut()).zip(key.iter()) {
                    *mn = mn.min(x);
                    *mx = mx.max(x);
                }
            }
            Ok(BlockSummary::MinMax { min, max })
        }
        Pooling::Mean => {
            let count = T::from_usize_lossy(keys.len());
            let mut mean = vec![T::zero(); first.len()];
            for key in keys {
                for (m, &x) in mean.iter_mut().zip(key.iter()) {
                    *m = *m + x;
                }
            }
            for m in &mut mean {
                *m = *m / count;
            }
            Ok(BlockSummary::Mean(mean))
        }
    }
}

#[derive(Debug, Clone)]
struct Block<T> {
    start: usize,
    end: usize,
    summary: BlockSummary<T>,
}

#[derive(Debug, Clone)]
struct BlockKvHead<T> {
    sink: Vec<TokenKv<T>>,
    /// Full evictable pool — dynamic selection keeps every candidate.
    pool: Vec<TokenKv<T>>,
    blocks: Vec<Block<T>>,
    recent: VecDeque<TokenKv<T>>,
    last: TokenKv<T>,
}

/// Dynamic block-wise top-k state (Quest / InfLLM style): the evictable pool
/// is retained in full, chunked into contiguous blocks fixed at prefill
/// (last block possibly ragged), and each decode step picks the
/// highest-scoring blocks per query head.
#[derive(Debug, Clone)]
pub struct BlockTopkState<T> {
    q_heads: usize,
    recent_cap: usize,
    select_count: usize,
    /// `heads[layer][kv_head]`.
    heads: Vec<Vec<BlockKvHead<T>>>,
}

impl<T: Scalar> BlockTopkState<T> {
    /// Chunk a partitioned cache into blocks. Keys are rotated at their
    /// absolute positions up front so block summaries and step scores live
    /// in the same space as the rotated queries.
    pub fn from_segments(
        seg: SegmentedKvCache<T>,
        block_size: usize,
        pooling: Pooling,
        select_count: usize,
        q_heads: usize,
        rope_base: T,
    ) -> Result<Self, PolicyError> {
        if block_size == 0 || select_count == 0 {
            return Err(PolicyError::InvalidPlan("block size and selection must be >= 1".into()));
        }
        let recent_cap = seg.recent_len();
        let mut heads = Vec::with_capacity(seg.layers());
        for layer in seg.into_segments() {
            let mut layer_heads = Vec::with_capacity(layer.len());
            for segs in layer {
                let mut sink = segs.sink;
                let mut pool = segs.evictable;
                let mut recent: VecDeque<TokenKv<T>> = segs.recent.into();
                let mut last = segs.last;
                for e in sink
                    .iter_mut()
                    .chain(pool.iter_mut())
                    .chain(recent.iter_mut())
                    .chain(std::iter::once(&mut last))
                {
                    rotate_entry_absolute(e, rope_base)?;
                }
                let blocks = pool
                    .chunks(block_size)
                    .enumerate()
                    .map(|(i, chunk)| {
                        let keys: Vec<&[T]> = chunk.iter().map(|e| e.key.as_slice()).collect();
                        Ok(Block {
                            start: i * block_size,
                            end: i * block_size + chunk.len(),
                            summary: block_summarize(&keys, pooling)?,
                        })
                    })
                    .collect::<Result<Vec<_>, PolicyError>>()?;
                layer_heads.push(BlockKvHead { sink, pool, blocks, recent, last });
            }
            heads.push(layer_heads);
        }
        Ok(Self { q_heads, recent_cap, select_count, heads })
    }

    pub fn layers(&self) -> usize {
        self.heads.len()
    }

    fn group_size(&self) -> usize {
        self.q_heads / self.heads.first().map_or(1, Vec::len)
    }

    pub fn last_position(&self, layer: usize, kv_head: usize) -> usize {
        self.heads[layer][kv_head].last.position
    }

    /// Block indices this query would select, ties toward the lower block.
    pub fn select_blocks(&self, layer: usize, kv_head: usize, q_rot: &[T]) -> Vec<usize> {
        let head = &self.heads[layer][kv_head];
        let scores: Vec<T> = head.blocks.iter().map(|b| b.summary.score(q_rot)).collect();
        let take = self.select_count.min(scores.len());
        top_k_indices(&scores, take).expect("take <= len")
    }

    /// Visible entries for one step: sink ∥ selected blocks ∥ recent ∥ last.
    pub fn head_view(
        &self,
        layer: usize,
        q_head: usize,
        q_raw: &[T],
        rope_base: T,
    ) -> Result<Vec<&TokenKv<T>>, PolicyError> {
        let kv_head = q_head / self.group_size();
        let head = &self.heads[layer][kv_head];
        let q_pos = T::from_usize_lossy(head.last.position);
        let q_rot = apply_rotation(q_raw, q_pos, rope_base)?;
        let mut view: Vec<&TokenKv<T>> = head.sink.iter().collect();
        for b in self.select_blocks(layer, kv_head, &q_rot) {
            let block = &head.blocks[b];
            view.extend(head.pool[block.start..block.end].iter());
        }
        view.extend(head.recent.iter());
        view.push(&head.last);
        Ok(view)
    }

    /// Slide the recent window; the block pool never changes after prefill,
    /// so entries aged out of the window are dropped.
    pub fn push_head(&mut self, layer: usize, kv_head: usize, new: TokenKv<T>) {
        let cap = self.recent_cap;
        let head = &mut self.heads[layer][kv_head];
        debug_assert_eq!(new.position, head.last.position + 1);
        let prev_last = std::mem::replace(&mut head.last, new);
        head.recent.push_back(prev_last);
        if head.recent.len() > cap {
            head.recent.pop_front();
        }
    }

    /// Entries held per layer; right after compression this is
    /// `H_kv * N` — the whole prefill cache survives as candidates.
    pub fn retained_entries_per_layer(&self) -> usize {
        self.heads.first().map_or(0, |l| {
            l.iter()
                .map(|h| h.sink.len() + h.pool.len() + h.recent.len() + 1)
                .sum()
        })
    }
}

/// A policy's live cache during decode.
pub enum PolicyState<T> {
    Full { cache: FullKvCache<T>, group_size: usize },
    Reduced { cache: ReducedKvCache<T>, mode: PositioningMode },
    Blocks(BlockTopkState<T>),
}

impl<T: Scalar> PolicyState<T> {
    /// Run the policy's one-time compression over a prefilled cache.
    ///
    /// `last_rows` are only consulted by Sage. A budget of at least the
    /// prompt length takes the no-eviction path: Sage and BlockTopK behave
    /// exactly like Full; StreamLLM wraps the cache unchanged and only
    /// starts sliding once decode fills the budget.
    pub fn compress(
        policy: &PolicyConfig,
        model: &ModelConfig,
        full: FullKvCache<T>,
        last_rows: &[Vec<Vec<T>>],
    ) -> Result<Self, PolicyError> {
        policy.validate(model.group_size())?;
        let n = full.seq_len();
        let base = T::from_f64_lossy(model.rope_base);
        let group_size = model.group_size();
        match policy.kind {
            PolicyKind::Full => Ok(PolicyState::Full { cache: full, group_size }),
            PolicyKind::Sage => {
                if policy.plan.budget >= n {
                    return Ok(PolicyState::Full { cache: full, group_size });
                }
                let seg = partition_cache(full, policy.plan.sink, policy.plan.recent)?;
                let mut plan = policy.plan;
                plan.topk = plan.topk.min(seg.evictable_len());
                let cache = sage_compress_with_base(seg, last_rows, &plan, base)?;
                Ok(PolicyState::Reduced { cache, mode: PositioningMode::Absolute })
            }
            PolicyKind::StreamLlmR | PolicyKind::StreamLlmAbs => {
                let mode = if policy.kind == PolicyKind::StreamLlmR {
                    PositioningMode::WindowRelative
                } else {
                    PositioningMode::Absolute
                };
                let cache = streamllm_compress_with_base(
                    full,
                    &policy.plan,
                    mode,
                    model.q_heads,
                    base,
                )?;
                Ok(PolicyState::Reduced { cache, mode })
            }
            PolicyKind::BlockTopK => {
                if policy.plan.budget >= n {
                    return Ok(PolicyState::Full { cache: full, group_size });
                }
                let seg = partition_cache(full, policy.plan.sink, policy.plan.recent)?;
                let state = BlockTopkState::from_segments(
                    seg,
                    policy.block_size,
                    policy.pooling,
                    policy.selected_block_count(),
                    model.q_heads,
                    base,
                )?;
                Ok(PolicyState::Blocks(state))
            }
        }
    }

    /// Positioning mode decode must attend with.
    pub fn positioning(&self) -> PositioningMode {
        match self {
            PolicyState::Full { .. } | PolicyState::Blocks(_) => PositioningMode::Absolute,
            PolicyState::Reduced { mode, .. } => *mode,
        }
    }

    /// Absorb one decoded token's KV for every (layer, kv head), applying
    /// the policy's key-storage convention (absolute rotation baked in
    /// everywhere except pre-rope stores).
    pub fn push_token(
        &mut self,
        step: &[StepInputs<T>],
        position: usize,
        rope_base: T,
    ) -> Result<(), PolicyError> {
        let rotate_now = match self {
            // Full keeps raw keys and rotates at attention time.
            PolicyState::Full { .. } => false,
            PolicyState::Reduced { mode, .. } => *mode == PositioningMode::Absolute,
            PolicyState::Blocks(_) => true,
        };
        let make_entry = |k: &Vec<T>, v: &Vec<T>| -> Result<TokenKv<T>, PolicyError> {
            let mut e = TokenKv::new(k.clone(), v.clone(), position, true);
            if rotate_now {
                rotate_entry_absolute(&mut e, rope_base)?;
            }
            Ok(e)
        };
        match self {
            PolicyState::Full { cache, .. } => {
                let mut per_layer = Vec::with_capacity(step.len());
                for layer in step {
                    let mut per_head = Vec::with_capacity(layer.k.len());
                    for (k, v) in layer.k.iter().zip(&layer.v) {
                        per_head.push(make_entry(k, v)?);
                    }
                    per_layer.push(per_head);
                }
                cache.push_token(per_layer);
            }
            PolicyState::Reduced { cache, .. } => {
                for (layer, inputs) in step.iter().enumerate() {
                    for (kv_head, (k, v)) in inputs.k.iter().zip(&inputs.v).enumerate() {
                        cache.fifo_push_head(layer, kv_head, make_entry(k, v)?);
                    }
                }
            }
            PolicyState::Blocks(state) => {
                for (layer, inputs) in step.iter().enumerate() {
                    for (kv_head, (k, v)) in inputs.k.iter().zip(&inputs.v).enumerate() {
                        state.push_head(layer, kv_head, make_entry(k, v)?);
                    }
                }
            }
        }
        Ok(())
    }

    /// Entries visible to one query head this step. BlockTopK re-selects
    /// from the raw query; the other policies ignore it.
    pub fn head_view(
        &self,
        layer: usize,
        q_head: usize,
        q_raw: &[T],
        rope_base: T,
    ) -> Result<Vec<&TokenKv<T>>, PolicyError> {
        match self {
            PolicyState::Full { cache, group_size } => {
                Ok(cache.head_entries(layer, q_head / group_size).iter().collect())
            }
            PolicyState::Reduced { cache, .. } => Ok(cache.head_view(layer, q_head)),
            PolicyState::Blocks(state) => state.head_view(layer, q_head, q_raw, rope_base),
        }
    }

    pub fn retained_entries_per_layer(&self) -> usize {
        match self {
            PolicyState::Full { cache, .. } => cache.retained_entries_per_layer(),
            PolicyState::Reduced { cache, .. } => cache.retained_entries_per_layer(),
            PolicyState::Blocks(state) => state.retained_entries_per_layer(),
        }
    }

    pub fn layers(&self) -> usize {
        match self {
            PolicyState::Full { cache, .. } => cache.layers(),
            PolicyState::Reduced { cache, .. } => cache.layers(),
            PolicyState::Blocks(state) => state.layers(),
        }
    }
}
