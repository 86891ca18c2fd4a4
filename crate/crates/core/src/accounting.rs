//! Closed-form memory and latency accounting.
//!
//! A full cache stores `2 * L * N * H_kv * d_h` scalars. Under the GQA
//! budget split `B = S + G*k + R`, a compressed cache attends only
//! `S + k + R + 1` tokens per query head, which is where the per-step
//! speedup over a same-budget sink+recent cache comes from:
//! `(S + G*k + R) / (S + k + R)`. Selection costs are reported as abstract
//! multiply/comparison counts, not wall-clock predictions.

use serde::Serialize;
use thiserror::Error;

use crate::cache::BudgetPlan;
use crate::config::ModelConfig;
use crate::policies::PolicyKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccountingError {
    #[error("budget {budget} too small to split for group size {group_size}")]
    BudgetTooSmall { budget: usize, group_size: usize },
}

fn prev_power_of_two(x: usize) -> usize {
    debug_assert!(x >= 1);
    if x.is_power_of_two() {
        x
    } else {
        x.next_power_of_two() >> 1
    }
}

/// Default budget split for the top-k policy: `S = B/4`, `k` the largest
/// power of two not exceeding `B/(2G)`, and the remainder folded into `R`
/// so `S + G*k + R == B` holds exactly.
///
/// For `B = 8192` this yields (S=2048, k=1024, R=2048) at `G = 4` and
/// (S=2048, k=512, R=2560) at `G = 7`, matching the reference settings for
/// the 4-group Llama and 7-group Qwen geometries.
pub fn recommended_plan(budget: usize, group_size: usize) -> Result<BudgetPlan, AccountingError> {
    if group_size == 0 {
        return Err(AccountingError::BudgetTooSmall { budget, group_size });
    }
    let sink = budget / 4;
    let raw_k = budget / (2 * group_size);
    if raw_k == 0 {
        return Err(AccountingError::BudgetTooSmall { budget, group_size });
    }
    let topk = prev_power_of_two(raw_k);
    let recent = budget - sink - group_size * topk;
    Ok(BudgetPlan::new(budget, sink, topk, recent))
}

/// Default sink+recent split for StreamLLM: `S = B/4`, the rest is window.
pub fn streamllm_plan(budget: usize) -> BudgetPlan {
    let sink = budget / 4;
    BudgetPlan::new(budget, sink, 0, budget - sink)
}

/// Default split for the block-wise policy: `S = B/4`, `R = B/4`, leaving
/// `B/2` worth of selected blocks — the same shares the top-k split uses.
pub fn block_topk_plan(budget: usize) -> BudgetPlan {
    let sink = budget / 4;
    BudgetPlan::new(budget, sink, 0, budget / 4)
}

/// The default plan a CLI invocation falls back to for each policy kind.
pub fn default_plan_for(
    kind: PolicyKind,
    budget: usize,
    group_size: usize,
) -> Result<BudgetPlan, AccountingError> {
    match kind {
        PolicyKind::Sage => recommended_plan(budget, group_size),
        PolicyKind::StreamLlmR | PolicyKind::StreamLlmAbs => Ok(streamllm_plan(budget)),
        PolicyKind::BlockTopK => Ok(block_topk_plan(budget)),
        PolicyKind::Full => Ok(BudgetPlan::new(budget, 0, 0, budget)),
    }
}

/// Scalar elements and bytes of a cache region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryFootprint {
    pub elements: u64,
    pub bytes: u64,
}

/// Full-cache footprint: `2 * L * N * H_kv * d_h` elements (keys and
/// values).
pub fn cache_memory(config: &ModelConfig, n: usize, element_bytes: usize) -> MemoryFootprint {
    let elements =
        2 * config.layers as u64 * n as u64 * config.kv_heads as u64 * config.head_dim as u64;
    MemoryFootprint { elements, bytes: elements * element_bytes as u64 }
}

/// Compressed-cache footprint: the shared sink/recent/last segments are paid
/// once per kv head, the top-k segments once per query head.
pub fn reduced_cache_memory(
    config: &ModelConfig,
    plan: &BudgetPlan,
    element_bytes: usize,
) -> MemoryFootprint {
    let l = config.layers as u64;
    let d = config.head_dim as u64;
    let shared = 2 * l * (plan.sink + plan.recent + 1) as u64 * config.kv_heads as u64 * d;
    let topk = 2 * l * plan.topk as u64 * config.q_heads as u64 * d;
    let elements = shared + topk;
    MemoryFootprint { elements, bytes: elements * element_bytes as u64 }
}

/// Per-step attention speedup over a sink+recent cache at the same token
/// budget: `(S + G*k + R) / (S + k + R)`.
pub fn streamllm_speedup(plan: &BudgetPlan, group_size: usize) -> f64 {
    let budget_tokens = (plan.sink + group_size * plan.topk + plan.recent) as f64;
    let visible_tokens = (plan.sink + plan.topk + plan.recent) as f64;
    budget_tokens / visible_tokens
}

/// Attention speedups over full attention at prompt length `n`:
/// sink+recent runs at `N/B`, the top-k policy at
/// `streamllm_speedup * N/B`.
pub fn attention_speedup(
    n: usize,
    budget: usize,
    plan: &BudgetPlan,
    group_size: usize,
) -> (f64, f64) {
    let streamllm = n as f64 / budget as f64;
    (streamllm, streamllm * streamllm_speedup(plan, group_size))
}

/// Which selection procedure a cost estimate describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SelectionMode {
    /// Scores already available: one `E log2 E` pass per sequence.
    SageWithScores,
    /// No scores (fused attention): `E*d` dots plus the sort, once.
    SageDotProduct,
    /// Block-wise per-step selection: `T * (N/C) * (d + log2(N/C))`
    /// per layer over a whole generation.
    BlockPerStep,
}

/// Abstract operation counts of one selection procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionCost {
    pub mode: SelectionMode,
    pub multiplies: f64,
    pub comparisons: f64,
}

impl SelectionCost {
    pub fn total(&self) -> f64 {
        self.multiplies + self.comparisons
    }
}

/// Operation counts for a selection procedure. `e` is the evictable pool
/// size, `d` the head dimension, `t` generated tokens, `n` the context
/// length and `c` the block size; modes ignore the parameters they do not
/// involve.
pub fn selection_cost(
    e: usize,
    d: usize,
    t: usize,
    n: usize,
    c: usize,
    mode: SelectionMode,
) -> SelectionCost {
    let log2 = |x: f64| if x <= 1.0 { 0.0 } else { x.log2() };
    match mode {
        SelectionMode::SageWithScores => SelectionCost {
            mode,
            multiplies: 0.0,
            comparisons: e as f64 * log2(e as f64),
        },
        SelectionMode::SageDotProduct => SelectionCost {
            mode,
            multiplies: e as f64 * d as f64,
            comparisons: e as f64 * log2(e as f64),
        },
        SelectionMode::BlockPerStep => {
            let blocks = n as f64 / c as f64;
            SelectionCost {
                mode,
                multiplies: t as f64 * blocks * d as f64,
                comparisons: t as f64 * blocks * log2(blocks),
            }
        }
    }
}

/// Everything the `budget` subcommand reports.
#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub model: ModelConfig,
    pub group_size: usize,
    pub seq_len: usize,
    pub steps: usize,
    pub element_bytes: usize,
    pub plan: BudgetPlan,
    pub per_head_visible_len: usize,
    pub full_cache: MemoryFootprint,
    pub reduced_cache: MemoryFootprint,
    /// Per-step speedup over sink+recent at the same budget.
    pub streamllm_speedup: f64,
    /// Sink+recent speedup over full attention (`N/B`).
    pub streamllm_attention_speedup: f64,
    /// Top-k policy speedup over full attention.
    pub sage_attention_speedup: f64,
    pub selection_with_scores: SelectionCost,
    pub selection_dot_product: SelectionCost,
    pub selection_block_per_step: SelectionCost,
}

impl CostReport {
    pub fn build(
        model: &ModelConfig,
        plan: &BudgetPlan,
        n: usize,
        steps: usize,
        block_size: usize,
        element_bytes: usize,
    ) -> Self {
        let g = model.group_size();
        let evictable = n.saturating_sub(1 + plan.sink + plan.recent);
        let (stream_vs_full, sage_vs_full) = attention_speedup(n, plan.budget, plan, g);
        CostReport {
            model: model.clone(),
            group_size: g,
            seq_len: n,
            steps,
            element_bytes,
            plan: *plan,
            per_head_visible_len: plan.per_head_visible_len(),
            full_cache: cache_memory(model, n, element_bytes),
            reduced_cache: reduced_cache_memory(model, plan, element_bytes),
            streamllm_speedup: streamllm_speedup(plan, g),
            streamllm_attention_speedup: stream_vs_full,
            sage_attention_speedup: sage_vs_full,
            selection_with_scores: selection_cost(
                evictable,
                model.head_dim,
                steps,
                n,
                block_size,
                SelectionMode::SageWithScores,
            ),
            selection_dot_product: selection_cost(
                evictable,
                model.head_dim,
                steps,
                n,
                block_size,
                SelectionMode::SageDotProduct,
            ),
            selection_block_per_step: selection_cost(
                evictable,
                model.head_dim,
                steps,
                n,
                block_size,
                SelectionMode::BlockPerStep,
            ),
        }
    }
}
