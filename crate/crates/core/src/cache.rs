//! Cache domain types and the partition / reduce / FIFO mechanics.
//!
//! A prefill produces a [`FullKvCache`]: one ordered `TokenKv` list per
//! (layer, kv head). [`partition_cache`] splits it into the four segments
//! sink / evictable / recent / last, [`build_reduced`] concatenates
//! sink ∥ top-k ∥ recent ∥ last into a [`ReducedKvCache`] (top-k is
//! per query head, the other segments are shared by the head group), and
//! [`ReducedKvCache::fifo_push`] keeps the recent window sliding during
//! decode. Compression is single-pass: once a `ReducedKvCache` exists, only
//! its recent window and last entry ever change.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CacheError {
    /// sink + recent + last leave no evictable region.
    #[error(
        "budget too large: sink {sink} + recent {recent} + 1 >= sequence length {seq_len} \
         leaves no evictable region"
    )]
    BudgetTooLarge { seq_len: usize, sink: usize, recent: usize },
    /// A top-k selection index is duplicated, out of range, or the selection
    /// grid has the wrong shape.
    #[error("invalid selection for layer {layer}, query head {q_head}: {detail}")]
    InvalidSelection { layer: usize, q_head: usize, detail: String },
    /// Entry positions are not strictly increasing.
    #[error("positions not strictly increasing in layer {layer}, kv head {kv_head}")]
    NonMonotonicPositions { layer: usize, kv_head: usize },
    /// Layers or heads disagree on sequence length.
    #[error("cache shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// One token's cached key/value pair for a single (layer, kv head) slot.
///
/// `pre_rope` marks keys stored in un-rotated form (window-relative
/// positioning rotates them at attention time); rotated keys carry the
/// rotation of their absolute `position`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenKv<T> {
    pub key: Vec<T>,
    pub value: Vec<T>,
    /// Absolute token index in the original sequence, 0-based.
    pub position: usize,
    pub pre_rope: bool,
}

impl<T: Scalar> TokenKv<T> {
    pub fn new(key: Vec<T>, value: Vec<T>, position: usize, pre_rope: bool) -> Self {
        debug_assert_eq!(key.len(), value.len());
        Self { key, value, position, pre_rope }
    }
}

/// Uncompressed per-(layer, kv head) KV lists, as produced by prefill and
/// grown by full-attention decode.
#[derive(Debug, Clone)]
pub struct FullKvCache<T> {
    /// `entries[layer][kv_head][i]`, ascending positions.
    entries: Vec<Vec<Vec<TokenKv<T>>>>,
}

impl<T: Scalar> FullKvCache<T> {
    pub fn new(layers: usize, kv_heads: usize) -> Self {
        Self { entries: vec![vec![Vec::new(); kv_heads]; layers] }
    }

    pub fn from_entries(entries: Vec<Vec<Vec<TokenKv<T>>>>) -> Self {
        Self { entries }
    }

    pub fn layers(&self) -> usize {
        self.entries.len()
    }

    pub fn kv_heads(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    /// Number of cached tokens (uniform across layers and heads).
    pub fn seq_len(&self) -> usize {
        self.entries
            .first()
            .and_then(|l| l.first())
            .map_or(0, Vec::len)
    }

    pub fn head_entries(&self, layer: usize, kv_head: usize) -> &[TokenKv<T>] {
        &self.entries[layer][kv_head]
    }

    /// Append one decoded token's KV for every (layer, kv head).
    pub fn push_token(&mut self, step: Vec<Vec<TokenKv<T>>>) {
        debug_assert_eq!(step.len(), self.entries.len());
        for (layer, per_head) in self.entries.iter_mut().zip(step) {
            debug_assert_eq!(per_head.len(), layer.len());
            for (head, kv) in layer.iter_mut().zip(per_head) {
                debug_assert!(head.last().map_or(true, |l| kv.position == l.position + 1));
                head.push(kv);
            }
        }
    }

    pub fn retained_entries_per_layer(&self) -> usize {
        self.entries
            .first()
            .map_or(0, |l| l.iter().map(Vec::len).sum())
    }

    fn validate(&self) -> Result<(), CacheError> {
        let n = self.seq_len();
        for (l, layer) in self.entries.iter().enumerate() {
            if layer.len() != self.kv_heads() {
                return Err(CacheError::ShapeMismatch(format!(
                    "layer {l} has {} kv heads, expected {}",
                    layer.len(),
                    self.kv_heads()
                )));
            }
            for (h, head) in layer.iter().enumerate() {
                if head.len() != n {
                    return Err(CacheError::ShapeMismatch(format!(
                        "layer {l} kv head {h} holds {} tokens, expected {n}",
                        head.len()
                    )));
                }
                if head.windows(2).any(|w| w[0].position >= w[1].position) {
                    return Err(CacheError::NonMonotonicPositions { layer: l, kv_head: h });
                }
            }
        }
        Ok(())
    }
}

/// The four-way partition of one (layer, kv head) KV list.
#[derive(Debug, Clone)]
pub struct HeadSegments<T> {
    pub sink: Vec<TokenKv<T>>,
    pub evictable: Vec<TokenKv<T>>,
    pub recent: Vec<TokenKv<T>>,
    pub last: TokenKv<T>,
}

/// Full cache partitioned into sink / evictable / recent / last, uniformly
/// across layers and kv heads.
#[derive(Debug, Clone)]
pub struct SegmentedKvCache<T> {
    sink_len: usize,
    evictable_len: usize,
    recent_len: usize,
    seq_len: usize,
    /// `segments[layer][kv_head]`.
    segments: Vec<Vec<HeadSegments<T>>>,
}

impl<T: Scalar> SegmentedKvCache<T> {
    pub fn sink_len(&self) -> usize {
        self.sink_len
    }

    pub fn evictable_len(&self) -> usize {
        self.evictable_len
    }

    pub fn recent_len(&self) -> usize {
        self.recent_len
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn layers(&self) -> usize {
        self.segments.len()
    }

    pub fn kv_heads(&self) -> usize {
        self.segments.first().map_or(0, Vec::len)
    }

    pub fn head_segments(&self, layer: usize, kv_head: usize) -> &HeadSegments<T> {
        &self.segments[layer][kv_head]
    }

    /// Concatenated sink ∥ evictable ∥ recent ∥ last view (the full list).
    pub fn head_view(&self, layer: usize, kv_head: usize) -> Vec<&TokenKv<T>> {
        let seg = &self.segments[layer][kv_head];
        seg.sink
            .iter()
            .chain(&seg.evictable)
            .chain(&seg.recent)
            .chain(std::iter::once(&seg.last))
            .collect()
    }

    /// Take ownership of the per-(layer, kv head) segments.
    pub fn into_segments(self) -> Vec<Vec<HeadSegments<T>>> {
        self.segments
    }
}

/// Partition each (layer, kv head) list into sink `[0, S)`, evictable
/// `[S, S+E)`, recent `[S+E, N-1)` and the last entry, with
/// `E = N - 1 - S - R`.
///
/// Fails with [`CacheError::BudgetTooLarge`] when `S + R + 1 >= N`, i.e.
/// when no evictable region remains.
pub fn partition_cache<T: Scalar>(
    full: FullKvCache<T>,
    sink: usize,
    recent: usize,
) -> Result<SegmentedKvCache<T>, CacheError> {
    full.validate()?;
    let n = full.seq_len();
    if sink + recent + 1 >= n {
        return Err(CacheError::BudgetTooLarge { seq_len: n, sink, recent });
    }
    let evictable = n - 1 - sink - recent;

    let segments = full
        .entries
        .into_iter()
        .map(|layer| {
            layer
                .into_iter()
                .map(|mut head| {
                    let last = head.pop().expect("n >= 2");
                    let recent_part = head.split_off(sink + evictable);
                    let evictable_part = head.split_off(sink);
                    HeadSegments {
                        sink: head,
                        evictable: evictable_part,
                        recent: recent_part,
                        last,
                    }
                })
                .collect()
        })
        .collect();

    Ok(SegmentedKvCache {
        sink_len: sink,
        evictable_len: evictable,
        recent_len: recent,
        seq_len: n,
        segments,
    })
}

/// Per-(layer, kv head) state of a compressed cache: the segments shared by
/// every query head of the group.
#[derive(Debug, Clone)]
pub struct ReducedKvHead<T> {
    pub sink: Vec<TokenKv<T>>,
    pub recent: VecDeque<TokenKv<T>>,
    pub last: TokenKv<T>,
}

#[derive(Debug, Clone)]
pub struct ReducedLayer<T> {
    /// Shared segments, one per kv head.
    pub kv_heads: Vec<ReducedKvHead<T>>,
    /// Selected evictable entries, one list per query head, ascending
    /// positions. Empty lists for policies that select nothing.
    pub topk: Vec<Vec<TokenKv<T>>>,
}

/// Post-compression cache: shared sink/recent/last per kv head plus frozen
/// per-query-head top-k segments and a bounded recent FIFO.
#[derive(Debug, Clone)]
pub struct ReducedKvCache<T> {
    sink_len: usize,
    topk_len: usize,
    recent_cap: usize,
    q_heads: usize,
    layers: Vec<ReducedLayer<T>>,
}

impl<T: Scalar> ReducedKvCache<T> {
    pub fn sink_len(&self) -> usize {
        self.sink_len
    }

    /// k: selected entries per query head.
    pub fn topk_len(&self) -> usize {
        self.topk_len
    }

    /// R: capacity of the recent FIFO.
    pub fn recent_cap(&self) -> usize {
        self.recent_cap
    }

    pub fn q_heads(&self) -> usize {
        self.q_heads
    }

    pub fn kv_heads(&self) -> usize {
        self.layers.first().map_or(0, |l| l.kv_heads.len())
    }

    pub fn layers(&self) -> usize {
        self.layers.len()
    }

    fn group_size(&self) -> usize {
        self.q_heads / self.kv_heads()
    }

    /// Visible entries for one query head:
    /// sink ∥ topk(head) ∥ recent ∥ last, ascending positions.
    pub fn head_view(&self, layer: usize, q_head: usize) -> Vec<&TokenKv<T>> {
        let l = &self.layers[layer];
        let kv = &l.kv_heads[q_head / self.group_size()];
        kv.sink
            .iter()
            .chain(&l.topk[q_head])
            .chain(&kv.recent)
            .chain(std::iter::once(&kv.last))
            .collect()
    }

    /// Tokens visible to one query head right now.
    pub fn visible_len(&self, layer: usize, q_head: usize) -> usize {
        let l = &self.layers[layer];
        let kv = &l.kv_heads[q_head / self.group_size()];
        kv.sink.len() + l.topk[q_head].len() + kv.recent.len() + 1
    }

    /// Absolute positions of this head's frozen top-k segment.
    pub fn topk_positions(&self, layer: usize, q_head: usize) -> Vec<usize> {
        self.layers[layer].topk[q_head].iter().map(|e| e.position).collect()
    }

    pub fn sink_entries(&self, layer: usize, kv_head: usize) -> &[TokenKv<T>] {
        &self.layers[layer].kv_heads[kv_head].sink
    }

    pub fn recent_positions(&self, layer: usize, kv_head: usize) -> Vec<usize> {
        self.layers[layer].kv_heads[kv_head]
            .recent
            .iter()
            .map(|e| e.position)
            .collect()
    }

    pub fn last_position(&self, layer: usize, kv_head: usize) -> usize {
        self.layers[layer].kv_heads[kv_head].last.position
    }

    /// Entries actually held per layer: kv-head shared segments plus all
    /// per-query-head top-k lists.
    pub fn retained_entries_per_layer(&self) -> usize {
        self.layers.first().map_or(0, |l| {
            let shared: usize =
                l.kv_heads.iter().map(|kv| kv.sink.len() + kv.recent.len() + 1).sum();
            let topk: usize = l.topk.iter().map(Vec::len).sum();
            shared + topk
        })
    }

    /// Slide the recent window of one head: the previous `last` joins
    /// `recent`, the oldest recent entry is dropped once the FIFO exceeds
    /// its capacity, and `new` becomes `last`.
    pub fn fifo_push_head(&mut self, layer: usize, kv_head: usize, new: TokenKv<T>) {
        let cap = self.recent_cap;
        let kv = &mut self.layers[layer].kv_heads[kv_head];
        debug_assert_eq!(new.position, kv.last.position + 1);
        let prev_last = std::mem::replace(&mut kv.last, new);
        kv.recent.push_back(prev_last);
        if kv.recent.len() > cap {
            kv.recent.pop_front();
        }
    }

    /// Visit every retained entry mutably (sink, top-k, recent and last of
    /// every layer). Top-k lists hold their own clones, so each retained
    /// entry is visited exactly once.
    pub fn for_each_entry_mut(&mut self, mut f: impl FnMut(&mut TokenKv<T>)) {
        for layer in &mut self.layers {
            for kv in &mut layer.kv_heads {
                kv.sink.iter_mut().for_each(&mut f);
                kv.recent.iter_mut().for_each(&mut f);
                f(&mut kv.last);
            }
            for topk in &mut layer.topk {
                topk.iter_mut().for_each(&mut f);
            }
        }
    }

    /// [`fifo_push_head`](Self::fifo_push_head) across every
    /// (layer, kv head): `step[layer][kv_head]` is the new token's KV.
    pub fn fifo_push(&mut self, step: Vec<Vec<TokenKv<T>>>) {
        debug_assert_eq!(step.len(), self.layers.len());
        for (layer, per_head) in step.into_iter().enumerate() {
            debug_assert_eq!(per_head.len(), self.layers[layer].kv_heads.len());
            for (kv_head, kv) in per_head.into_iter().enumerate() {
                self.fifo_push_head(layer, kv_head, kv);
            }
        }
    }

    /// Wrap an uncompressed cache without evicting anything: everything but
    /// the last token lands in sink ∥ recent, the FIFO capacity is taken as
    /// given (it may exceed the current fill, letting the cache grow).
    pub fn from_full_uncompressed(
        full: FullKvCache<T>,
        sink_len: usize,
        recent_cap: usize,
        q_heads: usize,
    ) -> Self {
        let n = full.seq_len();
        let sink_len = sink_len.min(n.saturating_sub(1));
        let layers = full
            .entries
            .into_iter()
            .map(|layer| {
                let kv_heads: Vec<_> = layer
                    .into_iter()
                    .map(|mut head| {
                        let last = head.pop().expect("nonempty cache");
                        let recent: VecDeque<_> = head.split_off(sink_len).into();
                        ReducedKvHead { sink: head, recent, last }
                    })
                    .collect();
                ReducedLayer { kv_heads, topk: vec![Vec::new(); q_heads] }
            })
            .collect();
        Self { sink_len, topk_len: 0, recent_cap, q_heads, layers }
    }
}

/// Per-(layer, query head) selection indices into the evictable segment,
/// 0-based and evictable-relative: `selections[layer][q_head]`.
pub type Selections = Vec<Vec<Vec<usize>>>;

/// Concatenate sink ∥ selected top-k ∥ recent ∥ last into a
/// [`ReducedKvCache`], consuming the segmented cache (unselected evictable
/// entries are dropped here, which is what releases their memory).
///
/// Every query head gets its own top-k segment, kept in ascending position
/// order; sink, recent and last stay shared per kv head. Absolute positions
/// are retained on every entry.
pub fn build_reduced<T: Scalar>(
    seg: SegmentedKvCache<T>,
    selections: &Selections,
) -> Result<ReducedKvCache<T>, CacheError> {
    if selections.len() != seg.layers() {
        return Err(CacheError::ShapeMismatch(format!(
            "selections cover {} layers, cache has {}",
            selections.len(),
            seg.layers()
        )));
    }
    let q_heads = selections.first().map_or(0, Vec::len);
    if q_heads == 0 || q_heads % seg.kv_heads() != 0 {
        return Err(CacheError::ShapeMismatch(format!(
            "{} query-head selections do not group over {} kv heads",
            q_heads,
            seg.kv_heads()
        )));
    }
    let k = selections[0].first().map_or(0, Vec::len);

    for (l, layer_sel) in selections.iter().enumerate() {
        if layer_sel.len() != q_heads {
            return Err(CacheError::ShapeMismatch(format!(
                "layer {l} has {} selection lists, expected {q_heads}",
                layer_sel.len()
            )));
        }
        for (h, sel) in layer_sel.iter().enumerate() {
            if sel.len() != k {
                return Err(CacheError::InvalidSelection {
                    layer: l,
                    q_head: h,
                    detail: format!("expected {k} indices, got {}", sel.len()),
                });
            }
            let mut seen = vec![false; seg.evictable_len()];
            for &i in sel {
                if i >= seg.evictable_len() {
                    return Err(CacheError::InvalidSelection {
                        layer: l,
                        q_head: h,
                        detail: format!(
                            "index {i} out of range for evictable length {}",
                            seg.evictable_len()
                        ),
                    });
                }
                if seen[i] {
                    return Err(CacheError::InvalidSelection {
                        layer: l,
                        q_head: h,
                        detail: format!("duplicate index {i}"),
                    });
                }
                seen[i] = true;
            }
        }
    }

    let group = q_heads / seg.kv_heads();
    let sink_len = seg.sink_len;
    let recent_cap = seg.recent_len;

    let layers = seg
        .segments
        .into_iter()
        .enumerate()
        .map(|(l, layer)| {
            let mut topk: Vec<Vec<TokenKv<T>>> = Vec::with_capacity(q_heads);
            let mut kv_heads: Vec<ReducedKvHead<T>> = Vec::with_capacity(layer.len());
            for (kv_head, segs) in layer.into_iter().enumerate() {
                for g in 0..group {
                    let q_head = kv_head * group + g;
                    let mut sel = selections[l][q_head].clone();
                    sel.sort_unstable();
                    topk.push(sel.iter().map(|&i| segs.evictable[i].clone()).collect());
                }
                kv_heads.push(ReducedKvHead {
                    sink: segs.sink,
                    recent: segs.recent.into(),
                    last: segs.last,
                });
            }
            ReducedLayer { kv_heads, topk }
        })
        .collect();

    Ok(ReducedKvCache { sink_len, topk_len: k, recent_cap, q_heads, layers })
}

/// Token-budget split `B = S + G·k + R`: sink and recent are counted once
/// per kv-head group, the top-k share is paid once per query head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub budget: usize,
    pub sink: usize,
    pub topk: usize,
    pub recent: usize,
}

impl BudgetPlan {
    pub fn new(budget: usize, sink: usize, topk: usize, recent: usize) -> Self {
        Self { budget, sink, topk, recent }
    }

    /// `S + G·k + R == B`.
    pub fn gqa_identity_holds(&self, group_size: usize) -> bool {
        self.sink + group_size * self.topk + self.recent == self.budget
    }

    /// Tokens one query head sees after compression: `S + k + R + 1`.
    pub fn per_head_visible_len(&self) -> usize {
        self.sink + self.topk + self.recent + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(pos: usize) -> TokenKv<f64> {
        // Encode the position into the payload so segment checks can
        // distinguish entries.
        TokenKv::new(vec![pos as f64, 1.0], vec![-(pos as f64), 0.5], pos, false)
    }

    fn full_cache(layers: usize, kv_heads: usize, n: usize) -> FullKvCache<f64> {
        let entries = (0..layers)
            .map(|_| (0..kv_heads).map(|_| (0..n).map(token).collect()).collect())
            .collect();
        FullKvCache::from_entries(entries)
    }

    fn positions(entries: &[TokenKv<f64>]) -> Vec<usize> {
        entries.iter().map(|e| e.position).collect()
    }

    #[test]
    fn partition_matches_four_segment_layout() {
        // N=10, S=2, R=3 -> sink {1,2}, evictable {3,4,5,6}, recent {7,8,9},
        // last {10} in 1-based presentation.
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        assert_eq!(seg.evictable_len(), 4);
        let h = seg.head_segments(0, 0);
        assert_eq!(positions(&h.sink), vec![0, 1]);
        assert_eq!(positions(&h.evictable), vec![2, 3, 4, 5]);
        assert_eq!(positions(&h.recent), vec![6, 7, 8]);
        assert_eq!(h.last.position, 9);
    }

    #[test]
    fn partition_minimal_legal() {
        // N=4, S=1, R=1 -> one entry per segment.
        let seg = partition_cache(full_cache(1, 1, 4), 1, 1).unwrap();
        let h = seg.head_segments(0, 0);
        assert_eq!(positions(&h.sink), vec![0]);
        assert_eq!(positions(&h.evictable), vec![1]);
        assert_eq!(positions(&h.recent), vec![2]);
        assert_eq!(h.last.position, 3);
    }

    #[test]
    fn partition_rejects_budget_that_leaves_no_evictable() {
        // N=10, S=5, R=4: S+R+1 == N.
        let err = partition_cache(full_cache(1, 1, 10), 5, 4).unwrap_err();
        assert!(matches!(err, CacheError::BudgetTooLarge { seq_len: 10, sink: 5, recent: 4 }));
    }

    #[test]
    fn build_reduced_visible_length() {
        // S=2, k=1, R=3 -> per-head visible length 2+1+3+1 = 7.
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        let reduced = build_reduced(seg, &vec![vec![vec![2usize]]]).unwrap();
        assert_eq!(reduced.visible_len(0, 0), 7);
        assert_eq!(reduced.topk_positions(0, 0), vec![4]); // evictable idx 2 -> pos 4
    }

    #[test]
    fn build_reduced_with_all_evictable_equals_full() {
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        let all: Vec<usize> = (0..seg.evictable_len()).collect();
        let reduced = build_reduced(seg, &vec![vec![all]]).unwrap();
        let view: Vec<usize> = reduced.head_view(0, 0).iter().map(|e| e.position).collect();
        assert_eq!(view, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn build_reduced_keeps_topk_sorted_per_head() {
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        let reduced = build_reduced(seg, &vec![vec![vec![3usize, 0]]]).unwrap();
        assert_eq!(reduced.topk_positions(0, 0), vec![2, 5]);
    }

    #[test]
    fn build_reduced_rejects_duplicates_and_out_of_range() {
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        let err = build_reduced(seg.clone(), &vec![vec![vec![1usize, 1]]]).unwrap_err();
        assert!(matches!(err, CacheError::InvalidSelection { .. }));
        let err = build_reduced(seg, &vec![vec![vec![4usize]]]).unwrap_err();
        assert!(matches!(err, CacheError::InvalidSelection { .. }));
    }

    #[test]
    fn per_query_head_topk_is_independent() {
        // Two query heads over one kv head (G=2).
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        let reduced = build_reduced(seg, &vec![vec![vec![0usize], vec![3usize]]]).unwrap();
        assert_eq!(reduced.topk_positions(0, 0), vec![2]);
        assert_eq!(reduced.topk_positions(0, 1), vec![5]);
        // Shared segments are identical for both heads.
        assert_eq!(reduced.sink_entries(0, 0).len(), 2);
        assert_eq!(reduced.visible_len(0, 0), reduced.visible_len(0, 1));
    }

    #[test]
    fn fifo_push_slides_recent_window() {
        // recent [7,8,9], last=10, push 11 -> recent [8,9,10], last=11
        // (hand simulation, 1-based presentation = positions 6..10 0-based).
        let seg = partition_cache(full_cache(1, 1, 10), 2, 3).unwrap();
        let mut reduced = build_reduced(seg, &vec![vec![vec![2usize]]]).unwrap();
        reduced.fifo_push_head(0, 0, token(10));
        assert_eq!(reduced.recent_positions(0, 0), vec![7, 8, 9]);
        assert_eq!(reduced.last_position(0, 0), 10);
        assert_eq!(reduced.visible_len(0, 0), 7);

        // Second push: recent [9,10,11], last=12 in 1-based terms.
        reduced.fifo_push_head(0, 0, token(11));
        assert_eq!(reduced.recent_positions(0, 0), vec![8, 9, 10]);
        assert_eq!(reduced.last_position(0, 0), 11);
        assert_eq!(reduced.visible_len(0, 0), 7);
    }

    #[test]
    fn fifo_push_capacity_one() {
        // R capacity 1: recent [9], last=10, push 11 -> recent [10], last=11.
        let seg = partition_cache(full_cache(1, 1, 4), 1, 1).unwrap();
        let mut reduced = build_reduced(seg, &vec![vec![vec![0usize]]]).unwrap();
        reduced.fifo_push_head(0, 0, token(4));
        assert_eq!(reduced.recent_positions(0, 0), vec![3]);
        assert_eq!(reduced.last_position(0, 0), 4);
    }

    #[test]
    fn view_positions_strictly_increase_through_decode() {
        let seg = partition_cache(full_cache(2, 2, 12), 2, 3).unwrap();
        let sel = vec![vec![vec![1usize, 4], vec![0, 2], vec![2, 3], vec![1, 5]]; 2];
        let mut reduced = build_reduced(seg, &sel).unwrap();
        for step in 0..5 {
            let new = (0..2)
                .map(|_| (0..2).map(|_| token(12 + step)).collect())
                .collect();
            reduced.fifo_push(new);
            for layer in 0..2 {
                for q_head in 0..4 {
                    let view = reduced.head_view(layer, q_head);
                    assert!(view.windows(2).all(|w| w[0].position < w[1].position));
                    assert_eq!(view.len(), reduced.visible_len(layer, q_head));
                }
            }
        }
    }

    #[test]
    fn retained_entries_match_reduced_formula() {
        let seg = partition_cache(full_cache(2, 2, 12), 2, 3).unwrap();
        let sel = vec![vec![vec![1usize, 4], vec![0, 2], vec![2, 3], vec![1, 5]]; 2];
        let reduced = build_reduced(seg, &sel).unwrap();
        // Per layer: H_kv * (S + R + 1) + H_q * k.
        assert_eq!(reduced.retained_entries_per_layer(), 2 * (2 + 3 + 1) + 4 * 2);
    }

    #[test]
    fn budget_plan_identity() {
        let plan = BudgetPlan::new(8192, 2048, 1024, 2048);
        assert!(plan.gqa_identity_holds(4));
        assert!(!plan.gqa_identity_holds(7));
        assert_eq!(plan.per_head_visible_len(), 5121);
    }

    #[test]
    fn uncompressed_wrapper_keeps_everything() {
        let reduced = ReducedKvCache::from_full_uncompressed(full_cache(1, 1, 6), 2, 10, 2);
        let view: Vec<usize> = reduced.head_view(0, 0).iter().map(|e| e.position).collect();
        assert_eq!(view, vec![0, 1, 2, 3, 4, 5]);
        // Capacity exceeds fill, so pushes grow the window before sliding.
        let mut reduced = reduced;
        reduced.fifo_push_head(0, 0, token(6));
        assert_eq!(reduced.visible_len(0, 0), 7);
    }
}
