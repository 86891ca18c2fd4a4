//! Attention-sparsity metrics over recorded score traces.
//!
//! Per-head score rows are distilled into top-k mass sums and top-k / top-p
//! index sets; on top of those sit within-layer and cross-layer Jaccard and
//! coverage ratios, the token index frequency over all heads, and the
//! adjacent-step / first-to-later overlap ratios. Ratios with an empty
//! denominator are reported as 0 and flagged, never as an error.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::trace::AttentionTrace;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("top-k of {k} exceeds {len} scores")]
    KTooLarge { k: usize, len: usize },
    #[error("index sets mix layers or kinds: {0}")]
    MixedSets(String),
    #[error("overlap metrics need at least 2 steps, got {0}")]
    NeedTwoSteps(usize),
}

/// How an [`IndexSet`] was selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SetKind {
    TopK(usize),
    TopP(f64),
}

/// Token positions one head concentrates on, under top-k or top-p selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSet {
    pub layer: usize,
    pub head: usize,
    pub kind: SetKind,
    pub indices: BTreeSet<usize>,
}

/// Sum of the `k` largest entries of a probability vector.
pub fn top_k_sum<T: Scalar>(scores: &[T], k: usize) -> Result<T, AnalysisError> {
    if k > scores.len() {
        return Err(AnalysisError::KTooLarge { k, len: scores.len() });
    }
    let mut sorted: Vec<T> = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sorted[..k].iter().fold(T::zero(), |acc, &s| acc + s))
}

/// Positions of the `k` largest scores, ties toward the lower index.
pub fn top_k_index_set<T: Scalar>(
    scores: &[T],
    k: usize,
    layer: usize,
    head: usize,
) -> Result<IndexSet, AnalysisError> {
    if k > scores.len() {
        return Err(AnalysisError::KTooLarge { k, len: scores.len() });
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(IndexSet { layer, head, kind: SetKind::TopK(k), indices: idx[..k].iter().copied().collect() })
}

/// Smallest descending-score prefix whose cumulative mass reaches `p`
/// (`0 < p <= 1`), ties toward the lower index. Zero-score positions never
/// enter the set, so `p = 1` returns exactly the support.
pub fn top_p_indices<T: Scalar>(
    scores: &[T],
    p: f64,
    layer: usize,
    head: usize,
) -> IndexSet {
    debug_assert!(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let threshold = T::from_f64_lossy(p);
    let mut cum = T::zero();
    let mut indices = BTreeSet::new();
    for i in idx {
        if scores[i] <= T::zero() {
            break; // rest of the support is exhausted
        }
        cum = cum + scores[i];
        indices.insert(i);
        if cum >= threshold {
            break;
        }
    }
    IndexSet { layer, head, kind: SetKind::TopP(p), indices }
}

/// Jaccard similarity and coverage of a family of sets, with the
/// empty-union convention (Jaccard 0, flagged).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetFamilyMetrics {
    pub jaccard: f64,
    pub coverage: f64,
    pub empty_union: bool,
}

fn family_metrics<'a>(
    sets: impl Iterator<Item = &'a BTreeSet<usize>> + Clone,
    n: usize,
) -> SetFamilyMetrics {
    let mut iter = sets.clone();
    let mut intersection: BTreeSet<usize> = match iter.next() {
        Some(s) => s.clone(),
        None => BTreeSet::new(),
    };
    for s in iter {
        intersection = intersection.intersection(s).copied().collect();
    }
    let mut union: BTreeSet<usize> = BTreeSet::new();
    for s in sets {
        union.extend(s.iter().copied());
    }
    let empty_union = union.is_empty();
    let jaccard = if empty_union {
        0.0
    } else {
        intersection.len() as f64 / union.len() as f64
    };
    let coverage = if n == 0 { 0.0 } else { union.len() as f64 / n as f64 };
    SetFamilyMetrics { jaccard, coverage, empty_union }
}

/// Within-layer metrics over the `H` head sets of one layer:
/// `J = |∩ sets| / |∪ sets|`, `R_c = |∪ sets| / N`.
pub fn within_layer_metrics(
    sets: &[IndexSet],
    n: usize,
) -> Result<SetFamilyMetrics, AnalysisError> {
    if let Some(first) = sets.first() {
        for s in sets {
            if s.layer != first.layer {
                return Err(AnalysisError::MixedSets(format!(
                    "layers {} and {}",
                    first.layer, s.layer
                )));
            }
            if std::mem::discriminant(&s.kind) != std::mem::discriminant(&first.kind) {
                return Err(AnalysisError::MixedSets("top-k mixed with top-p".into()));
            }
        }
    }
    Ok(family_metrics(sets.iter().map(|s| &s.indices), n))
}

/// Cross-layer metrics over the `L` per-layer union sets.
pub fn cross_layer_metrics(unions: &[BTreeSet<usize>], n: usize) -> SetFamilyMetrics {
    family_metrics(unions.iter(), n)
}

/// Per-layer union of head index sets.
pub fn layer_union(sets: &[IndexSet]) -> BTreeSet<usize> {
    let mut union = BTreeSet::new();
    for s in sets {
        union.extend(s.indices.iter().copied());
    }
    union
}

/// Fraction of (layer, head) sets containing each token position:
/// `freq_i = #\{(l,h) : i in I^{l,h}\} / (L*H)`.
pub fn index_frequency(sets: &[IndexSet], n: usize) -> Vec<f64> {
    let total = sets.len() as f64;
    let mut freq = vec![0.0; n];
    for s in sets {
        for &i in &s.indices {
            if i < n {
                freq[i] += 1.0;
            }
        }
    }
    if total > 0.0 {
        for f in &mut freq {
            *f /= total;
        }
    }
    freq
}

/// Step-to-step overlap of one head's top-p sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapMetrics {
    /// `R_adj[i] = |I_i ∩ I_{i+1}| / |I_{i+1}|`.
    pub adjacent: Vec<f64>,
    /// `R_f2l[i] = |I_0 ∩ I_{i+1}| / |I_{i+1}|`.
    pub first_to_later: Vec<f64>,
    /// Count of ratios whose denominator set was empty (reported as 0).
    pub empty_denominators: usize,
}

/// Overlap ratios across decode steps for one (layer, head).
pub fn overlap_metrics(step_sets: &[BTreeSet<usize>]) -> Result<OverlapMetrics, AnalysisError> {
    if step_sets.len() < 2 {
        return Err(AnalysisError::NeedTwoSteps(step_sets.len()));
    }
    let mut empty = 0usize;
    let mut ratio = |num: &BTreeSet<usize>, denom: &BTreeSet<usize>| -> f64 {
        if denom.is_empty() {
            empty += 1;
            return 0.0;
        }
        num.intersection(denom).count() as f64 / denom.len() as f64
    };
    let mut adjacent = Vec::with_capacity(step_sets.len() - 1);
    let mut first_to_later = Vec::with_capacity(step_sets.len() - 1);
    for i in 0..step_sets.len() - 1 {
        adjacent.push(ratio(&step_sets[i], &step_sets[i + 1]));
        first_to_later.push(ratio(&step_sets[0], &step_sets[i + 1]));
    }
    Ok(OverlapMetrics { adjacent, first_to_later, empty_denominators: empty })
}

/// Mass interval a top-k sum falls in:
/// `(0, 0.5] (0.5, 0.8] (0.8, 0.9] (0.9, 1]`.
pub fn pie_bucket(sum: f64) -> usize {
    if sum <= 0.5 {
        0
    } else if sum <= 0.8 {
        1
    } else if sum <= 0.9 {
        2
    } else {
        3
    }
}

pub const PIE_BUCKET_LABELS: [&str; 4] = ["(0,0.5]", "(0.5,0.8]", "(0.8,0.9]", "(0.9,1]"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerMetrics {
    pub layer: usize,
    pub jaccard: f64,
    pub coverage: f64,
}

/// Everything the analysis pass derives from one trace for one (k, p) pair.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub k: usize,
    pub p: f64,
    /// Step the set/frequency metrics were computed on (overlaps span all
    /// steps).
    pub set_step: usize,
    /// Within-layer Jaccard/coverage of top-k sets.
    pub per_layer: Vec<LayerMetrics>,
    /// Cross-layer Jaccard of the per-layer top-k unions.
    pub global_jaccard: f64,
    /// Coverage of the all-layer union.
    pub global_coverage: f64,
    /// Top-p membership frequency per token position.
    pub freq: Vec<f64>,
    /// Top-k mass per (layer, head) — the heatmap table.
    pub topk_sums: Vec<Vec<f64>>,
    /// Histogram of `topk_sums` over the four mass intervals.
    pub pie_buckets: [u64; 4],
    /// Mean adjacent-step top-p overlap (empty when the trace has one step).
    pub r_adj_mean: Vec<f64>,
    /// Mean first-to-later top-p overlap.
    pub r_f2l_mean: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Compute the full report for one (k, p) pair.
///
/// Set and frequency metrics use the scores of `set_step`; the overlap
/// curves use every step and average over (layer, head).
pub fn compute_report(
    trace: &AttentionTrace,
    k: usize,
    p: f64,
    set_step: usize,
) -> Result<MetricsReport, AnalysisError> {
    let layers = trace.layers() as usize;
    let heads = trace.heads() as usize;
    let steps = trace.steps() as usize;
    let n = trace.positions() as usize;
    let k_eff = k.min(n);
    let mut warnings = Vec::new();
    if k_eff < k {
        warnings.push(format!("k clamped from {k} to position count {n}"));
    }

    let mut topk_sums = vec![vec![0.0f64; heads]; layers];
    let mut pie_buckets = [0u64; 4];
    let mut topk_sets: Vec<Vec<IndexSet>> = Vec::with_capacity(layers);
    let mut topp_sets: Vec<IndexSet> = Vec::with_capacity(layers * heads);

    for l in 0..layers {
        let mut layer_sets = Vec::with_capacity(heads);
        for h in 0..heads {
            let row: Vec<f64> = trace
                .row(l as u32, h as u32, set_step as u32)
                .iter()
                .map(|&s| s as f64)
                .collect();
            let sum = top_k_sum(&row, k_eff)?;
            topk_sums[l][h] = sum;
            pie_buckets[pie_bucket(sum)] += 1;
            layer_sets.push(top_k_index_set(&row, k_eff, l, h)?);
            topp_sets.push(top_p_indices(&row, p, l, h));
        }
        topk_sets.push(layer_sets);
    }

    let mut per_layer = Vec::with_capacity(layers);
    let mut unions = Vec::with_capacity(layers);
    for (l, sets) in topk_sets.iter().enumerate() {
        let m = within_layer_metrics(sets, n)?;
        if m.empty_union {
            warnings.push(format!("layer {l}: empty top-k union"));
        }
        per_layer.push(LayerMetrics { layer: l, jaccard: m.jaccard, coverage: m.coverage });
        unions.push(layer_union(sets));
    }
    let global = cross_layer_metrics(&unions, n);
    if global.empty_union {
        warnings.push("all-layer union is empty".into());
    }

    let freq = index_frequency(&topp_sets, n);

    let (r_adj_mean, r_f2l_mean) = if steps >= 2 {
        let mut adj = vec![0.0f64; steps - 1];
        let mut f2l = vec![0.0f64; steps - 1];
        let mut empty_total = 0usize;
        for l in 0..layers {
            for h in 0..heads {
                let step_sets: Vec<BTreeSet<usize>> = (0..steps)
                    .map(|s| {
                        let row: Vec<f64> = trace
                            .row(l as u32, h as u32, s as u32)
                            .iter()
                            .map(|&v| v as f64)
                            .collect();
                        top_p_indices(&row, p, l, h).indices
                    })
                    .collect();
                let m = overlap_metrics(&step_sets)?;
                empty_total += m.empty_denominators;
                for (a, v) in adj.iter_mut().zip(&m.adjacent) {
                    *a += v;
                }
                for (a, v) in f2l.iter_mut().zip(&m.first_to_later) {
                    *a += v;
                }
            }
        }
        let count = (layers * heads) as f64;
        for v in adj.iter_mut().chain(f2l.iter_mut()) {
            *v /= count;
        }
        if empty_total > 0 {
            warnings.push(format!("{empty_total} overlap ratios had empty denominators"));
        }
        (adj, f2l)
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(MetricsReport {
        k,
        p,
        set_step,
        per_layer,
        global_jaccard: global.jaccard,
        global_coverage: global.coverage,
        freq,
        topk_sums,
        pie_buckets,
        r_adj_mean,
        r_f2l_mean,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(layer: usize, head: usize, k: usize, idx: &[usize]) -> IndexSet {
        IndexSet { layer, head, kind: SetKind::TopK(k), indices: idx.iter().copied().collect() }
    }

    #[test]
    fn top_k_sum_total_mass() {
        let scores = [0.5, 0.3, 0.2];
        assert_abs_diff_eq!(top_k_sum(&scores, 3).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn top_k_sum_hand_sorted() {
        assert_abs_diff_eq!(top_k_sum(&[0.5, 0.3, 0.2], 2).unwrap(), 0.8, epsilon = 1e-12);
        // Order must not matter.
        assert_abs_diff_eq!(top_k_sum(&[0.2, 0.5, 0.3], 2).unwrap(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn top_k_sum_uniform() {
        let scores = vec![0.01f64; 100];
        assert_abs_diff_eq!(top_k_sum(&scores, 10).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn top_k_sum_monotone_in_k() {
        let scores = [0.4, 0.1, 0.25, 0.05, 0.2];
        let mut prev = 0.0;
        for k in 0..=scores.len() {
            let s = top_k_sum(&scores, k).unwrap();
            assert!(s >= prev);
            prev = s;
        }
        assert_abs_diff_eq!(prev, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn top_k_sum_rejects_large_k() {
        assert_eq!(
            top_k_sum(&[0.5, 0.5], 3).unwrap_err(),
            AnalysisError::KTooLarge { k: 3, len: 2 }
        );
    }

    #[test]
    fn top_p_prefix_reaches_mass() {
        // Prefix sums 0.5 then 0.8 >= 0.75.
        let s = top_p_indices(&[0.5, 0.3, 0.2], 0.75, 0, 0);
        assert_eq!(s.indices, [0, 1].into_iter().collect());
    }

    #[test]
    fn top_p_full_support_at_one() {
        let s = top_p_indices(&[0.5, 0.0, 0.3, 0.2, 0.0], 1.0, 0, 0);
        assert_eq!(s.indices, [0, 2, 3].into_iter().collect());
    }

    #[test]
    fn top_p_point_mass() {
        let s = top_p_indices(&[1.0, 0.0, 0.0], 0.99, 0, 0);
        assert_eq!(s.indices, [0].into_iter().collect());
    }

    #[test]
    fn top_p_is_minimal() {
        let scores = [0.35, 0.05, 0.3, 0.1, 0.2];
        for p in [0.3, 0.5, 0.72, 0.9, 0.99] {
            let s = top_p_indices(&scores, p, 0, 0);
            let mass: f64 = s.indices.iter().map(|&i| scores[i]).sum();
            assert!(mass >= p - 1e-12);
            // Dropping the smallest selected score must fall below p.
            let min_sel = s
                .indices
                .iter()
                .map(|&i| scores[i])
                .fold(f64::INFINITY, f64::min);
            assert!(mass - min_sel < p);
        }
    }

    #[test]
    fn within_layer_hand_counts() {
        // {1,2,3} and {2,3,4} over N=8: J = 2/4, R_c = 4/8.
        let sets = vec![set(0, 0, 3, &[1, 2, 3]), set(0, 1, 3, &[2, 3, 4])];
        let m = within_layer_metrics(&sets, 8).unwrap();
        assert_abs_diff_eq!(m.jaccard, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.coverage, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn within_layer_identical_and_disjoint() {
        let same = vec![set(0, 0, 2, &[1, 5]), set(0, 1, 2, &[1, 5])];
        assert_abs_diff_eq!(within_layer_metrics(&same, 8).unwrap().jaccard, 1.0);
        let disjoint = vec![set(0, 0, 2, &[1, 2]), set(0, 1, 2, &[3, 4])];
        assert_abs_diff_eq!(within_layer_metrics(&disjoint, 8).unwrap().jaccard, 0.0);
    }

    #[test]
    fn within_layer_rejects_mixed_layers() {
        let sets = vec![set(0, 0, 2, &[1]), set(1, 0, 2, &[1])];
        assert!(matches!(
            within_layer_metrics(&sets, 8).unwrap_err(),
            AnalysisError::MixedSets(_)
        ));
    }

    #[test]
    fn empty_union_flags_and_zeroes() {
        let sets = vec![set(0, 0, 0, &[]), set(0, 1, 0, &[])];
        let m = within_layer_metrics(&sets, 8).unwrap();
        assert!(m.empty_union);
        assert_eq!(m.jaccard, 0.0);
    }

    #[test]
    fn cross_layer_hand_counts() {
        // U1={1,2}, U2={2,3} over N=4: J = 1/3, R_c = 3/4.
        let unions = vec![
            [1usize, 2].into_iter().collect(),
            [2usize, 3].into_iter().collect(),
        ];
        let m = cross_layer_metrics(&unions, 4);
        assert_abs_diff_eq!(m.jaccard, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.coverage, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn cross_layer_identical_layers() {
        let unions = vec![[0usize, 1].into_iter().collect(); 3];
        assert_abs_diff_eq!(cross_layer_metrics(&unions, 4).jaccard, 1.0);
    }

    #[test]
    fn cross_layer_full_coverage() {
        let unions = vec![
            [0usize, 1].into_iter().collect(),
            [2usize, 3].into_iter().collect(),
        ];
        assert_abs_diff_eq!(cross_layer_metrics(&unions, 4).coverage, 1.0);
    }

    #[test]
    fn frequency_counts_memberships() {
        // L=2, H=2 grid; token 1 in 3 of 4 sets -> 0.75.
        let sets = vec![
            set(0, 0, 2, &[1, 2]),
            set(0, 1, 2, &[1, 3]),
            set(1, 0, 2, &[1, 4]),
            set(1, 1, 2, &[2, 3]),
        ];
        let freq = index_frequency(&sets, 6);
        assert_abs_diff_eq!(freq[1], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(freq[2], 0.5, epsilon = 1e-12);
        assert_eq!(freq[5], 0.0);
    }

    #[test]
    fn frequency_extremes() {
        let sets = vec![set(0, 0, 1, &[0]), set(0, 1, 1, &[0])];
        let freq = index_frequency(&sets, 2);
        assert_eq!(freq[0], 1.0);
        assert_eq!(freq[1], 0.0);
    }

    #[test]
    fn overlap_hand_counts() {
        // I_i={1,2,3}, I_{i+1}={2,3,4,5} -> R_adj = 2/4.
        let steps: Vec<BTreeSet<usize>> = vec![
            [1, 2, 3].into_iter().collect(),
            [2, 3, 4, 5].into_iter().collect(),
        ];
        let m = overlap_metrics(&steps).unwrap();
        assert_abs_diff_eq!(m.adjacent[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.first_to_later[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn overlap_identical_and_disjoint() {
        let same: Vec<BTreeSet<usize>> = vec![[1, 2].into_iter().collect(); 3];
        let m = overlap_metrics(&same).unwrap();
        assert!(m.adjacent.iter().all(|&r| r == 1.0));
        let disjoint: Vec<BTreeSet<usize>> = vec![
            [1, 2].into_iter().collect(),
            [3, 4].into_iter().collect(),
        ];
        assert_eq!(overlap_metrics(&disjoint).unwrap().adjacent[0], 0.0);
    }

    #[test]
    fn overlap_empty_denominator_flagged() {
        let steps: Vec<BTreeSet<usize>> =
            vec![[1].into_iter().collect(), BTreeSet::new()];
        let m = overlap_metrics(&steps).unwrap();
        assert_eq!(m.adjacent[0], 0.0);
        assert_eq!(m.empty_denominators, 2); // adjacent and first-to-later
    }

    #[test]
    fn overlap_needs_two_steps() {
        let steps: Vec<BTreeSet<usize>> = vec![[1].into_iter().collect()];
        assert_eq!(overlap_metrics(&steps).unwrap_err(), AnalysisError::NeedTwoSteps(1));
    }

    #[test]
    fn pie_buckets_partition_the_interval() {
        assert_eq!(pie_bucket(0.2), 0);
        assert_eq!(pie_bucket(0.5), 0);
        assert_eq!(pie_bucket(0.7), 1);
        assert_eq!(pie_bucket(0.8), 1);
        assert_eq!(pie_bucket(0.85), 2);
        assert_eq!(pie_bucket(0.95), 3);
        assert_eq!(pie_bucket(1.0), 3);
    }

    #[test]
    fn metrics_invariant_under_monotone_score_transforms() {
        let scores = [0.4f64, 0.1, 0.3, 0.2];
        // Strictly monotone transform preserves ranking, hence the sets.
        let transformed: Vec<f64> = scores.iter().map(|&s| (s * 3.0).exp()).collect();
        let a = top_k_index_set(&scores, 2, 0, 0).unwrap();
        let b = top_k_index_set(&transformed, 2, 0, 0).unwrap();
        assert_eq!(a.indices, b.indices);
    }

    #[test]
    fn report_on_hand_built_trace() {
        // 2 layers, 2 heads, 1 step, 4 positions with known rankings.
        let mut trace = AttentionTrace::zeroed(2, 2, 1, 4);
        trace.set_row(0, 0, 0, &[0.4, 0.3, 0.2, 0.1]); // top-2 {0,1}
        trace.set_row(0, 1, 0, &[0.1, 0.4, 0.3, 0.2]); // top-2 {1,2}
        trace.set_row(1, 0, 0, &[0.4, 0.3, 0.2, 0.1]); // top-2 {0,1}
        trace.set_row(1, 1, 0, &[0.3, 0.4, 0.2, 0.1]); // top-2 {0,1}
        let report = compute_report(&trace, 2, 0.69, 0).unwrap();

        // Layer 0: {0,1} vs {1,2}: J = 1/3, R_c = 3/4.
        assert_abs_diff_eq!(report.per_layer[0].jaccard, 1.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.per_layer[0].coverage, 0.75, epsilon = 1e-9);
        // Layer 1: identical sets.
        assert_abs_diff_eq!(report.per_layer[1].jaccard, 1.0, epsilon = 1e-9);
        // Unions {0,1,2} and {0,1}: J = 2/3, coverage 3/4.
        assert_abs_diff_eq!(report.global_jaccard, 2.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.global_coverage, 0.75, epsilon = 1e-9);
        // Top-2 sums: 0.7 everywhere.
        for row in &report.topk_sums {
            for &s in row {
                assert_abs_diff_eq!(s, 0.7, epsilon = 1e-6);
            }
        }
        assert_eq!(report.pie_buckets, [0, 4, 0, 0]);
        assert!(report.r_adj_mean.is_empty()); // single step
    }
}
