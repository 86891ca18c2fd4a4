//! Desk-scale KV-cache eviction engine for grouped-query-attention decoding.
//!
//! The crate models the decode-time KV cache of a transformer layer stack as
//! explicit per-token key/value entries, partitions it into
//! sink / evictable / recent / last segments, and compresses it under several
//! eviction policies:
//!
//! * `Full` — no eviction, the reference.
//! * `StreamLlmR` / `StreamLlmAbs` — static sink + recent window, with
//!   window-relative or absolute rotary positions.
//! * `Sage` — single-pass per-query-head top-k selection of evictable entries
//!   guided by the last prompt token's attention scores.
//! * `BlockTopK` — Quest/InfLLM-style dynamic per-step block selection over a
//!   retained candidate pool.
//!
//! All cache and attention math is generic over the scalar type via
//! [`Scalar`] (any `num-traits` float); concrete `f32`/`f64` aliases live at
//! the crate root. Alongside the engine sit attention-sparsity metrics
//! ([`analysis`]), closed-form memory/latency accounting ([`accounting`]) and
//! a small binary trace format with CSV/JSON writers ([`trace`]).

pub mod accounting;
pub mod analysis;
pub mod attention;
pub mod cache;
pub mod config;
pub mod policies;
pub mod rope;
pub mod trace;

mod scalar;

pub use scalar::Scalar;

pub use cache::{FullKvCache, ReducedKvCache, SegmentedKvCache, TokenKv};
pub use config::ModelConfig;

/// Single-precision cache entry.
pub type TokenKvF32 = TokenKv<f32>;
/// Double-precision cache entry.
pub type TokenKvF64 = TokenKv<f64>;
/// Single-precision full (uncompressed) cache.
pub type FullKvCacheF32 = FullKvCache<f32>;
/// Double-precision full (uncompressed) cache.
pub type FullKvCacheF64 = FullKvCache<f64>;
/// Single-precision segmented cache.
pub type SegmentedKvCacheF32 = SegmentedKvCache<f32>;
/// Double-precision segmented cache.
pub type SegmentedKvCacheF64 = SegmentedKvCache<f64>;
/// Single-precision reduced cache.
pub type ReducedKvCacheF32 = ReducedKvCache<f32>;
/// Double-precision reduced cache.
pub type ReducedKvCacheF64 = ReducedKvCache<f64>;
