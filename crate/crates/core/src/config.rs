use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Invalid model geometry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("layers, heads and head_dim must all be nonzero")]
    ZeroDimension,
    #[error("q_heads ({q_heads}) must be a multiple of kv_heads ({kv_heads})")]
    HeadsNotDivisible { q_heads: usize, kv_heads: usize },
    #[error("head_dim ({0}) must be even for pairwise rotary rotation")]
    OddHeadDim(usize),
    #[error("rope_base must be positive, got {0}")]
    NonPositiveRopeBase(f64),
}

/// Attention geometry of the model being simulated.
///
/// `q_heads` query heads share `kv_heads` key/value heads; the group size
/// `G = q_heads / kv_heads` is what the budget arithmetic revolves around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub q_heads: usize,
    pub kv_heads: usize,
    pub head_dim: usize,
    pub rope_base: f64,
}

pub const DEFAULT_ROPE_BASE: f64 = 10_000.0;

impl ModelConfig {
    pub fn new(
        layers: usize,
        q_heads: usize,
        kv_heads: usize,
        head_dim: usize,
    ) -> Result<Self, ConfigError> {
        Self::with_rope_base(layers, q_heads, kv_heads, head_dim, DEFAULT_ROPE_BASE)
    }

    pub fn with_rope_base(
        layers: usize,
        q_heads: usize,
        kv_heads: usize,
        head_dim: usize,
        rope_base: f64,
    ) -> Result<Self, ConfigError> {
        if layers == 0 || q_heads == 0 || kv_heads == 0 || head_dim == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        if q_heads % kv_heads != 0 {
            return Err(ConfigError::HeadsNotDivisible { q_heads, kv_heads });
        }
        if head_dim % 2 != 0 {
            return Err(ConfigError::OddHeadDim(head_dim));
        }
        if !(rope_base > 0.0) {
            return Err(ConfigError::NonPositiveRopeBase(rope_base));
        }
        Ok(Self { layers, q_heads, kv_heads, head_dim, rope_base })
    }

    /// Query heads per KV head.
    pub fn group_size(&self) -> usize {
        self.q_heads / self.kv_heads
    }

    /// KV head attended by a given query head.
    pub fn kv_head_of(&self, q_head: usize) -> usize {
        q_head / self.group_size()
    }
}
