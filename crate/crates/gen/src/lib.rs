//! Seeded generators for property tests: scalar and nested values, closed
//! well-typed terms, relations, sparse tensors and genomics fixtures.
//!
//! Every generator draws from a caller-supplied [`rand::Rng`]; use [`rng`]
//! to get a reproducible one from a `u64` seed.

pub mod checks;
pub mod data;
pub mod oracles;
pub mod rewrites;
pub mod terms;
pub mod values;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use data::{GmbData, Gene, Variant};
pub use terms::{closed_term, TermConfig};
pub use values::{key_type, scalar_kinds, scalar_value, semiring_type, value_of_type};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
