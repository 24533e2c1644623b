//! Seeded generators and reference oracles shared by the test suites.

pub mod gen;
pub mod instance;
pub mod oracle;
pub mod sim;
pub mod spans;

pub use gen::{mutate, random_unit, rich_unit, Mutation, Shape, UnitModel};
pub use instance::{random_instance, sized_instance, DetectionInstance};
pub use oracle::{brute_force_detect, replay_deltas, resolve_linear};
pub use spans::span_violations;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}
