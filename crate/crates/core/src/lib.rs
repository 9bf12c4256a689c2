//! MRG32k3a random number streams.
//!
//! The generator's period (about 2^191) is split into 2^64 streams of
//! 2^127 consecutive states. Streams are handed out by a
//! [`StreamFactory`]; moving from one stream to the next is a 3x3 matrix
//! product modulo each component's prime. On top of that sit a
//! deterministic parallel harness and an importance-sampling estimator for
//! a small latent trait model, used to exercise reproducible parallel
//! simulation end to end.

pub mod cli;
pub mod generator;
pub mod harness;
pub mod ltm;
pub mod normal;
pub mod stream;

pub use generator::{GeneratorState, TransitionMatrix};
pub use harness::{Executor, WorkerPlan};
pub use stream::{PackageSeed, SeedError, Stream, StreamFactory};
