//! Package seeds, streams, and the factory that hands out consecutive
//! streams `2^127` steps apart.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::generator::{GeneratorState, M1, M2};

/// Which of the two component triples a seed error refers to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Triple {
    First,
    Second,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Triple::First => f.write_str("first"),
            Triple::Second => f.write_str("second"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeedError {
    /// `component` is 1-based, matching the usual s1..s6 naming.
    #[error("seed component {component} = {value} is not below its modulus {modulus}")]
    SeedOutOfRange {
        component: usize,
        value: u64,
        modulus: u64,
    },
    #[error("{0} seed triple is all zero")]
    SeedAllZero(Triple),
    #[error("an explicit seed after the first stream requires force")]
    ExplicitSeedRequiresForce,
    #[error("malformed seed text: {0}")]
    Parse(String),
}

/// A validated six-value seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PackageSeed([u64; 6]);

impl PackageSeed {
    /// The reference package's default seed.
    pub const DEFAULT: PackageSeed = PackageSeed([12345; 6]);

    pub fn new(raw: [u64; 6]) -> Result<Self, SeedError> {
        for (i, &value) in raw.iter().enumerate() {
            let modulus = if i < 3 { M1 } else { M2 };
            if value >= modulus {
                return Err(SeedError::SeedOutOfRange {
                    component: i + 1,
                    value,
                    modulus,
                });
            }
        }
        if raw[..3].iter().all(|&v| v == 0) {
            return Err(SeedError::SeedAllZero(Triple::First));
        }
        if raw[3..].iter().all(|&v| v == 0) {
            return Err(SeedError::SeedAllZero(Triple::Second));
        }
        Ok(Self(raw))
    }

    /// Accepts the signed two's-complement representation some
    /// environments use for 32-bit seeds.
    pub fn from_signed(raw: [i32; 6]) -> Result<Self, SeedError> {
        Self::new(normalize_signed_seed(raw))
    }

    pub fn values(&self) -> [u64; 6] {
        self.0
    }

    pub fn state(&self) -> GeneratorState {
        GeneratorState::from_array(self.0)
    }

    /// The seed of a valid state. Valid states satisfy every seed invariant.
    pub fn from_state(state: GeneratorState) -> Result<Self, SeedError> {
        Self::new(state.to_array())
    }
}

impl Default for PackageSeed {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Six whitespace-separated decimal values on one line.
impl fmt::Display for PackageSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.state(), f)
    }
}

impl FromStr for PackageSeed {
    type Err = SeedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let line = s.trim();
        if line.contains('\n') {
            return Err(SeedError::Parse("expected a single line".into()));
        }
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|e| SeedError::Parse(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let raw: [u64; 6] = values
            .try_into()
            .map_err(|v: Vec<u64>| SeedError::Parse(format!("expected 6 values, got {}", v.len())))?;
        Self::new(raw)
    }
}

/// Reinterprets signed 32-bit seed values as unsigned: negative values get
/// `2^32` added.
pub fn normalize_signed_seed(raw: [i32; 6]) -> [u64; 6] {
    raw.map(|c| c as u32 as u64)
}

/// Moves a seed `2^127` steps ahead, to the same relative position in the
/// next stream.
pub fn advance_seed(seed: GeneratorState) -> GeneratorState {
    seed.advance_stream()
}

/// One stream of the partitioned cycle. Owns its starting state and the
/// current position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    index: u64,
    initial: GeneratorState,
    current: GeneratorState,
}

impl Stream {
    /// A stream starting at `seed`, labelled `index`.
    pub fn from_seed(index: u64, seed: PackageSeed) -> Self {
        Self::from_state(index, seed.state())
    }

    pub(crate) fn from_state(index: u64, state: GeneratorState) -> Self {
        debug_assert!(state.is_valid());
        Self {
            index,
            initial: state,
            current: state,
        }
    }

    /// Ordinal of the stream within its factory. Informational only.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn initial_state(&self) -> GeneratorState {
        self.initial
    }

    pub fn current_state(&self) -> GeneratorState {
        self.current
    }

    #[inline]
    pub fn rand_u01(&mut self) -> f64 {
        let (u, next) = self.current.next_uniform();
        self.current = next;
        u
    }

    pub fn fill_u01(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.rand_u01();
        }
    }

    /// Rewinds to the start of the stream.
    pub fn reset(&mut self) {
        self.current = self.initial;
    }
}

impl Iterator for Stream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.rand_u01())
    }
}

/// Hands out consecutive streams from a package seed.
///
/// Creation takes `&mut self`, so two consumers can never obtain the same
/// stream by racing on the cursor.
#[derive(Clone, Debug)]
pub struct StreamFactory {
    package_seed: PackageSeed,
    next_seed: GeneratorState,
    created: u64,
}

impl StreamFactory {
    pub fn new(seed: PackageSeed) -> Self {
        Self {
            package_seed: seed,
            next_seed: seed.state(),
            created: 0,
        }
    }

    /// Validates six raw values and builds a fresh factory.
    pub fn set_package_seed(raw: [u64; 6]) -> Result<Self, SeedError> {
        PackageSeed::new(raw).map(Self::new)
    }

    pub fn package_seed(&self) -> PackageSeed {
        self.package_seed
    }

    /// The seed the next default-created stream will start from.
    pub fn next_seed(&self) -> GeneratorState {
        self.next_seed
    }

    pub fn created_count(&self) -> u64 {
        self.created
    }

    pub fn create_stream(&mut self) -> Stream {
        let stream = Stream::from_state(self.created, self.next_seed);
        self.next_seed = advance_seed(self.next_seed);
        self.created += 1;
        stream
    }

    /// Creates a stream starting exactly at `seed`. Later default
    /// creations continue from the stream after `seed`.
    ///
    /// Without `force`, this is only allowed before any stream has been
    /// issued.
    pub fn create_stream_with_seed(
        &mut self,
        seed: PackageSeed,
        force: bool,
    ) -> Result<Stream, SeedError> {
        if !force && self.created > 0 {
            return Err(SeedError::ExplicitSeedRequiresForce);
        }
        let stream = Stream::from_state(self.created, seed.state());
        self.next_seed = advance_seed(seed.state());
        self.created += 1;
        Ok(stream)
    }
}

impl Default for StreamFactory {
    fn default() -> Self {
        Self::new(PackageSeed::DEFAULT)
    }
}
