//! The MRG32k3a backbone: two order-3 linear recurrences modulo distinct
//! primes, their combination into a uniform deviate, and exact 3x3 modular
//! linear algebra for jumping ahead along either component.
//!
//! Everything here is a plain value type. State components are kept as
//! `u64` residues, so every product of two residues fits in a `u64`
//! (both operands are below 2^32) and no floating-point exactness argument
//! is needed.

use std::fmt;
use std::sync::OnceLock;

/// Modulus of the first component recurrence, 2^32 - 209.
pub const M1: u64 = 4_294_967_087;
/// Modulus of the second component recurrence, 2^32 - 22853.
pub const M2: u64 = 4_294_944_443;

pub const A12: u64 = 1_403_580;
pub const A13N: u64 = 810_728;
pub const A21: u64 = 527_612;
pub const A23N: u64 = 1_370_589;

/// Output is `z / NORM_DENOMINATOR` with `NORM_DENOMINATOR = M1 + 1`.
pub const NORM_DENOMINATOR: u64 = M1 + 1;

/// `1 / (M1 + 1)` as written in the reference implementation. Outputs are
/// formed by multiplying with this constant rather than by dividing, which
/// is what the reference code does; the two differ in the last bit for
/// roughly two thirds of all `z`.
pub const NORM: f64 = 2.328_306_549_295_727_688e-10;

/// Number of recurrence steps between the starts of consecutive streams,
/// as a power of two.
pub const STREAM_LENGTH_LOG2: u32 = 127;

/// Published entries of `A1^(2^127) mod M1` (oldest-first state ordering).
pub const PUBLISHED_A1P127: [[u64; 3]; 3] = [
    [2_427_906_178, 3_580_155_704, 949_770_784],
    [226_153_695, 1_230_515_664, 3_580_155_704],
    [1_988_835_001, 986_791_581, 1_230_515_664],
];

/// Published entries of `A2^(2^127) mod M2`.
pub const PUBLISHED_A2P127: [[u64; 3]; 3] = [
    [1_464_411_153, 277_697_599, 1_610_723_613],
    [32_183_930, 1_464_411_153, 1_022_607_788],
    [2_824_425_944, 32_183_930, 2_093_834_863],
];

/// Exact `(a * b) mod m` for `a, b < m < 2^32`.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    debug_assert!(a < m && b < m && m <= u32::MAX as u64 + 1);
    // a, b < 2^32, so the product is below 2^64.
    (a * b) % m
}

/// The six-component state: the last three values of each component,
/// oldest first. `x1` lives modulo [`M1`], `x2` modulo [`M2`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct GeneratorState {
    pub x1: [u64; 3],
    pub x2: [u64; 3],
}

impl GeneratorState {
    pub const fn new(x1: [u64; 3], x2: [u64; 3]) -> Self {
        Self { x1, x2 }
    }

    /// Splits six values into the two component triples. No validation;
    /// see [`GeneratorState::is_valid`].
    pub const fn from_array(s: [u64; 6]) -> Self {
        Self {
            x1: [s[0], s[1], s[2]],
            x2: [s[3], s[4], s[5]],
        }
    }

    pub const fn to_array(self) -> [u64; 6] {
        [
            self.x1[0], self.x1[1], self.x1[2], self.x2[0], self.x2[1], self.x2[2],
        ]
    }

    /// Every component below its modulus and neither triple all zero.
    pub fn is_valid(&self) -> bool {
        self.x1.iter().all(|&v| v < M1)
            && self.x2.iter().all(|&v| v < M2)
            && self.x1.iter().any(|&v| v != 0)
            && self.x2.iter().any(|&v| v != 0)
    }

    /// One step of both recurrences.
    #[inline]
    pub fn step(self) -> Self {
        let [a0, a1, a2] = self.x1;
        let [b0, b1, b2] = self.x2;
        // -a * x == a * (m - x) (mod m); each term stays below 2^53.
        let p1 = (A12 * a1 + A13N * (M1 - a0)) % M1;
        let p2 = (A21 * b2 + A23N * (M2 - b0)) % M2;
        Self {
            x1: [a1, a2, p1],
            x2: [b1, b2, p2],
        }
    }

    /// Uniform deviate built from the newest component of each recurrence.
    /// Never returns 0 or 1.
    #[inline]
    pub fn combine_output(&self) -> f64 {
        let p1 = self.x1[2];
        let p2 = self.x2[2];
        // z = (p1 - p2) mod M1, with z = 0 mapped to M1.
        let z = if p1 > p2 { p1 - p2 } else { p1 + M1 - p2 };
        z as f64 * NORM
    }

    /// Steps once and returns the resulting deviate with the new state.
    #[inline]
    pub fn next_uniform(self) -> (f64, Self) {
        let next = self.step();
        (next.combine_output(), next)
    }

    /// Advances by `2^127` steps: the same position in the next stream.
    pub fn advance_stream(self) -> Self {
        let (j1, j2) = jump_matrices();
        Self {
            x1: j1.apply(self.x1),
            x2: j2.apply(self.x2),
        }
    }

    /// Advances by `n` steps using matrix powers.
    pub fn advance_by(self, n: u128) -> Self {
        let (a1, a2) = companion_matrices();
        Self {
            x1: a1.pow(n).apply(self.x1),
            x2: a2.pow(n).apply(self.x2),
        }
    }
}

impl fmt::Display for GeneratorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_array();
        write!(f, "{} {} {} {} {} {}", s[0], s[1], s[2], s[3], s[4], s[5])
    }
}

/// A 3x3 matrix of residues together with its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct TransitionMatrix {
    entries: [[u64; 3]; 3],
    modulus: u64,
}

impl TransitionMatrix {
    /// Builds a matrix, reducing every entry into `[0, modulus)`.
    ///
    /// Panics if `modulus` is zero or exceeds 2^32.
    pub fn new(entries: [[u64; 3]; 3], modulus: u64) -> Self {
        assert!(
            modulus > 0 && modulus <= u32::MAX as u64 + 1,
            "modulus must be in 1..=2^32"
        );
        let mut e = entries;
        for v in e.iter_mut().flatten() {
            *v %= modulus;
        }
        Self {
            entries: e,
            modulus,
        }
    }

    pub fn identity(modulus: u64) -> Self {
        Self::new([[1, 0, 0], [0, 1, 0], [0, 0, 1]], modulus)
    }

    pub fn zero(modulus: u64) -> Self {
        Self::new([[0; 3]; 3], modulus)
    }

    pub fn entries(&self) -> &[[u64; 3]; 3] {
        &self.entries
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `(self * s) mod m`. Entries of `s` must already be residues.
    pub fn apply(&self, s: [u64; 3]) -> [u64; 3] {
        let m = self.modulus;
        debug_assert!(s.iter().all(|&v| v < m));
        let mut out = [0u64; 3];
        for (o, row) in out.iter_mut().zip(&self.entries) {
            // Three reduced terms, each < 2^32: the sum cannot overflow.
            *o = (mul_mod(row[0], s[0], m) + mul_mod(row[1], s[1], m) + mul_mod(row[2], s[2], m))
                % m;
        }
        out
    }

    /// `(self * rhs) mod m`.
    ///
    /// Panics if the moduli differ.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "matrix moduli differ");
        let m = self.modulus;
        let mut out = [[0u64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3)
                    .map(|k| mul_mod(self.entries[i][k], rhs.entries[k][j], m))
                    .sum::<u64>()
                    % m;
            }
        }
        Self {
            entries: out,
            modulus: m,
        }
    }

    /// `self^e mod m` by square-and-multiply. `self^0` is the identity.
    pub fn pow(&self, mut e: u128) -> Self {
        let mut acc = Self::identity(self.modulus);
        let mut base = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `self^(2^k) mod m` by `k` successive squarings. Covers exponents
    /// that do not fit in a `u128`, such as `2^128`.
    pub fn pow2(&self, k: u32) -> Self {
        (0..k).fold(*self, |a, _| a.mul(&a))
    }
}

/// Companion matrices of the two recurrences, acting on oldest-first
/// triples: `A * (x[n-3], x[n-2], x[n-1]) = (x[n-2], x[n-1], x[n])`.
pub fn companion_matrices() -> (TransitionMatrix, TransitionMatrix) {
    (
        TransitionMatrix::new([[0, 1, 0], [0, 0, 1], [M1 - A13N, A12, 0]], M1),
        TransitionMatrix::new([[0, 1, 0], [0, 0, 1], [M2 - A23N, 0, A21]], M2),
    )
}

/// `A1^(2^127) mod M1` and `A2^(2^127) mod M2`.
///
/// Computed on first use by 127 squarings of the companion matrices and
/// checked against the published constants.
pub fn jump_matrices() -> (TransitionMatrix, TransitionMatrix) {
    static JUMP: OnceLock<(TransitionMatrix, TransitionMatrix)> = OnceLock::new();
    *JUMP.get_or_init(|| {
        let (a1, a2) = companion_matrices();
        let j1 = a1.pow2(STREAM_LENGTH_LOG2);
        let j2 = a2.pow2(STREAM_LENGTH_LOG2);
        assert_eq!(
            j1.entries, PUBLISHED_A1P127,
            "computed A1^(2^127) disagrees with published constants"
        );
        assert_eq!(
            j2.entries, PUBLISHED_A2P127,
            "computed A2^(2^127) disagrees with published constants"
        );
        (j1, j2)
    })
}
