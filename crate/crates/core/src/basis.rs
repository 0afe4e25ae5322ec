//! Computational basis for `n_s` physical spins followed by `n_t` clock spins.
//!
//! Conventions used everywhere in the crate:
//!
//! * a spin is an `i8` equal to `+1` or `-1`;
//! * spin `+1` is bit `0`, spin `-1` is bit `1`;
//! * position `0` (the first physical spin) is the most significant bit of the
//!   basis index, so the clock spins occupy the `n_t` least significant bits;
//! * the clock word is the reflected-binary (Gray) code of the time index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest total spin count a basis index can address.
pub const MAX_SPINS: usize = 62;

/// Reflected-binary code of `t`.
pub fn gray_encode(t: u64, n_bits: usize) -> Result<u64> {
    if n_bits < 64 && t >> n_bits != 0 {
        return Err(Error::Domain(format!(
            "time index {t} does not fit in {n_bits} clock bits"
        )));
    }
    Ok(t ^ (t >> 1))
}

/// Inverse of [`gray_encode`].
pub fn gray_decode(bits: u64) -> u64 {
    let mut t = bits;
    let mut shift = 1;
    while shift < 64 {
        t ^= t >> shift;
        shift <<= 1;
    }
    t
}

/// Number of clock spins needed for `n_steps + 1` clock states.
pub fn clock_bits(n_steps: usize) -> usize {
    let states = n_steps as u64 + 1;
    (u64::BITS - (states - 1).leading_zeros()) as usize
}

/// Sizes of the physical and clock registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub n_s: usize,
    pub n_t: usize,
}

impl Layout {
    pub fn new(n_s: usize, n_t: usize) -> Result<Self> {
        if n_s == 0 {
            return Err(Error::Domain("at least one physical spin is required".into()));
        }
        if n_s + n_t > MAX_SPINS {
            return Err(Error::Domain(format!(
                "{} spins exceed the addressable maximum of {MAX_SPINS}",
                n_s + n_t
            )));
        }
        Ok(Self { n_s, n_t })
    }

    #[inline]
    pub fn n_spins(&self) -> usize {
        self.n_s + self.n_t
    }

    /// Hilbert-space dimension `2^(n_s + n_t)`.
    #[inline]
    pub fn dim(&self) -> usize {
        1usize << self.n_spins()
    }

    #[inline]
    pub fn physical_dim(&self) -> usize {
        1usize << self.n_s
    }

    #[inline]
    pub fn clock_dim(&self) -> usize {
        1usize << self.n_t
    }

    /// Basis index of the product `|physical⟩ ⊗ |clock word⟩`.
    #[inline]
    pub fn join(&self, physical: usize, clock_word: usize) -> usize {
        (physical << self.n_t) | clock_word
    }

    /// Splits a basis index into `(physical index, clock word)`.
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index >> self.n_t, index & (self.clock_dim() - 1))
    }
}

/// A spin configuration of a specific [`Layout`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    layout: Layout,
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(layout: Layout, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != layout.n_spins() {
            return Err(Error::Domain(format!(
                "configuration has {} spins, layout expects {}",
                spins.len(),
                layout.n_spins()
            )));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Domain(format!("spin value {bad} is not ±1")));
        }
        Ok(Self { layout, spins })
    }

    pub fn all_up(layout: Layout) -> Self {
        Self { layout, spins: vec![1; layout.n_spins()] }
    }

    pub fn from_index(layout: Layout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::Domain(format!(
                "index {index} outside basis of dimension {}",
                layout.dim()
            )));
        }
        let mut spins = vec![0; layout.n_spins()];
        index_to_spins(index, &mut spins);
        Ok(Self { layout, spins })
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn physical(&self) -> &[i8] {
        &self.spins[..self.layout.n_s]
    }

    pub fn clock(&self) -> &[i8] {
        &self.spins[self.layout.n_s..]
    }

    pub fn index(&self) -> usize {
        spins_to_index(&self.spins)
    }

    pub fn clock_time(&self, n_steps: usize) -> ClockReading {
        clock_time_of(self.clock(), n_steps)
    }

    pub fn into_spins(self) -> Vec<i8> {
        self.spins
    }
}

/// Basis index of a raw spin slice (`+1 → 0`, first spin most significant).
#[inline]
pub fn spins_to_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .fold(0usize, |acc, &s| (acc << 1) | usize::from(s < 0))
}

/// Writes the configuration of `index` into `out` (length fixes the width).
#[inline]
pub fn index_to_spins(index: usize, out: &mut [i8]) {
    let n = out.len();
    for (k, s) in out.iter_mut().enumerate() {
        *s = if (index >> (n - 1 - k)) & 1 == 1 { -1 } else { 1 };
    }
}

/// Decoded clock register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClockReading {
    /// A time index in `0..=n_steps`.
    Time(usize),
    /// A code whose decoded value exceeds `n_steps`; a legal basis state that
    /// no clock term couples.
    Unused(usize),
}

impl ClockReading {
    pub fn time(self) -> Option<usize> {
        match self {
            ClockReading::Time(t) => Some(t),
            ClockReading::Unused(_) => None,
        }
    }
}

/// Gray-decodes a clock word (`-1` spins are `1` bits).
pub fn clock_word_time(clock_word: usize) -> usize {
    gray_decode(clock_word as u64) as usize
}

/// Time index held by the clock spins; codes decoding beyond `n_steps` are
/// flagged as [`ClockReading::Unused`].
pub fn clock_time_of(clock: &[i8], n_steps: usize) -> ClockReading {
    let t = clock_word_time(spins_to_index(clock));
    if t > n_steps {
        ClockReading::Unused(t)
    } else {
        ClockReading::Time(t)
    }
}

/// Iterator over every configuration of `n` spins in index order.
pub fn enumerate(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..1usize << n).map(move |i| {
        let mut s = vec![0; n];
        index_to_spins(i, &mut s);
        s
    })
}
