use crate::error::{Error, Result};

/// Where a [`BitSequence`] came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitOrigin {
    Prbs { order: u32, seed: u64 },
    File(String),
    Explicit,
}

/// A non-empty sequence of bits stored one per byte (0 or 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<u8>,
    origin: BitOrigin,
}

impl BitSequence {
    pub fn new(bits: Vec<u8>, origin: BitOrigin) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::framing("bit sequence must not be empty"));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::framing(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self { bits, origin })
    }

    pub fn explicit(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitOrigin::Explicit)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn origin(&self) -> &BitOrigin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Feedback taps (x^order + x^tap + 1) of the standard ITU-T PRBS polynomials.
fn prbs_tap(order: u32) -> Option<u32> {
    match order {
        7 => Some(6),
        15 => Some(14),
        23 => Some(18),
        31 => Some(28),
        _ => None,
    }
}

/// Maximal-length Fibonacci LFSR output.
///
/// The stream obeys `a[n] = a[n - order] ^ a[n - tap]`. Register bit `k`
/// holds `a[n + k]`: bit 0 is emitted, the register shifts right and the
/// feedback enters at bit `order - 1`. The seed is the initial register, so
/// its bit 0 is the first output bit.
pub fn prbs_generate(order: u32, seed: u64, n_bits: usize) -> Result<BitSequence> {
    let tap = prbs_tap(order)
        .ok_or_else(|| Error::config(format!("PRBS order {order} not in {{7, 15, 23, 31}}")))?;
    let mask = (1u64 << order) - 1;
    let mut state = seed & mask;
    if state == 0 {
        return Err(Error::config("PRBS seed must be nonzero within the register width"));
    }
    if n_bits == 0 {
        return Err(Error::config("PRBS length must be at least one bit"));
    }
    let mut bits = Vec::with_capacity(n_bits);
    for _ in 0..n_bits {
        bits.push((state & 1) as u8);
        let fb = (state ^ (state >> (order - tap))) & 1;
        state = (state >> 1) | (fb << (order - 1));
    }
    BitSequence::new(bits, BitOrigin::Prbs { order, seed })
}
