//! Differentially encoded QAM, invariant to rotations by multiples of 90°.
//!
//! The first two bits of a symbol select the quadrant change
//! (`00 -> 0`, `01 -> +90°`, `11 -> 180°`, `10 -> 270°`). The remaining bits
//! label a first-quadrant point, which is then rotated into the current
//! quadrant.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Quadrant step for the two leading bits.
const DELTA: [u32; 4] = [0, 1, 3, 2];
/// Leading bits for a quadrant step.
const DELTA_BITS: [u32; 4] = [0b00, 0b01, 0b11, 0b10];

#[derive(Debug, Clone, PartialEq)]
pub struct DiffQam {
    order: usize,
    bits: u32,
    /// First-quadrant points indexed by inner label, unit-energy scale.
    inner: Vec<Complex64>,
    /// All points, index `q * inner.len() + label`.
    points: Vec<Complex64>,
}

fn first_quadrant(order: usize) -> Option<Vec<(i32, i32)>> {
    Some(match order {
        4 => vec![(1, 1)],
        8 => vec![(1, 1), (3, 1)],
        16 => vec![(1, 1), (1, 3), (3, 1), (3, 3)],
        32 => {
            // Labels 0..8 in order; only (3,5) lacks a Gray neighbour.
            vec![(1, 1), (3, 1), (3, 5), (5, 1), (1, 3), (3, 3), (1, 5), (5, 3)]
        }
        64 => {
            let g = [1, 3, 7, 5];
            (0..16).map(|l: usize| (g[l >> 2], g[l & 3])).collect()
        }
        _ => return None,
    })
}

impl DiffQam {
    pub fn new(order: usize) -> Result<Self> {
        let raw = first_quadrant(order)
            .ok_or_else(|| Error::config(format!("differential QAM order {order} is not one of 4, 8, 16, 32, 64")))?;
        let energy = raw.iter().map(|&(x, y)| (x * x + y * y) as f64).sum::<f64>() / raw.len() as f64;
        let s = 1.0 / energy.sqrt();
        let inner: Vec<Complex64> = raw.iter().map(|&(x, y)| Complex64::new(x as f64 * s, y as f64 * s)).collect();
        let points = (0..4)
            .flat_map(|q| inner.iter().map(move |&p| p * Complex64::i().powi(q)))
            .collect();
        Ok(Self { order, bits: order.trailing_zeros(), inner, points })
    }

    pub fn for_bits(bits: u32) -> Result<Self> {
        if !(2..=6).contains(&bits) {
            return Err(Error::config(format!("differential QAM cannot carry {bits} bits")));
        }
        Self::new(1 << bits)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Multi-modulus radius `E[re^4] / E[re^2]` (identical for both axes).
    pub fn mma_radius(&self) -> f64 {
        let m2 = self.points.iter().map(|p| p.re.powi(2)).sum::<f64>();
        let m4 = self.points.iter().map(|p| p.re.powi(4)).sum::<f64>();
        m4 / m2
    }

    /// Nearest point as `(quadrant, inner label)`.
    pub fn decide(&self, z: Complex64) -> (u32, u32) {
        let idx = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - z).norm_sqr().total_cmp(&(b.1 - z).norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let m = self.inner.len();
        ((idx / m) as u32, (idx % m) as u32)
    }

    pub fn nearest(&self, z: Complex64) -> Complex64 {
        let (q, l) = self.decide(z);
        self.points[q as usize * self.inner.len() + l as usize]
    }
}

/// Encodes bits with quadrant reference 0 before the first symbol.
pub fn diff_qam_encode(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    let c = DiffQam::new(order)?;
    let k = c.bits as usize;
    if bits.len() % k != 0 {
        return Err(Error::framing(format!("{} bits do not fill {k}-bit symbols", bits.len())));
    }
    let m = c.inner.len();
    let mut q = 0u32;
    Ok(bits
        .chunks(k)
        .map(|g| {
            let v = g.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            let lead = v >> (k - 2);
            let label = v & ((1 << (k - 2)) - 1);
            q = (q + DELTA[lead as usize]) % 4;
            c.points[q as usize * m + label as usize]
        })
        .collect())
}

/// Decodes hard decisions; the first symbol is referenced to quadrant 0.
pub fn diff_qam_decode(symbols: &[Complex64], order: usize) -> Result<Vec<u8>> {
    let c = DiffQam::new(order)?;
    Ok(diff_decode_with(&c, symbols))
}

pub(crate) fn diff_decode_with(c: &DiffQam, symbols: &[Complex64]) -> Vec<u8> {
    let k = c.bits;
    let mut out = Vec::with_capacity(symbols.len() * k as usize);
    let mut prev = 0u32;
    for &z in symbols {
        let (q, label) = c.decide(z);
        let v = (DELTA_BITS[((q + 4 - prev) % 4) as usize] << (k - 2)) | label;
        prev = q;
        out.extend((0..k).rev().map(|s| ((v >> s) & 1) as u8));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn round_trip_all_orders() {
        for order in [4usize, 8, 16, 32, 64] {
            let k = order.trailing_zeros() as usize;
            let b = bits(k * 500, order as u64);
            let s = diff_qam_encode(&b, order).unwrap();
            assert_eq!(diff_qam_decode(&s, order).unwrap(), b);
            let e = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len() as f64;
            assert!((e - 1.0).abs() < 0.15, "{order}: {e}");
        }
    }

    #[test]
    fn unit_average_energy() {
        for order in [4usize, 8, 16, 32, 64] {
            let c = DiffQam::new(order).unwrap();
            let e = c.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-12);
            assert_eq!(c.points().len(), order);
        }
    }

    #[test]
    fn quarter_turn_is_removed() {
        for order in [4usize, 16, 64] {
            let k = order.trailing_zeros() as usize;
            let b = bits(k * 300, 3);
            for turns in 1..4 {
                let r = Complex64::i().powi(turns);
                let s: Vec<Complex64> = diff_qam_encode(&b, order).unwrap().iter().map(|z| z * r).collect();
                let d = diff_qam_decode(&s, order).unwrap();
                assert_eq!(d[k..], b[k..]);
            }
        }
    }

    #[test]
    fn eighth_turn_is_not_removed() {
        let b = bits(2000, 4);
        let r = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let s: Vec<Complex64> = diff_qam_encode(&b, 16).unwrap().iter().map(|z| z * r).collect();
        let d = diff_qam_decode(&s, 16).unwrap();
        assert_ne!(d[4..], b[4..]);
    }

    #[test]
    fn square_inner_labels_are_gray() {
        for order in [16, 64] {
            let c = DiffQam::new(order).unwrap();
            let m = order / 4;
            for a in 0..m {
                for b in 0..m {
                    let dist = (c.inner[a] - c.inner[b]).norm();
                    if (dist - c.inner[0].re * 2.0).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "{order}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_order() {
        assert!(matches!(diff_qam_encode(&[0, 1], 2), Err(Error::Config(_))));
        assert!(matches!(diff_qam_encode(&[0, 1, 1], 4), Err(Error::Framing(_))));
    }

    #[test]
    fn mma_radius_of_qpsk() {
        let c = DiffQam::new(4).unwrap();
        assert!((c.mma_radius() - 0.5).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quarter_turns_only_touch_the_first_symbol(
                k in 2usize..=6,
                raw in proptest::collection::vec(0u8..2, 12..120),
                turns in 0i32..4,
            ) {
                let order = 1 << k;
                let n = raw.len() / k * k;
                let b = &raw[..n];
                let r = Complex64::i().powi(turns);
                let s: Vec<Complex64> = diff_qam_encode(b, order).unwrap().iter().map(|z| z * r).collect();
                let d = diff_qam_decode(&s, order).unwrap();
                prop_assert_eq!(&d[k..], &b[k..]);
                if turns == 0 {
                    prop_assert_eq!(&d[..k], &b[..k]);
                }
            }
        }
    }
}
