//! Gray-labelled PAM and QAM alphabets.
//!
//! Labelling table (bits are read MSB first; `gray(i) = i ^ (i >> 1)`):
//!
//! | geometry    | orders        | layout                                                  |
//! |-------------|---------------|---------------------------------------------------------|
//! | PAM         | 2, 4, 8, ...  | level index `i` ascending carries label `gray(i)`       |
//! | QAM-square  | 4, 16, 64, 256| first half of the bits Gray-PAM on I, second half on Q  |
//! | QAM-cross   | 8             | 4 x 2 rectangle: 2 Gray bits on I, 1 bit on Q           |
//! | QAM-cross   | 32, 128       | 2^(m+1) x 2^m Gray rectangle with the outer columns     |
//! |             |               | folded onto the top and bottom rows                     |
//!
//! Order 2 through [`Constellation::qam`] is BPSK, i.e. PAM-2. The folded
//! cross layouts are only quasi-Gray: a perfect Gray labelling of a cross
//! constellation does not exist.

use num_complex::Complex64;

use super::BitSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Pam,
    QamSquare,
    QamCross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits: u32,
    geometry: Geometry,
    /// Unit-energy points indexed by label.
    points: Vec<Complex64>,
    scale: f64,
    nx: usize,
    ny: usize,
    /// Label at each odd-integer lattice cell of the bounding box.
    cells: Vec<Option<u32>>,
}

fn inverse_gray(mut g: u32) -> u32 {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Odd-integer amplitude of the level carrying Gray label `label` among `n` levels.
fn gray_level(label: u32, n: u32) -> i32 {
    2 * inverse_gray(label) as i32 - (n as i32 - 1)
}

impl Constellation {
    /// Gray PAM of the given order (a power of two, at least 2).
    pub fn pam(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() || order > 256 {
            return Err(Error::config(format!("unsupported PAM order {order}")));
        }
        let n = order as u32;
        let raw = (0..n).map(|l| (gray_level(l, n), 0)).collect();
        Ok(Self::build(order, Geometry::Pam, raw))
    }

    /// Gray QAM of order 2..=256; odd bit counts use cross layouts.
    pub fn qam(order: usize) -> Result<Self> {
        if !order.is_power_of_two() || !(2..=256).contains(&order) {
            return Err(Error::config(format!("unsupported QAM order {order}")));
        }
        let bits = order.trailing_zeros();
        if bits == 1 {
            return Self::pam(2);
        }
        if bits % 2 == 0 {
            let k = bits / 2;
            let side = 1u32 << k;
            let raw = (0..order as u32)
                .map(|l| (gray_level(l >> k, side), gray_level(l & (side - 1), side)))
                .collect();
            return Ok(Self::build(order, Geometry::QamSquare, raw));
        }
        if bits == 3 {
            let raw = (0..8u32).map(|l| (gray_level(l >> 1, 4), gray_level(l & 1, 2))).collect();
            return Ok(Self::build(order, Geometry::QamCross, raw));
        }
        let m = (bits - 1) / 2;
        let cols = 1u32 << (m + 1);
        let rows = 1u32 << m;
        let edge = 3 * (1i32 << (m - 1));
        let raw = (0..order as u32)
            .map(|l| {
                let x = gray_level(l >> m, cols);
                let y = gray_level(l & (rows - 1), rows);
                if x.abs() > edge {
                    let xf = x.signum() * ((1i32 << m) - y.abs());
                    let yf = y.signum() * (x.abs() - (1i32 << (m - 1)));
                    (xf, yf)
                } else {
                    (x, y)
                }
            })
            .collect();
        Ok(Self::build(order, Geometry::QamCross, raw))
    }

    /// QAM alphabet carrying `bits` bits per symbol.
    pub fn for_bits(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 8 {
            return Err(Error::config(format!("no constellation carries {bits} bits")));
        }
        Self::qam(1 << bits)
    }

    fn build(order: usize, geometry: Geometry, raw: Vec<(i32, i32)>) -> Self {
        let energy = raw.iter().map(|&(x, y)| (x * x + y * y) as f64).sum::<f64>() / raw.len() as f64;
        let scale = 1.0 / energy.sqrt();
        let max_x = raw.iter().map(|p| p.0.abs()).max().unwrap_or(1);
        let max_y = raw.iter().map(|p| p.1.abs()).max().unwrap_or(0);
        let nx = max_x as usize + 1;
        let ny = if max_y == 0 { 1 } else { max_y as usize + 1 };
        let mut cells = vec![None; nx * ny];
        for (label, &(x, y)) in raw.iter().enumerate() {
            let ix = ((x + nx as i32 - 1) / 2) as usize;
            let iy = if ny == 1 { 0 } else { ((y + ny as i32 - 1) / 2) as usize };
            cells[iy * nx + ix] = Some(label as u32);
        }
        let points = raw
            .iter()
            .map(|&(x, y)| Complex64::new(x as f64 * scale, y as f64 * scale))
            .collect();
        Self { order, bits: order.trailing_zeros(), geometry, points, scale, nx, ny, cells }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    /// Distance between adjacent lattice points (unit-energy scale).
    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }

    /// Hard decision: label of the nearest point.
    pub fn decide(&self, z: Complex64) -> u32 {
        let slice = |v: f64, n: usize| -> usize {
            let idx = ((v / self.scale + (n as f64 - 1.0)) / 2.0).round();
            idx.clamp(0.0, (n - 1) as f64) as usize
        };
        let ix = slice(z.re, self.nx);
        let iy = if self.ny == 1 { 0 } else { slice(z.im, self.ny) };
        if let Some(label) = self.cells[iy * self.nx + ix] {
            return label;
        }
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - z).norm_sqr().total_cmp(&(b.1 - z).norm_sqr()))
            .map(|(i, _)| i as u32)
            .unwrap_or(0)
    }
}

/// Maps MSB-first bit groups to constellation points.
pub fn map_symbols(bits: &BitSequence, c: &Constellation) -> Result<Vec<Complex64>> {
    let k = c.bits_per_symbol() as usize;
    if bits.len() % k != 0 {
        return Err(Error::framing(format!(
            "{} bits are not divisible into {k}-bit symbols",
            bits.len()
        )));
    }
    Ok(bits
        .bits()
        .chunks(k)
        .map(|g| c.point(g.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)))
        .collect())
}

/// Hard-decision demapping back to MSB-first bits.
pub fn demap_symbols(symbols: &[Complex64], c: &Constellation) -> Vec<u8> {
    let k = c.bits_per_symbol();
    let mut out = Vec::with_capacity(symbols.len() * k as usize);
    for &z in symbols {
        let label = c.decide(z);
        out.extend((0..k).rev().map(|s| ((label >> s) & 1) as u8));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_alphabets() -> Vec<Constellation> {
        let mut v: Vec<_> = [2, 4, 8, 16].iter().map(|&m| Constellation::pam(m).unwrap()).collect();
        v.extend([2, 4, 8, 16, 32, 64, 128, 256].iter().map(|&m| Constellation::qam(m).unwrap()));
        v
    }

    /// Nearest-neighbour pairs by enumeration, with their Hamming distance.
    fn neighbour_hamming(c: &Constellation) -> Vec<u32> {
        let p = c.points();
        let d = c.min_distance();
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if ((p[i] - p[j]).norm() - d).abs() < 1e-9 {
                    out.push(((i ^ j) as u32).count_ones());
                }
            }
        }
        out
    }

    #[test]
    fn unit_energy_and_distinct_points() {
        for c in all_alphabets() {
            let e = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "order {}", c.order());
            for i in 0..c.order() {
                for j in i + 1..c.order() {
                    assert!((c.points()[i] - c.points()[j]).norm() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn gray_property_holds_for_pam_square_and_rectangle() {
        for c in all_alphabets() {
            let h = neighbour_hamming(&c);
            assert!(!h.is_empty());
            match (c.geometry(), c.order()) {
                (Geometry::QamCross, 32) | (Geometry::QamCross, 128) => {
                    // Quasi-Gray: almost every neighbour pair differs in one bit.
                    let ones = h.iter().filter(|&&x| x == 1).count() as f64;
                    let mean = h.iter().sum::<u32>() as f64 / h.len() as f64;
                    assert!(ones / h.len() as f64 > 0.9, "order {}", c.order());
                    assert!(mean < 1.16, "order {}: {mean}", c.order());
                }
                _ => assert!(h.iter().all(|&x| x == 1), "order {}", c.order()),
            }
        }
    }

    #[test]
    fn cross_shapes() {
        let c32 = Constellation::qam(32).unwrap();
        let max = c32.points().iter().map(|p| p.re.abs().max(p.im.abs())).fold(0.0, f64::max);
        assert!((max / c32.scale - 5.0).abs() < 1e-9);
        let c128 = Constellation::qam(128).unwrap();
        let max = c128.points().iter().map(|p| p.re.abs().max(p.im.abs())).fold(0.0, f64::max);
        assert!((max / c128.scale - 11.0).abs() < 1e-9);
        // Corners of the bounding square are empty.
        assert!(c32.points().iter().all(|p| !(p.re.abs() / c32.scale > 4.0 && p.im.abs() / c32.scale > 4.0)));
    }

    #[test]
    fn pam4_gray_table() {
        let u = 1.0 / 5f64.sqrt();
        let bits = BitSequence::explicit(vec![0, 0, 0, 1, 1, 1, 1, 0]).unwrap();
        let s = map_symbols(&bits, &Constellation::pam(4).unwrap()).unwrap();
        let want = [-3.0 * u, -u, u, 3.0 * u];
        for (a, b) in s.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn round_trip_every_label() {
        for c in all_alphabets() {
            for l in 0..c.order() as u32 {
                assert_eq!(c.decide(c.point(l)), l);
                // Small perturbations stay inside the decision region.
                let z = c.point(l) + Complex64::new(0.3, -0.3) * c.min_distance();
                assert_eq!(c.decide(z), l, "order {} label {l}", c.order());
            }
        }
    }

    #[test]
    fn qam4_random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits: Vec<u8> = (0..2000).map(|_| rng.random_range(0..2)).collect();
        let seq = BitSequence::explicit(bits.clone()).unwrap();
        let c = Constellation::qam(4).unwrap();
        let syms = map_symbols(&seq, &c).unwrap();
        assert_eq!(demap_symbols(&syms, &c), bits);
    }

    #[test]
    fn qam16_monte_carlo_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits: Vec<u8> = (0..400_000).map(|_| rng.random_range(0..2)).collect();
        let syms = map_symbols(&BitSequence::explicit(bits).unwrap(), &Constellation::qam(16).unwrap()).unwrap();
        assert_eq!(syms.len(), 100_000);
        let e = syms.iter().map(|s| s.norm_sqr()).sum::<f64>() / syms.len() as f64;
        assert!((e - 1.0).abs() < 0.02, "{e}");
    }

    #[test]
    fn indivisible_length_is_framing_error() {
        let seq = BitSequence::explicit(vec![1, 0, 1]).unwrap();
        assert!(matches!(map_symbols(&seq, &Constellation::qam(16).unwrap()), Err(Error::Framing(_))));
    }

    #[test]
    fn far_outside_points_clamp_to_nearest() {
        let c = Constellation::qam(32).unwrap();
        // A point beyond an empty corner must still map to a real point.
        let z = Complex64::new(10.0, 10.0);
        let l = c.decide(z);
        let best = c
            .points()
            .iter()
            .map(|p| (p - z).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(((c.point(l) - z).norm() - best).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn map_demap_round_trip(k in 1u32..=8, raw in proptest::collection::vec(0u8..2, 8..64)) {
                let c = Constellation::for_bits(k).unwrap();
                let n = raw.len() / k as usize * k as usize;
                let bits = raw[..n].to_vec();
                let syms = map_symbols(&BitSequence::explicit(bits.clone()).unwrap(), &c).unwrap();
                prop_assert_eq!(demap_symbols(&syms, &c), bits);
            }

            #[test]
            fn decisions_survive_small_noise(k in 1u32..=8, label in 0u32..256, re in -0.49f64..0.49, im in -0.49f64..0.49) {
                let c = Constellation::for_bits(k).unwrap();
                let label = label % c.order() as u32;
                let d = c.min_distance();
                let z = c.point(label) + Complex64::new(re, im) * d / 2f64.sqrt();
                prop_assert_eq!(c.decide(z), label);
            }
        }
    }
}
