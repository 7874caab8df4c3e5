//! Margin-adaptive bit and power loading.
//!
//! [`chow_load`] first runs Chow's iteration: bits follow
//! `round(log2(1 + snr / (gap * margin)))` and the margin is nudged until
//! the rounded total meets the target. Levin-Campello greedy moves then
//! repair any residual mismatch and swap bits until no cheaper placement
//! exists. Per-carrier energy costs `(2^b - 1) / snr` are convex in `b`,
//! so the swap-stable assignment minimizes the total energy at the target
//! rate, i.e. maximizes the common margin. Power scales then equalize the
//! margin across loaded carriers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One loaded carrier (or CAP band).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadingEntry {
    pub index: usize,
    pub bits: u32,
    pub power_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingTable {
    entries: Vec<LoadingEntry>,
    total_bits_per_symbol: usize,
}

/// Upper bound on bits per carrier.
pub const MAX_BITS: u32 = 8;

impl LoadingTable {
    pub fn new(entries: Vec<LoadingEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("loading table is empty"));
        }
        if entries.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::config("loading table indices must be strictly increasing"));
        }
        for e in &entries {
            if e.bits > MAX_BITS {
                return Err(Error::config(format!("carrier {} loads {} > {MAX_BITS} bits", e.index, e.bits)));
            }
            if !(e.power_scale > 0.0 && e.power_scale.is_finite()) {
                return Err(Error::config(format!("carrier {} has non-positive power scale", e.index)));
            }
        }
        let active: Vec<f64> = entries.iter().filter(|e| e.bits > 0).map(|e| e.power_scale.powi(2)).collect();
        if !active.is_empty() {
            let mean = active.iter().sum::<f64>() / active.len() as f64;
            if (mean - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("mean active power {mean} is not 1")));
            }
        }
        let total = entries.iter().map(|e| e.bits as usize).sum();
        Ok(Self { entries, total_bits_per_symbol: total })
    }

    /// Same bits and unit power on `count` consecutive indices from `first`.
    pub fn uniform(first: usize, count: usize, bits: u32) -> Result<Self> {
        Self::new((first..first + count).map(|index| LoadingEntry { index, bits, power_scale: 1.0 }).collect())
    }

    pub fn entries(&self) -> &[LoadingEntry] {
        &self.entries
    }

    pub fn total_bits_per_symbol(&self) -> usize {
        self.total_bits_per_symbol
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bits(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.bits).collect()
    }

    /// Shifts every index by `offset`.
    pub fn with_index_offset(mut self, offset: usize) -> Self {
        self.entries.iter_mut().for_each(|e| e.index += offset);
        self
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("carrier,bits,power_scale\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{}", e.index, e.bits, e.power_scale);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("carrier,bits,power_scale") => {}
            other => return Err(Error::config(format!("bad loading table header {other:?}"))),
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::config(format!("bad loading table row {}: '{line}'", n + 2));
            if fields.len() != 3 {
                return Err(bad());
            }
            entries.push(LoadingEntry {
                index: fields[0].parse().map_err(|_| bad())?,
                bits: fields[1].parse().map_err(|_| bad())?,
                power_scale: fields[2].parse().map_err(|_| bad())?,
            });
        }
        Self::new(entries)
    }
}

fn linear_snr(snr_db: &[f64]) -> Vec<f64> {
    snr_db
        .iter()
        .map(|&s| if s.is_nan() { 0.0 } else { 10f64.powf(s / 10.0) })
        .collect()
}

/// Margin in dB of a bit assignment under optimal power allocation with one
/// unit of power per entry.
pub fn loading_margin_db(bits: &[u32], snr_db: &[f64], gap_db: f64) -> f64 {
    let snr = linear_snr(snr_db);
    let energy: f64 = bits
        .iter()
        .zip(&snr)
        .filter(|(&b, _)| b > 0)
        .map(|(&b, &s)| (2f64.powi(b as i32) - 1.0) / s)
        .sum();
    if energy == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (bits.len() as f64 / energy).log10() - gap_db
}

/// Chow margin-adaptive loading with an 8-bit cap per carrier.
pub fn chow_load(snr_db: &[f64], target_bits: usize, gap_db: f64) -> Result<LoadingTable> {
    chow_load_capped(snr_db, target_bits, gap_db, MAX_BITS)
}

/// [`chow_load`] with a caller-chosen per-entry bit cap.
pub fn chow_load_capped(snr_db: &[f64], target_bits: usize, gap_db: f64, max_bits: u32) -> Result<LoadingTable> {
    let bits = chow_bits(snr_db, target_bits, gap_db, max_bits)?;
    let snr = linear_snr(snr_db);
    Ok(table_from_bits(&bits, &snr))
}

pub(crate) fn table_from_bits(bits: &[u32], snr: &[f64]) -> LoadingTable {
    let energy: Vec<f64> = bits
        .iter()
        .zip(snr)
        .map(|(&b, &s)| if b > 0 { (2f64.powi(b as i32) - 1.0) / s } else { 0.0 })
        .collect();
    let active = bits.iter().filter(|&&b| b > 0).count();
    let mean = if active > 0 { energy.iter().sum::<f64>() / active as f64 } else { 1.0 };
    let entries = bits
        .iter()
        .zip(&energy)
        .enumerate()
        .map(|(index, (&b, &e))| LoadingEntry {
            index,
            bits: b,
            power_scale: if b > 0 { (e / mean).sqrt() } else { 1.0 },
        })
        .collect();
    let total = bits.iter().map(|&b| b as usize).sum();
    LoadingTable { entries, total_bits_per_symbol: total }
}

pub(crate) fn chow_bits(snr_db: &[f64], target_bits: usize, gap_db: f64, max_bits: u32) -> Result<Vec<u32>> {
    let n = snr_db.len();
    if n == 0 {
        return Err(Error::config("SNR vector is empty"));
    }
    let snr = linear_snr(snr_db);
    let usable = snr.iter().filter(|&&s| s > 0.0).count();
    let achievable = usable * max_bits as usize;
    if target_bits > achievable {
        return Err(Error::Capacity { target: target_bits, achievable });
    }

    // Chow's margin iteration.
    let mut margin_db = 0.0;
    let mut bits = vec![0u32; n];
    for _ in 0..64 {
        let scale = 10f64.powf(-(gap_db + margin_db) / 10.0);
        for (b, &s) in bits.iter_mut().zip(&snr) {
            let v = (1.0 + s * scale).log2().round();
            *b = v.clamp(0.0, max_bits as f64) as u32;
        }
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total == target_bits {
            break;
        }
        let used = bits.iter().filter(|&&b| b > 0).count().max(1) as f64;
        margin_db += 10.0 * 2f64.log10() * (total as f64 - target_bits as f64) / used;
    }

    // Levin-Campello repair and swaps.
    let inc = |b: u32, s: f64| -> f64 {
        if b >= max_bits || s <= 0.0 {
            f64::INFINITY
        } else {
            2f64.powi(b as i32) / s
        }
    };
    let dec = |b: u32, s: f64| -> f64 {
        if b == 0 {
            f64::NEG_INFINITY
        } else {
            2f64.powi(b as i32 - 1) / s
        }
    };
    let argmin_inc = |bits: &[u32]| -> usize {
        (0..n).min_by(|&a, &b| inc(bits[a], snr[a]).total_cmp(&inc(bits[b], snr[b]))).unwrap()
    };
    let argmax_dec = |bits: &[u32]| -> usize {
        (0..n)
            .rev()
            .max_by(|&a, &b| dec(bits[a], snr[a]).total_cmp(&dec(bits[b], snr[b])))
            .unwrap()
    };
    let mut total: usize = bits.iter().map(|&b| b as usize).sum();
    while total < target_bits {
        let i = argmin_inc(&bits);
        bits[i] += 1;
        total += 1;
    }
    while total > target_bits {
        let j = argmax_dec(&bits);
        bits[j] -= 1;
        total -= 1;
    }
    for _ in 0..(n * max_bits as usize + 1) {
        let i = argmin_inc(&bits);
        let j = argmax_dec(&bits);
        if i == j || !(inc(bits[i], snr[i]) < dec(bits[j], snr[j]) * (1.0 - 1e-12)) {
            break;
        }
        bits[i] += 1;
        bits[j] -= 1;
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_snr_loads_evenly() {
        let t = chow_load(&[20.0; 8], 16, 6.0).unwrap();
        assert!(t.entries().iter().all(|e| e.bits == 2));
        assert!(t.entries().iter().all(|e| (e.power_scale - 1.0).abs() < 1e-12));
        assert_eq!(t.total_bits_per_symbol(), 16);
    }

    #[test]
    fn strong_carriers_get_more_bits() {
        let snr = [25.0, 25.0, 25.0, 25.0, 5.0, 5.0, 5.0, 5.0];
        let t = chow_load(&snr, 24, 6.0).unwrap();
        let b = t.bits();
        let min_hi = b[..4].iter().min().unwrap();
        let max_lo = b[4..].iter().max().unwrap();
        assert!(min_hi > max_lo, "{b:?}");
        assert_eq!(t.total_bits_per_symbol(), 24);
    }

    #[test]
    fn infeasible_target_reports_capacity() {
        match chow_load(&[30.0; 4], 33, 6.0) {
            Err(Error::Capacity { target, achievable }) => {
                assert_eq!((target, achievable), (33, 32));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let snr: Vec<f64> = (0..50).map(|i| 5.0 + (i as f64 * 0.37).sin() * 10.0).collect();
        assert_eq!(chow_load(&snr, 120, 6.0).unwrap(), chow_load(&snr, 120, 6.0).unwrap());
    }

    #[test]
    fn invariants_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.random_range(4..64);
            let snr: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..35.0)).collect();
            let target = rng.random_range(1..n * 4);
            let t = chow_load(&snr, target, 6.0).unwrap();
            assert_eq!(t.bits().iter().map(|&b| b as usize).sum::<usize>(), target);
            let active: Vec<f64> = t.entries().iter().filter(|e| e.bits > 0).map(|e| e.power_scale.powi(2)).collect();
            let mean = active.iter().sum::<f64>() / active.len() as f64;
            assert!((mean - 1.0).abs() < 1e-9);
            // Equal margin: power * snr / (2^b - 1) is the same on every loaded carrier.
            let ratios: Vec<f64> = t
                .entries()
                .iter()
                .zip(&snr)
                .filter(|(e, _)| e.bits > 0)
                .map(|(e, s)| e.power_scale.powi(2) * 10f64.powf(s / 10.0) / (2f64.powi(e.bits as i32) - 1.0))
                .collect();
            let r0 = ratios[0];
            assert!(ratios.iter().all(|r| (r / r0 - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let snr: Vec<f64> = (0..10).map(|i| 10.0 + i as f64).collect();
        let t = chow_load(&snr, 30, 6.0).unwrap().with_index_offset(1);
        let csv = t.to_csv();
        assert!(csv.starts_with("carrier,bits,power_scale\n1,"));
        assert_eq!(LoadingTable::from_csv(&csv).unwrap(), t);
        assert!(LoadingTable::from_csv("idx,b,p\n").is_err());
        assert!(LoadingTable::from_csv("carrier,bits,power_scale\n1,9,1.0\n").is_err());
        assert!(LoadingTable::from_csv("carrier,bits,power_scale\n1,2,2.0\n").is_err());
    }

    fn best_margin_exhaustive(snr: &[f64], target: usize, gap: f64, cap: u32) -> f64 {
        fn walk(k: usize, left: usize, bits: &mut Vec<u32>, snr: &[f64], gap: f64, cap: u32, best: &mut f64) {
            if k == bits.len() {
                if left == 0 {
                    *best = best.max(loading_margin_db(bits, snr, gap));
                }
                return;
            }
            let room = (bits.len() - k - 1) * cap as usize;
            for b in 0..=(cap as usize).min(left) {
                if left - b > room {
                    continue;
                }
                bits[k] = b as u32;
                walk(k + 1, left - b, bits, snr, gap, cap, best);
            }
            bits[k] = 0;
        }
        let mut best = f64::NEG_INFINITY;
        walk(0, target, &mut vec![0; snr.len()], snr, gap, cap, &mut best);
        best
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let n = rng.random_range(2..6);
            let snr: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..30.0)).collect();
            let target = rng.random_range(1..=n * 5);
            let t = chow_load_capped(&snr, target, 6.0, 5).unwrap();
            let got = loading_margin_db(&t.bits(), &snr, 6.0);
            let want = best_margin_exhaustive(&snr, target, 6.0, 5);
            assert!((got - want).abs() < 1e-9, "{snr:?} {target}: {got} vs {want}");
        }
    }

    #[test]
    fn eight_carriers_twenty_bits_match_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let snr: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..30.0)).collect();
            let t = chow_load(&snr, 20, 6.0).unwrap();
            let got = loading_margin_db(&t.bits(), &snr, 6.0);
            let want = best_margin_exhaustive(&snr, 20, 6.0, MAX_BITS);
            assert!((got - want).abs() < 0.01, "{snr:?}: {got} vs {want}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn energy(b: u32, snr_db: f64) -> f64 {
            if b == 0 { 0.0 } else { (2f64.powi(b as i32) - 1.0) / 10f64.powf(snr_db / 10.0) }
        }

        proptest! {
            #[test]
            fn chow_meets_target_and_is_swap_stable(
                snr in proptest::collection::vec(0.0f64..40.0, 2..24),
                frac in 0.05f64..0.9,
            ) {
                let target = ((snr.len() as f64 * MAX_BITS as f64 * frac) as usize).max(1);
                let t = chow_load(&snr, target, 6.0).unwrap();
                prop_assert_eq!(t.total_bits_per_symbol(), target);
                let b = t.bits();
                prop_assert!(b.iter().all(|&x| x <= MAX_BITS));
                // Moving one bit from carrier i to carrier j never lowers the
                // total energy.
                let total: f64 = b.iter().zip(&snr).map(|(&x, &s)| energy(x, s)).sum();
                for i in 0..b.len() {
                    for j in 0..b.len() {
                        if i == j || b[i] == 0 || b[j] == MAX_BITS {
                            continue;
                        }
                        let moved = total - energy(b[i], snr[i]) + energy(b[i] - 1, snr[i])
                            - energy(b[j], snr[j]) + energy(b[j] + 1, snr[j]);
                        prop_assert!(moved >= total * (1.0 - 1e-9), "{i}->{j}");
                    }
                }
            }

            #[test]
            fn loaded_margin_is_equal_across_carriers(snr in proptest::collection::vec(10.0f64..40.0, 2..24)) {
                let t = chow_load(&snr, snr.len() * 3, 6.0).unwrap();
                let lin: Vec<f64> = t
                    .entries()
                    .iter()
                    .zip(&snr)
                    .filter(|(e, _)| e.bits > 0)
                    .map(|(e, &s)| e.power_scale.powi(2) * 10f64.powf(s / 10.0) / (2f64.powi(e.bits as i32) - 1.0))
                    .collect();
                prop_assert!(lin.windows(2).all(|w| (w[0] / w[1] - 1.0).abs() < 1e-9));
            }

            #[test]
            fn csv_round_trip(snr in proptest::collection::vec(0.0f64..40.0, 1..32), offset in 0usize..64) {
                let t = chow_load(&snr, snr.len(), 6.0).unwrap().with_index_offset(offset);
                let back = LoadingTable::from_csv(&t.to_csv()).unwrap();
                prop_assert_eq!(back, t);
            }
        }
    }
}
