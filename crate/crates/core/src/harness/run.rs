use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ber::{count_bits, curve_status, BerPoint, CurveStatus};
use super::config::{check_rates, Manifest, Scenario, SimConfig};
use crate::cap::{cap_load, cap_modulate, cap_probe_table};
use crate::channel::{add_awgn, simulate_link, LinkConfig};
use crate::dmt::{chow_load, dmt_modulate, dmt_probe_frame, LoadingTable};
use crate::error::{Error, Result};
use crate::pam4::{pam4_build_frame, Pam4Config};
use crate::rng::{derive_seed, key_hash, rng_from, stage};
use crate::rx::{cap_receive, dmt_receive, estimate_cap_snr, estimate_dmt_snr, pam4_receive, FormatTag};
use crate::signal::{prbs_generate, BitSequence, Waveform};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerCurve {
    pub scenario: Scenario,
    pub points: Vec<BerPoint>,
    pub rosnr_db: Option<f64>,
    pub status: CurveStatus,
}

pub fn random_bits(n: usize, seed: u64) -> Result<BitSequence> {
    let mut rng = rng_from(seed);
    BitSequence::explicit((0..n).map(|_| rng.random_range(0..2u8)).collect())
}

/// Runs the link and shifts the capture by a seed-derived delay, so the
/// receiver has to find the frame.
fn transmit(tx: &Waveform, drive: f64, link: &LinkConfig, seed: u64) -> Result<Waveform> {
    let rx = simulate_link(tx, drive, link, seed)?;
    let delay = (derive_seed(seed, &[0xde1a]) % rx.len() as u64) as usize;
    Ok(rx.rotated(delay))
}

/// Failures that make a point invalid rather than aborting the sweep.
fn is_measurement_failure(e: &Error) -> bool {
    matches!(e, Error::Sync { .. } | Error::Divergence(_) | Error::Estimation(_) | Error::Capacity { .. })
}

fn link_at(cfg: &SimConfig, osnr_db: f64) -> LinkConfig {
    let mut link = cfg.link.clone();
    if osnr_db.is_infinite() {
        link.ase_enabled = false;
    } else {
        link.osnr_db = osnr_db;
    }
    link
}

/// Loading table from a pinned CSV or from a probe of the link.
pub fn loading_for(format: FormatTag, cfg: &SimConfig, link: &LinkConfig, seed: u64) -> Result<LoadingTable> {
    let probe_seed = derive_seed(seed, &[stage::PROBE]);
    match format {
        FormatTag::Pam4 => Err(Error::config("PAM-4 has no loading table")),
        FormatTag::Dmt => {
            if let Some(path) = &cfg.dmt.loading_file {
                return LoadingTable::from_csv(&std::fs::read_to_string(path)?);
            }
            let (tx, fd) = dmt_probe_frame(&cfg.dmt)?;
            let rx = transmit(&tx, cfg.dmt.drive_rms_vpi, link, probe_seed)?;
            let table = LoadingTable::uniform(cfg.dmt.active_carriers.0, cfg.dmt.n_active(), 2)?;
            let snr = estimate_dmt_snr(&rx, &fd, &table, &cfg.dmt)?;
            Ok(chow_load(&snr, cfg.dmt.target_bits_per_symbol, cfg.dmt.gap_db)?
                .with_index_offset(cfg.dmt.active_carriers.0))
        }
        FormatTag::Cap => {
            if let Some(path) = &cfg.cap.loading_file {
                return LoadingTable::from_csv(&std::fs::read_to_string(path)?);
            }
            let table = cap_probe_table(&cfg.cap)?;
            let bits = prbs_generate(23, 0x0c_a95e, cfg.cap.payload_symbols * table.total_bits_per_symbol())?;
            let (tx, fd) = cap_modulate(&bits, &table, &cfg.cap)?;
            let rx = transmit(&tx, cfg.cap.drive_rms_vpi, link, probe_seed)?;
            let snr = estimate_cap_snr(&rx, &fd, &table, &cfg.cap)?;
            cap_load(&snr, cfg.cap.target_bits, cfg.cap.gap_db)
        }
    }
}

/// One frame: errors and bits counted.
fn run_frame(format: FormatTag, cfg: &SimConfig, link: &LinkConfig, table: Option<&LoadingTable>, seed: u64) -> Result<(u64, u64)> {
    let payload_seed = derive_seed(seed, &[stage::PAYLOAD]);
    match format {
        FormatTag::Pam4 => {
            let bits = random_bits(2 * cfg.pam4.payload_symbols, payload_seed)?;
            let (tx, fd) = pam4_build_frame(&bits, &cfg.pam4)?;
            let rx = transmit(&tx, cfg.pam4.drive_rms_vpi, link, seed)?;
            let out = pam4_receive(&rx, &fd, &cfg.pam4)?;
            count_bits(bits.bits(), out.bits.bits())
        }
        FormatTag::Dmt => {
            let table = table.expect("DMT frames need a loading table");
            let bits = random_bits(cfg.dmt.payload_symbols * table.total_bits_per_symbol(), payload_seed)?;
            let (tx, fd) = dmt_modulate(&bits, table, &cfg.dmt)?;
            let rx = transmit(&tx, cfg.dmt.drive_rms_vpi, link, seed)?;
            let out = dmt_receive(&rx, table, &fd, &cfg.dmt)?;
            count_bits(bits.bits(), out.bits.bits())
        }
        FormatTag::Cap => {
            let table = table.expect("CAP frames need a loading table");
            let bits = random_bits(cfg.cap.payload_symbols * table.total_bits_per_symbol(), payload_seed)?;
            let (tx, fd) = cap_modulate(&bits, table, &cfg.cap)?;
            let rx = transmit(&tx, cfg.cap.drive_rms_vpi, link, seed)?;
            let out = cap_receive(&rx, table, &fd, &cfg.cap)?;
            count_bits(bits.bits(), out.bits.bits())
        }
    }
}

fn measure(sc: &Scenario, base: &SimConfig, osnr_db: f64, seed: u64) -> Result<BerPoint> {
    let cfg = &sc.config(base);
    cfg.validate()?;
    let link = link_at(cfg, osnr_db);
    let table = match sc.format {
        FormatTag::Pam4 => None,
        f => Some(loading_for(f, cfg, &link, seed)?),
    };
    let (mut errors, mut bits) = (0u64, 0u64);
    let mut frame = 0u64;
    while errors < cfg.sweep.min_errors && bits < cfg.sweep.max_bits {
        let (e, b) = run_frame(sc.format, cfg, &link, table.as_ref(), derive_seed(seed, &[frame]))?;
        errors += e;
        bits += b;
        frame += 1;
    }
    Ok(BerPoint::measured(osnr_db, errors, bits))
}

/// Measures one OSNR point. Synchronization, convergence and loading
/// failures yield an invalid point.
pub fn run_point(sc: &Scenario, cfg: &SimConfig, osnr_db: f64, seed: u64) -> Result<BerPoint> {
    match measure(sc, cfg, osnr_db, seed) {
        Ok(p) => Ok(p),
        Err(e) if is_measurement_failure(&e) => {
            log::warn!("{} at {osnr_db} dB OSNR: {e}", sc.id);
            Ok(BerPoint::invalid(osnr_db))
        }
        Err(e) => Err(e),
    }
}

/// Seed of OSNR point `index` of a scenario.
pub fn point_seed(master: u64, sc: &Scenario, index: usize) -> u64 {
    derive_seed(master, &[key_hash(sc.seed_key()), index as u64])
}

fn grid<'a>(sc: &'a Scenario, cfg: &'a SimConfig) -> &'a [f64] {
    sc.osnr_db.as_deref().unwrap_or(&cfg.sweep.osnr_db)
}

fn finish(sc: &Scenario, points: Vec<BerPoint>, cfg: &SimConfig) -> BerCurve {
    let (rosnr_db, status) = curve_status(&points, cfg.sweep.target_ber);
    BerCurve { scenario: sc.clone(), points, rosnr_db, status }
}

/// Full BER curve of one scenario; points are evaluated in parallel with
/// schedule-independent seeds.
pub fn run_scenario(sc: &Scenario, cfg: &SimConfig) -> Result<BerCurve> {
    cfg.validate()?;
    let points = grid(sc, cfg)
        .par_iter()
        .enumerate()
        .map(|(i, &osnr)| run_point(sc, cfg, osnr, point_seed(cfg.sweep.seed, sc, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(sc, points, cfg))
}

/// Runs every scenario of a manifest.
pub fn run_comparison(manifest: &Manifest) -> Result<Vec<BerCurve>> {
    let cfg = manifest.config();
    cfg.validate()?;
    check_rates(&cfg)?;
    let jobs: Vec<(usize, usize, f64)> = manifest
        .scenario
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| grid(sc, &cfg).iter().enumerate().map(move |(i, &o)| (s, i, o)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, i, o)| {
            let sc = &manifest.scenario[s];
            run_point(sc, &cfg, o, point_seed(cfg.sweep.seed, sc, i))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut curves = Vec::with_capacity(manifest.scenario.len());
    let mut it = results.into_iter();
    for sc in &manifest.scenario {
        let pts = it.by_ref().take(grid(sc, &cfg).len()).collect();
        curves.push(finish(sc, pts, &cfg));
    }
    Ok(curves)
}

/// PAM-4 over an electrical AWGN channel at matched-filter symbol SNR
/// `snr_db` (symbol energy over noise variance per unit bandwidth), with the
/// same stopping rule as the optical sweeps.
pub fn run_pam4_awgn(cfg: &Pam4Config, snr_db: f64, seed: u64, min_errors: u64, max_bits: u64) -> Result<BerPoint> {
    let sps = cfg.samples_per_symbol()? as f64;
    let (mut errors, mut bits) = (0u64, 0u64);
    let mut frame = 0u64;
    while errors < min_errors && bits < max_bits {
        let fs = derive_seed(seed, &[frame]);
        let payload = random_bits(2 * cfg.payload_symbols, derive_seed(fs, &[stage::PAYLOAD]))?;
        let (tx, fd) = pam4_build_frame(&payload, cfg)?;
        let sigma = (tx.power() * sps / 10f64.powf(snr_db / 10.0)).sqrt();
        let mut rng = rng_from(derive_seed(fs, &[stage::AWGN]));
        let rx = add_awgn(&tx, sigma, &mut rng)?;
        let delay = (derive_seed(fs, &[0xde1a]) % rx.len() as u64) as usize;
        let out = pam4_receive(&rx.rotated(delay), &fd, cfg)?;
        let (e, b) = count_bits(payload.bits(), out.bits.bits())?;
        errors += e;
        bits += b;
        frame += 1;
    }
    Ok(BerPoint::measured(snr_db, errors, bits))
}
