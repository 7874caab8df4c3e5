use imdd_core::cap::{cap_modulate, cap_probe_table, CapConfig};
use imdd_core::channel::{ideal_link, simulate_link};
use imdd_core::dmt::{dmt_modulate, DmtConfig, LoadingTable};
use imdd_core::pam4::{pam4_build_frame, Pam4Config};
use imdd_core::rx::{cap_receive, dmt_receive, pam4_receive};
use imdd_core::signal::{prbs_generate, Waveform};

fn errors(a: &[u8], b: &[u8]) -> usize {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn delayed(w: &Waveform, d: usize) -> Waveform {
    w.rotated(d)
}

#[test]
fn pam4_noiseless_loopback() {
    let cfg = Pam4Config { payload_symbols: 8192, ..Default::default() };
    let bits = prbs_generate(23, 1, 2 * cfg.payload_symbols).unwrap();
    let (tx, fd) = pam4_build_frame(&bits, &cfg).unwrap();
    let rx = simulate_link(&tx, cfg.drive_rms_vpi, &ideal_link(), 1).unwrap();
    let out = pam4_receive(&delayed(&rx, 1234), &fd, &cfg).unwrap();
    assert_eq!(out.sync.offset, 1234);
    assert_eq!(errors(out.bits.bits(), bits.bits()), 0);
}

#[test]
fn dmt_noiseless_loopback() {
    let cfg = DmtConfig { payload_symbols: 40, ..Default::default() };
    let table = LoadingTable::uniform(1, cfg.n_active(), 2).unwrap();
    let bits = prbs_generate(23, 7, 40 * table.total_bits_per_symbol()).unwrap();
    let (tx, fd) = dmt_modulate(&bits, &table, &cfg).unwrap();
    let rx = simulate_link(&tx, 0.02, &ideal_link(), 2).unwrap();
    let out = dmt_receive(&delayed(&rx, 777), &table, &fd, &cfg).unwrap();
    assert_eq!(out.sync.offset, 777);
    assert_eq!(errors(out.bits.bits(), bits.bits()), 0);
    assert!(out.snr_db.iter().all(|&s| s >= 40.0), "{:?}", out.snr_db.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn cap_noiseless_loopback() {
    let cfg = CapConfig { payload_symbols: 1024, ..Default::default() };
    let table = cap_probe_table(&cfg).unwrap();
    let bits = prbs_generate(23, 9, 1024 * table.total_bits_per_symbol()).unwrap();
    let (tx, fd) = cap_modulate(&bits, &table, &cfg).unwrap();
    let rx = simulate_link(&tx, cfg.drive_rms_vpi, &ideal_link(), 3).unwrap();
    let out = cap_receive(&delayed(&rx, 4321), &table, &fd, &cfg).unwrap();
    assert_eq!(out.sync.offset, 4321);
    assert_eq!(errors(out.bits.bits(), bits.bits()), 0);
}
