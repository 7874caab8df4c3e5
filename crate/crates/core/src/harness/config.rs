use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cap::CapConfig;
use crate::channel::LinkConfig;
use crate::dmt::DmtConfig;
use crate::error::{Error, Result};
use crate::pam4::Pam4Config;
use crate::rx::FormatTag;

use super::ber::FEC_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub osnr_db: Vec<f64>,
    pub seed: u64,
    /// Counting stops once this many errors have been seen...
    pub min_errors: u64,
    /// ...or once this many bits have been counted.
    pub max_bits: u64,
    pub target_ber: f64,
    /// Net line rate every format must carry.
    pub line_rate: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            osnr_db: (14..=40).map(f64::from).collect(),
            seed: 1,
            min_errors: 100,
            max_bits: 2_000_000,
            target_ber: FEC_THRESHOLD,
            line_rate: 56e9,
        }
    }
}

/// Everything one run needs, as read from a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub link: LinkConfig,
    pub pam4: Pam4Config,
    pub dmt: DmtConfig,
    pub cap: CapConfig,
    pub sweep: SweepConfig,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        self.pam4.validate()?;
        self.dmt.validate()?;
        self.cap.validate()?;
        if self.sweep.osnr_db.is_empty() {
            return Err(Error::config("OSNR grid is empty"));
        }
        if self.sweep.osnr_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("OSNR grid must be strictly ascending"));
        }
        if !(self.sweep.target_ber > 0.0 && self.sweep.target_ber < 0.5) {
            return Err(Error::config("target BER must lie in (0, 0.5)"));
        }
        if self.sweep.max_bits == 0 {
            return Err(Error::config("bit budget must be positive"));
        }
        check_rates(self)
    }

    pub fn gross_bit_rate(&self, format: FormatTag) -> f64 {
        match format {
            FormatTag::Pam4 => self.pam4.gross_bit_rate(),
            FormatTag::Dmt => self.dmt.bit_rate(self.dmt.target_bits_per_symbol),
            FormatTag::Cap => self.cap.bit_rate(self.cap.target_bits),
        }
    }

    pub fn drive_rms_vpi(&self, format: FormatTag) -> f64 {
        match format {
            FormatTag::Pam4 => self.pam4.drive_rms_vpi,
            FormatTag::Dmt => self.dmt.drive_rms_vpi,
            FormatTag::Cap => self.cap.drive_rms_vpi,
        }
    }
}

/// Every format carries the configured line rate: PAM-4 and CAP exactly, DMT
/// with the fewest bits per symbol that reach it.
pub fn check_rates(cfg: &SimConfig) -> Result<()> {
    let rate = cfg.sweep.line_rate;
    let pam4 = cfg.pam4.gross_bit_rate();
    let cap = cfg.cap.bit_rate(cfg.cap.target_bits);
    let dmt_bits = cfg.dmt.target_bits_per_symbol;
    let need = cfg.dmt.bits_for_rate(rate);
    if (pam4 - rate).abs() > 1e-6 * rate {
        return Err(Error::config(format!("PAM-4 carries {pam4} bit/s, not {rate}")));
    }
    if (cap - rate).abs() > 1e-6 * rate {
        return Err(Error::config(format!("CAP carries {cap} bit/s, not {rate}")));
    }
    if dmt_bits != need {
        return Err(Error::config(format!(
            "DMT needs exactly {need} bits per symbol for {rate} bit/s, configured {dmt_bits}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Dsb,
    Vsb,
}

impl Sideband {
    pub fn name(self) -> &'static str {
        match self {
            Sideband::Dsb => "dsb",
            Sideband::Vsb => "vsb",
        }
    }
}

fn default_detuning() -> f64 {
    20e9
}

/// One curve of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(with = "format_tag")]
    pub format: FormatTag,
    pub sideband: Sideband,
    #[serde(default)]
    pub fiber_km: f64,
    #[serde(default)]
    pub dcm: bool,
    /// Laser detuning used when `sideband` is VSB.
    #[serde(default = "default_detuning")]
    pub detuning_hz: f64,
    /// Scenarios sharing a key draw identical payloads and noise.
    #[serde(default)]
    pub seed_key: Option<String>,
    /// Overrides the sweep's OSNR grid.
    #[serde(default)]
    pub osnr_db: Option<Vec<f64>>,
    /// Overrides the CAP band count.
    #[serde(default)]
    pub cap_bands: Option<usize>,
}

impl Scenario {
    pub fn new(id: &str, format: FormatTag, sideband: Sideband, fiber_km: f64, dcm: bool) -> Self {
        Self {
            id: id.into(),
            format,
            sideband,
            fiber_km,
            dcm,
            detuning_hz: default_detuning(),
            seed_key: None,
            osnr_db: None,
            cap_bands: None,
        }
    }

    pub fn seed_key(&self) -> &str {
        self.seed_key.as_deref().unwrap_or(&self.id)
    }

    /// Configuration with this scenario's overrides applied.
    pub fn config(&self, base: &SimConfig) -> SimConfig {
        let mut cfg = base.clone();
        cfg.link = self.link(&base.link);
        if let Some(n) = self.cap_bands {
            cfg.cap.n_bands = n;
        }
        cfg
    }

    /// Link configuration of this scenario.
    pub fn link(&self, base: &LinkConfig) -> LinkConfig {
        LinkConfig {
            fiber_length_km: self.fiber_km,
            dcm_enabled: self.dcm,
            laser_detuning_hz: match self.sideband {
                Sideband::Dsb => 0.0,
                Sideband::Vsb => self.detuning_hz,
            },
            ..base.clone()
        }
    }
}

mod format_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rx::FormatTag;

    pub fn serialize<S: Serializer>(f: &FormatTag, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(f.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FormatTag, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A configuration plus the scenarios to compare.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub link: LinkConfig,
    pub pam4: Pam4Config,
    pub dmt: DmtConfig,
    pub cap: CapConfig,
    pub sweep: SweepConfig,
    pub scenario: Vec<Scenario>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        m.config().validate()?;
        let mut ids: Vec<&str> = m.scenario.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("scenario ids must be unique"));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn config(&self) -> SimConfig {
        SimConfig {
            link: self.link.clone(),
            pam4: self.pam4.clone(),
            dmt: self.dmt.clone(),
            cap: self.cap.clone(),
            sweep: self.sweep.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_carry_the_line_rate() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.gross_bit_rate(FormatTag::Pam4), 56e9);
        assert_eq!(cfg.gross_bit_rate(FormatTag::Cap), 56e9);
        assert!(cfg.gross_bit_rate(FormatTag::Dmt) >= 56e9);
        assert_eq!(cfg.dmt.target_bits_per_symbol, 347);
    }

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let cfg = SimConfig::from_toml(
            "[link]\nfiber_length_km = 80.0\nosnr_db = 25.0\n[pam4]\nffe_taps = 13\n[sweep]\nosnr_db = [20.0, 21.0]\n",
        )
        .unwrap();
        assert_eq!(cfg.link.fiber_length_km, 80.0);
        assert_eq!(cfg.pam4.ffe_taps, 13);
        assert!(SimConfig::from_toml("[link]\nfibre = 1\n").is_err());
        assert!(SimConfig::from_toml("[bogus]\n").is_err());
        assert!(SimConfig::from_toml("[dmt]\ntarget_bits_per_symbol = 346\n").is_err());
        assert!(SimConfig::from_toml("[cap]\ntarget_bits = 27\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = SimConfig::default();
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn manifest_scenarios() {
        let m = Manifest::from_toml(
            "[[scenario]]\nid = \"a\"\nformat = \"pam4\"\nsideband = \"dsb\"\n\
             [[scenario]]\nid = \"b\"\nformat = \"dmt\"\nsideband = \"vsb\"\nfiber_km = 80.0\n",
        )
        .unwrap();
        assert_eq!(m.scenario.len(), 2);
        let l = m.scenario[1].link(&m.link);
        assert_eq!((l.fiber_length_km, l.laser_detuning_hz), (80.0, 20e9));
        assert!(Manifest::from_toml("[[scenario]]\nid = \"a\"\nformat = \"qam\"\nsideband = \"dsb\"\n").is_err());
    }
}
