//! Wireless channel abstraction: Rayleigh fading over a log-distance path
//! loss, discretized to a CQI in 0..=15, mapped to deliverable bits per
//! PRB per TTI.
//!
//! The fading draw is the only stochastic element; everything downstream
//! of the SNR is a deterministic table lookup, so traces are reproducible
//! from the seed alone.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral efficiencies (bits per resource element) for CQI 1..=15,
/// from the standard LTE CQI table (QPSK 78/1024 up to 64QAM 948/1024).
pub const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

/// Resource elements per PRB per TTI: 12 subcarriers x 14 OFDM symbols.
pub const RES_PER_PRB: u32 = 168;

fn default_thresholds() -> Vec<f64> {
    // evenly spaced -6.7 dB .. +19.5 dB
    (0..15).map(|i| -6.7 + i as f64 * (26.2 / 14.0)).collect()
}

fn default_efficiency() -> Vec<f64> {
    CQI_EFFICIENCY.to_vec()
}

fn default_res_per_prb() -> u32 {
    RES_PER_PRB
}

fn default_tx_power() -> f64 {
    46.0
}

fn default_noise_floor() -> f64 {
    -101.0
}

fn default_pathloss_a() -> f64 {
    128.1
}

fn default_pathloss_b() -> f64 {
    37.6
}

/// Channel model parameters.
///
/// Defaults describe a macro cell on a 20 MHz carrier: 46 dBm transmit
/// power against the -101 dBm thermal noise floor and the urban-macro
/// path loss `128.1 + 37.6 log10(d_km)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: f64,
    #[serde(default = "default_noise_floor")]
    pub noise_floor_dbm: f64,
    /// Path loss intercept in dB.
    #[serde(default = "default_pathloss_a")]
    pub pathloss_a_db: f64,
    /// Path loss slope in dB per decade of distance (km).
    #[serde(default = "default_pathloss_b")]
    pub pathloss_b_db: f64,
    /// SNR (dB) floors for CQI 1..=15, strictly ascending.
    #[serde(default = "default_thresholds")]
    pub cqi_thresholds_db: Vec<f64>,
    /// Bits per resource element for CQI 1..=15, strictly ascending.
    #[serde(default = "default_efficiency")]
    pub cqi_efficiency: Vec<f64>,
    #[serde(default = "default_res_per_prb")]
    pub res_per_prb: u32,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: default_tx_power(),
            noise_floor_dbm: default_noise_floor(),
            pathloss_a_db: default_pathloss_a(),
            pathloss_b_db: default_pathloss_b(),
            cqi_thresholds_db: default_thresholds(),
            cqi_efficiency: default_efficiency(),
            res_per_prb: default_res_per_prb(),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cqi_thresholds_db.len() != 15 || self.cqi_efficiency.len() != 15 {
            return Err(Error::Config(
                "cqi_thresholds_db and cqi_efficiency must have 15 entries".into(),
            ));
        }
        if self.cqi_thresholds_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cqi thresholds must be strictly ascending".into()));
        }
        if self.cqi_efficiency.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cqi efficiencies must be strictly ascending".into()));
        }
        if self.cqi_efficiency[0] <= 0.0 {
            return Err(Error::Config("cqi efficiencies must be positive".into()));
        }
        if self.res_per_prb == 0 {
            return Err(Error::Config("res_per_prb must be positive".into()));
        }
        Ok(())
    }

    /// Deterministic part of the link budget: mean SNR before fading.
    pub fn mean_snr_db(&self, distance_km: f64) -> f64 {
        let pathloss = self.pathloss_a_db + self.pathloss_b_db * distance_km.log10();
        self.tx_power_dbm - pathloss - self.noise_floor_dbm
    }
}

/// Per-TTI channel state of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeChannelState {
    pub distance_km: f64,
    pub snr_db: f64,
    pub cqi: u8,
    /// Deliverable bits per PRB per TTI; zero means unservable this TTI.
    pub bits_per_prb: u32,
}

/// Draws one Rayleigh-faded SNR sample in dB.
///
/// The fading power is a unit-mean exponential variate, so the linear SNR
/// fluctuates around the path-loss mean with occasional deep fades.
pub fn sample_snr<R: Rng + ?Sized>(cfg: &ChannelConfig, distance_km: f64, rng: &mut R) -> Result<f64> {
    if distance_km <= 0.0 || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance_km} km"
        )));
    }
    // X = -ln(U'), U' uniform on (0, 1]: unit-mean exponential
    let u: f64 = rng.random();
    let fading = -(1.0 - u).ln();
    Ok(cfg.mean_snr_db(distance_km) + 10.0 * fading.log10())
}

/// Largest CQI whose threshold the SNR meets; 0 below the first threshold.
pub fn snr_to_cqi(cfg: &ChannelConfig, snr_db: f64) -> u8 {
    let mut cqi = 0;
    for (i, &t) in cfg.cqi_thresholds_db.iter().enumerate() {
        if snr_db >= t {
            cqi = (i + 1) as u8;
        } else {
            break;
        }
    }
    cqi
}

/// Transport capacity of one PRB in one TTI at the given CQI.
pub fn bits_per_prb(cfg: &ChannelConfig, cqi: u8) -> Result<u32> {
    match cqi {
        0 => Ok(0),
        1..=15 => {
            let eff = cfg.cqi_efficiency[usize::from(cqi) - 1];
            Ok((eff * f64::from(cfg.res_per_prb)).round() as u32)
        }
        _ => Err(Error::Domain(format!("cqi {cqi} outside 0..=15"))),
    }
}

/// Samples a full channel observation: SNR draw, CQI discretization, and
/// PRB capacity.
pub fn observe<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    distance_km: f64,
    rng: &mut R,
) -> Result<UeChannelState> {
    let snr_db = sample_snr(cfg, distance_km, rng)?;
    let cqi = snr_to_cqi(cfg, snr_db);
    Ok(UeChannelState {
        distance_km,
        snr_db,
        cqi,
        bits_per_prb: bits_per_prb(cfg, cqi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_cfg() -> ChannelConfig {
        ChannelConfig::default()
    }

    #[test]
    fn link_budget_at_one_km() {
        // 46 - 128.1 - (-101) = 18.9 dB with fading disabled
        let cfg = reference_cfg();
        assert!((cfg.mean_snr_db(1.0) - 18.9).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_under_a_seed() {
        let cfg = reference_cfg();
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = sample_snr(&cfg, 0.4, &mut a).unwrap();
            let y = sample_snr(&cfg, 0.4, &mut b).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn sample_snr_rejects_bad_distance() {
        let cfg = ChannelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_snr(&cfg, 0.0, &mut rng).is_err());
        assert!(sample_snr(&cfg, -1.0, &mut rng).is_err());
    }

    #[test]
    fn cqi_boundaries() {
        let cfg = ChannelConfig::default();
        assert_eq!(snr_to_cqi(&cfg, -100.0), 0);
        assert_eq!(snr_to_cqi(&cfg, 100.0), 15);
        // exactly on a threshold -> that CQI
        for (i, &t) in cfg.cqi_thresholds_db.iter().enumerate() {
            assert_eq!(snr_to_cqi(&cfg, t), (i + 1) as u8);
        }
    }

    #[test]
    fn bits_per_prb_table() {
        let cfg = ChannelConfig::default();
        assert_eq!(bits_per_prb(&cfg, 0).unwrap(), 0);
        assert_eq!(bits_per_prb(&cfg, 1).unwrap(), 26); // 0.1523 * 168
        assert_eq!(bits_per_prb(&cfg, 15).unwrap(), 933); // 5.5547 * 168
        assert!(bits_per_prb(&cfg, 16).is_err());
        let mut prev = 0;
        for cqi in 1..=15u8 {
            let b = bits_per_prb(&cfg, cqi).unwrap();
            assert!(b > prev, "bits per PRB must increase with cqi");
            prev = b;
        }
    }

    #[test]
    fn fading_power_has_unit_mean() {
        // recover X from the dB term and average it
        let cfg = reference_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mean_db = cfg.mean_snr_db(0.5);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let snr = sample_snr(&cfg, 0.5, &mut rng).unwrap();
            sum += 10f64.powf((snr - mean_db) / 10.0);
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "fading mean {mean}");
    }
}
