//! 802.11ac MCS ladders: minimum SNR per index and the matching PHY rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VHT160_GI800_1SS: &str = "vht160-gi800-1ss";
pub const VHT20_GI800_1SS: &str = "vht20-gi800-1ss";

/// Default receiver thresholds for MCS 0..=8, dB.
pub const DEFAULT_MIN_SNR_DB: [f64; 9] = [5.0, 8.0, 12.0, 15.0, 19.0, 23.0, 25.0, 27.0, 30.0];

// Single spatial stream, 800 ns guard interval, Mbit/s.
const VHT160_RATES_MBPS: [f64; 9] = [58.5, 117.0, 175.5, 234.0, 351.0, 468.0, 526.5, 585.0, 702.0];
const VHT20_RATES_MBPS: [f64; 9] = [6.5, 13.0, 19.5, 26.0, 39.0, 52.0, 58.5, 65.0, 78.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    #[serde(rename = "mcs_i")]
    pub index: u32,
    pub min_snr_db: f64,
    pub phy_rate_bps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    pub label: String,
    pub entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(label: impl Into<String>, entries: Vec<McsEntry>) -> Result<Self> {
        let table = McsTable {
            label: label.into(),
            entries,
        };
        table.validate()?;
        Ok(table)
    }

    /// Built-in table by label.
    pub fn builtin(label: &str) -> Option<Self> {
        let rates = match label {
            VHT160_GI800_1SS => &VHT160_RATES_MBPS,
            VHT20_GI800_1SS => &VHT20_RATES_MBPS,
            _ => return None,
        };
        let entries = rates
            .iter()
            .zip(DEFAULT_MIN_SNR_DB)
            .enumerate()
            .map(|(i, (&mbps, snr))| McsEntry {
                index: i as u32,
                min_snr_db: snr,
                phy_rate_bps: mbps * 1e6,
            })
            .collect();
        Some(McsTable {
            label: label.to_string(),
            entries,
        })
    }

    pub fn builtin_labels() -> [&'static str; 2] {
        [VHT160_GI800_1SS, VHT20_GI800_1SS]
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::config("mcs_table.entries", "table is empty"));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if !e.min_snr_db.is_finite() || !(e.phy_rate_bps.is_finite() && e.phy_rate_bps > 0.0) {
                return Err(Error::config(
                    format!("mcs_table.entries[{i}]"),
                    "min_snr_db must be finite and phy_rate_bps positive",
                ));
            }
        }
        for (i, w) in self.entries.windows(2).enumerate() {
            let path = format!("mcs_table.entries[{}]", i + 1);
            if w[1].index <= w[0].index {
                return Err(Error::config(path, "indices must be strictly increasing"));
            }
            if w[1].min_snr_db <= w[0].min_snr_db {
                return Err(Error::config(path, "min_snr_db must be strictly increasing"));
            }
            if w[1].phy_rate_bps <= w[0].phy_rate_bps {
                return Err(Error::config(path, "phy_rate_bps must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn entry(&self, index: u32) -> Result<&McsEntry> {
        self.entries
            .iter()
            .find(|e| e.index == index)
            .ok_or(Error::UnknownMcs(index))
    }

    /// Highest PHY rate in the table.
    pub fn top_rate_bps(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.phy_rate_bps)
    }
}

/// Highest entry whose threshold is at or below `snr_db` (ideal rate control).
pub fn select_mcs(snr_db: f64, table: &McsTable) -> Option<&McsEntry> {
    table.entries.iter().rev().find(|e| e.min_snr_db <= snr_db)
}
