//! Hardware description file.
//!
//! ```json
//! {
//!   "buffers": { "ifm": 65536, "wgh": 65536, "ofm": 65536 },
//!   "sram":    { "banks": 8, "rows_per_bank": 8192, "word_bytes": 1 },
//!   "dram":    { "channels": 1, "ranks_per_channel": 1, "chips_per_rank": 1,
//!                "banks_per_chip": 8, "rows_per_bank": 32768, "columns_per_row": 1024,
//!                "word_bits": 8, "burst_length": 8 },
//!   "timing":  { "t_rcd": 11, "t_rp": 11, "cl": 11, "t_bl": 4, "clock_mhz": 800.0, "queue_depth": 32 },
//!   "energy":  { "e_act": 1312.5, "e_pre": 721.875, "e_rd": 117.1875, "e_wr": 121.875, "p_stby": 84.375 }
//! }
//! ```
//!
//! Buffer sizes are bytes, timing is in bus cycles, energies in pJ (per
//! command, per transferred word for `e_rd`/`e_wr`, per cycle for `p_stby`).
//! Every section may be omitted to take its default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dram_map::DramGeometry;
use crate::dram_sim::DramTiming;
use crate::dse::BufferSizes;
use crate::energy_model::EnergyParams;
use crate::error::{Error, Result};
use crate::sram_map::SramGeometry;

const DEFAULT_HARDWARE: &str = include_str!("../data/hardware_default.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct HardwareConfig {
    pub buffers: BufferSizes,
    pub sram: SramGeometry,
    pub dram: DramGeometry,
    pub timing: DramTiming,
    pub energy: EnergyParams,
}

impl HardwareConfig {
    /// The shipped default file.
    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_HARDWARE).expect("bundled hardware file is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let hw: HardwareConfig = serde_json::from_str(text)?;
        hw.validate()?;
        Ok(hw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let hw: HardwareConfig = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        hw.validate()?;
        Ok(hw)
    }

    pub fn validate(&self) -> Result<()> {
        self.dram.validate()?;
        self.sram.validate()?;
        self.timing.validate()?;
        let b = &self.buffers;
        if b.ifm == 0 || b.wgh == 0 || b.ofm == 0 {
            return Err(Error::InvalidConfig("buffer sizes must be > 0".into()));
        }
        let e = &self.energy;
        if [e.e_act, e.e_pre, e.e_rd, e.e_wr, e.p_stby].iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidConfig("energy parameters must be >= 0".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hardware config serializes")
    }
}
