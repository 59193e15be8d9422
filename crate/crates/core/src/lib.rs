//! Tiling search, data mapping and trace-driven DRAM evaluation for CNN
//! accelerators.
//!
//! The flow for one network is:
//!
//! 1. [`dse::search_network`] picks tiling factors and a loop schedule per
//!    layer, minimising DRAM words under the on-chip buffer limits
//!    ([`access_model`] is the cost function).
//! 2. [`dram_map::allocate_regions`] lays out each layer's data in DRAM.
//! 3. [`trace_gen::generate_layer_trace`] walks the schedule and streams
//!    DRAM requests into a [`trace_gen::TraceSink`].
//! 4. [`dram_sim::Simulator`] classifies row-buffer hits, misses and
//!    conflicts and counts cycles; [`energy_model`] turns the statistics
//!    into energy.
//!
//! [`pipeline`] wires these steps together and writes the CSV reports.

pub mod access_model;
pub mod config;
pub mod dram_map;
pub mod dram_sim;
pub mod dse;
pub mod energy_model;
pub mod error;
pub mod net_model;
pub mod pipeline;
pub mod sram_map;
pub mod tiling;
pub mod trace_gen;

pub use access_model::{layer_accesses, AccessCounts, Loop, Mode, Schedule};
pub use config::HardwareConfig;
pub use dram_map::{DramGeometry, PhysicalAddress};
pub use dram_sim::{simulate, DramTiming, SimStats};
pub use dse::{search_layer, search_network, LayerPlanResult, SearchConfig};
pub use energy_model::{energy, EnergyParams, EnergyReport};
pub use error::{Error, Result};
pub use net_model::{DataType, LayerShape, NetworkModel};
pub use tiling::{build_plan, TilingFactors, TilingPlan};
pub use trace_gen::{count_trace, BurstMode, DramRequest, TraceSink};
