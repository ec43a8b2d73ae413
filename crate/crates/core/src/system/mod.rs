//! Scenario configuration, geometry, channel generation and blockage.

pub mod channel;
pub mod config;
pub mod dump;
pub mod seeds;
pub mod topology;

pub use channel::{
    draw_blockage_mask, generate_channels, generate_channels_with, ris_correlation, BlockageMask,
    CMatrix, CVector, ChannelState, LinkModels,
};
pub use config::{db_to_linear, dbm_to_watts, Pathloss, PowerLaw, SystemConfig};
pub use seeds::{replication_seed, SeedStreams, Stream};
pub use topology::{generate_topology, Topology};
