//! End-to-end outage scenarios, Monte Carlo replication and the weight and
//! RIS-size sweeps.

mod persist;
mod report;
mod run;
mod scenario;
mod sweeps;

pub use persist::{
    element_dir_name, read_meta, trace_file_name, trace_paths, write_element_sweep, write_result,
    write_weight_sweep, ReplicationMeta, ResultMeta, FORMAT, WEIGHTS_HEADER,
};
pub use report::{element_table, summary_table, weight_table};
pub use run::{
    run_replication, run_scenario, Aggregate, ExperimentResult, ReplicationRun,
    ReplicationScores, ReplicationSummary, Stat,
};
pub use scenario::{Mode, Scenario, TimeModel};
pub use sweeps::{
    named_setups, score_weights, sweep_elements, sweep_weights, weight_grid, ElementPoint,
    ElementSweep, WeightRow, WeightSweep,
};
