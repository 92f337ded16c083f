//! Experiment orchestration: configuration, execution, persistence, ingest
//! of external counts and plot data.

mod config;
mod ingest;
mod plot;
mod record;
mod run;

pub use config::{parse_qubit_range, ExperimentConfig, Mode, NoiseSpec};
pub use ingest::{
    analyze_external, ingest_external_counts, load_external_counts, ExternalCircuit, ExternalCounts, ExternalRun,
    ExternalSize, EXTERNAL_KIND,
};
pub use plot::{emit_plot_data, PlotFiles, CONVERGENCE_RESAMPLES};
pub use record::{
    determine_volume, CircuitRecord, ExperimentRecord, ScaledRun, SizeRecord, StatisticsBlock, VolumeResult,
    VolumeSummary, RECORD_KIND, SCHEMA_VERSION,
};
pub use run::{circuit_seed, run_experiment, run_experiment_with, simulate_circuit, RunOptions};
