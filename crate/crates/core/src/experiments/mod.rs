//! Simulation harness, the Platt-scaling counterexample and closed-form
//! example distributions.

mod constructions;
mod counterexample;
mod simulation;

pub use constructions::{
    make_perturbed_constant, make_separation_example, make_staircase, sample_atoms, sample_staircase, separation_dce,
    staircase_mean,
};
pub use counterexample::{
    platt_counterexample, population_platt_certificate, PlattCertificate, CERTIFICATE_MARGIN, COUNTEREXAMPLE_FORECASTS,
};
pub use simulation::{
    conditional_mean, run_simulation, run_single, write_records_csv, SimulationConfig, SimulationOutcome,
    SimulationRunRecord,
};
