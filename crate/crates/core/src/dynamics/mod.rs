//! Spin dynamics under the transverse-field Ising Hamiltonian with quantum-jump noise.

mod ensemble;
mod state;
mod trajectory;

pub use ensemble::{run_ensemble, EnsembleStats, ObservablePoint, SimConfig};
pub use state::{energy, hamiltonian_apply, initial_state, ising_diagonal, SpinState, KHZ_TO_RAD_PER_US};
pub use trajectory::{
    evolve_state, evolve_trajectory, max_step, run_trajectory, step_at, Branching, JumpChannel, JumpEvent, NoiseModel,
    RampSchedule, TrajectoryRecord, TrajectorySeed, MAX_PHASE_PER_STEP,
};
