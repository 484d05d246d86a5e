//! Order parameters and exact reference solutions.

mod crossover;
mod dicke;
mod distribution;
mod lindblad;

pub use crossover::{crossing, crossover_sharpness, dicke_crossover, log_grid, CrossoverCurve, MIN_POINTS_PER_DECADE};
pub use dicke::{dicke_ground_state, dicke_hamiltonian, DickeGroundState, MAX_DICKE_DIM};
pub use distribution::{
    binder_cumulant, binomial_weights, magnetization, p_fm, paramagnetic_binder, paramagnetic_magnetization,
    scale_order_params, OrderParams, SpinDistribution,
};
pub use lindblad::{evolve_density, lindblad_oracle, LindbladSeries, MAX_ORACLE_IONS};
