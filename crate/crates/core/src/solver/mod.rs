pub mod flow;
pub mod ground_state;
pub mod krylov;
pub mod newton;

pub use flow::{projected_flow, FlowOptions, FlowOutcome};
pub use ground_state::{
    classify_state, default_seeds, ground_state_set, pohozaev_residual, scalar_ground_state,
    solve_seed, solve_seeds, system_ground_state, Classification, GroundState, GroundStateSummary,
    SeedKind, SeedSpec, SolverOptions,
};
pub use newton::{newton_refine, NewtonOptions, NewtonOutcome};
