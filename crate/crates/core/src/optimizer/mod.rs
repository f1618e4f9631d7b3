//! Inner machinery shared by both ADMM schemes: the design-model outputs,
//! the waveform and filter subproblems, the closed-form auxiliary
//! projections and the dual ascent step.

mod model;
mod projections;
mod state;
mod vsolve;
mod xsolve;

pub use model::{matched_filter, model_outputs, ModelOutputs, RadarModel};
pub use projections::{
    project_mainlobe_floor, project_modulus_cap, project_sidelobe_blocks, project_sidelobe_caps,
    project_unit_sphere,
};
pub use state::{
    dual_update, AdmmState, DesignConfig, Residuals, Scheme, SidelobeMode, ThresholdRatios,
};
pub use vsolve::{solve_v_subproblem, FilterMaps, FilterSolution, FilterTargets};
pub use xsolve::{project_columns, solve_x_subproblem, XSolution, XSubproblem, XWarmStart};
