//! One-dimensional limit and corrector problems on the star graph.
//!
//! Cell-centred finite volumes on each edge, implicit Euler in time and Newton's
//! method per step. Regime A couples the edges through a shared vertex unknown and a
//! flux-balance row; regimes B and C solve independent Dirichlet problems.

pub mod constants;
pub mod corrector;
pub mod fv;
pub mod higher;
pub mod limit;
pub mod pairing;
pub mod solution;

pub use constants::CouplingConstants;
pub use corrector::{
    compute_d1_star, d1_star_terms, solve_corrector_omega1_a, solve_corrector_omega1_c, D1Terms,
    JumpMethod,
};
pub use fv::{implicit_step, EdgeOperator, StarDiscretization, StepResult, StepSpec, VertexCondition};
pub use higher::{
    compute_v_values, eval_k, eval_k_map, solve_higher_terms_b, vertex_slopes, VFormula, VInputs,
};
pub use limit::{
    assemble_rhs_f0hat, fill_d0_star, solve_limit_omega0, vertex_residual_a, GraphContext,
};
pub use pairing::{apply_weak, graph_operator_pairing, seminorm_sq, GraphState};
pub use solution::{EdgeField, GraphSolution, OrderTag};
