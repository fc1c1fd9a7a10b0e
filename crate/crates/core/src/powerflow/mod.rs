//! Admittance assembly, Newton–Raphson AC power flow, Jacobian and branch flows.

mod flows;
mod newton;
mod sparse;
mod ybus;

pub use flows::{branch_flows, BranchFlow};
pub use newton::{
    calc_injections, effective_kinds, injection_derivatives, jacobian, jacobian_with,
    scheduled_injections, solve_pf, PfError, PfOptions, PfSolution, PfStart,
};
pub use sparse::SparseMatrix;
pub use ybus::{branch_admittance, build_ybus, AdmittanceMatrix};
