//! Fixtures shared by the solver benchmarks.

use fracrom::experiments::default_offline;
use fracrom::stiffness::StiffnessMatrix;
use fracrom::{BenchmarkCase, CaseId, ProblemSpec, RomOperators};

/// Problem at `beta` on the default grid of `id`.
pub fn spec(id: CaseId, beta: f64) -> ProblemSpec {
    BenchmarkCase::new(id).spec(beta).expect("benchmark problem")
}

/// Step matrix `I + gamma A` of a benchmark problem.
pub fn step_matrix(id: CaseId, gamma: f64) -> StiffnessMatrix {
    spec(id, 0.5).stiffness().expect("stiffness").step_matrix(gamma, None)
}

/// Reduced model with the default samples, rank and DEIM size.
pub fn offline(id: CaseId) -> RomOperators {
    default_offline(&BenchmarkCase::new(id)).expect("offline phase").rom
}

/// Smooth right-hand side of length `n`.
pub fn rhs(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i as f64 + 1.0) * 0.37).sin()).collect()
}
