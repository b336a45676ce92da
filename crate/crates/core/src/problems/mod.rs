//! Benchmark problems and synthetic paths with known behavior.

mod benchmarks;
mod ode;
mod synthetic;

pub use benchmarks::{
    example1, example2, example2_costate_oracle, example3, example3_with_target, problem_by_name, problem_names,
    BenchmarkProblem, Reference,
};
pub use ode::{rk4_integrate, OdeRhs, OdeSystem};
pub use synthetic::synthetic_path;
