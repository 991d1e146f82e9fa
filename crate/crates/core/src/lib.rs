//! Numerical library for the spectral-curve data of a quartic matrix model:
//! solves the branch-point/weight system defining the rational cover `R`,
//! evaluates the planar two-point and 1+1-point cumulants in closed form,
//! and verifies every identity against functional-equation residuals and an
//! independent power-series oracle.

pub mod cauchy;
pub mod combinatorics;
pub mod correlators;
pub mod curve;
pub mod error;
pub mod series;
pub mod spectral;
pub mod verify;

pub use cauchy::{cauchy_inverse, cauchy_sums, multiply_back_error, verify_schechter, CauchyInverse, CauchyNodes, SchechterReport};
pub use correlators::{g0_diag, g0_oneone, g0_oneone_at_node, g0_pair, g0_pair_at_node, g_matrix, CorrelatorValue, OneOneFormula, PairFormula};
pub use curve::{balanced_product, AlphaRoots, PreimageFan, RationalR};
pub use error::{Error, Result};
pub use series::SeriesJet;
pub use spectral::{jacobian, residuals, series_spectral, solve_spectral, ModelInput, SolveOptions, SpectralData};
pub use verify::{compare_series, invert_r, residual_extension, residual_fractions, residual_lattice_2pt, residual_oneone_alpha, residual_oneone_functional, residual_reflection, sample_points, series_closed_form, series_oracle, ResidualReport};
