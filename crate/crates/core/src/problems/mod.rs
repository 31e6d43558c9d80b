//! Benchmark problems with exact optimality diagnostics.

mod matrix_game;
mod quadratic;

pub use matrix_game::{gen_matrix_game, matgame_gap, GenerationTrace, MatrixGame, Normalization};
pub use quadratic::{error_to_solution, make_quadratic_saddle, QuadraticSaddle};
