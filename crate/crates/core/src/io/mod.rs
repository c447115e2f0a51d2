//! File formats: CSV matrices, binary model files, and PGM images.

pub mod matrix_csv;
pub mod model_file;
pub mod pgm;

pub use matrix_csv::{read_matrix, write_matrix};
pub use model_file::{read_model, write_model};
pub use pgm::{read_pgm, write_pgm, Pgm};
