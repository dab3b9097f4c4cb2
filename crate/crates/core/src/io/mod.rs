//! File formats: Netpbm grayscale images and dense CSV matrices.

pub mod matrix_csv;
pub mod pgm;

pub use matrix_csv::{read_matrix_csv, write_matrix_csv};
pub use pgm::{GrayImage, PgmFormat};
