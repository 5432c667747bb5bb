//! File formats, instance generators, oracles and the command line for
//! [`optcur_core`].

pub mod adversarial;
pub mod brute;
pub mod cli;
pub mod generate;
pub mod mtx;
pub mod report;

pub use adversarial::{gen_adversarial, AdversarialInstance};
pub use brute::{brute_force_best_columns, BestColumns};
pub use mtx::{read_matrix, write_matrix, MtxError, MtxMatrix};
pub use report::RunReport;
