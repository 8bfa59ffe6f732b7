//! Experiment harness for leverage-score perturbation studies: figure
//! runs, acceptance checks, CSV/SVG/matrix file I/O. The `levlab` binary is
//! a thin command-line layer over this library.

pub mod checks;
pub mod config;
pub mod error;
pub mod figures;
pub mod matrix_io;
pub mod report;

pub use config::{ExperimentConfig, FigureId};
pub use error::{LabError, Result};
pub use figures::{run_figure, FigureRow, FigureRun};
