//! Building, solving and checking large marketing-targeting linear programs.
//!
//! * [`sparse`]: CSR matrices, power iteration and Ruiz equilibration.
//! * [`model`]: customer/segment instances, constraint menus and LP compilation.
//! * [`pdhg`]: restarted primal-dual hybrid gradient solver.
//! * [`oracle`]: dense simplex and vertex enumeration for small problems.
//! * [`datagen`]: synthetic instances over a geographic segment hierarchy.
//! * [`bench`]: individual vs segment-level comparisons and collapse sweeps.
//! * [`cli`]: the `marchetype` command-line tool.

pub mod bench;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod lp;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod pdhg;
pub mod sparse;
pub mod toy;

pub use error::{Error, Result};
pub use lp::{BoxedLp, ColumnLabel, RowFamily, StandardLp};
pub use sparse::SparseMatrix;
