//! Multilevel Newton eigensolver for P1 finite elements on triangles.
//!
//! A coarse mesh is solved once with a dense generalized eigensolve; each
//! regular refinement then takes exactly one Newton correction through a
//! bordered saddle-point system, for one eigenpair or a group of `m`.
//!
//! ```no_run
//! use mlnewton::{assemble::CoefficientSet, mesh, multilevel, reference};
//!
//! let hier = mesh::build_hierarchy(mesh::unit_square_mesh(1.0 / 6.0)?, 4)?;
//! let opts = multilevel::MultilevelOptions {
//!     reference: multilevel::Reference::Exact(reference::exact_laplace(1)?),
//!     ..Default::default()
//! };
//! let rec = multilevel::run_multilevel(&hier, &CoefficientSet::laplace(), 1, &opts)?;
//! println!("{:?}", rec.observed_orders);
//! # Ok::<(), mlnewton::Error>(())
//! ```

pub mod assemble;
pub mod cli;
pub mod config;
pub mod eigen_newton;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod mesh;
pub mod multilevel;
pub mod quadrature;
pub mod reference;

pub use error::{Error, Result};
