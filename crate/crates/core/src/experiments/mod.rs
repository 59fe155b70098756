//! Reproducible studies built on the library, each with a CSV emitter.
//!
//! Every CSV starts with a `#schema=<name>/<version>` comment line.

pub mod ellipsoid;
pub mod foldback;
pub mod portrait;
pub mod sphere_tail;
pub mod table1;

pub use ellipsoid::{run_ellipsoid, EllipsoidConfig, EllipsoidStudyResult};
pub use foldback::{run_foldback, FoldbackReport};
pub use portrait::{phase_portrait, PortraitTrack};
pub use sphere_tail::sphere_tail_probability;
pub use table1::{run_table1, Table1};
