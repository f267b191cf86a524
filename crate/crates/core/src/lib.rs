pub mod covering;
pub mod error;
pub mod exec;
pub mod jet;
pub mod oracle;
pub mod pipeline;
pub mod problem;
pub mod reduction;
pub mod structure;
pub mod symbolic;
pub mod symmetry;

pub use error::{Error, Result};
pub use exec::Exec;
