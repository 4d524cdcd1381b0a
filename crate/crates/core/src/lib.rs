pub mod cube;
pub mod error;
mod faces;
pub mod geom;
pub mod refine;
pub mod cover;
pub mod diagram;
pub mod oracle;
pub mod io;
pub mod render;
pub mod validate;
