//! HTTP service and command plumbing for `bankcf`.

pub mod bundle;
pub mod server;

pub use bundle::{ModelBundle, Registry};
pub use server::{router, ServeOptions};
