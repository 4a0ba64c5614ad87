pub mod billiards;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod family;
pub mod gauss;
pub mod geodesic;
pub mod ode;
pub mod poly;
pub mod quadrature;
pub mod rootfind;
pub mod sj;
pub mod threads;

pub use error::{Error, Result};
