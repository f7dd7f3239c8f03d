pub mod capacity;
pub mod channel;
pub mod error;
pub mod matrix;
mod optim;
pub mod quadrature;
pub mod region;
pub mod repro;
pub mod wideband;
