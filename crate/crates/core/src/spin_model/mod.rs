//! Lattice geometry, spin configurations and quadratic log-densities
//! `E(s) = beta * (1/2 s^T J s + h^T s)`.

mod builders;
mod lattice;
mod quadratic;
mod spins;
mod text_format;

pub use builders::{
    boundary_sides, build_example1, build_example2, build_example2_with, zero_mean_side_forcing,
    SidePolarity,
};
pub use lattice::Lattice;
pub use quadratic::{Coupling, QuadraticModel};
pub use spins::{Mode, SpinConfig};
pub use text_format::{read_model, write_model};
