pub mod bands;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod propagator;
pub mod scattering;
