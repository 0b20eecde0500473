//! Spiral point sets `{k^(1/n) u_k}` in `R^n` and numeric certification of
//! their Delone property.

pub mod cli;
pub mod dioph;
pub mod geom;
pub mod lift;
pub mod spiral;
pub mod tetra;
pub mod verify;
