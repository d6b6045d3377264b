//! Virtual element method on polygonal meshes, with high-order isoparametric
//! ALE transport of the discrete space over moving domains.

pub mod ale;
pub mod analysis;
pub mod dense;
mod geometry;
pub mod mesh;
pub mod pme;
pub mod quadrature;
pub mod space;
pub mod sparse;
pub mod time;

pub use geometry::Pt;

#[derive(Debug, thiserror::Error)]
pub enum VemError {
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("element {elem}: singular local system ({what}); mesh regularity violation?")]
    SingularElement { elem: usize, what: &'static str },
    #[error("degenerate map: j = {j:.6e} <= 0 in element {elem} at t = {t}")]
    DegenerateMap { elem: usize, j: f64, t: f64 },
    #[error("sparse solve failed: {0}")]
    Solver(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
}

pub type Result<T> = std::result::Result<T, VemError>;
