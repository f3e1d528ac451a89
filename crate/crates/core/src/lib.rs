//! Exact verification of the polynomial maps behind stably equivalent but
//! non-equivalent hypersurfaces `x^[2]*y + z^2 + x^[1]*q(z^2) = c`.

pub mod certificate;
pub mod equivalence;
pub mod field;
pub mod hypersurface;
pub mod morphisms;
pub mod poly;
pub mod series;
pub mod sz;
