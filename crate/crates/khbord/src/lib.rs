//! Khovanov arc algebras, Roberts' bordered algebras and bordered Khovanov complexes,
//! all with exact integer coefficients.

pub mod planar;
pub mod zlinalg;
pub mod arcalg;
pub mod linquad;
pub mod roberts;
pub mod hncomplex;
pub mod tangles;
pub mod bordered;
