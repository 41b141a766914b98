//! Numerical laboratory for the time-harmonic Maxwell inverse boundary value
//! problem with local data.
//!
//! The crate implements, end to end, the constructive machinery relating
//! boundary measurements to interior coefficients:
//!
//! * rasterized partially flat / partially spherical domains with the
//!   reflection map and the Kelvin transform ([`geometry`]);
//! * grid fields, finite-difference operators, fractional Sobolev/Besov
//!   norms and tangential traces ([`grid`], [`diff`], [`norms`], [`trace`]);
//! * the Maxwell-to-Schrödinger reduction: augmented 8x8 first-order system,
//!   rescaling, potentials `W, Q, Q', Q-hat` and their factorizations
//!   ([`reduction`]);
//! * complex geometrical optics (CGO) solutions via a Faddeev-type
//!   Fourier-symbol fixed point ([`cgo`]);
//! * a frequency-domain forward solver, Cauchy-data extraction and the
//!   pseudo-distance between restricted Cauchy data sets ([`forward`]);
//! * Fourier recovery of the reduced potentials, the quantitative
//!   Riemann-Lebesgue bound, the parameter schedule, the Carleman-based
//!   transfer and the end-to-end stability experiment ([`recon`]).

pub mod cgo;
pub mod coeff;
pub mod diff;
pub mod error;
pub mod fft;
pub mod forward;
pub mod geometry;
pub mod grid;
pub mod manifest;
pub mod norms;
pub mod recon;
pub mod reduction;
pub mod trace;
