//! Spectral toolkit for the Benjamin-Ono Lax operator `L_u = D − T_u` on the
//! Hardy space of the circle, for band-limited real and complex potentials.
//!
//! ```
//! use bolax::fourier::Potential;
//! use bolax::spectrum::{SpectralData, SpectralOptions};
//!
//! let u = Potential::zero();
//! let data = SpectralData::compute(&u, SpectralOptions::with_n_max(4)).unwrap();
//! assert!((data.lambda(3).re - 3.0).abs() < 1e-12);
//! ```

pub mod certify;
pub mod error;
pub mod finitegap;
pub mod fourier;
pub mod genfun;
pub mod io;
pub mod laxop;
pub mod linalg;
pub mod spectrum;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/lax-operator.md")]
    mod lax_operator {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/generating-function.md")]
    mod generating_function {}
    #[doc = include_str!("../../../book/src/finite-gap.md")]
    mod finite_gap {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
