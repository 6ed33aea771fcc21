//! Closed-form output statistics of MIMO block-fading channels.
//!
//! The crate evaluates, in the log domain, the exact output probability
//! densities of block-fading multi-antenna channels (Rayleigh, Rician, land
//! mobile satellite, and interference-limited variants under Gaussian inputs;
//! unitary and Beta-variate space-time modulation under product-form inputs),
//! together with the random-matrix eigenvalue laws they are built from,
//! constructive samplers that double as Monte-Carlo oracles, and
//! mutual-information estimators driven by those densities.
//!
//! Modules, bottom up:
//!
//! * [`signedlog`] — sign + log-magnitude arithmetic, the universal currency.
//! * [`linalg`] — log-domain determinants, Hermitian spectra, multivariate
//!   Gamma functions and Stiefel volumes.
//! * [`specfn`] — generalized hypergeometric series and the confluent-limit
//!   machinery for determinant ratios.
//! * [`quad`] / [`detint`] — adaptive Gauss–Legendre quadrature and the
//!   identity turning n-fold eigenvalue integrals into determinants of
//!   one-dimensional integrals.
//! * [`eigdist`] — eigenvalue densities of Wishart, F, Beta, Rician and
//!   Gamma-mean ensembles.
//! * [`outpdf`] — the channel output densities assembled from the above.
//! * [`sampling`] — reproducible samplers and importance-sampling checks.
//! * [`infometrics`] — differential entropies and mutual information.

pub mod detint;
pub mod eigdist;
pub mod error;
pub mod infometrics;
pub mod linalg;
pub mod outpdf;
pub mod quad;
pub mod sampling;
pub mod signedlog;
pub mod specfn;
pub mod validation;

pub use error::{Error, Result};
pub use signedlog::SignedLog;
