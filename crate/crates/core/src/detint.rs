//! Determinant-integral reduction: the identity that turns an n-fold
//! eigenvalue integral of a product of two determinants into a single
//! determinant of one-dimensional integrals,
//!
//! `int_{[a,b]^n} |Phi(x)| |Psi(x)| prod_k xi(x_k) dx = n! |Xi|`
//!
//! with `Xi_{ij} = int psi_i phi_j xi` for the first n columns and the
//! constant block `c_{ij}` for the rest. Every closed-form output density in
//! this crate is an instance of this reduction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::det_from_signedlog_entries;
use crate::quad::{integrate, Domain, Integrand1D};
use crate::signedlog::SignedLog;
use statrs::function::gamma::ln_gamma;

/// Scalar factor functions of a determinant-integral: `n` column functions
/// `phi_j`, `m >= n` row functions `psi_i`, a weight `xi`, and the constant
/// block filling columns `n+1..m`.
pub struct DetIntegralSpec<'a> {
    pub phi: Vec<&'a (dyn Fn(f64) -> SignedLog + Sync)>,
    pub psi: Vec<&'a (dyn Fn(f64) -> SignedLog + Sync)>,
    pub xi: &'a (dyn Fn(f64) -> SignedLog + Sync),
    /// Row-major `m x (m - n)` constant block.
    pub constant_block: Vec<SignedLog>,
    pub domain: Domain,
    pub sqrt_left: bool,
    /// Whether to include the `n!` factor. Include it when the left-hand
    /// side is an integral over the full cube; omit it when integrating an
    /// ordered eigenvalue density, where the cube overcounts by exactly `n!`.
    pub include_factorial: bool,
}

/// Evaluates `n! |Xi|` (or `|Xi|` when the factorial is suppressed).
///
/// Entries of `Xi` are independent 1-D integrals and run in parallel. The
/// returned error estimate is the largest relative quadrature error across
/// entries.
pub fn det_integral(spec: &DetIntegralSpec, reltol: f64) -> Result<(SignedLog, f64)> {
    let n = spec.phi.len();
    let m = spec.psi.len();
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "need m >= n, got m = {m}, n = {n}"
        )));
    }
    if spec.constant_block.len() != m * (m - n) {
        return Err(Error::DimensionMismatch(format!(
            "constant block must be {} x {} entries",
            m,
            m - n
        )));
    }
    let cells: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .collect();
    let computed: Result<Vec<((usize, usize), (SignedLog, f64))>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let psi_i = spec.psi[i];
            let phi_j = spec.phi[j];
            let xi = spec.xi;
            let g = move |x: f64| psi_i(x) * phi_j(x) * xi(x);
            let mut integrand = Integrand1D::new(&g, spec.domain);
            integrand.sqrt_left = spec.sqrt_left;
            integrate(&integrand, reltol).map(|v| ((i, j), v))
        })
        .collect();
    let computed = computed?;
    let mut entries = vec![SignedLog::ZERO; m * m];
    let mut worst_err = 0.0f64;
    for ((i, j), (v, e)) in computed {
        entries[i * m + j] = v;
        worst_err = worst_err.max(e);
    }
    for i in 0..m {
        for j in n..m {
            entries[i * m + j] = spec.constant_block[i * (m - n) + (j - n)];
        }
    }
    let mut det = det_from_signedlog_entries(m, &entries)?;
    if spec.include_factorial {
        det = det * SignedLog::from_ln(ln_gamma(n as f64 + 1.0));
    }
    Ok((det, worst_err))
}
