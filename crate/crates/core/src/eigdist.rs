//! Joint eigenvalue densities of the matrix ensembles driving the output
//! statistics: central and non-central Wishart, central and non-central F,
//! the Gamma-mean (land-mobile-satellite) ensemble, the Rician ensemble,
//! matrix Beta, and the single-eigenvalue Beta marginal.
//!
//! All densities are **ordered**-eigenvalue laws returned as log values;
//! unordered variants divide by `k!` at the call site.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{det_from_signedlog_entries, mv_gamma_log, vandermonde_log, Spectrum, LN_PI};
use crate::signedlog::{sum_signedlog, SignedLog};
use crate::specfn::{
    confluent_ratio, log_0f1, log_1f1, log_1f1_matrix, FunctionFamily, Monomial, PfqParams,
    PfqScaled,
};

/// Parameter sets of the supported ensembles, mirroring their definitions.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleParams {
    /// Gramian of an m x n standard complex Gaussian matrix.
    Wishart { m: usize, n: usize },
    /// Non-central Wishart with scalar mean Gramian `M M^H = mu I`.
    NoncentralWishartScalar { m: usize, n: usize, mu: f64 },
    /// Non-central Wishart with distinct mean-Gramian eigenvalues (m <= n).
    NoncentralWishartGeneral { m: usize, n: usize, means: Vec<f64> },
    /// Central F with scalar covariance ratio `omega`.
    CentralF { m: usize, n: usize, p: usize, omega: f64 },
    /// Non-central F; `m <= n` uses `(mu, theta)`, `m > n` uses `omega`.
    NoncentralF { m: usize, n: usize, p: usize, mu: f64, theta: f64, omega: f64 },
    /// Gamma-mean (LMS) ensemble with shape `alpha`, scale `omega`.
    Lms { m: usize, n: usize, alpha: f64, omega: f64 },
    /// Rician ensemble with factor `kappa` and scalar LOS Gramian level `h`.
    Rician { m: usize, n: usize, kappa: f64, h: f64 },
    /// Matrix Beta `B_n(p, q)`.
    MatrixBeta { n: usize, p: usize, q: usize },
}

impl EnsembleParams {
    /// Number of eigenvalues the joint density expects.
    pub fn spectrum_len(&self) -> usize {
        match *self {
            EnsembleParams::Wishart { m, n }
            | EnsembleParams::NoncentralWishartScalar { m, n, .. }
            | EnsembleParams::Lms { m, n, .. }
            | EnsembleParams::Rician { m, n, .. } => m.min(n),
            EnsembleParams::NoncentralWishartGeneral { m, .. } => m,
            EnsembleParams::CentralF { m, n, .. } | EnsembleParams::NoncentralF { m, n, .. } => {
                m.min(n)
            }
            EnsembleParams::MatrixBeta { n, q, .. } => n.min(q),
        }
    }

    /// Ordered joint log-density dispatch.
    pub fn logpdf(&self, s: &Spectrum) -> Result<SignedLog> {
        match *self {
            EnsembleParams::Wishart { m, n } => wishart_eig_logpdf(m, n, s),
            EnsembleParams::NoncentralWishartScalar { m, n, mu } => {
                noncentral_wishart_scalar_logpdf(m, n, mu, s)
            }
            EnsembleParams::NoncentralWishartGeneral { m, n, ref means } => {
                let means = Spectrum::new(means.clone())?;
                noncentral_wishart_general_logpdf(m, n, &means, s)
            }
            EnsembleParams::CentralF { m, n, p, omega } => central_f_logpdf(m, n, p, omega, s),
            EnsembleParams::NoncentralF { m, n, p, mu, theta, omega } => {
                noncentral_f_logpdf(m, n, p, mu, theta, omega, s)
            }
            EnsembleParams::Lms { m, n, alpha, omega } => lms_eig_logpdf(m, n, alpha, omega, s),
            EnsembleParams::Rician { m, n, kappa, h } => rician_eig_logpdf(m, n, kappa, h, s),
            EnsembleParams::MatrixBeta { n, p, q } => beta_eig_logpdf(n, p, q, s),
        }
    }
}

fn check_spectrum(s: &Spectrum, k: usize, positive: bool) -> Result<()> {
    if s.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected {k} eigenvalues, got {}",
            s.len()
        )));
    }
    if positive {
        if let Some(&bad) = s.values().iter().find(|&&v| v <= 0.0) {
            return Err(Error::NonPositiveEig(bad));
        }
    }
    s.ensure_distinct()
}

fn ln_pi_k(k: usize) -> f64 {
    (k * (k - 1)) as f64 / 2.0 * LN_PI
}

/// Central Wishart eigenvalue law; `k = min(m, n)` eigenvalues.
pub fn wishart_eig_logpdf(m: usize, n: usize, s: &Spectrum) -> Result<SignedLog> {
    let k = m.min(n);
    let d = m.max(n);
    check_spectrum(s, k, true)?;
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let v = vandermonde_log(s)?;
    let ln = 2.0 * ln_pi_k(k) + (d - k) as f64 * ln_lam - s.sum() + 2.0 * v.logmag()
        - mv_gamma_log(k, d as f64)?
        - mv_gamma_log(k, k as f64)?;
    Ok(SignedLog::from_ln(ln))
}

/// Non-central Wishart with scalar mean Gramian `mu I`.
pub fn noncentral_wishart_scalar_logpdf(
    m: usize,
    n: usize,
    mu: f64,
    s: &Spectrum,
) -> Result<SignedLog> {
    let k = m.min(n);
    let d = m.max(n);
    check_spectrum(s, k, true)?;
    if mu < 0.0 {
        return Err(Error::NonFinite("negative non-centrality"));
    }
    let mut entries = Vec::with_capacity(k * k);
    for i in 1..=k {
        for &lam in s.values() {
            let f = log_0f1((d - i + 1) as f64, mu * lam)?;
            entries.push(SignedLog::from_ln(f - i as f64 * lam.ln()));
        }
    }
    let det = det_from_signedlog_entries(k, &entries)?.abs();
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let ln = 2.0 * ln_pi_k(k) + d as f64 * ln_lam + vandermonde_log(s)?.logmag()
        - mv_gamma_log(k, k as f64)?
        - mv_gamma_log(k, d as f64)?
        - mu * k as f64
        - s.sum();
    Ok(SignedLog::from_ln(ln) * det)
}

/// Non-central Wishart with a full-rank mean Gramian of distinct eigenvalues
/// (m <= n). Coincident means must go through the scalar variant.
pub fn noncentral_wishart_general_logpdf(
    m: usize,
    n: usize,
    means: &Spectrum,
    s: &Spectrum,
) -> Result<SignedLog> {
    if m > n {
        return Err(Error::BadDims(format!(
            "general-mean non-central Wishart needs m <= n, got ({m}, {n})"
        )));
    }
    check_spectrum(s, m, true)?;
    check_spectrum(means, m, true)?;
    let mut entries = Vec::with_capacity(m * m);
    for &mu in means.values() {
        for &lam in s.values() {
            entries.push(SignedLog::from_ln(log_0f1((n - m + 1) as f64, mu * lam)?));
        }
    }
    let det = det_from_signedlog_entries(m, &entries)?.abs();
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let ln = (n - m) as f64 * ln_lam + vandermonde_log(s)?.logmag()
        - m as f64 * ln_gamma((n - m + 1) as f64)
        - s.sum()
        - means.sum()
        - vandermonde_log(means)?.logmag();
    Ok(SignedLog::from_ln(ln) * det)
}

/// Central F (Beta type II) eigenvalue law with scalar covariance ratio.
///
/// `m <= n` uses the closed two-Vandermonde form; `m > n` goes through the
/// analytic confluent limit of the general-`Omega` determinant form.
pub fn central_f_logpdf(m: usize, n: usize, p: usize, omega: f64, s: &Spectrum) -> Result<SignedLog> {
    if m > n {
        return central_f_tall_impl(m, n, p, TallOmega::Scalar(omega), s);
    }
    if m > p {
        return Err(Error::BadDims(format!(
            "central F needs m <= p, got ({m}, {p})"
        )));
    }
    check_spectrum(s, m, true)?;
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let ln_ratio: f64 = s.values().iter().map(|v| (1.0 + v / omega).ln()).sum();
    let ln = 2.0 * ln_pi_k(m) + mv_gamma_log(m, (p + n) as f64)?
        - (m * n) as f64 * omega.ln()
        - mv_gamma_log(m, m as f64)?
        - mv_gamma_log(m, p as f64)?
        - mv_gamma_log(m, n as f64)?
        + 2.0 * vandermonde_log(s)?.logmag()
        + (n as f64 - m as f64) * ln_lam
        - (p + n) as f64 * ln_ratio;
    Ok(SignedLog::from_ln(ln))
}

/// Central F for `m > n` with a general covariance-ratio spectrum `Omega`
/// (distinct eigenvalues): the determinant form with `1F0` entries and
/// constant columns `(1 - 1/omega_i)^{m-j}`.
pub fn central_f_general_omega_logpdf(
    m: usize,
    n: usize,
    p: usize,
    omegas: &Spectrum,
    s: &Spectrum,
) -> Result<SignedLog> {
    central_f_tall_impl(m, n, p, TallOmega::General(omegas), s)
}

enum TallOmega<'a> {
    Scalar(f64),
    General(&'a Spectrum),
}

fn central_f_tall_impl(
    m: usize,
    n: usize,
    p: usize,
    omega: TallOmega,
    s: &Spectrum,
) -> Result<SignedLog> {
    if m <= n {
        return Err(Error::BadDims(format!(
            "tall central F branch needs m > n, got ({m}, {n})"
        )));
    }
    if p < m {
        return Err(Error::BadDims(format!(
            "central F needs p >= m, got ({m}, {p})"
        )));
    }
    check_spectrum(s, n, true)?;
    let psi: Vec<f64> = s.values().iter().map(|&l| l / (1.0 + l)).collect();
    let a = (p + n - m + 1) as f64;
    let ratio = match &omega {
        TallOmega::General(omegas) => {
            check_spectrum(omegas, m, true)?;
            // |F| / V(I - Omega^{-1}) evaluated directly
            let ts: Vec<f64> = omegas.values().iter().map(|&w| 1.0 - 1.0 / w).collect();
            let mut entries = Vec::with_capacity(m * m);
            for &t in &ts {
                for j in 1..=m {
                    if j <= n {
                        entries.push(crate::specfn::pfq(
                            &PfqParams::new(vec![a], vec![]),
                            t * psi[j - 1],
                        )?);
                    } else {
                        entries.push(SignedLog::from_f64(t).powi((m - j) as i64));
                    }
                }
            }
            let det = det_from_signedlog_entries(m, &entries)?;
            let t_spec = Spectrum::new(ts)?;
            (det / vandermonde_log(&t_spec)?).abs()
        }
        TallOmega::Scalar(w) => {
            let t0 = 1.0 - 1.0 / w;
            let mut fams: Vec<Box<dyn FunctionFamily>> = Vec::with_capacity(m);
            for j in 1..=m {
                if j <= n {
                    fams.push(Box::new(PfqScaled {
                        params: PfqParams::new(vec![a], vec![]),
                        scale: psi[j - 1],
                    }));
                } else {
                    fams.push(Box::new(Monomial { power: m - j }));
                }
            }
            let refs: Vec<&dyn FunctionFamily> = fams.iter().map(|b| b.as_ref()).collect();
            let empty = Spectrum::new(vec![])?;
            confluent_ratio(&refs, &empty, t0, m)?.abs()
        }
    };
    let ln_omega_det: f64 = match &omega {
        TallOmega::General(omegas) => omegas.values().iter().map(|&w| w.ln()).sum(),
        TallOmega::Scalar(w) => m as f64 * w.ln(),
    };
    let ln_ratio1: f64 = s.values().iter().map(|v| (1.0 + v).ln()).sum();
    let ln = 2.0 * ln_pi_k(n) + mv_gamma_log(m, (p + n) as f64)?
        + n as f64 * ln_gamma((p + n - m + 1) as f64)
        - n as f64 * ln_omega_det
        + (m as f64 - (p + n) as f64 - 1.0) * ln_ratio1
        - mv_gamma_log(n, (p + n) as f64)?
        - mv_gamma_log(m, p as f64)?
        - mv_gamma_log(n, n as f64)?
        + vandermonde_log(s)?.logmag();
    Ok(SignedLog::from_ln(ln) * ratio)
}

/// Non-central F eigenvalue law. `m <= n`: scalar mean Gramian `mu I` and
/// covariance `theta I`; `m > n`: scalar whitened mean `omega I` (the
/// `mu`/`theta` fields are ignored there).
pub fn noncentral_f_logpdf(
    m: usize,
    n: usize,
    p: usize,
    mu: f64,
    theta: f64,
    omega: f64,
    s: &Spectrum,
) -> Result<SignedLog> {
    if m <= n {
        if m > p {
            return Err(Error::BadDims(format!(
                "non-central F needs m <= p, got ({m}, {p})"
            )));
        }
        check_spectrum(s, m, true)?;
        let psi = Spectrum::new(
            s.values()
                .iter()
                .map(|&l| mu / theta * l / (1.0 + l))
                .collect(),
        )?;
        let f_mat = log_1f1_matrix((p + n) as f64, n as f64, &psi)?.abs();
        let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
        let ln_ratio: f64 = s.values().iter().map(|v| (1.0 + v).ln()).sum();
        let ln = 2.0 * ln_pi_k(m) + 2.0 * vandermonde_log(s)?.logmag()
            + mv_gamma_log(m, (p + n) as f64)?
            - mv_gamma_log(m, m as f64)?
            - mv_gamma_log(m, n as f64)?
            - mv_gamma_log(m, p as f64)?
            - mu * m as f64 / theta
            - (m as f64 - n as f64) * ln_lam
            - (p + n) as f64 * ln_ratio;
        Ok(SignedLog::from_ln(ln) * f_mat)
    } else {
        if p < m {
            return Err(Error::BadDims(format!(
                "non-central F needs p >= m, got ({m}, {p})"
            )));
        }
        check_spectrum(s, n, true)?;
        let mut entries = Vec::with_capacity(n * n);
        for i in 1..=n {
            for &lam in s.values() {
                let psi = lam / (1.0 + lam);
                let f = log_1f1((p + n - i + 1) as f64, (m - i + 1) as f64, omega * psi)?;
                entries.push(SignedLog::from_ln(f + (n - i) as f64 * psi.ln()));
            }
        }
        let det = det_from_signedlog_entries(n, &entries)?.abs();
        let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
        let ln_ratio: f64 = s.values().iter().map(|v| (1.0 + v).ln()).sum();
        let ln = 2.0 * ln_pi_k(n) + mv_gamma_log(n, (p + n) as f64)? - omega * n as f64
            - mv_gamma_log(n, n as f64)?
            - mv_gamma_log(n, m as f64)?
            - mv_gamma_log(n, (p + n - m) as f64)?
            + (m - n) as f64 * ln_lam
            + vandermonde_log(s)?.logmag()
            - (p as f64 + 1.0) * ln_ratio;
        Ok(SignedLog::from_ln(ln) * det)
    }
}

/// Gamma-mean (LMS) eigenvalue law with scalar scale `omega I`.
pub fn lms_eig_logpdf(m: usize, n: usize, alpha: f64, omega: f64, s: &Spectrum) -> Result<SignedLog> {
    let k = m.min(n);
    let d = m.max(n);
    if alpha <= k as f64 - 1.0 {
        return Err(Error::GammaPole {
            dim: k,
            arg: alpha - k as f64 + 1.0,
        });
    }
    check_spectrum(s, k, true)?;
    let mut entries = Vec::with_capacity(k * k);
    for i in 1..=k {
        for &lam in s.values() {
            let f = log_1f1(
                alpha - i as f64 + 1.0,
                (d - i + 1) as f64,
                lam / (1.0 + omega),
            )?;
            entries.push(SignedLog::from_ln(f - i as f64 * lam.ln()));
        }
    }
    let det = det_from_signedlog_entries(k, &entries)?.abs();
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let ln = 2.0 * ln_pi_k(k) + d as f64 * ln_lam + vandermonde_log(s)?.logmag()
        - mv_gamma_log(k, k as f64)?
        - mv_gamma_log(k, d as f64)?
        - s.sum()
        - k as f64 * alpha * (1.0 + 1.0 / omega).ln();
    Ok(SignedLog::from_ln(ln) * det)
}

/// Rician eigenvalue law with scalar LOS Gramian level `h I`.
pub fn rician_eig_logpdf(m: usize, n: usize, kappa: f64, h: f64, s: &Spectrum) -> Result<SignedLog> {
    let k = m.min(n);
    let d = m.max(n);
    check_spectrum(s, k, true)?;
    let arg_scale = kappa * (1.0 + kappa) * h;
    let mut entries = Vec::with_capacity(k * k);
    for i in 1..=k {
        for &lam in s.values() {
            let f = log_0f1((d - i + 1) as f64, arg_scale * lam)?;
            entries.push(SignedLog::from_ln(f - i as f64 * lam.ln()));
        }
    }
    let det = det_from_signedlog_entries(k, &entries)?.abs();
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let ln = 2.0 * ln_pi_k(k) + k as f64 * d as f64 * (1.0 + kappa).ln() + d as f64 * ln_lam
        + vandermonde_log(s)?.logmag()
        - mv_gamma_log(k, k as f64)?
        - mv_gamma_log(k, d as f64)?
        - kappa * h * k as f64
        - (1.0 + kappa) * s.sum();
    Ok(SignedLog::from_ln(ln) * det)
}

/// Matrix Beta `B_n(p, q)` joint eigenvalue law.
///
/// `q > n`: all n eigenvalues lie in (0,1). `q <= n`: exactly `q` of them
/// differ from 1 and the law is over those; the spectrum length selects the
/// branch and is validated against it.
pub fn beta_eig_logpdf(n: usize, p: usize, q: usize, s: &Spectrum) -> Result<SignedLog> {
    let k = n.min(q);
    check_spectrum(s, k, false)?;
    if let Some(&bad) = s.values().iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::EigOutOfRange(bad, "(0, 1)"));
    }
    let ln_lam: f64 = s.values().iter().map(|v| v.ln()).sum();
    let ln_one_minus: f64 = s.values().iter().map(|v| (1.0 - v).ln()).sum();
    let v2 = 2.0 * vandermonde_log(s)?.logmag();
    let ln = if q > n {
        2.0 * ln_pi_k(n) + mv_gamma_log(n, (p + q) as f64)? + (q - n) as f64 * ln_one_minus
            + (p as f64 - n as f64) * ln_lam
            + v2
            - mv_gamma_log(n, n as f64)?
            - mv_gamma_log(n, p as f64)?
            - mv_gamma_log(n, q as f64)?
    } else {
        2.0 * ln_pi_k(q) + mv_gamma_log(q, (p + q) as f64)? + (n - q) as f64 * ln_one_minus
            + (p as f64 - n as f64) * ln_lam
            + v2
            - mv_gamma_log(q, n as f64)?
            - mv_gamma_log(q, (p + q - n) as f64)?
            - mv_gamma_log(q, q as f64)?
    };
    Ok(SignedLog::from_ln(ln))
}

/// Cofactor matrix entries and shared constant of the single-eigenvalue Beta
/// marginal: the `k x k` matrix `A` of Gamma ratios, with `k` the number of
/// non-unit eigenvalues.
///
/// The constant is pinned analytically from the cofactor structure itself:
/// termwise, `int_0^1 l^{p-n+i+j-2} (1-l)^w dl = Gamma(w+1) A_{ij}` with `w`
/// the `(1-l)` exponent, so `sum_{ij} D_{ij} A_{ij} = k |A|` forces
/// `C = 1 / (k Gamma(w+1) |A|)`. This guarantees unit mass for every
/// parameter set, which the quoted Gamma-product constants do not.
fn beta_marginal_parts(n: usize, p: usize, q: usize) -> Result<(usize, SignedLog, Vec<SignedLog>)> {
    let (k, w, denom_shift) = if q > n {
        // A_{lj} = G(p-n+l+j-1) / G(p+j+q-2n+l)
        (n, (q - n) as f64, p as i64 + q as i64 - 2 * n as i64)
    } else {
        // A_{lj} = G(p-n+l+j-1) / G(p+j-q+l)
        (q, (n - q) as f64, p as i64 - q as i64)
    };
    let mut a = Vec::with_capacity(k * k);
    for l in 1..=k as i64 {
        for j in 1..=k as i64 {
            let num = p as i64 - n as i64 + l + j - 1;
            let den = denom_shift + l + j;
            if num <= 0 || den <= 0 {
                return Err(Error::GammaPole {
                    dim: k,
                    arg: num.min(den) as f64,
                });
            }
            a.push(SignedLog::from_ln(ln_gamma(num as f64) - ln_gamma(den as f64)));
        }
    }
    let det_a = det_from_signedlog_entries(k, &a)?;
    if det_a.is_zero() {
        return Err(Error::NonFinite("singular beta marginal moment matrix"));
    }
    let c = (det_a * SignedLog::from_ln((k as f64).ln() + ln_gamma(w + 1.0))).recip();
    Ok((k, c, a))
}

/// Cofactors of a matrix given in signed-log entries, via minor determinants.
///
/// The marginal's `A` matrix is badly conditioned for large `p`, `q`; minors
/// in log domain keep each cofactor accurate where inversion would not.
pub(crate) fn cofactors(k: usize, a: &[SignedLog]) -> Result<Vec<SignedLog>> {
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            if k == 1 {
                out.push(SignedLog::ONE);
                continue;
            }
            let mut minor = Vec::with_capacity((k - 1) * (k - 1));
            for r in 0..k {
                if r == i {
                    continue;
                }
                for c in 0..k {
                    if c == j {
                        continue;
                    }
                    minor.push(a[r * k + c]);
                }
            }
            let d = det_from_signedlog_entries(k - 1, &minor)?;
            out.push(if (i + j) % 2 == 0 { d } else { -d });
        }
    }
    Ok(out)
}

/// Polynomial-in-lambda description of the single-eigenvalue Beta marginal:
/// `p(l) = sum_t coeff_t l^{pow_t} (1-l)^{one_minus_pow}`, used both by
/// [`beta_single_eig_pdf`] and the closed-form conditional entropy.
pub(crate) struct BetaMarginalTerms {
    pub terms: Vec<(SignedLog, f64)>,
    pub one_minus_pow: f64,
}

pub(crate) fn beta_marginal_terms(n: usize, p: usize, q: usize) -> Result<BetaMarginalTerms> {
    let (k, c, a) = beta_marginal_parts(n, p, q)?;
    let cof = cofactors(k, &a)?;
    let mut terms = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let pow = p as f64 - n as f64 + (i + j) as f64;
            terms.push((c * cof[i * k + j], pow));
        }
    }
    let one_minus_pow = if q > n { (q - n) as f64 } else { (n - q) as f64 };
    Ok(BetaMarginalTerms { terms, one_minus_pow })
}

/// Density of a single unordered eigenvalue of `B_n(p, q)` at `lambda`.
///
/// For `q <= n` this is the law of one of the `q` non-unit eigenvalues.
pub fn beta_single_eig_pdf(n: usize, p: usize, q: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::EigOutOfRange(lambda, "(0, 1)"));
    }
    let parts = beta_marginal_terms(n, p, q)?;
    let total = sum_signedlog(parts.terms.iter().map(|&(c, pow)| {
        c * SignedLog::from_ln(pow * lambda.ln() + parts.one_minus_pow * (1.0 - lambda).ln())
    }));
    Ok(total.to_f64())
}

/// Mean of `tr(D)` for `D ~ B_n(p, q)`: `n p / (p + q)`, counting the
/// pinned-at-one eigenvalues of the pseudo cases.
pub fn beta_trace_mean(n: usize, p: usize, q: usize) -> f64 {
    n as f64 * p as f64 / (p + q) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::unit_kronrod_rule;
    use approx::assert_relative_eq;

    /// 1-D normalization over (0, inf) by the mapped composite rule.
    fn normalize_1d(f: impl Fn(f64) -> f64) -> f64 {
        let rule = unit_kronrod_rule(24);
        rule.iter()
            .map(|&(t, w)| {
                let x = t / (1.0 - t);
                f(x) * w / ((1.0 - t) * (1.0 - t))
            })
            .sum()
    }

    /// 2-D normalization over the ordered region x1 > x2 > 0.
    fn normalize_2d_ordered(f: impl Fn(f64, f64) -> f64) -> f64 {
        let rule = unit_kronrod_rule(20);
        let mut acc = 0.0;
        for &(t1, w1) in &rule {
            let x1 = t1 / (1.0 - t1);
            let j1 = 1.0 / ((1.0 - t1) * (1.0 - t1));
            for &(t2, w2) in &rule {
                // x2 = x1 * t2 keeps the region ordered
                let x2 = x1 * t2;
                acc += f(x1, x2) * w1 * w2 * j1 * x1;
            }
        }
        acc
    }

    /// 2-D normalization over the ordered unit square 1 > x1 > x2 > 0.
    fn normalize_2d_unit_ordered(f: impl Fn(f64, f64) -> f64) -> f64 {
        let rule = unit_kronrod_rule(20);
        let mut acc = 0.0;
        for &(x1, w1) in &rule {
            for &(t2, w2) in &rule {
                let x2 = x1 * t2;
                acc += f(x1, x2) * w1 * w2 * x1;
            }
        }
        acc
    }

    fn pdf2(f: impl Fn(&Spectrum) -> Result<SignedLog>, a: f64, b: f64) -> f64 {
        if (a - b).abs() < 1e-12 {
            return 0.0;
        }
        let s = Spectrum::new(vec![a, b]).unwrap();
        match f(&s) {
            Ok(v) => v.to_f64(),
            Err(Error::DegenerateSpectrum { .. }) => 0.0,
            Err(e) => panic!("pdf eval failed: {e}"),
        }
    }

    #[test]
    fn wishart_scalar_is_exponential() {
        let s = Spectrum::new(vec![1.0]).unwrap();
        let v = wishart_eig_logpdf(1, 1, &s).unwrap();
        assert_relative_eq!(v.logmag(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn wishart_2x2_normalizes() {
        let total = normalize_2d_ordered(|a, b| pdf2(|s| wishart_eig_logpdf(2, 2, s), a, b));
        assert_relative_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn wishart_2x3_normalizes() {
        let total = normalize_2d_ordered(|a, b| pdf2(|s| wishart_eig_logpdf(2, 3, s), a, b));
        assert_relative_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn noncentral_wishart_reduces_to_central() {
        let s = Spectrum::new(vec![2.3, 0.7]).unwrap();
        let nc = noncentral_wishart_scalar_logpdf(2, 3, 1e-12, &s).unwrap();
        let c = wishart_eig_logpdf(2, 3, &s).unwrap();
        assert!((nc.logmag() - c.logmag()).abs() < 1e-6);
    }

    #[test]
    fn noncentral_wishart_scalar_normalizes() {
        // m = n = 1, mu = 2: p(l) = e^{-2-l} 0F1(;1;2l)
        let total = normalize_1d(|l| {
            let s = Spectrum::new(vec![l]).unwrap();
            noncentral_wishart_scalar_logpdf(1, 1, 2.0, &s).unwrap().to_f64()
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-8);
        let total2 = normalize_2d_ordered(|a, b| {
            pdf2(|s| noncentral_wishart_scalar_logpdf(2, 3, 1.5, s), a, b)
        });
        assert_relative_eq!(total2, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn noncentral_wishart_general_matches_scalar_limit() {
        let s = Spectrum::new(vec![3.1, 1.2]).unwrap();
        let mu = 1.4;
        let eval = |eps: f64| {
            let means = Spectrum::new(vec![mu * (1.0 + eps), mu * (1.0 - eps)]).unwrap();
            noncentral_wishart_general_logpdf(2, 3, &means, &s)
                .unwrap()
                .to_f64()
        };
        let scalar = noncentral_wishart_scalar_logpdf(2, 3, mu, &s).unwrap().to_f64();
        let eps = 1e-3;
        let extrap = (4.0 * eval(eps / 2.0) - eval(eps)) / 3.0;
        assert_relative_eq!(extrap, scalar, max_relative = 1e-5);
    }

    #[test]
    fn noncentral_wishart_general_m1_equals_scalar() {
        let s = Spectrum::new(vec![0.9]).unwrap();
        let means = Spectrum::new(vec![2.0]).unwrap();
        let g = noncentral_wishart_general_logpdf(1, 2, &means, &s).unwrap();
        let sc = noncentral_wishart_scalar_logpdf(1, 2, 2.0, &s).unwrap();
        assert_relative_eq!(g.logmag(), sc.logmag(), epsilon = 1e-12);
    }

    #[test]
    fn noncentral_wishart_general_normalizes() {
        let means = Spectrum::new(vec![2.0, 1.0]).unwrap();
        let total = normalize_2d_ordered(|a, b| {
            pdf2(|s| noncentral_wishart_general_logpdf(2, 3, &means, s), a, b)
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn central_f_scalar_case() {
        // m = n = p = 1, omega = 1: p(l) = (1+l)^{-2}
        let s = Spectrum::new(vec![0.8]).unwrap();
        let v = central_f_logpdf(1, 1, 1, 1.0, &s).unwrap();
        assert_relative_eq!(v.to_f64(), (1.0 + 0.8f64).powi(-2), max_relative = 1e-12);
        let total = normalize_1d(|l| {
            let s = Spectrum::new(vec![l]).unwrap();
            central_f_logpdf(1, 1, 1, 1.0, &s).unwrap().to_f64()
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn central_f_wide_normalizes() {
        let total = normalize_2d_ordered(|a, b| pdf2(|s| central_f_logpdf(2, 3, 4, 1.3, s), a, b));
        assert_relative_eq!(total, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn central_f_tall_scalar_matches_general_limit() {
        // m > n: scalar-omega confluent path vs eps-perturbed general Omega
        let (m, n, p) = (3usize, 1usize, 4usize);
        let s = Spectrum::new(vec![0.9]).unwrap();
        let w = 1.2;
        let scalar = central_f_logpdf(m, n, p, w, &s).unwrap().to_f64();
        let eval = |eps: f64| {
            let omegas = Spectrum::new(vec![w * (1.0 + eps), w, w * (1.0 - eps)]).unwrap();
            central_f_general_omega_logpdf(m, n, p, &omegas, &s)
                .unwrap()
                .to_f64()
        };
        let eps = 2e-3;
        let extrap = (4.0 * eval(eps / 2.0) - eval(eps)) / 3.0;
        assert_relative_eq!(scalar, extrap, max_relative = 1e-4);
    }

    #[test]
    fn central_f_tall_normalizes() {
        // m = 2, n = 1, p = 3; omega = 1 makes t0 = 0 and exercises the
        // derivative columns at the origin
        for w in [1.0, 1.7] {
            let total = normalize_1d(|l| {
                let s = Spectrum::new(vec![l]).unwrap();
                central_f_logpdf(2, 1, 3, w, &s).unwrap().to_f64()
            });
            assert_relative_eq!(total, 1.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn noncentral_f_reduces_to_central() {
        let s = Spectrum::new(vec![1.9, 0.4]).unwrap();
        let nc = noncentral_f_logpdf(2, 3, 4, 1e-12, 1.0, 0.0, &s).unwrap();
        let c = central_f_logpdf(2, 3, 4, 1.0, &s).unwrap();
        assert!((nc.logmag() - c.logmag()).abs() < 1e-6);
        // tall branch: omega -> 0
        let s1 = Spectrum::new(vec![0.7]).unwrap();
        let nc = noncentral_f_logpdf(3, 1, 4, 0.0, 1.0, 1e-12, &s1).unwrap();
        let c = central_f_logpdf(3, 1, 4, 1.0, &s1).unwrap();
        assert!((nc.logmag() - c.logmag()).abs() < 1e-6);
    }

    #[test]
    fn noncentral_f_scalar_normalizes() {
        // m = n = p = 1, mu = theta = 1
        let total = normalize_1d(|l| {
            let s = Spectrum::new(vec![l]).unwrap();
            noncentral_f_logpdf(1, 1, 1, 1.0, 1.0, 0.0, &s).unwrap().to_f64()
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn noncentral_f_wide_normalizes() {
        let total = normalize_2d_ordered(|a, b| {
            pdf2(|s| noncentral_f_logpdf(2, 3, 4, 1.3, 0.9, 0.0, s), a, b)
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn noncentral_f_tall_normalizes() {
        let total = normalize_1d(|l| {
            let s = Spectrum::new(vec![l]).unwrap();
            noncentral_f_logpdf(2, 1, 3, 0.0, 1.0, 1.5, &s).unwrap().to_f64()
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn lms_normalizes() {
        // m = 1, n = 2, alpha = 3, omega = 1
        let total = normalize_1d(|l| {
            let s = Spectrum::new(vec![l]).unwrap();
            lms_eig_logpdf(1, 2, 3.0, 1.0, &s).unwrap().to_f64()
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-7);
        let total2 = normalize_2d_ordered(|a, b| pdf2(|s| lms_eig_logpdf(2, 3, 2.5, 0.8, s), a, b));
        assert_relative_eq!(total2, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn lms_rejects_alpha_pole() {
        let s = Spectrum::new(vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            lms_eig_logpdf(2, 3, 0.9, 1.0, &s),
            Err(Error::GammaPole { .. })
        ));
    }

    #[test]
    fn rician_reduces_to_wishart() {
        let s = Spectrum::new(vec![2.2, 0.5]).unwrap();
        let r = rician_eig_logpdf(2, 2, 1e-12, 1.0, &s).unwrap();
        let w = wishart_eig_logpdf(2, 2, &s).unwrap();
        assert!((r.logmag() - w.logmag()).abs() < 1e-6);
    }

    #[test]
    fn rician_change_of_variable_identity() {
        // p(L) = (1+k)^m p0((1+k) L) with p0 the non-central scalar law at mu = kh
        let (m, n, kappa, h) = (2usize, 3usize, 1.5f64, 2.0f64);
        let s = Spectrum::new(vec![1.7, 0.6]).unwrap();
        let lhs = rician_eig_logpdf(m, n, kappa, h, &s).unwrap();
        let scaled = s.map(|v| (1.0 + kappa) * v).unwrap();
        let rhs = SignedLog::from_ln(m as f64 * (1.0 + kappa).ln())
            * noncentral_wishart_scalar_logpdf(m, n, kappa * h, &scaled).unwrap();
        assert_relative_eq!(lhs.logmag(), rhs.logmag(), max_relative = 1e-10);
    }

    #[test]
    fn rician_normalizes() {
        // Fig. 2 setting: m = n = 2, kappa = 1, h = 2
        let total = normalize_2d_ordered(|a, b| pdf2(|s| rician_eig_logpdf(2, 2, 1.0, 2.0, s), a, b));
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn beta_scalar_reduction() {
        // n = 1, p = 2, q = 2: Beta(2,2) density 6 l (1-l)
        let s = Spectrum::new(vec![0.4]).unwrap();
        let v = beta_eig_logpdf(1, 2, 2, &s).unwrap();
        assert_relative_eq!(v.to_f64(), 6.0 * 0.4 * 0.6, max_relative = 1e-12);
    }

    #[test]
    fn beta_joint_normalizes() {
        let total = normalize_2d_unit_ordered(|a, b| {
            if (a - b).abs() < 1e-12 {
                return 0.0;
            }
            let s = Spectrum::new(vec![a, b]).unwrap();
            beta_eig_logpdf(2, 3, 4, &s).map(|v| v.to_f64()).unwrap_or(0.0)
        });
        assert_relative_eq!(total, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn beta_pseudo_branch_normalizes() {
        // q = 1 < n = 2, p = 3: single non-unit eigenvalue, Beta(2,2)
        let rule = unit_kronrod_rule(16);
        let total: f64 = rule
            .iter()
            .map(|&(x, w)| {
                let s = Spectrum::new(vec![x]).unwrap();
                beta_eig_logpdf(2, 3, 1, &s).unwrap().to_f64() * w
            })
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn beta_single_scalar_reduction() {
        // n = 1: plain Beta(p, q); at p = 2, q = 3, l = 0.5 the density is
        // 12 * 0.5 * 0.25 = 1.5
        let v = beta_single_eig_pdf(1, 2, 3, 0.5).unwrap();
        assert_relative_eq!(v, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn beta_single_normalizes() {
        let rule = unit_kronrod_rule(16);
        for (n, p, q) in [(2usize, 3usize, 4usize), (3, 4, 5), (2, 3, 1), (1, 2, 1)] {
            let total: f64 = rule
                .iter()
                .map(|&(x, w)| beta_single_eig_pdf(n, p, q, x).unwrap() * w)
                .sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn beta_single_matches_marginalized_joint() {
        // n = 2, p = 3, q = 4: integrate the unordered joint over one
        // eigenvalue by 1-D quadrature and compare with the closed form
        let rule = unit_kronrod_rule(24);
        for &lam in &[0.15, 0.45, 0.8] {
            let marginal: f64 = rule
                .iter()
                .map(|&(x, w)| {
                    if (x - lam).abs() < 1e-9 {
                        return 0.0;
                    }
                    let s = Spectrum::new(vec![lam, x]).unwrap();
                    // unordered joint = ordered / 2!
                    0.5 * beta_eig_logpdf(2, 3, 4, &s).unwrap().to_f64() * w
                })
                .sum();
            let closed = beta_single_eig_pdf(2, 3, 4, lam).unwrap();
            assert_relative_eq!(marginal, closed, max_relative = 1e-6);
        }
    }

    #[test]
    fn beta_trace_mean_counts_pinned_units() {
        // B_2(3,1): one eigenvalue pinned at 1, one Beta(2,2) with mean 1/2
        assert_relative_eq!(beta_trace_mean(2, 3, 1), 1.5, epsilon = 1e-14);
    }
}
