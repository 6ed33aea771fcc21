//! Constructive samplers for channels, inputs and outputs, plus the
//! importance-sampling normalization check used as the oracle for every
//! closed-form density.
//!
//! Reproducibility contract: every draw is addressed by `(seed, stream id)`;
//! batch loops assign the stream id from the sample index, so results are
//! bit-identical regardless of thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigs, CMat, Spectrum};
use crate::outpdf::{ChannelModel, SystemDims};

/// Addressed randomness: identical `(seed, id)` reproduces identical draws,
/// distinct ids give statistically independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub id: u64,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        RngStream { seed, id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id);
        rng
    }
}

/// Input signal structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputScheme {
    /// i.i.d. unit-variance complex Gaussian entries.
    IidGaussian,
    /// `X = sqrt(b) Phi` with `Phi` the first n rows of a Haar b x b unitary.
    Ustm,
    /// `X = sqrt(c) D^{1/2} Phi` with `D` Beta-distributed (b < m + n).
    Bstm,
}

impl InputScheme {
    pub fn name(&self) -> &'static str {
        match self {
            InputScheme::IidGaussian => "gaussian",
            InputScheme::Ustm => "ustm",
            InputScheme::Bstm => "bstm",
        }
    }
}

fn std_normal(rng: &mut impl Rng) -> (f64, f64) {
    // Box-Muller; returns an independent pair
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    (r * c, r * s)
}

/// Unit-variance complex Gaussian scalar, `CN(0, 1)`.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let (a, b) = std_normal(rng);
    Complex64::new(a / 2f64.sqrt(), b / 2f64.sqrt())
}

/// m x n matrix of i.i.d. `CN(0, 1)` entries.
pub fn ginibre(rng: &mut impl Rng, m: usize, n: usize) -> CMat {
    CMat::from_fn(m, n, |_, _| complex_gaussian(rng))
}

/// Haar-distributed m x m unitary via QR with phase-normalized R diagonal.
pub fn haar_unitary(rng: &mut impl Rng, m: usize) -> CMat {
    let g = ginibre(rng, m, m);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix the gauge: scale column j by conj(phase(r_jj)) so R has a positive
    // diagonal; this is what makes QR of Ginibre exactly Haar.
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        let scale = phase.conj();
        for i in 0..m {
            q[(i, j)] *= scale;
        }
    }
    q
}

/// Inverse square root of a positive-definite Hermitian matrix.
///
/// Eigenvalues below `1e-13 * max` signal a numerically singular draw
/// (a probability-zero event for the Wishart matrices this is applied to).
pub fn hermitian_inv_sqrt(m: &CMat) -> Result<CMat> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if eig.eigenvalues.iter().any(|&v| v < 1e-13 * max) {
        return Err(Error::NonFinite("singular matrix in inverse square root"));
    }
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(1.0 / v.sqrt(), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

fn hermitian_sqrt(m: &CMat) -> CMat {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Deterministic LOS matrix with `Hbar Hbar^H = h I` (m <= n) or
/// `Hbar^H Hbar = h I` (m > n): `sqrt(h)` times an identity block. The
/// output densities are invariant to this choice by unitary invariance.
pub fn scalar_los_matrix(m: usize, n: usize, h: f64) -> CMat {
    let mut out = CMat::zeros(m, n);
    for i in 0..m.min(n) {
        out[(i, i)] = Complex64::new(h.sqrt(), 0.0);
    }
    out
}

/// Draws the (whitened, for interference-limited models) channel matrix.
pub fn sample_channel(rng: &mut impl Rng, model: &ChannelModel, dims: &SystemDims) -> Result<CMat> {
    let (m, n) = (dims.m, dims.n);
    match *model {
        ChannelModel::Rayleigh => Ok(ginibre(rng, m, n)),
        ChannelModel::Rician { kappa, h } => {
            let los = scalar_los_matrix(m, n, h);
            let scatter = ginibre(rng, m, n);
            Ok(los * Complex64::new((kappa / (kappa + 1.0)).sqrt(), 0.0)
                + scatter * Complex64::new((1.0 / (kappa + 1.0)).sqrt(), 0.0))
        }
        ChannelModel::Lms { alpha, omega } => {
            if alpha.fract() != 0.0 || alpha < 1.0 {
                return Err(Error::NonIntegerAlpha(alpha));
            }
            let k = m.min(n);
            if (alpha as usize) < k {
                return Err(Error::GammaPole {
                    dim: k,
                    arg: alpha - k as f64 + 1.0,
                });
            }
            // Gamma(alpha, omega I) mean Gramian realized as a scaled Wishart
            // with alpha degrees of freedom on the smaller side
            let g = ginibre(rng, k, alpha as usize) * Complex64::new(omega.sqrt(), 0.0);
            let gram = &g * g.adjoint();
            let sqrt = hermitian_sqrt(&gram);
            let mut los = CMat::zeros(m, n);
            los.view_mut((0, 0), (k, k)).copy_from(&sqrt);
            Ok(los + ginibre(rng, m, n))
        }
        ChannelModel::IlRayleigh { interferers, omega } => {
            let p = interferers * n;
            if p < m {
                return Err(Error::BadDims(format!(
                    "interference whitening needs L*n >= m, got L*n = {p}, m = {m}"
                )));
            }
            // omega = theta_s / theta_hat; sampled with theta_hat = 1
            let h_s = ginibre(rng, m, n) * Complex64::new(omega.sqrt(), 0.0);
            let h_i = ginibre(rng, m, p);
            let w = hermitian_inv_sqrt(&(&h_i * h_i.adjoint()))?;
            Ok(w * h_s)
        }
        ChannelModel::IlRician { interferers, kappa, h, theta } => {
            let p = interferers * n;
            if p < m {
                return Err(Error::BadDims(format!(
                    "interference whitening needs L*n >= m, got L*n = {p}, m = {m}"
                )));
            }
            let sqrt_theta = Complex64::new(theta.sqrt(), 0.0);
            // m <= n: Hbar_s Hbar_s^H = h I; m > n: Hbar_s^H Theta^{-1} Hbar_s = h I
            let los = if m <= n {
                scalar_los_matrix(m, n, h)
            } else {
                scalar_los_matrix(m, n, h * theta)
            };
            let h_s = los * Complex64::new((kappa / (kappa + 1.0)).sqrt(), 0.0)
                + ginibre(rng, m, n)
                    * sqrt_theta
                    * Complex64::new((1.0 / (kappa + 1.0)).sqrt(), 0.0);
            let h_i = ginibre(rng, m, p) * sqrt_theta;
            let w = hermitian_inv_sqrt(&(&h_i * h_i.adjoint()))?;
            Ok(w * h_s)
        }
    }
}

/// Eigenvalues of a `B_n(p, q)` draw built per its definition from a Wishart
/// pair through the Cholesky factor of their sum. For `q < n` the
/// construction pins `n - q` eigenvalues at exactly 1.
pub fn sample_beta_eigenvalues(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    q: usize,
) -> Result<Vec<f64>> {
    let g1 = ginibre(rng, n, p);
    let g2 = ginibre(rng, n, q);
    let c = &g1 * g1.adjoint();
    let a = &g2 * g2.adjoint();
    let sum = (&a + &c + (&a + &c).adjoint()) * Complex64::new(0.5, 0.0);
    let chol = nalgebra::Cholesky::new(sum).ok_or(Error::NonFinite("Cholesky of Wishart sum"))?;
    let l = chol.l();
    // B = T^{-H} C T^{-1} with T = L^H
    let li = l.try_inverse().ok_or(Error::NonFinite("triangular inverse"))?;
    let b = &li * c * li.adjoint();
    let spec = hermitian_eigs(&b)?;
    let mut vals: Vec<f64> = spec.values().to_vec();
    if q < n {
        // rank deficiency of I - B: the top n - q eigenvalues equal 1 exactly
        for v in vals.iter_mut().take(n - q) {
            *v = 1.0;
        }
    }
    Ok(vals)
}

/// Power-normalization constant `c = nb / E[tr D]` of the Beta input.
pub fn bstm_power_constant(dims: &SystemDims) -> f64 {
    let (p, q) = (dims.b - dims.n, dims.m + dims.n - dims.b);
    dims.n as f64 * dims.b as f64 / crate::eigdist::beta_trace_mean(dims.n, p, q)
}

/// Draws the n x b input matrix of a scheme.
pub fn sample_input(rng: &mut impl Rng, scheme: InputScheme, dims: &SystemDims) -> Result<CMat> {
    let (m, n, b) = (dims.m, dims.n, dims.b);
    match scheme {
        InputScheme::IidGaussian => Ok(ginibre(rng, n, b)),
        InputScheme::Ustm => {
            if n > b {
                return Err(Error::BadRegime(format!(
                    "product-form inputs require n <= b, got ({n}, {b})"
                )));
            }
            let u = haar_unitary(rng, b);
            let phi = u.view((0, 0), (n, b)).into_owned();
            Ok(phi * Complex64::new((b as f64).sqrt(), 0.0))
        }
        InputScheme::Bstm => {
            if n > b || b >= m + n {
                return Err(Error::BadRegime(format!(
                    "BSTM requires n <= b < m + n, got ({m}, {n}, {b})"
                )));
            }
            let c = bstm_power_constant(dims);
            let d = sample_beta_eigenvalues(rng, n, b - n, m + n - b)?;
            let u = haar_unitary(rng, b);
            let phi = u.view((0, 0), (n, b)).into_owned();
            let scale = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new((c * d[i]).sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            Ok(scale * phi)
        }
    }
}

/// Draws `Y = sqrt(gamma) H X + N`.
pub fn sample_output(
    rng: &mut impl Rng,
    model: &ChannelModel,
    scheme: InputScheme,
    dims: &SystemDims,
) -> Result<CMat> {
    let h = sample_channel(rng, model, dims)?;
    let x = sample_input(rng, scheme, dims)?;
    let noise = ginibre(rng, dims.m, dims.b);
    Ok(h * x * Complex64::new(dims.gamma().sqrt(), 0.0) + noise)
}

/// Result of an importance-sampling normalization run.
#[derive(Debug, Clone, Copy)]
pub struct NormalizationEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub ess: f64,
}

/// Estimates `int p(Y) dY` by importance sampling with a defensive mixture
/// of i.i.d. complex Gaussian proposals.
///
/// `sigma2` sets the typical received per-entry variance; the proposal is an
/// equal-weight mixture over the variance ladder
/// `{1, sigma2, 1 + 4(sigma2-1), 1 + 16(sigma2-1)}`. The output densities
/// have subexponential radial tails, so a single Gaussian proposal has
/// unbounded weights beyond scalar configurations; the ladder keeps the
/// effective sample size healthy at every antenna count.
///
/// `log_pdf` receives each proposal draw and returns the natural-log density.
/// Draws are indexed deterministically and the reduction is a fixed-order
/// pairwise sum, so the estimate is independent of thread count.
pub fn normalization_check(
    log_pdf: &(dyn Fn(&CMat) -> Result<f64> + Sync),
    dims: &SystemDims,
    sigma2: f64,
    samples: usize,
    stream: RngStream,
) -> Result<NormalizationEstimate> {
    let (m, b) = (dims.m, dims.b);
    let excess = (sigma2 - 1.0).max(0.0);
    let ladder = [
        1.0,
        1.0 + excess,
        1.0 + 4.0 * excess,
        1.0 + 16.0 * excess,
    ];
    let ln_mix = (ladder.len() as f64).ln();
    let ln_q = move |y: &CMat| -> f64 {
        let r2 = y.norm_squared();
        let mut best = f64::NEG_INFINITY;
        let mut acc = 0.0;
        let logs: Vec<f64> = ladder
            .iter()
            .map(|&s| -((m * b) as f64) * (std::f64::consts::PI * s).ln() - r2 / s)
            .collect();
        for &l in &logs {
            best = best.max(l);
        }
        for &l in &logs {
            acc += (l - best).exp();
        }
        best + acc.ln() - ln_mix
    };
    let weights: Result<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::new(stream.seed, stream.id.wrapping_add(idx as u64)).rng();
            let pick = rng.gen_range(0..ladder.len());
            let y = ginibre(&mut rng, m, b) * Complex64::new(ladder[pick].sqrt(), 0.0);
            let ln_p = log_pdf(&y)?;
            Ok((ln_p - ln_q(&y)).exp())
        })
        .collect();
    let weights = weights?;
    let mean = pairwise_sum(&weights) / samples as f64;
    let sq: Vec<f64> = weights.iter().map(|w| (w - mean) * (w - mean)).collect();
    let var = pairwise_sum(&sq) / (samples as f64 - 1.0);
    let std_error = (var / samples as f64).sqrt();
    let sum_w = pairwise_sum(&weights);
    let sum_w2: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let ess = sum_w * sum_w / pairwise_sum(&sum_w2);
    if ess < samples as f64 / 1000.0 {
        return Err(Error::DegenerateWeights { ess, n: samples });
    }
    Ok(NormalizationEstimate {
        estimate: mean,
        std_error,
        ess,
    })
}

/// Default proposal variance `1 + gamma * n * kappa_power`, with
/// `kappa_power` the model's average received power per channel entry.
pub fn default_proposal_variance(model: &ChannelModel, dims: &SystemDims) -> f64 {
    let per_entry = match *model {
        ChannelModel::Rayleigh | ChannelModel::Rician { .. } => 1.0,
        ChannelModel::Lms { alpha, omega } => 1.0 + alpha * omega / dims.n as f64,
        ChannelModel::IlRayleigh { interferers, omega } => {
            let p = (interferers * dims.n) as f64;
            if p > dims.m as f64 {
                (omega * p / (p - dims.m as f64)).max(1.0)
            } else {
                4.0
            }
        }
        ChannelModel::IlRician { interferers, .. } => {
            let p = (interferers * dims.n) as f64;
            if p > dims.m as f64 {
                (2.0 * p / (p - dims.m as f64)).max(1.0)
            } else {
                4.0
            }
        }
    };
    1.0 + dims.gamma() * dims.n as f64 * per_entry
}

/// Fixed-order pairwise summation; deterministic with O(log n) error growth.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Pearson chi-squared test of observed counts against expected
/// probabilities; returns the p-value.
pub fn chi_square_pvalue(observed: &[u64], expected_probs: &[f64], total: u64) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let exp = p * total as f64;
        if exp < 1e-9 {
            continue;
        }
        stat += (obs as f64 - exp) * (obs as f64 - exp) / exp;
        dof += 1;
    }
    let dof = dof.saturating_sub(1).max(1);
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let chi = ChiSquared::new(dof as f64).expect("valid dof");
    1.0 - chi.cdf(stat)
}

/// Gramian spectrum of a channel draw: eigenvalues of `H H^H` (m <= n) or
/// `H^H H` (m > n).
pub fn channel_gramian_spectrum(h: &CMat) -> Result<Spectrum> {
    let (m, n) = (h.nrows(), h.ncols());
    let gram = if m <= n { h * h.adjoint() } else { h.adjoint() * h };
    hermitian_eigs(&gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dims(m: usize, n: usize, b: usize, snr: f64) -> SystemDims {
        SystemDims::new(m, n, b, snr).unwrap()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = {
            let mut rng = RngStream::new(7, 3).rng();
            (0..8).map(|_| rng.gen()).collect()
        };
        let b: Vec<f64> = {
            let mut rng = RngStream::new(7, 3).rng();
            (0..8).map(|_| rng.gen()).collect()
        };
        assert_eq!(a, b);
        let c: f64 = RngStream::new(7, 4).rng().gen();
        assert_ne!(a[0], c);
    }

    #[test]
    fn haar_is_unitary_and_isotropic() {
        let mut rng = RngStream::new(1, 0).rng();
        let u = haar_unitary(&mut rng, 4);
        let residual = (&u * u.adjoint() - CMat::identity(4, 4)).norm();
        assert!(residual < 1e-12, "unitarity residual {residual}");

        // E|u_11|^2 = 1/m; E u_11 = 0
        let n = 100_000;
        let mut acc = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        for idx in 0..n {
            let mut rng = RngStream::new(2, idx as u64).rng();
            let u = haar_unitary(&mut rng, 3);
            acc += u[(0, 0)].norm_sqr();
            mean += u[(0, 0)];
        }
        let se = (1.0 / n as f64).sqrt();
        assert!((acc / n as f64 - 1.0 / 3.0).abs() < 3.0 * se);
        assert!((mean / Complex64::new(n as f64, 0.0)).norm() < 3.0 * se);
    }

    #[test]
    fn rayleigh_power_is_mn() {
        let d = dims(2, 3, 4, 1.0);
        let n = 100_000;
        let mut acc = 0.0;
        for idx in 0..n {
            let mut rng = RngStream::new(3, idx as u64).rng();
            let h = sample_channel(&mut rng, &ChannelModel::Rayleigh, &d).unwrap();
            acc += h.norm_squared();
        }
        let mean = acc / n as f64;
        let se = (6.0f64 / n as f64).sqrt(); // Var ||H||^2 = mn
        assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn rician_power_matches_moment() {
        // E||H||^2 = (kappa h min(m,n) + m n) / (kappa + 1)
        let d = dims(2, 2, 4, 1.0);
        let model = ChannelModel::Rician { kappa: 10.0, h: 2.0 };
        let n = 100_000;
        let mut acc = 0.0;
        for idx in 0..n {
            let mut rng = RngStream::new(4, idx as u64).rng();
            acc += sample_channel(&mut rng, &model, &d).unwrap().norm_squared();
        }
        let mean = acc / n as f64;
        let expect = (10.0 * 2.0 * 2.0 + 4.0) / 11.0;
        assert!((mean - expect).abs() < 0.05, "mean {mean} expect {expect}");
    }

    #[test]
    fn input_energy_is_nb() {
        for scheme in [InputScheme::IidGaussian, InputScheme::Ustm, InputScheme::Bstm] {
            let d = dims(3, 1, 3, 1.0); // b < m + n so BSTM is valid
            let n = 50_000;
            let mut acc = 0.0;
            for idx in 0..n {
                let mut rng = RngStream::new(5, idx as u64).rng();
                acc += sample_input(&mut rng, scheme, &d).unwrap().norm_squared();
            }
            let mean = acc / n as f64;
            assert!(
                (mean - 3.0).abs() < 0.05,
                "scheme {scheme:?}: mean {mean} vs nb = 3"
            );
        }
    }

    #[test]
    fn ustm_rows_are_orthonormal() {
        let d = dims(2, 2, 6, 1.0);
        let mut rng = RngStream::new(6, 0).rng();
        let x = sample_input(&mut rng, InputScheme::Ustm, &d).unwrap();
        let gram = &x * x.adjoint() / Complex64::new(6.0, 0.0);
        assert!((gram - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn bstm_regime_guard() {
        let d = dims(1, 1, 2, 1.0); // b = m + n
        let mut rng = RngStream::new(7, 0).rng();
        assert!(matches!(
            sample_input(&mut rng, InputScheme::Bstm, &d),
            Err(Error::BadRegime(_))
        ));
    }

    #[test]
    fn beta_construction_pins_units_for_pseudo_case() {
        let mut rng = RngStream::new(8, 0).rng();
        let vals = sample_beta_eigenvalues(&mut rng, 2, 3, 1).unwrap();
        assert_eq!(vals[0], 1.0);
        assert!(vals[1] > 0.0 && vals[1] < 1.0);
    }

    #[test]
    fn noise_only_output_at_zero_snr() {
        let d = dims(2, 2, 4, 1e-12);
        let n = 50_000;
        let mut acc = 0.0;
        for idx in 0..n {
            let mut rng = RngStream::new(9, idx as u64).rng();
            let y = sample_output(&mut rng, &ChannelModel::Rayleigh, InputScheme::IidGaussian, &d)
                .unwrap();
            acc += y.norm_squared();
        }
        let per_entry = acc / (n * 8) as f64;
        assert!((per_entry - 1.0).abs() < 0.02, "per-entry power {per_entry}");
    }

    #[test]
    fn output_second_moment_rayleigh_gaussian() {
        // E||Y||^2 = mb + gamma m n b
        let d = dims(2, 3, 4, 3.0);
        let n = 100_000;
        let mut acc = 0.0;
        for idx in 0..n {
            let mut rng = RngStream::new(10, idx as u64).rng();
            let y = sample_output(&mut rng, &ChannelModel::Rayleigh, InputScheme::IidGaussian, &d)
                .unwrap();
            acc += y.norm_squared();
        }
        let mean = acc / n as f64;
        let expect = 8.0 + d.gamma() * 24.0;
        assert!(
            (mean - expect).abs() / expect < 0.02,
            "mean {mean} expect {expect}"
        );
    }

    #[test]
    fn il_channel_power_matches_f_matrix_mean() {
        // E tr(H H^H) = m n omega / (Ln - m) for the whitened channel
        let d = dims(2, 2, 4, 1.0);
        let model = ChannelModel::IlRayleigh { interferers: 2, omega: 1.0 };
        let n = 60_000;
        let mut acc = 0.0;
        for idx in 0..n {
            let mut rng = RngStream::new(11, idx as u64).rng();
            let h = sample_channel(&mut rng, &model, &d).unwrap();
            acc += h.norm_squared();
        }
        let mean = acc / n as f64;
        let expect = 2.0 * 2.0 / 2.0;
        assert!(
            (mean - expect).abs() / expect < 0.05,
            "mean {mean} expect {expect}"
        );
    }

    #[test]
    fn normalization_check_is_exact_for_proposal_itself() {
        // at sigma2 = 1 the ladder collapses and the proposal is the target
        let d = dims(1, 1, 2, 1.0);
        let log_pdf = move |y: &CMat| -> Result<f64> {
            Ok(-2.0 * std::f64::consts::PI.ln() - y.norm_squared())
        };
        let est = normalization_check(&log_pdf, &d, 1.0, 1000, RngStream::new(12, 0)).unwrap();
        assert_relative_eq!(est.estimate, 1.0, epsilon = 1e-12);
        assert!(est.std_error < 1e-12);
        assert_relative_eq!(est.ess, 1000.0, epsilon = 1e-6);
    }

    #[test]
    fn normalization_check_detects_scale_errors() {
        let d = dims(1, 1, 2, 1.0);
        // density deliberately doubled
        let log_pdf = move |y: &CMat| -> Result<f64> {
            Ok(2f64.ln() - 2.0 * std::f64::consts::PI.ln() - y.norm_squared())
        };
        let est = normalization_check(&log_pdf, &d, 1.0, 1000, RngStream::new(13, 0)).unwrap();
        assert_relative_eq!(est.estimate, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn normalization_check_thread_count_invariance() {
        let d = dims(1, 1, 2, 1.0);
        let log_pdf = |y: &CMat| -> Result<f64> {
            Ok(-2.0 * std::f64::consts::PI.ln() - y.norm_squared() + 0.1 * (y[(0, 0)].re).tanh())
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| {
                normalization_check(&log_pdf, &d, 1.2, 5000, RngStream::new(14, 0)).unwrap()
            });
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| {
                normalization_check(&log_pdf, &d, 1.2, 5000, RngStream::new(14, 0)).unwrap()
            });
        assert_eq!(single.estimate.to_bits(), multi.estimate.to_bits());
        assert_eq!(single.std_error.to_bits(), multi.std_error.to_bits());
    }

    #[test]
    fn chi_square_sane() {
        // uniform counts against uniform probs: p-value near 1
        let obs = vec![1000u64; 10];
        let probs = vec![0.1f64; 10];
        let p = chi_square_pvalue(&obs, &probs, 10_000);
        assert!(p > 0.9);
        // grossly wrong distribution: p-value near 0
        let obs = vec![2000, 0, 2000, 0, 2000, 0, 2000, 0, 2000, 0];
        let p = chi_square_pvalue(&obs, &probs, 10_000);
        assert!(p < 1e-6);
    }
}
