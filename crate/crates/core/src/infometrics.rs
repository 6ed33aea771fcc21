//! Differential entropies and mutual information.
//!
//! `I = (h(Y) - h(Y|X)) / b` in bits per channel use. The output entropy is
//! a Monte-Carlo average of `-log2 p(Y)` over the exact output law; the
//! conditional entropies are closed Gaussian forms (given X the output rows
//! are i.i.d. complex Gaussian) averaged over the input when needed.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigs;
use crate::outpdf::{
    bstm_logpdf, gaussian_input_logpdf, ustm_logpdf, ChannelModel, EvalOptions, GaussianTable,
    SystemDims,
};
use crate::quad::unit_kronrod_rule;
use crate::sampling::{
    bstm_power_constant, pairwise_sum, sample_input, sample_output, InputScheme, RngStream,
};
use crate::signedlog::SignedLog;
use crate::specfn::pfq;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

fn log2_pi_e() -> f64 {
    (std::f64::consts::PI * std::f64::consts::E).log2()
}

/// Which p(Y) drives the output entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputLaw {
    Gaussian(ChannelModel),
    Ustm,
    Bstm,
}

/// One point of a mutual-information curve.
#[derive(Debug, Clone, Copy)]
pub struct MiCurvePoint {
    pub snr_db: f64,
    /// bits per channel use (normalized by the coherence length)
    pub mi_bits: f64,
    pub stderr: f64,
    pub h_y: f64,
    pub h_y_given_x: f64,
}

fn mc_mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `h(Y) = E[-log2 p(Y)]` by Monte Carlo over the output law, in bits.
///
/// The Gaussian-input models evaluate p(Y) through a precomputed quadrature
/// table (except the m > n interference-limited Rayleigh case, which uses
/// its Monte-Carlo density); product-form laws are closed-form per sample.
pub fn entropy_output(
    law: &OutputLaw,
    dims: &SystemDims,
    samples: usize,
    stream: RngStream,
    opts: &EvalOptions,
) -> Result<(f64, f64)> {
    let (scheme, model) = match law {
        OutputLaw::Gaussian(model) => (InputScheme::IidGaussian, *model),
        OutputLaw::Ustm => (InputScheme::Ustm, ChannelModel::Rayleigh),
        OutputLaw::Bstm => (InputScheme::Bstm, ChannelModel::Rayleigh),
    };
    let table = match law {
        OutputLaw::Gaussian(m)
            if !(matches!(m, ChannelModel::IlRayleigh { .. }) && dims.m > dims.n) =>
        {
            Some(GaussianTable::build(m, dims, opts)?)
        }
        _ => None,
    };
    let vals: Result<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::new(stream.seed, stream.id.wrapping_add(idx as u64)).rng();
            let y = sample_output(&mut rng, &model, scheme, dims)?;
            let res = match law {
                OutputLaw::Gaussian(m) => match &table {
                    Some(t) => t.logpdf(&y)?,
                    None => gaussian_input_logpdf(m, dims, &y, opts)?,
                },
                OutputLaw::Ustm => ustm_logpdf(dims, &y)?,
                OutputLaw::Bstm => bstm_logpdf(dims, &y, opts)?,
            };
            Ok(-res.log2())
        })
        .collect();
    Ok(mc_mean_stderr(&vals?))
}

/// Conditional output entropy for Gaussian-input models, in bits:
/// `m E[log2 det(pi e (I_b + gamma_eff X^H X))]` with `gamma_eff = gamma`
/// for Rayleigh and `gamma / (1 + kappa)` for Rician (the known LOS mean
/// shifts the output without changing its entropy).
pub fn entropy_cond_gaussian_input(
    dims: &SystemDims,
    model: &ChannelModel,
    samples: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    let gamma_eff = match *model {
        ChannelModel::Rayleigh => dims.gamma(),
        ChannelModel::Rician { kappa, .. } => dims.gamma() / (1.0 + kappa),
        _ => {
            return Err(Error::UnsupportedCase(format!(
                "conditional entropy is Gaussian only for Rayleigh/Rician, not {}",
                model.name()
            )))
        }
    };
    let (m, b) = (dims.m as f64, dims.b as f64);
    let vals: Result<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::new(stream.seed, stream.id.wrapping_add(idx as u64)).rng();
            let x = sample_input(&mut rng, InputScheme::IidGaussian, dims)?;
            // det(I_b + g X^H X) = det(I_n + g X X^H)
            let gram = &x * x.adjoint();
            let spec = hermitian_eigs(&gram)?;
            let logdet: f64 = spec
                .values()
                .iter()
                .map(|&l| (1.0 + gamma_eff * l).log2())
                .sum();
            Ok(m * (b * log2_pi_e() + logdet))
        })
        .collect();
    Ok(mc_mean_stderr(&vals?))
}

/// Conditional output entropy under unitary modulation, in bits (exact):
/// `X^H X` has the fixed nonzero spectrum `b I_n`, so
/// `h(Y|X) = bm log2(pi e) + nm log2(1 + gamma b)`.
pub fn entropy_cond_ustm(dims: &SystemDims) -> f64 {
    (dims.b * dims.m) as f64 * log2_pi_e()
        + (dims.n * dims.m) as f64 * (1.0 + dims.gamma() * dims.b as f64).log2()
}

/// `E[log2(1 + cg delta)]` for one non-unit Beta eigenvalue, closed form.
///
/// Termwise over the marginal's cofactor polynomial with
/// `(1-x)^w` binomially expanded and
/// `int_0^1 x^{s-1}/(1+cg x) dx = 2F1(1, s; s+1; -cg) / s`.
fn beta_log_moment_closed(n: usize, p: usize, q: usize, cg: f64) -> Result<f64> {
    let parts = crate::eigdist::beta_marginal_terms(n, p, q)?;
    let w = parts.one_minus_pow as usize;
    let mut expect = SignedLog::ZERO;
    for &(coeff, pow) in &parts.terms {
        for l in 0..=w {
            let binom = ln_gamma((w + 1) as f64)
                - ln_gamma((l + 1) as f64)
                - ln_gamma((w - l + 1) as f64);
            let sgn = if l % 2 == 0 { 1i8 } else { -1 };
            let s = pow + l as f64 + 1.0; // antiderivative power x^s / s
            let f21 = pfq(
                &crate::specfn::PfqParams::new(vec![1.0, s + 1.0], vec![s + 2.0]),
                -cg,
            )?;
            let integral = SignedLog::from_f64((1.0 + cg).log2() / s)
                - f21 * SignedLog::from_f64(cg * LOG2_E / (s * s + s));
            expect = expect + coeff * SignedLog::new(sgn, binom) * integral;
        }
    }
    Ok(expect.to_f64())
}

/// Closed-form conditional output entropy under the Beta input, in bits:
/// `bm log2(pi e) + mn E[log2(1 + c gamma delta)]` with `delta` a single
/// unordered eigenvalue of `D`. Pinned-at-one eigenvalues (present when
/// `q = m + n - b < n`) contribute `log2(1 + c gamma)` deterministically.
pub fn entropy_cond_bstm(dims: &SystemDims) -> Result<f64> {
    let (m, n, b) = (dims.m, dims.n, dims.b);
    if b >= m + n || n > b || m < n {
        return Err(Error::BadRegime(format!(
            "Beta modulation requires n <= b < m + n and m >= n, got ({m}, {n}, {b})"
        )));
    }
    if m < b {
        // the binomial expansion of (1-x)^{m-b} needs m >= b
        return Err(Error::UnsupportedCase(
            "closed conditional Beta entropy implemented for m >= b".into(),
        ));
    }
    let c = bstm_power_constant(dims);
    let cg = c * dims.gamma();
    let (p, q) = (b - n, m + n - b);
    let k = n.min(q);
    let per_free = beta_log_moment_closed(n, p, q, cg)?;
    let pinned = n - k;
    let e_log = (k as f64 * per_free + pinned as f64 * (1.0 + cg).log2()) / n as f64;
    Ok((b * m) as f64 * log2_pi_e() + (m * n) as f64 * e_log)
}

/// Quadrature reference for the Beta conditional entropy: averages
/// `log2(1 + c gamma delta)` against the single-eigenvalue density directly.
pub fn entropy_cond_bstm_quadrature(dims: &SystemDims) -> Result<f64> {
    let (m, n, b) = (dims.m, dims.n, dims.b);
    let c = bstm_power_constant(dims);
    let cg = c * dims.gamma();
    let (p, q) = (b - n, m + n - b);
    let k = n.min(q);
    let rule = unit_kronrod_rule(32);
    let mut e_log = 0.0;
    for &(x, wgt) in &rule {
        e_log += crate::eigdist::beta_single_eig_pdf(n, p, q, x)? * (1.0 + cg * x).log2() * wgt;
    }
    let pinned = n - k;
    let avg = (k as f64 * e_log + pinned as f64 * (1.0 + cg).log2()) / n as f64;
    Ok((b * m) as f64 * log2_pi_e() + (m * n) as f64 * avg)
}

/// Perfect-CSI ergodic rate `E[log2 det(I + gamma H H^H)]` in bits per
/// channel use; the coherent baseline the curves compare against.
pub fn perfect_csi_mi(
    model: &ChannelModel,
    dims: &SystemDims,
    samples: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    let g = dims.gamma();
    let vals: Result<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::new(stream.seed, stream.id.wrapping_add(idx as u64)).rng();
            let h = crate::sampling::sample_channel(&mut rng, model, dims)?;
            let spec = crate::sampling::channel_gramian_spectrum(&h)?;
            Ok(spec.values().iter().map(|&l| (1.0 + g * l).log2()).sum())
        })
        .collect();
    Ok(mc_mean_stderr(&vals?))
}

/// Channel/input pairing of a mutual-information run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MiConfig {
    Gaussian(ChannelModel),
    Ustm,
    Bstm,
}

/// Mutual information `I = (h(Y) - h(Y|X)) / b` over an SNR grid, in bits
/// per channel use. `samples` draws per grid point; the per-point standard
/// error pools the output-entropy and conditional-entropy errors.
pub fn mutual_information(
    config: &MiConfig,
    base: &SystemDims,
    snr_db_grid: &[f64],
    samples: usize,
    stream: RngStream,
    opts: &EvalOptions,
) -> Result<Vec<MiCurvePoint>> {
    let mut out = Vec::with_capacity(snr_db_grid.len());
    for (pt, &snr_db) in snr_db_grid.iter().enumerate() {
        let dims = SystemDims::new(base.m, base.n, base.b, 10f64.powf(snr_db / 10.0))?;
        let pt_stream = RngStream::new(stream.seed, stream.id ^ ((pt as u64) << 32));
        let (h_y, se_y, h_cond, se_cond) = match config {
            MiConfig::Gaussian(model) => {
                let (h_y, se_y) =
                    entropy_output(&OutputLaw::Gaussian(*model), &dims, samples, pt_stream, opts)?;
                let (h_c, se_c) = entropy_cond_gaussian_input(
                    &dims,
                    model,
                    samples,
                    RngStream::new(stream.seed ^ 0xc0ffee, pt_stream.id),
                )?;
                (h_y, se_y, h_c, se_c)
            }
            MiConfig::Ustm => {
                let (h_y, se_y) = entropy_output(&OutputLaw::Ustm, &dims, samples, pt_stream, opts)?;
                (h_y, se_y, entropy_cond_ustm(&dims), 0.0)
            }
            MiConfig::Bstm => {
                let (h_y, se_y) = entropy_output(&OutputLaw::Bstm, &dims, samples, pt_stream, opts)?;
                (h_y, se_y, entropy_cond_bstm(&dims)?, 0.0)
            }
        };
        let b = dims.b as f64;
        out.push(MiCurvePoint {
            snr_db,
            mi_bits: (h_y - h_cond) / b,
            stderr: (se_y * se_y + se_cond * se_cond).sqrt() / b,
            h_y,
            h_y_given_x: h_cond,
        });
    }
    Ok(out)
}
