//! Generalized hypergeometric functions and confluent determinant limits.
//!
//! The series engine keeps the running term in signed-log form so arguments
//! up to 1e4 and values like `exp(2 sqrt(x))` never overflow. Scalar fast
//! paths (`log_0f1`, `log_1f1`) cover the entries that appear inside hot
//! quadrature loops, with large-argument asymptotics where the plain series
//! would need thousands of terms.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{mv_gamma_log, vandermonde_log, Spectrum, LN_PI};
use crate::signedlog::SignedLog;

const MAX_TERMS: usize = 100_000;
const REL_TERM_TOL: f64 = 1e-16;

/// Upper/lower parameter lists of a generalized hypergeometric `pFq`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfqParams {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl PfqParams {
    pub fn new(upper: Vec<f64>, lower: Vec<f64>) -> Self {
        PfqParams { upper, lower }
    }

    fn is_nonpos_int(v: f64) -> bool {
        v <= 0.0 && v.fract() == 0.0
    }

    /// Index at which the series truncates (an upper parameter is a
    /// non-positive integer), if any. The sum then runs over `0..=k_max`.
    fn truncation(&self) -> Option<usize> {
        self.upper
            .iter()
            .filter(|&&a| Self::is_nonpos_int(a))
            .map(|&a| (-a) as usize)
            .min()
    }

    /// Rejects lower-parameter poles that are not cancelled by an earlier
    /// truncation of the series.
    fn validate(&self) -> Result<()> {
        let trunc = self.truncation();
        for &b in &self.lower {
            if Self::is_nonpos_int(b) {
                let pole_at = (-b) as usize + 1;
                match trunc {
                    Some(k_max) if k_max < pole_at => {}
                    _ => return Err(Error::LowerParamPole(b)),
                }
            }
        }
        Ok(())
    }

    fn shifted(&self, ell: usize) -> PfqParams {
        let l = ell as f64;
        PfqParams {
            upper: self.upper.iter().map(|a| a + l).collect(),
            lower: self.lower.iter().map(|b| b + l).collect(),
        }
    }
}

/// `(z)_k` as a signed-log value, valid for any real `z`.
pub fn pochhammer(z: f64, k: usize) -> SignedLog {
    let mut acc = SignedLog::ONE;
    for j in 0..k {
        acc = acc * SignedLog::from_f64(z + j as f64);
    }
    acc
}

fn raw_series(params: &PfqParams, x: f64) -> Result<SignedLog> {
    let trunc = params.truncation();
    let mut term = SignedLog::ONE;
    let mut shift = 0.0f64;
    let mut acc = 1.0f64; // running sum scaled by exp(shift)
    let mut k = 0usize;
    loop {
        if let Some(k_max) = trunc {
            if k >= k_max {
                break;
            }
        }
        let kf = k as f64;
        let mut factor = x / (kf + 1.0);
        for &a in &params.upper {
            factor *= a + kf;
        }
        for &b in &params.lower {
            factor /= b + kf;
        }
        term = term * SignedLog::from_f64(factor);
        if term.is_zero() {
            break;
        }
        if term.logmag() > shift {
            acc *= (shift - term.logmag()).exp();
            shift = term.logmag();
        }
        acc += term.sign() as f64 * (term.logmag() - shift).exp();
        k += 1;
        // Converged once the term is negligible and past any growth phase.
        let sum_mag = shift + acc.abs().max(1e-300).ln();
        if term.logmag() < sum_mag + REL_TERM_TOL.ln() && factor.abs() < 1.0 {
            break;
        }
        if k >= MAX_TERMS {
            return Err(Error::NonConvergent {
                evals: k,
                err: (term.logmag() - sum_mag).exp(),
            });
        }
    }
    Ok(SignedLog::from_f64(acc) * SignedLog::from_ln(shift))
}

/// Generalized hypergeometric function `pFq(a; b; x)` in signed-log form.
///
/// Convergence domain: any `x` for `p <= q`; `|x| < 1` for `p = q + 1`
/// (after the Pfaff map for 2F1 with `x < 0`); truncating series otherwise.
/// 1F0 and 0F0 are evaluated in closed form. 1F1 arguments below
/// `-40` are routed through the Kummer transformation
/// `e^x 1F1(b-a; b; -x)`, which lands in the cancellation-free region.
pub fn pfq(params: &PfqParams, x: f64) -> Result<SignedLog> {
    params.validate()?;
    let (p, q) = (params.upper.len(), params.lower.len());
    if x == 0.0 {
        return Ok(SignedLog::ONE);
    }
    // Closed forms.
    if p == 0 && q == 0 {
        return Ok(SignedLog::from_ln(x));
    }
    if p == 1 && q == 0 {
        // (1 - x)^{-a}
        if x >= 1.0 {
            return Err(Error::SeriesDivergence { p, q, x });
        }
        return Ok(SignedLog::from_f64(1.0 - x).powf(-params.upper[0]));
    }
    if p == 1 && q == 1 && x < 0.0 && params.truncation().is_none() {
        // Kummer: e^x 1F1(b-a; b; -x). The positive-argument series is
        // monotone; the alternating one loses exp(|x|) of relative accuracy.
        // Truncating (polynomial) cases stay on the exact direct sum.
        let flipped = PfqParams::new(
            vec![params.lower[0] - params.upper[0]],
            params.lower.clone(),
        );
        return Ok(SignedLog::from_ln(x) * raw_series(&flipped, -x)?);
    }
    if p == 2 && q == 1 && x < 0.0 {
        // Pfaff: 2F1(a,b;c;x) = (1-x)^{-a} 2F1(a, c-b; c; x/(x-1))
        let a = params.upper[0];
        let b = params.upper[1];
        let c = params.lower[0];
        let mapped = PfqParams::new(vec![a, c - b], vec![c]);
        let z = x / (x - 1.0);
        return Ok(SignedLog::from_f64(1.0 - x).powf(-a) * raw_series(&mapped, z)?);
    }
    if p > q + 1 && params.truncation().is_none() {
        return Err(Error::SeriesDivergence { p, q, x });
    }
    if p == q + 1 && x.abs() >= 1.0 && params.truncation().is_none() {
        return Err(Error::SeriesDivergence { p, q, x });
    }
    raw_series(params, x)
}

/// `d^l/dx^l pFq(a; b; s x)` via the parameter-shift rule
/// `s^l ([a]_l / [b]_l) pFq(a + l; b + l; s x)`.
pub fn pfq_derivative(params: &PfqParams, s: f64, x: f64, ell: usize) -> Result<SignedLog> {
    let mut coeff = SignedLog::from_f64(s).powi(ell as i64);
    for &a in &params.upper {
        coeff = coeff * pochhammer(a, ell);
    }
    for &b in &params.lower {
        coeff = coeff / pochhammer(b, ell);
    }
    Ok(coeff * pfq(&params.shifted(ell), s * x)?)
}

/// `ln 0F1(; b; x)` for `x >= 0`; positive series, never cancels.
pub fn log_0f1(b: f64, x: f64) -> Result<f64> {
    debug_assert!(x >= 0.0);
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(Error::LowerParamPole(b));
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut shift = 0.0f64;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        term *= x / ((kf + 1.0) * (b + kf));
        sum += term;
        k += 1;
        if term < REL_TERM_TOL * sum && kf * kf > x {
            break;
        }
        if sum > 1e280 {
            shift += sum.ln();
            term /= sum;
            sum = 1.0;
        }
        if k >= MAX_TERMS {
            return Err(Error::NonConvergent { evals: k, err: term / sum });
        }
    }
    Ok(shift + sum.ln())
}

/// `ln 1F1(a; b; x)` for `a > 0`, `b > 0`, `x >= 0`.
///
/// Positive series up to `x = 400`, then the large-argument expansion
/// `Gamma(b)/Gamma(a) e^x x^{a-b} sum_k (b-a)_k (1-a)_k / (k! x^k)`
/// truncated at its smallest term.
pub fn log_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    debug_assert!(x >= 0.0);
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(Error::LowerParamPole(b));
    }
    debug_assert!(a > 0.0 && b > 0.0);
    let asym_safe = x > 400.0 && x > 10.0 * (b - a).abs() * ((a - 1.0).abs() + 1.0);
    if !asym_safe {
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut shift = 0.0f64;
        let mut k = 0usize;
        loop {
            let kf = k as f64;
            term *= x * (a + kf) / ((kf + 1.0) * (b + kf));
            sum += term;
            k += 1;
            if term < REL_TERM_TOL * sum && kf > x {
                break;
            }
            if sum > 1e280 {
                shift += sum.ln();
                term /= sum;
                sum = 1.0;
            }
            if k >= MAX_TERMS {
                return Err(Error::NonConvergent { evals: k, err: term / sum });
            }
        }
        return Ok(shift + sum.ln());
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 0..60usize {
        let kf = k as f64;
        term *= (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * x);
        if term.abs() >= prev {
            break; // smallest term reached; asymptotic tail starts growing
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok(ln_gamma(b) - ln_gamma(a) + x + (a - b) * x.ln() + sum.ln())
}

/// Hypergeometric function of two m x m matrix arguments, reduced to a
/// determinant of scalar evaluations:
/// `pFq(a; b; Phi, Psi) = c |{pFq(a~; b~; phi_h psi_k)}| / (V(Phi) V(Psi))`.
///
/// Requires all parameters `> m - 1` so the constant's factorials are finite,
/// and both spectra distinct (route coincident spectra through
/// [`confluent_ratio`]).
pub fn pfq_two_matrix(params: &PfqParams, phi: &Spectrum, psi: &Spectrum) -> Result<SignedLog> {
    if phi.len() != psi.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix-argument spectra of sizes {} and {}",
            phi.len(),
            psi.len()
        )));
    }
    let m = phi.len();
    phi.ensure_distinct()?;
    psi.ensure_distinct()?;
    let mf = m as f64;
    for &v in params.upper.iter().chain(params.lower.iter()) {
        if v <= mf - 1.0 {
            return Err(Error::GammaPole { dim: m, arg: v });
        }
    }
    let (p, q) = (params.upper.len(), params.lower.len());
    let mut ln_c = mv_gamma_log(m, mf)?
        - (q as f64 - p as f64 + 1.0) * (m * (m - 1)) as f64 / 2.0 * LN_PI;
    for &b in &params.lower {
        ln_c += mv_gamma_log(m, b)? - mf * ln_gamma(b - mf + 1.0);
    }
    for &a in &params.upper {
        ln_c += mf * ln_gamma(a - mf + 1.0) - mv_gamma_log(m, a)?;
    }
    let shifted = PfqParams::new(
        params.upper.iter().map(|a| a - mf + 1.0).collect(),
        params.lower.iter().map(|b| b - mf + 1.0).collect(),
    );
    let mut entries = Vec::with_capacity(m * m);
    for &ph in phi.values() {
        for &ps in psi.values() {
            entries.push(pfq(&shifted, ph * ps)?);
        }
    }
    let det = crate::linalg::det_from_signedlog_entries(m, &entries)?;
    let vv = vandermonde_log(phi)? * vandermonde_log(psi)?;
    Ok((SignedLog::from_ln(ln_c) * det / vv).abs())
}

/// `1F1(a; b; Psi)` of a single m x m Hermitian matrix argument through the
/// determinantal form `|{1F1(a-m+j; b-m+j; psi_i) psi_i^{j-1}}| / V(Psi)`.
///
/// Near-zero arguments take the first-order expansion `1 + (a/b) tr(Psi)`
/// instead, where the determinant ratio would lose every significant digit.
pub fn log_1f1_matrix(a: f64, b: f64, psi: &Spectrum) -> Result<SignedLog> {
    let m = psi.len();
    if m == 1 {
        return pfq(
            &PfqParams::new(vec![a], vec![b]),
            psi.values()[0],
        );
    }
    if psi.max_abs() < 1e-7 {
        // 1 + (a/b) tr + O(||Psi||^2); the quadratic term is below 1e-14.
        return Ok(SignedLog::from_f64(1.0 + a / b * psi.sum()));
    }
    psi.ensure_distinct()?;
    let mf = m as f64;
    let mut entries = Vec::with_capacity(m * m);
    for &p in psi.values() {
        for j in 1..=m {
            let jf = j as f64;
            let params = PfqParams::new(vec![a - mf + jf], vec![b - mf + jf]);
            entries.push(pfq(&params, p)? * SignedLog::from_f64(p).powi(j as i64 - 1));
        }
    }
    let det = crate::linalg::det_from_signedlog_entries(m, &entries)?;
    Ok((det / vandermonde_log(psi)?).abs())
}

/// A scalar function with derivatives of every order needed by the confluent
/// limits. Derivatives are analytic by construction, never finite differences.
pub trait FunctionFamily {
    fn value(&self, x: f64) -> Result<SignedLog>;
    /// `order = 0` must agree with [`FunctionFamily::value`].
    fn derivative(&self, order: usize, x: f64) -> Result<SignedLog>;
}

/// `f(x) = pFq(a; b; s x)`.
pub struct PfqScaled {
    pub params: PfqParams,
    pub scale: f64,
}

impl FunctionFamily for PfqScaled {
    fn value(&self, x: f64) -> Result<SignedLog> {
        pfq(&self.params, self.scale * x)
    }
    fn derivative(&self, order: usize, x: f64) -> Result<SignedLog> {
        pfq_derivative(&self.params, self.scale, x, order)
    }
}

/// `f(x) = x^k` for integer `k >= 0`.
pub struct Monomial {
    pub power: usize,
}

impl FunctionFamily for Monomial {
    fn value(&self, x: f64) -> Result<SignedLog> {
        Ok(SignedLog::from_f64(x).powi(self.power as i64))
    }
    fn derivative(&self, order: usize, x: f64) -> Result<SignedLog> {
        if order > self.power {
            return Ok(SignedLog::ZERO);
        }
        let mut coeff = SignedLog::ONE;
        for j in 0..order {
            coeff = coeff * SignedLog::from_f64((self.power - j) as f64);
        }
        Ok(coeff * SignedLog::from_f64(x).powi((self.power - order) as i64))
    }
}

/// `f(x) = e^{y x}`.
pub struct ExpRate {
    pub rate: f64,
}

impl FunctionFamily for ExpRate {
    fn value(&self, x: f64) -> Result<SignedLog> {
        Ok(SignedLog::from_ln(self.rate * x))
    }
    fn derivative(&self, order: usize, x: f64) -> Result<SignedLog> {
        Ok(SignedLog::from_f64(self.rate).powi(order as i64) * SignedLog::from_ln(self.rate * x))
    }
}

/// l'Hopital limit of `|{f_i(a_j)}| / V(A)` as the trailing `m - n`
/// eigenvalues of `A` coincide at `a`:
///
/// `(pi_m Gamma_n(m)) / (pi_n Gamma_m(m)) * |F~| / V(A~) * |A~ - aI|^{n-m}`
///
/// where `F~` has function values at the `n` survivors in its first columns
/// and derivatives `f_i^{(m-j)}(a)` in the rest. `n = 0` collapses to
/// `pi_m / Gamma_m(m) * |F~|` of pure derivatives.
pub fn confluent_ratio(
    families: &[&dyn FunctionFamily],
    survivors: &Spectrum,
    a: f64,
    m: usize,
) -> Result<SignedLog> {
    let n = survivors.len();
    if families.len() != m || n >= m {
        return Err(Error::DimensionMismatch(format!(
            "confluent ratio needs {m} families and fewer than {m} survivors (got {n})"
        )));
    }
    if n > 0 {
        survivors.ensure_distinct()?;
        let gap_tol = 1e-8 * (1.0 + survivors.max_abs().max(a.abs()));
        if survivors.values().iter().any(|&s| (s - a).abs() < gap_tol) {
            return Err(Error::DegenerateSpectrum {
                mingap: survivors
                    .values()
                    .iter()
                    .map(|&s| (s - a).abs())
                    .fold(f64::INFINITY, f64::min),
                threshold: gap_tol,
            });
        }
    }
    let mut entries = Vec::with_capacity(m * m);
    for fam in families {
        for j in 1..=m {
            if j <= n {
                entries.push(fam.value(survivors.values()[j - 1])?);
            } else {
                entries.push(fam.derivative(m - j, a)?);
            }
        }
    }
    let det = crate::linalg::det_from_signedlog_entries(m, &entries)?;
    let pi_ratio = ((m * (m - 1)) as f64 - (n * n.saturating_sub(1)) as f64) / 2.0 * LN_PI;
    let mut ln_const = pi_ratio - mv_gamma_log(m, m as f64)?;
    let mut value = SignedLog::from_ln(ln_const) * det;
    if n > 0 {
        ln_const = mv_gamma_log(n, m as f64)?;
        value = value * SignedLog::from_ln(ln_const) / vandermonde_log(survivors)?;
        let mut shift_det = SignedLog::ONE;
        for &s in survivors.values() {
            shift_det = shift_det * SignedLog::from_f64(s - a);
        }
        value = value * shift_det.powi(n as i64 - m as i64);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(upper: &[f64], lower: &[f64]) -> PfqParams {
        PfqParams::new(upper.to_vec(), lower.to_vec())
    }

    #[test]
    fn exponential_case() {
        // 0F0(;;1) = e
        let v = pfq(&p(&[], &[]), 1.0).unwrap();
        assert_relative_eq!(v.to_f64(), std::f64::consts::E, max_relative = 1e-15);
    }

    #[test]
    fn binomial_case() {
        // 1F0(2;;0.5) = (1 - 0.5)^{-2} = 4
        let v = pfq(&p(&[2.0], &[]), 0.5).unwrap();
        assert_relative_eq!(v.to_f64(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn kummer_closed_form() {
        // 1F1(1;2;x) = (e^x - 1)/x, checked against a raw summation oracle
        let v = pfq(&p(&[1.0], &[2.0]), 1.0).unwrap();
        assert_relative_eq!(v.to_f64(), 1.718281828459045, max_relative = 1e-14);
        let mut oracle = 0.0f64;
        let mut term = 1.0f64;
        for k in 0..60 {
            oracle += term;
            term *= 1.0 / (2.0 + k as f64);
        }
        assert_relative_eq!(v.to_f64(), oracle, max_relative = 1e-14);
    }

    #[test]
    fn at_zero_is_one() {
        for params in [p(&[1.5], &[3.0]), p(&[], &[2.0]), p(&[0.5, 1.0], &[2.5])] {
            assert_eq!(pfq(&params, 0.0).unwrap(), SignedLog::ONE);
        }
    }

    #[test]
    fn truncated_polynomial() {
        // 1F1(-2; 3; x) = 1 - 2x/3 + x^2/12
        let x = 1.7;
        let v = pfq(&p(&[-2.0], &[3.0]), x).unwrap();
        assert_relative_eq!(
            v.to_f64(),
            1.0 - 2.0 * x / 3.0 + x * x / 12.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lower_pole_detected() {
        assert!(matches!(
            pfq(&p(&[1.0], &[-2.0]), 0.5),
            Err(Error::LowerParamPole(_))
        ));
        // cancelled by earlier truncation: upper -1 stops at k=1 before the pole at k=3
        assert!(pfq(&p(&[-1.0], &[-2.0]), 0.5).is_ok());
    }

    #[test]
    fn gauss_series_divergence() {
        assert!(matches!(
            pfq(&p(&[1.0, 2.0], &[3.0]), 1.5),
            Err(Error::SeriesDivergence { .. })
        ));
    }

    #[test]
    fn kummer_consistency_both_branches() {
        // 1F1(a;b;x) = e^x 1F1(b-a;b;-x); mpmath cross-check for the largest x.
        let (a, b) = (1.5, 3.0);
        for x in [5.0, 20.0, 60.0] {
            let direct = pfq(&p(&[a], &[b]), x).unwrap();
            let flipped = SignedLog::from_ln(x) * pfq(&p(&[b - a], &[b]), -x).unwrap();
            assert_relative_eq!(direct.logmag(), flipped.logmag(), max_relative = 1e-12);
            assert_eq!(direct.sign(), flipped.sign());
        }
        let v = pfq(&p(&[1.5], &[3.0]), -60.0).unwrap();
        // mpmath: 1F1(1.5, 3, -60) = 0.0047944220399098370
        assert_relative_eq!(v.to_f64(), 0.0047944220399098370, max_relative = 1e-12);
        let v = pfq(&p(&[1.5], &[3.0]), 60.0).unwrap();
        // mpmath: 1F1(1.5, 3, 60) = 5.4752653994722214e23
        assert_relative_eq!(v.to_f64(), 5.4752653994722214e23, max_relative = 1e-12);
    }

    #[test]
    fn pfaff_consistency() {
        let (a, b, c) = (1.2, 0.8, 2.5);
        let x = -3.0;
        let engine = pfq(&p(&[a, b], &[c]), x).unwrap();
        // explicit transformed evaluation
        let manual = SignedLog::from_f64(1.0 - x).powf(-a)
            * pfq(&p(&[a, c - b], &[c]), x / (x - 1.0)).unwrap();
        assert_relative_eq!(engine.to_f64(), manual.to_f64(), max_relative = 1e-10);
        // mpmath: 2F1(1.2, 0.8; 2.5; -3) = 0.53573544654757186
        assert_relative_eq!(engine.to_f64(), 0.53573544654757186, max_relative = 1e-12);
    }

    #[test]
    fn fast_paths_match_generic_series() {
        for x in [0.5, 30.0, 380.0, 450.0, 2000.0, 15000.0] {
            let fast = log_0f1(3.0, x).unwrap();
            let generic = pfq(&p(&[], &[3.0]), x).unwrap();
            assert_relative_eq!(fast, generic.logmag(), max_relative = 1e-11);
        }
        // mpmath: ln 0F1(;3;10000) = 187.90531111088407
        assert_relative_eq!(
            log_0f1(3.0, 10000.0).unwrap(),
            187.90531111088407,
            max_relative = 1e-13
        );
        for (a, b) in [(1.0, 4.0), (2.5, 6.0), (3.0, 3.5)] {
            for x in [10.0, 399.0, 401.0, 1200.0, 20000.0] {
                let fast = log_1f1(a, b, x).unwrap();
                let generic = pfq(&p(&[a], &[b]), x).unwrap();
                assert_relative_eq!(fast, generic.logmag(), max_relative = 1e-10);
            }
        }
        // mpmath: ln 1F1(2;5;300) = 286.05665607052584
        assert_relative_eq!(
            log_1f1(2.0, 5.0, 300.0).unwrap(),
            286.05665607052584,
            max_relative = 1e-13
        );
    }

    #[test]
    fn derivative_rule() {
        // zeroth derivative is the function itself
        let params = p(&[1.5], &[2.5]);
        let d0 = pfq_derivative(&params, 2.0, 0.7, 0).unwrap();
        assert_relative_eq!(
            d0.to_f64(),
            pfq(&params, 1.4).unwrap().to_f64(),
            max_relative = 1e-14
        );
        // d/dx 0F0(;;sx) = s e^{sx} at s = 2, x = 0 -> 2
        let d1 = pfq_derivative(&p(&[], &[]), 2.0, 0.0, 1).unwrap();
        assert_relative_eq!(d1.to_f64(), 2.0, max_relative = 1e-14);
        // d^2/dx^2 1F1(1;2;x) at 0.5 vs central difference and mpmath
        let params = p(&[1.0], &[2.0]);
        let d2 = pfq_derivative(&params, 1.0, 0.5, 2).unwrap();
        let h = 1e-4;
        let f = |x: f64| pfq(&params, x).unwrap().to_f64();
        let fd = (f(0.5 + h) - 2.0 * f(0.5) + f(0.5 - h)) / (h * h);
        assert_relative_eq!(d2.to_f64(), fd, max_relative = 1e-6);
        assert_relative_eq!(d2.to_f64(), 0.48721270700128147, max_relative = 1e-12);
    }

    #[test]
    fn two_matrix_reduces_to_scalar() {
        let params = p(&[3.0], &[4.0]);
        let phi = Spectrum::new(vec![0.7]).unwrap();
        let psi = Spectrum::new(vec![1.3]).unwrap();
        let two = pfq_two_matrix(&params, &phi, &psi).unwrap();
        let scalar = pfq(&params, 0.7 * 1.3).unwrap();
        assert_relative_eq!(two.to_f64(), scalar.to_f64(), max_relative = 1e-13);
    }

    #[test]
    fn two_matrix_symmetric_in_arguments() {
        let params = p(&[4.0], &[5.5]);
        let phi = Spectrum::new(vec![1.9, 0.4]).unwrap();
        let psi = Spectrum::new(vec![1.1, 0.3]).unwrap();
        let a = pfq_two_matrix(&params, &phi, &psi).unwrap();
        let b = pfq_two_matrix(&params, &psi, &phi).unwrap();
        assert_relative_eq!(a.logmag(), b.logmag(), max_relative = 1e-12);
    }

    #[test]
    fn two_matrix_param_domain() {
        let phi = Spectrum::new(vec![1.9, 0.4]).unwrap();
        let psi = Spectrum::new(vec![1.1, 0.3]).unwrap();
        assert!(matches!(
            pfq_two_matrix(&p(&[0.5], &[3.0]), &phi, &psi),
            Err(Error::GammaPole { .. })
        ));
    }

    #[test]
    fn matrix_1f1_small_argument_expansion() {
        let psi = Spectrum::new(vec![2e-12, 1e-12]).unwrap();
        let v = log_1f1_matrix(4.0, 2.0, &psi).unwrap();
        assert_relative_eq!(v.to_f64(), 1.0 + 2.0 * 3e-12, max_relative = 1e-12);
    }

    #[test]
    fn confluent_ratio_scalar_exponential() {
        // m = 1, n = 0, f(x) = e^{yx}: limit is e^{ya} itself
        let fam = ExpRate { rate: 0.8 };
        let fams: [&dyn FunctionFamily; 1] = [&fam];
        let empty = Spectrum::new(vec![]).unwrap();
        let v = confluent_ratio(&fams, &empty, 2.0, 1).unwrap();
        assert_relative_eq!(v.to_f64(), (0.8f64 * 2.0).exp(), max_relative = 1e-13);
    }

    #[test]
    fn confluent_ratio_matches_perturbed_monomials() {
        // f_i(x) = x^{i-1}, all eigenvalues -> a: compare against the direct
        // ratio at eps-perturbed eigenvalues with Richardson extrapolation.
        let m = 3;
        let a = 1.4f64;
        let fams_store: Vec<Monomial> = (0..m).map(|i| Monomial { power: i }).collect();
        let fams: Vec<&dyn FunctionFamily> = fams_store.iter().map(|f| f as _).collect();
        let empty = Spectrum::new(vec![]).unwrap();
        let limit = confluent_ratio(&fams, &empty, a, m).unwrap();

        let direct = |eps: f64| -> f64 {
            let vals: Vec<f64> = (0..m).map(|j| a + eps * (m - j) as f64).collect();
            let spec = Spectrum::new(vals.clone()).unwrap();
            let mut entries = Vec::new();
            for f in &fams_store {
                for &x in spec.values() {
                    entries.push(f.value(x).unwrap());
                }
            }
            let det = crate::linalg::det_from_signedlog_entries(m, &entries).unwrap();
            (det / vandermonde_log(&spec).unwrap()).to_f64()
        };
        // Richardson in eps (error is O(eps)): r(eps) = 2 f(eps/2) - f(eps)
        let eps = 1e-3;
        let extrap = 2.0 * direct(eps / 2.0) - direct(eps);
        assert_relative_eq!(limit.to_f64(), extrap, max_relative = 1e-6);
    }

    #[test]
    fn confluent_ratio_with_survivors_matches_perturbation() {
        // mixed case: n = 1 survivor, m = 3, pFq families
        let m = 3;
        let a = 0.3f64;
        let fams_store: Vec<PfqScaled> = (1..=m)
            .map(|i| PfqScaled {
                params: p(&[], &[i as f64 + 1.0]),
                scale: 1.0 + 0.5 * i as f64,
            })
            .collect();
        let fams: Vec<&dyn FunctionFamily> = fams_store.iter().map(|f| f as _).collect();
        let survivors = Spectrum::new(vec![1.9]).unwrap();
        let limit = confluent_ratio(&fams, &survivors, a, m).unwrap();

        let direct = |eps: f64| -> f64 {
            let spec = Spectrum::new(vec![1.9, a + 2.0 * eps, a + eps]).unwrap();
            let mut entries = Vec::new();
            for f in &fams_store {
                for &x in spec.values() {
                    entries.push(f.value(x).unwrap());
                }
            }
            let det = crate::linalg::det_from_signedlog_entries(m, &entries).unwrap();
            (det / vandermonde_log(&spec).unwrap()).to_f64()
        };
        let eps = 1e-3;
        let extrap = 2.0 * direct(eps / 2.0) - direct(eps);
        assert_relative_eq!(limit.to_f64(), extrap, max_relative = 1e-5);
    }
}
