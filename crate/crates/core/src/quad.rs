//! Adaptive one-dimensional quadrature over signed-log integrands.
//!
//! Panels are refined with an embedded Gauss7/Kronrod15 pair. Semi-infinite
//! domains are mapped to the unit interval by `x = a + t/(1-t)`; declared
//! `x^p` endpoint behavior at the left edge goes through `x = a + u^2` first.
//! All function values stay in signed-log form so integrands whose peaks sit
//! at `exp(1e4)` are handled without overflow.

use crate::error::{Error, Result};
use crate::signedlog::{sum_signedlog, SignedLog};

/// G7K15 abscissae (positive half, Kronrod ordering).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const MAX_EVALS: usize = 1_000_000;
const INITIAL_PANELS: usize = 8;

/// Integration domain of an [`Integrand1D`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite { a: f64, b: f64 },
    /// `[a, +inf)`
    SemiInfinite { a: f64 },
}

/// A one-dimensional integrand evaluated in signed-log form.
pub struct Integrand1D<'a> {
    pub eval: &'a (dyn Fn(f64) -> SignedLog + Sync),
    pub domain: Domain,
    /// Declared `x^p` (p > -1) behavior at the left endpoint; handled by the
    /// substitution `x = a + u^2` before the semi-infinite map.
    pub sqrt_left: bool,
}

impl<'a> Integrand1D<'a> {
    pub fn new(eval: &'a (dyn Fn(f64) -> SignedLog + Sync), domain: Domain) -> Self {
        Integrand1D {
            eval,
            domain,
            sqrt_left: false,
        }
    }

    pub fn with_sqrt_left(mut self) -> Self {
        self.sqrt_left = true;
        self
    }

    /// Maps unit-interval coordinate `t in (0,1)` to `(x, ln jacobian)`.
    fn map(&self, t: f64) -> (f64, f64) {
        match self.domain {
            Domain::Finite { a, b } => {
                let w = b - a;
                if self.sqrt_left {
                    // x = a + w u^2, u = t
                    (a + w * t * t, (2.0 * w * t).ln())
                } else {
                    (a + w * t, w.ln())
                }
            }
            Domain::SemiInfinite { a } => {
                let u = t / (1.0 - t);
                let ln_du = -2.0 * (1.0 - t).ln();
                if self.sqrt_left {
                    // x = a + u^2, du-chain: dx = 2u du
                    (a + u * u, (2.0 * u).ln() + ln_du)
                } else {
                    (a + u, ln_du)
                }
            }
        }
    }

    fn eval_mapped(&self, t: f64) -> SignedLog {
        let (x, ln_jac) = self.map(t);
        let v = (self.eval)(x);
        v * SignedLog::from_ln(ln_jac)
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: SignedLog,
    err: SignedLog,
}

/// One G7K15 application on `[lo, hi]` in unit-space coordinates.
fn kronrod_panel(f: &Integrand1D, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let hlen = 0.5 * (hi - lo);
    let ln_hlen = hlen.ln();
    let mut k_terms: Vec<SignedLog> = Vec::with_capacity(15);
    let mut g_terms: Vec<SignedLog> = Vec::with_capacity(7);
    let fc = f.eval_mapped(center);
    k_terms.push(fc * SignedLog::from_f64(WGK[7]));
    g_terms.push(fc * SignedLog::from_f64(WG[3]));
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f.eval_mapped(center - hlen * x);
        let f2 = f.eval_mapped(center + hlen * x);
        let wk = SignedLog::from_f64(WGK[j]);
        k_terms.push(f1 * wk);
        k_terms.push(f2 * wk);
        if j % 2 == 1 {
            let wg = SignedLog::from_f64(WG[j / 2]);
            g_terms.push(f1 * wg);
            g_terms.push(f2 * wg);
        }
    }
    let resk = sum_signedlog(k_terms.into_iter()) * SignedLog::from_ln(ln_hlen);
    let resg = sum_signedlog(g_terms.into_iter()) * SignedLog::from_ln(ln_hlen);
    Panel {
        lo,
        hi,
        value: resk,
        err: (resk - resg).abs(),
    }
}

/// Adaptive integration; returns the value and a relative error estimate.
///
/// Fails with [`Error::NonConvergent`] once the evaluation budget (1e6 calls)
/// is exhausted, and rejects any non-finite integrand sample.
pub fn integrate(f: &Integrand1D, reltol: f64) -> Result<(SignedLog, f64)> {
    let (value, rel_err, _) = integrate_impl(f, reltol)?;
    Ok((value, rel_err))
}

/// Like [`integrate`] but also returns the final panel boundaries in unit
/// space, for reuse as a fixed quadrature rule on nearby integrands.
pub fn integrate_with_panels(f: &Integrand1D, reltol: f64) -> Result<(SignedLog, f64, Vec<f64>)> {
    integrate_impl(f, reltol)
}

fn integrate_impl(f: &Integrand1D, reltol: f64) -> Result<(SignedLog, f64, Vec<f64>)> {
    let reltol = reltol.max(1e-13);
    let mut panels: Vec<Panel> = Vec::new();
    let mut evals = 0usize;
    for i in 0..INITIAL_PANELS {
        let lo = i as f64 / INITIAL_PANELS as f64;
        let hi = (i + 1) as f64 / INITIAL_PANELS as f64;
        panels.push(kronrod_panel(f, lo, hi));
        evals += 15;
    }
    loop {
        let total_mag = sum_signedlog(panels.iter().map(|p| p.value.abs()));
        let total_err = sum_signedlog(panels.iter().map(|p| p.err));
        if !total_mag.is_finite() || !total_err.is_finite() {
            return Err(Error::NonFinite("integrand sample"));
        }
        let rel_err = if total_mag.is_zero() {
            if total_err.is_zero() {
                break;
            }
            f64::INFINITY
        } else {
            (total_err.logmag() - total_mag.logmag()).exp()
        };
        if rel_err < reltol {
            break;
        }
        if evals >= MAX_EVALS {
            return Err(Error::NonConvergent {
                evals,
                err: rel_err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.err.abs_cmp(&b.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Panel { lo, hi, .. } = panels[worst];
        let mid = 0.5 * (lo + hi);
        panels[worst] = kronrod_panel(f, lo, mid);
        panels.push(kronrod_panel(f, mid, hi));
        evals += 30;
    }
    let value = sum_signedlog(panels.iter().map(|p| p.value));
    let total_mag = sum_signedlog(panels.iter().map(|p| p.value.abs()));
    let total_err = sum_signedlog(panels.iter().map(|p| p.err));
    let rel_err = if total_mag.is_zero() {
        0.0
    } else {
        (total_err.logmag() - total_mag.logmag()).exp()
    };
    panels.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut breaks: Vec<f64> = panels.iter().map(|p| p.lo).collect();
    breaks.push(1.0);
    Ok((value, rel_err, breaks))
}

/// Fixed quadrature rule: the K15 nodes and log-weights (jacobian included)
/// induced by a panel subdivision of the unit interval under an integrand's
/// domain map. Reusing one rule across many related integrands moves the
/// expensive special-function work out of Monte-Carlo loops.
pub struct FixedRule {
    /// `(x, ln w)` pairs in the original domain.
    pub nodes: Vec<(f64, f64)>,
}

impl FixedRule {
    pub fn from_breaks(f: &Integrand1D, breaks: &[f64]) -> FixedRule {
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * 15);
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let center = 0.5 * (lo + hi);
            let hlen = 0.5 * (hi - lo);
            let mut push = |t: f64, wgt: f64| {
                let (x, ln_jac) = f.map(t);
                nodes.push((x, wgt.ln() + hlen.ln() + ln_jac));
            };
            push(center, WGK[7]);
            for (j, &x) in XGK.iter().enumerate().take(7) {
                push(center - hlen * x, WGK[j]);
                push(center + hlen * x, WGK[j]);
            }
        }
        FixedRule { nodes }
    }

    /// Applies the rule to a signed-log integrand.
    pub fn apply(&self, g: impl Fn(f64) -> SignedLog) -> SignedLog {
        sum_signedlog(
            self.nodes
                .iter()
                .map(|&(x, ln_w)| g(x) * SignedLog::from_ln(ln_w)),
        )
    }
}

/// K15 nodes and weights on `[0, 1]` composited over `panels` equal panels.
///
/// A 4-panel rule integrates smooth functions to near machine precision;
/// tensor products of this rule serve as the brute-force oracles for the
/// determinant-integral identity and the 2-D normalization checks.
pub fn unit_kronrod_rule(panels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels * 15);
    for p in 0..panels {
        let lo = p as f64 / panels as f64;
        let hi = (p + 1) as f64 / panels as f64;
        let center = 0.5 * (lo + hi);
        let hlen = 0.5 * (hi - lo);
        out.push((center, WGK[7] * hlen));
        for (j, &x) in XGK.iter().enumerate().take(7) {
            out.push((center - hlen * x, WGK[j] * hlen));
            out.push((center + hlen * x, WGK[j] * hlen));
        }
    }
    out
}
