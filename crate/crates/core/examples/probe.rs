use outstat_core::eigdist::EnsembleParams;
use outstat_core::validation::chi_square_ensemble;
use outstat_core::outpdf::*;
use outstat_core::quad::*;
use outstat_core::signedlog::SignedLog;
fn main() {
    // (c) convergence of the 30 dB reference integrand at several tolerances
    let d = SystemDims::new(2, 2, 12, 1000.0).unwrap();
    let g = d.gamma();
    let yref = 4.0 * (1.0 + g * 2.0) * 12.0;
    let col = move |x: f64| SignedLog::from_ln(9.0 * (1.0 + g * x).ln() - x - 0.0 * x.ln());
    let f = move |x: f64| SignedLog::from_ln(-yref / (1.0 + g * x)) * col(x);
    for tol in [1e-6f64, 1e-7, 1e-8, 1e-9] {
        let integrand = Integrand1D::new(&f, Domain::SemiInfinite { a: 0.0 });
        match integrate(&integrand, tol) {
            Ok((v, e)) => println!("tol {tol:.0e}: ln I = {:.9}, err {e:.2e}", v.logmag()),
            Err(e) => println!("tol {tol:.0e}: {e}"),
        }
    }
    // (b) chi2 wishart at increasing N: does p shrink systematically?
    for n in [100_000usize, 400_000] {
        for seed in [1u64, 2, 3] {
            let p = chi_square_ensemble(&EnsembleParams::Wishart { m: 2, n: 3 }, n, 50, seed).unwrap();
            print!(" wishart N={n} seed={seed}: p={p:.4}; ");
        }
        println!();
        for seed in [1u64, 2, 3] {
            let p = chi_square_ensemble(
                &EnsembleParams::Rician { m: 2, n: 2, kappa: 1.0, h: 2.0 }, n, 50, seed).unwrap();
            print!(" rician N={n} seed={seed}: p={p:.4}; ");
        }
        println!();
    }
}
