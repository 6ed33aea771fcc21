use outstat_core::outpdf::*;
use outstat_core::sampling::{sample_output, InputScheme, RngStream};

fn main() {
    let d = SystemDims::new(4, 2, 5, 1000.0).unwrap();
    let opts = EvalOptions::default();
    for s in 0..1000u64 {
        let mut rng = RngStream::new(0x8003, s).rng();
        let y = sample_output(&mut rng, &outstat_core::outpdf::ChannelModel::Rayleigh, InputScheme::Bstm, &d).unwrap();
        match bstm_logpdf(&d, &y, &opts) {
            Ok(r) => {
                if !(r.log_pdf.sign() > 0 && r.ln().is_finite()) {
                    println!("draw {s}: sign {} ln {}", r.log_pdf.sign(), r.log_pdf.logmag());
                }
            }
            Err(e) => {
                println!("draw {s}: ERR {e}");
                let spec = output_spectrum(&y).unwrap();
                println!("  ys = {:?}", spec.values());
                break;
            }
        }
        if s % 200 == 0 { eprintln!("...{s}"); }
    }
}
