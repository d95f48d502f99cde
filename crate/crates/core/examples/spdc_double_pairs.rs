//! Multi-pair emission: the post-selected output picks up six terms with a
//! doubly occupied mode next to the GHZ component.

use eprsim::ghz::double_pair_terms;
use eprsim::{analyze_output, canonical_layout, run_ghz_circuit, DetectorModel, DoublePairModel, SourceSpec};

fn main() -> eprsim::Result<()> {
    let eta_s = 0.01;
    for model in [DoublePairModel::Distinguishable, DoublePairModel::Bosonic] {
        for x in [0.5, 1.0] {
            let spec = SourceSpec::Spdc { eta_s, x, double_pair: model };
            let r = run_ghz_circuit(&[spec; 3], &DetectorModel::ideal(), &canonical_layout())?;
            let rep = analyze_output(&r)?;
            println!("{model:?} x = {x}: P = {:.4e}, GHZ weight {:.4}", r.probability, rep.ghz_fidelity);
            let mut listed = 0.0;
            for t in double_pair_terms() {
                let w = rep.weight_of(&t);
                listed += w;
                println!("  {:<20} weight/GHZ = {:.6}", t.to_string(), w / rep.ghz_fidelity);
            }
            println!("  (x/2)(1 - eta_s) = {:.6}", x / 2.0 * (1.0 - eta_s));
            println!("  remainder/GHZ = {:.4e}", (1.0 - rep.ghz_fidelity - listed) / rep.ghz_fidelity);
        }
    }
    Ok(())
}
