//! A lossy pair emitter yields an independently-depolarized GHZ state whose
//! loss rate depends only on p2/p3.

use eprsim::ensemble::trace_distance;
use eprsim::threshold::{loss_rate_cavity, meets_loss_threshold};
use eprsim::{canonical_layout, fit_id_ghz, id_ghz, run_ghz_circuit, DetectorModel, IdGhzSpec, SourceSpec};

fn main() -> eprsim::Result<()> {
    for (p0, p1, p2, p3) in [(0.4, 0.2, 0.1, 0.3), (0.1, 0.1, 0.2, 0.6), (0.5, 0.2, 0.2, 0.1)] {
        let r = run_ghz_circuit(&[SourceSpec::cavity(p0, p1, p2, p3); 3], &DetectorModel::ideal(), &canonical_layout())?;
        let state = r.state.expect("success is possible");
        let f = loss_rate_cavity(p2, p3)?;
        let d = trace_distance(&state, &id_ghz(&IdGhzSpec::new(f, [1u16, 3, 5]))?)?;
        let fit = fit_id_ghz(&state, 3)?;
        let thr = meets_loss_threshold(f, 0.75);
        println!(
            "p = ({p0}, {p1}, {p2}, {p3}): P = {:.6e}, f = {f:.6}, fitted {:.6}, distance {d:.1e}, passes at eta_d = 0.75: {} (margin {:+.4})",
            r.probability, fit.f, thr.passes, thr.margin
        );
    }
    Ok(())
}
