//! Type-II fusion joins GHZ states into larger ones and keeps the loss rate.

use eprsim::fusion::{qubit_count_after_fusion, success_state};
use eprsim::{fit_id_ghz, fuse_type_ii, id_ghz, DetectorModel, IdGhzSpec, ModeId};

fn main() -> eprsim::Result<()> {
    let f = 0.1;
    let mut state = id_ghz(&IdGhzSpec::new(f, [1u16, 2, 3]))?;
    let mut next_mode = 4u16;
    let mut p_total = 1.0;
    for round in 1..=3 {
        let fresh = id_ghz(&IdGhzSpec::new(f, next_mode..next_mode + 3))?;
        let a = *state.modes().iter().last().expect("non-empty");
        let n = state.modes().len();
        let outcomes = fuse_type_ii(&state, &fresh, a, ModeId(next_mode), &DetectorModel::ideal())?;
        let (p, fused) = success_state(&outcomes)?.expect("fusion can succeed");
        p_total *= p;
        let fit = fit_id_ghz(&fused, fused.modes().len())?;
        println!(
            "round {round}: {n} + 3 -> {} qubits (expected {}), P(success) = {p:.4}, fitted f = {:.6}, residual {:.1e}",
            fused.modes().len(),
            qubit_count_after_fusion(n, 3)?,
            fit.f,
            fit.residual
        );
        state = fused;
        next_mode += 3;
    }
    println!("overall success probability {p_total:.6}");
    Ok(())
}
