//! Building Fock states by hand and pushing them through optical elements.

use eprsim::optics::{apply_element, detect, DetectorModel, Element};
use eprsim::{Channel, Ensemble, ModeId, PureState};

fn main() -> eprsim::Result<()> {
    // Two H photons in mode 1, one V photon in mode 2.
    let s = PureState::vacuum_on([ModeId(1), ModeId(2)])
        .create_photon(Channel::h(1))?
        .create_photon(Channel::h(1))?
        .create_photon(Channel::v(2))?;
    println!("created (unnormalized, norm^2 = {}):", s.norm_sqr());
    let s = s.normalized()?;
    for (basis, amp) in s.amplitudes() {
        println!("  {amp:.4}  |{basis}>");
    }

    let mut ens = Ensemble::from_pure(s)?;
    for el in [Element::rotator_45(1), Element::pbs(1, 2), Element::loss(2, 0.8)] {
        ens = apply_element(&ens, &el)?;
    }
    println!("after rotator, PBS and 20% loss on mode 2: {} branches", ens.len());
    for (basis, p) in ens.diagonal() {
        println!("  P(|{basis}>) = {p:.6}");
    }

    for d in detect(&ens, ModeId(2), &DetectorModel::resolving(0.9))? {
        println!("mode 2 detector {:?}: probability {:.6}", d.outcome, d.probability);
    }
    Ok(())
}
