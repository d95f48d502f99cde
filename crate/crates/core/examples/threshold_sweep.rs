//! Loss-threshold tables for the three source schemes, written as CSV.

use eprsim::threshold::{sweep, write_csv, Scheme, SweepSpec, ThresholdParams};

fn main() -> eprsim::Result<()> {
    let specs = [
        SweepSpec { scheme: Scheme::Epr, axes: vec!["eta_s:0.2:1:3".parse()?, "eta_d:0.5:0.7:3".parse()?], fixed: ThresholdParams::default() },
        SweepSpec {
            scheme: Scheme::SinglePhoton,
            axes: vec!["eta_s:0.6:1:3".parse()?, "eta_d:0.6:1:3".parse()?],
            fixed: ThresholdParams::default(),
        },
        SweepSpec {
            scheme: Scheme::Cavity,
            axes: vec!["p2:0:0.2:5".parse()?],
            fixed: ThresholdParams { eta_d: 0.75, p3: Some(0.2), ..Default::default() },
        },
    ];
    for spec in &specs {
        println!("# {}", spec.scheme.name());
        write_csv(&sweep(spec)?, std::io::stdout().lock())?;
        println!();
    }
    Ok(())
}
