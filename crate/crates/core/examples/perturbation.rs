//! Macro-F1 on the metro fixture under Gaussian and Poisson weight noise.

use pec::eval::{sweep, GridPoint, NoiseKind, NoiseMode, SweepConfig};
use pec::synth::metro_fixture;

fn main() -> pec::Result<()> {
    let metro = metro_fixture(0)?;
    let truths = [metro.lines, metro.transfers];
    let base = SweepConfig {
        grid: vec![GridPoint::default()],
        repeats: 5,
        seed: 3,
        ..SweepConfig::default()
    };
    let mean = |cfg: &SweepConfig| -> pec::Result<Vec<f64>> {
        let r = sweep(&metro.graph, &truths, cfg)?;
        Ok(r.tables
            .iter()
            .map(|t| t.rows[0].pem.as_ref().map_or(f64::NAN, |s| s.mean))
            .collect())
    };
    let clean = mean(&base)?;
    println!("noise            lines   transfers");
    println!("none             {:.3}   {:.3}", clean[0], clean[1]);
    let kinds = [0.2, 1.0, 4.0]
        .map(|sigma| NoiseKind::Gaussian { sigma })
        .into_iter()
        .chain([1.0, 4.0, 16.0].map(|lambda| NoiseKind::Poisson { lambda }));
    for kind in kinds {
        for mode in [NoiseMode::NormalizeNoise, NoiseMode::ClipResult] {
            let m = mean(&SweepConfig {
                noise: Some(kind),
                noise_mode: mode,
                ..base.clone()
            })?;
            let label = match kind {
                NoiseKind::Gaussian { sigma } => format!("N(0,{sigma}^2)"),
                NoiseKind::Poisson { lambda } => format!("P({lambda})"),
            };
            let mode = if mode == NoiseMode::ClipResult {
                " clip"
            } else {
                ""
            };
            println!("{:<16} {:.3}   {:.3}", label + mode, m[0], m[1]);
        }
    }
    Ok(())
}
