//! Sweep p and q on the metro fixture for both ground truths, with
//! baseline columns. Pass a repeat count as the first argument (default 5).

use pec::eval::{grid, sweep, GridPoint, SweepConfig};
use pec::synth::metro_fixture;

fn main() -> pec::Result<()> {
    let repeats = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let metro = metro_fixture(0)?;
    let d = GridPoint::default();
    let cfg = SweepConfig {
        grid: grid(
            &[0.25, 1.0, 4.0],
            &[0.25, 1.0, 4.0],
            &[d.dim],
            &[d.walk_length],
            &[d.num_walks],
            &[d.window],
        ),
        repeats,
        seed: 1,
        baselines: true,
        ..SweepConfig::default()
    };
    let report = sweep(&metro.graph, &[metro.lines, metro.transfers], &cfg)?;
    for table in &report.tables {
        println!(
            "{} ({} classes), mean Macro-F1 over {repeats} repeats",
            table.truth, table.n_true
        );
        println!("  p     q     PEM    SC     HCA");
        for row in &table.rows {
            let m = |s: &Option<pec::eval::MethodScore>| s.as_ref().map_or(f64::NAN, |s| s.mean);
            println!(
                "  {:<5} {:<5} {:.3}  {:.3}  {:.3}",
                row.point.p,
                row.point.q,
                m(&row.pem),
                m(&row.sc),
                m(&row.hca)
            );
        }
        if let Some(best) = table.best_pem() {
            println!("  best PEM setting: p={} q={}", best.point.p, best.point.q);
        }
    }
    Ok(())
}
