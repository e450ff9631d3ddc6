//! Delay cost of wrong predictions: type errors against size errors, at a
//! small and a large V.
//!
//! ```text
//! cargo run --release --example misprediction -- [replications]
//! ```

use cachenet::stats::mean;
use cachenet::{sweep, SimConfig, SweepAxis};

fn main() -> cachenet::Result<()> {
    let reps: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(2);
    let grid = [0.0, 0.2, 0.4];
    for v in [1.0, 10_000.0] {
        let base = SimConfig {
            users: 30,
            window: 20,
            v,
            horizon: 10_000,
            ..SimConfig::default()
        };
        println!("V = {v}");
        println!(
            "  {:>6} {:>14} {:>14} {:>14}",
            "e", "type only", "size only", "waste (type)"
        );
        let types = sweep(&base, SweepAxis::EType, &grid, reps)?;
        let sizes = sweep(&base, SweepAxis::ESize, &grid, reps)?;
        let delay = |r: &cachenet::engine::SweepResult, e: f64| -> f64 {
            mean(
                &r.runs_at(e)
                    .map(|x| x.report.avg_system_delay)
                    .collect::<Vec<_>>(),
            )
        };
        let clean = delay(&types, 0.0);
        for &e in &grid {
            let waste = mean(
                &types
                    .runs_at(e)
                    .map(|x| x.report.waste_total)
                    .collect::<Vec<_>>(),
            );
            println!(
                "  {e:>6} {:>13.2}% {:>13.2}% {:>14.0}",
                100.0 * (delay(&types, e) / clean - 1.0),
                100.0 * (delay(&sizes, e) / clean - 1.0),
                waste
            );
        }
    }
    Ok(())
}
