//! The throughput/delay tradeoff over V, averaged over replications, with
//! the sweep table written as CSV.
//!
//! ```text
//! cargo run --release --example v_sweep -- [replications] [out.csv]
//! ```

use std::fs::File;

use cachenet::engine::write_sweep_csv;
use cachenet::stats::{linear_fit, spearman};
use cachenet::{sweep, SimConfig, SweepAxis};

fn main() -> cachenet::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(2);
    let out = args.next();
    let base = SimConfig {
        users: 30,
        window: 0,
        horizon: 10_000,
        ..SimConfig::default()
    };
    let grid = [1.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10_000.0];
    let result = sweep(&base, SweepAxis::V, &grid, reps)?;
    let points = result.points();

    println!(
        "{:>8} {:>12} {:>10} {:>10} {:>8}",
        "V", "throughput", "+-", "delay", "+-"
    );
    for p in &points {
        println!(
            "{:>8} {:>12.1} {:>10.1} {:>10.2} {:>8.2}",
            p.value, p.throughput_mean, p.throughput_stderr, p.delay_mean, p.delay_stderr
        );
    }
    let v: Vec<f64> = points.iter().map(|p| p.value).collect();
    let delay: Vec<f64> = points.iter().map(|p| p.delay_mean).collect();
    let th: Vec<f64> = points.iter().map(|p| p.throughput_mean).collect();
    let (a, b, r2) = linear_fit(&v, &delay);
    println!(
        "rank correlation with V: throughput {:.3}, delay {:.3}",
        spearman(&v, &th),
        spearman(&v, &delay)
    );
    println!("delay ~ {a:.2} + {b:.4} V (R^2 = {r2:.3})");

    if let Some(path) = out {
        write_sweep_csv(&result, File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
