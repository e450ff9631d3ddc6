//! One simulation run with its headline metrics.
//!
//! ```text
//! cargo run --release --example single_run -- [key=value ...]
//! cargo run --release --example single_run -- U=30 V=5000 D=40 T=20000
//! ```

use cachenet::{run, SimConfig};

fn main() -> cachenet::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = SimConfig {
        users: 30,
        horizon: 20_000,
        ..SimConfig::default()
    };
    cfg.apply_overrides(&overrides)?;
    let start = std::time::Instant::now();
    let r = run(&cfg)?;
    println!(
        "U={} H={} V={} D={} A_max={} T={} ({:.1?})",
        cfg.users,
        cfg.aps,
        cfg.v,
        cfg.window,
        cfg.a_max,
        cfg.horizon,
        start.elapsed()
    );
    println!("  throughput      {:>12.1} Mbit/slot", r.avg_throughput);
    println!(
        "  served          {:>12.1} Mbit/slot",
        r.avg_served_throughput
    );
    println!("  arrivals        {:>12.1} Mbit/slot", r.avg_arrivals);
    println!("  backlog         {:>12.1} Mbit", r.avg_backlog);
    println!(
        "  delay           {:>12.3} slots ({:.3} s)",
        r.avg_system_delay, r.avg_system_delay_s
    );
    println!("  wasted pre-serv {:>12.1} Mbit", r.waste_total);
    match r.convergence_slot {
        Some(s) => println!("  backlog settles by slot {s}"),
        None => println!("  backlog has not settled within the horizon"),
    }
    let mut d = r.per_user_delay.clone();
    d.sort_by(f64::total_cmp);
    println!(
        "  per-user delay  min {:.2}, median {:.2}, max {:.2}",
        d[0],
        d[d.len() / 2],
        d[d.len() - 1]
    );
    Ok(())
}
