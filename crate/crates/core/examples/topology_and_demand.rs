//! One random deployment: AP grid, cache placement, potential links and the
//! Zipf request law, plus an empirical check of the law.
//!
//! ```text
//! cargo run --release --example topology_and_demand -- [key=value ...]
//! ```

use cachenet::rng::{stream, Stream};
use cachenet::traffic::sample_arrival;
use cachenet::{generate_topology, zipf_probabilities, SimConfig};

fn main() -> cachenet::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = SimConfig {
        users: 10,
        max_users_per_ap: 10,
        ..SimConfig::default()
    };
    cfg.apply_overrides(&overrides)?;
    cfg.validate()?;
    let topology = generate_topology(&cfg, &mut stream(cfg.seed, Stream::Topology, 0))?;

    println!("{} APs on a {}m square:", cfg.aps, cfg.area_side);
    for (h, p) in topology.ap_positions.iter().enumerate() {
        let cached: Vec<usize> = (0..cfg.file_types)
            .filter(|&f| topology.caches(h, f))
            .collect();
        println!("  AP {h}: ({:5.1}, {:5.1}) caches {cached:?}", p.x, p.y);
    }
    println!("users:");
    for (u, p) in topology.user_positions.iter().enumerate() {
        let links = (0..cfg.aps).filter(|&h| topology.has_link(u, h)).count();
        let nearest = (0..cfg.aps)
            .min_by(|&a, &b| topology.distance(u, a).total_cmp(&topology.distance(u, b)))
            .unwrap();
        println!(
            "  user {u}: ({:5.1}, {:5.1}) {links} potential links, nearest AP {nearest} at {:.1}m",
            p.x,
            p.y,
            topology.distance(u, nearest)
        );
    }

    let probs = zipf_probabilities(cfg.file_types, cfg.eta_r);
    let draws = 200_000;
    let mut counts = vec![0usize; cfg.file_types];
    let mut size = 0.0;
    let mut rng = stream(cfg.seed, Stream::Arrivals, 0);
    for t in 0..draws {
        let r = sample_arrival(0, t, &probs, cfg.a_max, &mut rng);
        counts[r.true_type] += 1;
        size += r.true_size;
    }
    println!("request law (eta_r = {}), {draws} draws:", cfg.eta_r);
    for (f, p) in probs.iter().enumerate() {
        println!(
            "  type {f}: p = {p:.4}, observed {:.4}",
            counts[f] as f64 / draws as f64
        );
    }
    println!(
        "mean size {:.2} Mbit (A_max / 2 = {:.2})",
        size / draws as f64,
        cfg.mean_arrival()
    );
    Ok(())
}
