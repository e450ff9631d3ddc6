//! Average link capacities of a small deployment, next to each AP's cache.
//!
//! ```text
//! cargo run --release --example channel_capacity -- [users] [slots] [key=value ...]
//! ```

use cachenet::channel::{ChannelModel, LinkMatrix};
use cachenet::rng::{stream, Stream};
use cachenet::{generate_topology, SimConfig};

fn main() -> cachenet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = SimConfig {
        users: 12,
        ..SimConfig::default()
    };
    let mut slots = 200;
    let mut overrides = Vec::new();
    for (i, a) in args.iter().enumerate() {
        match (i, a.parse::<usize>()) {
            (0, Ok(u)) => cfg.users = u,
            (1, Ok(s)) => slots = s,
            _ => overrides.push(a.clone()),
        }
    }
    cfg.max_users_per_ap = cfg.max_users_per_ap.min(cfg.users);
    cfg.apply_overrides(&overrides)?;
    cfg.validate()?;

    let topology = generate_topology(&cfg, &mut stream(cfg.seed, Stream::Topology, 0))?;
    let mut gain_rng = stream(cfg.seed, Stream::Gains, 0);
    let mut fading_rng = stream(cfg.seed, Stream::Fading, 0);
    let model = ChannelModel::new(&topology, &cfg, &mut gain_rng);

    let mut mean = LinkMatrix::zeros(cfg.users, cfg.aps);
    for _ in 0..slots {
        let slot = model.next_slot(&topology, &cfg, &mut gain_rng, &mut fading_rng);
        for u in 0..cfg.users {
            for h in 0..cfg.aps {
                let c = mean.get(u, h) + slot.capacities.get(u, h) / slots as f64;
                mean.set(u, h, c);
            }
        }
    }

    println!("mean C_uh over {slots} slots, Mbit per slot; APs list their cached types");
    print!("{:>6}", "user");
    for h in 0..cfg.aps {
        let cached: String = (0..cfg.file_types)
            .filter(|&f| topology.caches(h, f))
            .map(|f| char::from(b'0' + f as u8))
            .collect();
        print!(" {:>9}", format!("{h}:{cached}"));
    }
    println!(" {:>9}", "best");
    for u in 0..cfg.users {
        print!("{u:>6}");
        let row = mean.row(u);
        for c in row {
            print!(" {c:>9.1}");
        }
        let best = row.iter().cloned().fold(0.0, f64::max);
        println!(" {best:>9.1}");
    }
    println!(
        "mean demand per user: {:.1} Mbit per slot",
        cfg.mean_arrival()
    );
    Ok(())
}
