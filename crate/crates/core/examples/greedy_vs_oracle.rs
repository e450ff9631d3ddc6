//! Greedy association against exhaustive search on small random instances.
//!
//! ```text
//! cargo run --release --example greedy_vs_oracle -- [instances] [seed]
//! ```

use cachenet::engine::random_instance;
use cachenet::rng::{stream, Stream};
use cachenet::stats::{mean, percentile};
use cachenet::{brute_force_associate, greedy_associate};
use rand::Rng;

type Assignment = Vec<Option<usize>>;

fn main() -> cachenet::Result<()> {
    let mut args = std::env::args().skip(1);
    let instances: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let mut rng = stream(seed, Stream::Instances, 0);

    let mut ratios = Vec::with_capacity(instances);
    let mut worst: Option<(f64, usize, Assignment, Assignment)> = None;
    for i in 0..instances {
        let users = rng.random_range(1..=8);
        let aps = rng.random_range(1..=4);
        let m = rng.random_range(1..=3);
        let ft = rng.random_range(1..=4);
        let (w, links) = random_instance(users, aps, ft, &mut rng);
        let g = greedy_associate(&w, &links, m);
        let o = brute_force_associate(&w, &links, m)?;
        let opt = o.objective(&w);
        let ratio = if opt > 0.0 {
            g.objective(&w) / opt
        } else {
            1.0
        };
        if worst.as_ref().is_none_or(|(r, ..)| ratio < *r) {
            worst = Some((ratio, i, g.assignment.clone(), o.assignment.clone()));
        }
        ratios.push(ratio);
    }

    let exact = ratios.iter().filter(|&&r| r >= 1.0 - 1e-12).count();
    println!("{instances} instances (U <= 8, H <= 4, M <= 3, F <= 4)");
    println!(
        "  greedy optimal in {exact} ({:.1}%)",
        100.0 * exact as f64 / instances as f64
    );
    println!(
        "  mean ratio {:.4}, 1st percentile {:.4}",
        mean(&ratios),
        percentile(&ratios, 1.0)
    );
    if let Some((r, i, g, o)) = worst {
        println!("  worst ratio {r:.4} at instance {i}");
        println!("    greedy  {g:?}");
        println!("    optimal {o:?}");
    }
    Ok(())
}
