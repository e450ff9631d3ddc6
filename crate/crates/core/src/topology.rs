//! Deployment geometry, potential links and cache placement.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{LinkMode, PlacementMode, SimConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Users, APs, the potential-link graph and the cache placement matrix.
///
/// `links` and `placement` are dense row-major boolean matrices of shape
/// `U x H` and `H x F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub user_positions: Vec<Point>,
    pub ap_positions: Vec<Point>,
    links: Vec<bool>,
    placement: Vec<bool>,
    file_types: usize,
}

impl Topology {
    /// Builds a topology from explicit parts, checking its invariants.
    pub fn new(
        user_positions: Vec<Point>,
        ap_positions: Vec<Point>,
        links: Vec<Vec<bool>>,
        placement: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let users = user_positions.len();
        let aps = ap_positions.len();
        if links.len() != users || links.iter().any(|r| r.len() != aps) {
            return Err(Error::Topology("links must be a U x H matrix".into()));
        }
        if placement.len() != aps {
            return Err(Error::Topology("placement must have one row per AP".into()));
        }
        let file_types = placement.first().map_or(0, Vec::len);
        if placement.iter().any(|r| r.len() != file_types) {
            return Err(Error::Topology("placement rows differ in length".into()));
        }
        if let Some(u) = links.iter().position(|r| !r.iter().any(|&l| l)) {
            return Err(Error::Topology(format!("user {u} has no potential link")));
        }
        Ok(Self {
            user_positions,
            ap_positions,
            links: links.concat(),
            placement: placement.concat(),
            file_types,
        })
    }

    pub fn users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn file_types(&self) -> usize {
        self.file_types
    }

    pub fn has_link(&self, user: usize, ap: usize) -> bool {
        self.links[user * self.aps() + ap]
    }

    /// Whether AP `ap` caches file type `f` (`Y_hf = 1`).
    pub fn caches(&self, ap: usize, f: usize) -> bool {
        self.placement[ap * self.file_types + f]
    }

    /// The cache row `Y_h` of one AP.
    pub fn cache_row(&self, ap: usize) -> &[bool] {
        &self.placement[ap * self.file_types..(ap + 1) * self.file_types]
    }

    /// The potential-link set as a row-major `U x H` mask.
    pub fn link_mask(&self) -> &[bool] {
        &self.links
    }

    pub fn link_row(&self, user: usize) -> &[bool] {
        &self.links[user * self.aps()..(user + 1) * self.aps()]
    }

    pub fn distance(&self, user: usize, ap: usize) -> f64 {
        self.user_positions[user].distance(&self.ap_positions[ap])
    }

    /// All `(user, AP)` pairs of the potential-link set.
    pub fn potential_links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let aps = self.aps();
        self.links
            .iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .map(move |(i, _)| (i / aps, i % aps))
    }
}

/// AP positions on a `ceil(sqrt(H)) x ceil(sqrt(H))` grid whose cells tile
/// the square; APs sit at cell centers, filled row by row.
pub fn ap_grid(aps: usize, side: f64) -> Vec<Point> {
    let k = (aps as f64).sqrt().ceil() as usize;
    let spacing = side / k as f64;
    (0..aps)
        .map(|i| Point {
            x: (i % k) as f64 * spacing + spacing / 2.0,
            y: (i / k) as f64 * spacing + spacing / 2.0,
        })
        .collect()
}

/// Draws a topology for `cfg`: users uniform in the square, APs on a grid,
/// links per `link_mode`, placement per `placement_mode`.
pub fn generate_topology<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Topology> {
    let side = cfg.area_side;
    let user_positions: Vec<Point> = (0..cfg.users)
        .map(|_| Point {
            x: rng.random::<f64>() * side,
            y: rng.random::<f64>() * side,
        })
        .collect();
    let ap_positions = ap_grid(cfg.aps, side);

    let links: Vec<Vec<bool>> = user_positions
        .iter()
        .map(|u| {
            ap_positions
                .iter()
                .map(|a| match cfg.link_mode {
                    LinkMode::Complete => true,
                    LinkMode::Radius => u.distance(a) <= cfg.link_radius,
                })
                .collect()
        })
        .collect();

    let placement: Vec<Vec<bool>> = (0..cfg.aps)
        .map(|_| {
            let mut row = vec![false; cfg.file_types];
            match cfg.placement_mode {
                PlacementMode::Random => {
                    for f in index::sample(rng, cfg.file_types, cfg.cache_size) {
                        row[f] = true;
                    }
                }
                // Zipf popularity is non-increasing in the type index.
                PlacementMode::TopPopularity => row[..cfg.cache_size].fill(true),
            }
            row
        })
        .collect();

    Topology::new(user_positions, ap_positions, links, placement)
}

/// File-type popularity `p_f = f^-eta / sum_i i^-eta` for `f = 1..=F`,
/// returned 0-indexed.
pub fn zipf_probabilities(file_types: usize, eta: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=file_types).map(|f| (f as f64).powf(-eta)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn cfg(users: usize, aps: usize) -> SimConfig {
        SimConfig {
            users,
            aps,
            max_users_per_ap: users.min(2),
            ..SimConfig::default()
        }
    }

    #[test]
    fn nine_aps_form_a_three_by_three_grid() {
        let aps = ap_grid(9, 50.0);
        let spacing = 50.0 / 3.0;
        assert!((aps[0].x - spacing / 2.0).abs() < 1e-12);
        assert!((aps[1].x - aps[0].x - spacing).abs() < 1e-12);
        assert!((aps[3].y - aps[0].y - spacing).abs() < 1e-12);
        assert!((aps[4].x - 25.0).abs() < 1e-12 && (aps[4].y - 25.0).abs() < 1e-12);
        assert!((spacing - 16.6667).abs() < 1e-3);
    }

    #[test]
    fn random_placement_has_n_per_row() {
        let c = SimConfig {
            file_types: 4,
            cache_size: 3,
            ..cfg(10, 9)
        };
        let t = generate_topology(&c, &mut stream(3, Stream::Topology, 0)).unwrap();
        for h in 0..9 {
            assert_eq!(t.cache_row(h).iter().filter(|&&y| y).count(), 3);
        }
    }

    #[test]
    fn top_popularity_is_identical_across_aps() {
        let c = SimConfig {
            placement_mode: PlacementMode::TopPopularity,
            ..cfg(5, 4)
        };
        let t = generate_topology(&c, &mut stream(3, Stream::Topology, 0)).unwrap();
        for h in 0..4 {
            assert_eq!(t.cache_row(h), &[true, true, true, false]);
        }
    }

    #[test]
    fn complete_links_cover_all_pairs() {
        let t = generate_topology(&cfg(2, 2), &mut stream(1, Stream::Topology, 0)).unwrap();
        let links: Vec<_> = t.potential_links().collect();
        assert_eq!(links, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn radius_mode_can_strand_a_user() {
        let c = SimConfig {
            link_mode: LinkMode::Radius,
            link_radius: 0.01,
            ..cfg(20, 1)
        };
        let err = generate_topology(&c, &mut stream(1, Stream::Topology, 0)).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }

    #[test]
    fn same_seed_same_topology() {
        let c = cfg(30, 9);
        let a = generate_topology(&c, &mut stream(11, Stream::Topology, 0)).unwrap();
        let b = generate_topology(&c, &mut stream(11, Stream::Topology, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zipf_values() {
        assert_eq!(zipf_probabilities(1, 0.56), vec![1.0]);
        let p = zipf_probabilities(3, 0.0);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        // Independent evaluation of the four weights 1, 2^-.56, 3^-.56, 4^-.56.
        let w = [1.0, 0.678_302_16, 0.540_520_41, 0.460_093_83];
        let s: f64 = w.iter().sum();
        let p = zipf_probabilities(4, 0.56);
        for (got, wi) in p.iter().zip(w) {
            assert!((got - wi / s).abs() < 1e-6);
        }
        assert!((p[0] - 0.3733).abs() < 1e-4);
        assert!((p[1] - 0.2532).abs() < 1e-4);
        assert!((p[2] - 0.2018).abs() < 1e-4);
        assert!((p[3] - 0.1718).abs() < 1e-4);
    }

    proptest::proptest! {
        #[test]
        fn zipf_is_a_monotone_distribution(f in 1usize..200, eta in 0.0f64..4.0) {
            let p = zipf_probabilities(f, eta);
            let s: f64 = p.iter().sum();
            proptest::prop_assert!((s - 1.0).abs() < 1e-12);
            proptest::prop_assert!(p.iter().all(|&x| x > 0.0));
            proptest::prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
