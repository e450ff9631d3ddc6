//! Per-slot user-AP association.
//!
//! Each slot the scheduler maximizes `sum_uh M_uh X_uh` subject to every
//! user joining at most one AP and every AP taking at most `M` users. Both
//! constraints are partition matroids, so the greedy rule below is a
//! 1/2-approximation; [`brute_force_associate`] solves small instances
//! exactly for auditing.

use crate::channel::LinkMatrix;
use crate::config::{RateMode, SimConfig};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Largest instance the exhaustive oracle accepts.
pub const ORACLE_MAX_USERS: usize = 8;
pub const ORACLE_MAX_APS: usize = 4;

/// `M_uh(t) = C_uh(t) * sum_f (V + Q_uf(t)) Y_hf`, in the units of `V * C`.
pub type WeightMatrix = LinkMatrix;

/// A user-AP assignment and the service rates it grants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Association {
    /// `assignment[u]` is the AP serving user `u`, if any.
    pub assignment: Vec<Option<usize>>,
    /// `mu_u(t)`, Mbits per slot. Empty until [`allocate_rates`] runs.
    pub rates: Vec<f64>,
}

impl Association {
    pub fn empty(users: usize) -> Self {
        Self {
            assignment: vec![None; users],
            rates: Vec::new(),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(u, h)| h.map(|h| (u, h)))
    }

    /// Users assigned to each of `aps` APs.
    pub fn load(&self, aps: usize) -> Vec<usize> {
        let mut load = vec![0; aps];
        for (_, h) in self.pairs() {
            load[h] += 1;
        }
        load
    }

    pub fn objective(&self, weights: &WeightMatrix) -> f64 {
        objective(weights, self.pairs())
    }

    /// Checks both matroid constraints and link membership.
    pub fn is_feasible(&self, links: &[bool], aps: usize, max_per_ap: usize) -> bool {
        self.pairs().all(|(u, h)| h < aps && links[u * aps + h])
            && self.load(aps).iter().all(|&n| n <= max_per_ap)
    }
}

/// `sum M_uh` over a set of pairs.
pub fn objective(weights: &WeightMatrix, pairs: impl IntoIterator<Item = (usize, usize)>) -> f64 {
    pairs.into_iter().map(|(u, h)| weights.get(u, h)).sum()
}

/// Builds the weight matrix from the backlog snapshot `backlogs[u][f]`.
pub fn compute_weights(
    backlogs: &[Vec<f64>],
    capacities: &LinkMatrix,
    topology: &Topology,
    v: f64,
) -> WeightMatrix {
    let users = topology.users();
    let aps = topology.aps();
    let mut w = WeightMatrix::zeros(users, aps);
    for (u, q) in backlogs.iter().enumerate().take(users) {
        for h in 0..aps {
            if !topology.has_link(u, h) {
                continue;
            }
            let cached: f64 = topology
                .cache_row(h)
                .iter()
                .zip(q)
                .filter(|(&y, _)| y)
                .map(|(_, &qf)| v + qf)
                .sum();
            w.set(u, h, capacities.get(u, h) * cached);
        }
    }
    w
}

/// Greedy association: repeatedly adds the heaviest feasible pair.
///
/// `links` is the row-major `U x H` potential-link mask. Pairs of zero
/// weight are never added. Ties go to the lowest user id, then the lowest
/// AP id.
pub fn greedy_associate(weights: &WeightMatrix, links: &[bool], max_per_ap: usize) -> Association {
    let users = weights.users();
    let aps = weights.aps();
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(users * aps);
    for u in 0..users {
        for h in 0..aps {
            let w = weights.get(u, h);
            if links[u * aps + h] && w > 0.0 {
                candidates.push((w, u, h));
            }
        }
    }
    // Feasibility only shrinks as pairs are added, so scanning in weight
    // order is the same as re-taking the argmax after every addition.
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut assoc = Association::empty(users);
    let mut load = vec![0; aps];
    for (_, u, h) in candidates {
        if assoc.assignment[u].is_none() && load[h] < max_per_ap {
            assoc.assignment[u] = Some(h);
            load[h] += 1;
        }
    }
    assoc
}

/// Exact maximum-weight association by enumeration.
///
/// Refuses instances with more than [`ORACLE_MAX_USERS`] users or
/// [`ORACLE_MAX_APS`] APs. Among optimal assignments the one found first is
/// returned, where users are decided in id order and each prefers its
/// lowest AP id, then staying unassigned.
pub fn brute_force_associate(
    weights: &WeightMatrix,
    links: &[bool],
    max_per_ap: usize,
) -> Result<Association> {
    let users = weights.users();
    let aps = weights.aps();
    if users > ORACLE_MAX_USERS || aps > ORACLE_MAX_APS {
        return Err(Error::OracleGuard(format!(
            "{users} users x {aps} APs exceeds the oracle limit of {ORACLE_MAX_USERS} x {ORACLE_MAX_APS}"
        )));
    }
    let options: Vec<Vec<usize>> = (0..users)
        .map(|u| {
            (0..aps)
                .filter(|&h| links[u * aps + h] && weights.get(u, h) > 0.0)
                .collect()
        })
        .collect();

    struct Search<'a> {
        weights: &'a WeightMatrix,
        options: &'a [Vec<usize>],
        max_per_ap: usize,
        load: Vec<usize>,
        current: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_value: f64,
    }

    impl Search<'_> {
        fn go(&mut self, u: usize, value: f64) {
            if u == self.current.len() {
                if value > self.best_value {
                    self.best_value = value;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            for i in 0..self.options[u].len() {
                let h = self.options[u][i];
                if self.load[h] < self.max_per_ap {
                    self.load[h] += 1;
                    self.current[u] = Some(h);
                    self.go(u + 1, value + self.weights.get(u, h));
                    self.current[u] = None;
                    self.load[h] -= 1;
                }
            }
            self.go(u + 1, value);
        }
    }

    let mut search = Search {
        weights,
        options: &options,
        max_per_ap,
        load: vec![0; aps],
        current: vec![None; users],
        best: vec![None; users],
        best_value: 0.0,
    };
    search.go(0, 0.0);
    Ok(Association {
        assignment: search.best,
        rates: Vec::new(),
    })
}

/// Fills `assoc.rates` from the slot capacities `C_uh(t)`.
///
/// Full-rate mode grants every associated user its whole link capacity;
/// shared mode divides it by the number of users on the AP.
pub fn allocate_rates(
    mut assoc: Association,
    capacities: &LinkMatrix,
    cfg: &SimConfig,
) -> Result<Association> {
    let aps = capacities.aps();
    let load = assoc.load(aps);
    if cfg.rate_mode == RateMode::Shared {
        let cap = (1.0 / cfg.xi).floor() as usize;
        if let Some(h) = load.iter().position(|&n| n > cap) {
            return Err(Error::Contract(format!(
                "AP {h} hosts {} users but the minimum share xi = {} allows {cap}",
                load[h], cfg.xi
            )));
        }
    }
    assoc.rates = assoc
        .assignment
        .iter()
        .enumerate()
        .map(|(u, h)| match (h, cfg.rate_mode) {
            (None, _) => 0.0,
            (Some(h), RateMode::FullRate) => capacities.get(u, *h),
            (Some(h), RateMode::Shared) => capacities.get(u, *h) / load[*h] as f64,
        })
        .collect();
    Ok(assoc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use crate::topology::Point;
    use proptest::prelude::*;
    use rand::Rng;

    fn full(users: usize, aps: usize) -> Vec<bool> {
        vec![true; users * aps]
    }

    fn topo(links: Vec<Vec<bool>>, placement: Vec<Vec<bool>>) -> Topology {
        let users = links.len();
        let aps = placement.len();
        Topology::new(
            vec![Point { x: 0.0, y: 0.0 }; users],
            vec![Point { x: 1.0, y: 1.0 }; aps],
            links,
            placement,
        )
        .unwrap()
    }

    fn slot(caps: &[Vec<f64>]) -> LinkMatrix {
        LinkMatrix::from_rows(caps)
    }

    #[test]
    fn weight_examples() {
        let t = topo(vec![vec![true]], vec![vec![true, false]]);
        let w = compute_weights(&[vec![2.0, 3.0]], &slot(&[vec![10.0]]), &t, 1.0);
        assert_eq!(w.get(0, 0), 30.0);

        let w = compute_weights(&[vec![2.0, 3.0]], &slot(&[vec![0.0]]), &t, 1.0);
        assert_eq!(w.get(0, 0), 0.0);

        let t = topo(vec![vec![true]], vec![vec![false, false]]);
        let w = compute_weights(&[vec![2.0, 3.0]], &slot(&[vec![10.0]]), &t, 1.0);
        assert_eq!(w.get(0, 0), 0.0);
    }

    #[test]
    fn weights_vanish_off_links() {
        let t = topo(vec![vec![true, false]], vec![vec![true], vec![true]]);
        let w = compute_weights(&[vec![1.0]], &slot(&[vec![5.0, 5.0]]), &t, 1.0);
        assert_eq!(w.get(0, 0), 10.0);
        assert_eq!(w.get(0, 1), 0.0);
    }

    #[test]
    fn greedy_examples() {
        let w = WeightMatrix::from_rows(&[vec![5.0]]);
        assert_eq!(
            greedy_associate(&w, &full(1, 1), 1).assignment,
            vec![Some(0)]
        );

        let w = WeightMatrix::from_rows(&[vec![3.0], vec![7.0]]);
        assert_eq!(
            greedy_associate(&w, &full(2, 1), 1).assignment,
            vec![None, Some(0)]
        );
    }

    #[test]
    fn greedy_skips_zero_weights_and_breaks_ties_by_id() {
        let w = WeightMatrix::from_rows(&[vec![0.0, 0.0], vec![4.0, 4.0], vec![4.0, 4.0]]);
        let a = greedy_associate(&w, &full(3, 2), 1);
        assert_eq!(a.assignment, vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn oracle_examples() {
        let w = WeightMatrix::from_rows(&[vec![5.0, 4.0], vec![4.0, 5.0]]);
        let a = brute_force_associate(&w, &full(2, 2), 1).unwrap();
        assert_eq!(a.assignment, vec![Some(0), Some(1)]);
        assert_eq!(a.objective(&w), 10.0);

        let w = WeightMatrix::from_rows(&[vec![2.0]]);
        let a = brute_force_associate(&w, &full(1, 1), 1).unwrap();
        assert_eq!(a.assignment, vec![Some(0)]);

        let a = brute_force_associate(&w, &[false], 1).unwrap();
        assert_eq!(a.assignment, vec![None]);
        assert_eq!(a.objective(&w), 0.0);
    }

    #[test]
    fn oracle_guard() {
        let w = WeightMatrix::zeros(9, 2);
        assert!(matches!(
            brute_force_associate(&w, &full(9, 2), 1),
            Err(Error::OracleGuard(_))
        ));
        let w = WeightMatrix::zeros(2, 5);
        assert!(brute_force_associate(&w, &full(2, 5), 1).is_err());
    }

    /// Enumerates the 2 x 2, M = 1 instance independently of the oracle:
    /// seven feasible assignments counting the empty one.
    #[test]
    fn two_by_two_enumeration() {
        let choices = [None, Some(0), Some(1)];
        let mut feasible = 0;
        let mut best = 0.0f64;
        let w = [[5.0, 4.0], [4.0, 5.0]];
        for a in choices {
            for b in choices {
                if a != b || a.is_none() {
                    feasible += 1;
                    let v = a.map_or(0.0, |h| w[0][h]) + b.map_or(0.0, |h| w[1][h]);
                    best = best.max(v);
                }
            }
        }
        assert_eq!(feasible, 7);
        assert_eq!(best, 10.0);
    }

    #[test]
    fn rate_examples() {
        let cfg = SimConfig {
            users: 4,
            max_users_per_ap: 3,
            ..SimConfig::default()
        };
        let ch = slot(&[vec![12.0], vec![12.0], vec![12.0], vec![12.0]]);
        let assoc = Association {
            assignment: vec![Some(0), Some(0), Some(0), None],
            rates: Vec::new(),
        };
        let full_rate = allocate_rates(assoc.clone(), &ch, &cfg).unwrap();
        assert_eq!(full_rate.rates, vec![12.0, 12.0, 12.0, 0.0]);

        let shared_cfg = SimConfig {
            rate_mode: RateMode::Shared,
            ..cfg
        };
        let shared = allocate_rates(assoc, &ch, &shared_cfg).unwrap();
        assert_eq!(shared.rates, vec![4.0, 4.0, 4.0, 0.0]);
        let nu: f64 = shared.rates[..3].iter().map(|r| r / 12.0).sum();
        assert!((nu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_mode_rejects_overfull_ap() {
        let cfg = SimConfig {
            rate_mode: RateMode::Shared,
            xi: 0.5,
            ..SimConfig::default()
        };
        let ch = slot(&[vec![1.0], vec![1.0], vec![1.0]]);
        let assoc = Association {
            assignment: vec![Some(0); 3],
            rates: Vec::new(),
        };
        assert!(matches!(
            allocate_rates(assoc, &ch, &cfg),
            Err(Error::Contract(_))
        ));
    }

    #[derive(Debug, Clone)]
    struct Instance {
        weights: WeightMatrix,
        links: Vec<bool>,
        m: usize,
    }

    fn instance(max_users: usize, max_aps: usize) -> impl Strategy<Value = Instance> {
        (1..=max_users, 1..=max_aps, 1usize..=2, any::<u64>()).prop_map(|(u, h, m, seed)| {
            let mut rng = stream(seed, Stream::Instances, 0);
            let mut rows = Vec::new();
            let mut links = Vec::new();
            for _ in 0..u {
                let mut row = Vec::new();
                for _ in 0..h {
                    // Coarse values make ties common.
                    let w = if rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0..6) as f64
                    };
                    row.push(w);
                    links.push(rng.random_bool(0.8));
                }
                rows.push(row);
            }
            Instance {
                weights: WeightMatrix::from_rows(&rows),
                links,
                m,
            }
        })
    }

    proptest! {
        #[test]
        fn greedy_is_feasible_and_half_optimal(inst in instance(6, 3)) {
            let aps = inst.weights.aps();
            let g = greedy_associate(&inst.weights, &inst.links, inst.m);
            let o = brute_force_associate(&inst.weights, &inst.links, inst.m).unwrap();
            prop_assert!(g.is_feasible(&inst.links, aps, inst.m));
            prop_assert!(o.is_feasible(&inst.links, aps, inst.m));
            let (gv, ov) = (g.objective(&inst.weights), o.objective(&inst.weights));
            prop_assert!(gv <= ov + 1e-9);
            prop_assert!(gv >= 0.5 * ov - 1e-12);
        }

        #[test]
        fn greedy_is_optimal_with_one_ap(inst in instance(8, 1)) {
            let g = greedy_associate(&inst.weights, &inst.links, inst.m);
            let o = brute_force_associate(&inst.weights, &inst.links, inst.m).unwrap();
            prop_assert_eq!(g.objective(&inst.weights), o.objective(&inst.weights));
        }

        #[test]
        fn greedy_is_optimal_with_disjoint_single_candidates(u in 1usize..=4, seed in any::<u64>()) {
            let mut rng = stream(seed, Stream::Instances, 1);
            let mut w = WeightMatrix::zeros(u, 4);
            let mut links = vec![false; u * 4];
            for i in 0..u {
                w.set(i, i, rng.random_range(0.0..10.0));
                links[i * 4 + i] = true;
            }
            let g = greedy_associate(&w, &links, 1);
            let o = brute_force_associate(&w, &links, 1).unwrap();
            prop_assert_eq!(g.objective(&w), o.objective(&w));
        }

        #[test]
        fn objective_is_modular(inst in instance(6, 3), mask in any::<u32>(), pick in any::<usize>()) {
            let u = inst.weights.users();
            let h = inst.weights.aps();
            let all: Vec<(usize, usize)> = (0..u).flat_map(|a| (0..h).map(move |b| (a, b))).collect();
            let x = all[pick % all.len()];
            let set: Vec<_> = all
                .iter()
                .enumerate()
                .filter(|(i, p)| mask >> (i % 32) & 1 == 1 && **p != x)
                .map(|(_, p)| *p)
                .collect();
            let with: Vec<_> = set.iter().copied().chain([x]).collect();
            let gain = objective(&inst.weights, with) - objective(&inst.weights, set);
            prop_assert!((gain - inst.weights.get(x.0, x.1)).abs() < 1e-9);
        }

        #[test]
        fn positive_scaling_keeps_greedy_choice(inst in instance(6, 3), k in 0.01f64..100.0) {
            let scaled = WeightMatrix::from_rows(
                &(0..inst.weights.users())
                    .map(|u| inst.weights.row(u).iter().map(|w| w * k).collect())
                    .collect::<Vec<Vec<f64>>>(),
            );
            let a = greedy_associate(&inst.weights, &inst.links, inst.m);
            let b = greedy_associate(&scaled, &inst.links, inst.m);
            prop_assert_eq!(a.assignment, b.assignment);
        }

        /// Two users with equal queues: the weight gap in favour of the
        /// stronger link never shrinks as V grows.
        #[test]
        fn larger_v_favours_capacity(
            q in 0.0f64..500.0,
            c_lo in 0.1f64..20.0,
            extra in 0.0f64..20.0,
            v1 in 1.0f64..1e4,
            dv in 0.0f64..1e4,
        ) {
            let t = topo(vec![vec![true], vec![true]], vec![vec![true, true, false]]);
            let ch = slot(&[vec![c_lo + extra], vec![c_lo]]);
            let qs = vec![vec![q; 3]; 2];
            let gap = |v: f64| {
                let w = compute_weights(&qs, &ch, &t, v);
                w.get(0, 0) - w.get(1, 0)
            };
            prop_assert!(gap(v1 + dv) >= gap(v1) - 1e-9 * gap(v1 + dv).abs().max(1.0));
            // Slope in V is the capacity gap times the number of cached types.
            let slope = (gap(v1 + 1.0) - gap(v1)) / 1.0;
            prop_assert!((slope - 2.0 * extra).abs() < 1e-6 * (1.0 + gap(v1).abs()));
        }
    }
}
