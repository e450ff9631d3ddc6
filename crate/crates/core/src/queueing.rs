//! Lookahead window queues and the FIFO service discipline.
//!
//! For user `u` and type `f` the backlog is split into sub-queues
//! `Q~^d_uf` for `d = -1, 0, ..., D-1`: `d = -1` holds requests that have
//! already arrived, `d >= 0` the (predicted) request that will arrive `d`
//! slots from now. Since a user issues one request per slot, each window
//! depth holds a single entry whose volume sits under its predicted type.
//!
//! A separate head-of-line bucket per type holds the shortfall of requests
//! whose size was under-predicted after partial pre-service.
//!
//! [`UserQueues::serve`] decides how a rate is spent without mutating
//! anything; [`UserQueues::advance`] applies a service outcome and moves the
//! window by one slot:
//!
//! ```text
//! Q~^{D-1}(t+1) = A(t+D)                               (predicted)
//! Q~^d(t+1)     = [Q~^{d+1}(t) - mu~^{d+1}(t)]+        0 <= d <= D-2
//! Q~^{-1}(t+1)  = [Q~^{-1}(t) - mu~^{-1}(t)]+ + [Q~^0(t) - mu~^0(t)]+
//! ```
//!
//! followed by reconciliation of the request that just arrived.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::traffic::{reconcile_on_arrival, PreService, Reconciliation, Request};

/// One lookahead slot: a request and what has been downloaded for it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub request: Request,
    /// Unserved predicted volume, `Q~^d` under `request.predicted_type`.
    pub residual: f64,
    /// Volume downloaded so far, by the type it was downloaded as.
    pub served: PreService,
}

impl WindowEntry {
    pub fn new(request: Request, file_types: usize) -> Self {
        Self {
            residual: request.predicted_size,
            request,
            served: PreService::new(file_types),
        }
    }
}

/// How one slot's rate was spent, `mu~^d_uf(t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServiceOutcome {
    /// Served from the head-of-line bucket, per type.
    pub priority: Vec<f64>,
    /// Served from `Q~^{-1}`, per type.
    pub backlog: Vec<f64>,
    /// Served from window depth `d`, under that entry's predicted type.
    pub window: Vec<f64>,
    /// Rate granted.
    pub rate: f64,
    /// Rate left over because nothing cached remained.
    pub unused: f64,
}

impl ServiceOutcome {
    fn zero(file_types: usize, window: usize, rate: f64) -> Self {
        Self {
            priority: vec![0.0; file_types],
            backlog: vec![0.0; file_types],
            window: vec![0.0; window],
            rate,
            unused: rate,
        }
    }

    /// Volume actually drained.
    pub fn consumed(&self) -> f64 {
        self.priority.iter().sum::<f64>()
            + self.backlog.iter().sum::<f64>()
            + self.window.iter().sum::<f64>()
    }

    pub fn pre_service(&self) -> f64 {
        self.window.iter().sum()
    }
}

/// Running volumes per type: `enqueued - served - discarded` always equals
/// the type's current backlog.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TypeLedger {
    pub enqueued: f64,
    pub served: f64,
    pub discarded: f64,
}

impl TypeLedger {
    pub fn balance(&self) -> f64 {
        self.enqueued - self.served - self.discarded
    }
}

/// What [`UserQueues::advance`] did besides the deterministic shift.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdvanceReport {
    /// The request that arrived this slot.
    pub arrived: Option<Request>,
    pub reconciliation: Option<Reconciliation>,
    /// Volume downloaded ahead for the arrived request.
    pub pre_served: f64,
}

/// Queue state of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserQueues {
    file_types: usize,
    window_size: usize,
    backlog: Vec<f64>,
    priority: Vec<f64>,
    window: VecDeque<WindowEntry>,
    ledger: Vec<TypeLedger>,
}

impl UserQueues {
    /// Empty arrived backlog and a window pre-filled with the requests of
    /// slots `0..D` (already carrying their predictions).
    pub fn new(file_types: usize, initial_window: Vec<Request>) -> Self {
        let mut q = Self {
            file_types,
            window_size: initial_window.len(),
            backlog: vec![0.0; file_types],
            priority: vec![0.0; file_types],
            window: VecDeque::with_capacity(initial_window.len()),
            ledger: vec![TypeLedger::default(); file_types],
        };
        for r in initial_window {
            q.push_entry(r);
        }
        q
    }

    pub fn file_types(&self) -> usize {
        self.file_types
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// `Q~^{-1}_uf`.
    pub fn backlog(&self) -> &[f64] {
        &self.backlog
    }

    pub fn priority(&self) -> &[f64] {
        &self.priority
    }

    pub fn window(&self) -> &VecDeque<WindowEntry> {
        &self.window
    }

    pub fn ledger(&self) -> &[TypeLedger] {
        &self.ledger
    }

    /// `Q~^d_uf` for `d >= 0`.
    pub fn sub_queue(&self, f: usize, d: usize) -> f64 {
        let e = &self.window[d];
        if e.request.predicted_type == f {
            e.residual
        } else {
            0.0
        }
    }

    /// Requests that have arrived but are not yet served, for type `f`.
    pub fn actual_backlog(&self, f: usize) -> f64 {
        self.backlog[f] + self.priority[f]
    }

    pub fn total_actual_backlog(&self) -> f64 {
        (0..self.file_types).map(|f| self.actual_backlog(f)).sum()
    }

    /// `Q_uf`: every sub-queue of type `f`, window included.
    pub fn total(&self, f: usize) -> f64 {
        self.actual_backlog(f)
            + self
                .window
                .iter()
                .filter(|e| e.request.predicted_type == f)
                .map(|e| e.residual)
                .sum::<f64>()
    }

    /// `Q_uf` for every type.
    pub fn totals(&self) -> Vec<f64> {
        let mut q: Vec<f64> = (0..self.file_types)
            .map(|f| self.actual_backlog(f))
            .collect();
        for e in &self.window {
            q[e.request.predicted_type] += e.residual;
        }
        q
    }

    fn push_entry(&mut self, request: Request) {
        self.ledger[request.predicted_type].enqueued += request.predicted_size;
        self.window
            .push_back(WindowEntry::new(request, self.file_types));
    }

    /// Spends `rate` on the types in `cached`.
    ///
    /// The head-of-line bucket goes first. The rest flows to the cached
    /// type(s) with the largest current `Q_uf`, split evenly among ties,
    /// which levels the largest backlogs down together. Inside a type,
    /// sub-queues drain oldest first: `d = -1`, then `d = 0, 1, ...`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn serve(&self, rate: f64, cached: &[bool]) -> Result<ServiceOutcome> {
        if !(rate >= 0.0) {
            return Err(Error::Contract(format!("negative service rate {rate}")));
        }
        let ft = self.file_types;
        let mut out = ServiceOutcome::zero(ft, self.window.len(), rate);
        let mut left = rate;

        for f in (0..ft).filter(|&f| cached[f]) {
            let s = left.min(self.priority[f]);
            out.priority[f] = s;
            left -= s;
        }

        let totals = self.totals();
        let q: Vec<f64> = (0..ft)
            .map(|f| {
                if cached[f] {
                    totals[f] - out.priority[f]
                } else {
                    0.0
                }
            })
            .collect();
        let grant = water_fill(&q, left);
        for (f, &g) in grant.iter().enumerate() {
            if g > 0.0 {
                left -= self.drain_type(f, g, &mut out);
            }
        }
        out.unused = left.max(0.0);
        Ok(out)
    }

    /// FIFO drain of up to `amount` from type `f`; returns what was taken.
    fn drain_type(&self, f: usize, amount: f64, out: &mut ServiceOutcome) -> f64 {
        let mut left = amount;
        let s = left.min(self.backlog[f]);
        out.backlog[f] += s;
        left -= s;
        for (d, e) in self.window.iter().enumerate() {
            if left <= 0.0 {
                break;
            }
            if e.request.predicted_type == f {
                let s = left.min(e.residual);
                out.window[d] += s;
                left -= s;
            }
        }
        amount - left
    }

    /// Applies `outcome` and moves the window one slot ahead.
    ///
    /// `incoming` is the request entering the window edge (arriving at
    /// `slot + D`), or, with `D = 0`, the request arriving in `slot` itself.
    pub fn advance(
        &mut self,
        slot: usize,
        outcome: &ServiceOutcome,
        incoming: Request,
    ) -> Result<AdvanceReport> {
        self.apply_service(outcome)?;

        if self.window_size == 0 {
            let r = incoming;
            self.backlog[r.true_type] += r.true_size;
            self.ledger[r.true_type].enqueued += r.true_size;
            return Ok(AdvanceReport {
                arrived: Some(r),
                reconciliation: None,
                pre_served: 0.0,
            });
        }

        let entry = self.window.pop_front().expect("window holds D entries");
        let rec = reconcile_on_arrival(&entry.request, slot, &entry.served, entry.residual)?;
        let pt = entry.request.predicted_type;
        if rec.dropped > 0.0 {
            self.ledger[pt].discarded += rec.dropped;
        }
        if let Some((f, x)) = rec.backlog {
            self.backlog[f] += x;
            if !entry.request.is_exact() {
                self.ledger[f].enqueued += x;
            }
        }
        if let Some((f, x)) = rec.priority {
            self.priority[f] += x;
            self.ledger[f].enqueued += x;
        }
        self.push_entry(incoming);
        Ok(AdvanceReport {
            arrived: Some(entry.request),
            reconciliation: Some(rec),
            pre_served: entry.served.total(),
        })
    }

    fn apply_service(&mut self, o: &ServiceOutcome) -> Result<()> {
        if o.window.len() != self.window.len()
            || o.backlog.len() != self.file_types
            || o.priority.len() != self.file_types
        {
            return Err(Error::Contract(
                "service outcome does not match queue shape".into(),
            ));
        }
        for f in 0..self.file_types {
            self.priority[f] = (self.priority[f] - o.priority[f]).max(0.0);
            self.backlog[f] = (self.backlog[f] - o.backlog[f]).max(0.0);
            self.ledger[f].served += o.priority[f] + o.backlog[f];
        }
        for (e, &s) in self.window.iter_mut().zip(&o.window) {
            if s > 0.0 {
                let pt = e.request.predicted_type;
                e.residual = (e.residual - s).max(0.0);
                e.served.by_type[pt] += s;
                self.ledger[pt].served += s;
            }
        }
        Ok(())
    }

    /// Replaces the prediction held at window depth `d`.
    ///
    /// The residual becomes the new predicted size less what was already
    /// downloaded under the new predicted type.
    pub fn revise(&mut self, d: usize, predicted_type: usize, predicted_size: f64) {
        let e = &mut self.window[d];
        let old = e.request.predicted_type;
        self.ledger[old].discarded += e.residual;
        e.request.predicted_type = predicted_type;
        e.request.predicted_size = predicted_size;
        e.residual = (predicted_size - e.served.by_type[predicted_type]).max(0.0);
        self.ledger[predicted_type].enqueued += e.residual;
    }
}

/// Splits `amount` over queues `q` by lowering the largest ones to a common
/// level. Returns the grant per queue; grants never exceed `q`.
pub fn water_fill(q: &[f64], amount: f64) -> Vec<f64> {
    let mut grant = vec![0.0; q.len()];
    if amount <= 0.0 {
        return grant;
    }
    let mut order: Vec<usize> = (0..q.len()).filter(|&i| q[i] > 0.0).collect();
    if order.is_empty() {
        return grant;
    }
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&i| q[i]).sum();
    if amount >= total {
        for &i in &order {
            grant[i] = q[i];
        }
        return grant;
    }
    // Find k such that lowering the top k queues to q[order[k]] is not
    // enough, then the level lies between q[order[k]] and q[order[k-1]].
    let mut head = 0.0;
    let mut k = 0;
    while k < order.len() {
        head += q[order[k]];
        let next = order.get(k + 1).map_or(0.0, |&i| q[i]);
        let need = head - (k + 1) as f64 * next;
        if need >= amount {
            break;
        }
        k += 1;
    }
    let k = k.min(order.len() - 1);
    let level = ((head - amount) / (k + 1) as f64).max(0.0);
    for &i in &order[..=k] {
        grant[i] = (q[i] - level).clamp(0.0, q[i]);
    }
    grant
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn req(slot: usize, f: usize, size: f64) -> Request {
        Request {
            user: 0,
            arrival_slot: slot,
            true_type: f,
            true_size: size,
            predicted_type: f,
            predicted_size: size,
        }
    }

    #[test]
    fn zero_rate_serves_nothing() {
        let q = UserQueues::new(2, vec![req(0, 0, 5.0)]);
        let o = q.serve(0.0, &[true, true]).unwrap();
        assert_eq!(o.consumed(), 0.0);
        assert_eq!(o.unused, 0.0);
    }

    #[test]
    fn negative_rate_is_a_contract_error() {
        let q = UserQueues::new(1, vec![]);
        assert!(matches!(q.serve(-1.0, &[true]), Err(Error::Contract(_))));
    }

    #[test]
    fn fifo_drain_backlog_then_depth_zero() {
        let mut q = UserQueues::new(1, vec![req(0, 0, 10.0)]);
        q.advance(0, &q.serve(0.0, &[true]).unwrap(), req(1, 0, 5.0))
            .unwrap();
        assert_eq!(q.backlog(), &[10.0]);
        assert_eq!(q.sub_queue(0, 0), 5.0);
        let o = q.serve(12.0, &[true]).unwrap();
        assert_eq!(o.backlog, vec![10.0]);
        assert_eq!(o.window, vec![2.0]);
        assert_eq!(o.unused, 0.0);
    }

    #[test]
    fn equal_backlogs_share_evenly() {
        let mut q = UserQueues::new(2, vec![]);
        q.backlog = vec![8.0, 8.0];
        let o = q.serve(6.0, &[true, true]).unwrap();
        assert_eq!(o.backlog, vec![3.0, 3.0]);
    }

    #[test]
    fn largest_backlog_first_then_together() {
        let mut q = UserQueues::new(3, vec![]);
        q.backlog = vec![10.0, 4.0, 50.0];
        // Type 2 is uncached; type 0 comes down to 4, then both drop by 1.
        let o = q.serve(8.0, &[true, true, false]).unwrap();
        assert!((o.backlog[0] - 7.0).abs() < 1e-12);
        assert!((o.backlog[1] - 1.0).abs() < 1e-12);
        assert_eq!(o.backlog[2], 0.0);
    }

    #[test]
    fn unused_rate_when_cached_types_run_dry() {
        let mut q = UserQueues::new(2, vec![]);
        q.backlog = vec![3.0, 100.0];
        let o = q.serve(10.0, &[true, false]).unwrap();
        assert_eq!(o.backlog, vec![3.0, 0.0]);
        assert_eq!(o.unused, 7.0);
    }

    #[test]
    fn priority_bucket_goes_first() {
        let mut q = UserQueues::new(2, vec![]);
        q.backlog = vec![0.0, 30.0];
        q.priority = vec![5.0, 0.0];
        let o = q.serve(6.0, &[true, true]).unwrap();
        assert_eq!(o.priority, vec![5.0, 0.0]);
        assert_eq!(o.backlog, vec![0.0, 1.0]);
    }

    #[test]
    fn arrived_backlog_update() {
        // Q~^{-1} = 10 served 4, Q~^0 = 5 served fully: 6 remains.
        let mut q = UserQueues::new(1, vec![req(0, 0, 10.0)]);
        q.advance(0, &q.serve(0.0, &[true]).unwrap(), req(1, 0, 5.0))
            .unwrap();
        let o = ServiceOutcome {
            priority: vec![0.0],
            backlog: vec![4.0],
            window: vec![5.0],
            rate: 9.0,
            unused: 0.0,
        };
        q.advance(1, &o, req(2, 0, 7.0)).unwrap();
        assert_eq!(q.backlog(), &[6.0]);
        assert_eq!(q.sub_queue(0, 0), 7.0);
    }

    #[test]
    fn window_shift_clamps_at_zero() {
        let mut q = UserQueues::new(1, vec![req(0, 0, 1.0), req(1, 0, 4.0)]);
        let mut o = ServiceOutcome::zero(1, 2, 0.0);
        o.window[1] = 4.0;
        q.advance(0, &o, req(2, 0, 3.0)).unwrap();
        assert_eq!(q.sub_queue(0, 0), 0.0);
        assert_eq!(q.sub_queue(0, 1), 3.0);
        assert_eq!(q.backlog(), &[1.0]);
    }

    #[test]
    fn zero_window_is_a_plain_queue() {
        let mut q = UserQueues::new(1, vec![]);
        let mut reference = 0.0f64;
        let sizes = [5.0, 1.0, 9.0, 0.5, 3.0];
        let rates = [0.0, 2.0, 10.0, 4.0, 1.0];
        for (t, (&a, &mu)) in sizes.iter().zip(&rates).enumerate() {
            let o = q.serve(mu, &[true]).unwrap();
            q.advance(t, &o, req(t, 0, a)).unwrap();
            reference = (reference - mu).max(0.0) + a;
            assert_eq!(q.backlog()[0], reference);
        }
    }

    #[test]
    fn mistyped_entry_is_replaced_by_truth_on_arrival() {
        let mut r = req(0, 1, 55.0);
        r.predicted_type = 0;
        r.predicted_size = 40.0;
        let mut q = UserQueues::new(2, vec![r]);
        let o = q.serve(25.0, &[true, false]).unwrap();
        assert_eq!(o.window, vec![25.0]);
        let rep = q.advance(0, &o, req(1, 0, 1.0)).unwrap();
        let rec = rep.reconciliation.unwrap();
        assert_eq!(rec.waste, 25.0);
        assert_eq!(rec.dropped, 15.0);
        assert_eq!(q.backlog(), &[0.0, 55.0]);
    }

    #[test]
    fn short_size_goes_head_of_line() {
        let mut r = req(0, 0, 100.0);
        r.predicted_size = 80.0;
        let mut q = UserQueues::new(1, vec![r]);
        let o = q.serve(80.0, &[true]).unwrap();
        q.advance(0, &o, req(1, 0, 1.0)).unwrap();
        assert_eq!(q.priority(), &[20.0]);
        assert_eq!(q.backlog(), &[0.0]);
    }

    #[test]
    fn revision_deducts_download_under_new_type() {
        let mut q = UserQueues::new(2, vec![req(0, 0, 10.0), req(1, 0, 30.0)]);
        let o = q.serve(15.0, &[true, true]).unwrap();
        assert_eq!(o.window, vec![10.0, 5.0]);
        q.advance(0, &o, req(2, 1, 9.0)).unwrap();
        q.revise(0, 0, 12.0);
        assert_eq!(q.sub_queue(0, 0), 7.0);
        q.revise(0, 1, 12.0);
        assert_eq!(q.sub_queue(0, 0), 0.0);
        assert_eq!(q.sub_queue(1, 0), 12.0);
    }

    #[test]
    fn water_fill_cases() {
        assert_eq!(water_fill(&[8.0, 8.0], 6.0), vec![3.0, 3.0]);
        assert_eq!(water_fill(&[5.0, 1.0], 100.0), vec![5.0, 1.0]);
        assert_eq!(water_fill(&[0.0, 0.0], 3.0), vec![0.0, 0.0]);
        let g = water_fill(&[10.0, 6.0, 2.0], 6.0);
        assert!((g[0] - 5.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12 && g[2] == 0.0);
    }

    proptest! {
        #[test]
        fn water_fill_spends_exactly_and_levels(
            q in proptest::collection::vec(0.0f64..100.0, 1..6),
            amount in 0.0f64..400.0,
        ) {
            let g = water_fill(&q, amount);
            let total: f64 = q.iter().sum();
            let spent: f64 = g.iter().sum();
            prop_assert!((spent - amount.min(total)).abs() < 1e-9 * (1.0 + total));
            for i in 0..q.len() {
                prop_assert!(g[i] >= 0.0 && g[i] <= q[i]);
            }
            // Every served queue ends at the common level, which is at least
            // every unserved queue.
            let level = q.iter().zip(&g).filter(|(_, &gi)| gi > 0.0).map(|(qi, gi)| qi - gi)
                .fold(f64::NAN, f64::max);
            if level.is_finite() {
                for i in 0..q.len() {
                    let rest = q[i] - g[i];
                    if g[i] > 0.0 {
                        prop_assert!((rest - level).abs() < 1e-9 * (1.0 + total));
                    } else {
                        prop_assert!(q[i] <= level + 1e-9 * (1.0 + total));
                    }
                }
            }
        }
    }
}
