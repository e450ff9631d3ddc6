//! A single user's lookahead window, slot by slot: pre-serving a predicted
//! request, then reconciling a size and a type misprediction on arrival.
//!
//! ```text
//! cargo run --example predictive_queue
//! ```

use cachenet::queueing::UserQueues;
use cachenet::traffic::Request;

fn request(
    slot: usize,
    true_type: usize,
    size: f64,
    predicted_type: usize,
    predicted: f64,
) -> Request {
    Request {
        user: 0,
        arrival_slot: slot,
        true_type,
        true_size: size,
        predicted_type,
        predicted_size: predicted,
    }
}

fn show(t: usize, q: &UserQueues) {
    let window: Vec<String> = q
        .window()
        .iter()
        .map(|e| format!("{}:{:.0}", e.request.predicted_type, e.residual))
        .collect();
    println!(
        "  t={t}: backlog {:?}  priority {:?}  window [{}]",
        q.backlog(),
        q.priority(),
        window.join(" ")
    );
}

fn main() -> cachenet::Result<()> {
    // Two file types, window of two slots. Slot 0 is predicted exactly,
    // slot 1 is predicted too small, slot 2 gets the wrong type.
    let mut q = UserQueues::new(
        2,
        vec![request(0, 0, 10.0, 0, 10.0), request(1, 0, 8.0, 0, 5.0)],
    );
    let upcoming = [
        request(2, 1, 6.0, 0, 6.0),
        request(3, 1, 4.0, 1, 4.0),
        request(4, 0, 3.0, 0, 3.0),
        request(5, 0, 3.0, 0, 3.0),
    ];
    let both = [true, true];
    show(0, &q);
    for (t, incoming) in upcoming.into_iter().enumerate() {
        let outcome = q.serve(7.0, &both)?;
        println!(
            "  serve 7: priority {:?} backlog {:?} window {:?} unused {:.1}",
            outcome.priority, outcome.backlog, outcome.window, outcome.unused
        );
        let report = q.advance(t, &outcome, incoming)?;
        if let (Some(r), Some(rec)) = (&report.arrived, &report.reconciliation) {
            println!(
                "  arrived type {} size {} (predicted {} / {}), pre-served {:.1}, waste {:.1}, dropped {:.1}",
                r.true_type, r.true_size, r.predicted_type, r.predicted_size, report.pre_served, rec.waste, rec.dropped
            );
        }
        show(t + 1, &q);
    }
    for (f, l) in q.ledger().iter().enumerate() {
        println!(
            "type {f}: enqueued {:.1}, served {:.1}, discarded {:.1}, still queued {:.1}",
            l.enqueued,
            l.served,
            l.discarded,
            l.balance()
        );
    }
    Ok(())
}
