use super::{tick, ActionExecutor, PredicateProvider, RuntimeError, TickState, TickTrace, TraceEntry};
use crate::bt::BtDocument;

/// Number of ticks in `duration_s` at `tick_rate_hz`, i.e.
/// `floor(duration_s * tick_rate_hz)` with a 1e-9 guard against products
/// like `0.29 * 100 = 28.999...`.
pub fn tick_count(tick_rate_hz: f64, duration_s: f64) -> u64 {
    if duration_s <= 0.0 {
        return 0;
    }
    (duration_s * tick_rate_hz + 1e-9).floor() as u64
}

/// Fixed-rate supervision loop over one document. Tick `k` happens at
/// virtual time `k / tick_rate_hz`.
#[derive(Debug, Clone)]
pub struct Supervisor<'d> {
    doc: &'d BtDocument,
    state: TickState,
    tick_rate_hz: f64,
    next_tick: u64,
}

impl<'d> Supervisor<'d> {
    pub fn new(doc: &'d BtDocument, tick_rate_hz: f64) -> Result<Self, RuntimeError> {
        if !(tick_rate_hz.is_finite() && tick_rate_hz > 0.0) {
            return Err(RuntimeError::TickRate(tick_rate_hz));
        }
        Ok(Supervisor {
            doc,
            state: TickState::new(doc),
            tick_rate_hz,
            next_tick: 0,
        })
    }

    pub fn state(&self) -> &TickState {
        &self.state
    }

    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }

    pub fn step<P, E>(&mut self, provider: &P, executor: &mut E) -> Result<TraceEntry, RuntimeError>
    where
        P: PredicateProvider + ?Sized,
        E: ActionExecutor + ?Sized,
    {
        let k = self.next_tick;
        let entry = tick(
            self.doc,
            provider,
            executor,
            &mut self.state,
            k,
            k as f64 / self.tick_rate_hz,
        )?;
        self.next_tick += 1;
        Ok(entry)
    }
}

/// Run the supervision cycle for `duration_s` of virtual time.
///
/// A RUNNING action is re-reached on later ticks for as long as its branch
/// is still taken; once it returns SUCCESS the next tick starts over from
/// scenario selection like any other.
pub fn run_supervisor<P, E>(
    doc: &BtDocument,
    provider: &P,
    executor: &mut E,
    tick_rate_hz: f64,
    duration_s: f64,
) -> Result<TickTrace, RuntimeError>
where
    P: PredicateProvider + ?Sized,
    E: ActionExecutor + ?Sized,
{
    let mut sup = Supervisor::new(doc, tick_rate_hz)?;
    let n = tick_count(tick_rate_hz, duration_s);
    let mut entries = Vec::with_capacity(n as usize);
    for _ in 0..n {
        entries.push(sup.step(provider, executor)?);
    }
    Ok(TickTrace {
        tick_rate_hz,
        entries,
    })
}
