//! Per-slice MAC schedulers: round-robin (0), waterfilling (1),
//! proportional fair (2).
//!
//! All three assign the slice's RBGs one at a time. Ties break toward the
//! lowest UE id so every allocation is deterministic.

use super::config::{RbgRange, SchedPolicy};

/// Scheduler view of one UE for a single TTI.
#[derive(Debug, Clone)]
pub struct SchedUe {
    pub ue_id: u32,
    /// Bits one RBG carries for this UE this TTI.
    pub efficiency: f64,
    /// Bits still waiting after arrivals, decremented as RBGs are granted.
    pub remaining_bits: u64,
    /// Exponentially smoothed served bits per TTI (PF metric denominator).
    pub pf_avg: f64,
    /// RBGs granted this TTI (output).
    pub granted: u16,
}

impl SchedUe {
    fn backlogged(&self) -> bool {
        self.remaining_bits > 0
    }
    fn grant(&mut self) {
        self.granted += 1;
        let cap = self.efficiency.floor() as u64;
        self.remaining_bits = self.remaining_bits.saturating_sub(cap.max(1));
    }
    fn granted_bits(&self) -> f64 {
        self.granted as f64 * self.efficiency
    }
}

/// Assign one slice's RBG range for one TTI.
///
/// `alloc` is the cell-wide RBG → UE map being filled in; `rr_ptr` is the
/// slice's rotating round-robin pointer, persisted across TTIs. UEs with
/// empty buffers receive nothing; an empty slice leaves its RBGs idle.
pub fn allocate_slice(
    policy: SchedPolicy,
    range: RbgRange,
    ues: &mut [SchedUe],
    rr_ptr: &mut usize,
    alloc: &mut [Option<u32>],
) {
    if ues.is_empty() {
        return;
    }
    for rbg in range.iter() {
        let pick = match policy {
            SchedPolicy::RoundRobin => pick_round_robin(ues, rr_ptr),
            SchedPolicy::Waterfilling => pick_waterfilling(ues),
            SchedPolicy::ProportionalFair => pick_proportional_fair(ues),
        };
        if let Some(i) = pick {
            alloc[rbg as usize] = Some(ues[i].ue_id);
            ues[i].grant();
        }
    }
}

fn pick_round_robin(ues: &[SchedUe], rr_ptr: &mut usize) -> Option<usize> {
    let n = ues.len();
    for off in 0..n {
        let i = (*rr_ptr + off) % n;
        if ues[i].backlogged() {
            *rr_ptr = (i + 1) % n;
            return Some(i);
        }
    }
    None
}

/// Waterfilling: grant the next RBG to the backlogged UE with the least
/// bits accumulated this TTI, equalizing served volume.
fn pick_waterfilling(ues: &[SchedUe]) -> Option<usize> {
    ues.iter()
        .enumerate()
        .filter(|(_, u)| u.backlogged())
        .min_by(|(_, a), (_, b)| {
            a.granted_bits()
                .partial_cmp(&b.granted_bits())
                .unwrap()
                .then(a.ue_id.cmp(&b.ue_id))
        })
        .map(|(i, _)| i)
}

/// Proportional fair: argmax of instantaneous rate over smoothed average
/// rate. A UE that has never been served (avg 0) wins outright.
fn pick_proportional_fair(ues: &[SchedUe]) -> Option<usize> {
    let metric = |u: &SchedUe| {
        if u.pf_avg <= 0.0 {
            f64::INFINITY
        } else {
            u.efficiency / u.pf_avg
        }
    };
    ues.iter()
        .enumerate()
        .filter(|(_, u)| u.backlogged())
        .max_by(|(_, a), (_, b)| {
            metric(a)
                .partial_cmp(&metric(b))
                .unwrap()
                .then(b.ue_id.cmp(&a.ue_id))
        })
        .map(|(i, _)| i)
}

/// Smoothing constant for the PF average-rate recursion.
pub const PF_ALPHA: f64 = 0.01;
