//! Runtime checks of the simulation's structural invariants. Each returns
//! a description of the first violation found.

use std::collections::HashSet;

use crate::engine::{GroupState, ObservationScope};
use crate::information::VpiReport;
use crate::scalar::Scalar;
use crate::sweep::AggregateRow;

pub type Check = std::result::Result<(), String>;

/// Checks one period's transition `before -> after`: pairing validity,
/// retirement absorption and belief conservation.
pub fn check_period<S: Scalar>(before: &GroupState<S>, after: &GroupState<S>) -> Check {
    check_pairing(after)?;
    check_absorption(before, after)?;
    check_belief_conservation(before, after)
}

/// Pairs are disjoint, consist of agents active after the decisions, and
/// leave at most one active agent idle (exactly one iff the count is odd).
pub fn check_pairing<S: Scalar>(after: &GroupState<S>) -> Check {
    let pairs = after.last_pairs();
    let mut seen = HashSet::new();
    for &(a, b) in pairs {
        if a == b {
            return Err(format!("agent {a} paired with itself"));
        }
        for id in [a, b] {
            if !seen.insert(id) {
                return Err(format!("agent {id} paired twice"));
            }
            if !after.agents()[id as usize].active {
                return Err(format!("inactive agent {id} was paired"));
            }
        }
    }
    let active_after = after.active_count() as usize;
    if let Some(idle) = after.last_idle() {
        if seen.contains(&idle) || !after.agents()[idle as usize].active {
            return Err(format!("idle agent {idle} is paired or inactive"));
        }
    }
    let covered = seen.len() + usize::from(after.last_idle().is_some());
    if covered != active_after || after.last_idle().is_some() != (active_after % 2 == 1) {
        return Err(format!("{covered} agents covered, {active_after} active"));
    }
    if after.last_kinds().len() != pairs.len() {
        return Err("one game kind per pair expected".into());
    }
    Ok(())
}

/// Retired agents stay retired, with beliefs and payoffs frozen.
pub fn check_absorption<S: Scalar>(before: &GroupState<S>, after: &GroupState<S>) -> Check {
    for (old, new) in before.agents().iter().zip(after.agents()) {
        if !old.active && new != old {
            return Err(format!("retired agent {} changed", old.id));
        }
        if !new.same_identity(old) {
            return Err(format!("agent {} changed type or prior", old.id));
        }
    }
    if after.active_count() > before.active_count() {
        return Err("active count rose".into());
    }
    Ok(())
}

/// Every paired agent gained exactly the observations it was shown, and
/// its counts match the types it saw; nobody else's counts moved.
pub fn check_belief_conservation<S: Scalar>(before: &GroupState<S>, after: &GroupState<S>) -> Check {
    let observation = after.config().observation;
    let pairs = after.last_pairs();
    let seen: HashSet<u32> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let paired_punishers = seen.iter().filter(|&&i| after.agents()[i as usize].agent_type.is_punisher()).count() as u32;
    let partner: std::collections::HashMap<u32, u32> = pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    for (old, new) in before.agents().iter().zip(after.agents()) {
        if new.belief.k < old.belief.k || new.belief.m < old.belief.m {
            return Err(format!("agent {}: counts decreased", old.id));
        }
        let dk = new.belief.k - old.belief.k;
        let dm = new.belief.m - old.belief.m;
        let (want_k, want_m) = match (partner.get(&old.id), observation) {
            (None, _) => (0, 0),
            (Some(&p), ObservationScope::PerPair) => {
                if after.agents()[p as usize].agent_type.is_punisher() {
                    (1, 0)
                } else {
                    (0, 1)
                }
            }
            (Some(_), ObservationScope::Global) => {
                let k = paired_punishers - u32::from(old.agent_type.is_punisher());
                (k, seen.len() as u32 - 1 - k)
            }
        };
        if (dk, dm) != (want_k, want_m) {
            return Err(format!("agent {}: counts moved by ({dk}, {dm}), expected ({want_k}, {want_m})", old.id));
        }
        let paired = u32::from(partner.contains_key(&old.id));
        if new.interactions != old.interactions + paired {
            return Err(format!("agent {}: interaction count off", old.id));
        }
    }
    Ok(())
}

/// Surviving fraction and mean active size never increase over a cell's rows.
pub fn check_survival<S: Scalar>(rows: &[AggregateRow<S>]) -> Check {
    for w in rows.windows(2) {
        if w[1].surviving_fraction > w[0].surviving_fraction {
            return Err(format!("survival rose at timestep {}", w[1].index));
        }
        if w[1].mean_active_size > w[0].mean_active_size {
            return Err(format!("mean size rose at timestep {}", w[1].index));
        }
    }
    Ok(())
}

/// VPI may dip below zero only by its numerical error allowance.
pub fn check_vpi<S: Scalar>(report: &VpiReport<S>) -> Check {
    if report.vpi < -report.tolerance() {
        return Err(format!("VPI {} below -{}", report.vpi, report.tolerance()));
    }
    Ok(())
}
