//! Blocking pairs, (weak) stability and the two matching objectives.
//!
//! "Prefers" is always strict, so on instances with ties these predicates
//! implement weak stability.

use thiserror::Error;

use crate::instance::{Instance, Matching, MatchingError, PreferenceList, Rank};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StabilityError {
    #[error("pair (r{0}, h{1}) is not mutually acceptable")]
    NotAcceptable(usize, usize),
    #[error("infeasible matching: {0}")]
    Infeasible(#[from] MatchingError),
    #[error("resident r{0} is matched to h{1}, which it does not rank")]
    Unranked(usize, usize),
}

pub fn rank_of(list: &PreferenceList, who: usize) -> Rank {
    list.rank_of(who)
}

/// Per-hospital occupancy and the raw rank of the worst member currently held.
pub(crate) fn hospital_loads(inst: &Instance, assignment: &[Option<usize>]) -> (Vec<u32>, Vec<u32>) {
    let nh = inst.num_hospitals();
    let mut occ = vec![0u32; nh];
    let mut worst = vec![0u32; nh];
    for (i, h) in assignment.iter().enumerate() {
        if let Some(j) = *h {
            occ[j] += 1;
            worst[j] = worst[j].max(inst.hospital_rank_raw(j, i));
        }
    }
    (occ, worst)
}

/// Raw blocking test on precomputed loads; `(i, j)` must be acceptable.
#[inline]
pub(crate) fn blocks_raw(
    inst: &Instance,
    capacities: &[u32],
    assignment: &[Option<usize>],
    occ: &[u32],
    worst: &[u32],
    i: usize,
    j: usize,
) -> bool {
    let rj = inst.resident_rank_raw(i, j);
    let resident_wants = match assignment[i] {
        None => true,
        Some(h) => rj < inst.resident_rank_raw(i, h),
    };
    if !resident_wants {
        return false;
    }
    occ[j] < capacities[j] || (occ[j] > 0 && inst.hospital_rank_raw(j, i) < worst[j])
}

/// Every blocking pair of the assignment under `capacities`, ordered by
/// resident then hospital.
pub(crate) fn blocking_pairs_raw(inst: &Instance, capacities: &[u32], assignment: &[Option<usize>]) -> Vec<(usize, usize)> {
    let (occ, worst) = hospital_loads(inst, assignment);
    let mut out = Vec::new();
    for i in 0..inst.num_residents() {
        let mut js: Vec<usize> = inst.resident_list(i).agents().filter(|&j| inst.is_acceptable(i, j)).collect();
        js.sort_unstable();
        for j in js {
            if blocks_raw(inst, capacities, assignment, &occ, &worst, i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Stability test that stops at the first blocking pair.
pub(crate) fn is_stable_raw(inst: &Instance, capacities: &[u32], assignment: &[Option<usize>]) -> bool {
    let (occ, worst) = hospital_loads(inst, assignment);
    for i in 0..inst.num_residents() {
        let current = assignment[i].map(|h| inst.resident_rank_raw(i, h));
        for tier in inst.resident_list(i).tiers() {
            let Some(&first) = tier.first() else { continue };
            let r = inst.resident_rank_raw(i, first);
            if current.is_some_and(|c| r >= c) {
                break;
            }
            for &j in tier {
                if inst.is_acceptable(i, j) && blocks_raw(inst, capacities, assignment, &occ, &worst, i, j) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_blocking_pair(inst: &Instance, m: &Matching, i: usize, j: usize) -> Result<bool, StabilityError> {
    if !inst.is_acceptable(i, j) {
        return Err(StabilityError::NotAcceptable(i, j));
    }
    m.check_feasible(inst)?;
    let (occ, worst) = hospital_loads(inst, m.assignment());
    Ok(blocks_raw(inst, inst.capacities(), m.assignment(), &occ, &worst, i, j))
}

pub fn is_stable(inst: &Instance, m: &Matching) -> Result<bool, StabilityError> {
    m.check_feasible(inst)?;
    Ok(is_stable_raw(inst, inst.capacities(), m.assignment()))
}

pub fn blocking_pairs(inst: &Instance, m: &Matching) -> Result<Vec<(usize, usize)>, StabilityError> {
    m.check_feasible(inst)?;
    Ok(blocking_pairs_raw(inst, inst.capacities(), m.assignment()))
}

/// Sum over matched pairs of the resident's rank of its hospital.
pub fn avg_rank(inst: &Instance, m: &Matching) -> Result<u64, StabilityError> {
    avg_rank_raw(inst, m.assignment())
}

pub(crate) fn avg_rank_raw(inst: &Instance, assignment: &[Option<usize>]) -> Result<u64, StabilityError> {
    let mut total = 0u64;
    for (i, h) in assignment.iter().enumerate() {
        if let Some(j) = *h {
            match inst.resident_rank_raw(i, j) {
                0 => return Err(StabilityError::Unranked(i, j)),
                r => total += r as u64,
            }
        }
    }
    Ok(total)
}

pub fn cardinality(m: &Matching) -> u64 {
    m.len() as u64
}
