//! Resident-proposing deferred acceptance and exhaustive enumeration of
//! (weakly) stable matchings for desk-scale instances.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::instance::{Instance, Matching, PreferenceList};
use crate::stability::is_stable_raw;

/// Default cap on enumeration search nodes.
pub const DEFAULT_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("instance has ties; break them before running deferred acceptance")]
    HasTies,
    #[error("enumeration exceeded its limit of {limit} candidate assignments")]
    LimitExceeded { limit: u64 },
}

/// Resident-optimal stable matching of a strict instance.
pub fn deferred_acceptance(inst: &Instance) -> Result<Matching, EngineError> {
    if inst.has_ties() {
        return Err(EngineError::HasTies);
    }
    Ok(da_with_capacities(inst, inst.capacities()))
}

/// Deferred acceptance under an explicit capacity vector. The lowest-index
/// free resident proposes next. Assumes strict lists.
pub(crate) fn da_with_capacities(inst: &Instance, capacities: &[u32]) -> Matching {
    let nr = inst.num_residents();
    let nh = inst.num_hospitals();
    let lists: Vec<Vec<usize>> = inst.resident_prefs().iter().map(|l| l.agents().collect()).collect();
    let mut next = vec![0usize; nr];
    let mut assignment: Vec<Option<usize>> = vec![None; nr];
    // max-heap on hospital rank: the top is the worst resident held
    let mut held: Vec<BinaryHeap<(u32, usize)>> = vec![BinaryHeap::new(); nh];
    let mut free: BinaryHeap<Reverse<usize>> = (0..nr).map(Reverse).collect();

    while let Some(Reverse(i)) = free.pop() {
        let Some(&j) = lists[i].get(next[i]) else {
            continue;
        };
        next[i] += 1;
        let rank = inst.hospital_rank_raw(j, i);
        if rank == 0 || capacities[j] == 0 {
            free.push(Reverse(i));
            continue;
        }
        if (held[j].len() as u32) < capacities[j] {
            held[j].push((rank, i));
            assignment[i] = Some(j);
            continue;
        }
        let &(worst_rank, worst) = held[j].peek().expect("full hospital holds someone");
        if rank < worst_rank {
            held[j].pop();
            assignment[worst] = None;
            free.push(Reverse(worst));
            held[j].push((rank, i));
            assignment[i] = Some(j);
        } else {
            free.push(Reverse(i));
        }
    }
    Matching::from_assignment(assignment, nh)
}

/// All stable matchings of a strict instance, in canonical order.
pub fn enumerate_stable(inst: &Instance, limit: u64) -> Result<Vec<Matching>, EngineError> {
    if inst.has_ties() {
        return Err(EngineError::HasTies);
    }
    collect_all(inst, inst.capacities(), limit)
}

/// All weakly stable matchings, in canonical order.
pub fn enumerate_weakly_stable(inst: &Instance, limit: u64) -> Result<Vec<Matching>, EngineError> {
    collect_all(inst, inst.capacities(), limit)
}

fn collect_all(inst: &Instance, capacities: &[u32], limit: u64) -> Result<Vec<Matching>, EngineError> {
    let nh = inst.num_hospitals();
    let mut out = Vec::new();
    for_each_stable(inst, capacities, limit, |a| {
        out.push(Matching::from_assignment(a.to_vec(), nh));
    })?;
    out.sort();
    Ok(out)
}

/// Visits every (weakly) stable assignment under `capacities`.
///
/// Residents are assigned in index order. Choosing hospital `h` (or nothing)
/// for resident `i` commits every hospital `g` that `i` strictly prefers to
/// end up full with members it ranks no worse than `i`; those commitments
/// prune the search. Each leaf is re-checked with the plain stability test.
pub(crate) fn for_each_stable<F>(inst: &Instance, capacities: &[u32], limit: u64, visit: F) -> Result<(), EngineError>
where
    F: FnMut(&[Option<usize>]),
{
    let nr = inst.num_residents();
    let nh = inst.num_hospitals();
    let mut search = Search {
        inst,
        capacities,
        limit,
        nodes: 0,
        assignment: vec![None; nr],
        occupancy: vec![0; nh],
        worst_member: vec![0; nh],
        ceiling: vec![u32::MAX; nh],
        must_fill: vec![false; nh],
        undo: Vec::new(),
        lists: inst.resident_prefs().iter().map(|l| l.agents().collect()).collect(),
        visit,
    };
    search.descend(0)
}

struct Search<'a, F> {
    inst: &'a Instance,
    capacities: &'a [u32],
    limit: u64,
    nodes: u64,
    assignment: Vec<Option<usize>>,
    occupancy: Vec<u32>,
    worst_member: Vec<u32>,
    ceiling: Vec<u32>,
    must_fill: Vec<bool>,
    undo: Vec<(usize, u32, bool)>,
    lists: Vec<Vec<usize>>,
    visit: F,
}

impl<F: FnMut(&[Option<usize>])> Search<'_, F> {
    fn descend(&mut self, i: usize) -> Result<(), EngineError> {
        if i == self.assignment.len() {
            if is_stable_raw(self.inst, self.capacities, &self.assignment) {
                (self.visit)(&self.assignment);
            }
            return Ok(());
        }
        let options: Vec<Option<usize>> = self.lists[i]
            .iter()
            .copied()
            .filter(|&h| self.inst.is_acceptable(i, h))
            .map(Some)
            .chain(std::iter::once(None))
            .collect();
        for choice in options {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Err(EngineError::LimitExceeded { limit: self.limit });
            }
            let mark = self.undo.len();
            let saved_worst = choice.map(|h| self.worst_member[h]);
            if self.try_choose(i, choice) {
                self.descend(i + 1)?;
            }
            if let Some(h) = choice {
                if self.assignment[i] == Some(h) {
                    self.occupancy[h] -= 1;
                    self.worst_member[h] = saved_worst.unwrap_or(0);
                }
            }
            self.assignment[i] = None;
            while self.undo.len() > mark {
                let (g, ceiling, must) = self.undo.pop().expect("non-empty");
                self.ceiling[g] = ceiling;
                self.must_fill[g] = must;
            }
        }
        Ok(())
    }

    /// Applies the choice and its commitments; false if it cannot lead to a
    /// stable assignment.
    fn try_choose(&mut self, i: usize, choice: Option<usize>) -> bool {
        let inst = self.inst;
        let own_rank = match choice {
            Some(h) => {
                if self.occupancy[h] >= self.capacities[h] {
                    return false;
                }
                let rank_at_h = inst.hospital_rank_raw(h, i);
                if rank_at_h > self.ceiling[h] {
                    return false;
                }
                self.assignment[i] = Some(h);
                self.occupancy[h] += 1;
                self.worst_member[h] = self.worst_member[h].max(rank_at_h);
                inst.resident_rank_raw(i, h)
            }
            None => u32::MAX,
        };
        for idx in 0..self.lists[i].len() {
            let g = self.lists[i][idx];
            if inst.resident_rank_raw(i, g) >= own_rank {
                continue;
            }
            if !inst.is_acceptable(i, g) || self.capacities[g] == 0 {
                continue;
            }
            let bound = inst.hospital_rank_raw(g, i);
            if self.worst_member[g] > bound {
                return false;
            }
            if bound < self.ceiling[g] || !self.must_fill[g] {
                self.undo.push((g, self.ceiling[g], self.must_fill[g]));
                self.ceiling[g] = self.ceiling[g].min(bound);
                self.must_fill[g] = true;
            }
            if !self.can_fill(g, i) {
                return false;
            }
        }
        true
    }

    /// Whether residents after `i` could still fill `g` within its ceiling.
    fn can_fill(&self, g: usize, i: usize) -> bool {
        let need = self.capacities[g].saturating_sub(self.occupancy[g]);
        if need == 0 {
            return true;
        }
        let ceiling = self.ceiling[g];
        let mut available = 0u32;
        for k in i + 1..self.assignment.len() {
            let r = self.inst.hospital_rank_raw(g, k);
            if r > 0 && r <= ceiling && self.inst.resident_rank_raw(k, g) > 0 {
                available += 1;
                if available >= need {
                    return true;
                }
            }
        }
        false
    }
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// The `index`-th permutation of `items` in lexicographic order of positions.
fn nth_permutation(items: &[usize], mut index: usize) -> Vec<usize> {
    let mut pool = items.to_vec();
    let mut out = Vec::with_capacity(pool.len());
    for remaining in (1..=pool.len()).rev() {
        let block = factorial(remaining - 1);
        let pick = index / block;
        index %= block;
        out.push(pool.remove(pick));
    }
    out
}

/// Sizes of every tie in the instance: resident lists first, then hospital
/// lists, tiers in list order.
pub fn tie_sizes(inst: &Instance) -> Vec<usize> {
    inst.resident_prefs()
        .iter()
        .chain(inst.hospital_prefs())
        .flat_map(|l| l.tiers().iter().filter(|t| t.len() > 1).map(Vec::len))
        .collect()
}

/// Strict instance obtained by ordering the members of each tie by the
/// permutation selected in `resolution` (one entry per tie, in
/// [`tie_sizes`] order; entry `k` picks the `k`-th lexicographic
/// permutation). Missing entries count as 0.
pub fn break_ties(inst: &Instance, resolution: &[usize]) -> Instance {
    let mut cursor = 0usize;
    let mut resolve = |list: &PreferenceList| -> PreferenceList {
        let mut order = Vec::with_capacity(list.len());
        for tier in list.tiers() {
            if tier.len() > 1 {
                let choice = resolution.get(cursor).copied().unwrap_or(0) % factorial(tier.len());
                cursor += 1;
                order.extend(nth_permutation(tier, choice));
            } else {
                order.extend(tier.iter().copied());
            }
        }
        PreferenceList::strict(order)
    };
    let resident_prefs: Vec<PreferenceList> = inst.resident_prefs().iter().map(&mut resolve).collect();
    let hospital_prefs: Vec<PreferenceList> = inst.hospital_prefs().iter().map(&mut resolve).collect();
    Instance::new(inst.capacities().to_vec(), resident_prefs, hospital_prefs).expect("shape preserved")
}

/// Every resolution vector accepted by [`break_ties`], as a mixed-radix count.
pub struct TieResolutions {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl TieResolutions {
    pub fn new(inst: &Instance) -> Self {
        let radices: Vec<usize> = tie_sizes(inst).into_iter().map(factorial).collect();
        let current = Some(vec![0; radices.len()]);
        TieResolutions { radices, current }
    }

    /// Number of resolutions, saturating.
    pub fn total(inst: &Instance) -> u128 {
        tie_sizes(inst)
            .into_iter()
            .fold(1u128, |acc, k| acc.saturating_mul(factorial(k) as u128))
    }
}

impl Iterator for TieResolutions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        let mut pos = next.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.radices[pos] {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{avg_rank, is_stable};

    #[test]
    fn distinct_top_choices_give_everyone_rank_one() {
        let inst = Instance::from_strict_lists(
            vec![1, 1, 1],
            vec![vec![2, 0, 1], vec![0, 1, 2], vec![1, 2, 0]],
            vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]],
        )
        .unwrap();
        let m = deferred_acceptance(&inst).unwrap();
        assert_eq!(m.pairs(), vec![(0, 2), (1, 0), (2, 1)]);
        assert_eq!(avg_rank(&inst, &m).unwrap(), 3);
    }

    #[test]
    fn deferred_acceptance_refuses_ties() {
        let inst = Instance::new(
            vec![1, 1],
            vec![PreferenceList::from_tiers(vec![vec![0, 1]])],
            vec![PreferenceList::strict([0]), PreferenceList::strict([0])],
        )
        .unwrap();
        assert_eq!(deferred_acceptance(&inst), Err(EngineError::HasTies));
        assert_eq!(enumerate_stable(&inst, DEFAULT_LIMIT), Err(EngineError::HasTies));
    }

    #[test]
    fn single_pair_enumeration() {
        let inst = Instance::from_strict_lists(vec![1], vec![vec![0]], vec![vec![0]]).unwrap();
        let all = enumerate_stable(&inst, DEFAULT_LIMIT).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].pairs(), vec![(0, 0)]);
    }

    #[test]
    fn head_tie_gives_two_weakly_stable_matchings() {
        let inst = Instance::new(
            vec![1, 1],
            vec![PreferenceList::from_tiers(vec![vec![0, 1]])],
            vec![PreferenceList::strict([0]), PreferenceList::strict([0])],
        )
        .unwrap();
        let all = enumerate_weakly_stable(&inst, DEFAULT_LIMIT).unwrap();
        let pairs: Vec<_> = all.iter().map(Matching::pairs).collect();
        assert_eq!(pairs, vec![vec![(0, 0)], vec![(0, 1)]]);
    }

    #[test]
    fn limit_is_enforced() {
        let inst = Instance::from_strict_lists(
            vec![1, 1],
            vec![vec![0, 1], vec![0, 1]],
            vec![vec![0, 1], vec![0, 1]],
        )
        .unwrap();
        assert_eq!(enumerate_stable(&inst, 2), Err(EngineError::LimitExceeded { limit: 2 }));
    }

    #[test]
    fn two_stable_matchings_in_a_cycle() {
        // r0: h0 h1, r1: h1 h0; h0: r1 r0, h1: r0 r1
        let inst = Instance::from_strict_lists(
            vec![1, 1],
            vec![vec![0, 1], vec![1, 0]],
            vec![vec![1, 0], vec![0, 1]],
        )
        .unwrap();
        let all = enumerate_stable(&inst, DEFAULT_LIMIT).unwrap();
        assert_eq!(all.len(), 2);
        let da = deferred_acceptance(&inst).unwrap();
        assert_eq!(da.pairs(), vec![(0, 0), (1, 1)]);
        assert!(all.iter().all(|m| is_stable(&inst, m).unwrap()));
    }

    #[test]
    fn tie_resolutions_count_and_order() {
        let inst = Instance::new(
            vec![1, 1, 1],
            vec![PreferenceList::from_tiers(vec![vec![0, 1], vec![2]])],
            vec![
                PreferenceList::strict([0]),
                PreferenceList::strict([0]),
                PreferenceList::strict([0]),
            ],
        )
        .unwrap();
        let all: Vec<_> = TieResolutions::new(&inst).collect();
        assert_eq!(all, vec![vec![0], vec![1]]);
        let a = break_ties(&inst, &all[0]);
        let b = break_ties(&inst, &all[1]);
        assert_eq!(a.resident_list(0).agents().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(b.resident_list(0).agents().collect::<Vec<_>>(), vec![1, 0, 2]);
        assert!(!a.has_ties());
    }

    #[test]
    fn strict_instance_is_unchanged_by_tie_breaking() {
        let inst = Instance::from_strict_lists(vec![1], vec![vec![0]], vec![vec![0]]).unwrap();
        assert_eq!(TieResolutions::new(&inst).count(), 1);
        assert_eq!(break_ties(&inst, &[]), inst);
    }
}
