//! Instances, tiered preference lists, matchings, capacity deltas and
//! hospital partitions.
//!
//! Agents are 0-based contiguous indices per side. A preference list is a
//! sequence of tiers; a tier with more than one member is a tie. Members of
//! a tie are kept in ascending index order, so "first in the tie" always
//! means the lowest index.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Resident,
    Hospital,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Resident => Side::Hospital,
            Side::Hospital => Side::Resident,
        }
    }
}

/// An agent on one side of the market, printed as `r<i>` or `h<j>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId {
    pub side: Side,
    pub index: usize,
}

impl AgentId {
    pub fn resident(index: usize) -> Self {
        AgentId { side: Side::Resident, index }
    }

    pub fn hospital(index: usize) -> Self {
        AgentId { side: Side::Hospital, index }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Resident => write!(f, "r{}", self.index),
            Side::Hospital => write!(f, "h{}", self.index),
        }
    }
}

/// Position of an agent in a preference list. `Ranked(1)` is the most
/// preferred; every member of a tier shares the rank of the tier's first
/// slot. `Unranked` sorts after every ranked value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rank {
    Ranked(u32),
    Unranked,
}

impl Rank {
    pub fn value(self) -> Option<u32> {
        match self {
            Rank::Ranked(r) => Some(r),
            Rank::Unranked => None,
        }
    }

    pub fn is_ranked(self) -> bool {
        matches!(self, Rank::Ranked(_))
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Ranked(r) => write!(f, "{r}"),
            Rank::Unranked => f.write_str("-"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PreferenceList {
    tiers: Vec<Vec<usize>>,
}

impl PreferenceList {
    /// A list without ties.
    pub fn strict<I: IntoIterator<Item = usize>>(order: I) -> Self {
        PreferenceList {
            tiers: order.into_iter().map(|a| vec![a]).collect(),
        }
    }

    /// Builds a list from tiers. Members of each tier are sorted ascending;
    /// tier order is kept as given.
    pub fn from_tiers(tiers: Vec<Vec<usize>>) -> Self {
        let tiers = tiers
            .into_iter()
            .map(|mut t| {
                t.sort_unstable();
                t
            })
            .collect();
        PreferenceList { tiers }
    }

    pub fn tiers(&self) -> &[Vec<usize>] {
        &self.tiers
    }

    /// Listed agents in preference order, ties flattened.
    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.tiers.iter().flatten().copied()
    }

    /// Number of listed agents.
    pub fn len(&self) -> usize {
        self.tiers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.iter().all(Vec::is_empty)
    }

    pub fn contains(&self, who: usize) -> bool {
        self.agents().any(|a| a == who)
    }

    pub fn has_ties(&self) -> bool {
        self.tiers.iter().any(|t| t.len() > 1)
    }

    /// 1 + number of agents in strictly better tiers, or `Unranked`.
    pub fn rank_of(&self, who: usize) -> Rank {
        let mut before = 0u32;
        for tier in &self.tiers {
            if tier.contains(&who) {
                return Rank::Ranked(before + 1);
            }
            before += tier.len() as u32;
        }
        Rank::Unranked
    }

    /// 1-based position of `who` in the flattened list. Inside a tie the
    /// lower index comes first.
    pub fn slot_of(&self, who: usize) -> Option<usize> {
        self.agents().position(|a| a == who).map(|p| p + 1)
    }

    pub fn push_tier(&mut self, mut tier: Vec<usize>) {
        tier.sort_unstable();
        self.tiers.push(tier);
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("{lists} hospital preference lists for {capacities} capacities")]
    Shape { lists: usize, capacities: usize },
}

/// A hospitals/residents instance. Ranks are cached in dense tables
/// (`0` = unranked) so that stability checks are array lookups.
#[derive(Clone, Debug)]
pub struct Instance {
    capacities: Vec<u32>,
    resident_prefs: Vec<PreferenceList>,
    hospital_prefs: Vec<PreferenceList>,
    resident_ranks: Vec<Vec<u32>>,
    hospital_ranks: Vec<Vec<u32>>,
    has_ties: bool,
    is_complete: bool,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.capacities == other.capacities
            && self.resident_prefs == other.resident_prefs
            && self.hospital_prefs == other.hospital_prefs
    }
}

impl Eq for Instance {}

fn rank_table(lists: &[PreferenceList], other_side: usize) -> Vec<Vec<u32>> {
    lists
        .iter()
        .map(|list| {
            let mut row = vec![0u32; other_side];
            let mut before = 0u32;
            for tier in list.tiers() {
                for &a in tier {
                    if a < other_side && row[a] == 0 {
                        row[a] = before + 1;
                    }
                }
                before += tier.len() as u32;
            }
            row
        })
        .collect()
}

impl Instance {
    /// Builds an instance. Out-of-range or duplicated list entries are
    /// tolerated here and reported by [`validate_instance`].
    pub fn new(
        capacities: Vec<u32>,
        resident_prefs: Vec<PreferenceList>,
        hospital_prefs: Vec<PreferenceList>,
    ) -> Result<Self, InstanceError> {
        if hospital_prefs.len() != capacities.len() {
            return Err(InstanceError::Shape {
                lists: hospital_prefs.len(),
                capacities: capacities.len(),
            });
        }
        let nr = resident_prefs.len();
        let nh = capacities.len();
        let resident_ranks = rank_table(&resident_prefs, nh);
        let hospital_ranks = rank_table(&hospital_prefs, nr);
        let has_ties = resident_prefs.iter().chain(&hospital_prefs).any(PreferenceList::has_ties);
        let full = |ranks: &Vec<Vec<u32>>, lists: &[PreferenceList], other: usize| {
            ranks
                .iter()
                .zip(lists)
                .all(|(row, l)| l.len() == other && row.iter().all(|&r| r > 0))
        };
        let is_complete =
            full(&resident_ranks, &resident_prefs, nh) && full(&hospital_ranks, &hospital_prefs, nr);
        Ok(Instance {
            capacities,
            resident_prefs,
            hospital_prefs,
            resident_ranks,
            hospital_ranks,
            has_ties,
            is_complete,
        })
    }

    /// Convenience constructor for strict lists given as index vectors.
    pub fn from_strict_lists(
        capacities: Vec<u32>,
        resident_lists: Vec<Vec<usize>>,
        hospital_lists: Vec<Vec<usize>>,
    ) -> Result<Self, InstanceError> {
        Instance::new(
            capacities,
            resident_lists.into_iter().map(PreferenceList::strict).collect(),
            hospital_lists.into_iter().map(PreferenceList::strict).collect(),
        )
    }

    pub fn num_residents(&self) -> usize {
        self.resident_prefs.len()
    }

    pub fn num_hospitals(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn capacity(&self, hospital: usize) -> u32 {
        self.capacities[hospital]
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacities.iter().map(|&c| c as u64).sum()
    }

    pub fn resident_prefs(&self) -> &[PreferenceList] {
        &self.resident_prefs
    }

    pub fn hospital_prefs(&self) -> &[PreferenceList] {
        &self.hospital_prefs
    }

    pub fn resident_list(&self, resident: usize) -> &PreferenceList {
        &self.resident_prefs[resident]
    }

    pub fn hospital_list(&self, hospital: usize) -> &PreferenceList {
        &self.hospital_prefs[hospital]
    }

    pub fn has_ties(&self) -> bool {
        self.has_ties
    }

    pub fn is_complete(&self) -> bool {
        self.is_complete
    }

    /// Rank of `hospital` in the list of `resident`.
    pub fn resident_rank(&self, resident: usize, hospital: usize) -> Rank {
        match self.resident_ranks[resident][hospital] {
            0 => Rank::Unranked,
            r => Rank::Ranked(r),
        }
    }

    /// Rank of `resident` in the list of `hospital`.
    pub fn hospital_rank(&self, hospital: usize, resident: usize) -> Rank {
        match self.hospital_ranks[hospital][resident] {
            0 => Rank::Unranked,
            r => Rank::Ranked(r),
        }
    }

    /// Raw rank table lookups, `0` meaning unranked.
    pub(crate) fn resident_rank_raw(&self, resident: usize, hospital: usize) -> u32 {
        self.resident_ranks[resident][hospital]
    }

    pub(crate) fn hospital_rank_raw(&self, hospital: usize, resident: usize) -> u32 {
        self.hospital_ranks[hospital][resident]
    }

    /// Both agents list each other.
    pub fn is_acceptable(&self, resident: usize, hospital: usize) -> bool {
        resident < self.num_residents()
            && hospital < self.num_hospitals()
            && self.resident_ranks[resident][hospital] > 0
            && self.hospital_ranks[hospital][resident] > 0
    }

    /// Same preferences, different capacity vector.
    pub fn with_capacities(&self, capacities: Vec<u32>) -> Instance {
        assert_eq!(capacities.len(), self.num_hospitals(), "capacity vector length");
        Instance {
            capacities,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// A list names an agent that does not exist.
    UnknownAgent,
    /// An agent appears more than once in a list.
    DuplicateEntry,
    /// A tier without members.
    EmptyTier,
    /// One side lists the other but not vice versa.
    NotMutual,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::UnknownAgent => "unknown-agent",
            Rule::DuplicateEntry => "duplicate-entry",
            Rule::EmptyTier => "empty-tier",
            Rule::NotMutual => "not-mutual",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub agent: AgentId,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.agent, self.rule, self.detail)
    }
}

/// All invariant violations of `inst`; empty iff the instance is well formed.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let sides = [
        (Side::Resident, inst.resident_prefs(), inst.num_hospitals()),
        (Side::Hospital, inst.hospital_prefs(), inst.num_residents()),
    ];
    for (side, lists, other) in sides {
        for (idx, list) in lists.iter().enumerate() {
            let agent = AgentId { side, index: idx };
            let mut seen = vec![false; other];
            for (t, tier) in list.tiers().iter().enumerate() {
                if tier.is_empty() {
                    out.push(Violation {
                        agent,
                        rule: Rule::EmptyTier,
                        detail: format!("tier {t} is empty"),
                    });
                }
                for &a in tier {
                    let listed = AgentId { side: side.opposite(), index: a };
                    if a >= other {
                        out.push(Violation {
                            agent,
                            rule: Rule::UnknownAgent,
                            detail: format!("lists {listed}"),
                        });
                    } else if seen[a] {
                        out.push(Violation {
                            agent,
                            rule: Rule::DuplicateEntry,
                            detail: format!("lists {listed} more than once"),
                        });
                    } else {
                        seen[a] = true;
                    }
                }
            }
        }
    }
    for i in 0..inst.num_residents() {
        for j in 0..inst.num_hospitals() {
            let r = inst.resident_rank_raw(i, j) > 0;
            let h = inst.hospital_rank_raw(j, i) > 0;
            if r && !h {
                out.push(Violation {
                    agent: AgentId::resident(i),
                    rule: Rule::NotMutual,
                    detail: format!("lists h{j} but h{j} does not list r{i}"),
                });
            } else if h && !r {
                out.push(Violation {
                    agent: AgentId::hospital(j),
                    rule: Rule::NotMutual,
                    detail: format!("lists r{i} but r{i} does not list h{j}"),
                });
            }
        }
    }
    out
}

/// True when every resident is guaranteed a seat in every stable matching:
/// either lists are complete and capacity covers all residents, or the last
/// hospital is a catch-all listed last by everyone with room for everyone.
pub fn is_normalized(inst: &Instance) -> bool {
    let nr = inst.num_residents();
    if inst.is_complete() && inst.total_capacity() >= nr as u64 {
        return true;
    }
    if nr == 0 {
        return true;
    }
    let Some(last) = inst.num_hospitals().checked_sub(1) else {
        return false;
    };
    inst.capacity(last) as usize >= nr
        && inst.hospital_list(last).len() == nr
        && (0..nr).all(|i| inst.hospital_rank_raw(last, i) > 0)
        && inst
            .resident_prefs()
            .iter()
            .all(|l| l.tiers().last().map(|t| t.as_slice()) == Some(&[last][..]))
}

/// Appends a catch-all hospital (capacity |R|, last in every resident list,
/// ranking residents by index) unless the instance already guarantees
/// everyone a seat.
pub fn normalize_instance(inst: &Instance) -> Instance {
    if is_normalized(inst) {
        return inst.clone();
    }
    let nr = inst.num_residents();
    let extra = inst.num_hospitals();
    let mut capacities = inst.capacities().to_vec();
    capacities.push(nr as u32);
    let resident_prefs = inst
        .resident_prefs()
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.push_tier(vec![extra]);
            l
        })
        .collect();
    let mut hospital_prefs = inst.hospital_prefs().to_vec();
    hospital_prefs.push(PreferenceList::strict(0..nr));
    Instance::new(capacities, resident_prefs, hospital_prefs).expect("shape preserved")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("resident r{0} out of range")]
    UnknownResident(usize),
    #[error("hospital h{0} out of range")]
    UnknownHospital(usize),
    #[error("resident r{0} appears in more than one pair")]
    ResidentTwice(usize),
    #[error("hospital h{hospital} holds {holds} residents but has capacity {capacity}")]
    OverCapacity { hospital: usize, holds: usize, capacity: u32 },
    #[error("pair (r{0}, h{1}) is not mutually acceptable")]
    NotAcceptable(usize, usize),
}

/// A set of resident-hospital pairs; each resident holds at most one seat.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    assignment: Vec<Option<usize>>,
    num_hospitals: usize,
}

impl Matching {
    pub fn empty(num_residents: usize, num_hospitals: usize) -> Self {
        Matching {
            assignment: vec![None; num_residents],
            num_hospitals,
        }
    }

    pub fn from_assignment(assignment: Vec<Option<usize>>, num_hospitals: usize) -> Self {
        debug_assert!(assignment.iter().flatten().all(|&j| j < num_hospitals));
        Matching {
            assignment,
            num_hospitals,
        }
    }

    pub fn from_pairs<I>(num_residents: usize, num_hospitals: usize, pairs: I) -> Result<Self, MatchingError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = Matching::empty(num_residents, num_hospitals);
        for (i, j) in pairs {
            if i >= num_residents {
                return Err(MatchingError::UnknownResident(i));
            }
            if j >= num_hospitals {
                return Err(MatchingError::UnknownHospital(j));
            }
            if m.assignment[i].is_some() {
                return Err(MatchingError::ResidentTwice(i));
            }
            m.assignment[i] = Some(j);
        }
        Ok(m)
    }

    pub fn num_residents(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_hospitals(&self) -> usize {
        self.num_hospitals
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn hospital_of(&self, resident: usize) -> Option<usize> {
        self.assignment[resident]
    }

    pub fn residents_of(&self, hospital: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, h)| **h == Some(hospital))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn assign(&mut self, resident: usize, hospital: Option<usize>) {
        self.assignment[resident] = hospital;
    }

    /// Pairs ordered by resident index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.map(|j| (i, j)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.iter().filter(|h| h.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn occupancy(&self) -> Vec<u32> {
        let mut occ = vec![0u32; self.num_hospitals];
        for j in self.assignment.iter().flatten() {
            occ[*j] += 1;
        }
        occ
    }

    /// Capacity and acceptability check against `inst` (and its capacities).
    pub fn check_feasible(&self, inst: &Instance) -> Result<(), MatchingError> {
        self.check_feasible_with(inst, inst.capacities())
    }

    pub fn check_feasible_with(&self, inst: &Instance, capacities: &[u32]) -> Result<(), MatchingError> {
        if self.num_residents() != inst.num_residents() {
            return Err(MatchingError::UnknownResident(self.num_residents().max(inst.num_residents())));
        }
        if self.num_hospitals != inst.num_hospitals() {
            return Err(MatchingError::UnknownHospital(self.num_hospitals.max(inst.num_hospitals())));
        }
        for (i, j) in self.pairs() {
            if !inst.is_acceptable(i, j) {
                return Err(MatchingError::NotAcceptable(i, j));
            }
        }
        for (j, &holds) in self.occupancy().iter().enumerate() {
            if holds > capacities[j] {
                return Err(MatchingError::OverCapacity {
                    hospital: j,
                    holds: holds as usize,
                    capacity: capacities[j],
                });
            }
        }
        Ok(())
    }
}

impl Ord for Matching {
    /// Lexicographic order on the sorted pair list.
    fn cmp(&self, other: &Self) -> Ordering {
        self.pairs()
            .cmp(&other.pairs())
            .then(self.num_hospitals.cmp(&other.num_hospitals))
            .then(self.assignment.len().cmp(&other.assignment.len()))
    }
}

impl PartialOrd for Matching {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Expand,
    Reduce,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Expand => "expand",
            Direction::Reduce => "reduce",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeltaError {
    #[error("delta has {got} entries for {expected} hospitals")]
    Length { got: usize, expected: usize },
    #[error("expansion uses {used} seats, budget is {budget}")]
    OverBudget { used: u64, budget: u32 },
    #[error("reduction removes {used} seats, budget requires at least {budget}")]
    UnderBudget { used: u64, budget: u32 },
    #[error("hospital h{hospital} has capacity {capacity}, cannot remove {remove}")]
    BelowZero { hospital: usize, capacity: u32, remove: u32 },
}

/// A seat change vector `t` with its direction and budget.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CapacityDelta {
    pub direction: Direction,
    pub amounts: Vec<u32>,
    pub budget: u32,
}

impl CapacityDelta {
    pub fn zero(direction: Direction, num_hospitals: usize) -> Self {
        CapacityDelta {
            direction,
            amounts: vec![0; num_hospitals],
            budget: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.amounts.iter().map(|&t| t as u64).sum()
    }

    /// Checks the budget rule of the direction and, for reductions, that
    /// every capacity stays non-negative.
    pub fn check(&self, capacities: &[u32]) -> Result<(), DeltaError> {
        if self.amounts.len() != capacities.len() {
            return Err(DeltaError::Length {
                got: self.amounts.len(),
                expected: capacities.len(),
            });
        }
        match self.direction {
            Direction::Expand => {
                if self.total() > self.budget as u64 {
                    return Err(DeltaError::OverBudget {
                        used: self.total(),
                        budget: self.budget,
                    });
                }
            }
            Direction::Reduce => {
                if self.total() < self.budget as u64 {
                    return Err(DeltaError::UnderBudget {
                        used: self.total(),
                        budget: self.budget,
                    });
                }
                if let Some((j, (&c, &t))) = capacities
                    .iter()
                    .zip(&self.amounts)
                    .enumerate()
                    .find(|(_, (&c, &t))| t > c)
                {
                    return Err(DeltaError::BelowZero {
                        hospital: j,
                        capacity: c,
                        remove: t,
                    });
                }
            }
        }
        Ok(())
    }

    /// Capacity vector after the change; assumes [`CapacityDelta::check`] passed.
    pub fn applied_to(&self, capacities: &[u32]) -> Vec<u32> {
        capacities
            .iter()
            .zip(&self.amounts)
            .map(|(&c, &t)| match self.direction {
                Direction::Expand => c + t,
                Direction::Reduce => c - t,
            })
            .collect()
    }
}

/// The instance with capacities `c + t` (expand) or `c - t` (reduce).
pub fn apply_delta(inst: &Instance, delta: &CapacityDelta) -> Result<Instance, DeltaError> {
    delta.check(inst.capacities())?;
    Ok(inst.with_capacities(delta.applied_to(inst.capacities())))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("{parts} parts but {budgets} budgets")]
    Shape { parts: usize, budgets: usize },
    #[error("hospital h{0} is in more than one part")]
    Overlap(usize),
    #[error("hospital h{0} is in no part")]
    Uncovered(usize),
    #[error("hospital h{0} out of range")]
    UnknownHospital(usize),
}

/// A partition of the hospitals with one seat budget per part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartitionBudgets {
    pub parts: Vec<Vec<usize>>,
    pub budgets: Vec<u32>,
}

impl PartitionBudgets {
    /// One part holding every hospital.
    pub fn single(num_hospitals: usize, budget: u32) -> Self {
        PartitionBudgets {
            parts: vec![(0..num_hospitals).collect()],
            budgets: vec![budget],
        }
    }

    pub fn validate(&self, num_hospitals: usize) -> Result<(), PartitionError> {
        if self.parts.len() != self.budgets.len() {
            return Err(PartitionError::Shape {
                parts: self.parts.len(),
                budgets: self.budgets.len(),
            });
        }
        let mut seen = vec![false; num_hospitals];
        for &j in self.parts.iter().flatten() {
            if j >= num_hospitals {
                return Err(PartitionError::UnknownHospital(j));
            }
            if seen[j] {
                return Err(PartitionError::Overlap(j));
            }
            seen[j] = true;
        }
        match seen.iter().position(|s| !s) {
            Some(j) => Err(PartitionError::Uncovered(j)),
            None => Ok(()),
        }
    }

    pub fn total_budget(&self) -> u64 {
        self.budgets.iter().map(|&b| b as u64).sum()
    }
}
