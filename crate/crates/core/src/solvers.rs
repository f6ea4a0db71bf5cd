//! Exact capacity-variation solvers by exhaustive allocation search.
//!
//! Every allocation vector `t` in the search space is evaluated with deferred
//! acceptance on the modified capacities. On strict instances that gives the
//! resident-optimal matching, which has the minimum average rank among stable
//! matchings, and every stable matching has the same cardinality, so one DA
//! run per allocation answers both objectives.
//!
//! Candidates are compared by objective, then by seat list: the sorted
//! multiset of hospital indices receiving (or losing) seats, compared
//! lexicographically with a proper prefix first. With one seat this picks
//! the lowest hospital index.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::engines::{da_with_capacities, enumerate_weakly_stable, EngineError, DEFAULT_LIMIT};
use crate::instance::{is_normalized, CapacityDelta, Direction, Instance, Matching, PartitionBudgets, PartitionError};
use crate::stability::avg_rank_raw;

/// Default cap on the number of allocation vectors a solver will evaluate.
pub const DEFAULT_GUARD: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    MinAvgExpand,
    MinAvgReduce,
    MinAvgExpandPart,
    MinAvgReducePart,
    MaxCardExpandPart,
    MaxCardReducePart,
    SingleExpand,
    MinWSmt,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::MinAvgExpand,
        ProblemKind::MinAvgReduce,
        ProblemKind::MinAvgExpandPart,
        ProblemKind::MinAvgReducePart,
        ProblemKind::MaxCardExpandPart,
        ProblemKind::MaxCardReducePart,
        ProblemKind::SingleExpand,
        ProblemKind::MinWSmt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::MinAvgExpand => "min-avg-expand",
            ProblemKind::MinAvgReduce => "min-avg-reduce",
            ProblemKind::MinAvgExpandPart => "min-avg-expand-part",
            ProblemKind::MinAvgReducePart => "min-avg-reduce-part",
            ProblemKind::MaxCardExpandPart => "max-card-expand-part",
            ProblemKind::MaxCardReducePart => "max-card-reduce-part",
            ProblemKind::SingleExpand => "single-expand",
            ProblemKind::MinWSmt => "min-w-smt",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            ProblemKind::MinAvgReduce | ProblemKind::MinAvgReducePart | ProblemKind::MaxCardReducePart => {
                Direction::Reduce
            }
            _ => Direction::Expand,
        }
    }

    pub fn objective(self) -> Objective {
        match self {
            ProblemKind::MaxCardExpandPart | ProblemKind::MaxCardReducePart => Objective::MaxCardinality,
            _ => Objective::MinAvgRank,
        }
    }

    pub fn uses_partition(self) -> bool {
        matches!(
            self,
            ProblemKind::MinAvgExpandPart
                | ProblemKind::MinAvgReducePart
                | ProblemKind::MaxCardExpandPart
                | ProblemKind::MaxCardReducePart
        )
    }

    /// Search mode used when the caller does not choose one.
    pub fn default_mode(self) -> SearchMode {
        match self.objective() {
            Objective::MaxCardinality => SearchMode::Exhaustive,
            Objective::MinAvgRank => SearchMode::Exact,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown problem kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    MinAvgRank,
    MaxCardinality,
}

/// Exact: each part spends exactly its budget. Exhaustive: expansion spends
/// at most the budget, reduction removes at least the budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Budget {
    Global(u32),
    Parts(PartitionBudgets),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub budget: Budget,
    pub target: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub guard: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub mode: Option<SearchMode>,
    /// Node limit for enumeration-based solvers.
    pub limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            guard: DEFAULT_GUARD,
            workers: None,
            mode: None,
            limit: DEFAULT_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub delta: CapacityDelta,
    pub matching: Matching,
    pub objective: u64,
    /// `Some` when a target was supplied: objective ≤ K for average rank,
    /// objective ≥ K for cardinality.
    pub meets_target: Option<bool>,
}

impl SolveResult {
    fn with_target(mut self, objective: Objective, target: Option<u64>) -> Self {
        self.meets_target = target.map(|k| match objective {
            Objective::MinAvgRank => self.objective <= k,
            Objective::MaxCardinality => self.objective >= k,
        });
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("instance has ties; this solver needs strict preference lists")]
    HasTies,
    #[error("instance is not normalized; add a catch-all hospital first")]
    NotNormalized,
    #[error("instance has incomplete lists")]
    Incomplete,
    #[error("total capacity {capacity} is below the {residents} residents")]
    CapacityShortfall { capacity: u64, residents: usize },
    #[error("removing {budget} seats leaves fewer than {residents} seats (total {capacity})")]
    InfeasibleBudget { budget: u64, capacity: u64, residents: usize },
    #[error("search space has {count} allocations, above the guard of {guard}")]
    GuardExceeded { count: u128, guard: u64 },
    #[error("invalid partition: {0}")]
    Partition(#[from] PartitionError),
    #[error("hospital h{0} has capacity other than 1")]
    NonUnitCapacity(usize),
    #[error("{0} needs a {1} budget")]
    BudgetKind(ProblemKind, &'static str),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("could not start worker pool: {0}")]
    Workers(String),
}

/// Feasible seat counts for one part: each listed hospital takes a value in
/// `0..=upper[k]` and the part total lies in `lo..=hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Group {
    pub hospitals: Vec<usize>,
    pub upper: Vec<u32>,
    pub lo: u64,
    pub hi: u64,
}

impl Group {
    pub fn expand(hospitals: Vec<usize>, lo: u64, hi: u64) -> Self {
        let upper = vec![hi.min(u32::MAX as u64) as u32; hospitals.len()];
        Group { hospitals, upper, lo, hi }
    }

    pub fn reduce(hospitals: Vec<usize>, capacities: &[u32], lo: u64, hi: u64) -> Self {
        let upper = hospitals.iter().map(|&j| capacities[j]).collect();
        Group { hospitals, upper, lo, hi }
    }

    /// Number of vectors in the group, saturating.
    fn count(&self) -> u128 {
        if self.lo > self.hi {
            return 0;
        }
        let hi = self.hi as usize;
        let mut ways = vec![0u128; hi + 1];
        ways[0] = 1;
        for &u in &self.upper {
            let u = (u as usize).min(hi);
            // prefix sums turn the bounded convolution into O(hi)
            let mut prefix = vec![0u128; hi + 2];
            for s in 0..=hi {
                prefix[s + 1] = prefix[s].saturating_add(ways[s]);
            }
            for s in 0..=hi {
                let from = s.saturating_sub(u);
                ways[s] = prefix[s + 1] - prefix[from];
            }
        }
        ways[(self.lo as usize).min(hi + 1)..]
            .iter()
            .fold(0u128, |a, &w| a.saturating_add(w))
    }
}

/// Size of the product search space, saturating.
pub(crate) fn count_allocations(groups: &[Group]) -> u128 {
    groups.iter().fold(1u128, |a, g| a.saturating_mul(g.count()))
}

/// Visits every allocation vector (indexed by hospital) in the product of
/// the groups.
pub(crate) fn for_each_allocation<F: FnMut(&[u32])>(groups: &[Group], num_hospitals: usize, mut visit: F) {
    struct Slot {
        hospital: usize,
        upper: u32,
        group: usize,
        room_after: u64,
    }
    let mut slots = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        let n = group.hospitals.len();
        for k in 0..n {
            let room_after = group.upper[k + 1..].iter().map(|&u| u as u64).sum();
            slots.push(Slot {
                hospital: group.hospitals[k],
                upper: group.upper[k],
                group: g,
                room_after,
            });
        }
    }
    if groups.iter().any(|g| g.hospitals.is_empty() && g.lo > 0) || groups.iter().any(|g| g.lo > g.hi) {
        return;
    }

    fn rec<F: FnMut(&[u32])>(
        p: usize,
        slots: &[Slot],
        groups: &[Group],
        sums: &mut [u64],
        t: &mut [u32],
        visit: &mut F,
    ) {
        let Some(slot) = slots.get(p) else {
            visit(t);
            return;
        };
        let g = &groups[slot.group];
        let sum = sums[slot.group];
        let max = (slot.upper as u64).min(g.hi - sum);
        let min = g.lo.saturating_sub(sum + slot.room_after);
        if min > max {
            return;
        }
        for x in min..=max {
            t[slot.hospital] = x as u32;
            sums[slot.group] = sum + x;
            rec(p + 1, slots, groups, sums, t, visit);
        }
        t[slot.hospital] = 0;
        sums[slot.group] = sum;
    }

    let mut sums = vec![0u64; groups.len()];
    let mut t = vec![0u32; num_hospitals];
    rec(0, &slots, groups, &mut sums, &mut t, &mut visit);
}

/// Sorted multiset of hospitals receiving seats.
pub(crate) fn seat_list(t: &[u32]) -> Vec<usize> {
    t.iter()
        .enumerate()
        .flat_map(|(j, &k)| std::iter::repeat_n(j, k as usize))
        .collect()
}

pub(crate) fn seat_order(a: &[u32], b: &[u32]) -> Ordering {
    seat_list(a).cmp(&seat_list(b))
}

pub(crate) fn with_pool<R: Send>(workers: Option<usize>, job: impl FnOnce() -> R + Send) -> Result<R, SolveError> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| SolveError::Workers(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

const BATCH: usize = 2048;

/// Evaluates every allocation in parallel and keeps the one with the
/// smallest key, ties broken by seat list. `eval` returns `None` to skip an
/// allocation.
pub(crate) fn best_allocation<K, T, E>(
    groups: &[Group],
    num_hospitals: usize,
    guard: u64,
    workers: Option<usize>,
    eval: E,
) -> Result<Option<(Vec<u32>, K, T)>, SolveError>
where
    K: Ord + Send,
    T: Send,
    E: Fn(&[u32]) -> Result<Option<(K, T)>, SolveError> + Sync,
{
    let count = count_allocations(groups);
    if count > guard as u128 {
        return Err(SolveError::GuardExceeded { count, guard });
    }
    type Cand<K, T> = (Vec<u32>, K, T);
    fn better<K: Ord, T>(a: Cand<K, T>, b: Cand<K, T>) -> Cand<K, T> {
        match a.1.cmp(&b.1).then_with(|| seat_order(&a.0, &b.0)) {
            Ordering::Greater => b,
            _ => a,
        }
    }
    fn merge<K: Ord, T>(
        a: Result<Option<Cand<K, T>>, SolveError>,
        b: Result<Option<Cand<K, T>>, SolveError>,
    ) -> Result<Option<Cand<K, T>>, SolveError> {
        Ok(match (a?, b?) {
            (Some(x), Some(y)) => Some(better(x, y)),
            (x, y) => x.or(y),
        })
    }

    with_pool(workers, || {
        let run = |batch: &[Vec<u32>]| -> Result<Option<Cand<K, T>>, SolveError> {
            batch
                .par_iter()
                .map(|t| Ok(eval(t)?.map(|(k, v)| (t.clone(), k, v))))
                .reduce(|| Ok(None), merge)
        };
        let mut best: Result<Option<Cand<K, T>>, SolveError> = Ok(None);
        let mut batch = Vec::with_capacity(BATCH);
        for_each_allocation(groups, num_hospitals, |t| {
            batch.push(t.to_vec());
            if batch.len() == BATCH && best.is_ok() {
                best = merge(std::mem::replace(&mut best, Ok(None)), run(&batch));
                batch.clear();
            }
        });
        if !batch.is_empty() {
            best = merge(best, run(&batch));
        }
        best
    })?
}

fn require_strict(inst: &Instance) -> Result<(), SolveError> {
    if inst.has_ties() {
        Err(SolveError::HasTies)
    } else {
        Ok(())
    }
}

fn require_min_avg(inst: &Instance) -> Result<(), SolveError> {
    require_strict(inst)?;
    if !is_normalized(inst) {
        return Err(SolveError::NotNormalized);
    }
    Ok(())
}

fn delta_of(direction: Direction, t: Vec<u32>, budget: u64) -> CapacityDelta {
    CapacityDelta {
        direction,
        amounts: t,
        budget: budget.min(u32::MAX as u64) as u32,
    }
}

fn run_search(
    inst: &Instance,
    groups: &[Group],
    direction: Direction,
    objective: Objective,
    budget: u64,
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    let caps = inst.capacities();
    let nr = inst.num_residents() as u64;
    let eval = |t: &[u32]| -> Result<Option<(u64, Matching)>, SolveError> {
        let modified: Vec<u32> = caps
            .iter()
            .zip(t)
            .map(|(&c, &x)| match direction {
                Direction::Expand => c + x,
                Direction::Reduce => c - x,
            })
            .collect();
        if objective == Objective::MinAvgRank && modified.iter().map(|&c| c as u64).sum::<u64>() < nr {
            return Ok(None);
        }
        let m = da_with_capacities(inst, &modified);
        let value = match objective {
            Objective::MinAvgRank => avg_rank_raw(inst, m.assignment()).expect("DA pairs are ranked"),
            Objective::MaxCardinality => m.len() as u64,
        };
        let key = match objective {
            Objective::MinAvgRank => value,
            Objective::MaxCardinality => u64::MAX - value,
        };
        Ok(Some((key, m)))
    };
    let found = best_allocation(groups, inst.num_hospitals(), config.guard, config.workers, eval)?;
    let (t, key, matching) = found.ok_or(SolveError::InfeasibleBudget {
        budget,
        capacity: inst.total_capacity(),
        residents: inst.num_residents(),
    })?;
    let value = match objective {
        Objective::MinAvgRank => key,
        Objective::MaxCardinality => u64::MAX - key,
    };
    Ok(SolveResult {
        delta: delta_of(direction, t, budget),
        matching,
        objective: value,
        meets_target: None,
    })
}

/// Deferred acceptance with one extra seat at each hospital in turn.
pub fn solve_expand_single(inst: &Instance) -> Result<SolveResult, SolveError> {
    require_strict(inst)?;
    if inst.total_capacity() < inst.num_residents() as u64 {
        return Err(SolveError::CapacityShortfall {
            capacity: inst.total_capacity(),
            residents: inst.num_residents(),
        });
    }
    let nh = inst.num_hospitals();
    let mut best: Option<SolveResult> = None;
    for j in 0..nh {
        let mut caps = inst.capacities().to_vec();
        caps[j] += 1;
        let m = da_with_capacities(inst, &caps);
        let value = avg_rank_raw(inst, m.assignment()).expect("DA pairs are ranked");
        if best.as_ref().is_none_or(|b| value < b.objective) {
            let mut t = vec![0; nh];
            t[j] = 1;
            best = Some(SolveResult {
                delta: delta_of(Direction::Expand, t, 1),
                matching: m,
                objective: value,
                meets_target: None,
            });
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            let m = da_with_capacities(inst, inst.capacities());
            Ok(SolveResult {
                objective: avg_rank_raw(inst, m.assignment()).expect("DA pairs are ranked"),
                delta: CapacityDelta::zero(Direction::Expand, 0),
                matching: m,
                meets_target: None,
            })
        }
    }
}

pub fn solve_min_avg_expand(inst: &Instance, budget: u32, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    require_min_avg(inst)?;
    let b = budget as u64;
    let lo = match config.mode.unwrap_or(SearchMode::Exact) {
        SearchMode::Exact => b,
        SearchMode::Exhaustive => 0,
    };
    let groups = [Group::expand((0..inst.num_hospitals()).collect(), lo, b)];
    run_search(inst, &groups, Direction::Expand, Objective::MinAvgRank, b, config)
}

pub fn solve_min_avg_reduce(inst: &Instance, budget: u32, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    require_min_avg(inst)?;
    let b = budget as u64;
    let total = inst.total_capacity();
    let nr = inst.num_residents();
    if total < b + nr as u64 {
        return Err(SolveError::InfeasibleBudget {
            budget: b,
            capacity: total,
            residents: nr,
        });
    }
    let hi = match config.mode.unwrap_or(SearchMode::Exact) {
        SearchMode::Exact => b,
        SearchMode::Exhaustive => total - nr as u64,
    };
    let groups = [Group::reduce((0..inst.num_hospitals()).collect(), inst.capacities(), b, hi)];
    run_search(inst, &groups, Direction::Reduce, Objective::MinAvgRank, b, config)
}

/// Problems over a partition of the hospitals with one budget per part.
pub fn solve_partition(
    inst: &Instance,
    parts: &PartitionBudgets,
    kind: ProblemKind,
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    if !kind.uses_partition() {
        return Err(SolveError::BudgetKind(kind, "global"));
    }
    parts.validate(inst.num_hospitals())?;
    let objective = kind.objective();
    match objective {
        Objective::MinAvgRank => require_min_avg(inst)?,
        Objective::MaxCardinality => require_strict(inst)?,
    }
    let direction = kind.direction();
    let mode = config.mode.unwrap_or(kind.default_mode());
    let caps = inst.capacities();
    let groups: Vec<Group> = parts
        .parts
        .iter()
        .zip(&parts.budgets)
        .map(|(hs, &b)| {
            let b = b as u64;
            match (direction, mode) {
                (Direction::Expand, SearchMode::Exact) => Group::expand(hs.clone(), b, b),
                (Direction::Expand, SearchMode::Exhaustive) => Group::expand(hs.clone(), 0, b),
                (Direction::Reduce, SearchMode::Exact) => Group::reduce(hs.clone(), caps, b, b),
                (Direction::Reduce, SearchMode::Exhaustive) => {
                    let room = hs.iter().map(|&j| caps[j] as u64).sum();
                    Group::reduce(hs.clone(), caps, b, room)
                }
            }
        })
        .collect();
    run_search(inst, &groups, direction, objective, parts.total_budget(), config)
}

/// Hospital with the most first-place votes; lowest index on ties.
pub fn heuristic_majority(inst: &Instance) -> usize {
    let mut votes = vec![0usize; inst.num_hospitals()];
    for list in inst.resident_prefs() {
        if let Some(first) = list.tiers().first() {
            for &j in first {
                votes[j] += 1;
            }
        }
    }
    argbest(&votes, |a, b| a > b)
}

/// Hospital with the smallest total rank over all residents; an unlisted
/// hospital counts as rank `|H| + 1`. Lowest index on ties.
pub fn heuristic_borda(inst: &Instance) -> usize {
    let nh = inst.num_hospitals();
    let scores: Vec<u64> = (0..nh)
        .map(|j| {
            (0..inst.num_residents())
                .map(|i| inst.resident_rank(i, j).value().unwrap_or(nh as u32 + 1) as u64)
                .sum()
        })
        .collect();
    argbest(&scores, |a, b| a < b)
}

fn argbest<T: Copy>(values: &[T], better: impl Fn(T, T) -> bool) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = j;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heuristic {
    Majority,
    Borda,
}

/// Adds one seat to the hospital the heuristic picks and runs DA.
pub fn solve_with_heuristic(inst: &Instance, heuristic: Heuristic) -> Result<SolveResult, SolveError> {
    require_strict(inst)?;
    let nh = inst.num_hospitals();
    let mut t = vec![0; nh];
    if nh > 0 {
        let j = match heuristic {
            Heuristic::Majority => heuristic_majority(inst),
            Heuristic::Borda => heuristic_borda(inst),
        };
        t[j] = 1;
    }
    let delta = delta_of(Direction::Expand, t, 1);
    let m = da_with_capacities(inst, &delta.applied_to(inst.capacities()));
    Ok(SolveResult {
        objective: avg_rank_raw(inst, m.assignment()).expect("DA pairs are ranked"),
        delta,
        matching: m,
        meets_target: None,
    })
}

/// Weakly stable matching of minimum average rank on a unit-capacity
/// instance, by enumeration. Equal objectives resolve to the smallest
/// matching in canonical order.
pub fn solve_min_w_smt(inst: &Instance, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    if let Some(j) = inst.capacities().iter().position(|&c| c != 1) {
        return Err(SolveError::NonUnitCapacity(j));
    }
    let all = enumerate_weakly_stable(inst, config.limit)?;
    let best = all
        .into_iter()
        .map(|m| (avg_rank_raw(inst, m.assignment()).expect("matched pairs are ranked"), m))
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("a weakly stable matching always exists");
    Ok(SolveResult {
        delta: CapacityDelta::zero(Direction::Expand, inst.num_hospitals()),
        matching: best.1,
        objective: best.0,
        meets_target: None,
    })
}

/// Dispatches on the problem kind and attaches the decision answer.
pub fn solve(inst: &Instance, spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let kind = spec.kind;
    let result = match (kind, &spec.budget) {
        (ProblemKind::SingleExpand, _) => solve_expand_single(inst)?,
        (ProblemKind::MinWSmt, _) => solve_min_w_smt(inst, config)?,
        (ProblemKind::MinAvgExpand, Budget::Global(b)) => solve_min_avg_expand(inst, *b, config)?,
        (ProblemKind::MinAvgReduce, Budget::Global(b)) => solve_min_avg_reduce(inst, *b, config)?,
        (ProblemKind::MinAvgExpand | ProblemKind::MinAvgReduce, Budget::Parts(_)) => {
            return Err(SolveError::BudgetKind(kind, "global"))
        }
        (_, Budget::Parts(p)) => solve_partition(inst, p, kind, config)?,
        (_, Budget::Global(_)) => return Err(SolveError::BudgetKind(kind, "partition")),
    };
    Ok(result.with_target(kind.objective(), spec.target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::{deferred_acceptance, enumerate_stable};
    use crate::gen::{builtin_counterexample, generate, CapacityMode, GenSpec, ListLength};
    use crate::instance::{apply_delta, normalize_instance};
    use crate::stability::is_stable;

    fn brute_count(g: &Group, nh: usize) -> u128 {
        let mut n = 0u128;
        for_each_allocation(std::slice::from_ref(g), nh, |_| n += 1);
        n
    }

    #[test]
    fn composition_counts_match_enumeration() {
        let cases = [
            Group::expand(vec![0, 1, 2], 2, 2),
            Group::expand(vec![0, 1, 2, 3], 0, 3),
            Group::reduce(vec![0, 1, 2], &[2, 0, 3], 2, 2),
            Group::reduce(vec![0, 2], &[2, 0, 3], 1, 5),
            Group::expand(vec![], 0, 0),
        ];
        for g in &cases {
            assert_eq!(g.count(), brute_count(g, 4), "{g:?}");
        }
        assert_eq!(Group::expand(vec![0, 1, 2, 3], 2, 2).count(), 10);
    }

    #[test]
    fn allocations_respect_bounds() {
        let g = Group::reduce(vec![1, 2], &[0, 1, 2], 2, 3);
        let mut seen = Vec::new();
        for_each_allocation(&[g], 3, |t| seen.push(t.to_vec()));
        assert_eq!(seen, vec![vec![0, 0, 2], vec![0, 1, 1], vec![0, 1, 2]]);
    }

    #[test]
    fn seat_list_prefers_low_indices() {
        assert_eq!(seat_list(&[2, 0, 1]), vec![0, 0, 2]);
        assert_eq!(seat_order(&[1, 0], &[0, 1]), Ordering::Less);
        assert_eq!(seat_order(&[0, 0], &[1, 0]), Ordering::Less);
    }

    #[test]
    fn counterexample_single_expansion() {
        let inst = builtin_counterexample();
        let r = solve_expand_single(&inst).unwrap();
        assert_eq!(r.delta.amounts, vec![0, 1, 0, 0]);
        assert_eq!(heuristic_majority(&inst), 0);
        assert_eq!(heuristic_borda(&inst), 0);
        let via_budget = solve_min_avg_expand(&inst, 1, &SolverConfig::default()).unwrap();
        assert_eq!(via_budget, r);
    }

    #[test]
    fn budget_zero_is_plain_da() {
        let inst = builtin_counterexample();
        let r = solve_min_avg_expand(&inst, 0, &SolverConfig::default()).unwrap();
        assert_eq!(r.matching, deferred_acceptance(&inst).unwrap());
        assert_eq!(r.objective, 11);
        let r = solve_min_avg_reduce(&inst, 0, &SolverConfig::default()).unwrap();
        assert_eq!(r.objective, 11);
    }

    #[test]
    fn reduction_removes_from_unused_hospital() {
        let inst = Instance::from_strict_lists(vec![2, 2], vec![vec![0, 1], vec![0, 1]], vec![vec![0, 1], vec![0, 1]])
            .unwrap();
        let r = solve_min_avg_reduce(&inst, 2, &SolverConfig::default()).unwrap();
        assert_eq!(r.delta.amounts, vec![0, 2]);
        assert_eq!(r.objective, 2);
    }

    #[test]
    fn reduction_budget_must_leave_room() {
        let inst = Instance::from_strict_lists(vec![1, 1], vec![vec![0, 1], vec![1, 0]], vec![vec![0, 1], vec![0, 1]])
            .unwrap();
        assert!(matches!(
            solve_min_avg_reduce(&inst, 1, &SolverConfig::default()),
            Err(SolveError::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn guard_is_enforced() {
        let inst = normalize_instance(&generate(&GenSpec::strict(4, 6, 3)).unwrap());
        let config = SolverConfig {
            guard: 10,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_min_avg_expand(&inst, 3, &config),
            Err(SolveError::GuardExceeded { count: 56, guard: 10 })
        ));
    }

    #[test]
    fn min_avg_needs_normalized_strict_input() {
        let short = Instance::from_strict_lists(vec![1], vec![vec![0], vec![0]], vec![vec![0, 1]]).unwrap();
        assert_eq!(
            solve_min_avg_expand(&short, 1, &SolverConfig::default()),
            Err(SolveError::NotNormalized)
        );
    }

    #[test]
    fn single_part_equals_global() {
        for seed in 0..20 {
            let spec = GenSpec {
                capacity_mode: CapacityMode::Uniform { lo: 1, hi: 2 },
                ..GenSpec::strict(5, 4, seed)
            };
            let inst = normalize_instance(&generate(&spec).unwrap());
            let cfg = SolverConfig::default();
            let a = solve_min_avg_expand(&inst, 2, &cfg).unwrap();
            let nh = inst.num_hospitals();
            let b = solve_partition(&inst, &PartitionBudgets::single(nh, 2), ProblemKind::MinAvgExpandPart, &cfg)
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn results_are_stable_and_independent_of_workers() {
        for seed in 0..10 {
            let spec = GenSpec {
                capacity_mode: CapacityMode::Uniform { lo: 0, hi: 2 },
                list_length: ListLength::Prefix(3),
                ..GenSpec::strict(5, 5, seed)
            };
            let inst = normalize_instance(&generate(&spec).unwrap());
            let one = SolverConfig {
                workers: Some(1),
                ..SolverConfig::default()
            };
            let four = SolverConfig {
                workers: Some(4),
                ..SolverConfig::default()
            };
            let a = solve_min_avg_expand(&inst, 2, &one).unwrap();
            assert_eq!(a, solve_min_avg_expand(&inst, 2, &four).unwrap());
            let modified = apply_delta(&inst, &a.delta).unwrap();
            assert!(is_stable(&modified, &a.matching).unwrap());
        }
    }

    #[test]
    fn max_card_partition_on_incomplete_lists() {
        // r0 and r1 both only accept h0, which has no seat; one seat in part {h0, h1}
        let inst = Instance::from_strict_lists(vec![0, 0], vec![vec![0], vec![0, 1]], vec![vec![0, 1], vec![1]])
            .unwrap();
        let parts = PartitionBudgets {
            parts: vec![vec![0, 1]],
            budgets: vec![1],
        };
        let r = solve_partition(&inst, &parts, ProblemKind::MaxCardExpandPart, &SolverConfig::default()).unwrap();
        assert_eq!(r.objective, 1);
        assert_eq!(r.delta.amounts, vec![1, 0]);
        let spec = ProblemSpec {
            kind: ProblemKind::MaxCardExpandPart,
            budget: Budget::Parts(parts),
            target: Some(2),
        };
        assert_eq!(solve(&inst, &spec, &SolverConfig::default()).unwrap().meets_target, Some(false));
    }

    #[test]
    fn min_w_smt_without_ties_is_da() {
        for seed in 0..20 {
            let inst = generate(&GenSpec::strict(4, 4, seed)).unwrap();
            let r = solve_min_w_smt(&inst, &SolverConfig::default()).unwrap();
            let da = deferred_acceptance(&inst).unwrap();
            assert_eq!(r.objective, avg_rank_raw(&inst, da.assignment()).unwrap());
            assert!(enumerate_stable(&inst, DEFAULT_LIMIT).unwrap().contains(&r.matching));
        }
    }

    #[test]
    fn min_w_smt_rejects_other_capacities() {
        let inst = Instance::from_strict_lists(vec![2], vec![vec![0]], vec![vec![0]]).unwrap();
        assert_eq!(
            solve_min_w_smt(&inst, &SolverConfig::default()),
            Err(SolveError::NonUnitCapacity(0))
        );
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ProblemKind::ALL {
            assert_eq!(k.name().parse::<ProblemKind>().unwrap(), k);
        }
    }
}
