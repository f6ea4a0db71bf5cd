//! Village gadgets for the expansion and reduction problems.
//!
//! Residents: copies of the strict source residents first, then one block
//! `w_{l,1} .. w_{l,n}, y_l` per tied resident. Hospitals: copies of the
//! source hospitals, then the pools `H0` (n²), `Z` (n³), `X` (nL), then one
//! block `v0_{l,1..n}, v1_{l,1..n}` per village. Unspecified list tails are
//! the remaining agents in ascending index, with `X` last on resident lists.

use crate::engines::{da_with_capacities, enumerate_weakly_stable, for_each_stable};
use crate::instance::{AgentId, CapacityDelta, Direction, Instance, Matching};
use crate::solvers::{best_allocation, count_allocations, Budget, Group, SolverConfig};
use crate::stability::{avg_rank_raw, is_stable};

use super::normal_form::{normal_form_violation, tied_residents};
use super::{complete_list, GadgetError, GadgetOutput, Layout, Role};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VillageLayout {
    pub n: usize,
    /// Tied source residents; village `l` belongs to `tied[l]`.
    pub tied: Vec<usize>,
    /// Untied source residents in the order of their copies.
    pub strict: Vec<usize>,
    pub direction: Direction,
}

impl VillageLayout {
    pub fn villages(&self) -> usize {
        self.tied.len()
    }

    pub fn num_residents(&self) -> usize {
        self.n + self.n * self.villages()
    }

    pub fn num_hospitals(&self) -> usize {
        let n = self.n;
        n + n * n + n * n * n + 3 * n * self.villages()
    }

    pub fn budget(&self) -> u32 {
        (self.n * self.villages()) as u32
    }

    pub fn village_of(&self, source_resident: usize) -> Option<usize> {
        self.tied.iter().position(|&i| i == source_resident)
    }

    pub fn copy_resident(&self, source_resident: usize) -> Option<usize> {
        self.strict.iter().position(|&i| i == source_resident)
    }

    fn village_base(&self, l: usize) -> usize {
        self.strict.len() + l * (self.n + 1)
    }

    /// `w_{l,h}`, `h` in `1..=n`.
    pub fn w(&self, l: usize, h: usize) -> usize {
        self.village_base(l) + h - 1
    }

    pub fn y(&self, l: usize) -> usize {
        self.village_base(l) + self.n
    }

    /// `k`-th member of `H0`, 1-based.
    pub fn h0(&self, k: usize) -> usize {
        self.n + k - 1
    }

    pub fn z(&self, k: usize) -> usize {
        self.n + self.n * self.n + k - 1
    }

    pub fn x(&self, k: usize) -> usize {
        let n = self.n;
        n + n * n + n * n * n + k - 1
    }

    fn vbase(&self, l: usize) -> usize {
        let n = self.n;
        n + n * n + n * n * n + n * self.villages() + 2 * n * l
    }

    pub fn v0(&self, l: usize, h: usize) -> usize {
        self.vbase(l) + h - 1
    }

    pub fn v1(&self, l: usize, h: usize) -> usize {
        self.vbase(l) + self.n + h - 1
    }

    pub fn roles(&self) -> Vec<(AgentId, Role)> {
        let n = self.n;
        let mut out = Vec::new();
        for (k, &i) in self.strict.iter().enumerate() {
            out.push((AgentId::resident(k), Role::Copy(AgentId::resident(i))));
        }
        for (l, &i) in self.tied.iter().enumerate() {
            for h in 1..=n {
                out.push((AgentId::resident(self.w(l, h)), Role::W { resident: i, slot: h }));
            }
            out.push((AgentId::resident(self.y(l)), Role::Y { resident: i }));
        }
        for j in 0..n {
            out.push((AgentId::hospital(j), Role::Copy(AgentId::hospital(j))));
        }
        for k in 1..=n * n {
            out.push((AgentId::hospital(self.h0(k)), Role::H0(k)));
        }
        for k in 1..=n * n * n {
            out.push((AgentId::hospital(self.z(k)), Role::Z(k)));
        }
        for k in 1..=n * self.villages() {
            out.push((AgentId::hospital(self.x(k)), Role::X(k)));
        }
        for (l, &i) in self.tied.iter().enumerate() {
            for h in 1..=n {
                out.push((AgentId::hospital(self.v0(l, h)), Role::V0 { resident: i, slot: h }));
            }
            for h in 1..=n {
                out.push((AgentId::hospital(self.v1(l, h)), Role::V1 { resident: i, slot: h }));
            }
        }
        out
    }
}

/// Length of the `H0` prefix in the list of `w_{l,h}`.
fn h0_prefix(n: usize, h: usize) -> usize {
    match h {
        1 => n - 1,
        2 => n,
        _ => (n - 1) * h,
    }
}

fn build(smt: &Instance, target: u64, direction: Direction) -> Result<GadgetOutput, GadgetError> {
    if let Some(why) = normal_form_violation(smt) {
        return Err(GadgetError::Form(why));
    }
    if !smt.is_complete() {
        return Err(GadgetError::Form("lists must be complete".into()));
    }
    let n = smt.num_residents();
    let tied = tied_residents(smt);
    let strict: Vec<usize> = (0..n).filter(|i| !tied.contains(i)).collect();
    let layout = VillageLayout {
        n,
        tied,
        strict,
        direction,
    };
    let big_l = layout.villages();
    let nr = layout.num_residents();
    let nh = layout.num_hospitals();
    let xs: Vec<usize> = (1..=n * big_l).map(|k| layout.x(k)).collect();
    let zs: Vec<usize> = (1..=n * n * n).map(|k| layout.z(k)).collect();

    let mut rlists = vec![Vec::new(); nr];
    for (k, &i) in layout.strict.iter().enumerate() {
        let source: Vec<usize> = smt.resident_list(i).agents().collect();
        let mut prefix = Vec::new();
        for (b, &j) in source.iter().enumerate() {
            prefix.extend((1..n).map(|q| layout.h0(b * n + q)));
            prefix.push(j);
        }
        prefix.extend(&zs);
        rlists[k] = complete_list(prefix, nh, &xs);
    }
    for (l, &i) in layout.tied.iter().enumerate() {
        let source: Vec<usize> = smt.resident_list(i).agents().collect();
        for h in 1..=n {
            let mut prefix = vec![layout.v1(l, h)];
            prefix.extend((1..=n).filter(|&g| g != h).map(|g| layout.v0(l, g)));
            prefix.extend((1..=h0_prefix(n, h)).map(|k| layout.h0(k)));
            prefix.push(source[h - 1]);
            prefix.extend(&zs);
            rlists[layout.w(l, h)] = complete_list(prefix, nh, &xs);
        }
        let mut prefix = vec![layout.v0(l, 2), layout.v0(l, 1)];
        prefix.extend((3..=n).map(|g| layout.v0(l, g)));
        prefix.extend(&zs);
        rlists[layout.y(l)] = complete_list(prefix, nh, &xs);
    }

    let all_residents: Vec<usize> = (0..nr).collect();
    let mut hlists = vec![all_residents; nh];
    for (j, list) in hlists.iter_mut().enumerate().take(n) {
        let prefix = smt
            .hospital_list(j)
            .agents()
            .map(|i| match layout.village_of(i) {
                Some(l) => layout.w(l, smt.resident_list(i).slot_of(j).expect("complete lists")),
                None => layout.copy_resident(i).expect("untied resident"),
            })
            .collect();
        *list = complete_list(prefix, nr, &[]);
    }
    for l in 0..big_l {
        for h in 1..=n {
            hlists[layout.v1(l, h)] = complete_list(vec![layout.w(l, h)], nr, &[]);
            let mut prefix: Vec<usize> = (1..=n).filter(|&g| g != h).map(|g| layout.w(l, g)).collect();
            prefix.push(layout.y(l));
            hlists[layout.v0(l, h)] = complete_list(prefix, nr, &[]);
        }
    }

    let mut capacities = vec![0u32; nh];
    for c in capacities.iter_mut().take(n) {
        *c = 1;
    }
    for &x in &xs {
        capacities[x] = 1;
    }
    if direction == Direction::Reduce {
        for l in 0..big_l {
            for h in 1..=n {
                capacities[layout.v0(l, h)] = 1;
                capacities[layout.v1(l, h)] = 1;
            }
        }
    }

    let instance = Instance::from_strict_lists(capacities, rlists, hlists).expect("shape by construction");
    Ok(GadgetOutput {
        instance,
        budget: Budget::Global(layout.budget()),
        target: n as u64 * target + 2 * (n * big_l) as u64,
        roles: layout.roles(),
        layout: Layout::Village(layout),
    })
}

/// Gadget whose budget buys seats in the villages.
pub fn build_expansion_gadget(smt: &Instance, target: u64) -> Result<GadgetOutput, GadgetError> {
    build(smt, target, Direction::Expand)
}

/// Same lists; village hospitals start with one seat each and the budget
/// removes seats.
pub fn build_reduction_gadget(smt: &Instance, target: u64) -> Result<GadgetOutput, GadgetError> {
    build(smt, target, Direction::Reduce)
}

fn check_source_matching(smt: &Instance, m: &Matching) -> Result<(), GadgetError> {
    match is_stable(smt, m) {
        Ok(true) => {}
        Ok(false) => return Err(GadgetError::Matching("not weakly stable".into())),
        Err(e) => return Err(GadgetError::Matching(e.to_string())),
    }
    if let Some(i) = (0..smt.num_residents()).find(|&i| m.hospital_of(i).is_none()) {
        return Err(GadgetError::Matching(format!("resident r{i} is unmatched")));
    }
    Ok(())
}

fn lift(
    smt: &Instance,
    m: &Matching,
    layout: &VillageLayout,
    direction: Direction,
) -> Result<(CapacityDelta, Matching), GadgetError> {
    if layout.direction != direction {
        return Err(GadgetError::Matching(format!("layout is for the {} gadget", layout.direction)));
    }
    check_source_matching(smt, m)?;
    let n = layout.n;
    let mut t = vec![0u32; layout.num_hospitals()];
    let mut out = Matching::empty(layout.num_residents(), layout.num_hospitals());
    for (k, &i) in layout.strict.iter().enumerate() {
        out.assign(k, m.hospital_of(i));
    }
    for (l, &i) in layout.tied.iter().enumerate() {
        let j = m.hospital_of(i).expect("complete matching");
        let r = smt.resident_list(i).slot_of(j).expect("acceptable pair");
        out.assign(layout.w(l, r), Some(j));
        out.assign(layout.y(l), Some(layout.v0(l, r)));
        for h in (1..=n).filter(|&h| h != r) {
            out.assign(layout.w(l, h), Some(layout.v1(l, h)));
        }
        match direction {
            Direction::Expand => {
                t[layout.v0(l, r)] = 1;
                for h in (1..=n).filter(|&h| h != r) {
                    t[layout.v1(l, h)] = 1;
                }
            }
            Direction::Reduce => {
                t[layout.v1(l, r)] = 1;
                for h in (1..=n).filter(|&h| h != r) {
                    t[layout.v0(l, h)] = 1;
                }
            }
        }
    }
    let delta = CapacityDelta {
        direction,
        amounts: t,
        budget: layout.budget(),
    };
    Ok((delta, out))
}

/// Seats and matching in the expansion gadget built from a complete weakly
/// stable source matching.
pub fn lemma1_lift(smt: &Instance, m: &Matching, layout: &VillageLayout) -> Result<(CapacityDelta, Matching), GadgetError> {
    lift(smt, m, layout, Direction::Expand)
}

/// Removals and matching in the reduction gadget: `n` seats per village.
pub fn theorem2_lift(
    smt: &Instance,
    m: &Matching,
    layout: &VillageLayout,
) -> Result<(CapacityDelta, Matching), GadgetError> {
    lift(smt, m, layout, Direction::Reduce)
}

/// Source pairs read off the copy hospitals. `None` when two gadget
/// residents of one village sit in copy hospitals.
pub fn project_village(layout: &VillageLayout, gadget: &Matching) -> Option<Matching> {
    let n = layout.n;
    let mut out = Matching::empty(n, n);
    for (r, h) in gadget.pairs() {
        if h >= n {
            continue;
        }
        let source = if r < layout.strict.len() {
            layout.strict[r]
        } else {
            let l = (r - layout.strict.len()) / (n + 1);
            if r == layout.y(l) {
                return None;
            }
            layout.tied[l]
        };
        if out.hospital_of(source).is_some() {
            return None;
        }
        out.assign(source, Some(h));
    }
    Some(out)
}

/// How the verifiers solve each capacity vector of the gadget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerSearch {
    /// Minimum average rank over every enumerated stable matching.
    Enumerate,
    /// Deferred acceptance (resident-optimal, so the same optimum).
    Deferred,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportReport {
    pub direction: Direction,
    pub allocations: u128,
    /// Best average rank over all seat vectors and stable matchings.
    pub optimum: u64,
    /// Cheapest lift of a weakly stable source matching.
    pub min_lift_cost: u64,
    pub argmin_delta: CapacityDelta,
    pub argmin_matching: Matching,
    pub projected: Option<Matching>,
    pub projected_weakly_stable: bool,
    pub projected_avg_rank: Option<u64>,
    /// Minimum average rank over weakly stable source matchings.
    pub source_min_avg_rank: u64,
}

impl TransportReport {
    pub fn holds(&self) -> bool {
        self.optimum == self.min_lift_cost
            && self.projected_weakly_stable
            && self.projected_avg_rank == Some(self.source_min_avg_rank)
    }
}

fn verify(
    smt: &Instance,
    direction: Direction,
    config: &SolverConfig,
    inner: InnerSearch,
) -> Result<TransportReport, GadgetError> {
    let gadget = build(smt, 0, direction)?;
    let Layout::Village(layout) = &gadget.layout else {
        unreachable!("village builder")
    };
    let g = &gadget.instance;

    let source_all = enumerate_weakly_stable(smt, config.limit)?;
    let mut min_lift_cost = u64::MAX;
    let mut source_min = u64::MAX;
    for m in &source_all {
        source_min = source_min.min(avg_rank_raw(smt, m.assignment()).expect("ranked pairs"));
        let (_, lifted) = lift(smt, m, layout, direction)?;
        min_lift_cost = min_lift_cost.min(avg_rank_raw(g, lifted.assignment()).expect("ranked pairs"));
    }

    let nh = g.num_hospitals();
    let b = layout.budget() as u64;
    let groups = [match direction {
        Direction::Expand => Group::expand((0..nh).collect(), b, b),
        Direction::Reduce => Group::reduce((0..nh).collect(), g.capacities(), b, b),
    }];
    let allocations = count_allocations(&groups);
    let caps = g.capacities();
    let limit = config.limit;
    let eval = |t: &[u32]| {
        let modified: Vec<u32> = caps
            .iter()
            .zip(t)
            .map(|(&c, &x)| match direction {
                Direction::Expand => c + x,
                Direction::Reduce => c - x,
            })
            .collect();
        match inner {
            InnerSearch::Deferred => {
                let m = da_with_capacities(g, &modified);
                let v = avg_rank_raw(g, m.assignment()).expect("ranked pairs");
                Ok(Some((v, m)))
            }
            InnerSearch::Enumerate => {
                let mut best: Option<(u64, Vec<Option<usize>>)> = None;
                for_each_stable(g, &modified, limit, |a| {
                    let v = avg_rank_raw(g, a).expect("ranked pairs");
                    if best.as_ref().is_none_or(|(bv, ba)| (v, a) < (*bv, ba.as_slice())) {
                        best = Some((v, a.to_vec()));
                    }
                })?;
                Ok(best.map(|(v, a)| (v, Matching::from_assignment(a, nh))))
            }
        }
    };
    let (t, optimum, argmin) = best_allocation(&groups, nh, config.guard, config.workers, eval)?
        .ok_or_else(|| GadgetError::Matching("gadget has no stable matching".into()))?;

    let projected = project_village(layout, &argmin);
    let projected_weakly_stable = projected.as_ref().is_some_and(|p| {
        (0..smt.num_residents()).all(|i| p.hospital_of(i).is_some()) && is_stable(smt, p).unwrap_or(false)
    });
    let projected_avg_rank = projected.as_ref().and_then(|p| avg_rank_raw(smt, p.assignment()).ok());
    Ok(TransportReport {
        direction,
        allocations,
        optimum,
        min_lift_cost,
        argmin_delta: CapacityDelta {
            direction,
            amounts: t,
            budget: layout.budget(),
        },
        argmin_matching: argmin,
        projected,
        projected_weakly_stable,
        projected_avg_rank,
        source_min_avg_rank: source_min,
    })
}

/// Brute force over every seat vector of the expansion gadget, compared with
/// the cheapest lift of a weakly stable source matching.
pub fn verify_lemma2(smt: &Instance, config: &SolverConfig, inner: InnerSearch) -> Result<TransportReport, GadgetError> {
    verify(smt, Direction::Expand, config, inner)
}

/// The same check on the reduction gadget with removal vectors.
pub fn verify_theorem2(
    smt: &Instance,
    config: &SolverConfig,
    inner: InnerSearch,
) -> Result<TransportReport, GadgetError> {
    verify(smt, Direction::Reduce, config, inner)
}
