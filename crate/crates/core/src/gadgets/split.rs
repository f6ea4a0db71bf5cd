//! Hospital-splitting gadget: hospital ties become a choice of which copy
//! receives the seat.

use crate::engines::enumerate_weakly_stable;
use crate::instance::{AgentId, CapacityDelta, Direction, Instance, Matching, PartitionBudgets, PreferenceList};
use crate::solvers::{solve_partition, Budget, ProblemKind, SolverConfig};
use crate::stability::is_stable;

use super::normal_form::check_t4_source;
use super::{GadgetError, GadgetOutput, Layout, Role};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitLayout {
    /// Source hospital of every gadget hospital.
    pub source_of: Vec<usize>,
    /// First gadget index of every source hospital.
    pub first: Vec<usize>,
    /// Tie `(first, second)` of every split source hospital.
    pub tie: Vec<Option<(usize, usize)>>,
}

impl SplitLayout {
    pub fn is_split(&self, j: usize) -> bool {
        self.tie[j].is_some()
    }
}

/// Each hospital with a head tie `(a, b)` becomes `j'` (list without `b`)
/// and `j''` (ranked by `b` alone), both with capacity 0 and one part whose
/// budget is the source capacity. Other hospitals keep their capacity and
/// form singleton parts with budget 0.
pub fn build_t4_split_gadget(hrti: &Instance, target: u64) -> Result<GadgetOutput, GadgetError> {
    check_t4_source(hrti).map_err(GadgetError::Form)?;
    let nh = hrti.num_hospitals();
    let mut layout = SplitLayout {
        source_of: Vec::new(),
        first: Vec::new(),
        tie: Vec::new(),
    };
    for j in 0..nh {
        layout.first.push(layout.source_of.len());
        let head = hrti.hospital_list(j).tiers().first().filter(|t| t.len() == 2);
        let tie = head.map(|t| (t[0], t[1]));
        layout.source_of.push(j);
        if tie.is_some() {
            layout.source_of.push(j);
        }
        layout.tie.push(tie);
    }
    let gh = layout.source_of.len();

    let mut capacities = vec![0u32; gh];
    let mut hlists = Vec::with_capacity(gh);
    let mut parts = PartitionBudgets {
        parts: Vec::new(),
        budgets: Vec::new(),
    };
    let mut roles = Vec::new();
    for j in 0..nh {
        let g = layout.first[j];
        let order: Vec<usize> = hrti.hospital_list(j).agents().collect();
        match layout.tie[j] {
            None => {
                capacities[g] = hrti.capacity(j);
                hlists.push(PreferenceList::strict(order));
                parts.parts.push(vec![g]);
                parts.budgets.push(0);
                roles.push((AgentId::hospital(g), Role::Copy(AgentId::hospital(j))));
            }
            Some((_, second)) => {
                hlists.push(PreferenceList::strict(order.into_iter().filter(|&i| i != second)));
                hlists.push(PreferenceList::strict([second]));
                parts.parts.push(vec![g, g + 1]);
                parts.budgets.push(hrti.capacity(j));
                roles.push((AgentId::hospital(g), Role::Split1 { hospital: j }));
                roles.push((AgentId::hospital(g + 1), Role::Split2 { hospital: j }));
            }
        }
    }
    let rlists = (0..hrti.num_residents())
        .map(|i| {
            PreferenceList::strict(hrti.resident_list(i).agents().map(|j| match layout.tie[j] {
                Some((_, second)) if second == i => layout.first[j] + 1,
                _ => layout.first[j],
            }))
        })
        .collect();
    for i in 0..hrti.num_residents() {
        roles.push((AgentId::resident(i), Role::Copy(AgentId::resident(i))));
    }
    roles.sort_by_key(|(a, _)| *a);

    let instance = Instance::new(capacities, rlists, hlists).expect("shape by construction");
    Ok(GadgetOutput {
        instance,
        budget: Budget::Parts(parts),
        target,
        roles,
        layout: Layout::Split(layout),
    })
}

/// Source matching with every gadget hospital replaced by its original.
pub fn project_split(layout: &SplitLayout, m: &Matching) -> Matching {
    let assignment = m.assignment().iter().map(|h| h.map(|g| layout.source_of[g])).collect();
    Matching::from_assignment(assignment, layout.first.len())
}

/// Seat vector and matching in the gadget for a weakly stable source
/// matching: `j''` gets one seat when it holds the tie's second resident,
/// `j'` gets the rest.
pub fn split_lift(hrti: &Instance, layout: &SplitLayout, m: &Matching) -> Result<(CapacityDelta, Matching), GadgetError> {
    match is_stable(hrti, m) {
        Ok(true) => {}
        Ok(false) => return Err(GadgetError::Matching("not weakly stable".into())),
        Err(e) => return Err(GadgetError::Matching(e.to_string())),
    }
    let gh = layout.source_of.len();
    let mut t = vec![0u32; gh];
    let mut out = Matching::empty(hrti.num_residents(), gh);
    for (j, tie) in layout.tie.iter().enumerate() {
        let g = layout.first[j];
        let Some((_, second)) = *tie else { continue };
        let to_second = u32::from(m.hospital_of(second) == Some(j));
        t[g + 1] = to_second;
        t[g] = hrti.capacity(j) - to_second;
    }
    for (i, h) in m.assignment().iter().enumerate() {
        let Some(j) = *h else { continue };
        let g = layout.first[j];
        let target = match layout.tie[j] {
            Some((_, second)) if second == i => g + 1,
            _ => g,
        };
        out.assign(i, Some(target));
    }
    let budget = layout.tie.iter().zip(hrti.capacities()).filter(|(t, _)| t.is_some()).map(|(_, &c)| c).sum();
    Ok((
        CapacityDelta {
            direction: Direction::Expand,
            amounts: t,
            budget,
        },
        out,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitReport {
    /// Best cardinality over all feasible part allocations of the gadget.
    pub gadget_max: u64,
    /// Best cardinality over weakly stable matchings of the source.
    pub source_max: u64,
    pub argmin_delta: CapacityDelta,
    /// Whether the gadget optimum maps back to a weakly stable source
    /// matching. Not implied by equal maxima: an empty `j''` lets the tie's
    /// second resident block.
    pub projected_weakly_stable: bool,
}

impl SplitReport {
    pub fn holds(&self) -> bool {
        self.gadget_max == self.source_max
    }
}

/// Compares the two maxima by brute force on both sides.
pub fn verify_theorem4(hrti: &Instance, config: &SolverConfig) -> Result<SplitReport, GadgetError> {
    let out = build_t4_split_gadget(hrti, 0)?;
    let (Budget::Parts(parts), Layout::Split(layout)) = (&out.budget, &out.layout) else {
        unreachable!("split builder")
    };
    let best = solve_partition(&out.instance, parts, ProblemKind::MaxCardExpandPart, config)?;
    let source_max = enumerate_weakly_stable(hrti, config.limit)?
        .iter()
        .map(|m| m.len() as u64)
        .max()
        .unwrap_or(0);
    let projected = project_split(layout, &best.matching);
    Ok(SplitReport {
        gadget_max: best.objective,
        source_max,
        argmin_delta: best.delta,
        projected_weakly_stable: is_stable(hrti, &projected).unwrap_or(false),
    })
}
