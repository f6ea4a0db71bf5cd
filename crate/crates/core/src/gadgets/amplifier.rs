//! Copy-and-pad amplifiers. `padding` agents on each side rank their partner
//! first; each of `copies` replicas keeps the source lists, then ranks the
//! opposite padding pool, then everyone else in ascending index.

use crate::instance::{AgentId, Instance, PartitionBudgets, PreferenceList};
use crate::solvers::Budget;

use super::normal_form::check_c2_source;
use super::{complete_list, GadgetError, GadgetOutput, Layout, Role};

/// Upper bound on agents in an amplified instance.
pub const MAX_AMPLIFIED_AGENTS: u64 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmplifierParams {
    pub copies: usize,
    pub padding: usize,
    /// Exponent the parameters were derived from, if any.
    pub exponent: Option<u32>,
}

impl AmplifierParams {
    /// `copies = n^(a-1)`, `padding = n^a`.
    pub fn from_exponent(n: usize, a: u32) -> Self {
        AmplifierParams {
            copies: n.pow(a.saturating_sub(1)),
            padding: n.pow(a),
            exponent: Some(a),
        }
    }

    /// `n^(a+2) / 2` when the exponent is recorded.
    pub fn exponent_target(&self, n: usize) -> Option<u64> {
        self.exponent.map(|a| (n as u64).pow(a + 2) / 2)
    }

    fn check(&self, source_size: usize, per_copy: usize) -> Result<(), GadgetError> {
        if self.copies == 0 {
            return Err(GadgetError::Params("copies must be at least 1".into()));
        }
        if self.padding < source_size {
            return Err(GadgetError::Params(format!(
                "padding {} is below the source size {source_size}",
                self.padding
            )));
        }
        let agents = 2 * self.padding as u128 + self.copies as u128 * per_copy as u128;
        if agents > MAX_AMPLIFIED_AGENTS as u128 {
            return Err(GadgetError::TooLarge {
                agents,
                limit: MAX_AMPLIFIED_AGENTS,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmplifierLayout {
    pub padding: usize,
    pub copies: usize,
    pub source_residents: usize,
    pub source_hospitals: usize,
    /// Index of the catch-all hospital, when one was appended.
    pub artificial: Option<usize>,
}

impl AmplifierLayout {
    /// Gadget resident for source resident `i` in copy `s` (0-based).
    pub fn resident(&self, s: usize, i: usize) -> usize {
        self.padding + s * self.source_residents + i
    }

    pub fn hospital(&self, s: usize, j: usize) -> usize {
        self.padding + s * self.source_hospitals + j
    }

    fn roles(&self) -> Vec<(AgentId, Role)> {
        let mut out = Vec::new();
        for k in 0..self.padding {
            out.push((AgentId::resident(k), Role::Pad(k + 1)));
        }
        for s in 0..self.copies {
            for i in 0..self.source_residents {
                let agent = AgentId::resident(i);
                out.push((AgentId::resident(self.resident(s, i)), Role::Replica { copy: s + 1, agent }));
            }
        }
        for k in 0..self.padding {
            out.push((AgentId::hospital(k), Role::Pad(k + 1)));
        }
        for s in 0..self.copies {
            for j in 0..self.source_hospitals {
                let agent = AgentId::hospital(j);
                out.push((AgentId::hospital(self.hospital(s, j)), Role::Replica { copy: s + 1, agent }));
            }
        }
        if let Some(a) = self.artificial {
            out.push((AgentId::hospital(a), Role::Artificial));
        }
        out
    }
}

/// Lists of the replicated instance; `extra_tail` is appended to every
/// resident list after the ascending remainder.
fn replicate(source: &Instance, layout: &AmplifierLayout, extra_tail: &[usize]) -> (Vec<PreferenceList>, Vec<PreferenceList>) {
    let p = layout.padding;
    let nr = p + layout.copies * layout.source_residents;
    let nh_core = p + layout.copies * layout.source_hospitals;
    let r_pool: Vec<usize> = (0..p).collect();
    let h_pool: Vec<usize> = (0..p).collect();

    let mut rlists = Vec::with_capacity(nr);
    for k in 0..p {
        let full = complete_list(vec![k], nh_core, &[]);
        rlists.push(PreferenceList::strict(full.into_iter().chain(extra_tail.iter().copied())));
    }
    for s in 0..layout.copies {
        for i in 0..layout.source_residents {
            let mut tiers: Vec<Vec<usize>> = source
                .resident_list(i)
                .tiers()
                .iter()
                .map(|t| t.iter().map(|&j| layout.hospital(s, j)).collect())
                .collect();
            let listed: Vec<usize> = tiers.iter().flatten().copied().collect();
            let mut rest = complete_list(listed, nh_core, &[]);
            rest.drain(..tiers.iter().map(Vec::len).sum::<usize>());
            tiers.extend(h_pool.iter().map(|&h| vec![h]));
            tiers.extend(rest.into_iter().filter(|h| !h_pool.contains(h)).map(|h| vec![h]));
            tiers.extend(extra_tail.iter().map(|&h| vec![h]));
            rlists.push(PreferenceList::from_tiers(tiers));
        }
    }

    let mut hlists = Vec::with_capacity(nh_core);
    for k in 0..p {
        hlists.push(PreferenceList::strict(complete_list(vec![k], nr, &[])));
    }
    for s in 0..layout.copies {
        for j in 0..layout.source_hospitals {
            let mut prefix: Vec<usize> = source.hospital_list(j).agents().map(|i| layout.resident(s, i)).collect();
            prefix.extend(r_pool.iter().copied());
            hlists.push(PreferenceList::strict(complete_list(prefix, nr, &[])));
        }
    }
    (rlists, hlists)
}

/// Weak-stability amplifier. Residents keep their source ties; every
/// capacity is 1. The target is `padding + copies * n²`.
pub fn build_c2_amplifier(hrti: &Instance, params: AmplifierParams) -> Result<GadgetOutput, GadgetError> {
    check_c2_source(hrti).map_err(GadgetError::Form)?;
    let n = hrti.num_residents();
    params.check(n, 2 * n)?;
    let layout = AmplifierLayout {
        padding: params.padding,
        copies: params.copies,
        source_residents: n,
        source_hospitals: n,
        artificial: None,
    };
    let (rlists, hlists) = replicate(hrti, &layout, &[]);
    let capacities = vec![1; hlists.len()];
    let instance = Instance::new(capacities, rlists, hlists).expect("shape by construction");
    let target = (params.padding + params.copies * n * n) as u64;
    Ok(GadgetOutput {
        instance,
        budget: Budget::Global(0),
        target,
        roles: layout.roles(),
        layout: Layout::Amplifier(layout),
    })
}

/// Partition-expansion amplifier. Each copy carries a replica of every
/// source part and budget; padding hospitals and a trailing catch-all
/// hospital form singleton parts with budget 0. The target is
/// `padding + copies * |R| * |H|`.
pub fn build_t3_amplifier(
    hri: &Instance,
    parts: &PartitionBudgets,
    params: AmplifierParams,
) -> Result<GadgetOutput, GadgetError> {
    if hri.has_ties() {
        return Err(GadgetError::Form("source must be strict".into()));
    }
    if !crate::instance::validate_instance(hri).is_empty() {
        return Err(GadgetError::Form("instance fails validation".into()));
    }
    parts
        .validate(hri.num_hospitals())
        .map_err(|e| GadgetError::Form(e.to_string()))?;
    if parts.parts.iter().any(|p| p.len() > 2) || parts.budgets.iter().any(|&b| b > 1) {
        return Err(GadgetError::Form("parts need size at most 2 and budgets in {0, 1}".into()));
    }
    let n = hri.num_residents();
    let m = hri.num_hospitals();
    params.check(n, n + m)?;
    let mut layout = AmplifierLayout {
        padding: params.padding,
        copies: params.copies,
        source_residents: n,
        source_hospitals: m,
        artificial: None,
    };
    let artificial = params.padding + params.copies * m;
    layout.artificial = Some(artificial);
    let (rlists, mut hlists) = replicate(hri, &layout, &[artificial]);
    let nr = rlists.len();
    hlists.push(PreferenceList::strict(0..nr));

    let mut capacities = vec![1u32; params.padding];
    for _ in 0..params.copies {
        capacities.extend_from_slice(hri.capacities());
    }
    capacities.push(nr as u32);

    let mut out_parts = PartitionBudgets {
        parts: (0..params.padding).map(|k| vec![k]).collect(),
        budgets: vec![0; params.padding],
    };
    for s in 0..params.copies {
        for (part, &b) in parts.parts.iter().zip(&parts.budgets) {
            out_parts.parts.push(part.iter().map(|&j| layout.hospital(s, j)).collect());
            out_parts.budgets.push(b);
        }
    }
    out_parts.parts.push(vec![artificial]);
    out_parts.budgets.push(0);

    let instance = Instance::new(capacities, rlists, hlists).expect("shape by construction");
    let target = (params.padding + params.copies * n * m) as u64;
    Ok(GadgetOutput {
        instance,
        budget: Budget::Parts(out_parts),
        target,
        roles: layout.roles(),
        layout: Layout::Amplifier(layout),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{is_normalized, validate_instance};

    fn smti() -> Instance {
        Instance::new(
            vec![1, 1],
            vec![PreferenceList::from_tiers(vec![vec![0, 1]]), PreferenceList::strict([0])],
            vec![PreferenceList::strict([1, 0]), PreferenceList::strict([0])],
        )
        .unwrap()
    }

    #[test]
    fn c2_sizes_and_lists() {
        let params = AmplifierParams {
            copies: 2,
            padding: 3,
            exponent: None,
        };
        let out = build_c2_amplifier(&smti(), params).unwrap();
        let g = &out.instance;
        assert_eq!((g.num_residents(), g.num_hospitals()), (7, 7));
        assert!(validate_instance(g).is_empty());
        assert!(g.is_complete());
        assert_eq!(out.target, 3 + 2 * 4);
        // copy-2 resident 0: tie over its copy's hospitals, then the padding pool
        let tiers = g.resident_list(5).tiers();
        assert_eq!(tiers[0], vec![5, 6]);
        assert_eq!(&tiers[1..4], &[vec![0], vec![1], vec![2]]);
        let h = g.hospital_list(3).agents().collect::<Vec<_>>();
        assert_eq!(&h[..5], &[4, 3, 0, 1, 2]);
        assert_eq!(g.hospital_list(1).agents().next(), Some(1));
    }

    #[test]
    fn params_are_checked() {
        let zero = AmplifierParams {
            copies: 0,
            padding: 4,
            exponent: None,
        };
        assert!(matches!(build_c2_amplifier(&smti(), zero), Err(GadgetError::Params(_))));
        let thin = AmplifierParams {
            copies: 1,
            padding: 1,
            exponent: None,
        };
        assert!(matches!(build_c2_amplifier(&smti(), thin), Err(GadgetError::Params(_))));
        let huge = AmplifierParams::from_exponent(10, 6);
        assert!(matches!(build_c2_amplifier(&smti(), huge), Err(GadgetError::Params(_)) | Err(GadgetError::TooLarge { .. })));
    }

    #[test]
    fn exponent_parameters() {
        let p = AmplifierParams::from_exponent(3, 2);
        assert_eq!((p.copies, p.padding), (3, 9));
        assert_eq!(p.exponent_target(3), Some(40));
    }

    #[test]
    fn t3_partition_and_normalization() {
        let hri = Instance::from_strict_lists(vec![0, 1], vec![vec![0, 1], vec![1]], vec![vec![0], vec![1, 0]]).unwrap();
        let parts = PartitionBudgets {
            parts: vec![vec![0, 1]],
            budgets: vec![1],
        };
        let params = AmplifierParams {
            copies: 2,
            padding: 2,
            exponent: None,
        };
        let out = build_t3_amplifier(&hri, &parts, params).unwrap();
        let g = &out.instance;
        assert!(validate_instance(g).is_empty());
        assert!(is_normalized(g));
        assert_eq!(g.capacities(), &[1, 1, 0, 1, 0, 1, 6]);
        let Budget::Parts(p) = &out.budget else { panic!() };
        assert_eq!(p.parts, vec![vec![0], vec![1], vec![2, 3], vec![4, 5], vec![6]]);
        assert_eq!(p.budgets, vec![0, 0, 1, 1, 0]);
        assert_eq!(out.target, 2 + 2 * 2 * 2);
        assert!(p.validate(g.num_hospitals()).is_ok());
    }

    #[test]
    fn t3_rejects_large_parts() {
        let hri = Instance::from_strict_lists(vec![1, 1, 1], vec![vec![0, 1, 2]], vec![vec![0], vec![0], vec![0]]).unwrap();
        let parts = PartitionBudgets::single(3, 1);
        let params = AmplifierParams {
            copies: 1,
            padding: 1,
            exponent: None,
        };
        assert!(matches!(build_t3_amplifier(&hri, &parts, params), Err(GadgetError::Form(_))));
    }
}
