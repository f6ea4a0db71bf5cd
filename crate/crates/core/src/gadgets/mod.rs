//! Reduction gadget builders, lifts and brute-force verifiers.

mod amplifier;
mod normal_form;
mod split;
mod village;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engines::EngineError;
use crate::format::Document;
use crate::instance::{AgentId, Instance, Side};
use crate::solvers::{Budget, SolveError};

pub use amplifier::{build_c2_amplifier, build_t3_amplifier, AmplifierLayout, AmplifierParams, MAX_AMPLIFIED_AGENTS};
pub use normal_form::{check_c2_source, check_normal_form, check_t4_source, tied_residents};
pub use split::{build_t4_split_gadget, project_split, split_lift, verify_theorem4, SplitLayout, SplitReport};
pub use village::{
    build_expansion_gadget, build_reduction_gadget, lemma1_lift, project_village, theorem2_lift, verify_lemma2,
    verify_theorem2, InnerSearch, TransportReport, VillageLayout,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("source is not in the required form: {0}")]
    Form(String),
    #[error("source matching is unusable: {0}")]
    Matching(String),
    #[error("bad amplifier parameters: {0}")]
    Params(String),
    #[error("gadget would have {agents} agents, above the limit of {limit}")]
    TooLarge { agents: u128, limit: u64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// What a gadget agent stands for. Slots and pool positions are 1-based,
/// source agents 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Copy(AgentId),
    W { resident: usize, slot: usize },
    Y { resident: usize },
    V0 { resident: usize, slot: usize },
    V1 { resident: usize, slot: usize },
    H0(usize),
    Z(usize),
    X(usize),
    Split1 { hospital: usize },
    Split2 { hospital: usize },
    Replica { copy: usize, agent: AgentId },
    Pad(usize),
    Artificial,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Copy(a) => write!(f, "copy {a}"),
            Role::W { resident, slot } => write!(f, "w r{resident} {slot}"),
            Role::Y { resident } => write!(f, "y r{resident}"),
            Role::V0 { resident, slot } => write!(f, "v0 r{resident} {slot}"),
            Role::V1 { resident, slot } => write!(f, "v1 r{resident} {slot}"),
            Role::H0(k) => write!(f, "h0 {k}"),
            Role::Z(k) => write!(f, "z {k}"),
            Role::X(k) => write!(f, "x {k}"),
            Role::Split1 { hospital } => write!(f, "split1 h{hospital}"),
            Role::Split2 { hospital } => write!(f, "split2 h{hospital}"),
            Role::Replica { copy, agent } => write!(f, "replica {copy} {agent}"),
            Role::Pad(k) => write!(f, "pad {k}"),
            Role::Artificial => f.write_str("artificial"),
        }
    }
}

fn agent_token(tok: &str) -> Option<AgentId> {
    let (side, rest) = tok.split_at_checked(1)?;
    let index = rest.parse().ok()?;
    match side {
        "r" => Some(AgentId::resident(index)),
        "h" => Some(AgentId::hospital(index)),
        _ => None,
    }
}

fn resident_token(tok: &str) -> Option<usize> {
    agent_token(tok).filter(|a| a.side == Side::Resident).map(|a| a.index)
}

fn hospital_token(tok: &str) -> Option<usize> {
    agent_token(tok).filter(|a| a.side == Side::Hospital).map(|a| a.index)
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| t.parse::<usize>().ok();
        let role = match toks.as_slice() {
            ["copy", a] => agent_token(a).map(Role::Copy),
            ["w", r, k] => resident_token(r).zip(num(k)).map(|(resident, slot)| Role::W { resident, slot }),
            ["y", r] => resident_token(r).map(|resident| Role::Y { resident }),
            ["v0", r, k] => resident_token(r).zip(num(k)).map(|(resident, slot)| Role::V0 { resident, slot }),
            ["v1", r, k] => resident_token(r).zip(num(k)).map(|(resident, slot)| Role::V1 { resident, slot }),
            ["h0", k] => num(k).map(Role::H0),
            ["z", k] => num(k).map(Role::Z),
            ["x", k] => num(k).map(Role::X),
            ["split1", h] => hospital_token(h).map(|hospital| Role::Split1 { hospital }),
            ["split2", h] => hospital_token(h).map(|hospital| Role::Split2 { hospital }),
            ["replica", c, a] => num(c).zip(agent_token(a)).map(|(copy, agent)| Role::Replica { copy, agent }),
            ["pad", k] => num(k).map(Role::Pad),
            ["artificial"] => Some(Role::Artificial),
            _ => None,
        };
        role.ok_or_else(|| format!("unknown role `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Layout {
    Village(VillageLayout),
    Split(SplitLayout),
    Amplifier(AmplifierLayout),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetOutput {
    pub instance: Instance,
    pub budget: Budget,
    pub target: u64,
    pub roles: Vec<(AgentId, Role)>,
    pub layout: Layout,
}

impl GadgetOutput {
    /// The gadget as a text document with budget, target and role map.
    pub fn to_document(&self) -> Document {
        let mut doc = Document::new(self.instance.clone());
        match &self.budget {
            Budget::Global(b) => doc.budget = Some(*b),
            Budget::Parts(p) => doc.partition = Some(p.clone()),
        }
        doc.target = Some(self.target);
        doc.map = self.roles.iter().map(|(a, r)| (*a, r.to_string())).collect();
        doc
    }
}

/// A complete strict list: `prefix`, then every other agent in `0..total`
/// not in `tail` ascending, then `tail`.
pub(crate) fn complete_list(prefix: Vec<usize>, total: usize, tail: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; total];
    for &a in prefix.iter().chain(tail) {
        seen[a] = true;
    }
    let mut out = prefix;
    out.extend((0..total).filter(|&a| !seen[a]));
    out.extend_from_slice(tail);
    out
}
