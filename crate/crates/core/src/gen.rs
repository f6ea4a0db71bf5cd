//! Seeded instance generators.
//!
//! The generator is SplitMix64 (state += 0x9E3779B97F4A7C15, then two
//! xor-shift-multiply rounds with 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).
//! Bounded draws use rejection sampling and permutations use a Fisher-Yates
//! shuffle walking indices downward, so a given `(spec, seed)` produces the
//! same instance on every platform.
//!
//! Draw order for [`generate`]:
//! 1. capacities (uniform mode only), hospital by hospital;
//! 2. one shuffle of all hospitals per resident, in resident order;
//! 3. one shuffle of all residents per hospital, in hospital order;
//! 4. one shuffle of the eligible residents, the first `resident_ties` of
//!    which get their top two entries merged into a tie;
//! 5. the same for hospitals with `hospital_ties`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::instance::{Instance, PreferenceList};

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..bound` (`bound > 0`).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CapacityMode {
    AllOne,
    Uniform { lo: u32, hi: u32 },
    Fixed(Vec<u32>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListLength {
    Full,
    /// Each agent first draws a list of this length; acceptability is then
    /// repaired by keeping only mutual entries.
    Prefix(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub num_residents: usize,
    pub num_hospitals: usize,
    pub capacity_mode: CapacityMode,
    /// Residents given a length-2 tie at the head of their list.
    pub resident_ties: usize,
    /// Hospitals given a length-2 tie at the head of their list.
    pub hospital_ties: usize,
    pub list_length: ListLength,
    pub seed: u64,
}

impl GenSpec {
    /// Strict complete instance with unit capacities.
    pub fn strict(num_residents: usize, num_hospitals: usize, seed: u64) -> Self {
        GenSpec {
            num_residents,
            num_hospitals,
            capacity_mode: CapacityMode::AllOne,
            resident_ties: 0,
            hospital_ties: 0,
            list_length: ListLength::Full,
            seed,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{ties} tied residents requested but only {eligible} have two or more entries")]
    ResidentTies { ties: usize, eligible: usize },
    #[error("{ties} tied hospitals requested but only {eligible} have two or more entries")]
    HospitalTies { ties: usize, eligible: usize },
    #[error("fixed capacity vector has {got} entries for {expected} hospitals")]
    CapacityLength { got: usize, expected: usize },
    #[error("uniform capacity range {lo}..={hi} is empty")]
    CapacityRange { lo: u32, hi: u32 },
    #[error("list length {length} exceeds the opposite side")]
    ListLength { length: usize },
    #[error("bad generator spec: {0}")]
    Syntax(String),
}

pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    let nr = spec.num_residents;
    let nh = spec.num_hospitals;
    let mut rng = SplitMix64::new(spec.seed);

    let capacities = match &spec.capacity_mode {
        CapacityMode::AllOne => vec![1; nh],
        CapacityMode::Uniform { lo, hi } => {
            if lo > hi {
                return Err(GenError::CapacityRange { lo: *lo, hi: *hi });
            }
            (0..nh).map(|_| lo + rng.below((hi - lo) as u64 + 1) as u32).collect()
        }
        CapacityMode::Fixed(v) => {
            if v.len() != nh {
                return Err(GenError::CapacityLength {
                    got: v.len(),
                    expected: nh,
                });
            }
            v.clone()
        }
    };

    let (r_len, h_len) = match spec.list_length {
        ListLength::Full => (nh, nr),
        ListLength::Prefix(k) => {
            if k > nh.max(nr) {
                return Err(GenError::ListLength { length: k });
            }
            (k.min(nh), k.min(nr))
        }
    };

    let mut resident_lists: Vec<Vec<usize>> = (0..nr)
        .map(|_| {
            let mut perm: Vec<usize> = (0..nh).collect();
            rng.shuffle(&mut perm);
            perm.truncate(r_len);
            perm
        })
        .collect();
    let mut hospital_lists: Vec<Vec<usize>> = (0..nh)
        .map(|_| {
            let mut perm: Vec<usize> = (0..nr).collect();
            rng.shuffle(&mut perm);
            perm.truncate(h_len);
            perm
        })
        .collect();

    if spec.list_length != ListLength::Full {
        let h_lists = hospital_lists.clone();
        for (i, l) in resident_lists.iter_mut().enumerate() {
            l.retain(|&j| h_lists[j].contains(&i));
        }
        let r_lists = resident_lists.clone();
        for (j, l) in hospital_lists.iter_mut().enumerate() {
            l.retain(|&i| r_lists[i].contains(&j));
        }
    }

    let resident_prefs = tie_heads(&mut rng, &resident_lists, spec.resident_ties)
        .map_err(|eligible| GenError::ResidentTies {
            ties: spec.resident_ties,
            eligible,
        })?;
    let hospital_prefs = tie_heads(&mut rng, &hospital_lists, spec.hospital_ties)
        .map_err(|eligible| GenError::HospitalTies {
            ties: spec.hospital_ties,
            eligible,
        })?;

    Ok(Instance::new(capacities, resident_prefs, hospital_prefs).expect("shape by construction"))
}

/// Merges the first two entries of `ties` randomly chosen lists (among those
/// with at least two entries). Errors with the eligible count when short.
fn tie_heads(rng: &mut SplitMix64, lists: &[Vec<usize>], ties: usize) -> Result<Vec<PreferenceList>, usize> {
    let mut eligible: Vec<usize> = (0..lists.len()).filter(|&a| lists[a].len() >= 2).collect();
    if ties > eligible.len() {
        return Err(eligible.len());
    }
    let mut tied = vec![false; lists.len()];
    if ties > 0 {
        rng.shuffle(&mut eligible);
        for &a in &eligible[..ties] {
            tied[a] = true;
        }
    }
    Ok(lists
        .iter()
        .zip(&tied)
        .map(|(l, &t)| {
            if t {
                let mut tiers = vec![vec![l[0], l[1]]];
                tiers.extend(l[2..].iter().map(|&a| vec![a]));
                PreferenceList::from_tiers(tiers)
            } else {
                PreferenceList::strict(l.iter().copied())
            }
        })
        .collect())
}

/// Six residents, four hospitals: the instance on which voting heuristics
/// pick the wrong hospital to expand. Labels are 0-based (`i1` is `r0`).
pub fn builtin_counterexample() -> Instance {
    let all = vec![0, 1, 2, 3, 4, 5];
    Instance::from_strict_lists(
        vec![1, 1, 1, 3],
        vec![
            vec![1, 0, 2, 3],
            vec![1, 2, 0, 3],
            vec![2, 1, 3, 0],
            vec![0, 3, 2, 1],
            vec![0, 3, 2, 1],
            vec![0, 3, 2, 1],
        ],
        vec![all.clone(), all.clone(), all.clone(), all],
    )
    .expect("well-formed")
}

impl fmt::Display for GenSpec {
    /// Manifest form: `gen <seed> residents <n> hospitals <m> capacity <mode>
    /// ties <L> hospital-ties <L> length <full|k>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let capacity = match &self.capacity_mode {
            CapacityMode::AllOne => "one".to_string(),
            CapacityMode::Uniform { lo, hi } => format!("uniform:{lo}:{hi}"),
            CapacityMode::Fixed(v) => {
                let parts: Vec<String> = v.iter().map(u32::to_string).collect();
                format!("fixed:{}", parts.join(","))
            }
        };
        let length = match self.list_length {
            ListLength::Full => "full".to_string(),
            ListLength::Prefix(k) => k.to_string(),
        };
        write!(
            f,
            "gen {} residents {} hospitals {} capacity {} ties {} hospital-ties {} length {}",
            self.seed, self.num_residents, self.num_hospitals, capacity, self.resident_ties, self.hospital_ties, length
        )
    }
}

impl FromStr for CapacityMode {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        let bad = || GenError::Syntax(format!("capacity mode `{s}`"));
        if s == "one" {
            return Ok(CapacityMode::AllOne);
        }
        if let Some(rest) = s.strip_prefix("uniform:") {
            let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(CapacityMode::Uniform {
                lo: lo.parse().map_err(|_| bad())?,
                hi: hi.parse().map_err(|_| bad())?,
            });
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let v: Result<Vec<u32>, _> = rest.split(',').filter(|p| !p.is_empty()).map(str::parse).collect();
            return Ok(CapacityMode::Fixed(v.map_err(|_| bad())?));
        }
        Err(bad())
    }
}

impl FromStr for ListLength {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        if s == "full" {
            Ok(ListLength::Full)
        } else {
            s.parse()
                .map(ListLength::Prefix)
                .map_err(|_| GenError::Syntax(format!("list length `{s}`")))
        }
    }
}

impl FromStr for GenSpec {
    type Err = GenError;

    /// Parses one manifest line (see the `Display` impl). Omitted keys take
    /// defaults: unit capacities, no ties, full lists.
    fn from_str(line: &str) -> Result<Self, GenError> {
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("gen") {
            return Err(GenError::Syntax("manifest line must start with `gen`".into()));
        }
        let seed = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GenError::Syntax("missing seed".into()))?;
        let mut spec = GenSpec::strict(0, 0, seed);
        let mut have = (false, false);
        while let Some(key) = tokens.next() {
            let value = tokens
                .next()
                .ok_or_else(|| GenError::Syntax(format!("key `{key}` without value")))?;
            let num = || value.parse::<usize>().map_err(|_| GenError::Syntax(format!("`{key} {value}`")));
            match key {
                "residents" => {
                    spec.num_residents = num()?;
                    have.0 = true;
                }
                "hospitals" => {
                    spec.num_hospitals = num()?;
                    have.1 = true;
                }
                "capacity" => spec.capacity_mode = value.parse()?,
                "ties" => spec.resident_ties = num()?,
                "hospital-ties" => spec.hospital_ties = num()?,
                "length" => spec.list_length = value.parse()?,
                other => return Err(GenError::Syntax(format!("unknown key `{other}`"))),
            }
        }
        if !(have.0 && have.1) {
            return Err(GenError::Syntax("residents and hospitals are required".into()));
        }
        Ok(spec)
    }
}

/// Parses a corpus manifest: one `gen` line per instance, `#` comments.
pub fn parse_manifest(text: &str) -> Result<Vec<GenSpec>, GenError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}
