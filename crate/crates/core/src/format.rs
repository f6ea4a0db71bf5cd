//! Canonical line-oriented text format.
//!
//! ```text
//! hrcap 1
//! residents <nR>
//! hospitals <nH>
//! capacities <c_0> ... <c_{nH-1}>
//! rlist <r>: <tok> ...        tok = hospital index, or ( h h ) for a tie
//! hlist <h>: <tok> ...
//! partition <k>: <h ...> budget <B_k>
//! budget <B>
//! target <K>
//! map <agent> <role ...>
//! ```
//!
//! Indices are 0-based. `#` starts a comment and `result ...` lines are
//! ignored. A missing list line means an empty list. Matchings are one `pair <r> <h>` line per pair.

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::{AgentId, Instance, Matching, PartitionBudgets, PreferenceList, Side};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// An instance file together with its optional annotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub instance: Instance,
    pub partition: Option<PartitionBudgets>,
    pub budget: Option<u32>,
    pub target: Option<u64>,
    pub map: Vec<(AgentId, String)>,
}

impl Document {
    pub fn new(instance: Instance) -> Self {
        Document {
            instance,
            partition: None,
            budget: None,
            target: None,
            map: Vec::new(),
        }
    }
}

/// Content lines with their 1-based line numbers, comments and report
/// `result` trailers stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("result "))
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, ParseError> {
    tok.parse()
        .or_else(|_| err(line, format!("expected {what}, found `{tok}`")))
}

fn parse_agent(line: usize, tok: &str) -> Result<AgentId, ParseError> {
    let (side, rest) = match tok.split_at_checked(1) {
        Some(("r", rest)) => (Side::Resident, rest),
        Some(("h", rest)) => (Side::Hospital, rest),
        _ => return err(line, format!("expected agent like r0 or h0, found `{tok}`")),
    };
    Ok(AgentId {
        side,
        index: parse_num(line, rest, "agent index")?,
    })
}

fn parse_tiers(line: usize, body: &str) -> Result<Vec<Vec<usize>>, ParseError> {
    let spaced = body.replace('(', " ( ").replace(')', " ) ");
    let mut tiers = Vec::new();
    let mut open: Option<Vec<usize>> = None;
    for tok in spaced.split_whitespace() {
        match (tok, open.as_mut()) {
            ("(", None) => open = Some(Vec::new()),
            ("(", Some(_)) => return err(line, "nested tie"),
            (")", Some(_)) => {
                let tie = open.take().expect("open tie");
                if tie.is_empty() {
                    return err(line, "empty tie");
                }
                tiers.push(tie);
            }
            (")", None) => return err(line, "unmatched `)`"),
            (t, Some(tie)) => tie.push(parse_num(line, t, "agent index")?),
            (t, None) => tiers.push(vec![parse_num(line, t, "agent index")?]),
        }
    }
    if open.is_some() {
        return err(line, "unterminated tie");
    }
    Ok(tiers)
}

/// Splits `<keyword> <index>: <body>`.
fn indexed_body(line: usize, rest: &str) -> Result<(usize, &str), ParseError> {
    let Some((idx, body)) = rest.split_once(':') else {
        return err(line, "missing `:`");
    };
    Ok((parse_num(line, idx.trim(), "index")?, body))
}

pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let mut lines = content_lines(text).peekable();
    let last_line = text.lines().count().max(1);

    let mut header = |key: &str| -> Result<(usize, String), ParseError> {
        match lines.next() {
            Some((n, l)) => match l.split_once(char::is_whitespace) {
                Some((k, v)) if k == key => Ok((n, v.trim().to_string())),
                _ => err(n, format!("expected `{key}` line")),
            },
            None => err(last_line, format!("missing `{key}` line")),
        }
    };
    let (n, version) = header("hrcap")?;
    if version != "1" {
        return err(n, format!("unsupported format version `{version}`"));
    }
    let (n, v) = header("residents")?;
    let nr: usize = parse_num(n, &v, "resident count")?;
    let (n, v) = header("hospitals")?;
    let nh: usize = parse_num(n, &v, "hospital count")?;
    let (n, v) = header("capacities")?;
    let capacities: Vec<u32> = v
        .split_whitespace()
        .map(|t| parse_num(n, t, "capacity"))
        .collect::<Result<_, _>>()?;
    if capacities.len() != nh {
        return err(n, format!("{} capacities for {nh} hospitals", capacities.len()));
    }

    let mut rlists: Vec<Option<Vec<Vec<usize>>>> = vec![None; nr];
    let mut hlists: Vec<Option<Vec<Vec<usize>>>> = vec![None; nh];
    let mut parts: Vec<(usize, Vec<usize>, u32)> = Vec::new();
    let mut budget = None;
    let mut target = None;
    let mut map = Vec::new();

    for (n, l) in lines {
        let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match key {
            "rlist" | "hlist" => {
                let (idx, body) = indexed_body(n, rest)?;
                let (slots, side) = if key == "rlist" {
                    (&mut rlists, "resident")
                } else {
                    (&mut hlists, "hospital")
                };
                let Some(slot) = slots.get_mut(idx) else {
                    return err(n, format!("{side} {idx} out of range"));
                };
                if slot.is_some() {
                    return err(n, format!("duplicate list for {side} {idx}"));
                }
                *slot = Some(parse_tiers(n, body)?);
            }
            "partition" => {
                let (k, body) = indexed_body(n, rest)?;
                if k != parts.len() {
                    return err(n, format!("partition {k} out of order"));
                }
                let toks: Vec<&str> = body.split_whitespace().collect();
                let [hs @ .., "budget", b] = toks.as_slice() else {
                    return err(n, "partition line must end with `budget <B>`");
                };
                let hs = hs
                    .iter()
                    .map(|t| parse_num(n, t, "hospital index"))
                    .collect::<Result<_, _>>()?;
                parts.push((k, hs, parse_num(n, b, "budget")?));
            }
            "budget" => budget = Some(parse_num(n, rest.trim(), "budget")?),
            "target" => target = Some(parse_num(n, rest.trim(), "target")?),
            "map" => {
                let rest = rest.trim();
                let (agent, role) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                if role.trim().is_empty() {
                    return err(n, "map line needs an agent and a role");
                }
                map.push((parse_agent(n, agent)?, role.split_whitespace().collect::<Vec<_>>().join(" ")));
            }
            other => return err(n, format!("unknown keyword `{other}`")),
        }
    }

    let to_lists = |v: Vec<Option<Vec<Vec<usize>>>>| -> Vec<PreferenceList> {
        v.into_iter()
            .map(|t| PreferenceList::from_tiers(t.unwrap_or_default()))
            .collect()
    };
    let instance = Instance::new(capacities, to_lists(rlists), to_lists(hlists)).expect("shape checked");
    let partition = (!parts.is_empty()).then(|| PartitionBudgets {
        budgets: parts.iter().map(|p| p.2).collect(),
        parts: parts.into_iter().map(|p| p.1).collect(),
    });
    Ok(Document {
        instance,
        partition,
        budget,
        target,
        map,
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    parse_document(text).map(|d| d.instance)
}

fn write_list(out: &mut String, key: &str, idx: usize, list: &PreferenceList) {
    let _ = write!(out, "{key} {idx}:");
    for tier in list.tiers() {
        if tier.len() == 1 {
            let _ = write!(out, " {}", tier[0]);
        } else {
            out.push_str(" (");
            for a in tier {
                let _ = write!(out, " {a}");
            }
            out.push_str(" )");
        }
    }
    out.push('\n');
}

pub fn serialize_document(doc: &Document) -> String {
    let inst = &doc.instance;
    let mut out = String::new();
    let _ = writeln!(out, "hrcap 1");
    let _ = writeln!(out, "residents {}", inst.num_residents());
    let _ = writeln!(out, "hospitals {}", inst.num_hospitals());
    out.push_str("capacities");
    for c in inst.capacities() {
        let _ = write!(out, " {c}");
    }
    out.push('\n');
    for (i, l) in inst.resident_prefs().iter().enumerate() {
        write_list(&mut out, "rlist", i, l);
    }
    for (j, l) in inst.hospital_prefs().iter().enumerate() {
        write_list(&mut out, "hlist", j, l);
    }
    if let Some(p) = &doc.partition {
        for (k, (hs, b)) in p.parts.iter().zip(&p.budgets).enumerate() {
            let _ = write!(out, "partition {k}:");
            for h in hs {
                let _ = write!(out, " {h}");
            }
            let _ = writeln!(out, " budget {b}");
        }
    }
    if let Some(b) = doc.budget {
        let _ = writeln!(out, "budget {b}");
    }
    if let Some(k) = doc.target {
        let _ = writeln!(out, "target {k}");
    }
    for (agent, role) in &doc.map {
        let _ = writeln!(out, "map {agent} {role}");
    }
    out
}

pub fn serialize_instance(inst: &Instance) -> String {
    serialize_document(&Document::new(inst.clone()))
}

pub fn parse_matching(text: &str, num_residents: usize, num_hospitals: usize) -> Result<Matching, ParseError> {
    let mut m = Matching::empty(num_residents, num_hospitals);
    for (n, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let ["pair", r, h] = toks.as_slice() else {
            return err(n, "expected `pair <r> <h>`");
        };
        let r: usize = parse_num(n, r, "resident index")?;
        let h: usize = parse_num(n, h, "hospital index")?;
        if r >= num_residents {
            return err(n, format!("resident {r} out of range"));
        }
        if h >= num_hospitals {
            return err(n, format!("hospital {h} out of range"));
        }
        if m.hospital_of(r).is_some() {
            return err(n, format!("resident {r} paired twice"));
        }
        m.assign(r, Some(h));
    }
    Ok(m)
}

pub fn serialize_matching(m: &Matching) -> String {
    let mut out = String::new();
    for (r, h) in m.pairs() {
        let _ = writeln!(out, "pair {r} {h}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::builtin_counterexample;

    #[test]
    fn counterexample_round_trips() {
        let inst = builtin_counterexample();
        let text = serialize_instance(&inst);
        assert!(text.starts_with("hrcap 1\nresidents 6\nhospitals 4\ncapacities 1 1 1 3\nrlist 0: 1 0 2 3\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert_eq!(serialize_instance(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn ties_and_annotations_round_trip() {
        let text = "hrcap 1\nresidents 2\nhospitals 2\ncapacities 1 0\nrlist 0: ( 0 1 )\nrlist 1: 1 0\n\
                    hlist 0: 1 0\nhlist 1: ( 0 1 )\npartition 0: 0 1 budget 1\nbudget 3\ntarget 7\nmap r0 copy r1\n";
        let doc = parse_document(text).unwrap();
        assert!(doc.instance.resident_list(0).has_ties());
        assert_eq!(doc.partition, Some(PartitionBudgets::single(2, 1)));
        assert_eq!(doc.budget, Some(3));
        assert_eq!(doc.target, Some(7));
        assert_eq!(doc.map, vec![(AgentId::resident(0), "copy r1".to_string())]);
        assert_eq!(serialize_document(&doc), text);
    }

    #[test]
    fn compact_parentheses_and_comments_parse() {
        let text = "# header\nhrcap 1\nresidents 1\nhospitals 2\ncapacities 1 1\nrlist 0: (0 1) # tie\nhlist 0: 0\nhlist 1: 0\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.resident_list(0).tiers(), &[vec![0, 1]]);
    }

    #[test]
    fn missing_list_is_empty() {
        let inst = parse_instance("hrcap 1\nresidents 1\nhospitals 1\ncapacities 1\n").unwrap();
        assert!(inst.resident_list(0).is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_instance("").unwrap_err().line, 1);
        let e = parse_instance("hrcap 1\nresidents 1\nhospitals 1\ncapacities 1 2\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse_instance("hrcap 1\nresidents 1\nhospitals 1\ncapacities 1\nrlist 0: 0\nrlist 0: 0\n").unwrap_err();
        assert_eq!(e.line, 6);
        let e = parse_instance("hrcap 1\nresidents 1\nhospitals 1\ncapacities 1\nrlist 0: ( 0\n").unwrap_err();
        assert_eq!(e.line, 5);
    }

    #[test]
    fn matching_round_trip() {
        let m = Matching::from_pairs(3, 2, [(0, 1), (2, 0)]).unwrap();
        let text = serialize_matching(&m);
        assert_eq!(text, "pair 0 1\npair 2 0\n");
        assert_eq!(parse_matching(&text, 3, 2).unwrap(), m);
        assert!(parse_matching("pair 0 5\n", 3, 2).is_err());
        assert!(parse_matching("pair 0 1\npair 0 0\n", 3, 2).is_err());
    }
}
