use crate::instance::{validate_instance, Instance};

/// Source residents whose list starts with a tie, ascending.
pub fn tied_residents(inst: &Instance) -> Vec<usize> {
    (0..inst.num_residents())
        .filter(|&i| inst.resident_list(i).has_ties())
        .collect()
}

/// Ties only in resident lists, at most one per list, of length 2, at the
/// head; every capacity 1 and as many residents as hospitals.
pub fn check_normal_form(inst: &Instance) -> bool {
    normal_form_violation(inst).is_none()
}

pub(crate) fn normal_form_violation(inst: &Instance) -> Option<String> {
    if !validate_instance(inst).is_empty() {
        return Some("instance fails validation".into());
    }
    if inst.num_residents() != inst.num_hospitals() {
        return Some(format!(
            "{} residents but {} hospitals",
            inst.num_residents(),
            inst.num_hospitals()
        ));
    }
    if let Some(j) = inst.capacities().iter().position(|&c| c != 1) {
        return Some(format!("hospital h{j} has capacity {}", inst.capacity(j)));
    }
    if let Some(j) = (0..inst.num_hospitals()).find(|&j| inst.hospital_list(j).has_ties()) {
        return Some(format!("hospital h{j} has a tie"));
    }
    for i in 0..inst.num_residents() {
        let tiers = inst.resident_list(i).tiers();
        let bad_tail = tiers.iter().skip(1).any(|t| t.len() > 1);
        let bad_head = tiers.first().is_some_and(|t| t.len() > 2);
        if bad_tail || bad_head {
            return Some(format!("resident r{i} has a tie that is not a head pair"));
        }
    }
    None
}

/// Source form for the hospital-splitting gadget: strict resident lists and
/// at most one hospital tie per list, of length 2, at the head.
pub fn check_t4_source(inst: &Instance) -> Result<(), String> {
    if !validate_instance(inst).is_empty() {
        return Err("instance fails validation".into());
    }
    if let Some(i) = (0..inst.num_residents()).find(|&i| inst.resident_list(i).has_ties()) {
        return Err(format!("resident r{i} has a tie"));
    }
    for j in 0..inst.num_hospitals() {
        let tiers = inst.hospital_list(j).tiers();
        if tiers.iter().skip(1).any(|t| t.len() > 1) || tiers.first().is_some_and(|t| t.len() > 2) {
            return Err(format!("hospital h{j} has a tie that is not a head pair"));
        }
    }
    Ok(())
}

/// Source form for the weak-stability amplifier: unit capacities, as many
/// residents as hospitals, strict hospital lists, and at most one resident
/// tie per list, of length 2, anywhere in the list.
pub fn check_c2_source(inst: &Instance) -> Result<(), String> {
    if !validate_instance(inst).is_empty() {
        return Err("instance fails validation".into());
    }
    if inst.num_residents() != inst.num_hospitals() {
        return Err("needs as many residents as hospitals".into());
    }
    if let Some(j) = inst.capacities().iter().position(|&c| c != 1) {
        return Err(format!("hospital h{j} has capacity {}", inst.capacity(j)));
    }
    if let Some(j) = (0..inst.num_hospitals()).find(|&j| inst.hospital_list(j).has_ties()) {
        return Err(format!("hospital h{j} has a tie"));
    }
    for i in 0..inst.num_residents() {
        let ties: Vec<usize> = inst
            .resident_list(i)
            .tiers()
            .iter()
            .map(Vec::len)
            .filter(|&l| l > 1)
            .collect();
        if ties.len() > 1 || ties.iter().any(|&l| l != 2) {
            return Err(format!("resident r{i} needs at most one tie of length 2"));
        }
    }
    Ok(())
}
