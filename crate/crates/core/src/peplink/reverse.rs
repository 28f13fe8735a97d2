use crate::chem::{Atom, Element, MolecularGraph};
use crate::selfies::selfies_to_graph;

use super::isomorphism::graphs_match;
use super::registry::ResidueRegistry;
use super::{PeplinkError, PeptideSpec};

/// Whether the atom is a carbonyl carbon (double-bonded to oxygen).
fn is_carbonyl_carbon(g: &MolecularGraph, i: usize) -> bool {
    g.atom(i).element == Element::C
        && g.neighbors(i)
            .any(|(j, o)| o == 2 && g.atom(j).element == Element::O)
}

/// Candidate N-terminal amines: N-H nitrogens not attached to any carbonyl
/// carbon (which would make them amides or modified termini).
fn terminal_amine_candidates(g: &MolecularGraph) -> Vec<usize> {
    (0..g.atom_count())
        .filter(|&i| {
            let a = g.atom(i);
            a.element == Element::N
                && a.h_count >= 1
                && a.charge == 0
                && !g.neighbors(i).any(|(j, _)| is_carbonyl_carbon(g, j))
        })
        .collect()
}

struct BackboneUnit {
    nitrogen: usize,
    alpha: usize,
    carbonyl: usize,
}

/// Walk the backbone N -> C from a candidate terminal amine: each unit is
/// nitrogen, alpha carbon, carbonyl carbon; the carbonyl either carries the
/// C-terminal hydroxyl or bonds the next nitrogen.
fn walk_backbone(g: &MolecularGraph, start_n: usize) -> Option<Vec<BackboneUnit>> {
    let mut units = Vec::new();
    let mut nitrogen = start_n;
    let mut prev_carbonyl: Option<usize> = None;
    loop {
        // The alpha carbon: a carbon neighbor of the nitrogen, other than
        // the previous carbonyl, that itself neighbors a carbonyl carbon.
        let alphas: Vec<usize> = g
            .neighbors(nitrogen)
            .filter(|&(j, _)| {
                Some(j) != prev_carbonyl
                    && g.atom(j).element == Element::C
                    && g.neighbors(j)
                        .any(|(k, _)| k != nitrogen && is_carbonyl_carbon(g, k))
            })
            .map(|(j, _)| j)
            .collect();
        if alphas.len() != 1 {
            return None;
        }
        let alpha = alphas[0];
        let carbonyls: Vec<usize> = g
            .neighbors(alpha)
            .filter(|&(j, _)| j != nitrogen && is_carbonyl_carbon(g, j))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(j, _)| j)
            .collect();
        if carbonyls.len() != 1 {
            return None;
        }
        let carbonyl = carbonyls[0];
        units.push(BackboneUnit {
            nitrogen,
            alpha,
            carbonyl,
        });
        // Classify the carbonyl's third substituent.
        let mut next_nitrogen = None;
        let mut hydroxyl = None;
        for (j, order) in g.neighbors(carbonyl) {
            if j == alpha || order == 2 {
                continue;
            }
            match g.atom(j).element {
                Element::O if g.atom(j).h_count >= 1 => hydroxyl = Some(j),
                Element::N => next_nitrogen = Some(j),
                _ => return None,
            }
        }
        match (hydroxyl, next_nitrogen) {
            (Some(_), None) => return Some(units),
            (None, Some(n)) => {
                prev_carbonyl = Some(carbonyl);
                nitrogen = n;
            }
            _ => return None,
        }
    }
}

/// Extract residue i as a free molecule: atoms of its component after
/// cutting the backbone amides, with the condensation partners restored
/// (one H back on the amide nitrogen, hydroxyl back on the carbonyl).
fn residue_molecule(
    g: &MolecularGraph,
    units: &[BackboneUnit],
    index: usize,
) -> MolecularGraph {
    // Collect the atoms reachable from the unit's alpha carbon without
    // crossing the two cut bonds (prev carbonyl - N, carbonyl - next N).
    let unit = &units[index];
    let blocked_pairs: Vec<(usize, usize)> = units
        .windows(2)
        .map(|w| (w[0].carbonyl, w[1].nitrogen))
        .collect();
    let mut seen = vec![false; g.atom_count()];
    let mut stack = vec![unit.alpha];
    seen[unit.alpha] = true;
    while let Some(u) = stack.pop() {
        for (v, _) in g.neighbors(u) {
            let cut = blocked_pairs
                .iter()
                .any(|&(a, b)| (u == a && v == b) || (u == b && v == a));
            if !cut && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    let mut out = MolecularGraph::new();
    let mut map = vec![usize::MAX; g.atom_count()];
    for i in 0..g.atom_count() {
        if seen[i] {
            map[i] = out.add_atom(g.atom(i).clone());
        }
    }
    for bond in g.bonds() {
        if seen[bond.a] && seen[bond.b] {
            let cut = blocked_pairs
                .iter()
                .any(|&(a, b)| (bond.a, bond.b) == (a, b) || (bond.b, bond.a) == (a, b));
            if !cut {
                out.add_bond(map[bond.a], map[bond.b], bond.order)
                    .expect("copied bonds are unique");
            }
        }
    }
    // Restore the condensation partners.
    if index > 0 {
        out.atom_mut(map[unit.nitrogen]).h_count += 1;
    }
    if index + 1 < units.len() {
        let mut oh = Atom::new(Element::O);
        oh.h_count = 1;
        let o = out.add_atom(oh);
        out.add_bond(map[unit.carbonyl], o, 1)
            .expect("carbonyl had no hydroxyl");
    }
    out
}

/// Match one residue molecule against the registry; canonical codes win
/// ties, multiple noncanonical matches are ambiguous.
fn match_residue(
    molecule: &MolecularGraph,
    registry: &ResidueRegistry,
) -> Result<String, PeplinkError> {
    let formula = molecule.formula();
    let mut canonical_hits = Vec::new();
    let mut other_hits = Vec::new();
    for template in registry.templates() {
        if template.graph.formula() != formula {
            continue;
        }
        if graphs_match(molecule, &template.graph) {
            if template.canonical {
                canonical_hits.push(template.code.clone());
            } else {
                other_hits.push(template.code.clone());
            }
        }
    }
    match (canonical_hits.len(), other_hits.len()) {
        (1, _) => Ok(canonical_hits.pop().unwrap()),
        (0, 1) => Ok(other_hits.pop().unwrap()),
        (0, 0) => Err(PeplinkError::NotAPeptide(format!(
            "residue {formula} matches no registry template"
        ))),
        (0, _) => Err(PeplinkError::AmbiguousDecomposition(format!(
            "residue {formula} matches {}",
            other_hits.join(", ")
        ))),
        _ => Err(PeplinkError::AmbiguousDecomposition(format!(
            "residue {formula} matches multiple canonical codes"
        ))),
    }
}

/// Recover the residue sequence of a linear peptide with free termini by
/// walking the backbone N to C and matching each cut residue against the
/// registry.
pub fn selfies_to_peptide(
    selfies: &str,
    registry: &ResidueRegistry,
) -> Result<PeptideSpec, PeplinkError> {
    let graph = selfies_to_graph(selfies)?;
    if graph.atom_count() == 0 {
        return Err(PeplinkError::NotAPeptide("empty molecule".to_string()));
    }
    let candidates = terminal_amine_candidates(&graph);
    let mut decompositions: Vec<Vec<String>> = Vec::new();
    for start in candidates {
        let Some(units) = walk_backbone(&graph, start) else {
            continue;
        };
        // The walk must account for every atom of the molecule.
        let mut covered = 0usize;
        let mut codes = Vec::with_capacity(units.len());
        let mut ok = true;
        for i in 0..units.len() {
            let molecule = residue_molecule(&graph, &units, i);
            covered += molecule.atom_count();
            match match_residue(&molecule, registry) {
                Ok(code) => codes.push(code),
                Err(PeplinkError::AmbiguousDecomposition(msg)) => {
                    return Err(PeplinkError::AmbiguousDecomposition(msg));
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        // Restored hydroxyls add one atom per cut; discount them.
        let expected = graph.atom_count() + units.len().saturating_sub(1);
        if ok && covered == expected && !decompositions.contains(&codes) {
            decompositions.push(codes);
        }
    }
    match decompositions.len() {
        0 => Err(PeplinkError::NotAPeptide(
            "no backbone walk covers the molecule".to_string(),
        )),
        1 => Ok(PeptideSpec::linear(&decompositions.pop().unwrap())),
        _ => Err(PeplinkError::AmbiguousDecomposition(format!(
            "{} distinct backbone readings",
            decompositions.len()
        ))),
    }
}
