use crate::chem::{parse_smiles, Element, MolecularGraph, TraversalPlan};

use super::token::{digits_for, encode_index};
use super::SelfiesError;

fn bond_prefix(order: u8) -> &'static str {
    match order {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

fn atom_token(graph: &MolecularGraph, idx: usize, parent_order: Option<u8>) -> String {
    let atom = graph.atom(idx);
    let prefix = bond_prefix(parent_order.unwrap_or(1));
    let bare_ok =
        atom.charge == 0 && atom.h_count == atom.element.implied_hydrogens(graph.bond_order_sum(idx));
    if bare_ok {
        format!("[{}{}]", prefix, atom.element.symbol())
    } else {
        let mut s = format!("[{}{}", prefix, atom.element.symbol());
        s.push('H');
        s.push_str(&atom.h_count.to_string());
        if atom.charge != 0 {
            s.push(if atom.charge > 0 { '+' } else { '-' });
            s.push_str(&atom.charge.abs().to_string());
        }
        s.push(']');
        s
    }
}

fn encode_subtree(
    plan: &TraversalPlan,
    graph: &MolecularGraph,
    u: usize,
    parent_order: Option<u8>,
    out: &mut Vec<String>,
) {
    out.push(atom_token(graph, u, parent_order));
    for rc in &plan.closures[u] {
        let q = plan.position[u] - plan.position[rc.to] - 1;
        let digits = digits_for(q);
        out.push(format!("[{}Ring{}]", bond_prefix(rc.order), digits));
        out.extend(encode_index(q, digits).into_iter().map(str::to_string));
    }
    let kids = &plan.children[u];
    for (i, (child, order)) in kids.iter().enumerate() {
        if i + 1 == kids.len() {
            encode_subtree(plan, graph, *child, Some(*order), out);
        } else {
            let mut sub = Vec::new();
            encode_subtree(plan, graph, *child, Some(*order), &mut sub);
            let q = sub.len() - 1;
            let digits = digits_for(q);
            out.push(format!("[{}Branch{}]", bond_prefix(*order), digits));
            out.extend(encode_index(q, digits).into_iter().map(str::to_string));
            out.append(&mut sub);
        }
    }
}

/// Encode a connected, valence-legal graph as a SELFIES string whose
/// derivation reproduces the graph. Chirality marks are dropped.
pub fn graph_to_selfies(graph: &MolecularGraph) -> Result<String, SelfiesError> {
    if graph.atom_count() == 0 {
        return Ok(String::new());
    }
    graph.validate_valence()?;
    for atom in graph.atoms() {
        if atom.element == Element::H && atom.charge != 0 {
            return Err(SelfiesError::UnsupportedFeature(
                "charged hydrogen".to_string(),
            ));
        }
    }
    let plan = TraversalPlan::build(graph)?;
    let mut out = Vec::with_capacity(graph.atom_count() * 2);
    encode_subtree(&plan, graph, plan.order[0], None, &mut out);
    Ok(out.concat())
}

/// Convert a SMILES string in the supported subset to SELFIES.
pub fn smiles_to_selfies(s: &str) -> Result<String, SelfiesError> {
    let graph =
        parse_smiles(s).map_err(|e| SelfiesError::UnsupportedFeature(e.to_string()))?;
    graph_to_selfies(&graph)
}
