use crate::chem::MolecularGraph;

fn signature(g: &MolecularGraph, i: usize) -> (u8, i8, u8, usize) {
    let a = g.atom(i);
    let elem = a.element as u8;
    (elem, a.charge, a.h_count, g.neighbors(i).count())
}

/// Exact graph isomorphism on (element, charge, hydrogen count) labels and
/// bond orders; chirality marks are ignored. Backtracking with degree
/// pruning; intended for residue-sized graphs.
pub fn graphs_match(a: &MolecularGraph, b: &MolecularGraph) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let n = a.atom_count();
    if n == 0 {
        return true;
    }
    // Multiset of atom signatures must agree.
    let mut sig_a: Vec<_> = (0..n).map(|i| signature(a, i)).collect();
    let mut sig_b: Vec<_> = (0..n).map(|i| signature(b, i)).collect();
    sig_a.sort_unstable();
    sig_b.sort_unstable();
    if sig_a != sig_b {
        return false;
    }
    // Order the atoms of `a` so each one touches an already-mapped atom,
    // making the bond-consistency check prune early.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        order.push(u);
        for (v, _) in a.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    for (i, seen_flag) in seen.iter_mut().enumerate() {
        if !*seen_flag {
            order.push(i);
            *seen_flag = true;
        }
    }
    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn backtrack(
        a: &MolecularGraph,
        b: &MolecularGraph,
        order: &[usize],
        depth: usize,
        mapping: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        let sig_u = signature(a, u);
        for cand in 0..b.atom_count() {
            if used[cand] || signature(b, cand) != sig_u {
                continue;
            }
            // Every already-mapped neighbor must carry the same bond order.
            let consistent = a.neighbors(u).all(|(v, order_uv)| {
                if mapping[v] == usize::MAX {
                    return true;
                }
                match b.bond_between(cand, mapping[v]) {
                    Some(bi) => b.bonds()[bi].order == order_uv,
                    None => false,
                }
            });
            if !consistent {
                continue;
            }
            mapping[u] = cand;
            used[cand] = true;
            if backtrack(a, b, order, depth + 1, mapping, used) {
                return true;
            }
            mapping[u] = usize::MAX;
            used[cand] = false;
        }
        false
    }
    backtrack(a, b, &order, 0, &mut mapping, &mut used)
}
