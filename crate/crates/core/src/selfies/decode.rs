use crate::chem::{Atom, MolecularGraph};

use super::token::{index_value, split_tokens, SelfiesToken};
use super::SelfiesError;

struct Stream<'a> {
    raw: Vec<&'a str>,
    parsed: Vec<SelfiesToken>,
    pos: usize,
}

impl<'a> Stream<'a> {
    fn next(&mut self) -> Option<SelfiesToken> {
        let t = self.parsed.get(self.pos).copied();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn remaining(&self) -> usize {
        self.parsed.len() - self.pos
    }

    fn skip(&mut self, n: usize) {
        self.pos = (self.pos + n).min(self.parsed.len());
    }

    /// Read up to `digits` index symbols; missing symbols contribute zero.
    fn read_index(&mut self, digits: u8) -> usize {
        let mut q = 0usize;
        for _ in 0..digits {
            let v = self.raw.get(self.pos).map(|t| index_value(t)).unwrap_or(0);
            if self.pos < self.parsed.len() {
                self.pos += 1;
            }
            q = q * 16 + v;
        }
        q
    }
}

struct Deriver {
    graph: MolecularGraph,
    /// Atom indices in placement order.
    placed: Vec<usize>,
    /// Placement position of each atom.
    place_of: Vec<usize>,
    /// Remaining bonding capacity per atom.
    cap_left: Vec<u8>,
    /// Atoms whose token carried an explicit hydrogen count or a charge;
    /// their hydrogen counts are final, the rest get SMILES implicit fill.
    explicit: Vec<bool>,
}

impl Deriver {
    fn place(&mut self, element: crate::chem::Element, h: Option<u8>, charge: i8) -> usize {
        let cap = element.capacity(charge).expect("token validated") - h.unwrap_or(0);
        let mut atom = Atom::new(element);
        atom.charge = charge;
        atom.h_count = h.unwrap_or(0);
        let idx = self.graph.add_atom(atom);
        self.placed.push(idx);
        self.place_of.push(self.placed.len() - 1);
        self.cap_left.push(cap);
        self.explicit.push(h.is_some() || charge != 0);
        idx
    }

    /// Derive one chain. `attach` is the atom the first bond connects to and
    /// `first_cap` limits that first bond's order (branch bookkeeping).
    /// Consumes at most `budget` tokens from the stream.
    fn derive_chain(
        &mut self,
        stream: &mut Stream,
        budget: usize,
        attach: Option<usize>,
        first_cap: u8,
    ) {
        let mut current = attach;
        let mut first_bond_pending = attach.is_some();
        let mut consumed = 0usize;
        while consumed < budget {
            let Some(token) = stream.next() else { break };
            consumed += 1;
            match token {
                SelfiesToken::Atom {
                    order,
                    element,
                    h_count,
                    charge,
                } => {
                    match current {
                        None => {
                            let idx = self.place(element, h_count, charge);
                            current = Some(idx);
                            if self.cap_left[idx] == 0 {
                                break;
                            }
                        }
                        Some(cur) => {
                            let bond_cap = if first_bond_pending {
                                first_cap.min(self.cap_left[cur])
                            } else {
                                self.cap_left[cur]
                            };
                            let new_cap = element.capacity(charge).expect("validated")
                                - h_count.unwrap_or(0);
                            let o = order.min(bond_cap).min(new_cap);
                            if o == 0 {
                                // Atom cannot bond here; token is ignored.
                                continue;
                            }
                            let idx = self.place(element, h_count, charge);
                            self.graph
                                .add_bond(cur, idx, o)
                                .expect("fresh atom cannot duplicate a bond");
                            self.cap_left[cur] -= o;
                            self.cap_left[idx] -= o;
                            first_bond_pending = false;
                            current = Some(idx);
                            if self.cap_left[idx] == 0 {
                                break;
                            }
                        }
                    }
                }
                SelfiesToken::Branch { order, digits } => {
                    let cur = match current {
                        Some(c) if self.cap_left[c] > 1 && !first_bond_pending => c,
                        _ => {
                            // Not enough capacity to branch; the index
                            // symbols are consumed and ignored.
                            let n = (digits as usize).min(budget - consumed);
                            stream.skip(n);
                            consumed += n;
                            continue;
                        }
                    };
                    let take = (digits as usize).min(budget - consumed);
                    let q = if take == digits as usize {
                        stream.read_index(digits)
                    } else {
                        stream.skip(take);
                        0
                    };
                    consumed += take;
                    if take < digits as usize {
                        continue;
                    }
                    let branch_budget = (q + 1).min(budget - consumed).min(stream.remaining());
                    let before = stream.pos;
                    let branch_cap = order.min(self.cap_left[cur] - 1);
                    self.derive_chain(stream, branch_budget, Some(cur), branch_cap);
                    let used = stream.pos - before;
                    if used < branch_budget {
                        stream.skip(branch_budget - used);
                    }
                    consumed += branch_budget;
                    if self.cap_left[cur] == 0 {
                        break;
                    }
                }
                SelfiesToken::Ring { order, digits } => {
                    let cur = match current {
                        Some(c) => c,
                        None => {
                            let n = (digits as usize).min(budget - consumed);
                            stream.skip(n);
                            consumed += n;
                            continue;
                        }
                    };
                    let take = (digits as usize).min(budget - consumed);
                    let q = if take == digits as usize {
                        stream.read_index(digits)
                    } else {
                        stream.skip(take);
                        0
                    };
                    consumed += take;
                    if take < digits as usize {
                        continue;
                    }
                    let cur_pos = self.place_of[cur];
                    let target_pos = cur_pos.saturating_sub(q + 1);
                    let target = self.placed[target_pos];
                    if target == cur {
                        continue;
                    }
                    let bond_cap = if first_bond_pending {
                        first_cap.min(self.cap_left[cur])
                    } else {
                        self.cap_left[cur]
                    };
                    match self.graph.bond_between(cur, target) {
                        Some(bi) => {
                            // Parallel ring bond: raise the existing order.
                            let existing = self.graph.bonds()[bi].order;
                            let delta = order
                                .min(3 - existing)
                                .min(bond_cap)
                                .min(self.cap_left[target]);
                            if delta == 0 {
                                continue;
                            }
                            *self.graph.bond_order_mut(bi) += delta;
                            self.cap_left[cur] -= delta;
                            self.cap_left[target] -= delta;
                        }
                        None => {
                            let o = order.min(bond_cap).min(self.cap_left[target]);
                            if o == 0 {
                                continue;
                            }
                            self.graph
                                .add_bond(cur, target, o)
                                .expect("checked for existing bond");
                            self.cap_left[cur] -= o;
                            self.cap_left[target] -= o;
                        }
                    }
                    if self.cap_left[cur] == 0 {
                        break;
                    }
                }
            }
        }
    }
}

/// Decode a SELFIES string into a molecular graph by the derivation rules.
/// Every inventory token string decodes; the result may be empty when no
/// atom token could be placed.
pub fn selfies_to_graph(s: &str) -> Result<MolecularGraph, SelfiesError> {
    let raw = split_tokens(s)?;
    let mut parsed = Vec::with_capacity(raw.len());
    for t in &raw {
        match SelfiesToken::parse(t) {
            Some(p) => parsed.push(p),
            None => return Err(SelfiesError::UnsupportedToken((*t).to_string())),
        }
    }
    let budget = parsed.len();
    let mut stream = Stream {
        raw,
        parsed,
        pos: 0,
    };
    let mut deriver = Deriver {
        graph: MolecularGraph::new(),
        placed: Vec::new(),
        place_of: Vec::new(),
        cap_left: Vec::new(),
        explicit: Vec::new(),
    };
    deriver.derive_chain(&mut stream, budget, None, 0);
    // Implicit hydrogen fill for atoms written without explicit counts.
    for i in 0..deriver.graph.atom_count() {
        if !deriver.explicit[i] {
            let sum = deriver.graph.bond_order_sum(i);
            let el = deriver.graph.atom(i).element;
            deriver.graph.atom_mut(i).h_count = el.implied_hydrogens(sum);
        }
    }
    deriver
        .graph
        .validate_valence()
        .expect("derivation respects capacities");
    Ok(deriver.graph)
}

/// Decode a SELFIES string and serialize the result as SMILES. An empty
/// derivation yields an empty string.
pub fn selfies_to_smiles(s: &str) -> Result<String, SelfiesError> {
    let graph = selfies_to_graph(s)?;
    if graph.atom_count() == 0 {
        return Ok(String::new());
    }
    Ok(crate::chem::write_smiles(&graph)?)
}
