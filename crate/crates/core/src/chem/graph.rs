use std::collections::BTreeMap;

use thiserror::Error;

use super::Element;

/// Tetrahedral chirality mark carried through from input; no stereochemical
/// semantics are attached to it in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chirality {
    Clockwise,
    Counterclockwise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    /// Exact hydrogen count attached to this atom.
    pub h_count: u8,
    pub chirality: Option<Chirality>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom {
            element,
            charge: 0,
            h_count: 0,
            chirality: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("atom index {0} out of range")]
    AtomOutOfRange(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("self bond on atom {0}")]
    SelfBond(usize),
    #[error("bond order {0} outside 1..=3")]
    BadBondOrder(u8),
    #[error("atom {index} exceeds valence: bonds {bond_sum} + H {h_count} > capacity {capacity}")]
    ValenceExceeded {
        index: usize,
        bond_sum: u8,
        h_count: u8,
        capacity: u8,
    },
    #[error("charge {charge} on {element} is outside the subset")]
    UnsupportedCharge { element: Element, charge: i8 },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no atoms")]
    Empty,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("count overflow in formula")]
    Overflow,
}

/// A molecular graph over the supported subset. Hydrogens are stored as
/// per-atom counts, never as graph nodes, unless explicitly added as atoms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Bond indices incident to each atom, in insertion order.
    adjacency: Vec<Vec<usize>>,
}

impl MolecularGraph {
    pub fn new() -> MolecularGraph {
        MolecularGraph::default()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut Atom {
        &mut self.atoms[i]
    }

    pub fn add_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.adjacency.push(Vec::new());
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: u8) -> Result<usize, GraphError> {
        if a == b {
            return Err(GraphError::SelfBond(a));
        }
        for &i in [a, b].iter() {
            if i >= self.atoms.len() {
                return Err(GraphError::AtomOutOfRange(i));
            }
        }
        if !(1..=3).contains(&order) {
            return Err(GraphError::BadBondOrder(order));
        }
        if self.bond_between(a, b).is_some() {
            return Err(GraphError::DuplicateBond(a, b));
        }
        self.bonds.push(Bond { a, b, order });
        let idx = self.bonds.len() - 1;
        self.adjacency[a].push(idx);
        self.adjacency[b].push(idx);
        Ok(idx)
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency.get(a)?.iter().copied().find(|&i| {
            let bond = self.bonds[i];
            (bond.a == a && bond.b == b) || (bond.a == b && bond.b == a)
        })
    }

    pub fn bond_order_mut(&mut self, idx: usize) -> &mut u8 {
        &mut self.bonds[idx].order
    }

    /// Neighbors of `i` as (atom index, bond order), in insertion order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.adjacency[i].iter().map(move |&bi| {
            let b = self.bonds[bi];
            (if b.a == i { b.b } else { b.a }, b.order)
        })
    }

    pub fn bond_order_sum(&self, i: usize) -> u8 {
        self.neighbors(i).map(|(_, o)| o).sum()
    }

    /// Remove one atom and all bonds touching it. Returns a mapping from old
    /// atom indices to new ones (`None` for the removed atom).
    pub fn remove_atom(&mut self, i: usize) -> Vec<Option<usize>> {
        let n = self.atoms.len();
        let mut map: Vec<Option<usize>> = Vec::with_capacity(n);
        let mut next = 0usize;
        for old in 0..n {
            if old == i {
                map.push(None);
            } else {
                map.push(Some(next));
                next += 1;
            }
        }
        self.atoms.remove(i);
        let old_bonds = std::mem::take(&mut self.bonds);
        self.adjacency = vec![Vec::new(); self.atoms.len()];
        for bond in old_bonds {
            if let (Some(a), Some(b)) = (map[bond.a], map[bond.b]) {
                self.bonds.push(Bond {
                    a,
                    b,
                    order: bond.order,
                });
                let idx = self.bonds.len() - 1;
                self.adjacency[a].push(idx);
                self.adjacency[b].push(idx);
            }
        }
        map
    }

    /// Copy all atoms and bonds of `other` into `self`, skipping the atoms
    /// listed in `skip`. Returns the index mapping for `other`'s atoms.
    pub fn merge(&mut self, other: &MolecularGraph, skip: &[usize]) -> Vec<Option<usize>> {
        let mut map: Vec<Option<usize>> = Vec::with_capacity(other.atoms.len());
        for (i, atom) in other.atoms.iter().enumerate() {
            if skip.contains(&i) {
                map.push(None);
            } else {
                map.push(Some(self.add_atom(atom.clone())));
            }
        }
        for bond in &other.bonds {
            if let (Some(a), Some(b)) = (map[bond.a], map[bond.b]) {
                self.add_bond(a, b, bond.order)
                    .expect("merge of valid graph cannot duplicate bonds");
            }
        }
        map
    }

    /// Check every atom against the subset capacity table.
    pub fn validate_valence(&self) -> Result<(), GraphError> {
        for (i, atom) in self.atoms.iter().enumerate() {
            let capacity = atom.element.capacity(atom.charge).ok_or({
                GraphError::UnsupportedCharge {
                    element: atom.element,
                    charge: atom.charge,
                }
            })?;
            let bond_sum = self.bond_order_sum(i);
            if bond_sum.saturating_add(atom.h_count) > capacity {
                return Err(GraphError::ValenceExceeded {
                    index: i,
                    bond_sum,
                    h_count: atom.h_count,
                    capacity,
                });
            }
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for (v, _) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.atoms.len()
    }

    /// Number of independent cycles (E - V + components).
    pub fn ring_count(&self) -> usize {
        let mut seen = vec![false; self.atoms.len()];
        let mut components = 0usize;
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        self.bonds.len() + components - self.atoms.len()
    }

    /// Element counts including hydrogens from per-atom counts.
    pub fn element_counts(&self) -> BTreeMap<Element, u32> {
        let mut counts: BTreeMap<Element, u32> = BTreeMap::new();
        for atom in &self.atoms {
            *counts.entry(atom.element).or_insert(0) += 1;
            if atom.h_count > 0 {
                *counts.entry(Element::H).or_insert(0) += atom.h_count as u32;
            }
        }
        counts
    }

    /// Molecular formula in Hill order (C, H, then alphabetical).
    pub fn formula(&self) -> String {
        let counts = self.element_counts();
        let mut out = String::new();
        let mut push = |el: Element, n: u32| {
            if n == 0 {
                return;
            }
            out.push_str(el.symbol());
            if n > 1 {
                out.push_str(&n.to_string());
            }
        };
        push(Element::C, counts.get(&Element::C).copied().unwrap_or(0));
        push(Element::H, counts.get(&Element::H).copied().unwrap_or(0));
        let mut rest: Vec<(Element, u32)> = counts
            .iter()
            .filter(|(e, _)| **e != Element::C && **e != Element::H)
            .map(|(e, n)| (*e, *n))
            .collect();
        rest.sort_by_key(|(e, _)| e.symbol());
        for (e, n) in rest {
            push(e, n);
        }
        out
    }

    pub fn molecular_weight(&self) -> f64 {
        self.element_counts()
            .iter()
            .map(|(e, n)| e.atomic_weight() * *n as f64)
            .sum()
    }

    pub fn net_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }
}

/// One ring-closure bond attached to the later-visited endpoint of a
/// depth-first traversal.
#[derive(Debug, Clone, Copy)]
pub struct RingClosure {
    pub to: usize,
    pub order: u8,
}

/// Depth-first serialization plan shared by the SMILES writer and the
/// SELFIES encoder: a spanning tree rooted at atom 0 plus ring closures.
#[derive(Debug, Clone)]
pub struct TraversalPlan {
    /// Atoms in visit order.
    pub order: Vec<usize>,
    /// Visit position of each atom.
    pub position: Vec<usize>,
    /// Tree children of each atom, in adjacency order.
    pub children: Vec<Vec<(usize, u8)>>,
    /// Bond order to the tree parent (root has none).
    pub parent_bond: Vec<Option<u8>>,
    /// Ring closures listed at the later endpoint.
    pub closures: Vec<Vec<RingClosure>>,
}

impl TraversalPlan {
    pub fn build(graph: &MolecularGraph) -> Result<TraversalPlan, GraphError> {
        if graph.atom_count() == 0 {
            return Err(GraphError::Empty);
        }
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let n = graph.atom_count();
        let mut plan = TraversalPlan {
            order: Vec::with_capacity(n),
            position: vec![usize::MAX; n],
            children: vec![Vec::new(); n],
            parent_bond: vec![None; n],
            closures: vec![Vec::new(); n],
        };
        let mut visited = vec![false; n];
        let mut bond_used = vec![false; graph.bond_count()];
        // Iterative DFS with an edge cursor per frame; edges are classified
        // when the cursor reaches them, so each bond becomes exactly one
        // tree edge or one ring closure.
        visited[0] = true;
        plan.position[0] = 0;
        plan.order.push(0);
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some(frame) = stack.last_mut() {
            let u = frame.0;
            let cursor = frame.1;
            if cursor >= graph.adjacency[u].len() {
                stack.pop();
                continue;
            }
            frame.1 += 1;
            let bi = graph.adjacency[u][cursor];
            if bond_used[bi] {
                continue;
            }
            bond_used[bi] = true;
            let bond = graph.bonds()[bi];
            let v = if bond.a == u { bond.b } else { bond.a };
            if visited[v] {
                // Back edge: record the closure at the later endpoint (u).
                plan.closures[u].push(RingClosure {
                    to: v,
                    order: bond.order,
                });
            } else {
                visited[v] = true;
                plan.position[v] = plan.order.len();
                plan.order.push(v);
                plan.children[u].push((v, bond.order));
                plan.parent_bond[v] = Some(bond.order);
                stack.push((v, 0));
            }
        }
        Ok(plan)
    }
}
