use std::collections::HashMap;

use thiserror::Error;

use super::graph::RingClosure;
use super::{Atom, Chirality, Element, GraphError, MolecularGraph, TraversalPlan};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmilesError {
    #[error("unsupported feature at byte {pos}: {what}")]
    Unsupported { pos: usize, what: String },
    #[error("syntax error at byte {pos}: {what}")]
    Syntax { pos: usize, what: String },
    #[error("unbalanced parentheses")]
    UnbalancedParens,
    #[error("ring bond {0} left open")]
    UnclosedRing(u16),
    #[error("ring bond {0} order conflict")]
    RingOrderConflict(u16),
    #[error("empty input")]
    Empty,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    graph: MolecularGraph,
    /// Atoms written in bracket form carry their hydrogen count explicitly.
    bracketed: Vec<bool>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn unsupported(&self, what: &str) -> SmilesError {
        SmilesError::Unsupported {
            pos: self.pos,
            what: what.to_string(),
        }
    }

    fn syntax(&self, what: &str) -> SmilesError {
        SmilesError::Syntax {
            pos: self.pos,
            what: what.to_string(),
        }
    }

    /// Parse one atom starting at the cursor, if present.
    fn try_atom(&mut self) -> Result<Option<usize>, SmilesError> {
        let Some(b) = self.peek() else {
            return Ok(None);
        };
        match b {
            b'[' => {
                self.pos += 1;
                let atom = self.bracket_atom()?;
                let idx = self.graph.add_atom(atom);
                self.bracketed.push(true);
                debug_assert_eq!(self.bracketed.len(), self.graph.atom_count());
                Ok(Some(idx))
            }
            b'B' if self.bytes.get(self.pos + 1) == Some(&b'r') => {
                self.pos += 2;
                Ok(Some(self.push_organic(Element::Br)))
            }
            b'C' if self.bytes.get(self.pos + 1) == Some(&b'l') => {
                self.pos += 2;
                Ok(Some(self.push_organic(Element::Cl)))
            }
            b'C' | b'N' | b'O' | b'S' | b'P' | b'F' | b'I' => {
                self.pos += 1;
                let el = Element::from_symbol(std::str::from_utf8(&[b][..]).unwrap()).unwrap();
                Ok(Some(self.push_organic(el)))
            }
            b'b' | b'c' | b'n' | b'o' | b's' | b'p' => {
                Err(self.unsupported("aromatic atoms; provide a Kekule structure"))
            }
            b'B' => Err(self.unsupported("element B")),
            _ => Ok(None),
        }
    }

    fn push_organic(&mut self, element: Element) -> usize {
        let idx = self.graph.add_atom(Atom::new(element));
        self.bracketed.push(false);
        idx
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        if self.peek().map(|b| b.is_ascii_digit()) == Some(true) {
            return Err(self.unsupported("isotope specification"));
        }
        // Element symbol: one uppercase letter plus optional lowercase.
        let start = self.pos;
        let first = self.bump().ok_or_else(|| self.syntax("unterminated bracket atom"))?;
        if !first.is_ascii_uppercase() {
            return Err(self.unsupported("bracket atom element"));
        }
        let mut sym = String::new();
        sym.push(first as char);
        if let Some(b) = self.peek() {
            if b.is_ascii_lowercase() {
                // Two-letter symbol candidate (Cl, Br, ...); anything else
                // lowercase is an element outside the subset.
                let two = format!("{}{}", first as char, b as char);
                if Element::from_symbol(&two).is_some() {
                    sym = two;
                    self.pos += 1;
                } else {
                    return Err(SmilesError::Unsupported {
                        pos: start,
                        what: format!("element {two}"),
                    });
                }
            }
        }
        let element = Element::from_symbol(&sym).ok_or_else(|| SmilesError::Unsupported {
            pos: start,
            what: format!("element {sym}"),
        })?;
        let mut atom = Atom::new(element);
        // Chirality.
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                atom.chirality = Some(Chirality::Clockwise);
            } else {
                atom.chirality = Some(Chirality::Counterclockwise);
            }
        }
        // Hydrogen count.
        if self.peek() == Some(b'H') {
            self.pos += 1;
            let mut count = 1u8;
            if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                self.pos += 1;
                count = d - b'0';
            }
            atom.h_count = count;
        }
        // Charge.
        match self.peek() {
            Some(b'+') | Some(b'-') => {
                let sign: i8 = if self.bump() == Some(b'+') { 1 } else { -1 };
                let mut magnitude = 1i8;
                if let Some(d) = self.peek().filter(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                    magnitude = (d - b'0') as i8;
                } else if self.peek() == Some(b'+') && sign == 1
                    || self.peek() == Some(b'-') && sign == -1
                {
                    return Err(self.unsupported("charge magnitude above 1"));
                }
                if magnitude > 1 {
                    return Err(self.unsupported("charge magnitude above 1"));
                }
                atom.charge = sign * magnitude;
            }
            _ => {}
        }
        if self.peek() == Some(b':') {
            return Err(self.unsupported("atom class"));
        }
        if self.bump() != Some(b']') {
            return Err(self.syntax("expected ] to close bracket atom"));
        }
        Ok(atom)
    }
}

/// Parse a SMILES string over the supported subset into a molecular graph.
///
/// Cis/trans slashes are read as single bonds and tetrahedral marks are
/// recorded on the atom; both are otherwise ignored. Aromatic (lowercase)
/// atoms, isotopes, multi-fragment dots, and charges beyond +-1 are rejected.
pub fn parse_smiles(input: &str) -> Result<MolecularGraph, SmilesError> {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        bytes: trimmed.as_bytes(),
        pos: 0,
        graph: MolecularGraph::new(),
        bracketed: Vec::new(),
    };
    let mut prev: Option<usize> = None;
    let mut pending: Option<u8> = None;
    let mut stack: Vec<usize> = Vec::new();
    let mut ring_open: HashMap<u16, (usize, Option<u8>)> = HashMap::new();

    loop {
        if let Some(idx) = p.try_atom()? {
            if let Some(from) = prev {
                let order = pending.take().unwrap_or(1);
                p.graph.add_bond(from, idx, order)?;
            } else if pending.is_some() {
                return Err(p.syntax("bond with no preceding atom"));
            }
            prev = Some(idx);
            continue;
        }
        let Some(b) = p.peek() else { break };
        match b {
            b'-' | b'=' | b'#' | b'/' | b'\\' => {
                p.pos += 1;
                if pending.is_some() {
                    return Err(p.syntax("two bond symbols in a row"));
                }
                pending = Some(match b {
                    b'=' => 2,
                    b'#' => 3,
                    _ => 1,
                });
            }
            b':' => return Err(p.unsupported("aromatic bond")),
            b'.' => return Err(p.unsupported("multi-fragment dot")),
            b'(' => {
                p.pos += 1;
                let cur = prev.ok_or_else(|| p.syntax("branch before any atom"))?;
                stack.push(cur);
            }
            b')' => {
                p.pos += 1;
                if pending.is_some() {
                    return Err(p.syntax("dangling bond before )"));
                }
                prev = Some(stack.pop().ok_or(SmilesError::UnbalancedParens)?);
            }
            b'0'..=b'9' | b'%' => {
                let number: u16 = if b == b'%' {
                    p.pos += 1;
                    let d1 = p
                        .bump()
                        .filter(|c| c.is_ascii_digit())
                        .ok_or_else(|| p.syntax("%% needs two digits"))?;
                    let d2 = p
                        .bump()
                        .filter(|c| c.is_ascii_digit())
                        .ok_or_else(|| p.syntax("%% needs two digits"))?;
                    u16::from(d1 - b'0') * 10 + u16::from(d2 - b'0')
                } else {
                    p.pos += 1;
                    u16::from(b - b'0')
                };
                let here = prev.ok_or_else(|| p.syntax("ring digit before any atom"))?;
                match ring_open.remove(&number) {
                    None => {
                        ring_open.insert(number, (here, pending.take()));
                    }
                    Some((there, open_order)) => {
                        let close_order = pending.take();
                        let order = match (open_order, close_order) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(SmilesError::RingOrderConflict(number))
                            }
                            (Some(a), _) => a,
                            (None, Some(b)) => b,
                            (None, None) => 1,
                        };
                        if there == here {
                            return Err(p.syntax("ring closure to the same atom"));
                        }
                        p.graph.add_bond(there, here, order)?;
                    }
                }
            }
            _ => {
                return Err(p.unsupported(&format!("character {:?}", b as char)));
            }
        }
    }
    if pending.is_some() {
        return Err(p.syntax("dangling bond at end of input"));
    }
    if !stack.is_empty() {
        return Err(SmilesError::UnbalancedParens);
    }
    if let Some((&n, _)) = ring_open.iter().next() {
        return Err(SmilesError::UnclosedRing(n));
    }
    // Fill implicit hydrogens for atoms written in organic-subset form.
    for i in 0..p.graph.atom_count() {
        if !p.bracketed[i] {
            let sum = p.graph.bond_order_sum(i);
            let el = p.graph.atom(i).element;
            p.graph.atom_mut(i).h_count = el.implied_hydrogens(sum);
        }
    }
    p.graph.validate_valence()?;
    Ok(p.graph)
}

fn atom_text(graph: &MolecularGraph, idx: usize) -> String {
    let atom = graph.atom(idx);
    let bare_ok = atom.element != Element::H
        && atom.charge == 0
        && atom.h_count == atom.element.implied_hydrogens(graph.bond_order_sum(idx));
    if bare_ok {
        atom.element.symbol().to_string()
    } else {
        let mut s = String::from("[");
        s.push_str(atom.element.symbol());
        match atom.h_count {
            0 => {}
            1 => s.push('H'),
            n => {
                s.push('H');
                s.push_str(&n.to_string());
            }
        }
        match atom.charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            c => s.push_str(&format!("{c:+}")),
        }
        s.push(']');
        s
    }
}

fn bond_text(order: u8) -> &'static str {
    match order {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

/// Serialize a connected graph to SMILES. Chirality marks are dropped.
pub fn write_smiles(graph: &MolecularGraph) -> Result<String, GraphError> {
    let plan = TraversalPlan::build(graph)?;
    // Ring closures keyed by the earlier endpoint (digit opens there).
    let mut opens_at: Vec<Vec<(usize, u8, usize)>> = vec![Vec::new(); graph.atom_count()];
    let mut closure_id = 0usize;
    for u in plan.order.iter().copied() {
        for RingClosure { to, order } in plan.closures[u].iter().copied() {
            opens_at[to].push((closure_id, order, u));
            closure_id += 1;
        }
    }
    let mut digit_of: HashMap<usize, u16> = HashMap::new();
    let mut in_use: Vec<bool> = vec![false; 100];
    let mut out = String::new();
    // Explicit stack of render events to avoid recursion depth limits.
    enum Ev {
        Atom(usize),
        Text(&'static str),
    }
    let mut stack = vec![Ev::Atom(plan.order[0])];
    while let Some(ev) = stack.pop() {
        match ev {
            Ev::Text(t) => out.push_str(t),
            Ev::Atom(u) => {
                out.push_str(&atom_text(graph, u));
                // Close ring digits whose earlier endpoint was rendered.
                for rc in &plan.closures[u] {
                    let (id, _, _) = *opens_at[rc.to]
                        .iter()
                        .find(|(_, _, later)| *later == u)
                        .expect("closure registered");
                    let digit = digit_of[&id];
                    in_use[digit as usize] = false;
                    if digit < 10 {
                        out.push_str(&digit.to_string());
                    } else {
                        out.push_str(&format!("%{digit:02}"));
                    }
                }
                // Open new ring digits.
                for (id, order, _) in &opens_at[u] {
                    let digit = (1..100)
                        .find(|&d| !in_use[d as usize])
                        .expect("fewer than 99 simultaneous rings");
                    in_use[digit as usize] = true;
                    digit_of.insert(*id, digit);
                    out.push_str(bond_text(*order));
                    if digit < 10 {
                        out.push_str(&digit.to_string());
                    } else {
                        out.push_str(&format!("%{digit:02}"));
                    }
                }
                // Children: all but the last wrapped in parentheses.
                let kids = &plan.children[u];
                for (i, (child, order)) in kids.iter().enumerate().rev() {
                    if i + 1 == kids.len() {
                        stack.push(Ev::Atom(*child));
                        stack.push(Ev::Text(bond_text(*order)));
                    } else {
                        stack.push(Ev::Text(")"));
                        stack.push(Ev::Atom(*child));
                        stack.push(Ev::Text(bond_text(*order)));
                        stack.push(Ev::Text("("));
                    }
                }
            }
        }
    }
    Ok(out)
}
