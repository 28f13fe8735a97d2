use crate::chem::{Atom, Element, MolecularGraph};
use crate::selfies::smiles_to_selfies;

use super::registry::{carboxyl_groups, ResidueRegistry};
use super::{BondKind, IntrachainBond, PeplinkError, PeptideSpec};

/// Where one residue's atoms landed in the assembled graph.
#[derive(Debug, Clone)]
pub struct ResidueSpan {
    pub code: String,
    /// Template atom index -> assembled atom index; the consumed hydroxyl
    /// oxygen of non-terminal residues maps to `None`.
    pub atom_map: Vec<Option<usize>>,
    pub alpha_amine: usize,
    pub carboxyl_carbon: usize,
    /// Hydroxyl oxygen in the assembled graph; present only while the
    /// C-terminal carboxyl is intact.
    pub hydroxyl_oxygen: Option<usize>,
    /// First (inclusive) and last (exclusive) assembled atom index.
    pub atom_range: (usize, usize),
}

/// An assembled peptide graph with per-residue bookkeeping.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub graph: MolecularGraph,
    pub spans: Vec<ResidueSpan>,
    pub n_terminus_free: bool,
    pub c_terminus_free: bool,
}

/// Join residues into a linear backbone: the carboxyl hydroxyl of residue i
/// leaves, the alpha amine of residue i+1 loses one hydrogen, and the C-N
/// amide bond forms. The N-terminal amine and C-terminal carboxyl stay free.
pub fn assemble_backbone(
    residues: &[String],
    registry: &ResidueRegistry,
) -> Result<Assembly, PeplinkError> {
    if residues.is_empty() {
        return Err(PeplinkError::EmptySpec);
    }
    let mut graph = MolecularGraph::new();
    let mut spans: Vec<ResidueSpan> = Vec::with_capacity(residues.len());
    let last = residues.len() - 1;
    for (i, code) in residues.iter().enumerate() {
        let template = registry
            .template(code)
            .ok_or_else(|| PeplinkError::UnknownResidue(code.clone()))?;
        let start = graph.atom_count();
        // Every residue except the last loses its carboxyl hydroxyl.
        let skip = if i < last {
            vec![template.hydroxyl_oxygen]
        } else {
            Vec::new()
        };
        let map = graph.merge(&template.graph, &skip);
        let span = ResidueSpan {
            code: code.clone(),
            alpha_amine: map[template.alpha_amine].expect("amine kept"),
            carboxyl_carbon: map[template.carboxyl_carbon].expect("carboxyl kept"),
            hydroxyl_oxygen: map[template.hydroxyl_oxygen],
            atom_map: map,
            atom_range: (start, graph.atom_count()),
        };
        if i > 0 {
            let prev = &spans[i - 1];
            let amine = span.alpha_amine;
            if graph.atom(amine).h_count == 0 {
                return Err(PeplinkError::SiteNotReactive {
                    index: i,
                    what: "alpha amine hydrogen",
                });
            }
            graph.atom_mut(amine).h_count -= 1;
            graph.add_bond(prev.carboxyl_carbon, amine, 1)?;
        }
        spans.push(span);
    }
    graph.validate_valence()?;
    Ok(Assembly {
        graph,
        spans,
        n_terminus_free: true,
        c_terminus_free: true,
    })
}

fn atoms_of(assembly: &Assembly, index: usize) -> std::ops::Range<usize> {
    let (start, end) = assembly.spans[index].atom_range;
    start..end
}

/// A thiol sulfur inside the residue: S with at least one hydrogen.
fn find_thiol(assembly: &Assembly, index: usize) -> Option<usize> {
    atoms_of(assembly, index).find(|&i| {
        let a = assembly.graph.atom(i);
        a.element == Element::S && a.h_count >= 1
    })
}

/// A side-chain carboxyl of the residue: any carboxyl group whose carbon is
/// not the backbone carboxyl.
fn find_side_carboxyl(assembly: &Assembly, index: usize) -> Option<(usize, usize)> {
    let span = &assembly.spans[index];
    let (start, end) = span.atom_range;
    carboxyl_groups(&assembly.graph)
        .into_iter()
        .find(|&(c, _)| c >= start && c < end && c != span.carboxyl_carbon)
}

/// A side-chain amine of the residue: N-H that is not the backbone amine
/// and not part of an amide.
fn find_side_amine(assembly: &Assembly, index: usize) -> Option<usize> {
    let span = &assembly.spans[index];
    atoms_of(assembly, index).find(|&i| {
        if i == span.alpha_amine {
            return false;
        }
        let a = assembly.graph.atom(i);
        if a.element != Element::N || a.h_count == 0 {
            return false;
        }
        // Skip amide and guanidinium-like nitrogens.
        !assembly.graph.neighbors(i).any(|(j, _)| {
            assembly.graph.atom(j).element == Element::C
                && assembly
                    .graph
                    .neighbors(j)
                    .any(|(k, o)| o == 2 && assembly.graph.atom(k).element != Element::C)
        })
    })
}

/// Remove an atom and patch every recorded index in the assembly.
fn remove_atom(assembly: &mut Assembly, atom: usize) {
    let map = assembly.graph.remove_atom(atom);
    for span in assembly.spans.iter_mut() {
        for slot in span.atom_map.iter_mut() {
            *slot = slot.and_then(|i| map[i]);
        }
        span.alpha_amine = map[span.alpha_amine].expect("amine never removed");
        span.carboxyl_carbon = map[span.carboxyl_carbon].expect("carboxyl kept");
        span.hydroxyl_oxygen = span.hydroxyl_oxygen.and_then(|i| map[i]);
        let (start, end) = span.atom_range;
        let shift = |i: usize| if i > atom { i - 1 } else { i };
        span.atom_range = (shift(start), if end > atom { end - 1 } else { end });
    }
}

/// Introduce the specified intrachain bonds with their type-specific atom
/// and hydrogen bookkeeping.
pub fn apply_intrachain_bonds(
    mut assembly: Assembly,
    bonds: &[IntrachainBond],
) -> Result<Assembly, PeplinkError> {
    for bond in bonds {
        match bond.kind {
            BondKind::Disulfide => {
                let sa = find_thiol(&assembly, bond.site_a).ok_or(
                    PeplinkError::SiteNotReactive {
                        index: bond.site_a,
                        what: "thiol",
                    },
                )?;
                let sb = find_thiol(&assembly, bond.site_b).ok_or(
                    PeplinkError::SiteNotReactive {
                        index: bond.site_b,
                        what: "thiol",
                    },
                )?;
                if sa == sb {
                    return Err(PeplinkError::SiteNotReactive {
                        index: bond.site_b,
                        what: "second thiol",
                    });
                }
                assembly.graph.atom_mut(sa).h_count -= 1;
                assembly.graph.atom_mut(sb).h_count -= 1;
                assembly.graph.add_bond(sa, sb, 1)?;
            }
            BondKind::HeadToTailLactam => {
                if !assembly.n_terminus_free || !assembly.c_terminus_free {
                    return Err(PeplinkError::TerminusConsumed);
                }
                let last = assembly.spans.len() - 1;
                let hydroxyl = assembly.spans[last].hydroxyl_oxygen.ok_or(
                    PeplinkError::SiteNotReactive {
                        index: last,
                        what: "carboxyl hydroxyl",
                    },
                )?;
                if assembly.graph.atom(assembly.spans[0].alpha_amine).h_count == 0 {
                    return Err(PeplinkError::SiteNotReactive {
                        index: 0,
                        what: "amine hydrogen",
                    });
                }
                remove_atom(&mut assembly, hydroxyl);
                assembly.spans[last].hydroxyl_oxygen = None;
                let amine = assembly.spans[0].alpha_amine;
                let carboxyl = assembly.spans[last].carboxyl_carbon;
                assembly.graph.atom_mut(amine).h_count -= 1;
                assembly.graph.add_bond(carboxyl, amine, 1)?;
                assembly.n_terminus_free = false;
                assembly.c_terminus_free = false;
            }
            BondKind::SideChainLactam => {
                let (c, o) = find_side_carboxyl(&assembly, bond.site_a).ok_or(
                    PeplinkError::SiteNotReactive {
                        index: bond.site_a,
                        what: "side-chain carboxyl",
                    },
                )?;
                let amine = find_side_amine(&assembly, bond.site_b).ok_or(
                    PeplinkError::SiteNotReactive {
                        index: bond.site_b,
                        what: "side-chain amine",
                    },
                )?;
                remove_atom(&mut assembly, o);
                let shift = |i: usize| if i > o { i - 1 } else { i };
                let (c, amine) = (shift(c), shift(amine));
                assembly.graph.atom_mut(amine).h_count -= 1;
                assembly.graph.add_bond(c, amine, 1)?;
            }
        }
    }
    assembly.graph.validate_valence()?;
    Ok(assembly)
}

/// Graft terminal modifications: N-acetylation adds an acetamide on the
/// alpha amine; C-amidation replaces the carboxyl hydroxyl with an amine.
pub fn apply_terminal_mods(
    mut assembly: Assembly,
    n_term: Option<&str>,
    c_term: Option<&str>,
) -> Result<Assembly, PeplinkError> {
    if let Some(code) = n_term {
        if !assembly.n_terminus_free {
            return Err(PeplinkError::TerminusConsumed);
        }
        match code.to_ascii_lowercase().as_str() {
            "ac" | "acetyl" => {
                let amine = assembly.spans[0].alpha_amine;
                if assembly.graph.atom(amine).h_count == 0 {
                    return Err(PeplinkError::SiteNotReactive {
                        index: 0,
                        what: "amine hydrogen",
                    });
                }
                let carbonyl = assembly.graph.add_atom(Atom::new(Element::C));
                let oxygen = assembly.graph.add_atom(Atom::new(Element::O));
                let mut methyl = Atom::new(Element::C);
                methyl.h_count = 3;
                let methyl = assembly.graph.add_atom(methyl);
                assembly.graph.add_bond(carbonyl, oxygen, 2)?;
                assembly.graph.add_bond(carbonyl, methyl, 1)?;
                assembly.graph.atom_mut(amine).h_count -= 1;
                assembly.graph.add_bond(amine, carbonyl, 1)?;
                assembly.n_terminus_free = false;
            }
            other => return Err(PeplinkError::UnknownModification(other.to_string())),
        }
    }
    if let Some(code) = c_term {
        if !assembly.c_terminus_free {
            return Err(PeplinkError::TerminusConsumed);
        }
        match code.to_ascii_lowercase().as_str() {
            "am" | "amide" => {
                let last = assembly.spans.len() - 1;
                let hydroxyl = assembly.spans[last].hydroxyl_oxygen.ok_or(
                    PeplinkError::SiteNotReactive {
                        index: last,
                        what: "carboxyl hydroxyl",
                    },
                )?;
                let atom = assembly.graph.atom_mut(hydroxyl);
                atom.element = Element::N;
                atom.h_count = 2;
                assembly.spans[last].hydroxyl_oxygen = None;
                assembly.c_terminus_free = false;
            }
            other => return Err(PeplinkError::UnknownModification(other.to_string())),
        }
    }
    assembly.graph.validate_valence()?;
    Ok(assembly)
}

/// Compose assembly, intrachain bonds, and terminal modifications.
pub fn peptide_to_graph(
    spec: &PeptideSpec,
    registry: &ResidueRegistry,
) -> Result<Assembly, PeplinkError> {
    spec.validate(registry)?;
    let assembly = assemble_backbone(&spec.residues, registry)?;
    let assembly = apply_intrachain_bonds(assembly, &spec.bonds)?;
    apply_terminal_mods(assembly, spec.n_term.as_deref(), spec.c_term.as_deref())
}

/// Full conversion: spec to graph to SMILES to SELFIES.
pub fn peptide_to_selfies(
    spec: &PeptideSpec,
    registry: &ResidueRegistry,
) -> Result<String, PeplinkError> {
    let assembly = peptide_to_graph(spec, registry)?;
    let smiles = crate::chem::write_smiles(&assembly.graph)?;
    Ok(smiles_to_selfies(&smiles)?)
}
