use std::collections::BTreeMap;
use std::io::BufRead;

use crate::chem::{parse_smiles, Element, MolecularGraph};

use super::PeplinkError;

/// One loaded residue template with its backbone attachment sites resolved.
#[derive(Debug, Clone)]
pub struct ResidueTemplate {
    pub code: String,
    pub smiles: String,
    pub graph: MolecularGraph,
    /// Backbone amine nitrogen (loses one hydrogen per peptide bond).
    pub alpha_amine: usize,
    /// Backbone carboxyl carbon.
    pub carboxyl_carbon: usize,
    /// Hydroxyl oxygen of the backbone carboxyl (leaves on condensation).
    pub hydroxyl_oxygen: usize,
    pub canonical: bool,
}

/// A record that failed subset validation, kept with its reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantineEntry {
    pub code: String,
    pub reason: String,
}

/// The residue registry: templates indexed by code plus the quarantine list
/// of records whose SMILES fall outside the supported subset.
#[derive(Debug, Clone)]
pub struct ResidueRegistry {
    templates: BTreeMap<String, ResidueTemplate>,
    quarantined: Vec<QuarantineEntry>,
    declared_canonical: usize,
    declared_noncanonical: usize,
}

/// Locate the carboxyl groups of a graph: a carbon double-bonded to one
/// oxygen and single-bonded to a hydroxyl oxygen. Returns
/// (carbon, hydroxyl oxygen) pairs in atom order.
pub(crate) fn carboxyl_groups(graph: &MolecularGraph) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, atom) in graph.atoms().iter().enumerate() {
        if atom.element != Element::C {
            continue;
        }
        let mut carbonyl = false;
        let mut hydroxyl = None;
        for (j, order) in graph.neighbors(i) {
            let n = graph.atom(j);
            if n.element == Element::O && n.charge == 0 {
                if order == 2 {
                    carbonyl = true;
                } else if order == 1 && n.h_count >= 1 && hydroxyl.is_none() {
                    hydroxyl = Some(j);
                }
            }
        }
        if carbonyl {
            if let Some(o) = hydroxyl {
                out.push((i, o));
            }
        }
    }
    out
}

/// Breadth-first distance from `from` to the nearest nitrogen with at least
/// one hydrogen, ignoring the `blocked` atom. Returns (distance, nitrogen).
fn nearest_amine(
    graph: &MolecularGraph,
    from: usize,
    blocked: usize,
) -> Option<(usize, usize)> {
    let mut dist = vec![usize::MAX; graph.atom_count()];
    let mut queue = std::collections::VecDeque::new();
    dist[from] = 0;
    queue.push_back(from);
    let mut best: Option<(usize, usize)> = None;
    while let Some(u) = queue.pop_front() {
        let atom = graph.atom(u);
        if atom.element == Element::N && atom.h_count >= 1 && u != blocked {
            match best {
                Some((d, n)) if (dist[u], u) < (d, n) => best = Some((dist[u], u)),
                None => best = Some((dist[u], u)),
                _ => {}
            }
            // Breadth-first order: the first nitrogen found is the nearest,
            // but keep scanning the same depth for a deterministic tie-break.
            if dist[u] > best.unwrap().0 {
                break;
            }
        }
        for (v, _) in graph.neighbors(u) {
            if v != blocked && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    best
}

/// Resolve the backbone attachment sites of a residue graph: for every
/// carboxyl group, the alpha carbon is its non-oxygen neighbor and the
/// amine is the nearest reachable N-H; the (carboxyl, amine) pair with the
/// shortest alpha-to-amine distance wins.
pub(crate) fn resolve_sites(
    graph: &MolecularGraph,
) -> Result<(usize, usize, usize), &'static str> {
    let carboxyls = carboxyl_groups(graph);
    if carboxyls.is_empty() {
        return Err("carboxyl group");
    }
    let mut best: Option<(usize, usize, usize, usize)> = None;
    for (c, o) in carboxyls {
        let alphas: Vec<usize> = graph
            .neighbors(c)
            .filter(|(j, _)| graph.atom(*j).element != Element::O)
            .map(|(j, _)| j)
            .collect();
        for alpha in alphas {
            if let Some((d, n)) = nearest_amine(graph, alpha, c) {
                let candidate = (d, c, o, n);
                if best.is_none_or(|(bd, bc, _, _)| (d, c) < (bd, bc)) {
                    best = Some(candidate);
                }
            }
        }
    }
    match best {
        Some((_, c, o, n)) => Ok((n, c, o)),
        None => Err("amine"),
    }
}

impl ResidueRegistry {
    /// The registry shipped with the crate.
    pub fn builtin() -> ResidueRegistry {
        ResidueRegistry::load(include_str!("../../data/residues.tsv").as_bytes())
            .expect("shipped registry parses")
    }

    pub fn load<R: BufRead>(reader: R) -> Result<ResidueRegistry, PeplinkError> {
        let mut templates = BTreeMap::new();
        let mut quarantined = Vec::new();
        let mut declared_canonical = 0;
        let mut declared_noncanonical = 0;
        for (lineno, line) in reader.lines().enumerate() {
            let line =
                line.map_err(|e| PeplinkError::MalformedRegistry(e.to_string()))?;
            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix("#!") {
                for field in rest.split_whitespace() {
                    if let Some(v) = field.strip_prefix("canonical=") {
                        declared_canonical = v.parse().map_err(|_| {
                            PeplinkError::MalformedRegistry("bad canonical count".into())
                        })?;
                    } else if let Some(v) = field.strip_prefix("noncanonical=") {
                        declared_noncanonical = v.parse().map_err(|_| {
                            PeplinkError::MalformedRegistry("bad noncanonical count".into())
                        })?;
                    }
                }
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let code = cols.next().map(str::trim).unwrap_or_default();
            let smiles = cols.next().map(str::trim).unwrap_or_default();
            if code.is_empty() || smiles.is_empty() {
                return Err(PeplinkError::MalformedRegistry(format!(
                    "line {}: need code and SMILES",
                    lineno + 1
                )));
            }
            if templates.contains_key(code)
                || quarantined.iter().any(|q: &QuarantineEntry| q.code == code)
            {
                return Err(PeplinkError::MalformedRegistry(format!(
                    "duplicate code {code:?}"
                )));
            }
            let annotation = cols.next().map(str::trim);
            let mut quarantine = |reason: String| {
                quarantined.push(QuarantineEntry {
                    code: code.to_string(),
                    reason,
                });
            };
            let graph = match parse_smiles(smiles) {
                Ok(g) => g,
                Err(e) => {
                    quarantine(e.to_string());
                    continue;
                }
            };
            if !graph.is_connected() {
                quarantine("disconnected structure".to_string());
                continue;
            }
            // Explicit site annotations override the heuristics.
            let sites = if let Some(ann) = annotation.filter(|a| !a.is_empty()) {
                let mut n = None;
                let mut c = None;
                for field in ann.split_whitespace() {
                    if let Some(v) = field.strip_prefix("n=") {
                        n = v.parse::<usize>().ok();
                    } else if let Some(v) = field.strip_prefix("c=") {
                        c = v.parse::<usize>().ok();
                    }
                }
                match (n, c) {
                    (Some(n), Some(c)) => {
                        let hydroxyl = graph
                            .neighbors(c)
                            .find(|(j, o)| {
                                *o == 1
                                    && graph.atom(*j).element == Element::O
                                    && graph.atom(*j).h_count >= 1
                            })
                            .map(|(j, _)| j);
                        match hydroxyl {
                            Some(o) => Ok((n, c, o)),
                            None => Err("carboxyl group"),
                        }
                    }
                    _ => Err("site annotation"),
                }
            } else {
                resolve_sites(&graph)
            };
            let (alpha_amine, carboxyl_carbon, hydroxyl_oxygen) = match sites {
                Ok(s) => s,
                Err(what) => {
                    quarantine(format!("no usable {what}"));
                    continue;
                }
            };
            let canonical = code.len() == 1;
            templates.insert(
                code.to_string(),
                ResidueTemplate {
                    code: code.to_string(),
                    smiles: smiles.to_string(),
                    graph,
                    alpha_amine,
                    carboxyl_carbon,
                    hydroxyl_oxygen,
                    canonical,
                },
            );
        }
        Ok(ResidueRegistry {
            templates,
            quarantined,
            declared_canonical,
            declared_noncanonical,
        })
    }

    pub fn template(&self, code: &str) -> Option<&ResidueTemplate> {
        self.templates.get(code)
    }

    pub fn templates(&self) -> impl Iterator<Item = &ResidueTemplate> {
        self.templates.values()
    }

    pub fn quarantined(&self) -> &[QuarantineEntry] {
        &self.quarantined
    }

    pub fn declared_counts(&self) -> (usize, usize) {
        (self.declared_canonical, self.declared_noncanonical)
    }

    /// Loaded plus quarantined records, split canonical/noncanonical.
    pub fn record_counts(&self) -> (usize, usize) {
        let canonical_loaded = self.templates.values().filter(|t| t.canonical).count();
        let canonical_quarantined = self
            .quarantined
            .iter()
            .filter(|q| q.code.len() == 1)
            .count();
        let canonical = canonical_loaded + canonical_quarantined;
        let total = self.templates.len() + self.quarantined.len();
        (canonical, total - canonical)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_loads_with_declared_counts() {
        let reg = ResidueRegistry::builtin();
        let (canon, noncanon) = reg.record_counts();
        let (dc, dn) = reg.declared_counts();
        assert_eq!(canon, dc, "canonical count drifted from declaration");
        assert_eq!(noncanon, dn, "noncanonical count drifted from declaration");
        assert_eq!((dc, dn), (20, 404));
    }

    #[test]
    fn all_twenty_canonical_codes_validate() {
        let reg = ResidueRegistry::builtin();
        for code in [
            "g", "a", "r", "n", "d", "c", "q", "e", "h", "i", "l", "k", "m", "f", "P", "s",
            "t", "w", "y", "v",
        ] {
            let t = reg
                .template(code)
                .unwrap_or_else(|| panic!("canonical {code} missing or quarantined"));
            assert!(t.canonical);
            t.graph.validate_valence().unwrap();
        }
    }

    #[test]
    fn quarantine_report_is_nonempty_and_reasoned() {
        let reg = ResidueRegistry::builtin();
        assert!(!reg.quarantined().is_empty());
        for q in reg.quarantined() {
            assert!(!q.reason.is_empty());
        }
        // Salts and boron-bearing records cannot be in the subset.
        assert!(reg.quarantined().iter().any(|q| q.code == "CCA"));
        assert!(reg.quarantined().iter().any(|q| q.code == "LEU-Boro"));
        assert!(reg.template("CCA").is_none());
    }

    #[test]
    fn alanine_sites_land_on_backbone() {
        let reg = ResidueRegistry::builtin();
        let a = reg.template("a").unwrap();
        // C[C@H](C(=O)O)N: atoms CH3(0), CH(1), C(2), =O(3), OH(4), N(5).
        assert_eq!(a.carboxyl_carbon, 2);
        assert_eq!(a.hydroxyl_oxygen, 4);
        assert_eq!(a.alpha_amine, 5);
        assert_eq!(a.graph.formula(), "C3H7NO2");
    }

    #[test]
    fn backbone_amine_beats_side_chain_amide() {
        let reg = ResidueRegistry::builtin();
        // Asparagine: the side-chain amide nitrogen is further from the
        // alpha carbon than the backbone amine.
        let n = reg.template("n").unwrap();
        let amine = n.graph.atom(n.alpha_amine);
        assert_eq!(amine.element, Element::N);
        let d = n
            .graph
            .neighbors(n.alpha_amine)
            .any(|(j, _)| n.graph.bond_between(j, n.carboxyl_carbon).is_some());
        assert!(d, "amine must sit on the alpha carbon");
    }

    #[test]
    fn proline_secondary_amine_is_usable() {
        let reg = ResidueRegistry::builtin();
        let p = reg.template("P").unwrap();
        assert_eq!(p.graph.atom(p.alpha_amine).h_count, 1);
    }

    #[test]
    fn explicit_annotations_override_heuristics() {
        let file = "#! canonical=0 noncanonical=1\nX\tNCCC(=O)O\tn=0 c=3\n";
        let reg = ResidueRegistry::load(file.as_bytes()).unwrap();
        let t = reg.template("X").unwrap();
        assert_eq!(t.alpha_amine, 0);
        assert_eq!(t.carboxyl_carbon, 3);
    }

    #[test]
    fn duplicate_codes_are_rejected() {
        let file = "a\tC(C(=O)O)N\na\tC(C(=O)O)N\n";
        assert!(matches!(
            ResidueRegistry::load(file.as_bytes()),
            Err(PeplinkError::MalformedRegistry(_))
        ));
    }
}
