/// Elements of the supported subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    C,
    N,
    O,
    S,
    P,
    F,
    Cl,
    Br,
    I,
    H,
}

impl Element {
    pub const ALL: [Element; 10] = [
        Element::C,
        Element::N,
        Element::O,
        Element::S,
        Element::P,
        Element::F,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::H,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::S => "S",
            Element::P => "P",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::H => "H",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.symbol() == s)
    }

    /// Standard valences used for implicit-hydrogen filling, smallest first.
    pub fn standard_valences(self) -> &'static [u8] {
        match self {
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::S => &[2, 4, 6],
            Element::P => &[3, 5],
            Element::F | Element::Cl | Element::Br | Element::I | Element::H => &[1],
        }
    }

    /// Maximum bonding capacity at the given formal charge. `None` when the
    /// (element, charge) pair is outside the subset.
    pub fn capacity(self, charge: i8) -> Option<u8> {
        let base: i16 = match self {
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::S => 6,
            Element::P => 5,
            Element::F | Element::Cl | Element::Br | Element::I | Element::H => {
                return if charge == 0 { Some(1) } else { None };
            }
        };
        match charge {
            -1..=1 => Some((base + charge as i16) as u8),
            _ => None,
        }
    }

    /// Conventional atomic weight (g/mol).
    pub fn atomic_weight(self) -> f64 {
        match self {
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::S => 32.06,
            Element::P => 30.974,
            Element::F => 18.998,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
            Element::H => 1.008,
        }
    }

    /// Implicit hydrogen count implied by SMILES semantics for a bare
    /// (organic-subset) atom with the given total bond order.
    pub fn implied_hydrogens(self, bond_order_sum: u8) -> u8 {
        for &v in self.standard_valences() {
            if v >= bond_order_sum {
                return v - bond_order_sum;
            }
        }
        0
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}
