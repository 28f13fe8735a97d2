use thiserror::Error;

use crate::chem::Element;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("text outside bracket tokens at byte {0}")]
    StrayText(usize),
    #[error("unterminated token at byte {0}")]
    Unterminated(usize),
    #[error("empty token")]
    EmptyToken,
}

/// Split a SELFIES string into bracketed token slices, rejecting any text
/// outside brackets. No inventory validation happens here; arbitrary
/// bracketed tokens (including stereo marks) pass through.
pub fn split_tokens(s: &str) -> Result<Vec<&str>, TokenError> {
    let bytes = s.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'[' {
            return Err(TokenError::StrayText(i));
        }
        let close = bytes[i + 1..]
            .iter()
            .position(|&b| b == b']')
            .ok_or(TokenError::Unterminated(i))?;
        if close == 0 {
            return Err(TokenError::EmptyToken);
        }
        tokens.push(&s[i..i + close + 2]);
        i += close + 2;
    }
    Ok(tokens)
}

/// The 16-symbol alphabet used to read branch lengths and ring distances.
pub const INDEX_ALPHABET: [&str; 16] = [
    "[C]",
    "[Ring1]",
    "[Ring2]",
    "[Branch1]",
    "[=Branch1]",
    "[#Branch1]",
    "[Branch2]",
    "[=Branch2]",
    "[#Branch2]",
    "[O]",
    "[N]",
    "[=N]",
    "[=C]",
    "[#C]",
    "[S]",
    "[P]",
];

/// Index digit value of a token; tokens outside the alphabet count as 0.
pub fn index_value(token: &str) -> usize {
    INDEX_ALPHABET.iter().position(|&t| t == token).unwrap_or(0)
}

/// Render an index as `digits` tokens, most significant first.
pub fn encode_index(mut q: usize, digits: u8) -> Vec<&'static str> {
    let mut out = vec![INDEX_ALPHABET[0]; digits as usize];
    for slot in out.iter_mut().rev() {
        *slot = INDEX_ALPHABET[q % 16];
        q /= 16;
    }
    debug_assert_eq!(q, 0, "index does not fit in the requested digits");
    out
}

/// Number of index digits needed for q (1..=3).
pub fn digits_for(q: usize) -> u8 {
    if q < 16 {
        1
    } else if q < 256 {
        2
    } else {
        3
    }
}

/// A token of the decodable inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfiesToken {
    Atom {
        /// Bond order toward the previous atom: 1, 2, or 3.
        order: u8,
        element: Element,
        /// Explicit hydrogen count; `None` for bare atoms whose hydrogens
        /// follow SMILES implicit-valence rules.
        h_count: Option<u8>,
        charge: i8,
    },
    Branch {
        order: u8,
        digits: u8,
    },
    Ring {
        order: u8,
        digits: u8,
    },
}

impl SelfiesToken {
    /// Parse one bracketed token against the inventory. Returns `None` for
    /// tokens outside it (stereo marks, unknown elements, special tokens).
    pub fn parse(token: &str) -> Option<SelfiesToken> {
        let inner = token.strip_prefix('[')?.strip_suffix(']')?;
        let (order, rest) = match inner.as_bytes().first()? {
            b'=' => (2u8, &inner[1..]),
            b'#' => (3u8, &inner[1..]),
            _ => (1u8, inner),
        };
        for (n, name) in [(1u8, "1"), (2, "2"), (3, "3")] {
            if rest == format!("Branch{name}") {
                return Some(SelfiesToken::Branch { order, digits: n });
            }
            if rest == format!("Ring{name}") {
                return Some(SelfiesToken::Ring { order, digits: n });
            }
        }
        // Atom token: element, optional H<digit>, optional charge.
        let (element, mut tail) = if rest.len() >= 2 && Element::from_symbol(&rest[..2]).is_some()
        {
            (Element::from_symbol(&rest[..2]).unwrap(), &rest[2..])
        } else if !rest.is_empty() && Element::from_symbol(&rest[..1]).is_some() {
            (Element::from_symbol(&rest[..1]).unwrap(), &rest[1..])
        } else {
            return None;
        };
        let mut h_count = None;
        if let Some(t) = tail.strip_prefix('H') {
            let d = t.as_bytes().first()?;
            if !d.is_ascii_digit() {
                return None;
            }
            h_count = Some(d - b'0');
            tail = &t[1..];
        }
        let mut charge = 0i8;
        if !tail.is_empty() {
            let sign = match tail.as_bytes()[0] {
                b'+' => 1i8,
                b'-' => -1i8,
                _ => return None,
            };
            let digits = &tail[1..];
            if digits.len() != 1 || !digits.as_bytes()[0].is_ascii_digit() {
                return None;
            }
            charge = sign * (digits.as_bytes()[0] - b'0') as i8;
            tail = "";
        }
        if !tail.is_empty() {
            return None;
        }
        // Semantic bounds: the (element, charge) pair must be in the subset
        // and explicit hydrogens must fit the capacity.
        let cap = element.capacity(charge)?;
        if h_count.unwrap_or(0) > cap {
            return None;
        }
        Some(SelfiesToken::Atom {
            order,
            element,
            h_count,
            charge,
        })
    }

    pub fn render(&self) -> String {
        let prefix = |order: u8| match order {
            2 => "=",
            3 => "#",
            _ => "",
        };
        match *self {
            SelfiesToken::Branch { order, digits } => {
                format!("[{}Branch{}]", prefix(order), digits)
            }
            SelfiesToken::Ring { order, digits } => format!("[{}Ring{}]", prefix(order), digits),
            SelfiesToken::Atom {
                order,
                element,
                h_count,
                charge,
            } => {
                let mut s = format!("[{}{}", prefix(order), element.symbol());
                if let Some(h) = h_count {
                    s.push('H');
                    s.push_str(&h.to_string());
                }
                if charge != 0 {
                    s.push(if charge > 0 { '+' } else { '-' });
                    s.push_str(&charge.abs().to_string());
                }
                s.push(']');
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_brackets_and_rejects_stray_text() {
        assert_eq!(split_tokens("[C][N]").unwrap(), vec!["[C]", "[N]"]);
        assert_eq!(split_tokens("").unwrap(), Vec::<&str>::new());
        assert_eq!(split_tokens("C[C]"), Err(TokenError::StrayText(0)));
        assert_eq!(split_tokens("[C]x"), Err(TokenError::StrayText(3)));
        assert_eq!(split_tokens("[C"), Err(TokenError::Unterminated(0)));
    }

    #[test]
    fn parses_atom_tokens() {
        assert_eq!(
            SelfiesToken::parse("[C]"),
            Some(SelfiesToken::Atom {
                order: 1,
                element: Element::C,
                h_count: None,
                charge: 0
            })
        );
        assert_eq!(
            SelfiesToken::parse("[=N+1]"),
            Some(SelfiesToken::Atom {
                order: 2,
                element: Element::N,
                h_count: None,
                charge: 1
            })
        );
        assert_eq!(
            SelfiesToken::parse("[NH3+1]"),
            Some(SelfiesToken::Atom {
                order: 1,
                element: Element::N,
                h_count: Some(3),
                charge: 1
            })
        );
        assert_eq!(
            SelfiesToken::parse("[#Branch2]"),
            Some(SelfiesToken::Branch {
                order: 3,
                digits: 2
            })
        );
    }

    #[test]
    fn rejects_tokens_outside_inventory() {
        for t in ["[C@H1]", "[MASK]", "[Se]", "[C+2]", "[NH9]", "[/C]", "[OH3]"] {
            assert_eq!(SelfiesToken::parse(t), None, "{t} should be rejected");
        }
    }

    #[test]
    fn render_parse_roundtrip() {
        for t in ["[C]", "[=C]", "[#N]", "[NH2+1]", "[O-1]", "[Ring2]", "[=Branch1]"] {
            let parsed = SelfiesToken::parse(t).unwrap();
            assert_eq!(parsed.render(), t);
        }
    }

    #[test]
    fn index_alphabet_positions() {
        assert_eq!(index_value("[C]"), 0);
        assert_eq!(index_value("[Ring1]"), 1);
        assert_eq!(index_value("[=Branch1]"), 4);
        assert_eq!(index_value("[P]"), 15);
        assert_eq!(index_value("[F]"), 0);
        assert_eq!(encode_index(20, 2), vec!["[Ring1]", "[=Branch1]"]);
        assert_eq!(digits_for(15), 1);
        assert_eq!(digits_for(16), 2);
    }
}
