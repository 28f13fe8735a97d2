//! Property tests for the SELFIES derivation rules: every token string over
//! the supported inventory decodes to a valence-legal molecule, and the
//! encoder inverts the decoder.

use moldiff_core::chem::parse_smiles;
use moldiff_core::peplink::graphs_match;
use moldiff_core::selfies::{graph_to_selfies, selfies_to_graph, selfies_to_smiles};
use proptest::prelude::*;

fn token_strategy() -> impl Strategy<Value = String> {
    let atoms = prop_oneof![
        Just("[C]"),
        Just("[=C]"),
        Just("[#C]"),
        Just("[N]"),
        Just("[=N]"),
        Just("[#N]"),
        Just("[O]"),
        Just("[=O]"),
        Just("[S]"),
        Just("[=S]"),
        Just("[P]"),
        Just("[F]"),
        Just("[Cl]"),
        Just("[Br]"),
        Just("[I]"),
        Just("[H]"),
        Just("[N+1]"),
        Just("[NH3+1]"),
        Just("[O-1]"),
        Just("[=N+1]"),
        Just("[C-1]"),
        Just("[NH1]"),
        Just("[SH1]"),
    ];
    let structure = prop_oneof![
        Just("[Branch1]"),
        Just("[=Branch1]"),
        Just("[#Branch1]"),
        Just("[Branch2]"),
        Just("[Ring1]"),
        Just("[=Ring1]"),
        Just("[Ring2]"),
        Just("[#Ring1]"),
    ];
    prop_oneof![4 => atoms, 2 => structure].prop_map(str::to_string)
}

fn selfies_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(token_strategy(), 0..40).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, .. ProptestConfig::default() })]

    /// Decoding always terminates with a valence-legal graph, and the
    /// emitted SMILES parses back to the same formula.
    #[test]
    fn random_token_strings_decode_to_legal_molecules(s in selfies_strategy()) {
        let graph = selfies_to_graph(&s).expect("inventory strings decode");
        graph.validate_valence().expect("valence-legal");
        let smiles = selfies_to_smiles(&s).expect("smiles emission");
        if graph.atom_count() > 0 {
            let reparsed = parse_smiles(&smiles).expect("emitted SMILES parses");
            prop_assert_eq!(reparsed.formula(), graph.formula());
            prop_assert_eq!(reparsed.bond_count(), graph.bond_count());
        } else {
            prop_assert!(smiles.is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2_000, .. ProptestConfig::default() })]

    /// Re-encoding a decoded graph yields a SELFIES string whose derivation
    /// reproduces the graph up to isomorphism.
    #[test]
    fn encode_inverts_decode(s in selfies_strategy()) {
        let graph = selfies_to_graph(&s).expect("decodes");
        prop_assume!(graph.atom_count() > 0);
        let encoded = graph_to_selfies(&graph).expect("connected graphs encode");
        let decoded = selfies_to_graph(&encoded).expect("re-decodes");
        prop_assert_eq!(decoded.formula(), graph.formula());
        prop_assert_eq!(decoded.ring_count(), graph.ring_count());
        prop_assert!(graphs_match(&decoded, &graph), "graphs differ for {}", s);
    }
}

#[test]
fn vocabulary_permutation_independence() {
    use moldiff_core::selfies::Vocabulary;
    let corpus = ["[C][N][=C]", "[O][C]", "[S][P][Br]"];
    let reference = Vocabulary::build(corpus).unwrap();
    // All 6 orderings give the identical vocabulary.
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for p in perms {
        let shuffled = [corpus[p[0]], corpus[p[1]], corpus[p[2]]];
        assert_eq!(Vocabulary::build(shuffled).unwrap(), reference);
    }
    // Idempotent under repetition of lines.
    let doubled = ["[C][N][=C]", "[C][N][=C]", "[O][C]", "[S][P][Br]"];
    assert_eq!(Vocabulary::build(doubled).unwrap(), reference);
}

proptest! {
    /// Tokenize and detokenize are mutually inverse on their valid domains.
    #[test]
    fn tokenize_roundtrip(tokens in prop::collection::vec(token_strategy(), 1..30)) {
        use moldiff_core::selfies::Vocabulary;
        let text = tokens.concat();
        let vocab = Vocabulary::build([text.as_str()]).unwrap();
        let seq = vocab.tokenize(&text).unwrap();
        prop_assert_eq!(vocab.detokenize(&seq).unwrap(), text);
    }
}
