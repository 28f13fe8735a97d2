/// Replace every case-insensitive occurrence of the strain name in a
/// description with "this strain". Matches are found left to right and do
/// not restart inside a replacement.
pub fn redact_strain_name(description: &str, strain_name: &str) -> String {
    if strain_name.is_empty() {
        return description.to_string();
    }
    let hay: Vec<char> = description.chars().collect();
    let needle: Vec<char> = strain_name.chars().collect();
    let mut out = String::with_capacity(description.len());
    let mut i = 0;
    while i < hay.len() {
        let matches = i + needle.len() <= hay.len()
            && hay[i..i + needle.len()]
                .iter()
                .zip(&needle)
                .all(|(a, b)| a.to_lowercase().eq(b.to_lowercase()));
        if matches {
            out.push_str("this strain");
            i += needle.len();
        } else {
            out.push(hay[i]);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replaces_name_case_insensitively() {
        let text = "E. coli K-12 is a laboratory strain. e. COLI k-12 grows fast.";
        let got = redact_strain_name(text, "E. coli K-12");
        assert_eq!(
            got,
            "this strain is a laboratory strain. this strain grows fast."
        );
    }

    #[test]
    fn absent_name_leaves_text_unchanged() {
        let text = "Staphylococcus aureus is gram-positive.";
        assert_eq!(redact_strain_name(text, "E. coli"), text);
        assert_eq!(redact_strain_name(text, ""), text);
    }

    #[test]
    fn adjacent_repeats_all_replaced_matching_scan_oracle() {
        let text = "ababab and ABAB";
        let got = redact_strain_name(text, "ab");
        // Independent scan oracle over lowercase bytes.
        let mut expect = String::new();
        let lower = text.to_lowercase();
        let bytes = lower.as_bytes();
        let orig: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i..].starts_with(b"ab") {
                expect.push_str("this strain");
                i += 2;
            } else {
                expect.push(orig[i]);
                i += 1;
            }
        }
        assert_eq!(got, expect);
        assert_eq!(got.matches("this strain").count(), 5);
    }
}
