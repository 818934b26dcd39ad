use std::collections::BTreeSet;

/// Case-folded, punctuation-stripped, whitespace-split tokens.
pub fn similarity_tokens(s: &str) -> BTreeSet<String> {
    let cleaned: String = s
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Token-set Jaccard similarity; two empty token sets count as identical.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let (ta, tb) = (similarity_tokens(a), similarity_tokens(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

/// Unit-cost edit distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - edit_distance / max_len`; two empty strings count as identical.
pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jaccard_examples() {
        assert!((jaccard("landslide in rio", "landslide rio") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard("Mud, slide!", "mud slide"), 1.0);
        assert_eq!(jaccard("a b", "c d"), 0.0);
        assert_eq!(jaccard("", "..."), 1.0);
        assert!((jaccard("Rio de Janeiro", "Rio") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(edit_distance("mudslide", "landslide"), 3);
        assert!((levenshtein_ratio("mudslide", "landslide") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(levenshtein_ratio("abc", "abc"), 1.0);
        assert_eq!(levenshtein_ratio("", "abc"), 0.0);
        assert_eq!(levenshtein_ratio("", ""), 1.0);
    }

    proptest! {
        #[test]
        fn similarities_are_symmetric_and_bounded(a in "[a-c ]{0,8}", b in "[a-c ]{0,8}") {
            for f in [jaccard, levenshtein_ratio] {
                let s = f(&a, &b);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert_eq!(s, f(&b, &a));
                prop_assert_eq!(f(&a, &a), 1.0);
            }
        }
    }
}
