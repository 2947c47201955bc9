use std::collections::HashMap;
use std::hash::Hash;

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_seq(&a, &b)
}

/// Edit distance over arbitrary symbols, by the block bit-vector method:
/// the DP column is held as vertical +1/−1 delta bits, 64 rows per word.
pub fn levenshtein_seq<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> usize {
    // the shorter sequence is the pattern, so fewer words per column
    let (a, b) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if a.is_empty() {
        return b.len();
    }
    Pattern::new(a).distance(b)
}

/// `Some(d)` when the distance is at most `max`, else `None`. Cheap when the
/// lengths alone rule the pair out.
pub fn levenshtein_within<T: Eq + Hash + Copy>(a: &[T], b: &[T], max: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    let d = levenshtein_seq(a, b);
    (d <= max).then_some(d)
}

/// Full `O(|a|·|b|)` table; the reference for the bit-vector version.
pub fn levenshtein_dp<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub(crate) struct Pattern<T> {
    len: usize,
    words: usize,
    peq: HashMap<T, Vec<u64>>,
}

impl<T: Eq + Hash + Copy> Pattern<T> {
    pub(crate) fn new(a: &[T]) -> Self {
        let words = a.len().div_ceil(64);
        let mut peq: HashMap<T, Vec<u64>> = HashMap::new();
        for (i, &c) in a.iter().enumerate() {
            peq.entry(c).or_insert_with(|| vec![0; words])[i / 64] |= 1u64 << (i % 64);
        }
        Pattern {
            len: a.len(),
            words,
            peq,
        }
    }

    pub(crate) fn distance(&self, b: &[T]) -> usize {
        let m = self.len;
        if m == 0 {
            return b.len();
        }
        let zeros = vec![0u64; self.words];
        let mut vp = vec![!0u64; self.words];
        let mut vn = vec![0u64; self.words];
        let last_bit = 1u64 << ((m - 1) % 64);
        let mut score = m as isize;
        for c in b {
            let eq_col = self.peq.get(c).unwrap_or(&zeros);
            // the top boundary row grows by one per column
            let mut hin: i8 = 1;
            for w in 0..self.words {
                let high = if w + 1 == self.words { last_bit } else { 1u64 << 63 };
                let (pv, mv) = (vp[w], vn[w]);
                let mut eq = eq_col[w];
                let xv = eq | mv;
                if hin < 0 {
                    eq |= 1;
                }
                let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
                let mut ph = mv | !(xh | pv);
                let mut mh = pv & xh;
                let hout: i8 = if ph & high != 0 {
                    1
                } else if mh & high != 0 {
                    -1
                } else {
                    0
                };
                ph <<= 1;
                mh <<= 1;
                if hin < 0 {
                    mh |= 1;
                } else if hin > 0 {
                    ph |= 1;
                }
                vp[w] = mh | !(xv | ph);
                vn[w] = ph & xv;
                hin = hout;
            }
            score += hin as isize;
        }
        score as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("same", "same"), 0);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    #[test]
    fn long_inputs_cross_word_boundaries() {
        let a: String = (0..200).map(|i| (b'a' + (i * 7 % 26) as u8) as char).collect();
        let mut b = a.clone();
        b.insert(64, 'z');
        b.remove(130);
        b.replace_range(190..191, "q");
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        assert_eq!(levenshtein(&a, &b), levenshtein_dp(&ac, &bc));
    }

    #[test]
    fn within_respects_bound() {
        let a: Vec<char> = "abcdef".chars().collect();
        let b: Vec<char> = "abcxef".chars().collect();
        assert_eq!(levenshtein_within(&a, &b, 1), Some(1));
        assert_eq!(levenshtein_within(&a, &b, 0), None);
        assert_eq!(levenshtein_within(&a, &b[..2], 3), None);
    }
}
