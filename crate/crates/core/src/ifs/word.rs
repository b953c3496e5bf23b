//! Finite words over an IFS alphabet, stored run-length encoded so that very
//! long constant runs cost O(1).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    runs: Vec<(i32, u64)>,
    len: u64,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn from_symbols(symbols: &[i32]) -> Self {
        let mut w = Word::empty();
        for &s in symbols {
            w.push(s);
        }
        w
    }

    pub fn from_runs(runs: &[(i32, u64)]) -> Self {
        let mut w = Word::empty();
        for &(s, n) in runs {
            w.push_run(s, n);
        }
        w
    }

    pub fn single(s: i32) -> Self {
        Word::from_symbols(&[s])
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[(i32, u64)] {
        &self.runs
    }

    pub fn push(&mut self, s: i32) {
        self.push_run(s, 1);
    }

    pub fn push_run(&mut self, s: i32, n: u64) {
        if n == 0 {
            return;
        }
        self.len += n;
        if let Some(last) = self.runs.last_mut() {
            if last.0 == s {
                last.1 += n;
                return;
            }
        }
        self.runs.push((s, n));
    }

    pub fn with(&self, s: i32) -> Self {
        let mut w = self.clone();
        w.push(s);
        w
    }

    /// `self * other`.
    pub fn concat(&self, other: &Word) -> Self {
        let mut w = self.clone();
        for &(s, n) in &other.runs {
            w.push_run(s, n);
        }
        w
    }

    /// Symbol at 0-based position `i`.
    pub fn get(&self, i: u64) -> Option<i32> {
        let mut pos = 0;
        for &(s, n) in &self.runs {
            if i < pos + n {
                return Some(s);
            }
            pos += n;
        }
        None
    }

    pub fn first(&self) -> Option<i32> {
        self.runs.first().map(|r| r.0)
    }

    pub fn last(&self) -> Option<i32> {
        self.runs.last().map(|r| r.0)
    }

    /// The restriction `I|_n` (first `n` symbols).
    pub fn prefix(&self, n: u64) -> Self {
        let mut w = Word::empty();
        let mut left = n.min(self.len);
        for &(s, k) in &self.runs {
            if left == 0 {
                break;
            }
            let take = k.min(left);
            w.push_run(s, take);
            left -= take;
        }
        w
    }

    /// Everything after the first `n` symbols.
    pub fn suffix_from(&self, n: u64) -> Self {
        let mut w = Word::empty();
        let mut skip = n;
        for &(s, k) in &self.runs {
            if skip >= k {
                skip -= k;
                continue;
            }
            w.push_run(s, k - skip);
            skip = 0;
        }
        w
    }

    /// `self ◁ other`: `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.len <= other.len && other.prefix(self.len) == *self
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &Word) -> u64 {
        let mut a = self.runs.iter().copied();
        let mut b = other.runs.iter().copied();
        let (mut ra, mut rb) = (a.next(), b.next());
        let mut n = 0;
        while let (Some((sa, na)), Some((sb, nb))) = (ra, rb) {
            if sa != sb {
                return n;
            }
            let m = na.min(nb);
            n += m;
            ra = if na > m { Some((sa, na - m)) } else { a.next() };
            rb = if nb > m { Some((sb, nb - m)) } else { b.next() };
        }
        n
    }

    /// Expanded symbols; only for short words.
    pub fn symbols(&self) -> Vec<i32> {
        let mut v = Vec::with_capacity(self.len as usize);
        for &(s, n) in &self.runs {
            v.extend(std::iter::repeat(s).take(n as usize));
        }
        v
    }
}

impl Ord for Word {
    /// Lexicographic order on symbols; a proper prefix sorts first.
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.common_prefix_len(other);
        match (self.get(n), other.get(n)) {
            (Some(a), Some(b)) => a.cmp(&b),
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .runs
            .iter()
            .map(|&(s, n)| if n == 1 { s.to_string() } else { format!("{s}^{n}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = String;

    /// Accepts `2 -1^3 1`, `2,-1,-1,-1,1` or `(+2,+1)`.
    fn from_str(s: &str) -> Result<Self, String> {
        let cleaned = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut w = Word::empty();
        for tok in cleaned.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (sym, count) = match tok.split_once('^') {
                Some((a, b)) => (a, b.parse::<u64>().map_err(|_| format!("bad run length in {tok:?}"))?),
                None => (tok, 1),
            };
            let sym: i32 = sym.trim_start_matches('+').parse().map_err(|_| format!("bad symbol {sym:?}"))?;
            w.push_run(sym, count);
        }
        Ok(w)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_length_and_prefix() {
        let w: Word = "2 -1^3 1".parse().unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.symbols(), vec![2, -1, -1, -1, 1]);
        assert_eq!(w.prefix(3), Word::from_symbols(&[2, -1, -1]));
        assert!(w.prefix(3).is_prefix_of(&w));
        assert!(!Word::from_symbols(&[2, 1]).is_prefix_of(&w));
        assert_eq!(w.suffix_from(2), Word::from_symbols(&[-1, -1, 1]));
        assert_eq!(w.to_string(), "2 -1^3 1");
        assert_eq!("(+2,+2)".parse::<Word>().unwrap(), Word::from_symbols(&[2, 2]));
    }

    #[test]
    fn lexicographic_order() {
        let a = Word::from_symbols(&[2, -1, 1]);
        let b = Word::from_symbols(&[2, 1, -1]);
        assert!(a < b);
        assert!(Word::from_symbols(&[2]) < a);
        assert_eq!(Word::from_runs(&[(1, 5)]).common_prefix_len(&Word::from_runs(&[(1, 3), (2, 1)])), 3);
    }

    #[test]
    fn concat_lengths_add() {
        let a = Word::from_runs(&[(1, 1_000_000_000)]);
        let b = Word::from_symbols(&[1, 2]);
        let c = a.concat(&b);
        assert_eq!(c.len(), a.len() + b.len());
        assert_eq!(c.runs(), &[(1, 1_000_000_001), (2, 1)]);
    }
}
