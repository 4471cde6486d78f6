//! Finite words over the symbol set `{1, .., N}` used to index cells and
//! edges of the dendrite, and prefix-free families (cut-sets) of them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Alphabet size of the dendrite's cascade.
pub const DENDRITE_ARITY: u8 = 3;

/// One letter of an address, `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u8);

impl Symbol {
    pub fn new(value: u8, arity: u8) -> Result<Self> {
        if value == 0 || value > arity {
            return Err(Error::Domain(format!(
                "symbol {value} outside 1..={arity}"
            )));
        }
        Ok(Symbol(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

/// A finite word `i = (i_1, .., i_n)`; the empty word is the root cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(SmallVec<[u8; 24]>);

impl Address {
    pub fn root() -> Self {
        Address(SmallVec::new())
    }

    /// Builds an address from raw symbol values. Values are not range
    /// checked; use [`Address::validate`] for that.
    pub fn from_symbols(symbols: &[u8]) -> Self {
        Address(SmallVec::from_slice(symbols))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn symbol(&self, idx: usize) -> Symbol {
        Symbol(self.0[idx])
    }

    pub fn validate(&self, arity: u8) -> Result<()> {
        for &s in self.0.iter() {
            Symbol::new(s, arity)?;
        }
        Ok(())
    }

    /// `ij`: the symbols of `self` followed by those of `other`.
    pub fn concat(&self, other: &Address) -> Address {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        Address(out)
    }

    pub fn child(&self, k: u8) -> Address {
        let mut out = self.0.clone();
        out.push(k);
        Address(out)
    }

    /// `i|m`, the first `m` symbols.
    pub fn truncate(&self, m: usize) -> Result<Address> {
        if m > self.len() {
            return Err(Error::Domain(format!(
                "cannot truncate address of length {} to {m}",
                self.len()
            )));
        }
        Ok(Address(SmallVec::from_slice(&self.0[..m])))
    }

    /// `i|(|i|-1)`; `None` for the root.
    pub fn parent(&self) -> Option<Address> {
        if self.is_empty() {
            None
        } else {
            Some(Address(SmallVec::from_slice(&self.0[..self.len() - 1])))
        }
    }

    pub fn is_prefix_of(&self, other: &Address) -> bool {
        other.0.starts_with(&self.0)
    }

    /// All words of length `n` over `1..=arity`, in lexicographic order.
    pub fn level(n: usize, arity: u8) -> Vec<Address> {
        let mut out = vec![Address::root()];
        for _ in 0..n {
            out = out
                .iter()
                .flat_map(|a| (1..=arity).map(move |k| a.child(k)))
                .collect();
        }
        out
    }
}

impl From<Vec<u8>> for Address {
    fn from(v: Vec<u8>) -> Self {
        Address(SmallVec::from_vec(v))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for (idx, s) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" {
            return Ok(Address::root());
        }
        let mut out = SmallVec::new();
        for part in s.split('.') {
            let v: u8 = part
                .parse()
                .map_err(|_| Error::Parse(format!("bad address component {part:?} in {s:?}")))?;
            if v == 0 {
                return Err(Error::Parse(format!("address symbols start at 1: {s:?}")));
            }
            out.push(v);
        }
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True iff every word of length `max |i|` over `1..=arity` has exactly one
/// prefix in `family`.
///
/// Checked by walking the prefix tree instead of enumerating words: a node is
/// covered if it is a member with no member strictly below it, or if all of
/// its children are covered.
pub fn is_cut_set<'a, I>(family: I, arity: u8) -> bool
where
    I: IntoIterator<Item = &'a Address>,
{
    let members: BTreeSet<&Address> = family.into_iter().collect();
    if members.is_empty() {
        return false;
    }
    let max_len = members.iter().map(|a| a.len()).max().unwrap_or(0);
    let mut prefixes: BTreeSet<&[u8]> = BTreeSet::new();
    for m in &members {
        for l in 0..m.len() {
            prefixes.insert(&m.symbols()[..l]);
        }
    }
    fn covered(
        node: &mut Vec<u8>,
        members: &BTreeSet<&Address>,
        prefixes: &BTreeSet<&[u8]>,
        arity: u8,
        max_len: usize,
    ) -> bool {
        let is_member = members.contains(&Address::from_symbols(node));
        let is_proper_prefix = prefixes.contains(node.as_slice());
        match (is_member, is_proper_prefix) {
            (true, true) => false,
            (true, false) => true,
            (false, false) => false,
            (false, true) => {
                if node.len() >= max_len {
                    return false;
                }
                (1..=arity).all(|k| {
                    node.push(k);
                    let ok = covered(node, members, prefixes, arity, max_len);
                    node.pop();
                    ok
                })
            }
        }
    }
    covered(&mut Vec::new(), &members, &prefixes, arity, max_len)
}

/// True iff no member is a proper prefix of another.
pub fn is_prefix_free<'a, I>(family: I) -> bool
where
    I: IntoIterator<Item = &'a Address>,
{
    let sorted: BTreeSet<&Address> = family.into_iter().collect();
    let v: Vec<&&Address> = sorted.iter().collect();
    // In lexicographic order a prefix sorts immediately before some word it prefixes.
    v.windows(2).all(|w| !w[0].is_prefix_of(w[1]))
}

/// The cut-set `Σ_δ = {i : l(i) <= δ < l(parent(i))}` together with the
/// parent path products, which make up the stopping information `H_δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSet {
    pub delta: f64,
    pub parent_lengths: BTreeMap<Address, f64>,
}

impl CutSet {
    pub fn members(&self) -> impl Iterator<Item = &Address> {
        self.parent_lengths.keys()
    }

    pub fn len(&self) -> usize {
        self.parent_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent_lengths.is_empty()
    }

    pub fn contains(&self, a: &Address) -> bool {
        self.parent_lengths.contains_key(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Address {
        s.parse().unwrap()
    }

    #[test]
    fn concat_examples() {
        assert_eq!(a("1.2").concat(&a("3")), a("1.2.3"));
        assert_eq!(Address::root().concat(&a("2.2")), a("2.2"));
        assert_eq!(a("3").concat(&Address::root()), a("3"));
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(a("1.2.3").truncate(2).unwrap(), a("1.2"));
        assert_eq!(a("1.2.3").truncate(0).unwrap(), Address::root());
        assert_eq!(a("2").truncate(1).unwrap(), a("2"));
        assert!(matches!(a("2").truncate(2), Err(Error::Domain(_))));
    }

    #[test]
    fn serialization_format() {
        assert_eq!(a("1.3.2").to_string(), "1.3.2");
        assert_eq!(Address::root().to_string(), "-");
        assert_eq!("-".parse::<Address>().unwrap(), Address::root());
        assert!("1.0".parse::<Address>().is_err());
        assert!("1..2".parse::<Address>().is_err());
        let json = serde_json::to_string(&a("2.1")).unwrap();
        assert_eq!(json, "\"2.1\"");
        assert_eq!(serde_json::from_str::<Address>(&json).unwrap(), a("2.1"));
    }

    #[test]
    fn symbol_range() {
        assert!(Symbol::new(3, 3).is_ok());
        assert!(Symbol::new(4, 3).is_err());
        assert!(Symbol::new(0, 3).is_err());
        assert!(a("1.4").validate(3).is_err());
    }

    #[test]
    fn cut_set_examples() {
        let level2 = Address::level(2, 3);
        assert_eq!(level2.len(), 9);
        assert!(is_cut_set(&level2, 3));
        let mixed: Vec<Address> = ["1", "2", "3.1", "3.2", "3.3"].iter().map(|s| a(s)).collect();
        assert!(is_cut_set(&mixed, 3));
        let partial = vec![a("1"), a("2")];
        assert!(!is_cut_set(&partial, 3));
        assert!(!is_cut_set(std::iter::empty(), 3));
        let overlapping = vec![a("1"), a("1.1"), a("2"), a("3")];
        assert!(!is_cut_set(&overlapping, 3));
        assert!(is_cut_set(&[Address::root()], 3));
    }

    #[test]
    fn prefix_free() {
        assert!(is_prefix_free(&[a("1"), a("2.1"), a("2.2")]));
        assert!(!is_prefix_free(&[a("2"), a("2.1")]));
        assert!(!is_prefix_free(&[a("1"), a("1.3"), a("2")]));
    }
}
