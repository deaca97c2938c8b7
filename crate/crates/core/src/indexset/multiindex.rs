use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// Finitely supported multi-index, stored as sorted `(dim, value)` pairs with
/// zero entries omitted. Dimensions are 0-based internally; text and JSON
/// forms use 1-based coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(SmallVec<[(u32, u32); 4]>);

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Unit index `e_dim` scaled by `value`.
    pub fn unit(dim: usize, value: u32) -> Self {
        let mut s = Self::zero();
        s.set(dim, value);
        s
    }

    pub fn from_dense(values: &[u32]) -> Self {
        Self(
            values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0)
                .map(|(d, &v)| (d as u32, v))
                .collect(),
        )
    }

    pub fn to_dense(&self, dims: usize) -> Vec<u32> {
        let mut out = vec![0; dims];
        for &(d, v) in &self.0 {
            if (d as usize) < dims {
                out[d as usize] = v;
            }
        }
        out
    }

    pub fn get(&self, dim: usize) -> u32 {
        match self.0.binary_search_by_key(&(dim as u32), |&(d, _)| d) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn set(&mut self, dim: usize, value: u32) {
        let key = dim as u32;
        match self.0.binary_search_by_key(&key, |&(d, _)| d) {
            Ok(i) if value == 0 => {
                self.0.remove(i);
            }
            Ok(i) => self.0[i].1 = value,
            Err(_) if value == 0 => {}
            Err(i) => self.0.insert(i, (key, value)),
        }
    }

    /// `self + step·e_dim`.
    pub fn incremented(&self, dim: usize, step: u32) -> Self {
        let mut s = self.clone();
        s.set(dim, self.get(dim) + step);
        s
    }

    /// `self - step·e_dim`, or `None` when that would go negative.
    pub fn decremented(&self, dim: usize, step: u32) -> Option<Self> {
        let v = self.get(dim);
        (v >= step).then(|| {
            let mut s = self.clone();
            s.set(dim, v - step);
            s
        })
    }

    /// Nonzero `(dim, value)` pairs in increasing dimension order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|&(d, v)| (d as usize, v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.0.len()
    }

    /// Smallest dimension with a nonzero entry.
    pub fn min_dim(&self) -> Option<usize> {
        self.0.first().map(|&(d, _)| d as usize)
    }

    /// One past the largest dimension with a nonzero entry.
    pub fn dim_bound(&self) -> usize {
        self.0.last().map_or(0, |&(d, _)| d as usize + 1)
    }

    pub fn order(&self) -> u64 {
        self.0.iter().map(|&(_, v)| v as u64).sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.0.iter().map(|&(_, v)| v).max().unwrap_or(0)
    }

    /// All components even.
    pub fn is_even(&self) -> bool {
        self.0.iter().all(|&(_, v)| v % 2 == 0)
    }

    /// Membership in `F_ν`: every component is 0 or at least `nu`.
    pub fn in_f_nu(&self, nu: u32) -> bool {
        self.0.iter().all(|&(_, v)| v >= nu)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().all(|&(d, v)| v <= other.get(d as usize))
    }

    pub fn sub(&self, other: &Self) -> Option<Self> {
        let mut out = self.clone();
        for (d, v) in other.iter() {
            out = out.decremented(d, v)?;
        }
        Some(out)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (d, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}", d + 1, v)?;
        }
        write!(f, ")")
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(self.0.len()))?;
        for (d, v) in self.iter() {
            map.serialize_entry(&(d + 1).to_string(), &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = MultiIndex;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from 1-based coordinate to value")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<MultiIndex, A::Error> {
                let mut s = MultiIndex::zero();
                while let Some((k, v)) = map.next_entry::<String, u32>()? {
                    let j: usize = k.parse().map_err(serde::de::Error::custom)?;
                    if j == 0 {
                        return Err(serde::de::Error::custom("coordinates are 1-based"));
                    }
                    s.set(j - 1, v);
                }
                Ok(s)
            }
        }
        de.deserialize_map(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let mut s = MultiIndex::from_dense(&[0, 2, 0, 1]);
        assert_eq!(s.support_len(), 2);
        assert_eq!(s.get(1), 2);
        s.set(1, 0);
        assert_eq!(s, MultiIndex::unit(3, 1));
        assert_eq!(MultiIndex::from_dense(&[0, 0]), MultiIndex::zero());
        assert_eq!(s.to_string(), "(4:1)");
    }

    #[test]
    fn predicates() {
        let s = MultiIndex::from_dense(&[2, 0, 4]);
        assert!(s.is_even());
        assert!(s.in_f_nu(2));
        assert!(!MultiIndex::from_dense(&[1, 2]).in_f_nu(2));
        assert!(MultiIndex::from_dense(&[1, 0, 3]).le(&MultiIndex::from_dense(&[1, 1, 3])));
        assert!(!MultiIndex::from_dense(&[2]).le(&MultiIndex::from_dense(&[1, 5])));
    }

    #[test]
    fn json_round_trip() {
        let s = MultiIndex::from_dense(&[0, 3, 0, 0, 0, 0, 0, 0, 0, 1]);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"2":3,"10":1}"#);
        let back: MultiIndex = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn dense_round_trip(v in proptest::collection::vec(0u32..5, 0..8)) {
            let s = MultiIndex::from_dense(&v);
            prop_assert_eq!(s.to_dense(v.len()), v.clone());
            prop_assert!(s.iter().all(|(_, x)| x > 0));
        }

        #[test]
        fn increment_then_decrement(v in proptest::collection::vec(0u32..5, 1..6), d in 0usize..6, step in 1u32..3) {
            let s = MultiIndex::from_dense(&v);
            let up = s.incremented(d, step);
            prop_assert_eq!(up.decremented(d, step), Some(s.clone()));
            prop_assert!(s.le(&up));
        }
    }
}
