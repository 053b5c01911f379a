//! Incremental row-echelon basis over GF(2).

use crate::model::Footprint;

/// Rows keyed by their leading (lowest) coordinate. Reducing a vector
/// against the basis clears coordinates in increasing order, so every XOR
/// only touches coordinates above the one it clears.
#[derive(Debug, Clone)]
pub struct Gf2Basis {
    dim: usize,
    rows: Vec<Option<Footprint>>,
    rank: usize,
}

impl Gf2Basis {
    pub fn new(dim: usize) -> Self {
        Gf2Basis { dim, rows: vec![None; dim], rank: 0 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Residue of `v` after elimination; zero iff `v` lies in the span.
    pub fn reduce(&self, v: &Footprint) -> Footprint {
        let mut v = v.clone();
        while let Some(lead) = v.leading() {
            match &self.rows[lead] {
                Some(row) => v.xor_assign(row),
                None => break,
            }
        }
        v
    }

    /// Adds `v`; returns whether the rank grew.
    pub fn insert(&mut self, v: &Footprint) -> bool {
        assert_eq!(v.dim(), self.dim, "footprint dimension mismatch");
        let residue = self.reduce(v);
        let Some(lead) = residue.leading() else {
            return false;
        };
        self.rows[lead] = Some(residue);
        self.rank += 1;
        true
    }

    pub fn contains(&self, v: &Footprint) -> bool {
        self.reduce(v).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(dim: usize, ones: &[usize]) -> Footprint {
        let mut f = Footprint::zero(dim);
        for &o in ones {
            f.flip(o);
        }
        f
    }

    #[test]
    fn xor_chain_spans_units() {
        let mut b = Gf2Basis::new(4);
        assert!(b.insert(&fp(4, &[0, 1])));
        assert!(b.insert(&fp(4, &[1, 2])));
        assert!(!b.insert(&fp(4, &[0, 2])));
        assert_eq!(b.rank(), 2);
        assert!(!b.contains(&fp(4, &[0])));
        assert!(b.insert(&fp(4, &[2])));
        for i in 0..3 {
            assert!(b.contains(&fp(4, &[i])));
        }
        assert!(!b.contains(&fp(4, &[3])));
    }

    /// Rank by exhaustive enumeration of all subset XORs.
    fn brute_rank(rows: &[u16]) -> usize {
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..1 << rows.len() {
            let mut acc = 0u16;
            for (i, r) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc ^= r;
                }
            }
            span.insert(acc);
        }
        span.len().trailing_zeros() as usize
    }

    proptest! {
        #[test]
        fn rank_and_membership_match_enumeration(rows in prop::collection::vec(any::<u16>(), 0..9), probe in any::<u16>()) {
            let to_fp = |w: u16| fp(16, &(0..16).filter(|b| w >> b & 1 == 1).collect::<Vec<_>>());
            let mut basis = Gf2Basis::new(16);
            for &r in &rows {
                basis.insert(&to_fp(r));
            }
            prop_assert_eq!(basis.rank(), brute_rank(&rows));
            let mut span = std::collections::HashSet::new();
            for mask in 0u32..1 << rows.len() {
                let mut acc = 0u16;
                for (i, r) in rows.iter().enumerate() {
                    if mask >> i & 1 == 1 { acc ^= r; }
                }
                span.insert(acc);
            }
            prop_assert_eq!(basis.contains(&to_fp(probe)), span.contains(&probe));
        }
    }
}
