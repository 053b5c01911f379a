//! Coded prefetching: every user stores, for each `g`-subset `A` of files,
//! the XOR of one subfile of each file in `A`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::combin::{subset_rank, subsets_containing, FileSubset};
use crate::error::{Error, Result};
use crate::model::{cache_subsets, subfile_index, xor_into, CacheSymbol, Footprint, Library, SubfileId, SystemParams};

/// Caches of every user, plus the server-side library they were built from.
#[derive(Debug, Clone)]
pub struct PlacementResult {
    params: SystemParams,
    library: Arc<Library>,
    caches: Vec<Vec<CacheSymbol>>,
    assignment: BTreeMap<(usize, usize), Vec<FileSubset>>,
}

impl PlacementResult {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Server-side copy of the files. Users never see this.
    pub fn library(&self) -> &Library {
        &self.library
    }

    /// Symbols of `user`, in lexicographic subset order.
    pub fn cache(&self, user: usize) -> &[CacheSymbol] {
        &self.caches[user - 1]
    }

    pub fn symbol(&self, user: usize, subset: &FileSubset) -> &CacheSymbol {
        &self.caches[user - 1][subset_rank(self.params.files(), subset)]
    }

    /// Subsets the subfiles of file `file` at user `user` are assigned to.
    pub fn assignment(&self, file: usize, user: usize) -> &[FileSubset] {
        &self.assignment[&(file, user)]
    }

    pub fn cache_bits(&self, user: usize) -> usize {
        self.cache(user).iter().map(|s| s.payload.len() * 8).sum()
    }
}

/// Builds every cache. The `j`-th subfile of `(f, i)` goes to the `j`-th
/// subset containing `f` in lexicographic order.
pub fn build_placement(params: &SystemParams, library: Library) -> Result<PlacementResult> {
    library.check(params)?;
    let dim = params.subfile_count();
    let subsets = cache_subsets(params);

    let mut assignment = BTreeMap::new();
    for f in 1..=params.files() {
        let containing = subsets_containing(params.files(), params.group(), f);
        for i in 1..=params.users() {
            assignment.insert((f, i), containing.clone());
        }
    }

    let caches = (1..=params.users())
        .map(|owner| {
            subsets
                .iter()
                .map(|&subset| {
                    let mut payload = vec![0u8; params.subfile_bytes()];
                    let mut footprint = Footprint::zero(dim);
                    for f in subset.members() {
                        let id = SubfileId::new(f, owner, subset);
                        xor_into(&mut payload, library.subfile(params, &id));
                        footprint.flip(subfile_index(params, &id)?);
                    }
                    Ok(CacheSymbol { owner, subset, payload, footprint })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    if caches.iter().any(|c| c.len() != params.symbols_per_cache()) {
        return Err(Error::SchemeInvariant("cache holds the wrong number of symbols".into()));
    }

    Ok(PlacementResult { params: params.clone(), library: Arc::new(library), caches, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combin::{choose, ratio, Rational};
    use crate::model::subfile_from_index;

    fn placement(n: usize, k: usize, g: usize, bytes: usize) -> PlacementResult {
        let p = SystemParams::new(n, k, g, bytes).unwrap();
        build_placement(&p, Library::generate(&p, 11)).unwrap()
    }

    #[test]
    fn worked_example_caches() {
        let pl = placement(3, 6, 2, 4);
        assert_eq!(pl.params().memory(), ratio(1, 4));
        for user in 1..=6 {
            let cache = pl.cache(user);
            assert_eq!(cache.len(), 3);
            for sym in cache {
                assert_eq!(sym.footprint.weight(), 2);
                let mut expect = vec![0u8; 4];
                for id in sym.constituents() {
                    xor_into(&mut expect, pl.library().subfile(pl.params(), &id));
                }
                assert_eq!(sym.payload, expect);
            }
        }
    }

    #[test]
    fn uncoded_when_group_is_one() {
        let pl = placement(3, 6, 1, 2);
        assert_eq!(pl.params().memory(), ratio(1, 2));
        for sym in pl.cache(4) {
            assert_eq!(sym.footprint.weight(), 1);
            let id = sym.constituents().next().unwrap();
            assert_eq!(sym.payload, pl.library().subfile(pl.params(), &id));
        }
    }

    #[test]
    fn full_group_stores_one_symbol() {
        let pl = placement(4, 5, 4, 2);
        for user in 1..=5 {
            assert_eq!(pl.cache(user).len(), 1);
            assert_eq!(pl.cache(user)[0].footprint.weight(), 4);
        }
    }

    #[test]
    fn wrong_file_length_names_the_file() {
        let p = SystemParams::new(3, 6, 2, 4).unwrap();
        let mut files: Vec<Vec<u8>> = (1..=3).map(|f| Library::generate(&p, 1).file(f).to_vec()).collect();
        files[1].pop();
        let err = build_placement(&p, Library::new(files)).unwrap_err();
        assert_eq!(err, Error::FileLength { file: 2, expected: 48, actual: 47 });
    }

    #[test]
    fn partition_and_cache_size_over_grid() {
        for n in 1..=5 {
            for k in n..=7 {
                for g in 1..=n {
                    let pl = placement(n, k, g, 3);
                    let p = pl.params().clone();
                    let mut cover = vec![0u32; p.subfile_count()];
                    for user in 1..=k {
                        for sym in pl.cache(user) {
                            for idx in sym.footprint.ones() {
                                cover[idx] += 1;
                                assert_eq!(subfile_from_index(&p, idx).unwrap().user, user);
                            }
                        }
                        // cache bits == M * F exactly
                        let expected = p.memory() * Rational::from_integer((p.file_bytes() * 8).into());
                        assert_eq!(Rational::from_integer(pl.cache_bits(user).into()), expected);
                        assert_eq!(pl.cache(user).len() as u64, choose(n, g));
                    }
                    assert!(cover.iter().all(|&c| c == 1), "N={n} K={k} g={g}");
                    for f in 1..=n {
                        for i in 1..=k {
                            assert_eq!(pl.assignment(f, i), subsets_containing(n, g, f).as_slice());
                        }
                    }
                }
            }
        }
    }
}
