//! Domain types shared by placement, delivery and decoding.
//!
//! Files and users are numbered from 1, matching the usual presentation of
//! the scheme. Every payload-bearing value (cached symbol, broadcast message)
//! carries a [`Footprint`]: its GF(2) coefficient vector over all subfiles,
//! so linear-algebra checks never need to know how a symbol was built.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combin::{
    self, choose, enumerate_subsets, rank_containing, ratio, unrank_containing, FileSubset, Rational, MAX_FILES,
};
use crate::error::{Error, Result};

/// `(N, K, g, subfile size)` with the scheme's derived quantities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemParams {
    files: usize,
    users: usize,
    group: usize,
    subfile_bytes: usize,
    per_user_file: usize,
}

impl SystemParams {
    pub fn new(files: usize, users: usize, group: usize, subfile_bytes: usize) -> Result<Self> {
        if files == 0 || files > MAX_FILES {
            return Err(Error::InvalidParams(format!("N = {files} must lie in 1..={MAX_FILES}")));
        }
        if users < files {
            return Err(Error::InvalidParams(format!("need N <= K, got N = {files}, K = {users}")));
        }
        if group == 0 || group > files {
            return Err(Error::InvalidParams(format!("g = {group} must lie in 1..={files}")));
        }
        if subfile_bytes == 0 {
            return Err(Error::InvalidParams("subfile size must be positive".into()));
        }
        let per_user_file = combin::binomial(files as u64 - 1, group as i64 - 1)?;
        let total = (files as u64)
            .checked_mul(users as u64)
            .and_then(|v| v.checked_mul(per_user_file))
            .filter(|&v| v <= u32::MAX as u64)
            .ok_or_else(|| Error::InvalidParams("subfile index space too large".into()))?;
        (total as usize)
            .checked_mul(subfile_bytes)
            .ok_or_else(|| Error::InvalidParams("library size overflows".into()))?;
        Ok(SystemParams { files, users, group, subfile_bytes, per_user_file: per_user_file as usize })
    }

    /// Parameters for closed-form analysis only (one-byte subfiles).
    pub fn analytic(files: usize, users: usize, group: usize) -> Result<Self> {
        Self::new(files, users, group, 1)
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn group(&self) -> usize {
        self.group
    }

    pub fn subfile_bytes(&self) -> usize {
        self.subfile_bytes
    }

    /// Normalized cache size `M = N / (gK)`.
    pub fn memory(&self) -> Rational {
        ratio(self.files as i64, (self.group * self.users) as i64)
    }

    /// `C(N-1, g-1)`: subfiles of each file handed to each user.
    pub fn subfiles_per_user_file(&self) -> usize {
        self.per_user_file
    }

    /// `K * C(N-1, g-1)`.
    pub fn subfiles_per_file(&self) -> usize {
        self.users * self.per_user_file
    }

    /// `C(N, g)`: coded symbols per cache.
    pub fn symbols_per_cache(&self) -> usize {
        choose(self.files, self.group) as usize
    }

    /// Dimension of the footprint space, `N * K * C(N-1, g-1)`.
    pub fn subfile_count(&self) -> usize {
        self.files * self.subfiles_per_file()
    }

    pub fn file_bytes(&self) -> usize {
        self.subfiles_per_file() * self.subfile_bytes
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} K={} g={}", self.files, self.users, self.group)
    }
}

/// The demand vector: `files[k-1]` is the file requested by user `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Demand {
    files: Vec<usize>,
    requested: FileSubset,
}

impl Demand {
    pub fn new(params: &SystemParams, files: Vec<usize>) -> Result<Self> {
        if files.len() != params.users() {
            return Err(Error::InvalidDemand(format!("expected {} entries, got {}", params.users(), files.len())));
        }
        let mut requested = FileSubset::default();
        for (k, &f) in files.iter().enumerate() {
            if f == 0 || f > params.files() {
                return Err(Error::InvalidDemand(format!(
                    "user {} requests file {f}, outside 1..={}",
                    k + 1,
                    params.files()
                )));
            }
            requested = requested.with(f);
        }
        Ok(Demand { files, requested })
    }

    /// File requested by `user` (1-based).
    pub fn of(&self, user: usize) -> usize {
        self.files[user - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.files
    }

    /// `Ne(d)`, the number of distinct requested files.
    pub fn distinct(&self) -> usize {
        self.requested.len()
    }

    pub fn requested(&self) -> FileSubset {
        self.requested
    }

    /// Users requesting `file`, ascending.
    pub fn users_requesting(&self, file: usize) -> impl Iterator<Item = usize> + '_ {
        self.files.iter().enumerate().filter(move |(_, &f)| f == file).map(|(k, _)| k + 1)
    }

    /// Every demand vector over `params`, in lexicographic order.
    pub fn all(params: &SystemParams) -> impl Iterator<Item = Demand> + '_ {
        let n = params.files();
        let k = params.users();
        let total = n.checked_pow(k as u32).unwrap_or(usize::MAX);
        (0..total).map(move |mut code| {
            let mut files = vec![0; k];
            for slot in files.iter_mut().rev() {
                *slot = code % n + 1;
                code /= n;
            }
            Demand::new(params, files).expect("generated demand is valid")
        })
    }
}

impl fmt::Display for Demand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.files.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// One subfile `W_{file, subset}^{(user)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubfileId {
    pub file: usize,
    pub user: usize,
    pub subset: FileSubset,
}

impl SubfileId {
    pub fn new(file: usize, user: usize, subset: FileSubset) -> Self {
        SubfileId { file, user, subset }
    }
}

impl fmt::Display for SubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W[{},{}]^({})", self.file, self.subset, self.user)
    }
}

impl Serialize for SubfileId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Global rank of a subfile: file-major, then user, then the subset's rank
/// among the subsets containing the file.
pub fn subfile_index(params: &SystemParams, id: &SubfileId) -> Result<usize> {
    if id.file == 0 || id.file > params.files() {
        return Err(Error::InvalidSubfile(format!("{id}: file out of range")));
    }
    if id.user == 0 || id.user > params.users() {
        return Err(Error::InvalidSubfile(format!("{id}: user out of range")));
    }
    if id.subset.len() != params.group() || !id.subset.is_subset_of(&all_files(params)) {
        return Err(Error::InvalidSubfile(format!("{id}: subset is not a {}-subset", params.group())));
    }
    if !id.subset.contains(id.file) {
        return Err(Error::InvalidSubfile(format!("{id}: file not in its subset")));
    }
    let within = rank_containing(params.files(), &id.subset, id.file)?;
    Ok(((id.file - 1) * params.users() + (id.user - 1)) * params.subfiles_per_user_file() + within)
}

/// Inverse of [`subfile_index`].
pub fn subfile_from_index(params: &SystemParams, index: usize) -> Result<SubfileId> {
    if index >= params.subfile_count() {
        return Err(Error::InvalidSubfile(format!("index {index} >= {}", params.subfile_count())));
    }
    let per = params.subfiles_per_user_file();
    let within = index % per;
    let pair = index / per;
    let user = pair % params.users() + 1;
    let file = pair / params.users() + 1;
    let subset = unrank_containing(params.files(), params.group(), file, within)?;
    Ok(SubfileId { file, user, subset })
}

fn all_files(params: &SystemParams) -> FileSubset {
    FileSubset::from_mask(if params.files() == 64 { u64::MAX } else { (1u64 << params.files()) - 1 })
}

/// Coefficient vector over GF(2), one coordinate per subfile.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Footprint {
    words: Vec<u64>,
    dim: usize,
}

impl Footprint {
    pub fn zero(dim: usize) -> Self {
        Footprint { words: vec![0; dim.div_ceil(64)], dim }
    }

    pub fn unit(dim: usize, index: usize) -> Self {
        let mut fp = Self::zero(dim);
        fp.flip(index);
        fp
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flip(&mut self, index: usize) {
        assert!(index < self.dim, "coordinate {index} outside dimension {}", self.dim);
        self.words[index / 64] ^= 1u64 << (index % 64);
    }

    pub fn get(&self, index: usize) -> bool {
        index < self.dim && self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn xor_assign(&mut self, other: &Footprint) {
        assert_eq!(self.dim, other.dim, "footprint dimensions differ");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Lowest set coordinate.
    pub fn leading(&self) -> Option<usize> {
        self.words.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Set coordinates, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }

    /// Subfiles combined in this footprint.
    pub fn subfiles(&self, params: &SystemParams) -> Vec<SubfileId> {
        self.ones().map(|i| subfile_from_index(params, i).expect("coordinate within dimension")).collect()
    }
}

impl fmt::Debug for Footprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.ones()).finish()
    }
}

pub fn xor_into(dst: &mut [u8], src: &[u8]) {
    assert_eq!(dst.len(), src.len(), "payload lengths differ");
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// The server's file library. File `f` is split into `K * C(N-1, g-1)`
/// equal chunks; chunk `j` of `(f, i)` sits at position
/// `(i-1) * C(N-1, g-1) + j`, where `j` ranks the subset among those
/// containing `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Library {
    files: Vec<Vec<u8>>,
}

impl Library {
    pub fn new(files: Vec<Vec<u8>>) -> Self {
        Library { files }
    }

    /// Deterministic pseudo-random library for `params`.
    pub fn generate(params: &SystemParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let files = (0..params.files())
            .map(|_| {
                let mut buf = vec![0u8; params.file_bytes()];
                rng.fill_bytes(&mut buf);
                buf
            })
            .collect();
        Library { files }
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Contents of file `file` (1-based).
    pub fn file(&self, file: usize) -> &[u8] {
        &self.files[file - 1]
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        if self.files.len() != params.files() {
            return Err(Error::InvalidParams(format!(
                "library holds {} files, expected {}",
                self.files.len(),
                params.files()
            )));
        }
        for (i, f) in self.files.iter().enumerate() {
            if f.len() != params.file_bytes() {
                return Err(Error::FileLength { file: i + 1, expected: params.file_bytes(), actual: f.len() });
            }
        }
        Ok(())
    }

    pub fn subfile(&self, params: &SystemParams, id: &SubfileId) -> &[u8] {
        let index = subfile_index(params, id).expect("valid subfile id");
        let chunk = index % params.subfiles_per_file();
        let b = params.subfile_bytes();
        &self.files[id.file - 1][chunk * b..(chunk + 1) * b]
    }
}

/// Byte range of a subfile inside its file.
pub fn subfile_offset(params: &SystemParams, id: &SubfileId) -> Result<usize> {
    Ok(subfile_index(params, id)? % params.subfiles_per_file() * params.subfile_bytes())
}

/// One coded cached subfile `Z_A^{(i)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheSymbol {
    pub owner: usize,
    pub subset: FileSubset,
    pub payload: Vec<u8>,
    pub footprint: Footprint,
}

impl CacheSymbol {
    /// Constituent subfiles, one per file of the subset.
    pub fn constituents(&self) -> impl Iterator<Item = SubfileId> + '_ {
        self.subset.members().map(move |f| SubfileId::new(f, self.owner, self.subset))
    }
}

/// Delivery phase that emitted a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Phase {
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "II-P1")]
    TypeIIPhase1,
    #[serde(rename = "II-P2")]
    TypeIIPhase2,
    #[serde(rename = "III-P1")]
    TypeIIIPhase1,
    #[serde(rename = "III-P2")]
    TypeIIIPhase2,
}

impl Phase {
    pub const ALL: [Phase; 5] =
        [Phase::TypeI, Phase::TypeIIPhase1, Phase::TypeIIPhase2, Phase::TypeIIIPhase1, Phase::TypeIIIPhase2];

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::TypeI => "I",
            Phase::TypeIIPhase1 => "II-P1",
            Phase::TypeIIPhase2 => "II-P2",
            Phase::TypeIIIPhase1 => "III-P1",
            Phase::TypeIIIPhase2 => "III-P2",
        })
    }
}

/// Which delivery rule produced a message and from which subfiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// A single requested subfile sent in the clear (Type I, Type II phase 1).
    Uncoded { subfile: SubfileId },
    /// `W_{f,A}^{(member)} xor W_{f,A}^{(leader)}` within one demand group.
    LeaderExchange { file: usize, subset: FileSubset, member: usize, leader: usize },
    /// `Y_V^{(owner, partner)}`: the owner's subfile of `file` paired with the
    /// subfile of the same file selected from the partner leader's cache.
    GroupPair { group: Vec<usize>, owner: usize, partner: usize, file: usize },
    /// `Y_V`: XOR of the selected subfiles of every leader in the group.
    GroupSum { group: Vec<usize>, selected: Vec<SubfileId> },
}

/// One unit-length broadcast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastMessage {
    pub phase: Phase,
    pub payload: Vec<u8>,
    pub footprint: Footprint,
    pub provenance: Provenance,
}

/// Ordered broadcast with per-phase counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransmissionLog {
    messages: Vec<BroadcastMessage>,
    counts: [usize; 5],
}

impl TransmissionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, message: BroadcastMessage) {
        self.counts[message.phase.slot()] += 1;
        self.messages.push(message);
    }

    pub fn extend(&mut self, messages: impl IntoIterator<Item = BroadcastMessage>) {
        for m in messages {
            self.push(m);
        }
    }

    pub fn messages(&self) -> &[BroadcastMessage] {
        &self.messages
    }

    pub fn in_phase(&self, phase: Phase) -> impl Iterator<Item = &BroadcastMessage> {
        self.messages.iter().filter(move |m| m.phase == phase)
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.counts[phase.slot()]
    }

    pub fn type1(&self) -> usize {
        self.count(Phase::TypeI)
    }

    pub fn type2(&self) -> usize {
        self.count(Phase::TypeIIPhase1) + self.count(Phase::TypeIIPhase2)
    }

    pub fn type3(&self) -> usize {
        self.count(Phase::TypeIIIPhase1) + self.count(Phase::TypeIIIPhase2)
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Removes and returns the last message (fault injection).
    pub fn pop(&mut self) -> Option<BroadcastMessage> {
        let m = self.messages.pop()?;
        self.counts[m.phase.slot()] -= 1;
        Some(m)
    }
}

/// Source of a rate-memory point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CurveLabel {
    Trivial,
    Cfl,
    Gbc,
    Mds,
    NewScheme,
}

impl fmt::Display for CurveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveLabel::Trivial => "trivial",
            CurveLabel::Cfl => "cfl",
            CurveLabel::Gbc => "gbc",
            CurveLabel::Mds => "mds",
            CurveLabel::NewScheme => "new",
        })
    }
}

/// An exact `(M, R)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateMemoryPoint {
    pub memory: Rational,
    pub rate: Rational,
    pub label: CurveLabel,
    /// `g` for the new scheme, `t` for the MDS family.
    pub parameter: Option<u64>,
}

impl RateMemoryPoint {
    pub fn as_pair(&self) -> (Rational, Rational) {
        (self.memory.clone(), self.rate.clone())
    }
}

/// Every `g`-subset of the library's files, in the order caches store them.
pub fn cache_subsets(params: &SystemParams) -> Vec<FileSubset> {
    enumerate_subsets(params.files(), params.group())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(3, 6, 2, 1).is_ok());
        assert!(SystemParams::new(4, 3, 2, 1).is_err());
        assert!(SystemParams::new(3, 6, 0, 1).is_err());
        assert!(SystemParams::new(3, 6, 4, 1).is_err());
        assert!(SystemParams::new(3, 6, 2, 0).is_err());
        assert!(SystemParams::new(0, 6, 1, 1).is_err());
        let p = SystemParams::new(3, 6, 2, 1).unwrap();
        assert_eq!(p.memory(), ratio(1, 4));
        assert_eq!(p.subfiles_per_file(), 12);
        assert_eq!(p.subfile_count(), 36);
        assert_eq!(p.symbols_per_cache(), 3);
    }

    #[test]
    fn demand_validation_and_distinct() {
        let p = SystemParams::new(3, 6, 2, 1).unwrap();
        let d = Demand::new(&p, vec![1, 1, 2, 2, 3, 3]).unwrap();
        assert_eq!(d.distinct(), 3);
        assert_eq!(d.users_requesting(2).collect::<Vec<_>>(), vec![3, 4]);
        assert!(Demand::new(&p, vec![1, 1, 2, 2, 3]).is_err());
        assert!(Demand::new(&p, vec![0, 1, 2, 2, 3, 3]).is_err());
        assert!(Demand::new(&p, vec![4, 1, 2, 2, 3, 3]).is_err());
        assert_eq!(Demand::all(&p).count(), 729);
    }

    #[test]
    fn index_space_of_worked_example() {
        let p = SystemParams::new(3, 6, 2, 1).unwrap();
        let mut seen = vec![false; p.subfile_count()];
        let mut count = 0;
        for f in 1..=3 {
            for i in 1..=6 {
                for a in combin::subsets_containing(3, 2, f) {
                    let idx = subfile_index(&p, &SubfileId::new(f, i, a)).unwrap();
                    assert!(!seen[idx]);
                    seen[idx] = true;
                    count += 1;
                }
            }
        }
        assert_eq!(count, 36);
        let first = SubfileId::new(1, 1, FileSubset::from_members(&[1, 2]).unwrap());
        let r = subfile_index(&p, &first).unwrap();
        assert_eq!(r, 0);
        assert_eq!(subfile_index(&p, &first).unwrap(), r);
    }

    #[test]
    fn index_rejects_file_outside_subset() {
        let p = SystemParams::new(3, 6, 2, 1).unwrap();
        let bad = SubfileId::new(3, 1, FileSubset::from_members(&[1, 2]).unwrap());
        assert!(subfile_index(&p, &bad).is_err());
        let wrong_size = SubfileId::new(1, 1, FileSubset::from_members(&[1]).unwrap());
        assert!(subfile_index(&p, &wrong_size).is_err());
    }

    #[test]
    fn footprint_algebra() {
        let mut a = Footprint::unit(100, 3);
        let b = Footprint::unit(100, 70);
        assert_eq!(a.weight(), 1);
        a.xor_assign(&b);
        assert_eq!(a.weight(), 2);
        assert_eq!(a.ones().collect::<Vec<_>>(), vec![3, 70]);
        assert_eq!(a.leading(), Some(3));
        a.xor_assign(&b);
        assert_eq!(a, Footprint::unit(100, 3));
        a.flip(3);
        assert!(a.is_zero());
        assert_eq!(a.leading(), None);
    }

    #[test]
    fn log_counters_track_pushes_and_pops() {
        let p = SystemParams::new(2, 2, 1, 1).unwrap();
        let sub = SubfileId::new(1, 1, FileSubset::from_members(&[1]).unwrap());
        let msg = |phase| BroadcastMessage {
            phase,
            payload: vec![0],
            footprint: Footprint::zero(p.subfile_count()),
            provenance: Provenance::Uncoded { subfile: sub },
        };
        let mut log = TransmissionLog::new();
        log.push(msg(Phase::TypeI));
        log.push(msg(Phase::TypeIIPhase2));
        log.push(msg(Phase::TypeIIIPhase2));
        assert_eq!((log.type1(), log.type2(), log.type3()), (1, 1, 1));
        log.pop();
        assert_eq!(log.type3(), 0);
        assert_eq!(log.len(), 2);
    }

    #[test]
    fn library_generation_is_deterministic() {
        let p = SystemParams::new(3, 4, 2, 8).unwrap();
        let a = Library::generate(&p, 7);
        let b = Library::generate(&p, 7);
        let c = Library::generate(&p, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.check(&p).unwrap();
        assert_eq!(a.file(1).len(), p.file_bytes());
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 1usize..6, extra in 0usize..4, g_seed in 0usize..6) {
            let k = n + extra;
            let g = g_seed % n + 1;
            let p = SystemParams::new(n, k, g, 1).unwrap();
            for idx in 0..p.subfile_count() {
                let id = subfile_from_index(&p, idx).unwrap();
                prop_assert!(id.subset.contains(id.file));
                prop_assert_eq!(subfile_index(&p, &id).unwrap(), idx);
            }
            prop_assert!(subfile_from_index(&p, p.subfile_count()).is_err());
        }
    }
}
