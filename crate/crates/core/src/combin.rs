//! Exact combinatorial primitives: binomials, lexicographic k-subset
//! enumeration and ranking, and lower convex envelopes over rationals.
//!
//! Files are numbered from 1, so a [`FileSubset`] over `n` files holds
//! members in `1..=n`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational used for every memory, rate and bound value.
pub type Rational = BigRational;

/// Largest universe a [`FileSubset`] can index.
pub const MAX_FILES: usize = 64;

/// Shorthand for `p/q` as a [`Rational`].
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `C(n, k)`; zero when `k < 0` or `k > n`. Overflow of `u64` is an error.
pub fn binomial(n: u64, k: i64) -> Result<u64> {
    if k < 0 || k as u64 > n {
        return Ok(0);
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (n - k + i) / i stays integral at every step
        acc = acc.checked_mul((n - k + i) as u128).ok_or_else(|| Error::Overflow(format!("C({n}, {k})")))? / i as u128;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("C({n}, {k})")))
}

/// `C(n, k)` for arguments already known to be in range (validated params).
pub(crate) fn choose(n: usize, k: usize) -> u64 {
    binomial(n as u64, k as i64).expect("binomial of validated parameters fits in u64")
}

/// A set of distinct file indices from `1..=64`, stored as a bitmask.
///
/// Ordering is lexicographic over the sorted member lists, which is also the
/// order [`enumerate_subsets`] produces.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FileSubset {
    mask: u64,
}

impl FileSubset {
    pub fn from_members(members: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &m in members {
            if m == 0 || m > MAX_FILES {
                return Err(Error::InvalidInput(format!("file index {m} outside 1..={MAX_FILES}")));
            }
            let bit = 1u64 << (m - 1);
            if mask & bit != 0 {
                return Err(Error::InvalidInput(format!("file index {m} repeated")));
            }
            mask |= bit;
        }
        Ok(FileSubset { mask })
    }

    pub(crate) fn from_mask(mask: u64) -> Self {
        FileSubset { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, file: usize) -> bool {
        (1..=MAX_FILES).contains(&file) && self.mask & (1u64 << (file - 1)) != 0
    }

    /// Members in increasing order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        let mut rest = self.mask;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(bit + 1)
            }
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.members().collect()
    }

    pub fn with(&self, file: usize) -> Self {
        FileSubset { mask: self.mask | (1u64 << (file - 1)) }
    }

    pub fn without(&self, file: usize) -> Self {
        FileSubset { mask: self.mask & !(1u64 << (file - 1)) }
    }

    pub fn is_subset_of(&self, other: &FileSubset) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn intersects(&self, other: &FileSubset) -> bool {
        self.mask & other.mask != 0
    }
}

impl Ord for FileSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.members().cmp(other.members())
    }
}

impl PartialOrd for FileSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FileSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FileSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// All `g`-subsets of `{1..n}` in lexicographic order. Empty when `g > n`.
pub fn enumerate_subsets(n: usize, g: usize) -> Vec<FileSubset> {
    assert!(n <= MAX_FILES, "at most {MAX_FILES} files");
    if g > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(choose(n, g) as usize);
    let mut current: Vec<usize> = (1..=g).collect();
    loop {
        out.push(FileSubset::from_members(&current).expect("distinct in-range members"));
        // advance to the next combination in lex order
        let mut pos = g;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if current[pos] < n - (g - 1 - pos) {
                break;
            }
        }
        current[pos] += 1;
        for q in pos + 1..g {
            current[q] = current[q - 1] + 1;
        }
    }
}

/// The `g`-subsets of `{1..n}` containing `file`, lexicographic order.
pub fn subsets_containing(n: usize, g: usize, file: usize) -> Vec<FileSubset> {
    enumerate_subsets(n, g).into_iter().filter(|s| s.contains(file)).collect()
}

/// Lexicographic rank of `subset` among all `|subset|`-subsets of `{1..n}`.
pub fn subset_rank(n: usize, subset: &FileSubset) -> usize {
    let k = subset.len();
    let mut rank = 0u64;
    let mut prev = 0usize;
    for (pos, m) in subset.members().enumerate() {
        for skipped in prev + 1..m {
            rank += choose(n - skipped, k - pos - 1);
        }
        prev = m;
    }
    rank as usize
}

/// Inverse of [`subset_rank`].
pub fn subset_unrank(n: usize, k: usize, mut rank: usize) -> Result<FileSubset> {
    let total = binomial(n as u64, k as i64)? as usize;
    if rank >= total {
        return Err(Error::InvalidInput(format!("rank {rank} >= C({n},{k}) = {total}")));
    }
    let mut members = Vec::with_capacity(k);
    let mut candidate = 1usize;
    for pos in 0..k {
        loop {
            let block = choose(n - candidate, k - pos - 1) as usize;
            if rank < block {
                members.push(candidate);
                candidate += 1;
                break;
            }
            rank -= block;
            candidate += 1;
        }
    }
    FileSubset::from_members(&members)
}

/// Rank of `subset` within `subsets_containing(n, |subset|, file)`.
///
/// Removing the shared element `file` and closing the gap it leaves is an
/// order-preserving bijection onto the `(|subset|-1)`-subsets of `{1..n-1}`.
pub fn rank_containing(n: usize, subset: &FileSubset, file: usize) -> Result<usize> {
    if !subset.contains(file) {
        return Err(Error::InvalidInput(format!("{subset} does not contain file {file}")));
    }
    let reduced: Vec<usize> =
        subset.members().filter(|&m| m != file).map(|m| if m > file { m - 1 } else { m }).collect();
    Ok(subset_rank(n - 1, &FileSubset::from_members(&reduced)?))
}

/// Inverse of [`rank_containing`].
pub fn unrank_containing(n: usize, g: usize, file: usize, rank: usize) -> Result<FileSubset> {
    if g == 0 || file == 0 || file > n {
        return Err(Error::InvalidInput(format!("no {g}-subset of 1..={n} contains {file}")));
    }
    let reduced = subset_unrank(n - 1, g - 1, rank)?;
    let members: Vec<usize> =
        reduced.members().map(|m| if m >= file { m + 1 } else { m }).chain(std::iter::once(file)).collect();
    FileSubset::from_members(&members)
}

/// Piecewise-linear lower convex envelope of a finite point set in the
/// (memory, rate) plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    vertices: Vec<(Rational, Rational)>,
}

impl Envelope {
    /// Hull vertices, strictly increasing in the first coordinate.
    pub fn vertices(&self) -> &[(Rational, Rational)] {
        &self.vertices
    }

    pub fn domain(&self) -> (&Rational, &Rational) {
        (&self.vertices[0].0, &self.vertices[self.vertices.len() - 1].0)
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return Err(Error::OutOfDomain { query: x.to_string(), lo: lo.to_string(), hi: hi.to_string() });
        }
        // first vertex with abscissa >= x
        let idx = self.vertices.partition_point(|(vx, _)| vx < x);
        let (x1, y1) = &self.vertices[idx];
        if x1 == x {
            return Ok(y1.clone());
        }
        let (x0, y0) = &self.vertices[idx - 1];
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Lower convex envelope of `points` (monotone chain, exact arithmetic).
/// Duplicate abscissae keep the lowest ordinate; collinear vertices are dropped.
pub fn lower_convex_envelope(points: &[(Rational, Rational)]) -> Result<Envelope> {
    if points.is_empty() {
        return Err(Error::EmptyEnvelope);
    }
    let mut sorted: Vec<(Rational, Rational)> = points.to_vec();
    sorted.sort();
    sorted.dedup_by(|later, earlier| later.0 == earlier.0);

    let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 {
            let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
            if cross.is_positive() {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    Ok(Envelope { vertices: hull })
}

/// Floor of a rational as an integer rational.
pub fn floor(r: &Rational) -> Rational {
    r.floor()
}

pub fn ceil(r: &Rational) -> Rational {
    r.ceil()
}

/// `max(r, 0)`.
pub fn positive_part(r: Rational) -> Rational {
    if r.is_negative() {
        Rational::zero()
    } else {
        r
    }
}

/// Decimal rendering with `digits` fractional digits, rounded half away
/// from zero. Exact: no floating point involved.
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r * Rational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded.is_negative();
    let magnitude = rounded.abs();
    let int_part = &magnitude / &scale;
    let frac_part = &magnitude % &scale;
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
    }
}
