//! Baseline schemes, their memory-sharing envelope, and the lower bounds the
//! scheme is compared against.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::combin::{binomial, ceil, floor, int, lower_convex_envelope, positive_part, ratio, Envelope, Rational};
use crate::error::{Error, Result};
use crate::model::{CurveLabel, RateMemoryPoint};
use crate::rates::scheme_envelope;

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k < n {
        return Err(Error::InvalidParams(format!("need 1 <= N <= K, got N = {n}, K = {k}")));
    }
    Ok(())
}

fn check_memory(n: usize, memory: &Rational) -> Result<()> {
    if memory < &Rational::zero() || memory > &int(n as i64) {
        return Err(Error::OutOfDomain { query: memory.to_string(), lo: "0".into(), hi: n.to_string() });
    }
    Ok(())
}

fn point(memory: Rational, rate: Rational, label: CurveLabel, parameter: Option<u64>) -> RateMemoryPoint {
    RateMemoryPoint { memory, rate, label, parameter }
}

/// `(M, R) = (1/K, N - N/K)`.
pub fn cfl_point(n: usize, k: usize) -> Result<RateMemoryPoint> {
    check_nk(n, k)?;
    let (n, k) = (n as i64, k as i64);
    Ok(point(ratio(1, k), int(n) - ratio(n, k), CurveLabel::Cfl, None))
}

/// `(M, R) = (N/K, N - N(N+1)/(2K))`.
pub fn gbc_point(n: usize, k: usize) -> Result<RateMemoryPoint> {
    check_nk(n, k)?;
    let (n, k) = (n as i64, k as i64);
    Ok(point(ratio(n, k), int(n) - ratio(n * (n + 1), 2 * k), CurveLabel::Gbc, None))
}

/// `t = 0..=K`: `(M, R) = (t((N-1)t + K - N) / (K(K-1)), N(K-t)/K)`.
/// A single user has only the two trivial pairs.
pub fn mds_points(n: usize, k: usize) -> Result<Vec<RateMemoryPoint>> {
    check_nk(n, k)?;
    let (ni, ki) = (n as i64, k as i64);
    if k == 1 {
        return Ok(vec![
            point(Rational::zero(), int(ni), CurveLabel::Mds, Some(0)),
            point(int(ni), Rational::zero(), CurveLabel::Mds, Some(1)),
        ]);
    }
    Ok((0..=ki)
        .map(|t| {
            let memory = ratio(t * ((ni - 1) * t + ki - ni), ki * (ki - 1));
            point(memory, ratio(ni * (ki - t), ki), CurveLabel::Mds, Some(t as u64))
        })
        .collect())
}

/// A curve given by the lower convex envelope of labelled points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCurve {
    pub name: &'static str,
    pub points: Vec<RateMemoryPoint>,
    pub envelope: Envelope,
}

impl BoundCurve {
    pub fn eval(&self, memory: &Rational) -> Result<Rational> {
        self.envelope.eval(memory)
    }
}

/// Best previously known tradeoff: envelope of `(0, N)`, the CFL and GBC
/// pairs, and every MDS pair.
pub fn sota_envelope(n: usize, k: usize) -> Result<BoundCurve> {
    let mut points = vec![point(Rational::zero(), int(n as i64), CurveLabel::Trivial, None)];
    points.push(cfl_point(n, k)?);
    points.push(gbc_point(n, k)?);
    points.extend(mds_points(n, k)?);
    let pairs: Vec<_> = points.iter().map(RateMemoryPoint::as_pair).collect();
    let envelope = lower_convex_envelope(&pairs)?;
    Ok(BoundCurve { name: "sota", points, envelope })
}

/// Smallest memory the MDS family could need at rate `rate`:
/// `(N-R)((N-R)(NK-K) + N(K-N)) / (N^2 (K-1))`.
pub fn mds_memory_lb(n: usize, k: usize, rate: &Rational) -> Result<Rational> {
    check_nk(n, k)?;
    if k < 2 {
        return Err(Error::InvalidParams("the MDS memory bound needs K >= 2".into()));
    }
    let (ni, ki) = (n as i64, k as i64);
    let gap = int(ni) - rate;
    Ok(&gap * (&gap * int(ni * ki - ki) + int(ni * (ki - ni))) / int(ni * ni * (ki - 1)))
}

/// One group size in the comparison against the MDS memory bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupDominance {
    pub group: usize,
    #[serde(serialize_with = "ser_rational")]
    pub memory: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub rate: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub memory_lb: Rational,
    /// `M <= M_lb(R)`.
    pub dominates: bool,
    /// `K (g+1) <= N^2 g + 1`.
    pub condition: bool,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominanceReport {
    pub files: usize,
    pub users: usize,
    pub groups: Vec<GroupDominance>,
    /// `K <= (N^2+1)/2`.
    pub sufficient: bool,
    /// Grid points (of `grid_points` in `[1/K, N/K]`) where the scheme's
    /// envelope is at or below the previous best, and strictly below it.
    pub grid_points: usize,
    pub at_or_below: usize,
    pub strictly_below: usize,
}

impl DominanceReport {
    /// Dominance matches its condition at every `g < N`. At `g = N` the two
    /// memories coincide for every `K`, so that row is checked for equality.
    pub fn consistent(&self) -> bool {
        self.groups.iter().all(|row| {
            if row.group < self.files {
                row.dominates == row.condition
            } else {
                row.memory == row.memory_lb
            }
        })
    }
}

/// `grid` evenly spaced memories from `1/K` to `N/K` inclusive.
pub fn scheme_grid(n: usize, k: usize, grid: usize) -> Vec<Rational> {
    let lo = ratio(1, k as i64);
    let hi = ratio(n as i64, k as i64);
    if grid < 2 {
        return vec![lo];
    }
    (0..grid).map(|j| &lo + (&hi - &lo) * ratio(j as i64, grid as i64 - 1)).collect()
}

pub fn corollary3_check(n: usize, k: usize, grid: usize) -> Result<DominanceReport> {
    check_nk(n, k)?;
    let scheme = scheme_envelope(n, k)?;
    let groups = scheme
        .points
        .iter()
        .map(|pt| {
            let g = pt.parameter.expect("scheme points carry g") as usize;
            let memory_lb = mds_memory_lb(n, k, &pt.rate)?;
            Ok(GroupDominance {
                group: g,
                memory: pt.memory.clone(),
                rate: pt.rate.clone(),
                dominates: pt.memory <= memory_lb,
                memory_lb,
                condition: k * (g + 1) <= n * n * g + 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sota = sota_envelope(n, k)?;
    let (mut at_or_below, mut strictly_below) = (0, 0);
    let memories = scheme_grid(n, k, grid);
    for m in &memories {
        let new = scheme.eval(m)?;
        let old = sota.eval(m)?;
        at_or_below += usize::from(new <= old);
        strictly_below += usize::from(new < old);
    }
    Ok(DominanceReport {
        files: n,
        users: k,
        groups,
        sufficient: 2 * k <= n * n + 1,
        grid_points: memories.len(),
        at_or_below,
        strictly_below,
    })
}

/// `s - s M / floor(N/s)`, one cut of the cut-set bound.
pub fn cutset_term(n: usize, s: usize, memory: &Rational) -> Rational {
    let s_r = int(s as i64);
    let fl = floor(&ratio(n as i64, s as i64));
    &s_r - &s_r * memory / fl
}

/// Cut-set lower bound: maximum over `s in 1..=min(N,K)`, clamped at 0.
pub fn cutset_bound(n: usize, k: usize, memory: &Rational) -> Result<Rational> {
    check_nk(n, k)?;
    check_memory(n, memory)?;
    let best = (1..=n.min(k)).map(|s| cutset_term(n, s, memory)).max().expect("N >= 1");
    Ok(positive_part(best))
}

/// Scheme rate minus the `s = N` cut at `M = N/(gK)`, in its two
/// closed forms `(N/K)(N/g - (N+1)/(g+1))` and `C(N,g+1) / (K C(N-1,g-1))`.
/// Disagreement between them is an error.
pub fn cutset_gap(n: usize, k: usize, g: usize) -> Result<Rational> {
    check_nk(n, k)?;
    if g == 0 || g > n {
        return Err(Error::InvalidParams(format!("g = {g} must lie in 1..={n}")));
    }
    let (ni, ki, gi) = (n as i64, k as i64, g as i64);
    let difference = ratio(ni, ki) * (ratio(ni, gi) - ratio(ni + 1, gi + 1));
    let num = binomial(n as u64, gi + 1)?;
    let den = binomial(n as u64 - 1, gi - 1)?;
    let binomial_form = Rational::new(num.into(), (u128::from(den) * k as u128).into());
    if difference != binomial_form {
        return Err(Error::SchemeInvariant(format!("cut-set gap forms disagree: {difference} vs {binomial_form}")));
    }
    Ok(difference)
}

/// One `(s, l)` term of the STC bound. `mu = min((N - l s)/l, K - s)` is
/// kept rational.
pub fn stc_term(n: usize, k: usize, s: usize, l: usize, memory: &Rational) -> Rational {
    let (ni, ki, si, li) = (n as i64, k as i64, s as i64, l as i64);
    let mu = ratio(ni - li * si, li).min(int(ki - si));
    let residual = positive_part(int(ni - li * si));
    let correction = if residual.is_zero() { Rational::zero() } else { &mu * residual / (int(si) + &mu) };
    let tail = positive_part(int(ni - ki * li));
    (int(ni) - int(si) * memory - correction - tail) / int(li)
}

/// STC lower bound: maximum over `s in 1..=K`, `l in 1..=ceil(N/s)`,
/// clamped at 0.
pub fn stc_bound(n: usize, k: usize, memory: &Rational) -> Result<Rational> {
    check_nk(n, k)?;
    check_memory(n, memory)?;
    let mut best = Rational::zero();
    for s in 1..=k {
        let l_max = ceil(&ratio(n as i64, s as i64));
        let mut l = 1usize;
        while int(l as i64) <= l_max {
            let term = stc_term(n, k, s, l, memory);
            if term > best {
                best = term;
            }
            l += 1;
        }
    }
    Ok(best)
}

/// `N - 1 - 1/N`, the rate both the STC bound and the scheme reach at
/// `M = 1/(N-1)` when `N = K`.
pub fn tight_point_rate(n: usize) -> Rational {
    int(n as i64 - 1) - ratio(1, n as i64)
}

/// Memory where [`tight_point_rate`] applies.
pub fn tight_point_memory(n: usize) -> Rational {
    Rational::one() / int(n as i64 - 1)
}
