//! Closed-form rates of the coded-prefetching scheme and its memory-sharing
//! envelope over the integer group sizes.

use crate::combin::{binomial, int, lower_convex_envelope, ratio, Envelope, Rational};
use crate::error::{Error, Result};
use crate::model::{CurveLabel, RateMemoryPoint, SystemParams};

fn check_ne(params: &SystemParams, ne: usize) -> Result<()> {
    if ne == 0 || ne > params.files() || ne > params.users() {
        return Err(Error::InvalidInput(format!("Ne = {ne} must lie in 1..={}", params.files())));
    }
    Ok(())
}

/// `K Ne C(N-1,g-1) - g C(Ne+1,g+1)`: messages sent for a demand with `ne`
/// distinct requests.
pub fn transmission_count(params: &SystemParams, ne: usize) -> Result<u64> {
    check_ne(params, ne)?;
    let (n, k, g) = (params.files() as u64, params.users() as u64, params.group() as i64);
    let first = binomial(n - 1, g - 1)?
        .checked_mul(k * ne as u64)
        .ok_or_else(|| Error::Overflow("transmission count".into()))?;
    let second = binomial(ne as u64 + 1, g + 1)?
        .checked_mul(g as u64)
        .ok_or_else(|| Error::Overflow("transmission count".into()))?;
    first.checked_sub(second).ok_or_else(|| Error::SchemeInvariant("negative transmission count".into()))
}

/// `K C(N-1,g-1) - (x+1) C(x,g-1)`, the closed form of `T(x+1) - T(x)`.
pub fn transmission_increment(params: &SystemParams, x: usize) -> Result<i128> {
    let (n, k, g) = (params.files() as u64, params.users() as i128, params.group() as i64);
    let per = binomial(n - 1, g - 1)? as i128;
    let inner = binomial(x as u64, g - 1)? as i128;
    Ok(k * per - (x as i128 + 1) * inner)
}

/// Delivery rate in file units for a demand with `ne` distinct requests.
pub fn rate_theorem1(params: &SystemParams, ne: usize) -> Result<Rational> {
    let count = transmission_count(params, ne)?;
    Ok(Rational::from_integer(count.into()) / Rational::from_integer(params.subfiles_per_file().into()))
}

/// Worst-case rate; the count is nondecreasing in `Ne`, so `Ne = N`.
pub fn worst_demand_rate(params: &SystemParams) -> Result<Rational> {
    rate_theorem1(params, params.files())
}

/// `(M, R) = (N/(gK), N - (N/K)(N+1)/(g+1))`.
pub fn rate_corollary2(params: &SystemParams) -> Result<RateMemoryPoint> {
    Ok(RateMemoryPoint {
        memory: params.memory(),
        rate: worst_demand_rate(params)?,
        label: CurveLabel::NewScheme,
        parameter: Some(params.group() as u64),
    })
}

/// The scheme's points for `g = 1..=N` and their lower convex envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateCurve {
    pub points: Vec<RateMemoryPoint>,
    pub envelope: Envelope,
}

impl RateCurve {
    /// Memory-shared rate; defined on `[1/K, N/K]` only.
    pub fn eval(&self, memory: &Rational) -> Result<Rational> {
        self.envelope.eval(memory)
    }

    pub fn point(&self, g: usize) -> Option<&RateMemoryPoint> {
        self.points.iter().find(|p| p.parameter == Some(g as u64))
    }
}

pub fn scheme_envelope(n: usize, k: usize) -> Result<RateCurve> {
    let points = (1..=n).map(|g| rate_corollary2(&SystemParams::analytic(n, k, g)?)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<_> = points.iter().map(RateMemoryPoint::as_pair).collect();
    let envelope = lower_convex_envelope(&pairs)?;
    Ok(RateCurve { points, envelope })
}

/// Scheme point `(M, R)` written directly from its closed form.
pub fn scheme_point_closed_form(n: usize, k: usize, g: usize) -> (Rational, Rational) {
    let (n, k, g) = (n as i64, k as i64, g as i64);
    (ratio(n, g * k), int(n) - ratio(n, k) * ratio(n + 1, g + 1))
}
