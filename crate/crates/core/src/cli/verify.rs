use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{CliError, VerifyArgs};
use crate::decoder::decode_all;
use crate::delivery::{deliver, select_leaders, PhaseCounts};
use crate::error::Result;
use crate::model::{Demand, Library, Phase, SystemParams};
use crate::placement::build_placement;
use crate::rates::transmission_count;

/// Totals for one `(N, K, g)` over every demand.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GridSummary {
    pub files: usize,
    pub users: usize,
    pub group: usize,
    pub demands: usize,
    pub user_checks: usize,
    pub decode_failures: usize,
    pub oracle_failures: usize,
    /// Decode and oracle disagreed.
    pub disagreements: usize,
    /// Demands whose per-phase or total counts missed the closed form.
    pub count_failures: usize,
}

impl GridSummary {
    pub fn failures(&self) -> usize {
        self.decode_failures + self.oracle_failures + self.disagreements + self.count_failures
    }
}

/// Checks every demand for `params`. With `drop_last`, the final message of
/// each broadcast is removed first.
pub fn verify_grid(params: &SystemParams, seed: u64, drop_last: bool) -> Result<GridSummary> {
    let placement = build_placement(params, Library::generate(params, seed))?;
    let demands: Vec<Demand> = Demand::all(params).collect();
    let partials = demands
        .par_iter()
        .map(|demand| {
            let mut log = deliver(&placement, demand, &select_leaders(demand))?;
            let ne = demand.distinct();
            let counts = PhaseCounts::closed_form(params, ne);
            let counts_ok = log.len() as u64 == transmission_count(params, ne)?
                && Phase::ALL.iter().all(|&p| log.count(p) as u64 == counts.of_phase(p));
            if drop_last {
                log.pop();
            }
            let outcomes = decode_all(&placement, &log, demand, true);
            let mut s = GridSummary { demands: 1, user_checks: outcomes.len(), ..Default::default() };
            s.count_failures = usize::from(!counts_ok);
            for o in &outcomes {
                s.decode_failures += usize::from(!o.decoded);
                s.oracle_failures += usize::from(!o.oracle.as_ref().is_some_and(|r| r.decodable));
                s.disagreements += usize::from(!o.agrees());
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total =
        GridSummary { files: params.files(), users: params.users(), group: params.group(), ..Default::default() };
    for s in partials {
        total.demands += s.demands;
        total.user_checks += s.user_checks;
        total.decode_failures += s.decode_failures;
        total.oracle_failures += s.oracle_failures;
        total.disagreements += s.disagreements;
        total.count_failures += s.count_failures;
    }
    Ok(total)
}

pub fn run(args: &VerifyArgs, out: &mut dyn Write) -> std::result::Result<(), CliError> {
    if args.n_min == 0 || args.n_min > args.n_max || args.n_max > args.k_max {
        return Err(CliError::Usage("need 1 <= n-min <= n-max <= k-max".into()));
    }
    writeln!(
        out,
        "{:>3} {:>3} {:>3} {:>8} {:>10} {:>8} {:>8} {:>9} {:>8}",
        "N", "K", "g", "demands", "users", "decode", "oracle", "disagree", "counts"
    )?;
    let mut failures = 0;
    let mut checked = 0;
    for n in args.n_min..=args.n_max {
        for k in n..=args.k_max {
            let size = (n as u64).checked_pow(k as u32);
            if size.is_none_or(|s| s > args.cap) {
                writeln!(out, "skip N={n} K={k}: {n}^{k} demands exceed the cap of {}", args.cap)?;
                continue;
            }
            for g in 1..=n {
                let params = SystemParams::new(n, k, g, args.subfile_bytes)?;
                let s = verify_grid(&params, args.seed, args.drop_last)?;
                writeln!(
                    out,
                    "{:>3} {:>3} {:>3} {:>8} {:>10} {:>8} {:>8} {:>9} {:>8}",
                    n,
                    k,
                    g,
                    s.demands,
                    s.user_checks,
                    s.decode_failures,
                    s.oracle_failures,
                    s.disagreements,
                    s.count_failures
                )?;
                failures += s.failures();
                checked += s.demands;
            }
        }
    }
    writeln!(out, "checked {checked} demands, {failures} failures")?;
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} failures")));
    }
    Ok(())
}
