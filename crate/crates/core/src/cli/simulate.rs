use std::io::Write;

use serde::Serialize;

use super::{CliError, SimulateArgs};
use crate::combin::to_decimal;
use crate::decoder::{decode_all, UserOutcome};
use crate::delivery::{deliver, select_leaders, PhaseCounts};
use crate::model::{Demand, Library, Phase, SystemParams};
use crate::placement::build_placement;
use crate::rates::{rate_theorem1, transmission_count};

#[derive(Debug, Serialize)]
struct PhaseRow {
    phase: String,
    messages: usize,
    closed_form: u64,
}

#[derive(Debug, Serialize)]
struct Report {
    files: usize,
    users: usize,
    group: usize,
    memory: String,
    subfile_bytes: usize,
    seed: u64,
    demand: Vec<usize>,
    distinct: usize,
    leaders: Vec<usize>,
    phases: Vec<PhaseRow>,
    total: usize,
    formula_total: u64,
    subfiles_per_file: usize,
    rate: String,
    rate_decimal: String,
    outcomes: Vec<UserOutcome>,
    ok: bool,
}

pub fn run(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = SystemParams::new(args.files, args.users, args.group, args.subfile_bytes)?;
    let demand = Demand::new(&params, args.demand.clone())?;
    let placement = build_placement(&params, Library::generate(&params, args.seed))?;
    let leaders = select_leaders(&demand);
    let log = deliver(&placement, &demand, &leaders)?;
    let outcomes = decode_all(&placement, &log, &demand, !args.no_oracle);

    let ne = demand.distinct();
    let counts = PhaseCounts::closed_form(&params, ne);
    let phases: Vec<PhaseRow> = Phase::ALL
        .iter()
        .map(|&p| PhaseRow { phase: p.to_string(), messages: log.count(p), closed_form: counts.of_phase(p) })
        .collect();
    let formula_total = transmission_count(&params, ne)?;
    let rate = rate_theorem1(&params, ne)?;
    let counts_match = phases.iter().all(|r| r.messages as u64 == r.closed_form) && log.len() as u64 == formula_total;
    let ok = counts_match && outcomes.iter().all(|o| o.ok() && o.agrees());

    let report = Report {
        files: params.files(),
        users: params.users(),
        group: params.group(),
        memory: params.memory().to_string(),
        subfile_bytes: params.subfile_bytes(),
        seed: args.seed,
        demand: demand.as_slice().to_vec(),
        distinct: ne,
        leaders: leaders.users(),
        phases,
        total: log.len(),
        formula_total,
        subfiles_per_file: params.subfiles_per_file(),
        rate: format!("{}/{}", log.len(), params.subfiles_per_file()),
        rate_decimal: to_decimal(&rate, 15),
        outcomes,
        ok,
    };

    if args.json {
        serde_json::to_writer_pretty(&mut *out, &report).map_err(std::io::Error::from)?;
        writeln!(out)?;
    } else {
        write_text(&report, out)?;
        if args.messages {
            writeln!(out, "messages:")?;
            for (idx, m) in log.messages().iter().enumerate() {
                let parts: Vec<String> = m.footprint.subfiles(&params).iter().map(|id| id.to_string()).collect();
                writeln!(out, "  {:>4} {:<6} {}", idx + 1, m.phase.to_string(), parts.join(" + "))?;
            }
        }
    }

    if !counts_match {
        return Err(CliError::Failed("message counts differ from the closed form".into()));
    }
    if let Some(bad) = report.outcomes.iter().find(|o| !(o.ok() && o.agrees())) {
        return Err(CliError::Failed(format!("user {} could not be verified", bad.user)));
    }
    Ok(())
}

fn write_text(r: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "N={} K={} g={} M={} subfile_bytes={} seed={}",
        r.files, r.users, r.group, r.memory, r.subfile_bytes, r.seed
    )?;
    let demand: Vec<String> = r.demand.iter().map(|d| d.to_string()).collect();
    let leaders: Vec<String> = r.leaders.iter().map(|d| d.to_string()).collect();
    writeln!(out, "demand ({})  Ne={}  leaders {}", demand.join(","), r.distinct, leaders.join(","))?;
    writeln!(out, "{:<8}{:>10}{:>13}", "phase", "messages", "closed form")?;
    for row in &r.phases {
        writeln!(out, "{:<8}{:>10}{:>13}", row.phase, row.messages, row.closed_form)?;
    }
    let sum = |names: &[&str]| -> usize {
        r.phases.iter().filter(|p| names.contains(&p.phase.as_str())).map(|p| p.messages).sum()
    };
    writeln!(
        out,
        "T_I={} T_II={} T_III={} total={} (formula {})",
        sum(&["I"]),
        sum(&["II-P1", "II-P2"]),
        sum(&["III-P1", "III-P2"]),
        r.total,
        r.formula_total
    )?;
    writeln!(out, "rate {} = {}", r.rate, r.rate_decimal)?;
    for o in &r.outcomes {
        let decode = if o.decoded {
            format!("ok ({} steps)", o.steps)
        } else {
            format!("FAILED: {}", o.error.as_deref().unwrap_or(""))
        };
        let oracle = match &o.oracle {
            None => "skipped".to_string(),
            Some(rep) if rep.decodable => format!("ok (rank {})", rep.rank),
            Some(rep) => format!("FAILED ({} subfiles outside the span)", rep.unreachable.len()),
        };
        writeln!(out, "user {:>2} wants file {:>2}: decode {decode}; oracle {oracle}", o.user, o.wanted)?;
    }
    writeln!(out, "{}", if r.ok { "all users OK" } else { "VERIFICATION FAILED" })
}
