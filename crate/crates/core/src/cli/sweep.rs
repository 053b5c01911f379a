use std::fs::File;
use std::io::{BufWriter, Write};

use rayon::prelude::*;

use super::{CliError, Curve, SweepArgs};
use crate::bounds::{cfl_point, cutset_bound, gbc_point, mds_points, sota_envelope, stc_bound, BoundCurve};
use crate::combin::{ratio, to_decimal, Rational};
use crate::error::Result;
use crate::model::RateMemoryPoint;
use crate::rates::{scheme_envelope, RateCurve};

const DIGITS: usize = 15;

/// One CSV row before formatting. Curve values are `None` where the curve
/// is undefined (the scheme outside `[1/K, N/K]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub label: String,
    pub parameter: Option<u64>,
    pub memory: Rational,
    pub values: Vec<Option<Rational>>,
    pub vertex: Option<Rational>,
}

fn column(curve: Curve) -> &'static str {
    match curve {
        Curve::New => "R_new_envelope",
        Curve::Sota => "R_sota",
        Curve::Cutset => "R_cutset",
        Curve::Stc => "R_stc",
    }
}

struct Curves {
    n: usize,
    k: usize,
    scheme: RateCurve,
    sota: BoundCurve,
}

impl Curves {
    fn value(&self, curve: Curve, m: &Rational) -> Result<Option<Rational>> {
        Ok(match curve {
            Curve::New => {
                let (lo, hi) = self.scheme.envelope.domain();
                if m < lo || m > hi {
                    None
                } else {
                    Some(self.scheme.eval(m)?)
                }
            }
            Curve::Sota => Some(self.sota.eval(m)?),
            Curve::Cutset => Some(cutset_bound(self.n, self.k, m)?),
            Curve::Stc => Some(stc_bound(self.n, self.k, m)?),
        })
    }
}

/// Grid rows at `M = (N/K) j / (points - 1)`, then one row per vertex of
/// every achievable family (trivial, CFL, GBC, MDS, the scheme).
pub fn sweep_rows(n: usize, k: usize, points: usize, curves: &[Curve]) -> Result<Vec<SweepRow>> {
    let c = Curves { n, k, scheme: scheme_envelope(n, k)?, sota: sota_envelope(n, k)? };
    let top = ratio(n as i64, k as i64);
    let grid: Vec<Rational> = match points {
        0 => Vec::new(),
        1 => vec![Rational::from_integer(0.into())],
        p => (0..p).map(|j| &top * ratio(j as i64, p as i64 - 1)).collect(),
    };

    let mut vertices: Vec<RateMemoryPoint> = Vec::new();
    vertices.extend(c.sota.points.iter().filter(|p| p.label == crate::model::CurveLabel::Trivial).cloned());
    vertices.push(cfl_point(n, k)?);
    vertices.push(gbc_point(n, k)?);
    vertices.extend(mds_points(n, k)?);
    vertices.extend(c.scheme.points.iter().rev().cloned());

    let mut specs: Vec<(String, Option<u64>, Rational, Option<Rational>)> =
        grid.into_iter().map(|m| ("grid".to_string(), None, m, None)).collect();
    specs.extend(vertices.into_iter().map(|v| (v.label.to_string(), v.parameter, v.memory, Some(v.rate))));

    specs
        .into_par_iter()
        .map(|(label, parameter, memory, vertex)| {
            let values = curves.iter().map(|&cv| c.value(cv, &memory)).collect::<Result<Vec<_>>>()?;
            Ok(SweepRow { label, parameter, memory, values, vertex })
        })
        .collect()
}

pub fn run(args: &SweepArgs, out: &mut dyn Write) -> std::result::Result<(), CliError> {
    let mut curves = args.curves.clone();
    curves.sort();
    curves.dedup();
    if curves.is_empty() {
        return Err(CliError::Usage("select at least one curve".into()));
    }
    if args.points < 2 {
        return Err(CliError::Usage("the grid needs at least 2 points".into()));
    }
    let rows = sweep_rows(args.files, args.users, args.points, &curves)?;
    match &args.output {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_csv(&rows, &curves, args.exact, &mut file)?;
            file.flush()?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
        }
        None => write_csv(&rows, &curves, args.exact, out)?,
    }
    Ok(())
}

pub fn write_csv(
    rows: &[SweepRow],
    curves: &[Curve],
    exact: bool,
    out: &mut dyn Write,
) -> std::result::Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["row", "label", "param", "M"].iter().map(|s| s.to_string()).collect();
    header.extend(curves.iter().map(|&c| column(c).to_string()));
    header.push("R_vertex".into());
    if exact {
        header.push("M_exact".into());
        header.extend(curves.iter().map(|&c| format!("{}_exact", column(c))));
        header.push("R_vertex_exact".into());
    }
    w.write_record(&header)?;

    let dec = |v: &Option<Rational>| v.as_ref().map(|r| to_decimal(r, DIGITS)).unwrap_or_default();
    let frac = |v: &Option<Rational>| v.as_ref().map(|r| r.to_string()).unwrap_or_default();
    for (idx, row) in rows.iter().enumerate() {
        let mut rec = vec![
            idx.to_string(),
            row.label.clone(),
            row.parameter.map(|p| p.to_string()).unwrap_or_default(),
            to_decimal(&row.memory, DIGITS),
        ];
        rec.extend(row.values.iter().map(dec));
        rec.push(dec(&row.vertex));
        if exact {
            rec.push(row.memory.to_string());
            rec.extend(row.values.iter().map(frac));
            rec.push(frac(&row.vertex));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combin::int;

    #[test]
    fn worked_example_vertex_row() {
        let rows = sweep_rows(3, 6, 11, &[Curve::New, Curve::Sota, Curve::Cutset, Curve::Stc]).unwrap();
        let row = rows.iter().find(|r| r.label == "new" && r.parameter == Some(2)).unwrap();
        assert_eq!(row.memory, ratio(1, 4));
        assert_eq!(row.values[0], Some(ratio(7, 3)));
        assert_eq!(row.values[1], Some(ratio(85, 36)));
        assert_eq!(row.values[3], Some(ratio(9, 4)));
        assert_eq!(row.vertex, Some(ratio(7, 3)));
        // below 1/K the scheme is undefined
        assert_eq!(rows[0].memory, int(0));
        assert_eq!(rows[0].values[0], None);
    }
}
