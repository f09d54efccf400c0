//! Plain-text problem dump for cross-solver verification.
//!
//! Format (one record per line, `#` starts a comment):
//!
//! ```text
//! stageqp-dump v1
//! n <vars>
//! m <rows>
//! layout <stages> <states> <inputs> <slacks> <aux>   (optional)
//! P <nnz>          followed by nnz lines: <row> <col> <value>   (upper triangle)
//! q <n>            followed by n lines:   <index> <value>
//! A <nnz>          followed by nnz lines: <row> <col> <value>
//! l <m>            followed by m lines:   <index> <value|-inf>
//! u <m>            followed by m lines:   <index> <value|inf>
//! ```
//!
//! Values are written with 17 significant digits so they round-trip exactly.

use std::io::{self, BufRead, Write};

use crate::sparse::CscMatrix;
use crate::{QpProblem, StageLayout};

pub fn dump_problem(problem: &QpProblem, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "stageqp-dump v1")?;
    writeln!(out, "n {}", problem.num_vars())?;
    writeln!(out, "m {}", problem.num_constraints())?;
    if let Some(layout) = &problem.layout {
        writeln!(
            out,
            "layout {} {} {} {} {}",
            layout.num_stages,
            layout.states_per_stage,
            layout.inputs_per_stage,
            layout.slacks_per_stage,
            layout.aux_vars
        )?;
    }
    writeln!(out, "P {}", problem.p_upper.nnz())?;
    for (r, c, v) in problem.p_upper.triplet_iter() {
        writeln!(out, "{r} {c} {v:.17e}")?;
    }
    writeln!(out, "q {}", problem.q.len())?;
    for (j, v) in problem.q.iter().enumerate() {
        writeln!(out, "{j} {v:.17e}")?;
    }
    writeln!(out, "A {}", problem.a.nnz())?;
    for (r, c, v) in problem.a.triplet_iter() {
        writeln!(out, "{r} {c} {v:.17e}")?;
    }
    write_bounds(out, "l", &problem.l)?;
    write_bounds(out, "u", &problem.u)?;
    Ok(())
}

fn write_bounds(out: &mut dyn Write, name: &str, vals: &[f64]) -> io::Result<()> {
    writeln!(out, "{name} {}", vals.len())?;
    for (i, v) in vals.iter().enumerate() {
        if v.is_infinite() {
            writeln!(out, "{i} {}", if *v > 0.0 { "inf" } else { "-inf" })?;
        } else {
            writeln!(out, "{i} {v:.17e}")?;
        }
    }
    Ok(())
}

pub fn parse_problem(input: &mut dyn BufRead) -> io::Result<QpProblem> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut lines = input
        .lines()
        .collect::<io::Result<Vec<_>>>()?
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let header = lines.next().ok_or_else(|| bad("empty dump"))?;
    if header != "stageqp-dump v1" {
        return Err(bad("unrecognized dump header"));
    }
    let mut n = None;
    let mut m = None;
    let mut layout = None;
    let mut p_trips = Vec::new();
    let mut q = Vec::new();
    let mut a_trips = Vec::new();
    let mut l = Vec::new();
    let mut u = Vec::new();

    let parse_val = |tok: &str| -> io::Result<f64> {
        match tok {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => tok
                .parse::<f64>()
                .map_err(|_| bad(&format!("bad number {tok}"))),
        }
    };

    while let Some(line) = lines.next() {
        let mut toks = line.split_whitespace();
        let key = toks.next().ok_or_else(|| bad("empty record"))?;
        match key {
            "n" => n = Some(parse_usize(toks.next(), &bad)?),
            "m" => m = Some(parse_usize(toks.next(), &bad)?),
            "layout" => {
                layout = Some(StageLayout {
                    num_stages: parse_usize(toks.next(), &bad)?,
                    states_per_stage: parse_usize(toks.next(), &bad)?,
                    inputs_per_stage: parse_usize(toks.next(), &bad)?,
                    slacks_per_stage: parse_usize(toks.next(), &bad)?,
                    aux_vars: parse_usize(toks.next(), &bad)?,
                });
            }
            "P" | "A" => {
                let count = parse_usize(toks.next(), &bad)?;
                let dest = if key == "P" { &mut p_trips } else { &mut a_trips };
                for _ in 0..count {
                    let line = lines.next().ok_or_else(|| bad("truncated triplets"))?;
                    let mut t = line.split_whitespace();
                    let r = parse_usize(t.next(), &bad)?;
                    let c = parse_usize(t.next(), &bad)?;
                    let v = parse_val(t.next().ok_or_else(|| bad("missing value"))?)?;
                    dest.push((r, c, v));
                }
            }
            "q" | "l" | "u" => {
                let count = parse_usize(toks.next(), &bad)?;
                let dest = match key {
                    "q" => &mut q,
                    "l" => &mut l,
                    _ => &mut u,
                };
                for _ in 0..count {
                    let line = lines.next().ok_or_else(|| bad("truncated vector"))?;
                    let mut t = line.split_whitespace();
                    let _idx = parse_usize(t.next(), &bad)?;
                    dest.push(parse_val(t.next().ok_or_else(|| bad("missing value"))?)?);
                }
            }
            other => return Err(bad(&format!("unknown record {other}"))),
        }
    }

    let n = n.ok_or_else(|| bad("missing n"))?;
    let m = m.ok_or_else(|| bad("missing m"))?;
    Ok(QpProblem {
        p_upper: CscMatrix::from_triplets(n, n, &p_trips),
        q,
        a: CscMatrix::from_triplets(m, n, &a_trips),
        l,
        u,
        layout,
    })
}

fn parse_usize(tok: Option<&str>, bad: &dyn Fn(&str) -> io::Error) -> io::Result<usize> {
    tok.ok_or_else(|| bad("missing integer"))?
        .parse::<usize>()
        .map_err(|_| bad("bad integer"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let problem = QpProblem {
            p_upper: CscMatrix::from_triplets(2, 2, &[(0, 0, 1.5), (0, 1, -0.25), (1, 1, 2.0)]),
            q: vec![1.0, -2.0],
            a: CscMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0), (2, 1, 1.0)]),
            l: vec![f64::NEG_INFINITY, 0.0, 1.0],
            u: vec![2.0, f64::INFINITY, 1.0],
            layout: Some(StageLayout {
                num_stages: 1,
                states_per_stage: 2,
                inputs_per_stage: 0,
                slacks_per_stage: 0,
                aux_vars: 0,
            }),
        };
        let mut buf = Vec::new();
        dump_problem(&problem, &mut buf).unwrap();
        let parsed = parse_problem(&mut std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(parsed.p_upper, problem.p_upper);
        assert_eq!(parsed.q, problem.q);
        assert_eq!(parsed.a, problem.a);
        assert_eq!(parsed.l, problem.l);
        assert_eq!(parsed.u, problem.u);
        assert_eq!(parsed.layout, problem.layout);
    }
}
