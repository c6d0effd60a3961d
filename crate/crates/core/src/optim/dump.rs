//! Plain-text serialisation of [`QpProblem`], used to inspect and replay
//! problems outside the planner.
//!
//! ```text
//! qp 1
//! vars 5
//! var 0 -inf inf 1 -2
//! var 1 0 5 0 1
//! var 2 0 1 0 0
//! var 3 0 1 0 0
//! var 4 0 9 0 0
//! constant 0.5
//! ineq 3 0:1 1:1
//! eq 1 0:1
//! pair 2 3
//! storage 0.95 0.95 0.25 0 9 1
//! period 2 3 4 -
//! end
//! ```
//!
//! `var` lists lower bound, upper bound, quadratic and linear cost; row
//! records give the right-hand side followed by `column:coefficient`
//! terms; `storage` lists both efficiencies, the step in hours, the SoC
//! limits and whether the final SoC is pinned, and is followed by one
//! `period charge discharge soc pv` line per period (`-` for no PV).
//! Numbers use the shortest representation that reads back exactly and
//! `#` starts a comment.

use std::fmt::Write as _;
use std::path::PathBuf;

use super::{LinearRows, QpProblem, StorageChain, StoragePeriod};
use crate::{Error, Result};

pub fn write_dump(problem: &QpProblem) -> String {
    let mut out = String::new();
    let n = problem.num_vars();
    let _ = writeln!(out, "qp 1\nvars {n}");
    for j in 0..n {
        let _ = writeln!(
            out,
            "var {j} {} {} {} {}",
            problem.lower[j], problem.upper[j], problem.quad[j], problem.linear[j]
        );
    }
    let _ = writeln!(out, "constant {}", problem.constant);
    for (tag, rows) in [("ineq", &problem.ineq), ("eq", &problem.eq)] {
        for i in 0..rows.len() {
            let (c, v) = rows.row(i);
            let _ = write!(out, "{tag} {}", rows.rhs()[i]);
            for (j, a) in c.iter().zip(v) {
                let _ = write!(out, " {j}:{a}");
            }
            out.push('\n');
        }
    }
    for (i, j) in &problem.complementarity {
        let _ = writeln!(out, "pair {i} {j}");
    }
    for ch in &problem.storage {
        let _ = writeln!(
            out,
            "storage {} {} {} {} {} {}",
            ch.eta_charge,
            ch.eta_discharge,
            ch.step_hours,
            ch.soc_min,
            ch.soc_max,
            u8::from(ch.terminal_fixed)
        );
        for p in &ch.periods {
            let pv = p.pv.map_or_else(|| "-".to_string(), |v| v.to_string());
            let _ = writeln!(out, "period {} {} {} {pv}", p.charge, p.discharge, p.soc);
        }
    }
    out.push_str("end\n");
    out
}

struct Cursor<'a> {
    line: usize,
    words: std::str::SplitWhitespace<'a>,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { path: PathBuf::from("<qp dump>"), line: self.line, msg: msg.into() }
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        let line = self.line;
        self.words.next().ok_or_else(|| Error::Parse {
            path: PathBuf::from("<qp dump>"),
            line,
            msg: format!("missing {what}"),
        })
    }

    fn num(&mut self, what: &str) -> Result<f64> {
        let w = self.word(what)?;
        let v: f64 = w.parse().map_err(|_| self.err(format!("bad {what} `{w}`")))?;
        if v.is_nan() {
            return Err(self.err(format!("{what} is NaN")));
        }
        Ok(v)
    }

    fn index(&mut self, what: &str, bound: usize) -> Result<usize> {
        let w = self.word(what)?;
        let v: usize = w.parse().map_err(|_| self.err(format!("bad {what} `{w}`")))?;
        if v >= bound {
            return Err(self.err(format!("{what} {v} out of range (< {bound})")));
        }
        Ok(v)
    }

    fn finish(&mut self) -> Result<()> {
        match self.words.next() {
            Some(w) => Err(self.err(format!("unexpected `{w}`"))),
            None => Ok(()),
        }
    }
}

/// Upper limit on the declared variable count, protecting against
/// absurd allocations from malformed input.
const MAX_VARS: usize = 10_000_000;

pub fn parse_dump(text: &str) -> Result<QpProblem> {
    let mut problem = QpProblem::new();
    let mut n: Option<usize> = None;
    let mut seen_vars = Vec::new();
    let mut ended = false;
    let mut header = false;

    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut cur = Cursor { line: k + 1, words: line.split_whitespace() };
        if ended {
            return Err(cur.err("content after `end`"));
        }
        let tag = cur.word("keyword")?;
        if !header {
            if tag != "qp" || cur.word("version")? != "1" {
                return Err(cur.err("expected header `qp 1`"));
            }
            cur.finish()?;
            header = true;
            continue;
        }
        if tag != "vars" && n.is_none() && tag != "end" {
            return Err(cur.err("`vars` must precede other records"));
        }
        let nv = n.unwrap_or(0);
        match tag {
            "vars" => {
                if n.is_some() {
                    return Err(cur.err("duplicate `vars`"));
                }
                let count = cur.index("variable count", MAX_VARS + 1)?;
                problem.quad = vec![0.0; count];
                problem.linear = vec![0.0; count];
                problem.lower = vec![0.0; count];
                problem.upper = vec![0.0; count];
                seen_vars = vec![false; count];
                n = Some(count);
            }
            "var" => {
                let j = cur.index("variable index", nv)?;
                if seen_vars[j] {
                    return Err(cur.err(format!("variable {j} defined twice")));
                }
                seen_vars[j] = true;
                problem.lower[j] = cur.num("lower bound")?;
                problem.upper[j] = cur.num("upper bound")?;
                problem.quad[j] = cur.num("quadratic coefficient")?;
                problem.linear[j] = cur.num("linear coefficient")?;
            }
            "constant" => problem.constant = cur.num("constant")?,
            "ineq" | "eq" => {
                let rhs = cur.num("right-hand side")?;
                let mut terms = Vec::new();
                while let Some(w) = cur.words.next() {
                    let (c, v) = w.split_once(':').ok_or_else(|| cur.err(format!("bad term `{w}`")))?;
                    let c: usize = c.parse().map_err(|_| cur.err(format!("bad column `{c}`")))?;
                    if c >= nv {
                        return Err(cur.err(format!("column {c} out of range")));
                    }
                    let v: f64 = v.parse().map_err(|_| cur.err(format!("bad coefficient `{v}`")))?;
                    terms.push((c, v));
                }
                let rows: &mut LinearRows =
                    if tag == "eq" { &mut problem.eq } else { &mut problem.ineq };
                rows.push(&terms, rhs);
            }
            "pair" => {
                let i = cur.index("pair index", nv)?;
                let j = cur.index("pair index", nv)?;
                problem.complementarity.push((i, j));
            }
            "storage" => {
                let chain = StorageChain {
                    eta_charge: cur.num("charge efficiency")?,
                    eta_discharge: cur.num("discharge efficiency")?,
                    step_hours: cur.num("step")?,
                    soc_min: cur.num("minimum state of charge")?,
                    soc_max: cur.num("maximum state of charge")?,
                    terminal_fixed: match cur.word("terminal flag")? {
                        "0" => false,
                        "1" => true,
                        w => return Err(cur.err(format!("bad terminal flag `{w}`"))),
                    },
                    periods: Vec::new(),
                };
                problem.storage.push(chain);
            }
            "period" => {
                let charge = cur.index("charge index", nv)?;
                let discharge = cur.index("discharge index", nv)?;
                let soc = cur.index("soc index", nv)?;
                let pv = match cur.word("pv index")? {
                    "-" => None,
                    w => {
                        let v: usize = w.parse().map_err(|_| cur.err(format!("bad pv index `{w}`")))?;
                        if v >= nv {
                            return Err(cur.err(format!("pv index {v} out of range")));
                        }
                        Some(v)
                    }
                };
                let chain = problem
                    .storage
                    .last_mut()
                    .ok_or_else(|| cur.err("`period` before any `storage`"))?;
                chain.periods.push(StoragePeriod { charge, discharge, soc, pv });
            }
            "end" => ended = true,
            other => return Err(cur.err(format!("unknown record `{other}`"))),
        }
        cur.finish()?;
    }
    if !header {
        return Err(Error::Parse { path: PathBuf::from("<qp dump>"), line: 0, msg: "empty dump".into() });
    }
    if !ended {
        return Err(Error::Parse {
            path: PathBuf::from("<qp dump>"),
            line: text.lines().count(),
            msg: "missing `end`".into(),
        });
    }
    if let Some(j) = seen_vars.iter().position(|s| !s) {
        return Err(Error::Input(format!("variable {j} declared but not defined")));
    }
    problem.validate()?;
    Ok(problem)
}
