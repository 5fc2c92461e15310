use std::fmt::Write as _;

use super::McfProblem;
use crate::error::{Error, Result};

/// DIMACS minimum-cost flow text. Node supplies are `outflow − inflow`,
/// i.e. negated residues; lower bounds are always 0.
pub fn write_dimacs(p: &McfProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "c min-cost flow, nodes are 1-based");
    let _ = writeln!(out, "p min {} {}", p.num_nodes(), p.arcs.len());
    for (v, &r) in p.residues.iter().enumerate() {
        if r != 0 {
            let _ = writeln!(out, "n {} {}", v + 1, -r);
        }
    }
    for a in &p.arcs {
        let _ = writeln!(out, "a {} {} 0 {} {}", a.from + 1, a.to + 1, a.capacity, a.cost);
    }
    out
}

pub fn read_dimacs(text: &str) -> Result<McfProblem> {
    let mut problem: Option<McfProblem> = None;
    let mut declared_arcs = 0;
    for (i, line) in text.lines().enumerate() {
        let at = format!("line {}", i + 1);
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(&tag) = fields.first() else {
            continue;
        };
        let num = |k: usize| -> Result<i64> {
            fields
                .get(k)
                .ok_or_else(|| Error::parse(&at, "missing field"))?
                .parse::<i64>()
                .map_err(|e| Error::parse(&at, e.to_string()))
        };
        match tag {
            "c" => {}
            "p" => {
                if problem.is_some() {
                    return Err(Error::parse(&at, "duplicate problem line"));
                }
                if fields.get(1) != Some(&"min") || fields.len() != 4 {
                    return Err(Error::parse(&at, "expected `p min <nodes> <arcs>`"));
                }
                let n = usize::try_from(num(2)?).map_err(|e| Error::parse(&at, e.to_string()))?;
                declared_arcs = num(3)?;
                problem = Some(McfProblem::new(n));
            }
            "n" | "a" => {
                let p = problem
                    .as_mut()
                    .ok_or_else(|| Error::parse(&at, "record before problem line"))?;
                let node = |k: usize| -> Result<usize> {
                    let v = num(k)?;
                    if v < 1 || v as usize > p.num_nodes() {
                        return Err(Error::parse(&at, format!("node {v} out of range")));
                    }
                    Ok(v as usize - 1)
                };
                if tag == "n" {
                    let v = node(1)?;
                    p.residues[v] = -num(2)?;
                } else {
                    let (u, v) = (node(1)?, node(2)?);
                    if num(3)? != 0 {
                        return Err(Error::parse(&at, "nonzero lower bounds are not supported"));
                    }
                    let (cap, cost) = (num(4)?, num(5)?);
                    p.add_arc(u, v, cap, cost);
                }
            }
            other => return Err(Error::parse(&at, format!("unknown record `{other}`"))),
        }
    }
    let p = problem.ok_or_else(|| Error::parse("end of input", "no problem line"))?;
    if p.arcs.len() as i64 != declared_arcs {
        return Err(Error::parse(
            "end of input",
            format!("declared {declared_arcs} arcs, found {}", p.arcs.len()),
        ));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut p = McfProblem::new(3);
        p.residues = vec![-2, 0, 2];
        p.add_arc(0, 1, 2, 5);
        p.add_arc(1, 2, 3, -1);
        p.add_arc(0, 2, 1, 0);
        let text = write_dimacs(&p);
        assert!(text.contains("p min 3 3"));
        assert!(text.contains("n 1 2"));
        assert_eq!(read_dimacs(&text).unwrap(), p);
    }

    #[test]
    fn malformed_records_name_the_line() {
        let err = read_dimacs("p min 2 1\na 1 3 0 1 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(read_dimacs("a 1 2 0 1 1\n").is_err());
        assert!(read_dimacs("p min 2 2\na 1 2 0 1 1\n").is_err());
        assert!(read_dimacs("p max 2 1\n").is_err());
    }
}
