//! DIMACS min-cost-flow text format (`p min`, `n`, `a` lines, 1-based ids).
//!
//! The source carries supply `F` and the sink demand `-F`; with `F` set to
//! the maximum flow value an external min-cost-flow solver reproduces the
//! min-cost max-flow objective.

use std::io::{self, BufRead, Write};

use crate::mcmf::{Arc, Network, NetworkError};

#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing problem line `p min N M`")]
    MissingProblem,
    #[error("expected {expected} arcs, found {found}")]
    ArcCount { expected: usize, found: usize },
    #[error("need exactly one supply node and one demand node")]
    Terminals,
    #[error("arc {0} has a non-zero lower bound")]
    LowerBound(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_dimacs<W: Write>(net: &Network, supply: i64, mut out: W) -> io::Result<()> {
    writeln!(out, "c min-cost max-flow instance")?;
    writeln!(out, "p min {} {}", net.num_nodes(), net.arcs().len())?;
    writeln!(out, "n {} {}", net.source() + 1, supply)?;
    writeln!(out, "n {} {}", net.sink() + 1, -supply)?;
    for a in net.arcs() {
        writeln!(
            out,
            "a {} {} 0 {} {}",
            a.from + 1,
            a.to + 1,
            a.capacity,
            a.cost
        )?;
    }
    out.flush()
}

/// Parses a DIMACS instance; returns the network and the source supply.
pub fn read_dimacs<R: BufRead>(input: R) -> Result<(Network, i64), DimacsError> {
    let mut problem: Option<(usize, usize)> = None;
    let mut supplies: Vec<(usize, i64)> = Vec::new();
    let mut arcs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let syntax = |message: &str| DimacsError::Syntax {
            line: lineno,
            message: message.to_string(),
        };
        let mut fields = line.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        let nums: Vec<&str> = fields.collect();
        let int = |i: usize| -> Result<i64, DimacsError> {
            nums.get(i)
                .ok_or_else(|| syntax("missing field"))?
                .parse::<i64>()
                .map_err(|_| syntax("expected integer"))
        };
        let node = |i: usize| -> Result<usize, DimacsError> {
            let v = int(i)?;
            match problem {
                Some((n, _)) if v >= 1 && (v as usize) <= n => Ok(v as usize - 1),
                Some(_) => Err(syntax("node id out of range")),
                None => Err(DimacsError::MissingProblem),
            }
        };
        match tag {
            "c" => {}
            "p" => {
                if nums.first() != Some(&"min") || nums.len() != 3 {
                    return Err(syntax("expected `p min N M`"));
                }
                let n = nums[1].parse().map_err(|_| syntax("bad node count"))?;
                let m = nums[2].parse().map_err(|_| syntax("bad arc count"))?;
                problem = Some((n, m));
            }
            "n" => supplies.push((node(0)?, int(1)?)),
            "a" => {
                let (from, to) = (node(0)?, node(1)?);
                if int(2)? != 0 {
                    return Err(DimacsError::LowerBound(arcs.len()));
                }
                arcs.push(Arc {
                    from,
                    to,
                    capacity: int(3)?,
                    cost: int(4)?,
                });
            }
            _ => return Err(syntax("unknown line type")),
        }
    }
    let (n, m) = problem.ok_or(DimacsError::MissingProblem)?;
    if arcs.len() != m {
        return Err(DimacsError::ArcCount {
            expected: m,
            found: arcs.len(),
        });
    }
    let sources: Vec<_> = supplies.iter().filter(|s| s.1 > 0).collect();
    let sinks: Vec<_> = supplies.iter().filter(|s| s.1 < 0).collect();
    let (source, supply, sink) = match (sources.as_slice(), sinks.as_slice()) {
        ([s], [t]) => (s.0, s.1, t.0),
        _ => return Err(DimacsError::Terminals),
    };
    Ok((Network::new(n, source, sink, arcs)?, supply))
}
