use std::fmt::Write as _;

use super::{relative_gap, BlockSpec, SdpProblem, SdpSolution, SolveStatus};
use crate::error::{Error, Result};

/// Gap below which an imported solution counts as optimal.
const IMPORT_TOLERANCE: f64 = 1e-6;

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the SDPA sparse format: `m`, block count, block sizes, objective,
/// then `matno block i j value` lines with 1-based indices and `i <= j`.
/// The output depends only on the problem, byte for byte.
pub fn export_sdpa(p: &SdpProblem) -> String {
    let mut p = p.clone();
    p.finalize();
    let mut out = String::new();
    writeln!(out, "{}", p.m()).unwrap();
    writeln!(out, "{}", p.blocks().len()).unwrap();
    let sizes: Vec<String> = p.blocks().iter().map(|b| b.sdpa_size().to_string()).collect();
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    let c: Vec<String> = p.c().iter().map(|&v| number(v)).collect();
    writeln!(out, "{}", c.join(" ")).unwrap();
    for k in 0..=p.m() {
        for e in p.matrix(k).entries() {
            writeln!(out, "{} {} {} {} {}", k, e.block + 1, e.i + 1, e.j + 1, number(e.value)).unwrap();
        }
    }
    out
}

/// Splits a header line on whitespace and the separators SDPA tolerates.
fn header_tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || ",(){}".contains(c))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Reads the SDPA sparse format. Leading comment lines start with `"` or `*`.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .skip_while(|(_, l)| l.starts_with('"') || l.starts_with('*'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(text.lines().count() + 1, format!("missing {what}")))
    };
    let (ln, l) = next("constraint count")?;
    let m: usize = header_tokens(l)
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(ln, "expected the constraint count"))?;
    let (ln, l) = next("block count")?;
    let nblocks: usize = header_tokens(l)
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(ln, "expected the block count"))?;
    let (ln, l) = next("block sizes")?;
    let sizes: Vec<i64> = header_tokens(l)
        .iter()
        .take(nblocks)
        .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad block size `{t}`"))))
        .collect::<Result<_>>()?;
    if sizes.len() != nblocks || sizes.contains(&0) {
        return Err(Error::parse(ln, format!("expected {nblocks} non-zero block sizes")));
    }
    let blocks = sizes
        .iter()
        .map(|&s| {
            if s > 0 {
                BlockSpec::dense(s as usize)
            } else {
                BlockSpec::diagonal((-s) as usize)
            }
        })
        .collect();
    let mut c = Vec::with_capacity(m);
    while c.len() < m {
        let (ln, l) = next("objective vector")?;
        for t in header_tokens(l) {
            c.push(t.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad objective value `{t}`")))?);
        }
    }
    if c.len() != m {
        return Err(Error::parse(0, format!("objective has {} values, expected {m}", c.len())));
    }
    let mut p = SdpProblem::new(blocks, c);
    for (ln, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 5 {
            return Err(Error::parse(ln, "expected `matno block i j value`"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(ln, format!("bad index `{s}`")));
        let (k, b, i, j) = (int(t[0])?, int(t[1])?, int(t[2])?, int(t[3])?);
        let v: f64 = t[4].parse().map_err(|_| Error::parse(ln, format!("bad value `{}`", t[4])))?;
        if b == 0 || i == 0 || j == 0 {
            return Err(Error::parse(ln, "indices are 1-based"));
        }
        p.add(k, b - 1, i - 1, j - 1, v).map_err(|e| Error::parse(ln, e.to_string()))?;
    }
    p.finalize();
    Ok(p)
}

fn parse_vector(text: &str, ln: usize) -> Result<Vec<f64>> {
    header_tokens(text)
        .iter()
        .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad vector entry `{t}`"))))
        .collect()
}

/// Reads the objective values (and, when present, `xVec`, `phase.value`
/// and the primal slack's smallest eigenvalue `minEigPrimal`) from SDPA
/// solver output.
pub fn import_sdpa_solution(text: &str) -> Result<SdpSolution> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.iter().all(|l| l.trim().is_empty()) {
        return Err(Error::parse(1, "empty solution file"));
    }
    let mut primal = None;
    let mut dual = None;
    let mut phase = None;
    let mut x = Vec::new();
    let mut iterations = 0;
    let mut min_eig = None;
    let mut idx = 0;
    while idx < lines.len() {
        let ln = idx + 1;
        let line = lines[idx].trim();
        idx += 1;
        let Some((key, value)) = line.split_once('=') else { continue };
        let (key, value) = (key.trim(), value.trim());
        let float = |v: &str| {
            v.split_whitespace()
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| Error::parse(ln, format!("bad value for {key}: `{v}`")))
        };
        match key {
            "objValPrimal" => primal = Some(float(value)?),
            "objValDual" => dual = Some(float(value)?),
            "phase.value" => phase = Some(value.to_string()),
            "Iteration" | "iteration" => iterations = float(value)? as usize,
            "minEigPrimal" => min_eig = Some(float(value)?),
            "xVec" => {
                let mut body = value.to_string();
                while !body.contains('}') && idx < lines.len() {
                    body.push(' ');
                    body.push_str(lines[idx].trim());
                    idx += 1;
                }
                x = parse_vector(&body, ln)?;
            }
            _ => {}
        }
    }
    let end = lines.len();
    let primal = primal.ok_or_else(|| Error::parse(end, "objValPrimal not found"))?;
    let dual = dual.ok_or_else(|| Error::parse(end, "objValDual not found"))?;
    let gap = relative_gap(primal, dual);
    let inferred = if gap <= IMPORT_TOLERANCE { SolveStatus::Optimal } else { SolveStatus::NearOptimal };
    let status = match phase.as_deref() {
        Some("pdOPT") | None => inferred,
        Some("pINF_dFEAS") | Some("pdINF") => SolveStatus::Infeasible,
        Some("pFEAS_dINF") | Some("pUNBD") => SolveStatus::Unbounded,
        Some("noINFO") => SolveStatus::Failed,
        Some(_) => {
            if gap <= IMPORT_TOLERANCE {
                SolveStatus::NearOptimal
            } else {
                inferred
            }
        }
    };
    Ok(SdpSolution {
        status,
        x,
        primal_objective: primal,
        dual_objective: dual,
        gap,
        iterations,
        solver: "external".into(),
        dual_matrix: None,
        primal_min_eigenvalue: min_eig,
        message: phase.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> SdpProblem {
        // maximize x subject to 1 - x >= 0, i.e. minimize -x with -x + 1 >= 0
        let mut p = SdpProblem::new(vec![BlockSpec::dense(1)], vec![-1.0]);
        p.add(0, 0, 0, 0, -1.0).unwrap();
        p.add(1, 0, 0, 0, -1.0).unwrap();
        p.finalize();
        p
    }

    #[test]
    fn scalar_export() {
        let text = export_sdpa(&scalar());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "1");
        assert_eq!(lines[2], "1");
        assert_eq!(lines[5], "1 1 1 1 -1.0000000000000000e0");
    }

    #[test]
    fn round_trip() {
        let mut p = SdpProblem::new(vec![BlockSpec::dense(2), BlockSpec::diagonal(3)], vec![0.1, -2.5]);
        p.add(0, 0, 1, 0, 1.0 / 3.0).unwrap();
        p.add(1, 1, 2, 2, std::f64::consts::PI).unwrap();
        p.add(2, 0, 0, 0, 1e-300).unwrap();
        p.finalize();
        let text = export_sdpa(&p);
        let q = parse_sdpa(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(text, export_sdpa(&q));
    }

    #[test]
    fn parse_tolerates_sdpa_decorations() {
        let text = "\"a comment\n* another\n2 =mDIM\n1 =nBLOCK\n{2}\n{1.0, 2.0}\n1 1 1 1 1.0\n2 1 1 2 0.5\n";
        let p = parse_sdpa(text).unwrap();
        assert_eq!(p.m(), 2);
        assert_eq!(p.c(), &[1.0, 2.0]);
        assert_eq!(p.matrix(2).entries()[0].j, 1);
    }

    #[test]
    fn parse_errors_carry_lines() {
        match parse_sdpa("1\n1\n2\n1.0\n1 1 3 1 1.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_sdpa(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn solution_import() {
        let text = "phase.value  = pdOPT\nIteration    = 17\nobjValPrimal = 5.8333333e-01\nobjValDual   = 5.8333332e-01\nxVec = \n{1.0,2.0,\n3.0}\n";
        let s = import_sdpa_solution(text).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.x, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.iterations, 17);
        let s = import_sdpa_solution("objValPrimal = 1.0\nobjValDual = 0.9\n").unwrap();
        assert_eq!(s.status, SolveStatus::NearOptimal);
        assert!(matches!(import_sdpa_solution(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(import_sdpa_solution("objValPrimal = x\n"), Err(Error::Parse { line: 1, .. })));
    }
}
