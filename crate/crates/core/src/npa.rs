//! Moment-matrix relaxations of a [`BellGame`] at levels 1, 1+ab and 2.
//!
//! Operators are projectors `P(party, input, outcome)`. The last outcome of
//! every input is dropped and re-expressed as `1 - sum(others)`, so a party
//! with an input of `k` allowed moves contributes `k - 1` letters for it.
//! Moments are real, so a word and its adjoint share one variable.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::sdp::{self, BlockSpec, SdpProblem, SdpSolution, SolveStatus};
use crate::tasks::{BellGame, MixedRadix};

/// Most letters per party accepted for level 2.
pub const LEVEL2_MAX_LETTERS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "1+ab")]
    OnePlusAb,
    #[serde(rename = "2")]
    Two,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::One => "1",
            Level::OnePlusAb => "1+ab",
            Level::Two => "2",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Level> {
        match s.trim().to_lowercase().as_str() {
            "1" => Ok(Level::One),
            "1+ab" | "1ab" | "almost-quantum" | "almost quantum" => Ok(Level::OnePlusAb),
            "2" => Ok(Level::Two),
            other => Err(Error::InvalidParameter(format!(
                "unknown NPA level `{other}`; expected 1, 1+ab (almost-quantum) or 2"
            ))),
        }
    }
}

/// Projector onto outcome index `outcome` of `input` for `party`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub party: u8,
    pub input: u16,
    pub outcome: u16,
}

impl Letter {
    pub fn new(party: usize, input: usize, outcome: usize) -> Letter {
        Letter { party: party as u8, input: input as u16, outcome: outcome as u16 }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = (b'A' + self.party) as char;
        write!(f, "{p}({}|{})", self.outcome, self.input)
    }
}

pub type Word = Vec<Letter>;

/// Commutes letters of different parties into party order, applies
/// `P P = P`, and returns `None` when two adjacent letters of one input
/// have different outcomes.
///
/// ```
/// use belltasks::npa::{canonicalize, Letter};
/// let a0 = Letter::new(0, 1, 0);
/// let a1 = Letter::new(0, 1, 1);
/// let b = Letter::new(1, 2, 0);
/// assert_eq!(canonicalize(&[b, a0]), Some(vec![a0, b]));
/// assert_eq!(canonicalize(&[a0, a0]), Some(vec![a0]));
/// assert_eq!(canonicalize(&[a0, a1]), None);
/// ```
pub fn canonicalize(word: &[Letter]) -> Option<Word> {
    let mut sorted = word.to_vec();
    sorted.sort_by_key(|l| l.party);
    let mut out: Word = Vec::with_capacity(sorted.len());
    for l in sorted {
        match out.last() {
            Some(top) if top.party == l.party && top.input == l.input => {
                if top.outcome != l.outcome {
                    return None;
                }
            }
            _ => out.push(l),
        }
    }
    Some(out)
}

/// Adjoint of a canonical word: letters of each party in reverse order.
pub fn adjoint(word: &[Letter]) -> Word {
    let mut out = Vec::with_capacity(word.len());
    let mut start = 0;
    while start < word.len() {
        let mut end = start;
        while end < word.len() && word[end].party == word[start].party {
            end += 1;
        }
        out.extend(word[start..end].iter().rev());
        start = end;
    }
    out
}

/// Representative of a word's real moment: the smaller of the canonical
/// word and its adjoint.
pub fn moment_class(word: &[Letter]) -> Option<Word> {
    let w = canonicalize(word)?;
    let a = adjoint(&w);
    Some(if a < w { a } else { w })
}

fn letters(game: &BellGame) -> Vec<Vec<Letter>> {
    (0..game.parties())
        .map(|p| {
            (0..game.inputs())
                .flat_map(|x| (0..game.outcomes(x).len() - 1).map(move |k| Letter::new(p, x, k)))
                .collect()
        })
        .collect()
}

/// Operator words indexing the moment matrix, empty word first.
///
/// ```
/// use belltasks::graphs::make_cycle;
/// use belltasks::npa::{generating_set, Level};
/// use belltasks::tasks::{build_game, StartRule, TaskSpec};
/// let game = build_game(&make_cycle(5).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
/// assert_eq!(generating_set(&game, Level::OnePlusAb).unwrap().len(), 36);
/// ```
pub fn generating_set(game: &BellGame, level: Level) -> Result<Vec<Word>> {
    let per_party = letters(game);
    if level == Level::Two && per_party.iter().any(|l| l.len() > LEVEL2_MAX_LETTERS) {
        return Err(Error::TooLarge(format!(
            "level 2 with more than {LEVEL2_MAX_LETTERS} letters per party; use export-only mode"
        )));
    }
    let mut out: Vec<Word> = vec![Vec::new()];
    let mut seen: std::collections::HashSet<Word> = out.iter().cloned().collect();
    let mut push = |w: Option<Word>, out: &mut Vec<Word>| {
        if let Some(w) = w {
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
    };
    for party in &per_party {
        for &l in party {
            push(Some(vec![l]), &mut out);
        }
    }
    match level {
        Level::One => {}
        Level::OnePlusAb => {
            // one letter from each of at least two distinct parties
            let r = per_party.len();
            for mask in 1u32..(1 << r) {
                if mask.count_ones() < 2 {
                    continue;
                }
                let chosen: Vec<usize> = (0..r).filter(|p| mask >> p & 1 == 1).collect();
                let radices: Vec<usize> = chosen.iter().map(|&p| per_party[p].len()).collect();
                if radices.contains(&0) {
                    continue;
                }
                for idx in MixedRadix::new(&radices) {
                    let w: Word = chosen.iter().zip(&idx).map(|(&p, &k)| per_party[p][k]).collect();
                    push(canonicalize(&w), &mut out);
                }
            }
        }
        Level::Two => {
            let all: Vec<Letter> = per_party.iter().flatten().copied().collect();
            for &a in &all {
                for &b in &all {
                    push(canonicalize(&[a, b]), &mut out);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentRelaxation {
    pub level: Level,
    pub monomials: Vec<Word>,
    /// Variable id to representative word; id 0 is the empty word.
    pub variables: Vec<Word>,
    /// Upper-triangle entries `(u, v)` with their variable id, or `None`
    /// when the entry is annihilated.
    pub entries: Vec<((usize, usize), Option<usize>)>,
    /// Objective as `(variable, coefficient)`.
    pub objective: Vec<(usize, f64)>,
    /// Affine part of the objective left by outcome elimination.
    pub constant: f64,
    pub constant_exact: String,
}

impl MomentRelaxation {
    pub fn dimension(&self) -> usize {
        self.monomials.len()
    }
}

/// Per-party expansion of `P(outcome k | input x)` over words of length at
/// most one: `(letter or None for identity, coefficient)`.
fn expand_outcome(game: &BellGame, party: usize, x: usize, k: usize) -> Vec<(Option<Letter>, i64)> {
    let last = game.outcomes(x).len() - 1;
    if k < last {
        vec![(Some(Letter::new(party, x, k)), 1)]
    } else {
        let mut v = vec![(None, 1)];
        v.extend((0..last).map(|j| (Some(Letter::new(party, x, j)), -1)));
        v
    }
}

/// Builds the relaxation and its SDP. The moment matrix is the dual
/// variable `Y`; the primal objective plus `constant` bounds the game value.
pub fn build_relaxation(game: &BellGame, level: Level) -> Result<(MomentRelaxation, SdpProblem)> {
    let monomials = generating_set(game, level)?;
    let n = monomials.len();
    let mut var_of: HashMap<Word, usize> = HashMap::new();
    let mut variables: Vec<Word> = Vec::new();
    let mut first_pos: Vec<(usize, usize)> = Vec::new();
    let mut entries = Vec::with_capacity(n * (n + 1) / 2);
    for u in 0..n {
        let ua = adjoint(&monomials[u]);
        for v in u..n {
            let mut w = ua.clone();
            w.extend_from_slice(&monomials[v]);
            let id = moment_class(&w).map(|c| {
                *var_of.entry(c.clone()).or_insert_with(|| {
                    variables.push(c);
                    first_pos.push((u, v));
                    variables.len() - 1
                })
            });
            entries.push(((u, v), id));
        }
    }

    // objective over moments, exact until the final conversion
    let mut coeffs: HashMap<Word, Rational> = HashMap::new();
    for b in game.blocks() {
        let radices = game.radices(b);
        for (idx, c) in MixedRadix::new(&radices).zip(&b.coefficients) {
            if c.is_zero() {
                continue;
            }
            let factors: Vec<Vec<(Option<Letter>, i64)>> = idx
                .iter()
                .enumerate()
                .map(|(p, &k)| expand_outcome(game, p, b.inputs[p], k))
                .collect();
            let radices: Vec<usize> = factors.iter().map(Vec::len).collect();
            for pick in MixedRadix::new(&radices) {
                let mut word = Vec::new();
                let mut sign = 1i64;
                for (f, &j) in factors.iter().zip(&pick) {
                    let (l, s) = f[j];
                    sign *= s;
                    word.extend(l);
                }
                *coeffs.entry(word).or_insert_with(Rational::zero) += c * rational::integer(sign);
            }
        }
    }
    let mut constant = Rational::zero();
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut sorted: Vec<(Word, Rational)> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    sorted.sort();
    for (word, c) in sorted {
        if word.is_empty() {
            constant += c;
            continue;
        }
        let class = moment_class(&word).expect("letters of distinct parties never annihilate");
        let id = *var_of.get(&class).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "level {level} has no moment for {}; use a higher level",
                class.iter().map(Letter::to_string).collect::<String>()
            ))
        })?;
        objective.push((id, rational::to_f64(&c)));
    }

    let mut rel = MomentRelaxation {
        level,
        monomials,
        variables,
        entries,
        objective,
        constant: rational::to_f64(&constant),
        constant_exact: rational::format(&constant),
    };
    let sdp = relaxation_sdp(&rel, &first_pos)?;
    rel.objective.sort_by_key(|&(id, _)| id);
    Ok((rel, sdp))
}

fn relaxation_sdp(rel: &MomentRelaxation, first_pos: &[(usize, usize)]) -> Result<SdpProblem> {
    let n = rel.dimension();
    let half = |u: usize, v: usize| if u == v { 1.0 } else { 0.5 };
    // constraint list: normalization, class equalities, annihilations
    let mut rows: Vec<Vec<((usize, usize), f64)>> = vec![vec![((0, 0), 1.0)]];
    for &((u, v), id) in &rel.entries {
        match id {
            None => rows.push(vec![((u, v), half(u, v))]),
            Some(id) => {
                let (ru, rv) = first_pos[id];
                if (ru, rv) != (u, v) {
                    rows.push(vec![((u, v), half(u, v)), ((ru, rv), -half(ru, rv))]);
                }
            }
        }
    }
    let mut c = vec![0.0; rows.len()];
    c[0] = 1.0;
    let mut p = SdpProblem::new(vec![BlockSpec::dense(n)], c);
    for &(id, coef) in &rel.objective {
        let (u, v) = first_pos[id];
        p.add(0, 0, u, v, coef * half(u, v))?;
    }
    for (k, row) in rows.iter().enumerate() {
        for &((u, v), val) in row {
            p.add(k + 1, 0, u, v, val)?;
        }
    }
    p.finalize();
    Ok(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NpaBound {
    pub level: Level,
    /// Upper bound on the game value.
    pub value: f64,
    /// Whether `value` comes from a primal feasible point.
    pub certified: bool,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub dimension: usize,
    pub constraints: usize,
    pub solver: String,
}

/// Turns a solver result into a bound on the game value.
///
/// The primal objective bounds the relaxation from above. A slightly
/// infeasible primal point still gives a valid bound after adding
/// `N * max(0, -lambda_min)`, since every moment-matrix diagonal is at most 1.
pub fn bound_from_solution(rel: &MomentRelaxation, sol: &SdpSolution) -> Result<NpaBound> {
    match sol.status {
        SolveStatus::Infeasible | SolveStatus::Unbounded | SolveStatus::Failed => {
            return Err(Error::Solver(format!("relaxation solve ended with status {}: {}", sol.status, sol.message)));
        }
        SolveStatus::Optimal | SolveStatus::NearOptimal => {}
    }
    let n = rel.dimension() as f64;
    let (value, certified) = match sol.primal_min_eigenvalue {
        Some(lmin) => (sol.primal_objective + n * f64::max(0.0, -lmin) + rel.constant, true),
        None if sol.solver == "embedded" => (sol.primal_objective + rel.constant, false),
        None => (sol.primal_objective + rel.constant, sol.status == SolveStatus::Optimal),
    };
    Ok(NpaBound {
        level: rel.level,
        value,
        certified,
        primal: sol.primal_objective + rel.constant,
        dual: sol.dual_objective + rel.constant,
        gap: sol.gap,
        status: sol.status,
        dimension: rel.dimension(),
        constraints: 0,
        solver: sol.solver.clone(),
    })
}

/// Builds and solves the relaxation with the embedded solver.
pub fn npa_bound(game: &BellGame, level: Level, tol: f64) -> Result<NpaBound> {
    let (rel, p) = build_relaxation(game, level)?;
    let sol = sdp::solve_embedded(&p, tol)?;
    let mut b = bound_from_solution(&rel, &sol)?;
    b.constraints = p.m();
    Ok(b)
}

/// Moment matrix recovered from the dual solution, row-major.
pub fn moment_matrix(sol: &SdpSolution) -> Option<&sdp::DenseBlock> {
    sol.dual_matrix.as_ref().and_then(|b| b.first())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::make_cycle;
    use crate::tasks::{build_game, StartRule, TaskSpec};

    fn triangle() -> BellGame {
        build_game(&make_cycle(3).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap()
    }

    #[test]
    fn level_parsing() {
        assert_eq!("1+ab".parse::<Level>().unwrap(), Level::OnePlusAb);
        assert_eq!("almost-quantum".parse::<Level>().unwrap(), Level::OnePlusAb);
        assert_eq!("2".parse::<Level>().unwrap(), Level::Two);
        assert!("3".parse::<Level>().is_err());
    }

    #[test]
    fn generating_set_sizes() {
        let g = triangle();
        assert_eq!(generating_set(&g, Level::One).unwrap().len(), 7);
        assert_eq!(generating_set(&g, Level::OnePlusAb).unwrap().len(), 16);
        // level 2 adds same-party pairs of distinct inputs: 3*2 per party
        assert_eq!(generating_set(&g, Level::Two).unwrap().len(), 16 + 12);
        assert!(generating_set(&g, Level::One).unwrap()[0].is_empty());
    }

    #[test]
    fn adjoint_reverses_within_parties() {
        let (a1, a2, b1) = (Letter::new(0, 0, 0), Letter::new(0, 1, 0), Letter::new(1, 0, 0));
        assert_eq!(adjoint(&[a1, a2, b1]), vec![a2, a1, b1]);
        assert_eq!(moment_class(&[a2, a1, b1]), Some(vec![a1, a2, b1]));
    }

    #[test]
    fn triangle_relaxation_value() {
        let b = npa_bound(&triangle(), Level::OnePlusAb, 1e-9).unwrap();
        assert!((b.value - 7.0 / 12.0).abs() < 1e-6, "{}", b.value);
    }

    #[test]
    fn zero_game_has_zero_bound() {
        let g = triangle();
        let (mut rel, p) = build_relaxation(&g, Level::One).unwrap();
        rel.objective.clear();
        let mut q = SdpProblem::new(p.blocks().to_vec(), p.c().to_vec());
        for k in 1..=p.m() {
            for e in p.matrix(k).entries() {
                q.add(k, e.block, e.i, e.j, e.value).unwrap();
            }
        }
        let sol = sdp::solve_embedded(&q, 1e-9).unwrap();
        let b = bound_from_solution(&MomentRelaxation { constant: 0.0, ..rel }, &sol).unwrap();
        assert!(b.value.abs() < 1e-6);
    }
}
