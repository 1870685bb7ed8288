//! Random baselines, exact classical optima, and strategy-improvement procedures.
//!
//! All values here are exact rationals. The optimum search works on an
//! integer-scaled copy of the coefficient tensor so that the enumeration inner
//! loops never touch big numbers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::tasks::{flat_index, BellGame, MixedRadix, StartRule, TaskKind};

/// Default cap on enumerated strategy tuples.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// One final vertex per start vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    moves: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(game: &BellGame, moves: Vec<usize>) -> Result<Self> {
        if moves.len() != game.inputs() {
            return Err(Error::InvalidStrategy(format!(
                "expected {} moves, got {}",
                game.inputs(),
                moves.len()
            )));
        }
        for (x, &a) in moves.iter().enumerate() {
            if !game.outcomes(x).contains(&a) {
                return Err(Error::InvalidStrategy(format!("vertex {a} is not reachable from {x}")));
            }
        }
        Ok(DeterministicStrategy { moves })
    }

    fn from_indices(game: &BellGame, idx: &[usize]) -> Self {
        DeterministicStrategy {
            moves: idx.iter().enumerate().map(|(x, &k)| game.outcomes(x)[k]).collect(),
        }
    }

    pub fn moves(&self) -> &[usize] {
        &self.moves
    }

    pub fn target(&self, x: usize) -> usize {
        self.moves[x]
    }

    pub fn to_dump(&self) -> StrategyDump {
        StrategyDump::Deterministic {
            moves: self.moves.iter().copied().enumerate().collect(),
        }
    }
}

/// Conditional move probabilities `p(a|x)`, stored per input in the order of
/// the game's outcome list.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticStrategy {
    probs: Vec<Vec<Rational>>,
    outcomes: Vec<Vec<usize>>,
}

impl StochasticStrategy {
    pub fn new(game: &BellGame, probs: Vec<Vec<Rational>>) -> Result<Self> {
        if probs.len() != game.inputs() {
            return Err(Error::InvalidStrategy(format!(
                "expected rows for {} inputs, got {}",
                game.inputs(),
                probs.len()
            )));
        }
        for (x, row) in probs.iter().enumerate() {
            if row.len() != game.outcomes(x).len() {
                return Err(Error::InvalidStrategy(format!(
                    "input {x}: expected {} probabilities, got {}",
                    game.outcomes(x).len(),
                    row.len()
                )));
            }
            if row.iter().any(|p| p < &Rational::zero()) {
                return Err(Error::InvalidStrategy(format!("input {x}: negative probability")));
            }
            if row.iter().sum::<Rational>() != rational::one() {
                return Err(Error::InvalidStrategy(format!("input {x}: probabilities do not sum to 1")));
            }
        }
        Ok(StochasticStrategy {
            probs,
            outcomes: (0..game.inputs()).map(|x| game.outcomes(x).to_vec()).collect(),
        })
    }

    pub fn uniform(game: &BellGame) -> Self {
        let probs = (0..game.inputs())
            .map(|x| {
                let k = game.outcomes(x).len();
                vec![rational::ratio(1, k as i64); k]
            })
            .collect();
        StochasticStrategy::new(game, probs).expect("uniform strategy is valid")
    }

    pub fn from_deterministic(game: &BellGame, s: &DeterministicStrategy) -> Self {
        let probs = (0..game.inputs())
            .map(|x| {
                game.outcomes(x)
                    .iter()
                    .map(|&a| if a == s.target(x) { rational::one() } else { rational::zero() })
                    .collect()
            })
            .collect();
        StochasticStrategy {
            probs,
            outcomes: (0..game.inputs()).map(|x| game.outcomes(x).to_vec()).collect(),
        }
    }

    /// Probability row for input `x`, aligned with the game's outcome list.
    pub fn row(&self, x: usize) -> &[Rational] {
        &self.probs[x]
    }

    /// `p(a|x)`; zero when `a` is not reachable from `x`.
    pub fn prob(&self, x: usize, a: usize) -> Rational {
        self.outcomes[x]
            .iter()
            .position(|&v| v == a)
            .map(|k| self.probs[x][k].clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Probability of ending on `a` when starting uniformly at random.
    pub fn marginal(&self, a: usize) -> Rational {
        let n = self.probs.len() as i64;
        (0..self.probs.len()).map(|x| self.prob(x, a)).sum::<Rational>() / rational::integer(n)
    }

    pub fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|row| row.iter().filter(|p| !p.is_zero()).count() == 1)
    }

    /// The deterministic strategy this one equals, if it is deterministic.
    pub fn as_deterministic(&self) -> Option<DeterministicStrategy> {
        self.is_deterministic().then(|| DeterministicStrategy {
            moves: self
                .probs
                .iter()
                .enumerate()
                .map(|(x, row)| self.outcomes[x][row.iter().position(|p| !p.is_zero()).unwrap()])
                .collect(),
        })
    }

    pub fn to_dump(&self) -> StrategyDump {
        StrategyDump::Stochastic {
            rows: self
                .probs
                .iter()
                .enumerate()
                .flat_map(|(x, row)| {
                    row.iter().zip(&self.outcomes[x]).map(move |(p, &a)| ProbabilityRow {
                        input: x,
                        outcome: a,
                        probability: rational::format(p),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StrategyDump {
    Deterministic { moves: Vec<(usize, usize)> },
    Stochastic { rows: Vec<ProbabilityRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub input: usize,
    pub outcome: usize,
    pub probability: String,
}

fn check_strategies(game: &BellGame, strategies: &[StochasticStrategy]) -> Result<()> {
    if strategies.len() != game.parties() {
        return Err(Error::InvalidStrategy(format!(
            "expected {} strategies, got {}",
            game.parties(),
            strategies.len()
        )));
    }
    for s in strategies {
        let matches = s.outcomes.len() == game.inputs()
            && (0..game.inputs()).all(|x| s.outcomes[x] == game.outcomes(x));
        if !matches {
            return Err(Error::InvalidStrategy("strategy was built for a different graph".into()));
        }
    }
    Ok(())
}

/// Exact expected score of independent local strategies.
pub fn evaluate(game: &BellGame, strategies: &[StochasticStrategy]) -> Result<Rational> {
    check_strategies(game, strategies)?;
    let mut total = Rational::zero();
    for b in game.blocks() {
        let radices = game.radices(b);
        for (idx, c) in MixedRadix::new(&radices).zip(&b.coefficients) {
            if c.is_zero() {
                continue;
            }
            let mut term = c.clone();
            for (p, &k) in idx.iter().enumerate() {
                let q = &strategies[p].probs[b.inputs[p]][k];
                if q.is_zero() {
                    term = Rational::zero();
                    break;
                }
                term *= q;
            }
            total += term;
        }
    }
    Ok(total)
}

pub fn evaluate_deterministic(game: &BellGame, strategies: &[DeterministicStrategy]) -> Result<Rational> {
    let s: Vec<StochasticStrategy> =
        strategies.iter().map(|d| StochasticStrategy::from_deterministic(game, d)).collect();
    evaluate(game, &s)
}

/// Success probability of a rendezvous with independent uniform starts,
/// computed from end-vertex marginals alone: `sum_a prod_i p_i(a)`.
pub fn rendezvous_closed_form(game: &BellGame, strategies: &[StochasticStrategy]) -> Result<Rational> {
    require_rendezvous_any(game)?;
    check_strategies(game, strategies)?;
    Ok((0..game.inputs())
        .map(|a| strategies.iter().map(|s| s.marginal(a)).product::<Rational>())
        .sum())
}

/// Expected score when every agent moves uniformly at random.
pub fn random_value(game: &BellGame) -> Rational {
    let u = StochasticStrategy::uniform(game);
    evaluate(game, &vec![u; game.parties()]).expect("uniform strategies fit their game")
}

fn require_rendezvous_any(game: &BellGame) -> Result<()> {
    let spec = game.spec();
    if spec.kind != TaskKind::Rendezvous || spec.start != StartRule::Any {
        return Err(Error::UnsupportedPrior(format!(
            "this reduction holds for rendezvous with independent uniform starts, not {spec}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOptimum {
    pub value: Rational,
    pub strategies: Vec<DeterministicStrategy>,
    /// Whether only identical strategies were searched.
    pub symmetric_search: bool,
    /// Strategy tuples actually evaluated.
    pub evaluated: u64,
}

/// Exact optimum over deterministic strategy tuples.
///
/// Only symmetric tuples are searched when `symmetric_only` is set or when
/// the game is a rendezvous with independent uniform starts, where identical
/// deterministic strategies are known to be optimal. Otherwise the first
/// `r - 1` agents are enumerated depth-first with an upper-bound prune and the
/// last agent plays its exact best response.
pub fn classical_optimum(game: &BellGame, symmetric_only: bool) -> Result<ClassicalOptimum> {
    classical_optimum_with_budget(game, symmetric_only, DEFAULT_BUDGET)
}

pub fn classical_optimum_with_budget(
    game: &BellGame,
    symmetric_only: bool,
    budget: u64,
) -> Result<ClassicalOptimum> {
    let spec = game.spec();
    let symmetric =
        symmetric_only || (spec.kind == TaskKind::Rendezvous && spec.start == StartRule::Any);
    let ig = IntGame::new(game)?;
    let per_agent = ig
        .degrees
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .unwrap_or(u64::MAX);
    let space = if symmetric {
        per_agent
    } else {
        (1..game.parties())
            .try_fold(1u64, |acc, _| acc.checked_mul(per_agent))
            .unwrap_or(u64::MAX)
    };
    if space > budget {
        return Err(Error::TooLarge(format!(
            "{space} strategy tuples exceed the budget of {budget}; \
             try symmetric mode or the best-response heuristic (a lower bound only)"
        )));
    }
    let (best, choices, evaluated) = if symmetric {
        ig.search_symmetric()
    } else {
        ig.search_product()
    };
    let strategies = choices.iter().map(|idx| DeterministicStrategy::from_indices(game, idx)).collect();
    Ok(ClassicalOptimum {
        value: BigRational::new(BigInt::from(best), ig.scale.clone()),
        strategies,
        symmetric_search: symmetric,
        evaluated,
    })
}

struct IntBlock {
    inputs: Vec<usize>,
    radices: Vec<usize>,
    coeffs: Vec<i64>,
}

struct IntGame {
    parties: usize,
    degrees: Vec<usize>,
    blocks: Vec<IntBlock>,
    scale: BigInt,
}

impl IntGame {
    fn new(game: &BellGame) -> Result<IntGame> {
        let scale = rational::common_denominator(game.blocks().iter().flat_map(|b| &b.coefficients));
        let mut blocks = Vec::with_capacity(game.blocks().len());
        for b in game.blocks() {
            let coeffs = b
                .coefficients
                .iter()
                .map(|c| {
                    (c * BigRational::from_integer(scale.clone()))
                        .to_integer()
                        .to_i64()
                        .filter(|v| v.abs() < (1 << 40))
                        .ok_or_else(|| Error::TooLarge("coefficients do not fit exact integer search".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(IntBlock {
                inputs: b.inputs.clone(),
                radices: game.radices(b),
                coeffs,
            });
        }
        Ok(IntGame {
            parties: game.parties(),
            degrees: (0..game.inputs()).map(|x| game.outcomes(x).len()).collect(),
            blocks,
            scale,
        })
    }

    fn search_symmetric(&self) -> (i64, Vec<Vec<usize>>, u64) {
        let mut best = i64::MIN;
        let mut arg = Vec::new();
        let mut count = 0u64;
        let mut idx = vec![0usize; self.parties];
        for f in MixedRadix::new(&self.degrees) {
            count += 1;
            let v: i64 = self
                .blocks
                .iter()
                .map(|b| {
                    for (slot, &x) in idx.iter_mut().zip(&b.inputs) {
                        *slot = f[x];
                    }
                    b.coeffs[flat_index(&idx, &b.radices)]
                })
                .sum();
            if v > best {
                best = v;
                arg = f;
            }
        }
        (best, vec![arg; self.parties], count)
    }

    fn search_product(&self) -> (i64, Vec<Vec<usize>>, u64) {
        let n = self.degrees.len();
        let r = self.parties;
        let last = r - 1;
        let mut by_last: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, b) in self.blocks.iter().enumerate() {
            by_last[b.inputs[last]].push(k);
        }
        let mut search = ProductSearch {
            game: self,
            by_last,
            assign: vec![vec![None; n]; last],
            best: i64::MIN,
            best_assign: Vec::new(),
            leaves: 0,
        };
        search.dfs(0);
        let mut choices: Vec<Vec<usize>> = search
            .best_assign
            .iter()
            .map(|row| row.iter().map(|c| c.unwrap()).collect())
            .collect();
        let (_, br) = search.best_response_value(&search.best_assign);
        choices.push(br);
        (search.best, choices, search.leaves)
    }
}

struct ProductSearch<'a> {
    game: &'a IntGame,
    by_last: Vec<Vec<usize>>,
    assign: Vec<Vec<Option<usize>>>,
    best: i64,
    best_assign: Vec<Vec<Option<usize>>>,
    leaves: u64,
}

impl ProductSearch<'_> {
    fn dfs(&mut self, slot: usize) {
        let n = self.game.degrees.len();
        let total = self.assign.len() * n;
        if slot == total {
            self.leaves += 1;
            let (v, _) = self.best_response_value(&self.assign);
            if v > self.best {
                self.best = v;
                self.best_assign = self.assign.clone();
            }
            return;
        }
        if slot > 0 && self.best > i64::MIN {
            let (bound, _) = self.best_response_value(&self.assign);
            if bound <= self.best {
                return;
            }
        }
        let (p, x) = (slot / n, slot % n);
        for k in 0..self.game.degrees[x] {
            self.assign[p][x] = Some(k);
            self.dfs(slot + 1);
        }
        self.assign[p][x] = None;
    }

    /// Value of the last agent's best response. Unassigned choices of the
    /// other agents are relaxed to their most favourable option, so on partial
    /// assignments this is an upper bound.
    fn best_response_value(&self, assign: &[Vec<Option<usize>>]) -> (i64, Vec<usize>) {
        let last = self.game.parties - 1;
        let mut total = 0i64;
        let mut br = Vec::with_capacity(self.by_last.len());
        for (y, blocks) in self.by_last.iter().enumerate() {
            let deg = self.game.degrees[y];
            let mut gain = vec![0i64; deg];
            for &k in blocks {
                let b = &self.game.blocks[k];
                let ranges: Vec<usize> = (0..last)
                    .map(|p| if assign[p][b.inputs[p]].is_some() { 1 } else { b.radices[p] })
                    .collect();
                for (bi, g) in gain.iter_mut().enumerate() {
                    let mut m = i64::MIN;
                    for free in MixedRadix::new(&ranges) {
                        let mut idx: Vec<usize> = (0..last)
                            .map(|p| assign[p][b.inputs[p]].unwrap_or(free[p]))
                            .collect();
                        idx.push(bi);
                        m = m.max(b.coeffs[flat_index(&idx, &b.radices)]);
                    }
                    *g += m;
                }
            }
            let (arg, best) = gain
                .iter()
                .enumerate()
                .fold((0, i64::MIN), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
            total += if blocks.is_empty() { 0 } else { best };
            br.push(arg);
        }
        (total, br)
    }
}

/// Replaces every agent by the identical copy of its member maximizing
/// `sum_a p_i(a)^r`. Never decreases the rendezvous value.
pub fn symmetrize(game: &BellGame, strategies: &[StochasticStrategy]) -> Result<Vec<StochasticStrategy>> {
    require_rendezvous_any(game)?;
    check_strategies(game, strategies)?;
    let r = game.parties() as u32;
    let score = |s: &StochasticStrategy| -> Rational {
        (0..game.inputs()).map(|a| num_traits::pow(s.marginal(a), r as usize)).sum()
    };
    let mut best = 0;
    let mut best_score = score(&strategies[0]);
    for (i, s) in strategies.iter().enumerate().skip(1) {
        let sc = score(s);
        if sc > best_score {
            best = i;
            best_score = sc;
        }
    }
    Ok(vec![strategies[best].clone(); strategies.len()])
}

/// Symmetric rendezvous value `sum_a p(a)^r` when every agent plays `s`.
pub fn symmetric_value(game: &BellGame, s: &StochasticStrategy) -> Rational {
    let r = game.parties();
    (0..game.inputs()).map(|a| num_traits::pow(s.marginal(a), r)).sum()
}

#[derive(Debug, Clone)]
pub struct Derandomization {
    pub strategy: DeterministicStrategy,
    /// Symmetric value before the first shift and after each one.
    pub values: Vec<Rational>,
}

/// Turns a symmetric stochastic rendezvous strategy into a deterministic one
/// by repeatedly moving the mass of one supported outcome onto another
/// supported outcome with at least the same end-vertex marginal.
pub fn derandomize(game: &BellGame, s: &StochasticStrategy) -> Result<Derandomization> {
    require_rendezvous_any(game)?;
    check_strategies(game, std::slice::from_ref(s))
        .or_else(|_| check_strategies(game, &vec![s.clone(); game.parties()]))?;
    let mut cur = s.clone();
    let mut values = vec![symmetric_value(game, &cur)];
    while let Some(x) = (0..game.inputs()).find(|&x| cur.probs[x].iter().filter(|p| !p.is_zero()).count() > 1) {
        let supported: Vec<usize> =
            (0..cur.probs[x].len()).filter(|&k| !cur.probs[x][k].is_zero()).collect();
        let marg = |k: usize| cur.marginal(cur.outcomes[x][k]);
        // Keep the supported outcome with the largest marginal (lowest vertex
        // on ties) and fold the first other supported outcome into it.
        let keep = supported
            .iter()
            .copied()
            .fold(None::<(usize, Rational)>, |acc, k| {
                let m = marg(k);
                match acc {
                    Some((_, ref bm)) if &m <= bm => acc,
                    _ => Some((k, m)),
                }
            })
            .unwrap()
            .0;
        let drop = *supported.iter().find(|&&k| k != keep).unwrap();
        let moved = std::mem::replace(&mut cur.probs[x][drop], Rational::zero());
        cur.probs[x][keep] += moved;
        values.push(symmetric_value(game, &cur));
    }
    Ok(Derandomization {
        strategy: cur.as_deterministic().expect("loop ends on a deterministic strategy"),
        values,
    })
}

#[derive(Debug, Clone)]
pub struct BestResponseRun {
    pub strategies: Vec<DeterministicStrategy>,
    /// Value of the initial tuple and after every single-agent replacement.
    pub values: Vec<Rational>,
}

impl BestResponseRun {
    pub fn value(&self) -> &Rational {
        self.values.last().unwrap()
    }
}

/// Cycles over the agents, replacing each strategy by its deterministic best
/// response to the others, until a full cycle brings no strict improvement.
/// The result is a lower bound on the classical value, not the optimum.
pub fn best_response_improve(game: &BellGame, init: &[StochasticStrategy]) -> Result<BestResponseRun> {
    check_strategies(game, init)?;
    let mut cur: Vec<StochasticStrategy> = init.to_vec();
    let mut value = evaluate(game, &cur)?;
    let mut values = vec![value.clone()];
    loop {
        let mut improved = false;
        for i in 0..game.parties() {
            let br = best_response(game, &cur, i);
            cur[i] = StochasticStrategy::from_deterministic(game, &br);
            let v = evaluate(game, &cur)?;
            if v > value {
                improved = true;
            }
            value = v;
            values.push(value.clone());
        }
        if !improved {
            break;
        }
    }
    Ok(BestResponseRun {
        strategies: cur.iter().map(|s| s.as_deterministic().unwrap()).collect(),
        values,
    })
}

/// Deterministic best response of agent `i`, ties to the lowest vertex.
pub fn best_response(game: &BellGame, strategies: &[StochasticStrategy], i: usize) -> DeterministicStrategy {
    let mut gain: Vec<Vec<Rational>> =
        (0..game.inputs()).map(|x| vec![Rational::zero(); game.outcomes(x).len()]).collect();
    for b in game.blocks() {
        let radices = game.radices(b);
        for (idx, c) in MixedRadix::new(&radices).zip(&b.coefficients) {
            if c.is_zero() {
                continue;
            }
            let mut w = c.clone();
            for (p, &k) in idx.iter().enumerate() {
                if p != i {
                    w *= &strategies[p].probs[b.inputs[p]][k];
                }
            }
            gain[b.inputs[i]][idx[i]] += w;
        }
    }
    let moves = gain
        .iter()
        .enumerate()
        .map(|(x, g)| {
            let mut arg = 0;
            for k in 1..g.len() {
                if g[k] > g[arg] {
                    arg = k;
                }
            }
            game.outcomes(x)[arg]
        })
        .collect();
    DeterministicStrategy { moves }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{make_complete, make_cycle, make_path, Graph};
    use crate::rational::ratio;
    use crate::tasks::{build_game, TaskSpec};

    fn game(g: &Graph, spec: TaskSpec) -> BellGame {
        build_game(g, &spec).unwrap()
    }

    #[test]
    fn random_values() {
        let c5 = make_cycle(5).unwrap();
        assert_eq!(random_value(&game(&c5, TaskSpec::rendezvous(StartRule::Any))), ratio(1, 5));
        assert_eq!(random_value(&game(&c5, TaskSpec::domination(StartRule::Any))), ratio(21, 5));
    }

    #[test]
    fn triangle_evaluations() {
        let c3 = make_cycle(3).unwrap();
        let g = game(&c3, TaskSpec::rendezvous(StartRule::Any));
        let f = DeterministicStrategy::new(&g, vec![1, 0, 0]).unwrap();
        assert_eq!(evaluate_deterministic(&g, &[f.clone(), f]).unwrap(), ratio(5, 9));
        let u = StochasticStrategy::uniform(&g);
        assert_eq!(evaluate(&g, &[u.clone(), u]).unwrap(), random_value(&g));
    }

    #[test]
    fn swap_on_an_edge() {
        let e = make_path(2, false).unwrap();
        let g = game(&e, TaskSpec::rendezvous(StartRule::Any));
        let swap = DeterministicStrategy::new(&g, vec![1, 0]).unwrap();
        assert_eq!(evaluate_deterministic(&g, &[swap.clone(), swap]).unwrap(), ratio(1, 2));
    }

    #[test]
    fn optima() {
        let c5 = make_cycle(5).unwrap();
        let opt = classical_optimum(&game(&c5, TaskSpec::rendezvous(StartRule::Any)), true).unwrap();
        assert_eq!(opt.value, ratio(9, 25));
        let k4 = make_complete(4).unwrap();
        let opt = classical_optimum(&game(&k4, TaskSpec::rendezvous(StartRule::Distinct)), false).unwrap();
        assert_eq!(opt.value, ratio(1, 2));
        let dom = game(&c5, TaskSpec::domination(StartRule::Any));
        let opt = classical_optimum(&dom, false).unwrap();
        assert_eq!(opt.value, ratio(23, 5));
        assert_eq!(evaluate_deterministic(&dom, &opt.strategies).unwrap(), opt.value);
    }

    #[test]
    fn budget_is_enforced() {
        let c13 = make_cycle(13).unwrap();
        let g = game(&c13, TaskSpec::domination(StartRule::Any));
        assert!(matches!(classical_optimum_with_budget(&g, false, 100), Err(Error::TooLarge(_))));
    }

    #[test]
    fn lemma_reductions_reject_distinct_starts() {
        let c3 = make_cycle(3).unwrap();
        let g = game(&c3, TaskSpec::rendezvous(StartRule::Distinct));
        let u = StochasticStrategy::uniform(&g);
        assert!(matches!(symmetrize(&g, &[u.clone(), u.clone()]), Err(Error::UnsupportedPrior(_))));
        assert!(matches!(derandomize(&g, &u), Err(Error::UnsupportedPrior(_))));
    }

    #[test]
    fn derandomize_keeps_deterministic_input() {
        let c3 = make_cycle(3).unwrap();
        let g = game(&c3, TaskSpec::rendezvous(StartRule::Any));
        let f = DeterministicStrategy::new(&g, vec![1, 0, 0]).unwrap();
        let d = derandomize(&g, &StochasticStrategy::from_deterministic(&g, &f)).unwrap();
        assert_eq!(d.strategy, f);
        assert_eq!(d.values.len(), 1);
    }

    #[test]
    fn derandomize_uniform_on_triangle() {
        let c3 = make_cycle(3).unwrap();
        let g = game(&c3, TaskSpec::rendezvous(StartRule::Any));
        let d = derandomize(&g, &StochasticStrategy::uniform(&g)).unwrap();
        assert_eq!(d.values[0], ratio(1, 3));
        assert!(d.values.windows(2).all(|w| w[0] <= w[1]));
        let s = StochasticStrategy::from_deterministic(&g, &d.strategy);
        assert!(evaluate(&g, &[s.clone(), s]).unwrap() >= ratio(1, 3));
    }

    #[test]
    fn derandomize_uniform_on_pentagon() {
        let c5 = make_cycle(5).unwrap();
        let g = game(&c5, TaskSpec::rendezvous(StartRule::Any));
        let d = derandomize(&g, &StochasticStrategy::uniform(&g)).unwrap();
        let mut counts = [0i64; 5];
        for &a in d.strategy.moves() {
            counts[a] += 1;
        }
        assert!(counts.iter().map(|c| c * c).sum::<i64>() >= 5);
        assert!(d.values.last().unwrap() >= &ratio(1, 5));
    }

    #[test]
    fn best_response_on_pentagon_domination() {
        let c5 = make_cycle(5).unwrap();
        let g = game(&c5, TaskSpec::domination(StartRule::Any));
        let u = StochasticStrategy::uniform(&g);
        let run = best_response_improve(&g, &[u.clone(), u]).unwrap();
        assert!(run.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(run.value() >= &ratio(21, 5) && run.value() <= &ratio(23, 5));
    }

    #[test]
    fn optimum_is_a_best_response_fixed_point() {
        let c6 = make_cycle(6).unwrap();
        let g = game(&c6, TaskSpec::domination(StartRule::Distinct));
        let opt = classical_optimum(&g, false).unwrap();
        let init: Vec<_> = opt.strategies.iter().map(|s| StochasticStrategy::from_deterministic(&g, s)).collect();
        let run = best_response_improve(&g, &init).unwrap();
        assert_eq!(run.value(), &opt.value);
    }

    #[test]
    fn dumps() {
        let c3 = make_cycle(3).unwrap();
        let g = game(&c3, TaskSpec::rendezvous(StartRule::Any));
        let json = serde_json::to_string(&StochasticStrategy::uniform(&g).to_dump()).unwrap();
        assert!(json.contains("\"probability\":\"1/2\""));
        let f = DeterministicStrategy::new(&g, vec![1, 0, 0]).unwrap();
        let json = serde_json::to_string(&f.to_dump()).unwrap();
        assert!(json.contains("[[0,1],[1,0],[2,0]]"));
    }
}
