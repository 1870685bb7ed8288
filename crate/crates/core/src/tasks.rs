//! Task semantics and their encoding as Bell games.
//!
//! A task on a graph becomes a game in which every agent receives its start
//! vertex as input and answers with the vertex it moves to. The coefficient of
//! an (inputs, outcomes) pair is the prior weight of the inputs times the score
//! of the final positions, so the value of a behaviour is the expected score.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Rendezvous,
    Domination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartRule {
    /// Start vertices are independent and uniform.
    Any,
    /// Start vertices are uniform over tuples of pairwise distinct vertices.
    Distinct,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Rendezvous => "rendezvous",
            TaskKind::Domination => "domination",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rendezvous" => Ok(TaskKind::Rendezvous),
            "domination" => Ok(TaskKind::Domination),
            _ => Err(Error::InvalidParameter(format!(
                "unknown task `{s}` (expected rendezvous or domination)"
            ))),
        }
    }
}

impl fmt::Display for StartRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartRule::Any => "any",
            StartRule::Distinct => "distinct",
        })
    }
}

impl FromStr for StartRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "any" => Ok(StartRule::Any),
            "distinct" => Ok(StartRule::Distinct),
            _ => Err(Error::InvalidParameter(format!(
                "unknown start rule `{s}` (expected any or distinct)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub agents: usize,
    pub steps: usize,
    pub start: StartRule,
    /// Restrict every strategy class to identical strategies for all agents.
    pub symmetric_only: bool,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, agents: usize, start: StartRule) -> TaskSpec {
        TaskSpec {
            kind,
            agents,
            steps: 1,
            start,
            symmetric_only: false,
        }
    }

    pub fn rendezvous(start: StartRule) -> TaskSpec {
        TaskSpec::new(TaskKind::Rendezvous, 2, start)
    }

    pub fn domination(start: StartRule) -> TaskSpec {
        TaskSpec::new(TaskKind::Domination, 2, start)
    }

    pub fn symmetric(mut self, on: bool) -> TaskSpec {
        self.symmetric_only = on;
        self
    }

    pub fn with_agents(mut self, agents: usize) -> TaskSpec {
        self.agents = agents;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> TaskSpec {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents < 2 {
            return Err(Error::InvalidParameter(format!(
                "a task needs at least 2 agents, got {}",
                self.agents
            )));
        }
        if self.steps < 1 {
            return Err(Error::InvalidParameter("a task needs at least 1 step".into()));
        }
        Ok(())
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} r={} h={} start={}", self.kind, self.agents, self.steps, self.start)?;
        if self.symmetric_only {
            f.write_str(" symmetric")?;
        }
        Ok(())
    }
}

/// Score of final positions: 1/0 for meeting, or the number of dominated vertices.
pub fn score(kind: TaskKind, g: &Graph, positions: &[usize]) -> Rational {
    rational::integer(score_int(kind, g, positions))
}

pub(crate) fn score_int(kind: TaskKind, g: &Graph, positions: &[usize]) -> i64 {
    match kind {
        TaskKind::Rendezvous => positions.windows(2).all(|w| w[0] == w[1]) as i64,
        TaskKind::Domination => positions
            .iter()
            .fold(0u64, |acc, &p| acc | g.closed_mask(p))
            .count_ones() as i64,
    }
}

/// Input tuples with nonzero weight, in lexicographic order, and their common weight.
pub fn start_prior(spec: &TaskSpec, n: usize) -> Result<Vec<(Vec<usize>, Rational)>> {
    spec.validate()?;
    let r = spec.agents;
    let tuples: Vec<Vec<usize>> = match spec.start {
        StartRule::Any => tuples(n, r).collect(),
        StartRule::Distinct => {
            if n < r {
                return Err(Error::InfeasiblePrior { agents: r, vertices: n });
            }
            tuples(n, r)
                .filter(|t| {
                    let mut s = t.clone();
                    s.sort_unstable();
                    s.windows(2).all(|w| w[0] != w[1])
                })
                .collect()
        }
    };
    let w = rational::ratio(1, tuples.len() as i64);
    Ok(tuples.into_iter().map(|t| (t, w.clone())).collect())
}

/// All tuples in `0..n` of length `r`, first coordinate most significant.
pub(crate) fn tuples(n: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(r as u32);
    (0..total).map(move |mut k| {
        let mut t = vec![0; r];
        for slot in t.iter_mut().rev() {
            *slot = k % n;
            k /= n;
        }
        t
    })
}

/// Coefficients for one input tuple, indexed by outcome tuples in mixed radix
/// (party 0 most significant, radices = outcome counts of each party's input).
#[derive(Debug, Clone, PartialEq)]
pub struct InputBlock {
    pub inputs: Vec<usize>,
    pub weight: Rational,
    pub coefficients: Vec<Rational>,
}

#[derive(Debug, Clone)]
pub struct BellGame {
    spec: TaskSpec,
    graph: Graph,
    outcomes: Vec<Vec<usize>>,
    blocks: Vec<InputBlock>,
    min_value: Rational,
    max_value: Rational,
}

/// Builds the game of `spec` on `g`. Movement uses the `h`-step walk power of
/// `g`; domination neighbourhoods always come from `g` itself.
pub fn build_game(g: &Graph, spec: &TaskSpec) -> Result<BellGame> {
    spec.validate()?;
    let moves_graph = g.walk_power(spec.steps)?;
    let outcomes: Vec<Vec<usize>> = (0..g.n()).map(|x| moves_graph.allowed_moves(x).to_vec()).collect();
    let prior = start_prior(spec, g.n())?;
    let mut blocks = Vec::with_capacity(prior.len());
    let mut min_value = Rational::zero();
    let mut max_value = Rational::zero();
    for (inputs, weight) in prior {
        let radices: Vec<usize> = inputs.iter().map(|&x| outcomes[x].len()).collect();
        let mut coefficients = Vec::with_capacity(radices.iter().product());
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for idx in MixedRadix::new(&radices) {
            let pos: Vec<usize> = idx.iter().zip(&inputs).map(|(&k, &x)| outcomes[x][k]).collect();
            let s = score_int(spec.kind, g, &pos);
            lo = lo.min(s);
            hi = hi.max(s);
            coefficients.push(&weight * rational::integer(s));
        }
        min_value += &weight * rational::integer(lo);
        max_value += &weight * rational::integer(hi);
        blocks.push(InputBlock { inputs, weight, coefficients });
    }
    Ok(BellGame {
        spec: *spec,
        graph: g.clone(),
        outcomes,
        blocks,
        min_value,
        max_value,
    })
}

impl BellGame {
    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn parties(&self) -> usize {
        self.spec.agents
    }

    /// Number of inputs per party (the vertex count).
    pub fn inputs(&self) -> usize {
        self.outcomes.len()
    }

    /// Allowed final vertices for start vertex `x`, ascending.
    pub fn outcomes(&self, x: usize) -> &[usize] {
        &self.outcomes[x]
    }

    pub fn blocks(&self) -> &[InputBlock] {
        &self.blocks
    }

    pub fn value_range(&self) -> (&Rational, &Rational) {
        (&self.min_value, &self.max_value)
    }

    pub(crate) fn radices(&self, block: &InputBlock) -> Vec<usize> {
        block.inputs.iter().map(|&x| self.outcomes[x].len()).collect()
    }

    /// Whether the coefficient tensor is invariant under every permutation of the parties.
    pub fn is_party_symmetric(&self) -> bool {
        let r = self.parties();
        let index: std::collections::HashMap<&[usize], &InputBlock> =
            self.blocks.iter().map(|b| (b.inputs.as_slice(), b)).collect();
        self.blocks.iter().all(|b| {
            let radices = self.radices(b);
            (0..r - 1).all(|p| {
                let mut swapped = b.inputs.clone();
                swapped.swap(p, p + 1);
                let Some(other) = index.get(swapped.as_slice()) else {
                    return false;
                };
                let oradices = self.radices(other);
                MixedRadix::new(&radices).enumerate().all(|(k, idx)| {
                    let mut sidx = idx.clone();
                    sidx.swap(p, p + 1);
                    b.coefficients[k] == other.coefficients[flat_index(&sidx, &oradices)]
                })
            })
        })
    }

    /// JSON dump of the game: outcome lists, prior and nonzero coefficients.
    pub fn to_dump(&self) -> GameDump {
        GameDump {
            schema: 1,
            graph: self.graph.name().to_string(),
            task: self.spec,
            r: self.parties(),
            outcomes: self.outcomes.clone(),
            prior: self
                .blocks
                .iter()
                .map(|b| PriorEntry { inputs: b.inputs.clone(), weight: rational::format(&b.weight) })
                .collect(),
            coefficients: self
                .blocks
                .iter()
                .flat_map(|b| {
                    let radices = self.radices(b);
                    MixedRadix::new(&radices)
                        .zip(&b.coefficients)
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(idx, c)| CoefficientEntry {
                            inputs: b.inputs.clone(),
                            outcomes: idx.iter().zip(&b.inputs).map(|(&k, &x)| self.outcomes[x][k]).collect(),
                            numerator: c.numer().to_string(),
                            denominator: c.denom().to_string(),
                        })
                        .collect::<Vec<_>>()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDump {
    pub schema: u32,
    pub graph: String,
    pub task: TaskSpec,
    pub r: usize,
    pub outcomes: Vec<Vec<usize>>,
    pub prior: Vec<PriorEntry>,
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEntry {
    pub inputs: Vec<usize>,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub inputs: Vec<usize>,
    pub outcomes: Vec<usize>,
    pub numerator: String,
    pub denominator: String,
}

/// Joint conditional distribution, one probability vector per input block,
/// aligned with the block's outcome tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    pub probabilities: Vec<Vec<f64>>,
}

impl Behavior {
    /// Every agent moves uniformly at random.
    pub fn uniform(game: &BellGame) -> Behavior {
        let local: Vec<Vec<f64>> = (0..game.inputs())
            .map(|x| {
                let k = game.outcomes(x).len();
                vec![1.0 / k as f64; k]
            })
            .collect();
        Behavior::product(game, &vec![local; game.parties()])
    }

    /// Independent local behaviours `local[party][input][outcome index]`.
    pub fn product(game: &BellGame, local: &[Vec<Vec<f64>>]) -> Behavior {
        let probabilities = game
            .blocks()
            .iter()
            .map(|b| {
                let radices = game.radices(b);
                MixedRadix::new(&radices)
                    .map(|idx| {
                        idx.iter()
                            .enumerate()
                            .map(|(p, &k)| local[p][b.inputs[p]][k])
                            .product()
                    })
                    .collect()
            })
            .collect();
        Behavior { probabilities }
    }
}

/// Expected score of `behavior`.
pub fn game_value(game: &BellGame, behavior: &Behavior) -> Result<f64> {
    if behavior.probabilities.len() != game.blocks().len() {
        return Err(Error::InvalidBehavior(format!(
            "expected {} input tuples, got {}",
            game.blocks().len(),
            behavior.probabilities.len()
        )));
    }
    let mut value = 0.0;
    for (b, p) in game.blocks().iter().zip(&behavior.probabilities) {
        if p.len() != b.coefficients.len() {
            return Err(Error::InvalidBehavior(format!(
                "input {:?}: expected {} outcome tuples, got {}",
                b.inputs,
                b.coefficients.len(),
                p.len()
            )));
        }
        if p.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
            return Err(Error::InvalidBehavior(format!("input {:?}: negative probability", b.inputs)));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidBehavior(format!(
                "input {:?}: probabilities sum to {total}",
                b.inputs
            )));
        }
        value += b
            .coefficients
            .iter()
            .zip(p)
            .map(|(c, &q)| rational::to_f64(c) * q)
            .sum::<f64>();
    }
    Ok(value)
}

/// Iterates mixed-radix digit vectors, most significant digit first.
#[derive(Debug, Clone)]
pub(crate) struct MixedRadix {
    radices: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MixedRadix {
    pub(crate) fn new(radices: &[usize]) -> MixedRadix {
        let next = if radices.iter().all(|&r| r > 0) { Some(vec![0; radices.len()]) } else { None };
        MixedRadix { radices: radices.to_vec(), next }
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.radices[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(cur)
    }
}

pub(crate) fn flat_index(idx: &[usize], radices: &[usize]) -> usize {
    idx.iter().zip(radices).fold(0, |acc, (&i, &r)| acc * r + i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{make_cycle, Graph};
    use crate::rational::ratio;

    #[test]
    fn scores() {
        let c5 = make_cycle(5).unwrap();
        assert_eq!(score(TaskKind::Rendezvous, &c5, &[2, 2]), ratio(1, 1));
        assert_eq!(score(TaskKind::Rendezvous, &c5, &[2, 3]), ratio(0, 1));
        assert_eq!(score(TaskKind::Domination, &c5, &[0, 2]), ratio(5, 1));
        assert_eq!(score(TaskKind::Domination, &c5, &[0, 0]), ratio(3, 1));
    }

    #[test]
    fn priors() {
        let any = start_prior(&TaskSpec::rendezvous(StartRule::Any), 5).unwrap();
        assert_eq!(any.len(), 25);
        assert!(any.iter().all(|(_, w)| *w == ratio(1, 25)));
        let distinct = start_prior(&TaskSpec::rendezvous(StartRule::Distinct), 3).unwrap();
        assert_eq!(distinct.len(), 6);
        assert!(distinct.iter().all(|(t, w)| t[0] != t[1] && *w == ratio(1, 6)));
        let three = TaskSpec::rendezvous(StartRule::Distinct).with_agents(3);
        assert!(matches!(start_prior(&three, 2), Err(Error::InfeasiblePrior { .. })));
    }

    #[test]
    fn triangle_game_shape() {
        let g = build_game(&make_cycle(3).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        assert_eq!(g.blocks().len(), 9);
        assert!(g.blocks().iter().all(|b| b.coefficients.len() == 4));
        let total: Rational = g.blocks().iter().map(|b| b.weight.clone()).sum();
        assert_eq!(total, ratio(1, 1));
    }

    #[test]
    fn single_vertex_loop() {
        let g = Graph::new("dot", 1, [(0, 0)]).unwrap();
        let game = build_game(&g, &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let v = game_value(&game, &Behavior::uniform(&game)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn uniform_values() {
        let c5 = make_cycle(5).unwrap();
        let rv = build_game(&c5, &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        assert!((game_value(&rv, &Behavior::uniform(&rv)).unwrap() - 0.2).abs() < 1e-12);
        let dom = build_game(&c5, &TaskSpec::domination(StartRule::Any)).unwrap();
        assert!((game_value(&dom, &Behavior::uniform(&dom)).unwrap() - 4.2).abs() < 1e-12);
        let domd = build_game(&c5, &TaskSpec::domination(StartRule::Distinct)).unwrap();
        assert!((game_value(&domd, &Behavior::uniform(&domd)).unwrap() - 4.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_behavior() {
        let g = build_game(&make_cycle(3).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let mut b = Behavior::uniform(&g);
        b.probabilities[0][0] += 1e-6;
        assert!(matches!(game_value(&g, &b), Err(Error::InvalidBehavior(_))));
    }

    #[test]
    fn domination_coefficients_bounded() {
        let c6 = make_cycle(6).unwrap();
        let g = build_game(&c6, &TaskSpec::domination(StartRule::Any)).unwrap();
        for b in g.blocks() {
            for c in &b.coefficients {
                let s = c / &b.weight;
                assert!(s >= ratio(3, 1) && s <= ratio(6, 1));
            }
        }
        let (lo, hi) = g.value_range();
        assert!(lo <= hi);
    }

    #[test]
    fn party_symmetry() {
        let g = build_game(&make_cycle(4).unwrap(), &TaskSpec::domination(StartRule::Distinct)).unwrap();
        assert!(g.is_party_symmetric());
    }

    #[test]
    fn mixed_radix_order() {
        let v: Vec<Vec<usize>> = MixedRadix::new(&[2, 3]).collect();
        assert_eq!(v.len(), 6);
        assert_eq!(v[1], vec![0, 1]);
        assert_eq!(v[3], vec![1, 0]);
        assert_eq!(flat_index(&[1, 2], &[2, 3]), 5);
    }
}
