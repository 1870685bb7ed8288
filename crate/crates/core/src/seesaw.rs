//! See-saw lower bounds: alternating optimization over a shared pure state
//! and local measurements, all real.
//!
//! Each party holds a `d`-dimensional system. With every other piece fixed,
//! the value is linear in the state's projector (so the best state is a top
//! eigenvector of the Bell operator) and linear in one party's measurements
//! (a small SDP per input). Every accepted update is non-decreasing.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::StochasticStrategy;
use crate::error::{Error, Result};
use crate::rational;
use crate::sdp::{self, BlockSpec, SdpProblem, SolveStatus};
use crate::tasks::{BellGame, Behavior, MixedRadix};

/// Margin used when comparing values to decide the status of a game.
pub const STATUS_MARGIN: f64 = 1e-6;

const NORM_TOL: f64 = 1e-10;
const SUM_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    /// Local dimension of each party.
    pub d: usize,
    pub restarts: usize,
    /// Stop a restart once one sweep improves the value by less than this.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Share one measurement set among all parties and keep the state
    /// invariant under exchanging them.
    pub symmetric: bool,
}

impl SeesawConfig {
    /// Defaults for `game`: `d` is the vertex count, 100 restarts.
    pub fn for_game(game: &BellGame) -> SeesawConfig {
        SeesawConfig {
            d: game.inputs(),
            restarts: 100,
            tol: 1e-9,
            max_iters: 500,
            seed: 0,
            symmetric: game.spec().symmetric_only,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("see-saw dimension must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("see-saw needs at least one restart".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter("see-saw tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Shared pure state and per-party measurements.
///
/// `measurements[party][input][k]` is the operator for the `k`-th allowed
/// outcome of `input`, row-major `d x d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumRealization {
    pub r: usize,
    pub d: usize,
    pub state: Vec<f64>,
    pub measurements: Vec<Vec<Vec<Vec<f64>>>>,
    pub value: f64,
}

fn to_mat(d: usize, data: &[f64]) -> Mat<f64> {
    Mat::from_fn(d, d, |i, j| data[i * d + j])
}

fn from_mat(m: &Mat<f64>) -> Vec<f64> {
    let d = m.nrows();
    (0..d * d).map(|t| m[(t / d, t % d)]).collect()
}

fn identity(d: usize) -> Mat<f64> {
    Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 })
}

fn eigh(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let e = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    ((0..m.nrows()).map(|i| s[i]).collect(), e.u().to_owned())
}

fn symmetrized(m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

fn trace_product(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

fn kron(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let m = b.nrows();
    Mat::from_fn(a.nrows() * m, a.ncols() * m, |i, j| a[(i / m, j / m)] * b[(i % m, j % m)])
}

/// Unit top eigenvector. Within a degenerate top eigenspace the basis vector
/// whose absolute values are lexicographically largest wins; the first
/// non-negligible component is made positive.
fn top_eigenvector(w: &Mat<f64>) -> (f64, Vec<f64>) {
    let (vals, u) = eigh(&symmetrized(w));
    let n = vals.len();
    let top = vals[n - 1];
    let cutoff = top - 1e-10 * f64::max(1.0, top.abs());
    let mut best: Option<Vec<f64>> = None;
    for c in (0..n).rev().take_while(|&c| vals[c] >= cutoff) {
        let mut v: Vec<f64> = (0..n).map(|i| u[(i, c)]).collect();
        if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let mut ord = std::cmp::Ordering::Equal;
                for (x, y) in v.iter().zip(b) {
                    if (x.abs() - y.abs()).abs() > 1e-12 {
                        ord = x.abs().partial_cmp(&y.abs()).unwrap();
                        break;
                    }
                }
                ord == std::cmp::Ordering::Greater
            }
        };
        if better {
            best = Some(v);
        }
    }
    (top, best.expect("non-empty spectrum"))
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn permutations(r: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, r: usize, out: &mut Vec<(Vec<usize>, f64)>) {
        if prefix.len() == r {
            let mut inversions = 0;
            for i in 0..r {
                for j in i + 1..r {
                    if prefix[i] > prefix[j] {
                        inversions += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inversions % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for v in 0..r {
            if !prefix.contains(&v) {
                prefix.push(v);
                rec(prefix, r, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), r, &mut out);
    out
}

/// Orthonormal basis (as columns) of the symmetric or antisymmetric subspace
/// of `(R^d)^{(x) r}`. Empty when the antisymmetric subspace is trivial.
fn exchange_basis(r: usize, d: usize, antisymmetric: bool) -> Mat<f64> {
    let dim = d.pow(r as u32);
    let perms = permutations(r);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for t in MixedRadix::new(&vec![d; r]) {
        let sorted = t.windows(2).all(|w| if antisymmetric { w[0] < w[1] } else { w[0] <= w[1] });
        if !sorted {
            continue;
        }
        let mut v = vec![0.0; dim];
        for (perm, sign) in &perms {
            let idx = perm.iter().fold(0, |acc, &p| acc * d + t[p]);
            v[idx] += if antisymmetric { *sign } else { 1.0 };
        }
        normalize(&mut v);
        cols.push(v);
    }
    Mat::from_fn(dim, cols.len(), |i, j| cols[j][i])
}

/// Applies `m` to tensor factor `p` of `v`.
fn apply_factor(v: &[f64], r: usize, d: usize, p: usize, m: &Mat<f64>) -> Vec<f64> {
    let stride = d.pow((r - 1 - p) as u32);
    let mut out = vec![0.0; v.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let outer = idx / (stride * d);
        let i = (idx / stride) % d;
        let inner = idx % stride;
        let base = outer * stride * d + inner;
        let mut s = 0.0;
        for j in 0..d {
            s += m[(i, j)] * v[base + j * stride];
        }
        *o = s;
    }
    out
}

struct Block {
    inputs: Vec<usize>,
    radices: Vec<usize>,
    coefficients: Vec<f64>,
}

type Ops = Vec<Vec<Vec<Mat<f64>>>>;

/// A game prepared for see-saw sweeps in local dimension `d`.
pub struct Seesaw {
    r: usize,
    d: usize,
    outcomes: Vec<usize>,
    blocks: Vec<Block>,
}

/// Outcome of one measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementUpdate {
    pub value: f64,
    /// Inputs whose SDP failed; their operators were kept.
    pub stalled: usize,
}

impl Seesaw {
    pub fn new(game: &BellGame, d: usize) -> Result<Seesaw> {
        if d == 0 {
            return Err(Error::InvalidParameter("see-saw dimension must be at least 1".into()));
        }
        let r = game.parties();
        let dim = (d as f64).powi(r as i32);
        if dim > 4096.0 {
            return Err(Error::TooLarge(format!(
                "joint dimension {d}^{r} exceeds 4096; lower --seesaw-dim"
            )));
        }
        let blocks = game
            .blocks()
            .iter()
            .map(|b| Block {
                inputs: b.inputs.clone(),
                radices: game.radices(b),
                coefficients: b.coefficients.iter().map(rational::to_f64).collect(),
            })
            .collect();
        Ok(Seesaw {
            r,
            d,
            outcomes: (0..game.inputs()).map(|x| game.outcomes(x).len()).collect(),
            blocks,
        })
    }

    fn dim(&self) -> usize {
        self.d.pow(self.r as u32)
    }

    fn ops(&self, q: &QuantumRealization) -> Ops {
        q.measurements
            .iter()
            .map(|party| party.iter().map(|x| x.iter().map(|m| to_mat(self.d, m)).collect()).collect())
            .collect()
    }

    fn check(&self, q: &QuantumRealization) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("realization does not fit the game: {msg}")));
        if q.r != self.r || q.d != self.d {
            return bad(format!("expected r = {}, d = {}, got r = {}, d = {}", self.r, self.d, q.r, q.d));
        }
        if q.state.len() != self.dim() {
            return bad(format!("state has length {}, expected {}", q.state.len(), self.dim()));
        }
        if q.measurements.len() != self.r {
            return bad(format!("{} measurement sets for {} parties", q.measurements.len(), self.r));
        }
        for party in &q.measurements {
            if party.len() != self.outcomes.len() {
                return bad(format!("{} inputs, expected {}", party.len(), self.outcomes.len()));
            }
            for (x, ops) in party.iter().enumerate() {
                if ops.len() != self.outcomes[x] || ops.iter().any(|m| m.len() != self.d * self.d) {
                    return bad(format!("input {x} has the wrong number or size of operators"));
                }
            }
        }
        Ok(())
    }

    /// Sum over the other parties' outcomes of coefficient times their
    /// operators, for party `p` reading input `x` and outcome `k`, collected
    /// as `env[x][k]` on the remaining `r - 1` factors (ascending party order).
    fn environment(&self, ops: &Ops, p: usize) -> Vec<Vec<Mat<f64>>> {
        let side = self.d.pow(self.r as u32 - 1);
        let mut env: Vec<Vec<Mat<f64>>> =
            self.outcomes.iter().map(|&k| vec![Mat::zeros(side, side); k]).collect();
        for b in &self.blocks {
            let x = b.inputs[p];
            for k in 0..b.radices[p] {
                let mut digits = vec![0; self.r];
                digits[p] = k;
                let term = self.contract(ops, b, p, 0, &mut digits);
                env[x][k] += term;
            }
        }
        env
    }

    fn contract(&self, ops: &Ops, b: &Block, p: usize, level: usize, digits: &mut Vec<usize>) -> Mat<f64> {
        if level == self.r {
            let idx = digits.iter().zip(&b.radices).fold(0, |acc, (&i, &r)| acc * r + i);
            return Mat::from_fn(1, 1, |_, _| b.coefficients[idx]);
        }
        if level == p {
            return self.contract(ops, b, p, level + 1, digits);
        }
        let mut acc: Option<Mat<f64>> = None;
        for k in 0..b.radices[level] {
            digits[level] = k;
            let sub = self.contract(ops, b, p, level + 1, digits);
            let t = kron(&ops[level][b.inputs[level]][k], &sub);
            acc = Some(match acc {
                None => t,
                Some(a) => a + t,
            });
        }
        acc.expect("at least one outcome")
    }

    /// `psi` as a `d x d^(r-1)` matrix with party `p`'s index first.
    fn reshape(&self, psi: &[f64], p: usize) -> Mat<f64> {
        let (r, d) = (self.r, self.d);
        let side = d.pow(r as u32 - 1);
        let stride = d.pow((r - 1 - p) as u32);
        Mat::from_fn(d, side, |j, rest| {
            let outer = rest / stride;
            let inner = rest % stride;
            psi[outer * stride * d + j * stride + inner]
        })
    }

    /// Reduced operators `F[x][k]`: the value is `sum Tr(M_p(k|x) F[x][k])`.
    fn reduced(&self, ops: &Ops, psi: &[f64], p: usize) -> Vec<Vec<Mat<f64>>> {
        let env = self.environment(ops, p);
        let m = self.reshape(psi, p);
        let mt = m.transpose().to_owned();
        env.iter()
            .map(|row| row.iter().map(|e| symmetrized(&(&m * e * &mt))).collect())
            .collect()
    }

    fn value_of(&self, ops: &Ops, psi: &[f64]) -> f64 {
        let f = self.reduced(ops, psi, 0);
        let mut v = 0.0;
        for (x, row) in f.iter().enumerate() {
            for (k, fk) in row.iter().enumerate() {
                v += trace_product(&ops[0][x][k], fk);
            }
        }
        v
    }

    fn bell_operator(&self, ops: &Ops) -> Mat<f64> {
        let env = self.environment(ops, 0);
        let n = self.dim();
        let mut w = Mat::<f64>::zeros(n, n);
        for (x, row) in env.iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                w += kron(&ops[0][x][k], e);
            }
        }
        symmetrized(&w)
    }

    /// Expected score `<psi| W |psi>`.
    pub fn value(&self, q: &QuantumRealization) -> Result<f64> {
        self.check(q)?;
        Ok(self.value_of(&self.ops(q), &q.state))
    }

    /// Replaces the state by a top eigenvector of the Bell operator when that
    /// raises the value. Returns the new value.
    pub fn update_state(&self, q: &mut QuantumRealization) -> Result<f64> {
        self.check(q)?;
        let ops = self.ops(q);
        let current = self.value_of(&ops, &q.state);
        let (top, v) = top_eigenvector(&self.bell_operator(&ops));
        q.value = current;
        if top > current {
            let after = self.value_of(&ops, &v);
            if after > current {
                q.state = v;
                q.value = after;
            }
        }
        Ok(q.value)
    }

    /// Re-optimizes party `p`'s measurements input by input, keeping the old
    /// operators wherever the new ones would not raise the value.
    pub fn update_measurements(&self, q: &mut QuantumRealization, p: usize) -> Result<MeasurementUpdate> {
        self.check(q)?;
        if p >= self.r {
            return Err(Error::InvalidParameter(format!("party {p} does not exist")));
        }
        let ops = self.ops(q);
        let current = self.value_of(&ops, &q.state);
        let previous = q.measurements[p].clone();
        let f = self.reduced(&ops, &q.state, p);
        let mut stalled = 0;
        for (x, fx) in f.iter().enumerate() {
            let old: f64 = ops[p][x].iter().zip(fx).map(|(m, fk)| trace_product(m, fk)).sum();
            match best_measurement(fx, self.d) {
                Some(new) => {
                    let gain: f64 = new.iter().zip(fx).map(|(m, fk)| trace_product(m, fk)).sum();
                    if gain > old {
                        q.measurements[p][x] = new.iter().map(from_mat).collect();
                    }
                }
                None => stalled += 1,
            }
        }
        // Per-input gains are exact only up to rounding in the reduction.
        q.value = self.value_of(&self.ops(q), &q.state);
        if q.value < current {
            q.measurements[p] = previous;
            q.value = current;
        }
        Ok(MeasurementUpdate { value: q.value, stalled })
    }

    /// One sweep with a shared measurement set: solve the single-party
    /// problem as if the other parties were fixed, then move towards that
    /// solution with steps `1, 1/2, 1/4, ...`, keeping the first one that
    /// raises the value.
    fn symmetric_measurement_step(&self, q: &mut QuantumRealization) -> MeasurementUpdate {
        let ops = self.ops(q);
        let current = self.value_of(&ops, &q.state);
        let f = self.reduced(&ops, &q.state, 0);
        let mut stalled = 0;
        let target: Vec<Vec<Mat<f64>>> = f
            .iter()
            .enumerate()
            .map(|(x, fx)| {
                best_measurement(fx, self.d).unwrap_or_else(|| {
                    stalled += 1;
                    ops[0][x].clone()
                })
            })
            .collect();
        let mut t = 1.0;
        for _ in 0..12 {
            let shared: Vec<Vec<Mat<f64>>> = ops[0]
                .iter()
                .zip(&target)
                .map(|(old, new)| old.iter().zip(new).map(|(a, b)| a * (1.0 - t) + b * t).collect())
                .collect();
            let trial: Ops = vec![shared; self.r];
            let v = self.value_of(&trial, &q.state);
            if v > current {
                q.measurements = trial
                    .iter()
                    .map(|party| party.iter().map(|x| x.iter().map(from_mat).collect()).collect())
                    .collect();
                q.value = v;
                return MeasurementUpdate { value: v, stalled };
            }
            t *= 0.5;
        }
        q.value = current;
        MeasurementUpdate { value: current, stalled }
    }

    /// State update restricted to the symmetric or antisymmetric subspace,
    /// whichever reaches the larger value.
    fn symmetric_state_step(&self, q: &mut QuantumRealization, bases: &[Mat<f64>]) -> f64 {
        let ops = self.ops(q);
        let current = self.value_of(&ops, &q.state);
        let w = self.bell_operator(&ops);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for b in bases.iter().filter(|b| b.ncols() > 0) {
            let ws = b.transpose() * &w * b;
            let (top, u) = top_eigenvector(&ws);
            if best.as_ref().map_or(true, |(v, _)| top > *v) {
                let psi: Vec<f64> = (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| b[(i, j)] * u[j]).sum()).collect();
                best = Some((top, psi));
            }
        }
        q.value = current;
        if let Some((top, mut psi)) = best {
            if top > current {
                normalize(&mut psi);
                let after = self.value_of(&ops, &psi);
                if after > current {
                    q.state = psi;
                    q.value = after;
                }
            }
        }
        q.value
    }

    fn random_realization(&self, rng: &mut ChaCha8Rng, symmetric: bool) -> QuantumRealization {
        let d = self.d;
        let random_party = |rng: &mut ChaCha8Rng| -> Vec<Vec<Vec<f64>>> {
            self.outcomes
                .iter()
                .map(|&k| {
                    let g = Mat::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let o = g.qr().compute_q();
                    let mut ops = vec![Mat::<f64>::zeros(d, d); k];
                    for c in 0..d {
                        let a = rng.gen_range(0..k);
                        for i in 0..d {
                            for j in 0..d {
                                ops[a][(i, j)] += o[(i, c)] * o[(j, c)];
                            }
                        }
                    }
                    ops.iter().map(from_mat).collect()
                })
                .collect()
        };
        let measurements = if symmetric {
            vec![random_party(rng); self.r]
        } else {
            (0..self.r).map(|_| random_party(rng)).collect()
        };
        let mut state: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        if symmetric {
            let b = exchange_basis(self.r, d, false);
            let coords: Vec<f64> = (0..b.ncols()).map(|j| (0..b.nrows()).map(|i| b[(i, j)] * state[i]).sum()).collect();
            state = (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| b[(i, j)] * coords[j]).sum()).collect();
        }
        normalize(&mut state);
        let mut q = QuantumRealization { r: self.r, d, state, measurements, value: 0.0 };
        q.value = self.value_of(&self.ops(&q), &q.state);
        q
    }

    fn run(
        &self,
        cfg: &SeesawConfig,
        restart: usize,
        bases: &[Mat<f64>],
        start: Option<&QuantumRealization>,
    ) -> (QuantumRealization, RestartLog) {
        let mut q = match start {
            Some(q) => q.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(restart as u64);
                self.random_realization(&mut rng, cfg.symmetric)
            }
        };
        q.value = self.value_of(&self.ops(&q), &q.state);
        let mut values = vec![q.value];
        let mut stalls = 0;
        let mut converged = false;
        let mut sweeps = 0;
        for _ in 0..cfg.max_iters {
            sweeps += 1;
            let before = q.value;
            if cfg.symmetric {
                stalls += self.symmetric_measurement_step(&mut q).stalled;
                values.push(q.value);
                values.push(self.symmetric_state_step(&mut q, bases));
            } else {
                for p in 0..self.r {
                    let u = self.update_measurements(&mut q, p).expect("realization fits");
                    stalls += u.stalled;
                    values.push(u.value);
                }
                values.push(self.update_state(&mut q).expect("realization fits"));
            }
            if q.value - before < cfg.tol {
                converged = true;
                break;
            }
        }
        let log = RestartLog {
            restart,
            value: q.value,
            iterations: sweeps,
            stalls,
            converged,
            values,
        };
        (q, log)
    }
}

/// Best measurement for one input given its reduced operators: maximizes
/// `sum_k Tr(F_k M_k)` over POVMs. `None` when the SDP fails.
fn best_measurement(f: &[Mat<f64>], d: usize) -> Option<Vec<Mat<f64>>> {
    let k = f.len();
    if k == 1 {
        return Some(vec![identity(d)]);
    }
    if d == 1 {
        let best = (0..k).fold(0, |b, a| if f[a][(0, 0)] > f[b][(0, 0)] { a } else { b });
        return Some((0..k).map(|a| Mat::from_fn(1, 1, |_, _| if a == best { 1.0 } else { 0.0 })).collect());
    }
    if k == 2 {
        let (vals, u) = eigh(&symmetrized(&(&f[0] - &f[1])));
        let mut p = Mat::<f64>::zeros(d, d);
        for (c, &l) in vals.iter().enumerate() {
            if l > 0.0 {
                for i in 0..d {
                    for j in 0..d {
                        p[(i, j)] += u[(i, c)] * u[(j, c)];
                    }
                }
            }
        }
        let rest = identity(d) - &p;
        return Some(vec![p, rest]);
    }
    povm_sdp(f, d)
}

/// `max sum_k Tr(F_k M_k)` subject to `M_k psd`, `sum_k M_k = I`, posed as
/// the dual of an SDPA-form problem with one block per outcome.
fn povm_sdp(f: &[Mat<f64>], d: usize) -> Option<Vec<Mat<f64>>> {
    let k = f.len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let c = pairs.iter().map(|&(i, j)| if i == j { 1.0 } else { 0.0 }).collect();
    let mut p = SdpProblem::new(vec![BlockSpec::dense(d); k], c);
    for (a, fa) in f.iter().enumerate() {
        for &(i, j) in &pairs {
            p.add(0, a, i, j, fa[(i, j)]).ok()?;
        }
        for (t, &(i, j)) in pairs.iter().enumerate() {
            p.add(t + 1, a, i, j, if i == j { 1.0 } else { 0.5 }).ok()?;
        }
    }
    p.finalize();
    let sol = sdp::solve_embedded(&p, 1e-10).ok()?;
    if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::NearOptimal) {
        return None;
    }
    let y = sol.dual_matrix?;
    let clipped: Vec<Mat<f64>> = y
        .iter()
        .map(|b| {
            let (vals, u) = eigh(&Mat::from_fn(d, d, |i, j| b.get(i, j)));
            Mat::from_fn(d, d, |i, j| (0..d).map(|c| vals[c].max(0.0) * u[(i, c)] * u[(j, c)]).sum::<f64>())
        })
        .collect();
    let s = clipped.iter().fold(Mat::<f64>::zeros(d, d), |acc, m| acc + m);
    let (vals, u) = eigh(&symmetrized(&s));
    if vals[0] < 1e-12 {
        return None;
    }
    let root = Mat::from_fn(d, d, |i, j| (0..d).map(|c| u[(i, c)] * u[(j, c)] / vals[c].sqrt()).sum::<f64>());
    Some(clipped.iter().map(|m| symmetrized(&(&root * m * &root))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartLog {
    pub restart: usize,
    pub value: f64,
    /// Full sweeps (all measurements, then the state).
    pub iterations: usize,
    /// Inputs whose measurement SDP failed, summed over the run.
    pub stalls: usize,
    pub converged: bool,
    /// Value after every individual update, starting from the random point.
    pub values: Vec<f64>,
}

impl RestartLog {
    /// Whether the logged values never decrease by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawResult {
    pub value: f64,
    pub realization: QuantumRealization,
    pub best_restart: usize,
    pub logs: Vec<RestartLog>,
    /// Largest difference between two parties' single-party marginals.
    pub marginal_distance: f64,
}

/// Runs `cfg.restarts` independent see-saw restarts in parallel and keeps the
/// best (lowest restart index on ties).
pub fn optimize(game: &BellGame, cfg: &SeesawConfig) -> Result<SeesawResult> {
    optimize_with_starts(game, cfg, &[])
}

/// [`optimize`] with extra starting points run after the random restarts,
/// e.g. an embedded classical optimum so that the result never falls below it.
pub fn optimize_with_starts(game: &BellGame, cfg: &SeesawConfig, starts: &[QuantumRealization]) -> Result<SeesawResult> {
    cfg.validate()?;
    if cfg.symmetric && !game.is_party_symmetric() {
        return Err(Error::InvalidParameter(
            "symmetric see-saw needs a game invariant under exchanging the agents".into(),
        ));
    }
    let s = Seesaw::new(game, cfg.d)?;
    let bases = if cfg.symmetric {
        vec![exchange_basis(s.r, s.d, false), exchange_basis(s.r, s.d, true)]
    } else {
        Vec::new()
    };
    for q in starts {
        s.check(q)?;
        if cfg.symmetric && q.measurements.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidParameter("symmetric see-saw starts need shared measurements".into()));
        }
    }
    let runs: Vec<(QuantumRealization, RestartLog)> = (0..cfg.restarts + starts.len())
        .into_par_iter()
        .map(|i| s.run(cfg, i, &bases, i.checked_sub(cfg.restarts).map(|k| &starts[k])))
        .collect();
    let mut best = 0;
    for (i, (q, _)) in runs.iter().enumerate() {
        if q.value > runs[best].0.value {
            best = i;
        }
    }
    let (realization, logs): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let realization = realization.into_iter().nth(best).expect("at least one restart");
    let marginal_distance = marginal_distance(game, &realization)?;
    Ok(SeesawResult {
        value: realization.value,
        realization,
        best_restart: best,
        logs,
        marginal_distance,
    })
}

/// [`optimize`] with the shared-measurement, exchange-invariant restriction.
pub fn symmetric_optimize(game: &BellGame, cfg: &SeesawConfig) -> Result<SeesawResult> {
    optimize(game, &SeesawConfig { symmetric: true, ..cfg.clone() })
}

/// Exact expected score of the realization, with its behavior table.
pub fn born_value(game: &BellGame, q: &QuantumRealization) -> Result<(f64, Behavior)> {
    let s = Seesaw::new(game, q.d)?;
    s.check(q)?;
    let ops = s.ops(q);
    let mut probabilities = Vec::with_capacity(s.blocks.len());
    for b in &s.blocks {
        let mut row = vec![0.0; b.coefficients.len()];
        let mut cursor = 0;
        fill(&s, &ops, b, 0, q.state.clone(), &q.state, &mut row, &mut cursor);
        probabilities.push(row);
    }
    let behavior = Behavior { probabilities };
    let value = s
        .blocks
        .iter()
        .zip(&behavior.probabilities)
        .map(|(b, p)| b.coefficients.iter().zip(p).map(|(c, v)| c * v).sum::<f64>())
        .sum();
    Ok((value, behavior))
}

#[allow(clippy::too_many_arguments)]
fn fill(s: &Seesaw, ops: &Ops, b: &Block, level: usize, v: Vec<f64>, psi: &[f64], row: &mut [f64], cursor: &mut usize) {
    if level == s.r {
        row[*cursor] = psi.iter().zip(&v).map(|(a, b)| a * b).sum();
        *cursor += 1;
        return;
    }
    for k in 0..b.radices[level] {
        let w = apply_factor(&v, s.r, s.d, level, &ops[level][b.inputs[level]][k]);
        fill(s, ops, b, level + 1, w, psi, row, cursor);
    }
}

/// Largest gap between party 0's single-party marginals and any other
/// party's, over all inputs and outcomes.
pub fn marginal_distance(game: &BellGame, q: &QuantumRealization) -> Result<f64> {
    let s = Seesaw::new(game, q.d)?;
    s.check(q)?;
    let ops = s.ops(q);
    let marginal = |p: usize, x: usize, k: usize| -> f64 {
        let w = apply_factor(&q.state, s.r, s.d, p, &ops[p][x][k]);
        q.state.iter().zip(&w).map(|(a, b)| a * b).sum()
    };
    let mut worst: f64 = 0.0;
    for p in 1..s.r {
        for (x, &k) in s.outcomes.iter().enumerate() {
            for a in 0..k {
                worst = worst.max((marginal(p, x, a) - marginal(0, x, a)).abs());
            }
        }
    }
    Ok(worst)
}

impl QuantumRealization {
    /// Checks the unit norm, completeness and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.state.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("state norm is {norm}")));
        }
        let d = self.d;
        for (p, party) in self.measurements.iter().enumerate() {
            for (x, family) in party.iter().enumerate() {
                let mut sum = Mat::<f64>::zeros(d, d);
                for m in family {
                    let m = to_mat(d, m);
                    let asym = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).any(|(i, j)| (m[(i, j)] - m[(j, i)]).abs() > SUM_TOL);
                    if asym {
                        return Err(Error::InvalidParameter(format!("party {p} input {x}: operator is not symmetric")));
                    }
                    let lmin = eigh(&m).0[0];
                    if lmin < -PSD_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "party {p} input {x}: operator has eigenvalue {lmin}"
                        )));
                    }
                    sum += m;
                }
                let dev = (0..d)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .map(|(i, j)| (sum[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max);
                if dev > SUM_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "party {p} input {x}: operators miss the identity by {dev}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Local strategies as operators proportional to the identity; the state
    /// is `|0...0>`. Deterministic strategies become projectors `0` and `I`.
    pub fn from_classical(game: &BellGame, strategies: &[StochasticStrategy], d: usize) -> Result<QuantumRealization> {
        if strategies.len() != game.parties() {
            return Err(Error::InvalidStrategy(format!(
                "expected {} strategies, got {}",
                game.parties(),
                strategies.len()
            )));
        }
        let id = identity(d);
        let measurements = strategies
            .iter()
            .map(|s| {
                (0..game.inputs())
                    .map(|x| s.row(x).iter().map(|p| from_mat(&(&id * rational::to_f64(p)))).collect())
                    .collect()
            })
            .collect();
        let mut state = vec![0.0; d.pow(game.parties() as u32)];
        state[0] = 1.0;
        let mut q = QuantumRealization { r: game.parties(), d, state, measurements, value: 0.0 };
        q.value = born_value(game, &q)?.0;
        Ok(q)
    }

    pub fn to_dump(&self, game: &BellGame) -> Result<RealizationDump> {
        let (value, behavior) = born_value(game, self)?;
        let mut measurements = Vec::new();
        for (p, party) in self.measurements.iter().enumerate() {
            for (x, family) in party.iter().enumerate() {
                for (k, m) in family.iter().enumerate() {
                    measurements.push(OperatorDump {
                        party: p,
                        input: x,
                        outcome: game.outcomes(x)[k],
                        re: m.clone(),
                        im: vec![0.0; m.len()],
                    });
                }
            }
        }
        let behavior = game
            .blocks()
            .iter()
            .zip(behavior.probabilities)
            .map(|(b, p)| BehaviorRow { inputs: b.inputs.clone(), probabilities: p })
            .collect();
        Ok(RealizationDump {
            schema: 1,
            r: self.r,
            d: self.d,
            state_re: self.state.clone(),
            state_im: vec![0.0; self.state.len()],
            measurements,
            value,
            behavior,
        })
    }
}

/// Top eigenvector of a density matrix (row-major, `dim x dim`), used when a
/// mixed state is supplied. The second value is a warning when the input was
/// not pure.
pub fn purify(rho: &[f64], dim: usize) -> Result<(Vec<f64>, Option<String>)> {
    if rho.len() != dim * dim {
        return Err(Error::InvalidParameter(format!("density matrix must have {} entries", dim * dim)));
    }
    let (vals, _) = eigh(&to_mat(dim, rho));
    let (top, v) = top_eigenvector(&to_mat(dim, rho));
    let rest: f64 = vals.iter().sum::<f64>() - top;
    let warning = (rest.abs() > 1e-9).then(|| format!("mixed state replaced by its top eigenvector (discarded weight {rest:.3e})"));
    Ok((v, warning))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub party: usize,
    pub input: usize,
    /// Final vertex this operator stands for.
    pub outcome: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRow {
    pub inputs: Vec<usize>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationDump {
    pub schema: u32,
    pub r: usize,
    pub d: usize,
    pub state_re: Vec<f64>,
    pub state_im: Vec<f64>,
    pub measurements: Vec<OperatorDump>,
    pub value: f64,
    pub behavior: Vec<BehaviorRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Advantage,
    NoAdvantage,
    Inconclusive,
    ExportOnly,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Advantage => "advantage",
            Status::NoAdvantage => "no-advantage",
            Status::Inconclusive => "inconclusive",
            Status::ExportOnly => "export-only",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Status> {
        match s {
            "advantage" => Ok(Status::Advantage),
            "no-advantage" => Ok(Status::NoAdvantage),
            "inconclusive" => Ok(Status::Inconclusive),
            "export-only" => Ok(Status::ExportOnly),
            _ => Err(Error::InvalidParameter(format!("unknown status `{s}`"))),
        }
    }
}

/// A see-saw value above the classical one settles the question; otherwise
/// the upper bound decides between no advantage and an open case.
pub fn classify(classical: f64, seesaw: Option<f64>, npa: Option<f64>) -> Status {
    if seesaw.is_some_and(|q| q > classical + STATUS_MARGIN) {
        return Status::Advantage;
    }
    match npa {
        Some(b) if b <= classical + STATUS_MARGIN => Status::NoAdvantage,
        Some(_) => Status::Inconclusive,
        None if seesaw.is_none() => Status::ExportOnly,
        None => Status::Inconclusive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{best_response_improve, classical_optimum, random_value, StochasticStrategy};
    use crate::graphs::{make_cycle, make_path};
    use crate::tasks::{build_game, StartRule, TaskSpec};

    fn cfg(d: usize, restarts: usize) -> SeesawConfig {
        SeesawConfig { d, restarts, tol: 1e-9, max_iters: 500, seed: 7, symmetric: false }
    }

    #[test]
    fn uniform_measurements_give_random_value() {
        let game = build_game(&make_cycle(5).unwrap(), &TaskSpec::domination(StartRule::Any)).unwrap();
        let u = StochasticStrategy::uniform(&game);
        let q = QuantumRealization::from_classical(&game, &[u.clone(), u], 3).unwrap();
        q.validate().unwrap();
        assert!((q.value - rational::to_f64(&random_value(&game))).abs() < 1e-12);
    }

    #[test]
    fn classical_optimum_embeds_exactly() {
        let game = build_game(&make_cycle(5).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let opt = classical_optimum(&game, false).unwrap();
        let strategies: Vec<_> = opt.strategies.iter().map(|s| StochasticStrategy::from_deterministic(&game, s)).collect();
        let q = QuantumRealization::from_classical(&game, &strategies, 2).unwrap();
        assert!((q.value - rational::to_f64(&opt.value)).abs() < 1e-12);
    }

    #[test]
    fn triangle_reaches_seven_twelfths() {
        let game = build_game(&make_cycle(3).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let res = optimize(&game, &cfg(3, 20)).unwrap();
        assert!(res.value >= 7.0 / 12.0 - 1e-4, "{}", res.value);
        res.realization.validate().unwrap();
        let (v, _) = born_value(&game, &res.realization).unwrap();
        assert!((v - res.value).abs() < 1e-9);
        assert!(res.logs.iter().all(|l| l.is_monotone(1e-10)));
    }

    #[test]
    fn state_update_is_a_fixed_point() {
        let game = build_game(&make_cycle(3).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let res = optimize(&game, &cfg(3, 4)).unwrap();
        let s = Seesaw::new(&game, 3).unwrap();
        let mut q = res.realization.clone();
        let v = s.update_state(&mut q).unwrap();
        assert!((v - res.value).abs() < 1e-12);
    }

    #[test]
    fn scalar_measurements_match_best_response() {
        let game = build_game(&make_cycle(5).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let u = StochasticStrategy::uniform(&game);
        let mut q = QuantumRealization::from_classical(&game, &[u.clone(), u.clone()], 1).unwrap();
        let s = Seesaw::new(&game, 1).unwrap();
        s.update_measurements(&mut q, 0).unwrap();
        let br = best_response_improve(&game, &[u.clone(), u]).unwrap();
        let first = rational::to_f64(&br.values[1]);
        assert!((q.value - first).abs() < 1e-12, "{} vs {}", q.value, first);
    }

    #[test]
    fn three_outcome_sdp_update_is_monotone() {
        // Curly lines have loops at the ends, so some inputs have three outcomes.
        let game = build_game(&make_path(4, true).unwrap(), &TaskSpec::domination(StartRule::Any)).unwrap();
        let res = optimize(&game, &cfg(3, 3)).unwrap();
        res.realization.validate().unwrap();
        assert!(res.logs.iter().all(|l| l.is_monotone(1e-10)));
        let c = rational::to_f64(&classical_optimum(&game, false).unwrap().value);
        assert!(res.value >= c - 1e-6);
    }

    #[test]
    fn symmetric_triangle_distinct() {
        let spec = TaskSpec::rendezvous(StartRule::Distinct).symmetric(true);
        let game = build_game(&make_cycle(3).unwrap(), &spec).unwrap();
        let res = symmetric_optimize(&game, &cfg(3, 10)).unwrap();
        assert!(res.value >= 0.5 - 1e-4, "{}", res.value);
        assert!(res.marginal_distance < 1e-9);
        assert!(res.logs.iter().all(|l| l.is_monotone(1e-10)));
    }

    #[test]
    fn status_rules() {
        assert_eq!(classify(0.5, Some(0.6), Some(0.6)), Status::Advantage);
        assert_eq!(classify(0.5, Some(0.5), Some(0.5 + 1e-7)), Status::NoAdvantage);
        assert_eq!(classify(0.5, Some(0.5), Some(0.6)), Status::Inconclusive);
        assert_eq!(classify(0.5, None, None), Status::ExportOnly);
    }

    #[test]
    fn exchange_bases_are_orthonormal() {
        for anti in [false, true] {
            let b = exchange_basis(3, 3, anti);
            let g = b.transpose() * &b;
            assert_eq!(b.ncols(), if anti { 1 } else { 10 });
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    assert!((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }
}
