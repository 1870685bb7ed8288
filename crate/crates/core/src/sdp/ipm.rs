//! Infeasible primal-dual interior-point method with the HKM direction and
//! Mehrotra predictor-corrector steps. Dense blocks, dense Schur complement.

use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::prelude::*;
use faer::{Mat, Parallelism, Side};

use super::{relative_gap, DenseBlock, SdpProblem, SdpSolution, SolveStatus};
use crate::error::{Error, Result};

/// Largest total block dimension accepted by the embedded solver.
pub const MAX_DIMENSION: usize = 1500;
/// Largest constraint count; the Schur complement is dense `m x m`.
pub const MAX_CONSTRAINTS: usize = 6000;

const NEAR_OPTIMAL: f64 = 1e-5;
const DIVERGENCE: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
    pub max_dimension: usize,
    pub max_constraints: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            tol: 1e-8,
            max_iterations: 200,
            step_fraction: 0.98,
            max_dimension: MAX_DIMENSION,
            max_constraints: MAX_CONSTRAINTS,
        }
    }
}

type Blocks = Vec<Mat<f64>>;

/// Full (both triangles) entry of a constraint matrix.
#[derive(Clone, Copy)]
struct Full {
    block: usize,
    p: usize,
    q: usize,
    v: f64,
}

struct Data {
    sizes: Vec<usize>,
    c: Vec<f64>,
    f0: Blocks,
    cons: Vec<Vec<Full>>,
    dense: Vec<Option<Blocks>>,
}

fn mul(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), a.as_ref(), b.as_ref(), None, 1.0, Parallelism::None);
    out
}

fn zeros(sizes: &[usize]) -> Blocks {
    sizes.iter().map(|&n| Mat::zeros(n, n)).collect()
}

fn scaled_identity(sizes: &[usize], s: f64) -> Blocks {
    sizes.iter().map(|&n| Mat::from_fn(n, n, |i, j| if i == j { s } else { 0.0 })).collect()
}

fn symmetrize(a: &mut Mat<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn frobenius(b: &Blocks) -> f64 {
    b.iter().map(|m| m.squared_norm_l2()).sum::<f64>().sqrt()
}

/// `Tr(A B)` for symmetric `A`, `B`.
fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let n = x.nrows();
            let mut s = 0.0;
            for j in 0..n {
                for i in 0..n {
                    s += x[(i, j)] * y[(i, j)];
                }
            }
            s
        })
        .sum()
}

fn trace_con(con: &[Full], m: &Blocks) -> f64 {
    con.iter().map(|e| e.v * m[e.block][(e.q, e.p)]).sum()
}

fn add_con(target: &mut Blocks, con: &[Full], scale: f64) {
    for e in con {
        target[e.block][(e.p, e.q)] += scale * e.v;
    }
}

impl Data {
    fn new(p: &SdpProblem) -> Data {
        let sizes: Vec<usize> = p.blocks().iter().map(|b| b.size).collect();
        let n: usize = sizes.iter().sum();
        let expand = |k: usize| -> Vec<Full> {
            let mut out = Vec::new();
            for e in p.matrix(k).entries() {
                out.push(Full { block: e.block, p: e.i, q: e.j, v: e.value });
                if e.i != e.j {
                    out.push(Full { block: e.block, p: e.j, q: e.i, v: e.value });
                }
            }
            out
        };
        let mut f0 = zeros(&sizes);
        add_con(&mut f0, &expand(0), 1.0);
        let cons: Vec<Vec<Full>> = (1..=p.m()).map(expand).collect();
        let dense = cons
            .iter()
            .map(|con| {
                (con.len() > 2 * n).then(|| {
                    let mut d = zeros(&sizes);
                    add_con(&mut d, con, 1.0);
                    d
                })
            })
            .collect();
        Data { sizes, c: p.c().to_vec(), f0, cons, dense }
    }

    fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `sum_i F_i x_i - F_0`.
    fn slack(&self, x: &[f64]) -> Blocks {
        let mut out: Blocks = self.f0.iter().map(|m| -m).collect();
        for (con, &xi) in self.cons.iter().zip(x) {
            add_con(&mut out, con, xi);
        }
        out
    }

    /// Schur complement `B_ij = Tr(F_i X^-1 F_j Y)`.
    fn schur(&self, xinv: &Blocks, y: &Blocks) -> Mat<f64> {
        let m = self.cons.len();
        let mut b = Mat::<f64>::zeros(m, m);
        let flat = |blocks: &Blocks| -> Vec<Vec<f64>> {
            blocks
                .iter()
                .map(|a| {
                    let n = a.nrows();
                    let mut v = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..n {
                            v[i * n + j] = a[(i, j)];
                        }
                    }
                    v
                })
                .collect()
        };
        let xf = flat(xinv);
        let yf = flat(y);
        for j in 0..m {
            if let Some(fj) = &self.dense[j] {
                let g: Blocks = (0..self.sizes.len()).map(|k| mul(&mul(&xinv[k], &fj[k]), &y[k])).collect();
                for i in j..m {
                    let v = trace_con(&self.cons[i], &g);
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
                continue;
            }
            let cj = &self.cons[j];
            for i in j..m {
                let ci = &self.cons[i];
                let mut s = 0.0;
                if let Some(fi) = &self.dense[i] {
                    // Tr(F_j X^-1 F_i Y) with F_i dense: symmetric in i and j.
                    let g: Blocks = (0..self.sizes.len()).map(|k| mul(&mul(&xinv[k], &fi[k]), &y[k])).collect();
                    s = trace_con(cj, &g);
                } else {
                    for a in ci {
                        let n = self.sizes[a.block];
                        let xb = &xf[a.block];
                        let yb = &yf[a.block];
                        for e in cj {
                            if e.block == a.block {
                                s += a.v * e.v * xb[a.q * n + e.p] * yb[e.q * n + a.p];
                            }
                        }
                    }
                }
                b[(i, j)] = s;
                b[(j, i)] = s;
            }
        }
        b
    }
}

struct Factor {
    l: Mat<f64>,
    inv: Mat<f64>,
}

fn factor(a: &Mat<f64>) -> Option<Factor> {
    let ch = a.cholesky(Side::Lower).ok()?;
    let mut inv = ch.inverse();
    symmetrize(&mut inv);
    Some(Factor { l: ch.compute_l(), inv })
}

/// Largest step in `(0, 1]` keeping `A + t dA` positive definite, shortened
/// by `fraction`.
fn max_step(l: &Mat<f64>, da: &Mat<f64>, fraction: f64) -> f64 {
    let n = l.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut w = da.clone();
    solve_lower_triangular_in_place(l.as_ref(), w.as_mut(), Parallelism::None);
    let mut w2 = w.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), w2.as_mut(), Parallelism::None);
    symmetrize(&mut w2);
    let lmin = w2.selfadjoint_eigenvalues(Side::Lower).into_iter().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        1.0
    } else {
        f64::min(1.0, fraction * (-1.0 / lmin))
    }
}

fn min_eigenvalue(blocks: &Blocks) -> f64 {
    blocks
        .iter()
        .filter(|m| m.nrows() > 0)
        .map(|m| {
            let mut s = m.clone();
            symmetrize(&mut s);
            s.selfadjoint_eigenvalues(Side::Lower).into_iter().fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

fn solve_schur(b: &Mat<f64>) -> Option<faer::linalg::solvers::Cholesky<f64>> {
    if let Ok(ch) = b.cholesky(Side::Lower) {
        return Some(ch);
    }
    let scale = (0..b.nrows()).map(|i| b[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for delta in [1e-14, 1e-12, 1e-10, 1e-8] {
        let mut r = b.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += delta * scale;
        }
        if let Ok(ch) = r.cholesky(Side::Lower) {
            return Some(ch);
        }
    }
    None
}

/// Solves `p` to relative duality gap `tol`.
///
/// ```
/// use belltasks::sdp::{solve_embedded, BlockSpec, SdpProblem, SolveStatus};
/// // maximize x subject to 1 - x >= 0, posed as minimize -x
/// let mut p = SdpProblem::new(vec![BlockSpec::dense(1)], vec![-1.0]);
/// p.add(0, 0, 0, 0, -1.0).unwrap();
/// p.add(1, 0, 0, 0, -1.0).unwrap();
/// let s = solve_embedded(&p, 1e-8).unwrap();
/// assert_eq!(s.status, SolveStatus::Optimal);
/// assert!((s.x[0] - 1.0).abs() < 1e-6);
/// ```
pub fn solve_embedded(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    solve_embedded_with(p, &IpmOptions { tol, ..IpmOptions::default() })
}

pub fn solve_embedded_with(p: &SdpProblem, opts: &IpmOptions) -> Result<SdpSolution> {
    p.validate()?;
    let dim = p.total_dimension();
    if dim > opts.max_dimension {
        return Err(Error::TooLarge(format!(
            "total block dimension {dim} exceeds the embedded solver limit {}; export the problem in SDPA format instead",
            opts.max_dimension
        )));
    }
    if p.m() > opts.max_constraints {
        return Err(Error::TooLarge(format!(
            "{} constraints exceed the embedded solver limit {}; export the problem in SDPA format instead",
            p.m(),
            opts.max_constraints
        )));
    }
    let data = Data::new(p);
    Ok(Ipm::new(&data, opts).run())
}

struct Ipm<'a> {
    d: &'a Data,
    opts: &'a IpmOptions,
    x: Vec<f64>,
    xs: Blocks,
    y: Blocks,
}

struct Direction {
    dx: Vec<f64>,
    dxs: Blocks,
    dy: Blocks,
}

impl<'a> Ipm<'a> {
    fn new(d: &'a Data, opts: &'a IpmOptions) -> Ipm<'a> {
        let n = d.dim().max(1) as f64;
        let norms: Vec<f64> = d
            .cons
            .iter()
            .map(|con| con.iter().map(|e| e.v * e.v).sum::<f64>().sqrt())
            .collect();
        let mut xi = f64::max(10.0, n.sqrt());
        for (ci, ni) in d.c.iter().zip(&norms) {
            xi = xi.max(n * (1.0 + ci.abs()) / (1.0 + ni));
        }
        let eta = [10.0, n.sqrt(), frobenius(&d.f0)]
            .into_iter()
            .chain(norms.iter().copied())
            .fold(0.0, f64::max);
        Ipm {
            d,
            opts,
            x: vec![0.0; d.c.len()],
            xs: scaled_identity(&d.sizes, eta),
            y: scaled_identity(&d.sizes, xi),
        }
    }

    fn primal_objective(&self) -> f64 {
        self.d.c.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn dual_objective(&self) -> f64 {
        inner(&self.d.f0, &self.y)
    }

    fn primal_residual(&self) -> Blocks {
        let mut r = self.d.slack(&self.x);
        for (a, b) in r.iter_mut().zip(&self.xs) {
            *a -= b;
        }
        r
    }

    fn dual_residual(&self) -> Vec<f64> {
        self.d.cons.iter().zip(&self.d.c).map(|(con, c)| c - trace_con(con, &self.y)).collect()
    }

    fn mu(&self) -> f64 {
        inner(&self.xs, &self.y) / self.d.dim().max(1) as f64
    }

    fn direction(
        &self,
        chol: &faer::linalg::solvers::Cholesky<f64>,
        xinv: &Blocks,
        rp: &Blocks,
        target: f64,
        corr: Option<&Blocks>,
    ) -> Direction {
        let d = self.d;
        // base = target X^-1 - K; the right-hand side uses base - X^-1 Rp Y
        let mut base: Blocks = (0..d.sizes.len())
            .map(|k| {
                let mut m = &xinv[k] * target;
                if let Some(c) = corr {
                    m -= &c[k];
                }
                m
            })
            .collect();
        let mmat: Blocks = (0..d.sizes.len())
            .map(|k| &base[k] - mul(&mul(&xinv[k], &rp[k]), &self.y[k]))
            .collect();
        let mut rhs = Mat::<f64>::from_fn(d.cons.len(), 1, |i, _| trace_con(&d.cons[i], &mmat) - d.c[i]);
        chol.solve_in_place(rhs.as_mut());
        let dx: Vec<f64> = (0..d.cons.len()).map(|i| rhs[(i, 0)]).collect();
        let mut dxs = rp.clone();
        for (con, &v) in d.cons.iter().zip(&dx) {
            add_con(&mut dxs, con, v);
        }
        for k in 0..d.sizes.len() {
            base[k] -= &self.y[k];
            base[k] -= mul(&mul(&xinv[k], &dxs[k]), &self.y[k]);
            symmetrize(&mut base[k]);
        }
        Direction { dx, dxs, dy: base }
    }

    fn steps(&self, lx: &[Mat<f64>], ly: &[Mat<f64>], dir: &Direction, fraction: f64) -> (f64, f64) {
        let ap = (0..self.d.sizes.len()).map(|k| max_step(&lx[k], &dir.dxs[k], fraction)).fold(1.0, f64::min);
        let ad = (0..self.d.sizes.len()).map(|k| max_step(&ly[k], &dir.dy[k], fraction)).fold(1.0, f64::min);
        (ap, ad)
    }

    fn run(mut self) -> SdpSolution {
        let d = self.d;
        let tol = self.opts.tol;
        let norm_f0 = frobenius(&d.f0);
        let norm_c = d.c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut status = None;
        let mut message = String::new();
        let mut iterations = 0;
        let mut stalls = 0;
        while iterations < self.opts.max_iterations {
            let pobj = self.primal_objective();
            let dobj = self.dual_objective();
            let rp = self.primal_residual();
            let rd = self.dual_residual();
            let pinf = frobenius(&rp) / (1.0 + norm_f0);
            let dinf = rd.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_c);
            let gap = relative_gap(pobj, dobj);
            let scale = 1.0 + norm_c.max(norm_f0);
            if gap <= tol && pinf <= tol && dinf <= tol {
                status = Some(SolveStatus::Optimal);
                break;
            }
            if dinf <= 1e-6 && dobj > DIVERGENCE * scale {
                status = Some(SolveStatus::Infeasible);
                message = "dual objective diverges: primal infeasible".into();
                break;
            }
            if pinf <= 1e-6 && pobj < -DIVERGENCE * scale {
                status = Some(SolveStatus::Unbounded);
                message = "primal objective diverges".into();
                break;
            }
            let (Some(fx), Some(fy)) = (
                self.xs.iter().map(factor).collect::<Option<Vec<_>>>(),
                self.y.iter().map(factor).collect::<Option<Vec<_>>>(),
            ) else {
                message = "iterate lost positive definiteness".into();
                break;
            };
            let xinv: Blocks = fx.iter().map(|f| f.inv.clone()).collect();
            let lx: Vec<Mat<f64>> = fx.into_iter().map(|f| f.l).collect();
            let ly: Vec<Mat<f64>> = fy.into_iter().map(|f| f.l).collect();
            let b = d.schur(&xinv, &self.y);
            let Some(chol) = solve_schur(&b) else {
                message = "Schur complement is not positive definite".into();
                break;
            };
            let mu = self.mu();
            let pred = self.direction(&chol, &xinv, &rp, 0.0, None);
            let (ap, ad) = self.steps(&lx, &ly, &pred, 1.0);
            let trial_x: Blocks = (0..d.sizes.len()).map(|k| &self.xs[k] + &pred.dxs[k] * ap).collect();
            let trial_y: Blocks = (0..d.sizes.len()).map(|k| &self.y[k] + &pred.dy[k] * ad).collect();
            let mu_aff = inner(&trial_x, &trial_y) / d.dim().max(1) as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let corr: Blocks = (0..d.sizes.len()).map(|k| mul(&mul(&xinv[k], &pred.dxs[k]), &pred.dy[k])).collect();
            let dir = self.direction(&chol, &xinv, &rp, sigma * mu, Some(&corr));
            let (ap, ad) = self.steps(&lx, &ly, &dir, self.opts.step_fraction);
            for (x, dx) in self.x.iter_mut().zip(&dir.dx) {
                *x += ap * dx;
            }
            for k in 0..d.sizes.len() {
                self.xs[k] += &dir.dxs[k] * ap;
                self.y[k] += &dir.dy[k] * ad;
                symmetrize(&mut self.xs[k]);
                symmetrize(&mut self.y[k]);
            }
            iterations += 1;
            if ap < 1e-10 && ad < 1e-10 {
                stalls += 1;
                if stalls >= 3 {
                    message = "step lengths collapsed".into();
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        let pobj = self.primal_objective();
        let dobj = self.dual_objective();
        let gap = relative_gap(pobj, dobj);
        let pinf = frobenius(&self.primal_residual()) / (1.0 + norm_f0);
        let dinf = self.dual_residual().iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_c);
        let status = status.unwrap_or_else(|| {
            if message.is_empty() {
                message = "iteration limit reached".into();
            }
            if gap <= NEAR_OPTIMAL && pinf <= NEAR_OPTIMAL && dinf <= NEAR_OPTIMAL {
                SolveStatus::NearOptimal
            } else {
                SolveStatus::Failed
            }
        });
        let primal_min = min_eigenvalue(&d.slack(&self.x));
        SdpSolution {
            status,
            primal_objective: pobj,
            dual_objective: dobj,
            gap,
            iterations,
            solver: "embedded".into(),
            dual_matrix: Some(
                self.y
                    .iter()
                    .map(|m| {
                        let n = m.nrows();
                        DenseBlock { size: n, data: (0..n * n).map(|k| m[(k / n, k % n)]).collect() }
                    })
                    .collect(),
            ),
            primal_min_eigenvalue: Some(primal_min),
            message,
            x: self.x,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::BlockSpec;

    #[test]
    fn lp_as_diagonal_block() {
        // minimize x1 + x2 subject to x1 >= 1, x2 >= 2
        let mut p = SdpProblem::new(vec![BlockSpec::diagonal(2)], vec![1.0, 1.0]);
        p.add(0, 0, 0, 0, 1.0).unwrap();
        p.add(0, 0, 1, 1, 2.0).unwrap();
        p.add(1, 0, 0, 0, 1.0).unwrap();
        p.add(2, 0, 1, 1, 1.0).unwrap();
        let s = solve_embedded(&p, 1e-9).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal_objective - 3.0).abs() < 1e-7);
    }

    #[test]
    fn max_eigenvalue() {
        // minimize t subject to t I - A >= 0; optimum is lambda_max(A)
        let a = [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let mut p = SdpProblem::new(vec![BlockSpec::dense(3)], vec![1.0]);
        for i in 0..3 {
            p.add(1, 0, i, i, 1.0).unwrap();
            for j in i..3 {
                if a[i][j] != 0.0 {
                    p.add(0, 0, i, j, a[i][j]).unwrap();
                }
            }
        }
        let s = solve_embedded(&p, 1e-9).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal_objective - (2.0 + 2f64.sqrt())).abs() < 1e-7);
        assert!((s.dual_objective - (2.0 + 2f64.sqrt())).abs() < 1e-7);
    }

    #[test]
    fn infeasible_primal() {
        // x >= 1 and -x >= 0 cannot both hold
        let mut p = SdpProblem::new(vec![BlockSpec::diagonal(2)], vec![1.0]);
        p.add(0, 0, 0, 0, 1.0).unwrap();
        p.add(1, 0, 0, 0, 1.0).unwrap();
        p.add(1, 0, 1, 1, -1.0).unwrap();
        let s = solve_embedded(&p, 1e-8).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_primal() {
        // minimize x subject to -x >= 0
        let mut p = SdpProblem::new(vec![BlockSpec::dense(1)], vec![1.0]);
        p.add(1, 0, 0, 0, -1.0).unwrap();
        let s = solve_embedded(&p, 1e-8).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn guard() {
        let p = SdpProblem::new(vec![BlockSpec::dense(MAX_DIMENSION + 1)], vec![]);
        assert!(matches!(solve_embedded(&p, 1e-8), Err(Error::TooLarge(_))));
    }
}
