use belltasks::classical::{
    best_response_improve, classical_optimum, derandomize, evaluate, random_value, rendezvous_closed_form,
    symmetric_value, symmetrize, StochasticStrategy,
};
use belltasks::graphs::{make_cycle, Graph};
use belltasks::npa::{self, adjoint, canonicalize, moment_class, moment_matrix, Letter, Level};
use belltasks::rational::{self, Rational};
use belltasks::sdp::{export_sdpa, parse_sdpa, solve_embedded, BlockSpec, SdpProblem, SolveStatus};
use belltasks::seesaw::{born_value, optimize, QuantumRealization, SeesawConfig};
use belltasks::tasks::{build_game, game_value, BellGame, Behavior, StartRule, TaskKind, TaskSpec};
use proptest::prelude::*;

/// A connected graph: a spanning path plus arbitrary extra edges and loops.
fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..2 * n).prop_map(move |extra| {
            let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
            for (u, v) in extra {
                let e = (u.min(v), u.max(v));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
            Graph::new("random", n, edges).unwrap()
        })
    })
}

fn spec_strategy() -> impl Strategy<Value = TaskSpec> {
    (prop::bool::ANY, prop::bool::ANY).prop_map(|(dom, distinct)| {
        let start = if distinct { StartRule::Distinct } else { StartRule::Any };
        if dom {
            TaskSpec::domination(start)
        } else {
            TaskSpec::rendezvous(start)
        }
    })
}

fn local_behavior(game: &BellGame, weights: &[u8]) -> Vec<Vec<f64>> {
    let mut it = weights.iter().cycle();
    (0..game.inputs())
        .map(|x| {
            let w: Vec<f64> = (0..game.outcomes(x).len()).map(|_| *it.next().unwrap() as f64 + 0.5).collect();
            let total: f64 = w.iter().sum();
            w.iter().map(|v| v / total).collect()
        })
        .collect()
}

fn stochastic(game: &BellGame, weights: &[u8]) -> StochasticStrategy {
    let mut it = weights.iter().cycle();
    let probs = (0..game.inputs())
        .map(|x| {
            let w: Vec<i64> = (0..game.outcomes(x).len()).map(|_| *it.next().unwrap() as i64 % 5).collect();
            let total: i64 = w.iter().sum();
            if total == 0 {
                (0..w.len()).map(|j| rational::integer((j == 0) as i64)).collect()
            } else {
                w.iter().map(|&v| rational::ratio(v, total)).collect()
            }
        })
        .collect();
    StochasticStrategy::new(game, probs).unwrap()
}

/// Coefficient of start tuple `xs` and end-vertex tuple `ends`.
fn coefficient(game: &BellGame, xs: &[usize], ends: &[usize]) -> Option<Rational> {
    let block = game.blocks().iter().find(|b| b.inputs == xs)?;
    let mut idx = 0;
    for (p, &v) in ends.iter().enumerate() {
        let outs = game.outcomes(xs[p]);
        idx = idx * outs.len() + outs.iter().position(|&o| o == v)?;
    }
    Some(block.coefficients[idx].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moves_are_nonempty_and_in_range(g in graph_strategy(8)) {
        for x in 0..g.n() {
            let m = g.allowed_moves(x);
            prop_assert!(!m.is_empty());
            prop_assert!(m.iter().all(|&v| v < g.n()));
        }
    }

    #[test]
    fn walk_power_one_is_identity(g in graph_strategy(8)) {
        let w = g.walk_power(1).unwrap();
        prop_assert_eq!(w.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn closed_neighborhood_size(g in graph_strategy(8)) {
        for v in 0..g.n() {
            let non_loop = g.allowed_moves(v).iter().filter(|&&u| u != v).count();
            prop_assert_eq!(g.closed_neighborhood(v).len(), 1 + non_loop);
        }
    }

    #[test]
    fn text_format_round_trips(g in graph_strategy(8)) {
        let back = Graph::parse("random", &g.to_text()).unwrap();
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn product_behavior_value_in_range(
        g in graph_strategy(5),
        spec in spec_strategy(),
        w in proptest::collection::vec(any::<u8>(), 1..20),
    ) {
        let game = build_game(&g, &spec).unwrap();
        let local = local_behavior(&game, &w);
        let b = Behavior::product(&game, &[local.clone(), local]);
        let v = game_value(&game, &b).unwrap();
        let (lo, hi) = game.value_range();
        prop_assert!(v >= rational::to_f64(lo) - 1e-12 && v <= rational::to_f64(hi) + 1e-12);
    }

    #[test]
    fn uniform_rendezvous_matches_enumeration(g in graph_strategy(6)) {
        let game = build_game(&g, &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let n = g.n();
        // p(a): chance a single uniform mover from a uniform start ends at a
        let mut p = vec![0.0; n];
        for x in 0..n {
            let m = g.allowed_moves(x);
            for &a in m {
                p[a] += 1.0 / (n as f64 * m.len() as f64);
            }
        }
        let expected: f64 = p.iter().map(|q| q * q).sum();
        let v = game_value(&game, &Behavior::uniform(&game)).unwrap();
        prop_assert!((v - expected).abs() < 1e-12);
        prop_assert!((rational::to_f64(&random_value(&game)) - expected).abs() < 1e-12);
    }

    #[test]
    fn cycle_rotation_preserves_coefficients(n in 3usize..8, shift in 1usize..8, dom in prop::bool::ANY) {
        let g = make_cycle(n).unwrap();
        let spec = if dom { TaskSpec::domination(StartRule::Any) } else { TaskSpec::rendezvous(StartRule::Any) };
        let game = build_game(&g, &spec).unwrap();
        let perm: Vec<usize> = (0..n).map(|v| (v + shift) % n).collect();
        prop_assert!(g.is_automorphism(&perm));
        for b in game.blocks() {
            for &a0 in game.outcomes(b.inputs[0]) {
                for &a1 in game.outcomes(b.inputs[1]) {
                    let here = coefficient(&game, &b.inputs, &[a0, a1]).unwrap();
                    let there = coefficient(
                        &game,
                        &[perm[b.inputs[0]], perm[b.inputs[1]]],
                        &[perm[a0], perm[a1]],
                    ).unwrap();
                    prop_assert_eq!(here, there);
                }
            }
        }
    }

    #[test]
    fn random_at_most_classical(g in graph_strategy(5), spec in spec_strategy()) {
        let game = build_game(&g, &spec).unwrap();
        let c = classical_optimum(&game, false).unwrap().value;
        prop_assert!(random_value(&game) <= c);
    }

    #[test]
    fn symmetric_search_is_a_restriction(g in graph_strategy(5), spec in spec_strategy()) {
        let game = build_game(&g, &spec).unwrap();
        let sym = classical_optimum(&game, true).unwrap().value;
        let all = classical_optimum(&game, false).unwrap().value;
        prop_assert!(sym <= all);
        if spec.kind == TaskKind::Rendezvous && spec.start == StartRule::Any {
            prop_assert_eq!(sym, all);
        }
    }

    #[test]
    fn closed_form_agrees_with_evaluate(
        g in graph_strategy(6),
        w0 in proptest::collection::vec(any::<u8>(), 1..20),
        w1 in proptest::collection::vec(any::<u8>(), 1..20),
    ) {
        let game = build_game(&g, &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let pair = [stochastic(&game, &w0), stochastic(&game, &w1)];
        prop_assert_eq!(evaluate(&game, &pair).unwrap(), rendezvous_closed_form(&game, &pair).unwrap());
    }

    #[test]
    fn symmetrize_and_derandomize_never_lose(
        g in graph_strategy(6),
        w0 in proptest::collection::vec(any::<u8>(), 1..20),
        w1 in proptest::collection::vec(any::<u8>(), 1..20),
    ) {
        let game = build_game(&g, &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let pair = [stochastic(&game, &w0), stochastic(&game, &w1)];
        let before = evaluate(&game, &pair).unwrap();
        let sym = symmetrize(&game, &pair).unwrap();
        let after = evaluate(&game, &sym).unwrap();
        prop_assert!(after >= before);
        prop_assert_eq!(symmetric_value(&game, &sym[0]), after.clone());
        let d = derandomize(&game, &sym[0]).unwrap();
        prop_assert!(d.values.windows(2).all(|v| v[1] >= v[0]));
        let det = StochasticStrategy::from_deterministic(&game, &d.strategy);
        prop_assert!(symmetric_value(&game, &det) >= after);
    }

    #[test]
    fn best_response_is_monotone(
        g in graph_strategy(5),
        spec in spec_strategy(),
        w0 in proptest::collection::vec(any::<u8>(), 1..20),
        w1 in proptest::collection::vec(any::<u8>(), 1..20),
    ) {
        let game = build_game(&g, &spec).unwrap();
        let run = best_response_improve(&game, &[stochastic(&game, &w0), stochastic(&game, &w1)]).unwrap();
        prop_assert!(run.values.windows(2).all(|v| v[1] >= v[0]));
        let det: Vec<_> = run.strategies.iter().map(|s| StochasticStrategy::from_deterministic(&game, s)).collect();
        prop_assert_eq!(&evaluate(&game, &det).unwrap(), run.value());
    }

    #[test]
    fn canonical_words_are_fixed_points(
        raw in proptest::collection::vec((0usize..2, 0usize..3, 0usize..2), 0..5),
    ) {
        let w: Vec<Letter> = raw.into_iter().map(|(p, x, a)| Letter::new(p, x, a)).collect();
        match canonicalize(&w) {
            Some(c) => {
                prop_assert_eq!(canonicalize(&c), Some(c.clone()));
                prop_assert_eq!(adjoint(&adjoint(&c)), c.clone());
                prop_assert!(c.len() <= w.len());
                let reversed: Vec<Letter> = w.iter().rev().copied().collect();
                prop_assert_eq!(canonicalize(&reversed), Some(adjoint(&c)));
                prop_assert_eq!(moment_class(&w), moment_class(&reversed));
            }
            None => prop_assert!(moment_class(&w).is_none()),
        }
    }

    #[test]
    fn sdpa_round_trip(g in graph_strategy(4), spec in spec_strategy()) {
        let game = build_game(&g, &spec).unwrap();
        let (_, p) = npa::build_relaxation(&game, Level::One).unwrap();
        let text = export_sdpa(&p);
        let back = parse_sdpa(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(export_sdpa(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// min sum c_i x_i subject to x_i >= b_i has optimum sum c_i b_i for c >= 0.
    #[test]
    fn diagonal_sdps_hit_their_optimum(
        rows in proptest::collection::vec((0.1f64..5.0, -3.0f64..3.0), 1..6),
    ) {
        let m = rows.len();
        let mut p = SdpProblem::new(vec![BlockSpec::diagonal(m)], rows.iter().map(|r| r.0).collect());
        for (i, &(_, b)) in rows.iter().enumerate() {
            if b != 0.0 {
                p.add(0, 0, i, i, b).unwrap();
            }
            p.add(i + 1, 0, i, i, 1.0).unwrap();
        }
        let s = solve_embedded(&p, 1e-10).unwrap();
        let want: f64 = rows.iter().map(|(c, b)| c * b).sum();
        prop_assert_eq!(s.status, SolveStatus::Optimal);
        prop_assert!((s.primal_objective - want).abs() < 1e-7);
        prop_assert!(s.dual_objective <= s.primal_objective + 1e-7);
    }

    #[test]
    fn npa_levels_are_nested(g in graph_strategy(4), spec in spec_strategy()) {
        let game = build_game(&g, &spec).unwrap();
        let one = npa::npa_bound(&game, Level::One, 1e-9).unwrap().value;
        let ab = npa::npa_bound(&game, Level::OnePlusAb, 1e-9).unwrap().value;
        let c = rational::to_f64(&classical_optimum(&game, false).unwrap().value);
        prop_assert!(ab <= one + 1e-6);
        prop_assert!(c <= ab + 1e-6);
    }

    #[test]
    fn seesaw_sandwich(g in graph_strategy(4), spec in spec_strategy(), seed in any::<u64>()) {
        let game = build_game(&g, &spec).unwrap();
        let cfg = SeesawConfig { restarts: 3, seed, ..SeesawConfig::for_game(&game) };
        let res = optimize(&game, &cfg).unwrap();
        prop_assert!(res.logs.iter().all(|l| l.is_monotone(1e-10)));
        res.realization.validate().unwrap();
        let (v, _) = born_value(&game, &res.realization).unwrap();
        prop_assert!((v - res.value).abs() < 1e-9);
        let bound = npa::npa_bound(&game, Level::OnePlusAb, 1e-9).unwrap().value;
        prop_assert!(res.value <= bound + 1e-5);
    }

    #[test]
    fn classical_embedding_is_exact(
        g in graph_strategy(5),
        spec in spec_strategy(),
        w0 in proptest::collection::vec(any::<u8>(), 1..20),
        w1 in proptest::collection::vec(any::<u8>(), 1..20),
    ) {
        let game = build_game(&g, &spec).unwrap();
        let run = best_response_improve(&game, &[stochastic(&game, &w0), stochastic(&game, &w1)]).unwrap();
        let det: Vec<_> = run.strategies.iter().map(|s| StochasticStrategy::from_deterministic(&game, s)).collect();
        let q = QuantumRealization::from_classical(&game, &det, 2).unwrap();
        let (v, _) = born_value(&game, &q).unwrap();
        prop_assert!((v - rational::to_f64(run.value())).abs() < 1e-12);
    }
}

#[test]
fn moment_matrix_is_normalized() {
    for n in [3, 4, 5] {
        let game = build_game(&make_cycle(n).unwrap(), &TaskSpec::rendezvous(StartRule::Any)).unwrap();
        let (rel, p) = npa::build_relaxation(&game, Level::OnePlusAb).unwrap();
        let sol = solve_embedded(&p, 1e-9).unwrap();
        npa::bound_from_solution(&rel, &sol).unwrap();
        let m = moment_matrix(&sol).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-7);
        for i in 0..m.size {
            let d = m.get(i, i);
            assert!((-1e-7..=1.0 + 1e-7).contains(&d), "diagonal {i} is {d}");
        }
    }
}

#[test]
fn npa_bound_is_rotation_invariant() {
    let g = make_cycle(6).unwrap();
    let perm: Vec<usize> = (0..6).map(|v| (v + 2) % 6).collect();
    let h = g.relabel(&perm).unwrap();
    for spec in [TaskSpec::rendezvous(StartRule::Any), TaskSpec::domination(StartRule::Distinct)] {
        let a = npa::npa_bound(&build_game(&g, &spec).unwrap(), Level::OnePlusAb, 1e-9).unwrap().value;
        let b = npa::npa_bound(&build_game(&h, &spec).unwrap(), Level::OnePlusAb, 1e-9).unwrap().value;
        assert!((a - b).abs() < 1e-6);
    }
}
