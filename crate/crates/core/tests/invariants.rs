use gtf_core::difference::graph_difference_operator;
use gtf_core::flow::{kkt_violation, tv_denoise_certified};
use gtf_core::graph::{build_graph, connected_components, Graph};
use gtf_core::io::{read_signal, write_signal};
use gtf_core::model_eval::estimate_df;
use gtf_core::solvers::{gtf_objective, kkt_report, solve, Method, SolverOptions};
use proptest::prelude::*;

/// Random simple graph on `n` nodes with a spanning path so it is connected.
fn connected_graph() -> impl Strategy<Value = Graph> {
    (3usize..14).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..2 * n).prop_map(move |extra| {
            let mut edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
            for (a, b) in extra {
                let (i, j) = (a.min(b), a.max(b));
                if i != j && !edges.iter().any(|e| e.0 == i && e.1 == j) {
                    edges.push((i, j, 1.0));
                }
            }
            build_graph(n, &edges).unwrap()
        })
    })
}

fn graph_and_signal() -> impl Strategy<Value = (Graph, Vec<f64>)> {
    connected_graph().prop_flat_map(|g| {
        let n = g.n();
        (Just(g), proptest::collection::vec(-5.0f64..5.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn penalty_kills_constants_and_is_homogeneous((g, beta) in graph_and_signal(), k in 0usize..4, c in -3.0f64..3.0, s in -4.0f64..4.0) {
        let op = graph_difference_operator(&g, k);
        let shifted: Vec<f64> = beta.iter().map(|b| b + c).collect();
        let p = op.penalty_value(&beta).unwrap();
        prop_assert!((op.penalty_value(&shifted).unwrap() - p).abs() <= 1e-9 * (1.0 + p));
        let scaled: Vec<f64> = beta.iter().map(|b| b * s).collect();
        prop_assert!((op.penalty_value(&scaled).unwrap() - s.abs() * p).abs() <= 1e-9 * (1.0 + p * s.abs()));
    }

    #[test]
    fn tv_prox_certified_and_mean_preserving((g, b) in graph_and_signal(), w in 0.01f64..3.0) {
        let sol = tv_denoise_certified(&g, &b, w).unwrap();
        prop_assert!(kkt_violation(&g, &b, w, &sol) <= 1e-8 * (1.0 + w));
        let (sx, sb): (f64, f64) = (sol.x.iter().sum(), b.iter().sum());
        prop_assert!((sx - sb).abs() <= 1e-8 * (1.0 + sb.abs()));
    }

    #[test]
    fn fit_commutes_with_shifts((g, y) in graph_and_signal(), k in 0usize..3, lambda in 0.01f64..2.0, c in -10.0f64..10.0) {
        let opts = SolverOptions::default();
        let a = solve(&y, &g, k, lambda, Method::Auto, &opts).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let b = solve(&shifted, &g, k, lambda, Method::Auto, &opts).unwrap();
        prop_assume!(a.converged && b.converged);
        for (x, z) in a.beta.iter().zip(&b.beta) {
            prop_assert!((x + c - z).abs() <= 1e-6 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn fit_beats_trivial_candidates((g, y) in graph_and_signal(), k in 0usize..3, lambda in 0.01f64..2.0) {
        let op = graph_difference_operator(&g, k);
        let fit = solve(&y, &g, k, lambda, Method::Admm, &SolverOptions::default()).unwrap();
        prop_assume!(fit.converged);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let at_fit = gtf_objective(&op, &y, lambda, &fit.beta).unwrap();
        let slack = 1e-8 * (1.0 + at_fit.abs());
        prop_assert!(at_fit <= gtf_objective(&op, &y, lambda, &y).unwrap() + slack);
        prop_assert!(at_fit <= gtf_objective(&op, &y, lambda, &vec![mean; y.len()]).unwrap() + slack);
        let kkt = kkt_report(&y, &g, &fit).unwrap().unwrap();
        prop_assert!(kkt.certifies(lambda), "{kkt:?}");
    }

    #[test]
    fn df_between_one_and_n((g, y) in graph_and_signal(), k in 0usize..3, lambda in 0.01f64..2.0) {
        let fit = solve(&y, &g, k, lambda, Method::Auto, &SolverOptions::default()).unwrap();
        let df = estimate_df(&fit, &g).unwrap();
        prop_assert!(df >= 1 && df <= g.n());
        if k == 0 {
            prop_assert!(df >= connected_components(&g, &[]).unwrap().count);
        }
    }

    #[test]
    fn signal_csv_round_trips(values in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 1..40)) {
        let mut buf = Vec::new();
        write_signal(&mut buf, &values).unwrap();
        let back = read_signal(buf.as_slice(), Some(values.len())).unwrap();
        prop_assert_eq!(back, values);
    }

    #[test]
    fn edge_list_round_trips(g in connected_graph()) {
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        prop_assert_eq!(Graph::read_edge_list(buf.as_slice()).unwrap(), g);
    }
}
