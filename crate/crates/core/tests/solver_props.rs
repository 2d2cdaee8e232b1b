use funits::factorize::{
    lipschitz_step, objective_single, smooth_objective, solve_joint, ista_step, IstaParams, SolverConfig,
};
use funits::graph::{laplacian_of, GraphLaplacian};
use funits::linalg::largest_eigenvalue_psd;
use funits::matrix::NonNegMatrix;
use funits::rng::stream;
use funits::Seed;
use nalgebra::DMatrix;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn nonneg(rng: &mut impl Rng, r: usize, c: usize) -> NonNegMatrix<f64> {
    NonNegMatrix::new(Array2::from_shape_fn((r, c), |_| rng.random::<f64>())).unwrap()
}

fn random_graph(rng: &mut impl Rng, n: usize) -> GraphLaplacian<f64> {
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.4 {
                let w = rng.random::<f64>();
                q[[i, j]] = w;
                q[[j, i]] = w;
            }
        }
    }
    laplacian_of(q.view())
}

fn sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_matches_term_oracle(seed in any::<u64>(), lambda in 0.0f64..2.0, beta in 0.0f64..2.0, gamma in 0.0f64..2.0) {
        let mut rng = Seed(seed).rng(0);
        let (m, n, k) = (4, 5, 2);
        let (u, v, w, ws) = (nonneg(&mut rng, m, n), nonneg(&mut rng, m, k), nonneg(&mut rng, k, n), nonneg(&mut rng, k, n));
        let lap = random_graph(&mut rng, n);
        let q = lap.affinity();
        let mut recon = 0.0;
        for i in 0..m {
            for j in 0..n {
                let vw: f64 = (0..k).map(|r| v[[i, r]] * w[[r, j]]).sum();
                recon += (u[[i, j]] - vw).powi(2);
            }
        }
        let mut smooth_graph = 0.0;
        for r in 0..k {
            for i in 0..n {
                for j in 0..n {
                    smooth_graph += 0.5 * q[[i, j]] * (w[[r, i]] - w[[r, j]]).powi(2);
                }
            }
        }
        let l1: f64 = w.iter().sum();
        let consensus = sq(&(w.as_array() - ws.as_array()));
        let want = 0.5 * recon + lambda * l1 + 0.5 * beta * smooth_graph;
        let got = objective_single(&u, &v, &w, &lap, lambda, beta);
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want));
        let smooth = smooth_objective(&u, &v, w.as_array(), &lap, beta, gamma, Some(ws.as_array()));
        let want_smooth = 0.5 * recon + 0.5 * beta * smooth_graph + 0.5 * gamma * consensus;
        prop_assert!((smooth - want_smooth).abs() <= 1e-10 * (1.0 + want_smooth));
    }

    #[test]
    fn ista_output_is_non_negative(seed in any::<u64>(), lambda in 0.0f64..1.0, beta in 0.0f64..1.0) {
        let mut rng = Seed(seed).rng(0);
        let (u, v, w) = (nonneg(&mut rng, 6, 7), nonneg(&mut rng, 6, 3), nonneg(&mut rng, 3, 7));
        let lap = random_graph(&mut rng, 7);
        let c = lipschitz_step(&v, &lap, beta, 0.0).unwrap();
        let out = ista_step(&u, &v, &w, &lap, IstaParams { lambda, beta, gamma: 0.0, c }, None);
        prop_assert!(out.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn consensus_term_contracts_toward_common_map(seed in any::<u64>(), gamma in 0.5f64..20.0) {
        let mut rng = Seed(seed).rng(0);
        let (u, v, w, ws) = (nonneg(&mut rng, 5, 6), nonneg(&mut rng, 5, 2), nonneg(&mut rng, 2, 6), nonneg(&mut rng, 2, 6));
        let lap = GraphLaplacian::empty(6);
        let free_c = lipschitz_step(&v, &lap, 0.0, 0.0).unwrap();
        let c = free_c + gamma;
        let free = ista_step(&u, &v, &w, &lap, IstaParams { lambda: 0.0, beta: 0.0, gamma: 0.0, c }, None);
        let pulled = ista_step(&u, &v, &w, &lap, IstaParams { lambda: 0.0, beta: 0.0, gamma, c }, Some(&ws));
        let d_free = sq(&(free.as_array() - ws.as_array()));
        let d_pulled = sq(&(pulled.as_array() - ws.as_array()));
        prop_assert!(d_pulled <= d_free + 1e-12);
    }
}

#[test]
fn power_iteration_matches_dense_eigen() {
    let mut rng = Seed(11).rng(0);
    for _ in 0..5 {
        let b = Array2::from_shape_fn((20, 20), |_| rng.random::<f64>() - 0.5);
        let a = b.t().dot(&b);
        let mut prng = Seed(0).rng(stream::POWER);
        let got = largest_eigenvalue_psd(a.view(), 1e-14, 10_000, &mut prng);
        let want = DMatrix::from_fn(20, 20, |i, j| a[[i, j]]).symmetric_eigen().eigenvalues.max();
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }
}

#[test]
fn joint_objective_trace_is_recorded_per_round() {
    let mut rng = Seed(3).rng(0);
    let us: Vec<_> = (0..2).map(|_| nonneg(&mut rng, 8, 10)).collect();
    let laps: Vec<_> = (0..2).map(|_| random_graph(&mut rng, 10)).collect();
    let mut cfg = SolverConfig::new(2);
    cfg.lambda = 0.05;
    cfg.beta = 0.1;
    cfg.gamma = 1.0;
    cfg.outer_rounds = 3;
    cfg.ista_iters = 5;
    let model = solve_joint(&us, &laps, &cfg).unwrap();
    assert_eq!(model.objective_trace.len(), 3);
    assert!(model.objective_trace.iter().all(|v| v.is_finite()));
    assert_eq!(model.w_star.rows(), 2);
}
