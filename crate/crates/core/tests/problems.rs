use approx::assert_relative_eq;
use hibsa::diagnostics::finite_difference_check;
use hibsa::linalg::{dist, norm, sub};
use hibsa::problems::{
    BilinearDomain, BilinearProblem, ChannelModel, Domain, JammingProblem, LseBaseline, MaxMinProblem,
    RobustProblem,
};
use hibsa::schedule::max_strongly_concave_rho;
use hibsa::solver::hibsa_run_default;
use hibsa::{stationarity_gap, BlockPoint, ConvexSet, MinMaxProblem, Regime, SolverConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn single_link(a: f64, a0: f64) -> ChannelModel {
    ChannelModel {
        gains: vec![vec![vec![a]]],
        jammer_gains: vec![vec![a0]],
        noise: 1.0,
        user_budget: 2.0,
        jammer_budget: 2.0,
    }
}

fn budget_point(rng: &mut ChaCha8Rng, n: usize, budget: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..=n).map(|_| -> f64 { Exp1.sample(rng) }).collect();
    let s: f64 = e.iter().sum();
    e[..n].iter().map(|v| budget * v / s).collect()
}

fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -> f64 { Exp1.sample(rng) }).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn channel_point(rng: &mut ChaCha8Rng, m: &ChannelModel, y_simplex: bool) -> BlockPoint {
    let x = (0..m.users())
        .map(|_| budget_point(rng, m.channels(), m.user_budget))
        .collect();
    let y = if y_simplex {
        simplex_point(rng, m.users())
    } else {
        budget_point(rng, m.channels(), m.jammer_budget)
    };
    BlockPoint::new(x, y)
}

/// Largest observed ratios for `grad_{x_i}` (y held fixed) and `grad_y` (everything moves).
fn lipschitz_ratios(problem: &dyn MinMaxProblem, pairs: &[(BlockPoint, BlockPoint)]) -> (Vec<f64>, f64) {
    let k = problem.num_blocks();
    let mut lx = vec![0.0f64; k];
    let mut ly = 0.0f64;
    for (a, b) in pairs {
        let b_same_y = BlockPoint::new(b.x.clone(), a.y.clone());
        let dx = a.x_distance(&b_same_y);
        for (i, slot) in lx.iter_mut().enumerate() {
            let d = dist(&problem.grad_x(a, i), &problem.grad_x(&b_same_y, i));
            *slot = slot.max(d / dx);
        }
        let dz = (a.x_distance(b).powi(2) + a.y_distance(b).powi(2)).sqrt();
        ly = ly.max(dist(&problem.grad_y(a), &problem.grad_y(b)) / dz);
    }
    (lx, ly)
}

fn assert_declared_bounds(problem: &dyn MinMaxProblem, pairs: &[(BlockPoint, BlockPoint)]) {
    let (lx, ly) = lipschitz_ratios(problem, pairs);
    let c = problem.constants();
    for (seen, declared) in lx.iter().zip(&c.l_x) {
        assert!(
            seen <= declared,
            "{}: L_x ratio {seen} above {declared}",
            problem.name()
        );
    }
    assert!(ly <= c.l_y, "{}: L_y ratio {ly} above {}", problem.name(), c.l_y);
}

#[test]
fn random_channels_follow_the_model() {
    let m = ChannelModel::random(4, 3, 10.0, 5).unwrap();
    assert_eq!((m.users(), m.channels()), (4, 3));
    assert_eq!(m.noise, 0.5);
    assert_eq!(m.jammer_budget, 1.5);
    assert_relative_eq!(m.user_budget, 10.0, epsilon = 1e-12);
    assert!(m.gains.iter().flatten().flatten().all(|g| *g >= 0.0));
    assert_eq!(m, ChannelModel::random(4, 3, 10.0, 5).unwrap());
    assert_ne!(m, ChannelModel::random(4, 3, 10.0, 6).unwrap());

    // |h|^2 of a unit-variance complex Gaussian is Exp(1): mean 1
    let big = ChannelModel::random(20, 50, 0.0, 1).unwrap();
    let all: Vec<f64> = big.gains.iter().flatten().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "mean gain {mean}");

    let mut bad = single_link(1.0, 1.0);
    bad.noise = 0.0;
    assert!(JammingProblem::new(bad).is_err());
    let mut bad = single_link(1.0, 1.0);
    bad.gains[0][0][0] = -1.0;
    assert!(bad.validate().is_err());
}

#[test]
fn jamming_examples() {
    let p = JammingProblem::new(single_link(1.0, 1.0)).unwrap();
    let quiet = BlockPoint::new(vec![vec![1.0]], vec![0.0]);
    assert_relative_eq!(p.f(&quiet), -(2f64.ln()), epsilon = 1e-15);
    let jammed = BlockPoint::new(vec![vec![1.0]], vec![1.0]);
    assert_relative_eq!(p.f(&jammed), -(1.5f64.ln()), epsilon = 1e-15);

    let m = ChannelModel::random(3, 4, 1.0, 2).unwrap();
    let p = JammingProblem::new(m.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pt = channel_point(&mut rng, &m, false);
    pt.y = vec![0.0; 4];
    let no_jammer: f64 = m.rates(&pt.x, None).iter().sum();
    assert_relative_eq!(p.f(&pt), -no_jammer, epsilon = 1e-14);
    assert!(matches!(p.regime(), Regime::StronglyConcave { theta } if theta > 0.0));
    assert_eq!(p.y_set(), &ConvexSet::BudgetSimplex { dim: 4, budget: 2.0 });
}

#[test]
fn jamming_objective_grows_with_jammer_power() {
    let m = ChannelModel::random(3, 4, 1.0, 4).unwrap();
    let p = JammingProblem::new(m.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..300 {
        let pt = channel_point(&mut rng, &m, false);
        let n = rng.random_range(0..4);
        let step = rng.random_range(0.0..1.0);
        let mut more = pt.clone();
        more.y[n] += step;
        assert!(p.f(&more) >= p.f(&pt) - 1e-15);
        assert!(p.grad_y(&pt).iter().all(|g| *g >= 0.0));
    }
}

#[test]
fn jamming_theta_bounds_sampled_curvature() {
    let m = ChannelModel::random(3, 4, 1.0, 0).unwrap();
    let p = JammingProblem::new(m.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut above = 0;
    for _ in 0..1000 {
        let pt = channel_point(&mut rng, &m, false);
        if p.y_curvature(&pt).iter().all(|c| *c >= p.theta()) {
            above += 1;
        }
    }
    assert!(above >= 990, "{above} of 1000 fresh points respect theta");
}

#[test]
fn frozen_jammer_pins_y() {
    let m = ChannelModel::random(2, 3, 1.0, 1).unwrap();
    let p = JammingProblem::with_frozen_jammer(m.clone(), vec![0.5; 3]).unwrap();
    assert!(p.y_set().contains(&[0.5; 3], 0.0));
    assert!(!p.y_set().contains(&[0.4, 0.5, 0.5], 1e-9));
    assert!(JammingProblem::with_frozen_jammer(m.clone(), vec![1.0; 3]).is_err());
    assert!(JammingProblem::with_frozen_jammer(m, vec![0.1; 2]).is_err());
}

#[test]
fn declared_lipschitz_constants_bound_observed_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);

    let m = ChannelModel::random(3, 4, 1.0, 3).unwrap();
    let jam = JammingProblem::new(m.clone()).unwrap();
    let pairs: Vec<_> = (0..1000)
        .map(|_| {
            (
                channel_point(&mut rng, &m, false),
                channel_point(&mut rng, &m, false),
            )
        })
        .collect();
    assert_declared_bounds(&jam, &pairs);

    let mm = MaxMinProblem::new(m.clone()).unwrap();
    let pairs: Vec<_> = (0..1000)
        .map(|_| {
            (
                channel_point(&mut rng, &m, true),
                channel_point(&mut rng, &m, true),
            )
        })
        .collect();
    assert_declared_bounds(&mm, &pairs);

    let a = BilinearProblem::random_matrix(5, 4, 1);
    let bil = BilinearProblem::new(a, BilinearDomain::Unconstrained).unwrap();
    let pairs: Vec<_> = (0..1000)
        .map(|s| (bil.random_start(2 * s), bil.random_start(2 * s + 1)))
        .collect();
    assert_declared_bounds(&bil, &pairs);

    let rob = RobustProblem::new(
        RobustProblem::synthetic_domains(4, 80, 0.2, 2),
        0.5,
        vec![0.3, 0.7],
    )
    .unwrap();
    let draw = |rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..4)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                2.0 * z
            })
            .collect();
        BlockPoint::new(vec![x], simplex_point(rng, 2))
    };
    let pairs: Vec<_> = (0..1000).map(|_| (draw(&mut rng), draw(&mut rng))).collect();
    assert_declared_bounds(&rob, &pairs);
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let m = ChannelModel::random(4, 3, 3.0, 9).unwrap();
    let jam = JammingProblem::new(m.clone()).unwrap();
    let mm = MaxMinProblem::new(m.clone()).unwrap();
    let rob = RobustProblem::new(
        RobustProblem::synthetic_domains(3, 50, 0.2, 5),
        1.0,
        vec![0.5, 0.5],
    )
    .unwrap();
    let bil = BilinearProblem::new(
        BilinearProblem::random_matrix(3, 5, 4),
        BilinearDomain::Unconstrained,
    )
    .unwrap();
    for s in 0..100 {
        let mut pt = channel_point(&mut rng, &m, false);
        pt.x.iter_mut().flatten().for_each(|v| *v += 1e-3);
        pt.y.iter_mut().for_each(|v| *v += 1e-3);
        assert!(finite_difference_check(&jam, &pt, 1e-6).unwrap().max_error() < 1e-5);
        let mut pt = channel_point(&mut rng, &m, true);
        pt.x.iter_mut().flatten().for_each(|v| *v += 1e-3);
        assert!(finite_difference_check(&mm, &pt, 1e-6).unwrap().max_error() < 1e-5);
        let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
        let pt = BlockPoint::new(vec![x], simplex_point(&mut rng, 2));
        assert!(finite_difference_check(&rob, &pt, 1e-6).unwrap().max_error() < 1e-5);
        assert!(
            finite_difference_check(&bil, &bil.random_start(s), 1e-5)
                .unwrap()
                .max_error()
                < 1e-9
        );
    }
}

#[test]
fn bilinear_examples() {
    let zero = BilinearProblem::new(DMatrix::zeros(3, 3), BilinearDomain::Unconstrained).unwrap();
    for s in 0..10 {
        assert_eq!(
            stationarity_gap(&zero, &zero.random_start(s), 1.0, 1.0)
                .unwrap()
                .norm(),
            0.0
        );
    }
    let id = BilinearProblem::new(DMatrix::identity(3, 3), BilinearDomain::Unconstrained).unwrap();
    let origin = BlockPoint::new(vec![vec![0.0; 3]], vec![0.0; 3]);
    assert_eq!(stationarity_gap(&id, &origin, 1.0, 1.0).unwrap().norm(), 0.0);
    for s in 0..10 {
        assert!(
            stationarity_gap(&id, &id.random_start(s), 1.0, 1.0)
                .unwrap()
                .norm()
                > 0.0
        );
    }
    let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
    let p = BilinearProblem::new(a, BilinearDomain::Ball(2.0)).unwrap();
    assert_relative_eq!(p.constants().l_y, 4.0, epsilon = 1e-12);
    assert_eq!(p.constants().l_x, vec![0.0]);
    assert_eq!(p.regime(), Regime::LinearCoupling);
    assert!(matches!(p.x_set(0), ConvexSet::Ball { radius, .. } if *radius == 2.0));
    assert!(BilinearProblem::new(
        DMatrix::from_element(1, 1, f64::NAN),
        BilinearDomain::Unconstrained
    )
    .is_err());
}

#[test]
fn maxmin_symmetric_instance_is_fair() {
    let m = ChannelModel {
        gains: vec![vec![vec![1.0, 0.3], vec![0.3, 1.0]]; 2],
        jammer_gains: vec![vec![0.0, 0.0]; 2],
        noise: 0.5,
        user_budget: 1.0,
        jammer_budget: 1.0,
    };
    let p = MaxMinProblem::new(m).unwrap();
    let config = SolverConfig {
        epsilon: 1e-8,
        max_iter: 5000,
        ..Default::default()
    };
    let report = hibsa_run_default(&p, &config).unwrap();
    let r = p.rates(&report.point.x);
    assert_relative_eq!(r[0], r[1], epsilon = 1e-9);
    assert_relative_eq!(report.point.y[0], 0.5, epsilon = 1e-4);
}

#[test]
fn maxmin_vertices_select_rates() {
    let m = ChannelModel::random(4, 2, 5.0, 12).unwrap();
    let p = MaxMinProblem::new(m.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let pt = channel_point(&mut rng, &m, true);
        let rates = p.rates(&pt.x);
        let values: Vec<f64> = (0..4)
            .map(|k| {
                let mut e = vec![0.0; 4];
                e[k] = 1.0;
                let v = p.f(&BlockPoint::new(pt.x.clone(), e));
                assert_relative_eq!(v, -rates[k], epsilon = 1e-14);
                v
            })
            .collect();
        let best = (0..4).max_by(|a, b| values[*a].total_cmp(&values[*b])).unwrap();
        let argmin = (0..4).min_by(|a, b| rates[*a].total_cmp(&rates[*b])).unwrap();
        assert_eq!(best, argmin);
        for _ in 0..20 {
            let y = simplex_point(&mut rng, 4);
            assert!(p.f(&BlockPoint::new(pt.x.clone(), y)) <= values[best] + 1e-12);
        }
    }
}

#[test]
fn lse_examples() {
    let equal = ChannelModel {
        gains: vec![vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]],
        jammer_gains: vec![vec![0.0; 3]],
        noise: 1.0,
        user_budget: 1.0,
        jammer_budget: 1.0,
    };
    let b = LseBaseline::new(equal, 2.0).unwrap();
    let x = vec![vec![1.0]; 3];
    assert_relative_eq!(b.surrogate(&x), 2f64.ln() - 3f64.log2() / 2.0, epsilon = 1e-14);

    assert_relative_eq!(hibsa::problems::lse_min(&[1.0, 2.0], 200.0), 1.0, epsilon = 1e-12);
    assert_eq!(hibsa::problems::lse_min(&[0.37], 3.0), 0.37);
    assert!(hibsa::problems::lse_min(&[800.0, 900.0], 50.0).is_finite());
    assert!(LseBaseline::new(single_link(1.0, 0.0), 0.0).is_err());
}

proptest! {
    #[test]
    fn lse_sandwiches_the_min(rates in proptest::collection::vec(0.0f64..20.0, 1..8), nu in 0.1f64..50.0) {
        let v = hibsa::problems::lse_min(&rates, nu);
        let m = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let k = rates.len() as f64;
        prop_assert!(v <= m + 1e-12);
        prop_assert!(v >= m - k.log2() / nu - 1e-12);
    }
}

#[test]
fn lse_solver_improves_the_surrogate() {
    let m = ChannelModel::random(3, 2, 5.0, 31).unwrap();
    let b = LseBaseline::new(m, 5.0).unwrap();
    let x0 = b.default_start();
    let sol = b.solve(&x0, 2000, 1e-9).unwrap();
    assert!(sol.surrogate >= b.surrogate(&x0));
    assert!(sol.converged);
    let set = ConvexSet::BudgetSimplex {
        dim: 2,
        budget: 10f64.powf(0.5),
    };
    assert!(sol.x.iter().all(|xi| set.contains(xi, 1e-9)));
}

fn inner_argmax(p: &RobustProblem, x: &[f64]) -> f64 {
    (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .max_by(|a, b| {
            let fa = p.f(&BlockPoint::new(vec![x.to_vec()], vec![*a, 1.0 - *a]));
            let fb = p.f(&BlockPoint::new(vec![x.to_vec()], vec![*b, 1.0 - *b]));
            fa.total_cmp(&fb)
        })
        .unwrap()
}

fn robust_report(domains: Vec<Domain>, lambda: f64, iters: u64) -> (RobustProblem, hibsa::RunReport) {
    let p = RobustProblem::new(domains, lambda, vec![0.5, 0.5]).unwrap();
    let config = SolverConfig {
        rho: 0.9 * max_strongly_concave_rho(lambda, p.constants().l_y),
        epsilon: 1e-7,
        max_iter: iters,
        ..Default::default()
    };
    let r = hibsa_run_default(&p, &config).unwrap();
    (p, r)
}

#[test]
fn robust_identical_domains_keep_the_prior() {
    let d = RobustProblem::synthetic_domains(3, 60, 0.1, 8);
    let (p, r) = robust_report(vec![d[0].clone(), d[0].clone()], 1.0, 3000);
    assert_relative_eq!(r.point.y[0], 0.5, epsilon = 1e-9);
    assert_relative_eq!(inner_argmax(&p, &r.point.x[0]), 0.5, epsilon = 1e-3);
}

#[test]
fn robust_weights_follow_the_worse_domain() {
    let (p, r) = robust_report(RobustProblem::synthetic_domains(3, 100, 0.25, 12), 10.0, 8000);
    let x = &r.point.x[0];
    let losses = p.losses(x);
    assert!(losses[1] > losses[0]);
    assert!(r.point.y[1] > 0.5);
    let grid = inner_argmax(&p, x);
    assert!(
        (r.point.y[0] - grid).abs() <= 5e-3,
        "y {:?} vs grid {grid}",
        r.point.y
    );

    let (p, r) = robust_report(RobustProblem::synthetic_domains(3, 100, 0.25, 12), 200.0, 3000);
    let worst = p.losses(&r.point.x[0]).into_iter().fold(0.0, f64::max);
    assert!(norm(&sub(&r.point.y, p.prior())) <= worst / 200.0);
}

#[test]
fn robust_rejects_bad_input() {
    let d = RobustProblem::synthetic_domains(2, 10, 0.1, 1);
    assert!(RobustProblem::new(vec![d[0].clone()], 1.0, vec![1.0]).is_err());
    assert!(RobustProblem::new(d.clone(), 0.0, vec![0.5, 0.5]).is_err());
    assert!(RobustProblem::new(d.clone(), 1.0, vec![0.7, 0.7]).is_err());
    let empty = Domain {
        features: vec![],
        labels: vec![],
    };
    assert!(RobustProblem::new(vec![d[0].clone(), empty], 1.0, vec![0.5, 0.5]).is_err());
}
