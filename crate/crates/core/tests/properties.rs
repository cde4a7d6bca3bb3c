//! Randomized checks of the structural properties of the channel and the
//! estimators.

use ldpfreq_core::estimators::{
    boundary_g, ibu_generic_step, project_onto_simplex, zero_count_candidate,
};
use ldpfreq_core::harness::{sampled_histogram, zipf_distribution, ZipfSpec};
use ldpfreq_core::metrics::{kl_divergence, mse, neg_log_likelihood};
use ldpfreq_core::numeric::linf;
use ldpfreq_core::oracle::{
    lattice_diameter, near_optimal_lattice_points, projection_bruteforce, GridSpec,
};
use ldpfreq_core::*;
use proptest::prelude::*;

/// Random histogram over `2..=max_k` categories (some entries zero) and a budget.
fn instance(max_k: usize) -> impl Strategy<Value = (Distribution, RRParams)> {
    (2..=max_k, 0.2f64..6.0).prop_flat_map(|(k, eps)| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], k).prop_map(
            move |mut w| {
                if w.iter().all(|&x| x == 0.0) {
                    w[0] = 1.0;
                }
                let total: f64 = w.iter().sum();
                let phi = Distribution::new(w.into_iter().map(|x| x / total).collect()).unwrap();
                (phi, params_from_epsilon(k, eps).unwrap())
            },
        )
    })
}

fn simplex_point(k: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, k).prop_map(|mut w| {
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        Distribution::new(w.into_iter().map(|x| x / total).collect()).unwrap()
    })
}

fn nll(theta: &[f64], phi: &Distribution, params: &RRParams) -> f64 {
    neg_log_likelihood(theta, phi, params).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn epsilon_round_trip(eps in 0.1f64..10.0, log_k in 0.7f64..13.9) {
        let k = log_k.exp() as usize;
        let rr = params_from_epsilon(k.max(2), eps).unwrap();
        prop_assert!(((rr.p() / rr.q()).ln() - eps).abs() <= 1e-12);
        prop_assert!((rr.p() + (rr.k() - 1) as f64 * rr.q() - 1.0).abs() <= 1e-12);
        prop_assert!((rr.p() - rr.q() - rr.p_minus_q()).abs() <= 1e-15);
    }

    #[test]
    fn p_increases_with_eps_and_q_decreases_with_k(eps in 0.1f64..9.0, k in 2usize..10_000) {
        let a = params_from_epsilon(k, eps).unwrap();
        let b = params_from_epsilon(k, eps + 0.5).unwrap();
        let c = params_from_epsilon(k + 1, eps).unwrap();
        prop_assert!(b.p() > a.p());
        prop_assert!(c.q() < a.q());
    }

    #[test]
    fn ldp_ratio_is_tight(k in 2usize..40, eps in 0.1f64..8.0) {
        let rr = params_from_epsilon(k, eps).unwrap();
        let c = rr_channel(&rr).unwrap();
        let mut worst: f64 = 0.0;
        for y in 0..k {
            for x in 0..k {
                for x2 in 0..k {
                    worst = worst.max(c.get(x, y) / c.get(x2, y));
                }
            }
        }
        prop_assert!(worst <= eps.exp() * (1.0 + 1e-12));
        prop_assert!((worst / eps.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compound_is_affine_and_bounded(
        (a, b) in (2usize..30).prop_flat_map(|k| (simplex_point(k), simplex_point(k))),
        alpha in 0.0f64..=1.0,
        eps in 0.1f64..8.0,
    ) {
        let rr = params_from_epsilon(a.k(), eps).unwrap();
        let mix: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
        let mix = Distribution::new(mix).unwrap();
        let lhs = compound_distribution(&mix, &rr).unwrap();
        let ma = compound_distribution(&a, &rr).unwrap();
        let mb = compound_distribution(&b, &rr).unwrap();
        let rhs: Vec<f64> = ma.iter().zip(mb.iter()).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
        prop_assert!(linf(lhs.probs(), &rhs) <= 1e-12);
        for &m in ma.iter() {
            prop_assert!(m >= rr.q() - 1e-15 && m <= rr.p() + 1e-15);
        }
    }

    #[test]
    fn compound_equals_matrix_product(theta in simplex_point(5), eps in 0.1f64..5.0) {
        let rr = params_from_epsilon(5, eps).unwrap();
        let direct = compound_distribution(&theta, &rr).unwrap();
        let via_matrix = rr_channel(&rr).unwrap().push_forward(theta.probs()).unwrap();
        prop_assert!(linf(direct.probs(), &via_matrix) <= 1e-15);
    }

    #[test]
    fn mle_zero_set_has_lagrange_form((phi, rr) in instance(64)) {
        let (theta, trace) = estimate_mle(&phi, &rr).unwrap();
        let bias = rr.q() / rr.p_minus_q();
        prop_assert!(trace.lambda > 0.0);
        for (t, f) in theta.iter().zip(phi.iter()) {
            if *t > 0.0 {
                prop_assert!((t - (f / trace.lambda - bias)).abs() <= 1e-12, "{} vs {}", t, f / trace.lambda - bias);
            }
        }
        let zeros = theta.iter().filter(|&&t| t == 0.0).count();
        prop_assert!(zeros >= trace.n_zeros);
    }

    #[test]
    fn mle_n_is_minimal((phi, rr) in instance(64)) {
        let (_, trace) = estimate_mle(&phi, &rr).unwrap();
        let n = trace.n_zeros;
        prop_assert!(boundary_g(&phi, &rr, n) >= -1e-15);
        prop_assert!(trace.g_at_n >= -1e-15);
        if n > 0 {
            prop_assert!(boundary_g(&phi, &rr, n - 1) < 1e-15);
        }
        for m in 0..n {
            prop_assert!(boundary_g(&phi, &rr, m) < 1e-15);
        }
        let sorted: Vec<f64> = trace.sigma.iter().map(|&i| phi[i]).collect();
        prop_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        let lambda = rr.p_minus_q() * sorted[n..].iter().sum::<f64>() / (1.0 - n as f64 * rr.q());
        prop_assert!((lambda - trace.lambda).abs() <= 1e-12);
    }

    #[test]
    fn mle_is_monotone_in_phi((phi, rr) in instance(64)) {
        let (theta, _) = estimate_mle(&phi, &rr).unwrap();
        for i in 0..phi.k() {
            for j in 0..phi.k() {
                if phi[i] <= phi[j] {
                    prop_assert!(theta[i] <= theta[j] + 1e-15);
                }
            }
        }
    }

    #[test]
    fn estimators_commute_with_permutations(
        (phi, rr, perm) in instance(32).prop_flat_map(|(phi, rr)| {
            let k = phi.k();
            (Just(phi), Just(rr), Just((0..k).collect::<Vec<usize>>()).prop_shuffle())
        })
    ) {
        let pphi = phi.permuted(&perm).unwrap();
        let permute = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; v.len()];
            for (i, &j) in perm.iter().enumerate() {
                out[j] = v[i];
            }
            out
        };
        for kind in EstimatorKind::ALL {
            let a = run_estimator(kind, &pphi, &rr, 200).unwrap().theta;
            let b = permute(&run_estimator(kind, &phi, &rr, 200).unwrap().theta);
            prop_assert!(linf(&a, &b) <= 1e-12, "{kind}: {:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn collinearity_with_mle_in_the_middle(
        k in 3usize..30,
        eps in 0.3f64..5.0,
        v_frac in 0.0f64..0.999,
        w in prop::collection::vec(0.0f64..1.0, 29),
    ) {
        let rr = params_from_epsilon(k, eps).unwrap();
        let q = rr.q();
        let v = v_frac * q;
        let floor = (k as f64 * q - v) / (k - 1) as f64;
        let spare = 1.0 - v - (k - 1) as f64 * floor;
        let w = &w[..k - 1];
        let wsum: f64 = w.iter().sum::<f64>().max(1e-12);
        let mut entries = vec![v];
        entries.extend(w.iter().map(|x| floor + spare * x / wsum));
        let phi = Distribution::new(entries).unwrap();

        let invn = estimate_invn(&phi, &rr).unwrap();
        let invp = estimate_invp(&phi, &rr).unwrap();
        let (mle, _) = estimate_mle(&phi, &rr).unwrap();
        let t = (1.0 - v) / (rr.p() - v);
        prop_assert!(t > 1.0);
        for i in 0..k {
            let lhs = invn[i] - invp[i];
            let rhs = t * (mle[i] - invp[i]);
            prop_assert!((lhs - rhs).abs() <= 1e-9, "i={} {} vs {}", i, lhs, rhs);
        }
    }

    #[test]
    fn projection_is_nonexpansive_towards_the_simplex(
        (phi, rr, theta) in instance(20).prop_flat_map(|(phi, rr)| {
            let k = phi.k();
            (Just(phi), Just(rr), simplex_point(k))
        })
    ) {
        let inv = estimate_inv(&phi, &rr).unwrap();
        let invp = estimate_invp(&phi, &rr).unwrap();
        let d_inv = mse(inv.values(), theta.probs()).unwrap();
        let d_proj = mse(invp.probs(), theta.probs()).unwrap();
        prop_assert!(d_proj <= d_inv + 1e-12);
    }

    #[test]
    fn nll_splits_into_entropy_plus_kl((phi, rr, theta) in instance(40).prop_flat_map(|(phi, rr)| {
        let k = phi.k();
        (Just(phi), Just(rr), simplex_point(k))
    })) {
        let model = compound_distribution(&theta, &rr).unwrap();
        let entropy: f64 = phi.iter().filter(|&&f| f > 0.0).map(|&f| -f * f.ln()).sum();
        let kl = kl_divergence(&phi, &model).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!((nll(theta.probs(), &phi, &rr) - (entropy + kl)).abs() <= 1e-12);
    }

    #[test]
    fn ibu_generic_matches_rr_every_iteration(phi in simplex_point(5), eps in 0.2f64..5.0) {
        let rr = params_from_epsilon(5, eps).unwrap();
        let channel = rr_channel(&rr).unwrap();
        let mut state = IbuState::new(5, 100).unwrap();
        let mut generic = Distribution::uniform(5).unwrap().into_vec();
        for _ in 0..100 {
            state.step(&phi, &rr).unwrap();
            generic = ibu_generic_step(&generic, &phi, &channel).unwrap();
            prop_assert!(linf(state.theta.probs(), &generic) <= 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mle_dominates_likelihood(
        (phi, rr) in instance(64),
        seeds in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 64), 200),
    ) {
        let (theta, _) = estimate_mle(&phi, &rr).unwrap();
        let best = nll(theta.probs(), &phi, &rr);
        let others = [
            estimate_invn(&phi, &rr).unwrap().into_vec(),
            estimate_invp(&phi, &rr).unwrap().into_vec(),
        ];
        for other in &others {
            prop_assert!(best <= nll(other, &phi, &rr) + 1e-9);
        }
        let k = phi.k();
        for w in &seeds {
            let total: f64 = w[..k].iter().sum::<f64>().max(1e-12);
            let point: Vec<f64> = w[..k].iter().map(|x| x / total).collect();
            prop_assert!(best <= nll(&point, &phi, &rr) + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mle_dominates_long_ibu((phi, rr) in instance(64)) {
        let (theta, _) = estimate_mle(&phi, &rr).unwrap();
        let (ibu, _) = estimate_ibu_rr(&phi, &rr, 10_000, None).unwrap();
        prop_assert!(nll(theta.probs(), &phi, &rr) <= nll(ibu.probs(), &phi, &rr) + 1e-9);
    }

    #[test]
    fn invp_matches_projection_oracle((phi, rr) in instance(6)) {
        let inv = estimate_inv(&phi, &rr).unwrap();
        let grid = GridSpec::with_budget(phi.k(), 20_000).unwrap();
        let oracle = projection_bruteforce(inv.values(), &grid).unwrap();
        let invp = estimate_invp(&phi, &rr).unwrap();
        prop_assert!(linf(invp.probs(), oracle.theta.probs()) <= 1e-4);
        prop_assert!(linf(&project_onto_simplex(inv.values()), invp.probs()) <= 1e-12);
    }

    #[test]
    fn likelihood_optimum_is_a_single_lattice_cluster((phi, rr) in instance(4)) {
        let grid = GridSpec::with_budget(phi.k(), 5_000).unwrap();
        let pts = near_optimal_lattice_points(&phi, &rr, &grid, 1e-8).unwrap();
        prop_assert!(!pts.is_empty());
        prop_assert!(lattice_diameter(&pts) <= 2, "{:?}", pts);
    }
}

/// Histogram sitting exactly on the boundary `g(1) = 0`, plus a direction
/// that crosses it.
fn boundary_instance(k: usize, eps: f64, e1_frac: f64) -> (Vec<f64>, RRParams) {
    let rr = params_from_epsilon(k, eps).unwrap();
    let q = rr.q();
    let e1 = e1_frac * q;
    let e2 = q * (1.0 - e1) / (1.0 - q);
    let rest = (1.0 - e1 - e2) / (k - 2) as f64;
    assert!(rest > e2);
    let mut v = vec![e1, e2];
    v.extend(std::iter::repeat(rest).take(k - 2));
    (v, rr)
}

#[test]
fn mle_is_continuous_across_zero_count_boundary() {
    for (k, eps, frac) in [(3, 1.0, 0.5), (5, 2.0, 0.1), (10, 0.7, 0.9), (40, 3.0, 0.0)] {
        let (base, rr) = boundary_instance(k, eps, frac);
        let phi = Distribution::new(base.clone()).unwrap();
        assert!(boundary_g(&phi, &rr, 1).abs() < 1e-14);
        // Both candidates coincide on the boundary.
        let a = zero_count_candidate(&phi, &rr, 1);
        let b = zero_count_candidate(&phi, &rr, 2);
        assert!(linf(&a, &b) < 1e-12, "{a:?} {b:?}");

        let shifted = |delta: f64| {
            let mut v = base.clone();
            v[1] += delta;
            v[2] -= delta;
            Distribution::new(v).unwrap()
        };
        let delta = 1e-9;
        let (lo, tlo) = estimate_mle(&shifted(-delta), &rr).unwrap();
        let (hi, thi) = estimate_mle(&shifted(delta), &rr).unwrap();
        assert_eq!(tlo.n_zeros, 2);
        assert_eq!(thi.n_zeros, 1);
        assert!(linf(lo.probs(), hi.probs()) < 1e-6);
    }
}

#[test]
fn ibu_approaches_mle() {
    use rand::Rng;
    for case in 0..20u64 {
        let mut rng = Seed::new(31, case).rng();
        let rr = params_from_epsilon(50, rng.random_range(0.5..4.0)).unwrap();
        let w: Vec<f64> = (0..50).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = w.iter().sum();
        let phi = Distribution::new(w.iter().map(|x| x / total).collect()).unwrap();
        let (mle, _) = estimate_mle(&phi, &rr).unwrap();
        let mut state = IbuState::new(50, 100_000).unwrap();
        let mut last = f64::INFINITY;
        let mut dist = f64::INFINITY;
        while state.t < 100_000 {
            state.step(&phi, &rr).unwrap();
            if state.t % 100 == 0 {
                dist = linf(state.theta.probs(), mle.probs());
                assert!(
                    dist <= last + 1e-12,
                    "case {case}: t={} {dist} > {last}",
                    state.t
                );
                last = dist;
                if dist < 1e-6 {
                    break;
                }
            }
        }
        assert!(dist < 1e-6, "case {case}: {dist}");
    }
}

#[test]
fn mse_shrinks_with_sample_size() {
    let k = 20;
    let rr = params_from_epsilon(k, 2.0).unwrap();
    let theta = zipf_distribution(ZipfSpec { k, s: 1.3 }).unwrap();
    let seeds = 50;
    let mut means = Vec::new();
    for (idx, n) in [1_000usize, 10_000, 100_000].into_iter().enumerate() {
        let mut acc = [0.0; 4];
        for s in 0..seeds {
            let phi =
                sampled_histogram(&theta, n, &rr, Seed::new(5, (idx * 1000 + s) as u64)).unwrap();
            let estimates = [
                estimate_inv(&phi, &rr).unwrap().into_vec(),
                estimate_invn(&phi, &rr).unwrap().into_vec(),
                estimate_invp(&phi, &rr).unwrap().into_vec(),
                estimate_mle(&phi, &rr).unwrap().0.into_vec(),
            ];
            for (a, e) in acc.iter_mut().zip(&estimates) {
                *a += mse(e, theta.probs()).unwrap() / seeds as f64;
            }
        }
        means.push((n, acc));
    }
    for w in means.windows(2) {
        for e in 0..4 {
            assert!(w[1].1[e] < w[0].1[e], "estimator {e}: {:?}", means);
        }
        // Inv: MSE * N is constant up to Monte-Carlo noise.
        let ratio = (w[0].1[0] * w[0].0 as f64) / (w[1].1[0] * w[1].0 as f64);
        assert!((1.0 / 1.5..=1.5).contains(&ratio), "ratio {ratio}");
    }
}
