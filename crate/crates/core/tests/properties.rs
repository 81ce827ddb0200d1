use num_complex::Complex64;
use proptest::prelude::*;
use sqkd::analysis::{find_threshold, sweep, Config};
use sqkd::attack::{depolarizing_isometry, oracle_record, two_pass_attack};
use sqkd::channel::{joint_stats, raw_key_joint, reflected_mub_error, two_pass_error, MubConvention, NoiseModel, Scenario};
use sqkd::keyrate::{eigen_pair, key_rate, key_rate_from_stats, n_pairs, supported_mubs, BoundReading, EigenEntropy};
use sqkd::mub::mubs_for;
use sqkd::numerics::{binary_entropy, c64, hermitian_eigen, hermitian_eigenvalues, shannon_entropy, von_neumann_entropy, ComplexMatrix, ProbDist};
use sqkd::sim::{simulate_counts, ProtocolConfig};

fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(3usize), Just(4usize)]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![Just(Scenario::Dependent), Just(Scenario::Independent)]
}

fn convention() -> impl Strategy<Value = MubConvention> {
    prop_oneof![Just(MubConvention::PerOutcome), Just(MubConvention::TotalSplit)]
}

fn reading() -> impl Strategy<Value = BoundReading> {
    prop_oneof![Just(BoundReading::default()), Just(BoundReading::normalized())]
}

/// (d, n_mubs, q) with q ∈ [0, 1/d].
fn point() -> impl Strategy<Value = (usize, usize, f64)> {
    dim().prop_flat_map(|d| {
        let ns = supported_mubs(d).to_vec();
        (Just(d), proptest::sample::select(ns), 0.0..=1.0 / d as f64)
    })
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..1.0f64, n)
        .prop_filter("non-zero", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| {
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec(-1.0..1.0f64, 2 * n * n).prop_map(move |v| {
        let raw = ComplexMatrix::from_fn(n, n, |i, j| c64(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        ComplexMatrix::from_fn(n, n, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5)
    })
}

fn eigen_term(l1: f64, l2: f64, mode: EigenEntropy) -> f64 {
    match mode {
        EigenEntropy::SummedBinary => binary_entropy(l1) + binary_entropy(l2),
        EigenEntropy::Pair => shannon_entropy(&ProbDist::new([l1, l2]).unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_permutation_invariant_and_concave(p in weights(6), q in weights(6), shift in 0usize..6) {
        let hp = shannon_entropy(&ProbDist::normalized(p.clone()).unwrap());
        let mut rotated = p.clone();
        rotated.rotate_left(shift);
        prop_assert!((shannon_entropy(&ProbDist::normalized(rotated).unwrap()) - hp).abs() < 1e-12);
        let hq = shannon_entropy(&ProbDist::normalized(q.clone()).unwrap());
        let mix = ProbDist::normalized(p.iter().zip(&q).map(|(a, b)| 0.5 * a + 0.5 * b)).unwrap();
        prop_assert!(shannon_entropy(&mix) >= 0.5 * hp + 0.5 * hq - 1e-9);
    }

    #[test]
    fn eigenvalues_sum_to_trace(m in hermitian(5)) {
        let e = hermitian_eigen(&m).unwrap();
        let sum: f64 = e.values.iter().sum();
        prop_assert!((sum - m.trace().re).abs() < 1e-10);
        prop_assert!(e.reconstruction_residual(&m) < 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn von_neumann_is_unitarily_invariant(w in weights(4), h in hermitian(4)) {
        let rho = ComplexMatrix::diagonal(ProbDist::normalized(w).unwrap().weights());
        let u = hermitian_eigen(&h).unwrap().vectors;
        let rotated = u.matmul(&rho).matmul(&u.adjoint());
        let a = von_neumann_entropy(&rho).unwrap();
        let b = von_neumann_entropy(&rotated).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn analytic_statistics_are_consistent(d in dim(), q in 0.0..=1.0f64, s in scenario(), c in convention()) {
        let q = q / d as f64;
        let model = NoiseModel::new(d, q, s, c).unwrap();
        let stats = joint_stats(&model).unwrap();
        prop_assert!(stats.validate(1e-12).is_ok());
        for a in 0..d {
            prop_assert!((stats.slice_sum(a) - 1.0).abs() < 1e-12);
        }
        let joint = raw_key_joint(&model).unwrap();
        let h = joint.h_b_given_a().unwrap();
        prop_assert!(h >= -1e-12 && h <= (d as f64).log2() + 1e-12);
    }

    #[test]
    fn breakdown_invariants((d, n, q) in point(), s in scenario(), c in convention(), r in reading()) {
        let model = NoiseModel::new(d, q, s, c).unwrap();
        let b = key_rate(&model, n, r).unwrap();
        prop_assert!((b.t.total() - d as f64).abs() < 1e-12);
        prop_assert!((b.lambda1 + b.lambda2 - 1.0).abs() < 1e-12);
        prop_assert!(b.lambda1 >= 0.5 - 1e-12 && b.lambda1 <= 1.0 + 1e-12);
        prop_assert!(b.reconstruction_residual() <= 1e-12);
    }

    /// The rate is continuous but not Lipschitz: x·log x terms give infinite
    /// slope at Q = 0 and where λ̃1 leaves 1. Refining the step by 100× must
    /// shrink every jump by at least 5× and bring it under 1e−2.
    #[test]
    fn rate_is_continuous((d, n, q) in point(), s in scenario(), r in reading()) {
        let cfg = Config::new(d, n, s).unwrap().with_reading(r);
        let q = q.min(1.0 / d as f64 - 1e-4);
        let r0 = cfg.rate(q).unwrap();
        let coarse = (cfg.rate(q + 1e-4).unwrap() - r0).abs();
        let fine = (cfg.rate(q + 1e-6).unwrap() - r0).abs();
        prop_assert!(fine < 1e-2, "fine jump {fine} at Q={q}");
        prop_assert!(coarse < 1e-9 || fine <= coarse / 5.0, "jumps {coarse} -> {fine} at Q={q}");
    }

    #[test]
    fn more_bases_never_hurt_while_positive(d in dim(), q in 0.0..=1.0f64, s in scenario()) {
        let q = q / d as f64;
        let rates: Vec<f64> = supported_mubs(d)
            .iter()
            .map(|&n| Config::new(d, n, s).unwrap().rate(q).unwrap())
            .collect();
        if rates.iter().all(|&r| r > 0.0) {
            prop_assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{rates:?} at Q={q}");
        }
    }

    #[test]
    fn eigen_pair_matches_rank_two_grams(
        d in dim(),
        raw in proptest::collection::vec((0.2..1.0f64, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU), 4),
    ) {
        let vectors: Vec<[Complex64; 2]> = raw[..d]
            .iter()
            .map(|&(r, th, ph)| [c64(r * th.cos(), 0.0), Complex64::from_polar(r * th.sin(), ph)])
            .collect();
        let g = ComplexMatrix::from_fn(d, d, |a, b| {
            vectors[a][0].conj() * vectors[b][0] + vectors[a][1].conj() * vectors[b][1]
        });
        let diag: Vec<f64> = (0..d).map(|a| g[(a, a)].re).collect();
        let mut p = 0.0;
        for a in 0..d {
            for b in a + 1..d {
                p += g[(a, b)].norm_sqr();
            }
        }
        let e = eigen_pair(&diag, p).unwrap();
        let values = hermitian_eigenvalues(&g).unwrap();
        let tr: f64 = values.iter().sum();
        prop_assert!((e.lambda1 - values[0] / tr).abs() < 1e-9);
        prop_assert!((e.lambda2 - values[1] / tr).abs() < 1e-9);
    }

    #[test]
    fn depolarizing_attack_is_an_isometry(d in dim(), q in 0.0..=1.0f64) {
        let q = q / d as f64;
        prop_assert!(depolarizing_isometry(d, q).unwrap().isometry_residual() <= 1e-12);
    }

    #[test]
    fn composed_attack_reproduces_independent_error(d in dim(), q in 0.0..=0.05f64) {
        let attack = two_pass_attack(d, q).unwrap();
        let model = NoiseModel::new(d, q, Scenario::Independent, MubConvention::TotalSplit).unwrap();
        let expected = reflected_mub_error(&model).per_pair;
        for basis in mubs_for(d).unwrap().test_bases(d + 1).unwrap() {
            let table = attack.pair_errors(basis).unwrap();
            for i in 0..d {
                for j in (0..d).filter(|&j| j != i) {
                    prop_assert!((table.get(i, j) - expected).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn simulated_counts_are_consistent(d in dim(), q in 0.0..=1.0f64, seed in any::<u64>(), s in scenario()) {
        let q = q / d as f64;
        let cfg = ProtocolConfig::new(d, d, q, s, 3000, seed).unwrap();
        let e = simulate_counts(&cfg).unwrap();
        prop_assert_eq!(e.measure_resend_rounds + e.reflect_rounds, 3000);
        prop_assert_eq!(e.counts.iter().sum::<u64>(), e.measure_resend_rounds);
        prop_assert_eq!(&e, &simulate_counts(&cfg).unwrap());
    }
}

#[test]
fn independent_error_closed_forms() {
    for k in 0..=100 {
        let q3 = k as f64 / 300.0;
        assert!((two_pass_error(3, q3) - 2.0 * q3 * (2.0 - 3.0 * q3)).abs() < 1e-14);
        let q4 = k as f64 / 400.0;
        assert!((two_pass_error(4, q4) - 2.0 * q4 * (3.0 - 6.0 * q4)).abs() < 1e-14);
    }
}

/// Open curves (no crossing below 1/d) all report 1/d, so strict ordering
/// is only required between closed thresholds.
#[test]
fn thresholds_order_by_bases_and_scenario() {
    for d in [3, 4] {
        for c in MubConvention::ALL {
            let mut previous = [(0.0, false); 2];
            for &n in supported_mubs(d) {
                let t: Vec<_> = Scenario::ALL
                    .iter()
                    .map(|&s| find_threshold(&Config::new(d, n, s).unwrap().with_convention(c)).unwrap())
                    .collect();
                assert!(
                    t[0].q_star > t[1].q_star,
                    "d={d} n={n} {c}: dependent {} <= independent {}",
                    t[0].q_star,
                    t[1].q_star
                );
                for i in 0..2 {
                    let (q_prev, open_prev) = previous[i];
                    if open_prev && t[i].open {
                        assert_eq!(t[i].q_star, q_prev);
                    } else {
                        assert!(t[i].q_star > q_prev, "d={d} n={n} {c}: not increasing");
                    }
                    previous[i] = (t[i].q_star, t[i].open);
                }
            }
        }
    }
}

#[test]
fn rate_decreases_below_threshold() {
    for cfg in Config::all() {
        let t = find_threshold(&cfg).unwrap();
        if t.open {
            continue;
        }
        let grid: Vec<f64> = (0..200).map(|k| t.q_star * k as f64 / 200.0).collect();
        let rows = sweep(&cfg, &grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].r <= w[0].r + 1e-12, "{cfg:?}: r rises at Q={}", w[1].q);
        }
    }
}

#[test]
fn thresholds_do_not_depend_on_thread_count() {
    let cfg = Config::new(4, 3, Scenario::Independent).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| find_threshold(&cfg).unwrap());
    let b = three.install(|| find_threshold(&cfg).unwrap());
    assert_eq!(a, b);
}

/// Oracle check of the eigenvalue step. Under the normalized reading p_eig
/// never exceeds the oracle's true Σ|z|², and the pipeline's eigen term is at
/// least the true entropy of the normalized no-error operator, so S(EC) is
/// never underestimated. Under the direct reading the same holds wherever
/// p_eig ≤ Σ|z|².
#[test]
fn eigen_term_is_conservative_for_oracle_attack() {
    let mut compared = 0;
    let mut violations = Vec::new();
    for d in [3, 4] {
        for &n in supported_mubs(d) {
            for r in [BoundReading::default(), BoundReading::normalized()] {
                for k in 0..=50 {
                    let q = 0.05 * k as f64 / 50.0;
                    let rec = oracle_record(d, q, n).unwrap();
                    let model = NoiseModel::new(d, q, Scenario::Independent, MubConvention::TotalSplit).unwrap();
                    let joint = raw_key_joint(&model).unwrap();
                    let b = key_rate_from_stats(&rec.stats, &joint, n, r).unwrap();
                    if b.overlap.p_eig > rec.p_true + 1e-12 {
                        assert_ne!(r, BoundReading::normalized(), "d={d} n={n} Q={q}: p_eig above true value");
                        continue;
                    }
                    compared += 1;
                    let truth = rec.sigma1_entropy().unwrap();
                    let pipeline = eigen_term(b.lambda1, b.lambda2, r.eigen_entropy);
                    if pipeline < truth - 1e-9 {
                        violations.push(format!("d={d} n={n} {r} Q={q}: {pipeline} < {truth}"));
                    }
                }
            }
        }
    }
    assert!(compared >= 6 * 51);
    assert!(violations.is_empty(), "{} of {compared}: {:#?}", violations.len(), &violations[..violations.len().min(5)]);
}

#[test]
fn n_pairs_counts_unordered_pairs() {
    assert_eq!(n_pairs(3), 3);
    assert_eq!(n_pairs(4), 6);
}
