use bdris_core::estimation::gamma_coefficient;
use bdris_core::linalg::{sample_cn_matrix, CMat, C64};
use bdris_core::metrics::{harvested_energy_bound, logistic, logistic_excess, logistic_offset, se_from_sinr};
use bdris_core::oracles::{run_link_monte_carlo, LinkScenario};
use bdris_core::precoding::orthogonal_projection;
use bdris_core::ris_channel::{delta_coefficient, ris_correlation_matrix, CorrelationModel};
use bdris_core::rng::{substream, Domain};
use bdris_core::scattering::{random_scattering, scattering_objective, symmetric_unitary_projection, validate_scattering};
use bdris_core::topology::generate_topology;
use bdris_core::{MetricsReport, NetworkStatistics, ScatteringMatrix, SystemConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_never_exceeds_its_variance(scale in 1e-16f64..1e2, tau in 1usize..40, rho in 1e-3f64..1e12) {
        let g = gamma_coefficient(tau as f64, rho, scale).unwrap();
        prop_assert!(g > 0.0 && g <= scale);
    }

    #[test]
    fn projector_is_idempotent_with_trace_l_minus_k(seed in 0u64..1000, l in 2usize..16, k in 1usize..8) {
        prop_assume!(k < l);
        let g = sample_cn_matrix(&mut substream(seed, Domain::Instance, 0), l, k);
        let b = orthogonal_projection(&g).unwrap();
        prop_assert!((&b * &b - &b).norm() < 1e-10);
        prop_assert!((b.trace() - C64::new((l - k) as f64, 0.0)).norm() < 1e-10);
        prop_assert!((&b * &g).norm() < 1e-10 * g.norm());
    }

    #[test]
    fn random_scattering_is_symmetric_unitary(seed in 0u64..10_000, n in 1usize..48) {
        let th = random_scattering(n, &mut substream(seed, Domain::RandomTheta, 0));
        let rep = validate_scattering(&th.theta, 1e-8, 1e-6).unwrap();
        prop_assert!(rep.passed);
    }

    #[test]
    fn projection_of_any_matrix_is_symmetric_unitary(seed in 0u64..10_000, n in 1usize..12) {
        let f = sample_cn_matrix(&mut substream(seed, Domain::Instance, 1), n, n);
        let f = (&f + f.transpose()) * C64::new(0.5, 0.0);
        let (th, _) = symmetric_unitary_projection(&f, 0).unwrap();
        prop_assert!(validate_scattering(&th, 1e-8, 1e-6).unwrap().passed);
    }

    #[test]
    fn objective_is_bounded_by_identity(seed in 0u64..1000, nh in 1usize..5, nv in 1usize..5) {
        let r = ris_correlation_matrix(nh, nv, 0.25, 0.25, 1.0);
        let n = nh * nv;
        let th = random_scattering(n, &mut substream(seed, Domain::RandomTheta, 0)).theta;
        let obj = scattering_objective(&th, &r).unwrap();
        let max = scattering_objective(&CMat::identity(n, n), &r).unwrap();
        prop_assert!(obj >= -1e-12 && obj <= max * (1.0 + 1e-12));
    }

    #[test]
    fn delta_is_at_least_beta(seed in 0u64..1000, beta in 0.0f64..2.0, w in 0.0f64..3.0, p in 0.0f64..3.0) {
        let r = ris_correlation_matrix(3, 2, 0.3, 0.3, 1.0).map(|x| C64::new(x, 0.0));
        let th = random_scattering(6, &mut substream(seed, Domain::RandomTheta, 0)).theta;
        let d = delta_coefficient(beta, &(&r * C64::new(w, 0.0)), &(&r * C64::new(p, 0.0)), &th).unwrap();
        prop_assert!(d >= beta);
    }

    #[test]
    fn logistic_excess_matches_direct_difference(e in 0.0f64..1.0) {
        let (xi, chi, phi) = (150.0, 0.014, 0.024);
        let direct = logistic(e, xi, chi, phi) - phi * logistic_offset(xi, chi);
        let stable = logistic_excess(e, xi, chi, phi);
        prop_assert!((direct - stable).abs() <= 1e-12 * phi);
        prop_assert!(stable >= 0.0);
    }

    #[test]
    fn he_bound_is_monotone_and_bounded(a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f = |q| harvested_energy_bound(q, 150.0, 0.014, 0.024);
        prop_assert!(f(lo) <= f(hi) * (1.0 + 1e-14));
        prop_assert!(f(hi) <= 0.024 + 1e-15);
    }

    #[test]
    fn se_is_monotone_in_sinr(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(se_from_sinr(lo, 8, 200) <= se_from_sinr(hi, 8, 200));
    }
}

fn small_config() -> SystemConfig {
    SystemConfig {
        num_aps: 6,
        antennas_per_ap: 8,
        num_info_users: 2,
        num_energy_users: 3,
        ris_elements_h: 3,
        ris_elements_v: 2,
        heuristic_realizations: 10,
        ..SystemConfig::default()
    }
}

#[test]
fn no_ris_metrics_do_not_depend_on_the_surface_size() {
    let mut a = small_config();
    let mut b = small_config();
    a.ris_elements_h = 1;
    a.ris_elements_v = 1;
    b.ris_elements_h = 5;
    b.ris_elements_v = 4;
    let eval = |c: &SystemConfig| {
        let net = generate_topology(c, &mut substream(5, Domain::Topology, 0)).unwrap();
        let corr = CorrelationModel::from_network(c, &net).unwrap();
        MetricsReport::evaluate(&NetworkStatistics::assemble(c, &net, &corr, None).unwrap()).unwrap()
    };
    assert_eq!(eval(&a), eval(&b));
}

#[test]
fn ris_never_lowers_harvested_energy() {
    let c = small_config();
    for t in 0..10 {
        let net = generate_topology(&c, &mut substream(6, Domain::Topology, t)).unwrap();
        let corr = CorrelationModel::from_network(&c, &net).unwrap();
        let th = random_scattering(c.num_elements(), &mut substream(6, Domain::RandomTheta, t));
        let with = MetricsReport::evaluate(&NetworkStatistics::assemble(&c, &net, &corr, th.active()).unwrap()).unwrap();
        let without = MetricsReport::evaluate(&NetworkStatistics::assemble(&c, &net, &corr, None).unwrap()).unwrap();
        for (x, y) in with.he_bound.iter().zip(&without.he_bound) {
            assert!(x >= y);
        }
        assert_eq!(with.se, without.se);
    }
}

#[test]
fn average_transmit_power_respects_the_budget() {
    let c = SystemConfig {
        num_aps: 3,
        antennas_per_ap: 256,
        ..small_config()
    };
    let net = generate_topology(&c, &mut substream(8, Domain::Topology, 0)).unwrap();
    let scn = LinkScenario::new(c, net, ScatteringMatrix::none(6)).unwrap();
    let mc = run_link_monte_carlo(&scn, 40_000, 3).unwrap();
    for m in 0..3 {
        let p = mc.power_ratio(m);
        assert!(p.mean >= 0.99 && p.mean <= 1.001 + 3.0 * p.std_error, "AP {m}: {p:?}");
        assert!(p.std_error < 3e-4, "AP {m}: {p:?}");
    }
}
