use mclab_core::linalg::{eigh, spectral_norm, Matrix, C64};
use mclab_core::quantum::*;
use mclab_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

// chi-square quantile for 5 degrees of freedom at upper tail 1e-4
const CHI2_5DOF_1E4: f64 = 25.74;

fn test_states() -> Vec<DensityMatrix> {
    let mut rng = stream(71, 0);
    let mixed = DensityMatrix::new(Matrix::from_rows(&[[0.7, 0.1], [0.1, 0.3]])).unwrap();
    vec![
        DensityMatrix::maximally_mixed(2),
        DensityMatrix::basis(2, 0),
        DensityMatrix::basis(2, 1),
        DensityMatrix::random_pure(2, &mut rng),
        DensityMatrix::random_pure(2, &mut rng),
        mixed,
    ]
}

fn random_density(d: usize, rng: &mut impl Rng) -> Matrix {
    // convex mix of a few random pure states
    let k = rng.random_range(1..=d + 1);
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    (0..k).fold(Matrix::zeros(d, d), |acc, i| {
        &acc + &DensityMatrix::random_pure(d, rng).matrix().scale_real(w[i] / total)
    })
}

#[test]
fn estimator_mean_is_the_state() {
    let design = builtin_design("mub2").unwrap();
    for rho in test_states() {
        // Born weights by explicit traces, independent of the library's probability code
        let mut mean = Matrix::zeros(2, 2);
        for j in 0..design.len() {
            let h = design.projector(j).scale_real(2.0 / 6.0);
            let p = (&h * rho.matrix()).trace().re;
            mean = &mean + &single_shot_estimator(&design, j).scale_real(p);
        }
        assert!(mean.max_abs_diff(rho.matrix()) < 1e-10);
        assert!(estimator_mean(&design, &rho).unwrap().max_abs_diff(rho.matrix()) < 1e-10);
    }
}

#[test]
fn design_examples() {
    let design = builtin_design("mub2").unwrap();
    assert_eq!(design.len(), 6);
    assert!(design.effect_sum().max_abs_diff(&Matrix::identity(2)) <= 1e-12);
    assert!(reconstruction_defect(&design) <= 1e-12);
    assert!(validate_design(&design, 1e-9));
    assert!(matches!(builtin_design("sic3"), Err(QuantumError::UnknownDesign(_))));

    let mut v = design.vectors().to_vec();
    v[2] = v[2].iter().map(|z| z * 1.1).collect();
    assert!(!validate_design(&MeasurementDesign::new(2, v).unwrap(), 1e-9));
    let single = MeasurementDesign::new(2, vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]]).unwrap();
    assert!(!validate_design(&single, 1e-9));

    let p = born_probabilities(&design, &DensityMatrix::maximally_mixed(2)).unwrap();
    assert!(p.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));
    let p = born_probabilities(&design, &DensityMatrix::basis(2, 1)).unwrap();
    assert!((p[1] - 1.0 / 3.0).abs() < 1e-15 && p[0] == 0.0);

    assert_eq!(tomography_sample_count(2, 0.5, 0.1).unwrap(), 148);
    assert!(tomography_sample_count(1, 0.5, 0.1).unwrap() > 0);
}

#[test]
fn born_frequencies_pass_chi_square() {
    let design = builtin_design("mub2").unwrap();
    let n = 100_000;
    let states = [DensityMatrix::maximally_mixed(2), DensityMatrix::random_pure(2, &mut stream(72, 0))];
    for (s, rho) in states.iter().enumerate() {
        let p = born_probabilities(&design, rho).unwrap();
        assert!(p.iter().all(|&x| x > 1e-3), "{p:?}");
        let mut rng = stream(73, s as u64);
        let mut counts = [0usize; 6];
        for _ in 0..n {
            counts[born_sample(&design, rho, &mut rng).unwrap()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &q)| (c as f64 - n as f64 * q).powi(2) / (n as f64 * q))
            .sum();
        assert!(chi2 < CHI2_5DOF_1E4, "state {s}: chi2 = {chi2}");
    }
}

#[test]
fn projection_beats_random_feasible_points() {
    let mut rng = stream(74, 0);
    for _ in 0..10 {
        let raw = Matrix::from_fn(3, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let s = raw.hermitian_part();
        let proj = project_to_density(&s).unwrap();
        let best = (proj.matrix() - &s).frobenius();
        for _ in 0..100 {
            let sigma = random_density(3, &mut rng);
            assert!(best <= (&sigma - &s).frobenius() + 1e-12);
        }
    }
    let fixed = DensityMatrix::random_pure(3, &mut rng);
    assert!(project_to_density(fixed.matrix()).unwrap().matrix().max_abs_diff(fixed.matrix()) < 1e-12);
    let shifted = project_to_density(&Matrix::from_diag(&[0.6, 0.6])).unwrap();
    assert!(shifted.matrix().max_abs_diff(&Matrix::from_diag(&[0.5, 0.5])) < 1e-15);
}

#[test]
fn projected_estimator_trace_norm_comparison() {
    let design = builtin_design("mub2").unwrap();
    for (s, rho) in test_states().iter().enumerate() {
        let r = rho.rank(1e-9).unwrap();
        for t in 0..50 {
            let run = tomography_estimate(&design, rho, 148, &mut stream(75, (s * 100 + t) as u64)).unwrap();
            let lhs = trace_distance(run.rho_hat.matrix(), rho.matrix()).unwrap();
            let rhs = 4.0 * r as f64 * spectral_norm(&(&run.s_n - rho.matrix())).unwrap();
            assert!(lhs <= rhs + 1e-12, "state {s} run {t}: {lhs} > {rhs}");
            assert_eq!(run.counts.iter().sum::<usize>(), 148);
        }
    }
}

#[test]
fn channel_error_dominates_state_distances() {
    let h = HamiltonianSum::pauli_xz(1).unwrap();
    let u = h.target_unitary().unwrap();
    let q = random_product(&h, 20, &mut stream(76, 0)).unwrap();
    let bound = channel_error(&q, &u).unwrap();
    let mut rng = stream(76, 1);
    for _ in 0..20 {
        let rho = DensityMatrix::random_pure(2, &mut rng);
        assert!(channel_distance(&q, &u, rho.matrix()).unwrap() <= bound + 1e-12);
    }
}

#[test]
fn factors_stay_near_their_mean() {
    for (h, n) in [(HamiltonianSum::pauli_xz(1).unwrap(), 10), (HamiltonianSum::pauli_xz(2).unwrap(), 7)] {
        let mean = trotter_bias(&h, n).unwrap().mean_factor;
        let l = h.strength();
        let mut rng = stream(77, n as u64);
        for _ in 0..50 {
            let f = trotter_factor(&h, n, &mut rng).unwrap();
            assert!(spectral_norm(&(&f.y - &mean)).unwrap() <= 2.0 * l / n as f64 + 1e-12);
        }
    }
}

#[test]
fn trotter_examples() {
    let h = HamiltonianSum::pauli_xz(1).unwrap();
    let b = trotter_bias(&h, 100).unwrap();
    assert!(b.per_factor_gap <= 4e-4);
    let q = random_product(&h, 1, &mut stream(78, 0)).unwrap();
    let y = trotter_factor(&h, 1, &mut stream(78, 0)).unwrap().y;
    assert!(q.max_abs_diff(&y) < 1e-15);
    assert!(matches!(
        HamiltonianSum::new(vec![Matrix::zeros(2, 2)]).and_then(|z| trotter_factor(&z, 3, &mut stream(0, 0))),
        Err(QuantumError::ZeroInteraction)
    ));
}

#[test]
fn design_file_round_trip() {
    let design = builtin_design("mub2").unwrap();
    let back = design_from_text(&design_to_text(&design)).unwrap();
    assert_eq!(back.vectors(), design.vectors());
    let dir = std::env::temp_dir().join(format!("mclab-design-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mub2.txt");
    write_design(&path, &design).unwrap();
    assert_eq!(read_design(&path).unwrap().vectors(), design.vectors());
    std::fs::write(&path, "2\n1 0 0 0\n").unwrap();
    assert!(read_design(&path).is_err(), "a single vector is not a design");
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_in_density_set(entries in prop::collection::vec(-2.0..2.0f64, 18)) {
        let raw = Matrix::from_fn(3, 3, |i, j| C64::new(entries[i * 3 + j], entries[9 + i * 3 + j]));
        let rho = project_to_density(&raw.hermitian_part()).unwrap();
        let m = rho.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(eigh(m).unwrap().lambda_min() >= -1e-12);
        prop_assert!(DensityMatrix::new(m.clone()).is_ok());
    }

    #[test]
    fn simplex_projection_is_feasible_and_idempotent(v in prop::collection::vec(-3.0..3.0f64, 1..8)) {
        let p = project_simplex(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        let again = project_simplex(&p);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_mean_for_random_states(seed in 0u64..10_000) {
        let design = builtin_design("mub2").unwrap();
        let rho = DensityMatrix::new(random_density(2, &mut stream(seed, 0)).hermitian_part()).unwrap();
        prop_assert!(estimator_mean(&design, &rho).unwrap().max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn random_products_are_unitary(n in 1usize..40, seed in 0u64..1000) {
        let h = HamiltonianSum::pauli_xz(2).unwrap();
        let q = random_product(&h, n, &mut stream(seed, 0)).unwrap();
        let defect = spectral_norm(&(&(&q.adjoint() * &q) - &Matrix::identity(4))).unwrap();
        prop_assert!(defect <= n as f64 * 1e-10);
    }
}
