mod general {

    use nalgebra::DMatrix;

    use sde_contract::matrixkit::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;
        use proptest::prelude::*;

        fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(rows, data.len() / rows, data)
        }

        #[test]
        fn loewner_basic_cases() {
            let z = DMatrix::zeros(2, 2);
            let i = DMatrix::identity(2, 2);
            assert!(loewner_leq(&z, &i, 0.0).unwrap());
            assert!(!loewner_leq(&i, &z, 0.0).unwrap());
            let skew = m(2, &[0.0, -1.0, 1.0, 0.0]);
            assert!(loewner_leq(&skew, &z, 0.0).unwrap());
            assert!(loewner_leq(&i, &DMatrix::identity(3, 3), 0.0).is_err());
        }

        #[test]
        fn spd_rejects_indefinite() {
            assert!(SpdMatrix::new(m(2, &[1.0, 2.0, 2.0, 1.0])).is_err());
            assert!(SpdMatrix::new(m(2, &[1.0, 0.0, 0.0, 0.0])).is_err());
            assert!(SpdMatrix::new(m(2, &[2.0, 0.5, 0.5, 1.0])).is_ok());
        }

        #[test]
        fn gen_eig_diagonal_ratio() {
            let n = SpdMatrix::new(m(2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
            assert_relative_eq!(max_gen_eig(&m(2, &[4.0, 0.0, 0.0, 1.0]), &n).unwrap(), 2.0, epsilon = 1e-14);
            assert_relative_eq!(max_gen_eig(&DMatrix::identity(3, 3), &SpdMatrix::identity(3)).unwrap(), 1.0);
        }

        #[test]
        fn gen_eig_two_by_two_by_hand() {
            // det(S - hN) = 0 with S = [[1,-1/2],[-1/2,0]], N = [[3/2,1/2],[1/2,1]]:
            // (1 - 3h/2)(-h) - (-1/2 - h/2)^2 = 0  <=>  (5/4) h^2 - (3/2) h - 1/4 = 0
            let s = m(2, &[1.0, -0.5, -0.5, 0.0]);
            let n = SpdMatrix::new(m(2, &[1.5, 0.5, 0.5, 1.0])).unwrap();
            let (qa, qb, qc) = (1.25f64, -1.5f64, -0.25f64);
            let root = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
            let h = max_gen_eig(&s, &n).unwrap();
            assert_relative_eq!(h, root, epsilon = 1e-13);
            assert!(loewner_leq(&s, &(n.as_matrix() * (h + 1e-10)), 1e-10).unwrap());
            assert!(!loewner_leq(&s, &(n.as_matrix() * (h - 1e-6)), 0.0).unwrap());
        }

        #[test]
        fn sqrt_examples() {
            let r = sqrt_spd(&SpdMatrix::new(m(2, &[4.0, 0.0, 0.0, 9.0])).unwrap());
            assert_relative_eq!(r.as_matrix()[(0, 0)], 2.0, epsilon = 1e-15);
            assert_relative_eq!(r.as_matrix()[(1, 1)], 3.0, epsilon = 1e-15);
            assert_eq!(sqrt_spd(&SpdMatrix::identity(3)).as_matrix(), &DMatrix::identity(3, 3));
        }

        #[test]
        fn spectral_norm_of_rank_one() {
            let a = m(1, &[3.0, 4.0]);
            assert_relative_eq!(spectral_norm(&a), 5.0, epsilon = 1e-14);
        }

        #[test]
        fn block_homothety_detection() {
            let mut a = DMatrix::zeros(4, 4);
            a.view_mut((0, 0), (2, 2)).fill_with_identity();
            a.view_mut((0, 2), (2, 2)).copy_from(&(DMatrix::identity(2, 2) * 0.3));
            assert!(is_block_homothety(&a, 2, 1e-12));
            a[(0, 1)] = 0.1;
            assert!(!is_block_homothety(&a, 2, 1e-12));
        }

        fn random_spd(dim: usize, seed: u64) -> SpdMatrix {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
            SpdMatrix::new(&g * g.transpose() + DMatrix::identity(dim, dim) * 0.1).unwrap()
        }

        proptest! {
            #[test]
            fn gen_eig_is_minimal(dim in 1usize..=8, seed in 0u64..10_000) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
                let s = sym(&DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-2.0..2.0)));
                let n = random_spd(dim, seed);
                let h = max_gen_eig(&s, &n).unwrap();
                prop_assert!(loewner_leq(&s, &(n.as_matrix() * (h + 1e-9)), 1e-10).unwrap());
                let lower = h - 1e-6 * h.abs().max(1.0);
                prop_assert!(!loewner_leq(&s, &(n.as_matrix() * lower), 0.0).unwrap());
            }

            #[test]
            fn sqrt_squares_back(dim in 1usize..=8, seed in 0u64..10_000) {
                let n = random_spd(dim, seed);
                let r = sqrt_spd(&n);
                let back = r.as_matrix() * r.as_matrix();
                let err = (&back - n.as_matrix()).norm() / n.as_matrix().norm();
                prop_assert!(err < 1e-10);
                prop_assert!(r.min_eig() > 0.0);
                prop_assert!(n.cholesky().l().diagonal().iter().all(|d| *d > 0.0));
            }
        }
    }
}

mod jacobi {

    use nalgebra::DMatrix;

    use sde_contract::matrixkit::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;

        #[test]
        fn identity_has_unit_spectrum() {
            let e = sym_eig(&DMatrix::identity(3, 3)).unwrap();
            for v in e.values.iter() {
                assert_eq!(*v, 1.0);
            }
        }

        #[test]
        fn diagonal_keeps_axes() {
            let e = sym_eig(&DMatrix::from_row_slice(2, 2, &[5.0, 0.0, 0.0, 2.0])).unwrap();
            assert_eq!(e.values.as_slice(), &[2.0, 5.0]);
            assert_relative_eq!(e.vectors[(1, 0)].abs(), 1.0);
            assert_relative_eq!(e.vectors[(0, 1)].abs(), 1.0);
        }

        #[test]
        fn two_by_two_closed_form() {
            // characteristic polynomial x^2 - (5/4)x + 3/16 = 0
            let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 0.25]);
            let e = sym_eig(&s).unwrap();
            let d = 13f64.sqrt();
            assert_relative_eq!(e.values[0], (5.0 - d) / 8.0, epsilon = 1e-15);
            assert_relative_eq!(e.values[1], (5.0 + d) / 8.0, epsilon = 1e-15);
            assert_relative_eq!(e.values[0], 0.1743, epsilon = 1e-4);
            assert_relative_eq!(e.values[1], 1.0757, epsilon = 1e-4);
        }

        #[test]
        fn rejects_non_finite() {
            let s = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
            assert!(sym_eig(&s).is_err());
        }

        #[test]
        fn reconstructs_random_matrices() {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for n in 1..12 {
                let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3.0..3.0));
                let s = sym(&m);
                let e = sym_eig(&s).unwrap();
                let back = e.map(|x| x);
                let err = (&back - &s).norm() / s.norm().max(1e-300);
                assert!(err < 1e-12, "n={n} err={err}");
                let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n);
                assert!(orth.norm() < 1e-12);
                for k in 1..n {
                    assert!(e.values[k - 1] <= e.values[k]);
                }
            }
        }
    }
}

mod expm {

    use nalgebra::DMatrix;

    use sde_contract::matrixkit::*;

    mod tests {
        use super::*;
        use proptest::prelude::*;
        use sde_contract::matrixkit::{sym, sym_eig};

        #[test]
        fn zero_and_diagonal() {
            assert_eq!(expm(&DMatrix::zeros(3, 3)), DMatrix::identity(3, 3));
            let d = expm(&DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -2.0]));
            assert!((d[(0, 0)] - 0.3f64.exp()).abs() < 1e-15);
            assert!((d[(1, 1)] - (-2.0f64).exp()).abs() < 1e-15);
            assert_eq!(d[(0, 1)], 0.0);
        }

        #[test]
        fn rotation_generator() {
            let t = std::f64::consts::FRAC_PI_2;
            let r = expm(&DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]));
            let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
            assert!((r - want).abs().max() < 1e-14);
        }

        #[test]
        fn symmetric_agrees_with_eigendecomposition() {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            for n in 1..7 {
                let s = sym(&DMatrix::from_fn(n, n, |_, _| rng.random_range(-4.0..4.0)));
                let by_eig = sym_eig(&s).unwrap().map(f64::exp);
                let err = (expm(&s) - &by_eig).norm() / by_eig.norm();
                assert!(err < 1e-10, "n={n} err={err}");
            }
        }

        proptest! {
            #[test]
            fn inverse_pair(n in 1usize..=6, seed in 0u64..5000) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let norm = a.norm();
                let target = rng.random_range(0.0..5.0);
                if norm > 0.0 {
                    a *= target / norm;
                }
                let prod = expm(&a) * expm(&(-&a));
                prop_assert!((prod - DMatrix::identity(n, n)).abs().max() < 1e-9);
            }
        }
    }
}

mod lyapunov {

    use nalgebra::DMatrix;
    use sde_contract::error::Error;
    use sde_contract::matrixkit::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;
        use rand::{Rng, SeedableRng};

        fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(rows, data.len() / rows, data)
        }

        #[test]
        fn identity_friction() {
            for n in 1..4 {
                let (nm, kappa) = lyapunov_metric(&DMatrix::identity(n, n)).unwrap();
                assert!((nm.as_matrix() - DMatrix::identity(n, n) * 0.5).abs().max() < 1e-14);
                assert_relative_eq!(kappa, 1.0, epsilon = 1e-14);
            }
        }

        #[test]
        fn order_three_block_by_hand() {
            // BᵀN + NB = I with B = [[0,-1],[1,1]] gives the linear system
            //   2 n12 = 1,  n22 - n11 + n12 = 0,  -2 n12 + 2 n22 = 1
            // so n12 = 1/2, n22 = 1, n11 = 3/2.
            let (nm, kappa) = lyapunov_metric(&m(2, &[0.0, -1.0, 1.0, 1.0])).unwrap();
            let want = m(2, &[1.5, 0.5, 0.5, 1.0]);
            assert!((nm.as_matrix() - want).abs().max() < 1e-12);
            assert_relative_eq!(kappa, 1.0 / (2.5 + 1.25f64.sqrt()), epsilon = 1e-12);
            assert_relative_eq!(kappa, 0.2764, epsilon = 1e-4);
        }

        #[test]
        fn rotation_is_not_stable() {
            let err = lyapunov_metric(&m(2, &[0.0, 1.0, -1.0, 0.0])).unwrap_err();
            assert!(matches!(err, Error::NotStable { .. }));
            let err = lyapunov_metric(&m(2, &[-1.0, 0.0, 0.0, 2.0])).unwrap_err();
            assert!(matches!(err, Error::NotStable { .. }));
        }

        #[test]
        fn random_stable_matrices_contract() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
            for trial in 0..100 {
                let p = 1 + trial % 6;
                let mut b = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
                let min_re = b.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
                let shift = rng.random_range(0.05..1.0) - min_re;
                for i in 0..p {
                    b[(i, i)] += shift;
                }
                let (n, kappa) = lyapunov_metric(&b).unwrap();
                assert!(n.min_eig() > 0.0);
                let nb = sym(&(n.as_matrix() * &b));
                assert!(loewner_leq(&(n.as_matrix() * kappa), &nb, 1e-10).unwrap());
            }
        }

        #[test]
        fn zero_noise_and_scalar_variance() {
            let b = m(2, &[0.0, -1.0, 1.0, 1.0]);
            let o = ou_exact_moments(&b, &DMatrix::zeros(2, 2), 2.0, 0.3).unwrap();
            assert!(o.cov.abs().max() < 1e-15);
            assert!((o.mean_map - expm(&(&b * -0.6))).abs().max() < 1e-15);

            for t in [0.01, 0.5, 2.0] {
                let o = ou_exact_moments(&DMatrix::identity(2, 2), &(DMatrix::identity(2, 2) * 2f64.sqrt()), 1.0, t)
                    .unwrap();
                let v = 1.0 - (-2.0 * t).exp();
                assert!((o.cov - DMatrix::identity(2, 2) * v).abs().max() < 1e-13);
            }
        }

        #[test]
        fn fluctuation_dissipation_keeps_standard_gaussian() {
            let b = m(2, &[0.0, -1.0, 1.0, 1.0]);
            let sigma = sde_contract::matrixkit::sqrt_psd(&(&b + b.transpose()), 1e-12).unwrap();
            for (gamma, delta) in [(1.0, 0.1), (3.0, 0.05), (0.7, 1.3)] {
                let o = ou_exact_moments(&b, &sigma, gamma, delta).unwrap();
                let fixed = &o.cov + &o.mean_map * o.mean_map.transpose();
                assert!((fixed - DMatrix::identity(2, 2)).abs().max() < 1e-8);
            }
        }

        #[test]
        fn covariance_matches_fine_euler() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            for p in 1..=4 {
                let b = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
                let sigma = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
                let (gamma, delta) = (1.3, 0.4);
                let exact = ou_exact_moments(&b, &sigma, gamma, delta).unwrap();

                let a = &b * (-gamma);
                let q = &sigma * sigma.transpose() * gamma;
                let steps = 10_000;
                let h = delta / steps as f64;
                let mut c = DMatrix::<f64>::zeros(p, p);
                // Heun steps of dC/dt = AC + CAᵀ + Q
                for _ in 0..steps {
                    let k1 = &a * &c + &c * a.transpose() + &q;
                    let pred = &c + &k1 * h;
                    let k2 = &a * &pred + &pred * a.transpose() + &q;
                    c += (k1 + k2) * (0.5 * h);
                }
                assert!((exact.cov - c).abs().max() < 1e-4, "p={p}");
            }
        }

        #[test]
        fn rejects_nonpositive_step() {
            assert!(ou_moments_raw(&DMatrix::identity(1, 1), &DMatrix::identity(1, 1), 0.0).is_err());
        }
    }
}
