mod check {

    use sde_contract::certify::*;

    mod tests {
        use super::*;
        use sde_contract::certify::{best_rate, langevin_metric_simple, HessianBounds};
        use sde_contract::matrixkit::{spectral_norm, sym, SpdMatrix};
        use sde_contract::models::{cosine_modulated_potential, langevin_drift, quadratic_potential};

        #[test]
        fn quadratic_potential_is_within_tolerance() {
            let u = quadratic_potential(SpdMatrix::identity(2).scaled(4.0).unwrap());
            let model = langevin_drift(u, 4.0).unwrap();
            let cert = langevin_metric_simple(HessianBounds::new(4.0, 4.0).unwrap(), 4.0, 2).unwrap();
            let r = check_cont_r(&model, &cert, &sample_states(4, 50, 5.0, 1), 1e-10).unwrap();
            assert!(r.passes && r.endpoint_certified);
            assert!(r.max_violation <= 1e-10);
        }

        #[test]
        fn inflated_best_rate_fails_where_curvature_is_lowest() {
            let bounds = HessianBounds::new(1.0, 4.0).unwrap();
            let model = langevin_drift(cosine_modulated_potential(bounds, 1), 4.0).unwrap();
            let cert = langevin_metric_simple(bounds, 4.0, 1).unwrap();
            let tight = best_rate(&cert.metric, bounds, 4.0).unwrap();
            let probe = cert.with_rho(1.1 * tight);
            let pi = std::f64::consts::PI;
            let pts = vec![vec![0.0, 0.0], vec![pi, 0.3], vec![1.0, -1.0]];
            let r = check_cont_r(&model, &probe, &pts, 1e-10).unwrap();
            assert!(!r.passes);
            assert!(r.max_violation > 0.0);
            let at_pi = cont_r_violation(probe.metric.as_matrix(), &model.jacobian(&pts[1]), probe.rho);
            assert!(at_pi > 0.0);
            let at_zero = cont_r_violation(probe.metric.as_matrix(), &model.jacobian(&pts[0]), probe.rho);
            assert!(at_zero < 0.0);

            // the certified rate itself is not tight: inflating it by 10% still passes
            let mild = cert.with_rho(1.1 * cert.rho);
            assert!(check_cont_r(&model, &mild, &pts, 1e-10).unwrap().passes);
        }

        #[test]
        fn vacuous_rate_always_passes() {
            let bounds = HessianBounds::new(1.0, 4.0).unwrap();
            let model = langevin_drift(cosine_modulated_potential(bounds, 1), 1.0).unwrap();
            let m = SpdMatrix::identity(2);
            let pts = sample_states(2, 100, 4.0, 2);
            let big = pts.iter().map(|z| spectral_norm(&sym(&model.jacobian(z)))).fold(0.0, f64::max);
            let cert = ContractionCertificate::user_supplied(m, -2.0 * big - 1.0);
            let r = check_cont_r(&model, &cert, &pts, 0.0).unwrap();
            assert!(r.passes);
        }

        #[test]
        fn dimension_mismatch_is_an_error() {
            let bounds = HessianBounds::new(1.0, 4.0).unwrap();
            let model = langevin_drift(cosine_modulated_potential(bounds, 2), 4.0).unwrap();
            let cert = langevin_metric_simple(bounds, 4.0, 1).unwrap();
            assert!(check_cont_r(&model, &cert, &[vec![0.0; 4]], 1e-10).is_err());
        }
    }
}

mod functional {

    use nalgebra::DMatrix;

    use sde_contract::matrixkit::*;

    use sde_contract::certify::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;

        fn diag(v: &[f64]) -> DMatrix<f64> {
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
        }

        #[test]
        fn sigma_norm_of_diagonal_case() {
            let m = SpdMatrix::new(diag(&[4.0, 1.0])).unwrap();
            let s = diag(&[0.0, 3.0]);
            assert_relative_eq!(sigma_m_norm(&s, &m), 3.0, epsilon = 1e-12);
            let s = diag(&[1.0, 1.0]);
            assert_relative_eq!(sigma_m_norm(&s, &m), 2.0, epsilon = 1e-12);
        }

        #[test]
        fn log_sobolev_limits() {
            let m = SpdMatrix::identity(2);
            let s = diag(&[0.0, 2.0f64.sqrt()]);
            assert_eq!(log_sobolev_constant(&s, &m, 0.5, 0.0), 0.0);
            assert_relative_eq!(log_sobolev_constant(&s, &m, 0.5, 1e4), 2.0 / 0.5, epsilon = 1e-12);
            assert_relative_eq!(log_sobolev_constant(&s, &m, 0.0, 1.0), 4.0, epsilon = 1e-12);
            // ρ → 0 is continuous
            let near = log_sobolev_constant(&s, &m, 1e-9, 1.0);
            assert_relative_eq!(near, 4.0, epsilon = 1e-7);
            // negative rates are allowed and grow like e^{2|ρ|t}
            let neg = log_sobolev_constant(&s, &m, -1.0, 1.0);
            assert_relative_eq!(neg, 2.0 * ((2.0f64).exp() - 1.0), epsilon = 1e-12);
        }

        #[test]
        fn concentration_shape() {
            assert_eq!(concentration_bound(10.0, 0.0, 0.3, 1.0, 2.0), 1.0);
            let a = concentration_bound(10.0, 0.2, 0.3, 1.0, 2.0).ln();
            let b = concentration_bound(10.0, 0.4, 0.3, 1.0, 2.0).ln();
            assert_relative_eq!(b / a, 4.0, epsilon = 1e-12);
            let mut prev = 1.0;
            for t in [1.0, 10.0, 100.0, 1000.0] {
                let p = concentration_bound(t, 0.2, 0.3, 1.0, 2.0);
                assert!(p < prev);
                prev = p;
            }
            let t = 1e6;
            let p = concentration_bound(t, 0.002, 0.3, 1.0, 2.0);
            let asym_small = (-t * 0.09 * 0.002f64.powi(2) / 2.0).exp();
            assert_relative_eq!(p.ln() / asym_small.ln(), 1.0, epsilon = 1e-5);
            assert_relative_eq!(bias_bound(50.0, 0.25, 2.0), 0.16, epsilon = 1e-15);
        }

        #[test]
        fn discrete_variants_approach_continuous() {
            // t₀ = T/n, n → ∞ recovers the continuous bounds
            let (t, rho, s, cp, u) = (20.0, 0.4, 1.3, 0.7, 0.3);
            let cont = concentration_bound(t, u, rho, s, cp);
            let n = 200_000;
            let disc = discrete_concentration_bound(n, t / n as f64, u, rho, s, cp);
            assert_relative_eq!(disc.ln(), cont.ln(), max_relative = 1e-3);
            let b = discrete_bias_bound(n, t / n as f64, rho, 1.5);
            assert_relative_eq!(b, bias_bound(t, rho, 1.5), max_relative = 1e-3);
        }

        #[test]
        fn l2_prefactor() {
            let i = SpdMatrix::identity(3);
            assert_relative_eq!(l2_decay_bound(&i, 0.7, 0.0), 3.0f64.sqrt(), epsilon = 1e-12);
            assert_relative_eq!(l2_decay_bound(&i, 0.7, 2.0), 3.0f64.sqrt() * (-1.4f64).exp(), epsilon = 1e-12);
            let n = SpdMatrix::new(diag(&[2.0, 0.5])).unwrap();
            assert_relative_eq!(l2_decay_bound(&n, 1.0, 0.0), 12.0f64.sqrt(), epsilon = 1e-12);
        }
    }
}

mod generalized {

    use nalgebra::DMatrix;
    use sde_contract::certify::*;
    use sde_contract::error::Error;
    use sde_contract::matrixkit::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;
        use sde_contract::models::order_k_system;

        fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(rows, data.len() / rows, data)
        }

        #[test]
        fn schur_examples() {
            let (e, d) = schur_reduction(&m(2, &[0.0, -1.0, 1.0, 1.0]), 1).unwrap();
            assert_eq!(e.as_matrix()[(0, 0)], 1.0);
            assert_eq!(d, m(1, &[-1.0]));

            let (e, d) = schur_reduction(&DMatrix::identity(3, 3), 3).unwrap();
            assert_eq!(e.as_matrix(), &DMatrix::identity(3, 3));
            assert_eq!(d.shape(), (3, 0));

            let (_, b3) = order_k_system(3, 1).unwrap();
            let (e, d) = schur_reduction(&b3, 1).unwrap();
            assert!((d.clone() - m(1, &[-1.0, -1.0])).abs().max() < 1e-15);
            let b22 = b3.view((1, 1), (2, 2)).into_owned();
            let b12 = b3.view((0, 1), (1, 2)).into_owned();
            assert!((&d * b22 - b12).abs().max() < 1e-15);
            assert!((e.as_matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        }

        #[test]
        fn schur_errors() {
            let singular = m(3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            assert!(matches!(schur_reduction(&singular, 1), Err(Error::Degenerate(_))));
            let negative = m(2, &[-1.0, 0.0, 0.0, 1.0]);
            assert!(matches!(schur_reduction(&negative, 1), Err(Error::AssumptionViolated(_))));
            let asym = m(2, &[1.0, 0.5, 0.0, 1.0]);
            assert!(matches!(schur_reduction(&asym, 2), Err(Error::AssumptionViolated(_))));
        }

        #[test]
        fn h_constants_identity_and_scaling() {
            let id = SpdMatrix::identity(2);
            let h = glangevin_h_constants(&id, &id, &DMatrix::zeros(2, 0), 2, 2).unwrap();
            for v in h.as_array() {
                assert_relative_eq!(v, 1.0, epsilon = 1e-14);
            }

            let nm = SpdMatrix::new(m(2, &[1.5, 0.5, 0.5, 1.0])).unwrap();
            let e = SpdMatrix::identity(1);
            let d = m(1, &[-1.0]);
            let h = glangevin_h_constants(&nm, &e, &d, 1, 2).unwrap();
            // NAᵀAN = (Ne₁)(Ne₁)ᵀ has rank one, so h₁ = (Ne₁)ᵀN⁻¹(Ne₁) = N₁₁
            assert_relative_eq!(h.h1, 1.5, epsilon = 1e-12);

            let h2n = glangevin_h_constants(&nm.scaled(2.0).unwrap(), &e, &d, 1, 2).unwrap();
            assert_relative_eq!(h2n.h1, 2.0 * h.h1, epsilon = 1e-12);
            assert_relative_eq!(h2n.h4, 0.5 * h.h4, epsilon = 1e-12);
            assert_relative_eq!(h2n.h5, 0.5 * h.h5, epsilon = 1e-12);
        }

        fn upper_block(d: &DMatrix<f64>, n: usize, p: usize) -> DMatrix<f64> {
            let mut m = DMatrix::zeros(p, p);
            m.view_mut((0, 0), (n, n)).fill_with_identity();
            if p > n {
                m.view_mut((0, n), (n, p - n)).copy_from(&(-d));
            }
            m
        }

        #[test]
        fn h_constants_are_minimal() {
            let (_, b) = order_k_system(3, 1).unwrap();
            let (nm, _) = lyapunov_metric(&b).unwrap();
            let (e, d) = schur_reduction(&b, 1).unwrap();
            let h = glangevin_h_constants(&nm, &e, &d, 1, 3).unwrap();
            let nmat = nm.as_matrix();
            let mut ata = DMatrix::zeros(3, 3);
            ata[(0, 0)] = 1.0;
            let s1 = nmat * &ata * nmat;
            let up = upper_block(&d, 1, 3);
            let mut full = up.clone();
            full.view_mut((1, 0), (2, 1)).copy_from(&(-d.transpose()));
            for (s, hv) in [(&s1, h.h1), (&up, h.h4), (&full, h.h5)] {
                assert!(loewner_leq(s, &(nmat * hv), 1e-10).unwrap());
                assert!(!loewner_leq(s, &(nmat * (hv * (1.0 - 1e-6))), 0.0).unwrap());
            }
            let ev = e.as_matrix()[(0, 0)];
            assert!(ev >= 1.0 / h.h2 - 1e-15 && ev <= h.h3 + 1e-15);
        }

        #[test]
        fn gamma0_homogeneity() {
            let h = HConstants { h1: 1.0, h2: 1.0, h3: 1.0, h4: 1.0, h5: 1.0 };
            assert_relative_eq!(glangevin_gamma0(&h, 1.0, 4.0), 4.0, epsilon = 1e-15);
            assert_relative_eq!(glangevin_gamma0(&h, 1.0, 16.0), 8.0, epsilon = 1e-15);
            // max attained on √(h₄/κ) once κ < 1
            let g = glangevin_gamma0(&h, 0.5, 4.0);
            assert_relative_eq!(glangevin_gamma0(&h, 0.125, 4.0), 4.0 * g, epsilon = 1e-13);
        }

        #[test]
        fn classical_reduction() {
            for (l, u) in [(1.0, 4.0), (0.3, 2.0), (2.0, 2.0)] {
                let bounds = HessianBounds::new(l, u).unwrap();
                let g0 = 2.0 * u.sqrt();
                for gamma in [g0, 1.5 * g0, 7.0] {
                    let c = glangevin_certificate(&DMatrix::identity(1, 1), bounds, gamma, 1, None).unwrap();
                    assert_relative_eq!(c.gamma0.unwrap(), g0, max_relative = 1e-15);
                    assert_relative_eq!(c.rho, (l / (3.0 * gamma)).min(gamma / 6.0), max_relative = 1e-15);
                    let simple = langevin_metric_simple(bounds, gamma, 1).unwrap();
                    assert!((c.metric.as_matrix() - simple.metric.as_matrix()).abs().max() < 1e-14);
                }
            }
            let c =
                glangevin_certificate(&DMatrix::identity(1, 1), HessianBounds::new(1.0, 4.0).unwrap(), 4.0, 1, None)
                    .unwrap();
            assert!((c.metric.as_matrix() - m(2, &[1.0, 0.25, 0.25, 0.25])).abs().max() < 1e-15);
            assert_relative_eq!(c.rho, 1.0 / 12.0, epsilon = 1e-16);
        }

        #[test]
        fn order_three_pipeline() {
            let b = m(2, &[0.0, -1.0, 1.0, 1.0]);
            let bounds = HessianBounds::new(1.0, 1.0).unwrap();
            let low = glangevin_certificate(&b, bounds, 1.0, 1, None);
            let required = match low {
                Err(Error::FrictionTooLow { required, .. }) => required,
                other => panic!("unexpected {other:?}"),
            };
            let c = glangevin_certificate(&b, bounds, 1.1 * required, 1, None).unwrap();
            let Provenance::Generalized(parts) = &c.provenance else { panic!() };
            assert_relative_eq!(parts.kappa, 1.0 / (2.5 + 1.25f64.sqrt()), epsilon = 1e-12);
            assert_eq!(parts.e.as_matrix()[(0, 0)], 1.0);
            assert!(c.rho > 0.0);

            // supplying the same N reproduces κ through the minimal-slack definition
            let again = glangevin_certificate(&b, bounds, 1.1 * required, 1, Some(parts.n_metric.clone())).unwrap();
            let Provenance::Generalized(p2) = &again.provenance else { panic!() };
            assert!(p2.kappa >= parts.kappa - 1e-12);
        }

        #[test]
        fn unstable_friction_rejected() {
            let b = m(2, &[0.0, 1.0, -1.0, 0.0]);
            let r = glangevin_certificate(&b, HessianBounds::new(1.0, 2.0).unwrap(), 10.0, 1, None);
            assert!(matches!(r, Err(Error::NotStable { .. })));
        }

        #[test]
        fn adjoint_threshold_classical() {
            let bounds = HessianBounds::new(1.0, 4.0).unwrap();
            let (nm, _) = lyapunov_metric(&DMatrix::identity(2, 2)).unwrap();
            let g = glangevin_gamma0_prime(&DMatrix::identity(2, 2), &nm, bounds, 2).unwrap();
            assert_relative_eq!(g, 4.0, epsilon = 1e-12);
        }
    }
}

mod langevin {

    use nalgebra::DMatrix;
    use sde_contract::certify::*;
    use sde_contract::error::Error;
    use sde_contract::matrixkit::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;

        fn hb(l: f64, u: f64) -> HessianBounds {
            HessianBounds::new(l, u).unwrap()
        }

        #[test]
        fn sharp_condition_cases() {
            assert!(sharp_condition(hb(1.0, 4.0), 2.0));
            assert!(!sharp_condition(hb(1.0, 25.0), 2.0));
            for g in [1e-6, 0.1, 3.0] {
                assert!(sharp_condition(hb(2.0, 2.0), g));
            }
        }

        #[test]
        fn simple_metric_examples() {
            let c = langevin_metric_simple(hb(1.0, 4.0), 4.0, 1).unwrap();
            assert_eq!(c.metric.as_matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 0.25]));
            assert_relative_eq!(c.rho, 1.0 / 12.0, epsilon = 1e-16);

            let c = langevin_metric_simple(hb(1.0, 1.0), 2.0, 1).unwrap();
            assert_eq!(c.metric.as_matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
            assert_relative_eq!(c.rho, 1.0 / 6.0, epsilon = 1e-16);

            match langevin_metric_simple(hb(1.0, 4.0), 3.0, 1) {
                Err(Error::FrictionTooLow { required, .. }) => assert_eq!(required, 4.0),
                other => panic!("unexpected {other:?}"),
            }
        }

        #[test]
        fn lemma_pair_by_hand() {
            // I(1,1) = (1,5), I(4,1) = (2,10), ∩ (1,∞) = (2,5), β = 7/2
            let p = lemma_feasible_ac(hb(1.0, 4.0), 2.0).unwrap();
            assert_relative_eq!(p.beta, 3.5, epsilon = 1e-15);
            assert_relative_eq!(p.a, 2.0 / 7.0, epsilon = 1e-12);
            assert_relative_eq!(p.c, 2.0 / 7.0, epsilon = 1e-12);
            assert!(p.c * p.c < p.a);
            assert!(lemma_feasible_ac(hb(1.0, 25.0), 2.0).is_none());
            for g in [0.01, 0.5, 7.0] {
                assert!(lemma_feasible_ac(hb(3.0, 3.0), g).is_some());
            }
        }

        #[test]
        fn best_rate_properties() {
            let bounds = hb(1.0, 4.0);
            let c = langevin_metric_simple(bounds, 4.0, 1).unwrap();
            let r = best_rate(&c.metric, bounds, 4.0).unwrap();
            assert!(r >= c.rho);
            let doubled = c.metric.scaled(2.0).unwrap();
            assert_relative_eq!(best_rate(&doubled, bounds, 4.0).unwrap(), r, epsilon = 1e-13);

            // M = I at ξ = γ²/4: sym(N₁) = [[0, (ξ−1)/2], [(ξ−1)/2, γ]] has a negative eigenvalue
            let gamma = 0.5;
            let xi = gamma * gamma / 4.0;
            let r_id = best_rate(&SpdMatrix::identity(2), hb(xi, xi), gamma).unwrap();
            let s = (xi - 1.0) / 2.0;
            let want = 0.5 * (gamma - (gamma * gamma + 4.0 * s * s).sqrt());
            assert_relative_eq!(r_id, want, epsilon = 1e-14);
            assert!(r_id < 0.0);

            let block = langevin_metric_simple(bounds, 4.0, 3).unwrap();
            assert_relative_eq!(best_rate(&block.metric, bounds, 4.0).unwrap(), r, epsilon = 1e-14);
        }

        #[test]
        fn lemma_grid_iff_sharp() {
            let vals: Vec<f64> = (0..20).map(|i| 0.05 * 1.35f64.powi(i)).collect();
            for &l in &vals {
                for &u in &vals {
                    if l > u {
                        continue;
                    }
                    for &g in &vals {
                        let b = hb(l, u);
                        assert_eq!(
                            lemma_feasible_ac(b, g).is_some(),
                            sharp_condition(b, g),
                            "lambda={l} Lambda={u} gamma={g}"
                        );
                    }
                }
            }
        }

        #[test]
        fn simple_rate_never_beats_best_rate() {
            for &(l, u, g) in &[(1.0, 4.0, 4.0), (0.1, 1.0, 2.0), (0.5, 9.0, 6.5), (2.0, 2.0, 3.0)] {
                let b = hb(l, u);
                let c = langevin_metric_simple(b, g, 1).unwrap();
                assert!(c.rho <= best_rate(&c.metric, b, g).unwrap() + 1e-10);
            }
        }

        #[test]
        fn automatic_choice() {
            let c = langevin_certificate(hb(1.0, 4.0), 2.0, 2).unwrap();
            assert!(matches!(c.provenance, Provenance::LemmaSearch { .. }));
            assert!(c.rho > 0.0);
            assert!(matches!(langevin_certificate(hb(1.0, 25.0), 2.0, 1), Err(Error::Infeasible(_))));
            let c = langevin_certificate(hb(1.0, 4.0), 5.0, 1).unwrap();
            assert_eq!(c.provenance, Provenance::SimpleLangevin);
        }
    }
}
