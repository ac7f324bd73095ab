mod assignment {

    use sde_contract::diagnose::*;

    mod tests {
        use super::*;

        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for k in 0..n {
                    let mut q = p.clone();
                    q.insert(k, n - 1);
                    out.push(q);
                }
            }
            out
        }

        fn lcg(seed: &mut u64) -> f64 {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (*seed >> 11) as f64 / (1u64 << 53) as f64
        }

        #[test]
        fn matches_brute_force() {
            let mut s = 3;
            for n in 1..=6 {
                let perms = permutations(n);
                for _ in 0..20 {
                    let cost: Vec<f64> = (0..n * n).map(|_| lcg(&mut s)).collect();
                    let sum = |p: &[usize]| (0..n).map(|i| cost[i * n + p[i]]).sum::<f64>();
                    let max = |p: &[usize]| (0..n).map(|i| cost[i * n + p[i]]).fold(0.0, f64::max);
                    let best_sum = perms.iter().map(|p| sum(p)).fold(f64::INFINITY, f64::min);
                    let best_max = perms.iter().map(|p| max(p)).fold(f64::INFINITY, f64::min);
                    let a = linear_assignment(&cost, n);
                    let b = bottleneck_assignment(&cost, n);
                    assert!((sum(&a) - best_sum).abs() < 1e-12);
                    assert_eq!(max(&b), best_max);
                    let mut seen = a.clone();
                    seen.sort();
                    assert_eq!(seen, (0..n).collect::<Vec<_>>());
                }
            }
        }

        #[test]
        fn ties_and_degenerate_costs() {
            let n = 4;
            let cost = vec![1.0; n * n];
            assert_eq!(linear_assignment(&cost, n).len(), 4);
            assert_eq!(bottleneck_assignment(&cost, n).len(), 4);
            assert!(linear_assignment(&[], 0).is_empty());
        }
    }
}

mod gaussian {

    use nalgebra::{DMatrix, DVector};

    use sde_contract::matrixkit::*;

    use sde_contract::diagnose::*;

    mod tests {
        use super::*;
        use approx::assert_relative_eq;

        #[test]
        fn w2_special_cases() {
            let i = SpdMatrix::identity(2);
            let s = DMatrix::identity(2, 2);
            assert_relative_eq!(gaussian_w2(&[0.0, 0.0], &s, &[3.0, 4.0], &s, &i).unwrap(), 5.0, epsilon = 1e-12);
            // commuting covariances: ‖√S₁ − √S₂‖_F
            let s2 = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
            assert_relative_eq!(
                gaussian_w2(&[0.0, 0.0], &s, &[0.0, 0.0], &s2, &i).unwrap(),
                5.0f64.sqrt(),
                epsilon = 1e-10
            );
            // metric cI scales by √c
            let m4 = SpdMatrix::identity(2).scaled(4.0).unwrap();
            assert_relative_eq!(
                gaussian_w2(&[0.0, 0.0], &s, &[0.0, 0.0], &s2, &m4).unwrap(),
                2.0 * 5.0f64.sqrt(),
                epsilon = 1e-10
            );
        }

        /// Maclaurin series of erf, accurate for small `x`.
        fn erf(x: f64) -> f64 {
            let mut term = x;
            let mut sum = x;
            for k in 1..40 {
                term *= -x * x / k as f64;
                sum += term / (2 * k + 1) as f64;
            }
            2.0 / std::f64::consts::PI.sqrt() * sum
        }

        #[test]
        fn w1_to_a_point() {
            // E|ξ| = √(2/π) for a standard normal
            let i = SpdMatrix::identity(1);
            let pi = std::f64::consts::PI;
            let got = gaussian_w1_to_point(&[0.0], &[0.0], &DMatrix::identity(1, 1), &i).unwrap();
            assert_relative_eq!(got, (2.0 / pi).sqrt(), max_relative = 1e-12);
            // folded normal: E|X| = σ√(2/π)e^{−μ²/2σ²} + μ(1 − 2Φ(−μ/σ)); with μ = 1, σ = 2
            // and μ(1 − 2Φ(−μ/σ)) = erf(μ/(σ√2))
            let got = gaussian_w1_to_point(&[-1.0], &[0.0], &(DMatrix::identity(1, 1) * 4.0), &i).unwrap();
            let want = 2.0 * (2.0 / pi).sqrt() * (-0.125f64).exp() + erf(1.0 / 8f64.sqrt());
            assert_relative_eq!(got, want, max_relative = 1e-12);
            // far away E|X − z| → |m − z|
            let got = gaussian_w1_to_point(&[-1e4], &[0.0], &DMatrix::identity(1, 1), &i).unwrap();
            assert_relative_eq!(got, 1e4, max_relative = 1e-7);
            // 2-d standard: E|ξ| = √(π/2); 3-d: 2√(2/π)
            let got =
                gaussian_w1_to_point(&[0.0; 2], &[0.0; 2], &DMatrix::identity(2, 2), &SpdMatrix::identity(2)).unwrap();
            assert_relative_eq!(got, (pi / 2.0).sqrt(), max_relative = 1e-12);
            let got =
                gaussian_w1_to_point(&[0.0; 3], &[0.0; 3], &DMatrix::identity(3, 3), &SpdMatrix::identity(3)).unwrap();
            assert_relative_eq!(got, 2.0 * (2.0 / pi).sqrt(), max_relative = 1e-12);
            // degenerate covariance reduces to the distance of the means
            let got =
                gaussian_w1_to_point(&[0.0, 0.0], &[3.0, 4.0], &DMatrix::zeros(2, 2), &SpdMatrix::identity(2)).unwrap();
            assert_relative_eq!(got, 5.0, max_relative = 1e-10);
        }
    }
}
