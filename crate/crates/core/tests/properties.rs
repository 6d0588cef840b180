use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use gauss_extremes::empirical::{rescale, solve_un};
use gauss_extremes::gauss::{cholesky_factor, sample_paths, CovMatrix, JitterPolicy, PathBatch};
use gauss_extremes::kernel::{
    decompose_extended, gamma_matrix, schoenberg_cov, validate_negative_definite, ws_covariance, GammaMatrix,
    KernelSpec, Site,
};
use gauss_extremes::limitproc::hr_bivariate_cdf;
use gauss_extremes::stable::{centering_b, Convention, StableSampler, StableSeriesParams, Truncation};
use gauss_extremes::Stream;

fn real_grid() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 2..25).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        v
    })
}

fn sphere_grid() -> impl Strategy<Value = Vec<Site>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..20).prop_map(|v| {
        v.into_iter()
            .filter_map(|(x, y, z)| {
                let r = (x * x + y * y + z * z).sqrt();
                (r > 0.1).then(|| Site::Sphere([x / r, y / r, z / r]))
            })
            .collect()
    })
}

fn min_eigenvalue(c: &CovMatrix) -> f64 {
    let k = c.len();
    let m = DMatrix::from_fn(k, k, |i, j| c.get(i, j));
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn spd(k: usize, entries: &[f64]) -> CovMatrix {
    let a = DMatrix::from_fn(k, k, |i, j| entries[i * k + j]);
    let m = &a * a.transpose() + DMatrix::identity(k, k) * 0.05;
    CovMatrix::new(Site::reals(&(0..k).map(|i| i as f64).collect::<Vec<_>>()), m.iter().copied().collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_matrix_shape(ts in real_grid(), alpha in 0.05f64..2.0) {
        let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha }, &Site::reals(&ts)).unwrap();
        for i in 0..g.len() {
            prop_assert_eq!(g.get(i, i), 0.0);
            for j in 0..g.len() {
                prop_assert_eq!(g.get(i, j), g.get(j, i));
                prop_assert!(g.get(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn fbm_kernels_are_negative_definite(ts in real_grid(), alpha in 0.05f64..=2.0) {
        let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha }, &Site::reals(&ts)).unwrap();
        let rep = validate_negative_definite(&g, g.default_nd_tolerance()).unwrap();
        prop_assert!(rep.pass, "worst {}", rep.worst);
    }

    #[test]
    fn sphere_kernels_are_negative_definite(sites in sphere_grid(), beta in 0.05f64..0.95) {
        prop_assume!(sites.len() >= 2);
        let g = gamma_matrix(&KernelSpec::SphereGeodesic { beta }, &sites).unwrap();
        for i in 0..g.len() {
            prop_assert_eq!(g.get(i, i), 0.0);
            for j in 0..g.len() {
                prop_assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        let rep = validate_negative_definite(&g, g.default_nd_tolerance()).unwrap();
        prop_assert!(rep.pass, "worst {}", rep.worst);
    }

    #[test]
    fn ws_covariance_reconstructs_gamma(ts in real_grid(), alpha in 0.1f64..2.0, pick in 0usize..100) {
        let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha }, &Site::reals(&ts)).unwrap();
        let anchor = pick % g.len();
        let c = ws_covariance(&g, anchor).unwrap();
        let scale = g.max_norm().max(1e-300);
        for i in 0..g.len() {
            prop_assert_eq!(c.get(anchor, i), 0.0);
            for j in 0..g.len() {
                let back = c.get(i, i) + c.get(j, j) - 2.0 * c.get(i, j);
                prop_assert!((back - g.get(i, j)).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn schoenberg_is_psd(ts in real_grid(), alpha in 0.1f64..2.0, logn in 0.7f64..14.0) {
        let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha }, &Site::reals(&ts)).unwrap();
        let c = schoenberg_cov(&g, logn.exp()).unwrap();
        let trace: f64 = (0..c.len()).map(|i| c.get(i, i)).sum();
        prop_assert!(min_eigenvalue(&c) >= -1e-8 * trace);
    }

    #[test]
    fn blocks_survive_permutation(groups in prop::collection::vec(0usize..4, 2..12), seed in any::<u64>()) {
        let k = groups.len();
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                values[i * k + j] = if i == j { 0.0 } else if groups[i] == groups[j] { (i as f64 - j as f64).abs() } else { f64::INFINITY };
            }
        }
        let sites = Site::reals(&(0..k).map(|i| i as f64).collect::<Vec<_>>());
        let g = GammaMatrix::from_values(sites.clone(), values.clone()).unwrap();

        let mut perm: Vec<usize> = (0..k).collect();
        let mut s = Stream::from_seed(seed);
        for i in (1..k).rev() {
            perm.swap(i, (s.next_u64() % (i as u64 + 1)) as usize);
        }
        let psites: Vec<Site> = perm.iter().map(|&p| sites[p].clone()).collect();
        let pvalues = (0..k * k).map(|q| values[perm[q / k] * k + perm[q % k]]).collect();
        let pg = GammaMatrix::from_values(psites, pvalues).unwrap();

        let canon = |g: &GammaMatrix| {
            let mut b: Vec<Vec<String>> = decompose_extended(g).unwrap().blocks.iter()
                .map(|blk| {
                    let mut v: Vec<String> = blk.iter().map(|&i| g.sites()[i].to_string()).collect();
                    v.sort();
                    v
                })
                .collect();
            b.sort();
            b
        };
        prop_assert_eq!(canon(&g), canon(&pg));
    }

    #[test]
    fn factor_reconstructs(k in 1usize..10, entries in prop::collection::vec(-1.0f64..1.0, 100)) {
        let c = spd(k, &entries);
        let f = cholesky_factor(&c, JitterPolicy::default()).unwrap();
        prop_assert!(f.reconstruction_error() <= f.jitter_used() + 1e-8 * c.max_norm());
    }

    #[test]
    fn un_strictly_increasing(a in 1.0f64..1e12, r in 1.0001f64..10.0) {
        prop_assert!(solve_un(a * r).unwrap() > solve_un(a).unwrap());
    }

    #[test]
    fn rescale_keeps_row_order(vals in prop::collection::vec(-50.0f64..50.0, 12), a in 0.01f64..10.0, b in -5.0f64..5.0) {
        let batch = PathBatch::new(Site::reals(&[0.0, 1.0, 2.0]), vals, None);
        let out = rescale(&batch, a, b);
        for r in 0..batch.rows() {
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(batch.row(r)[i] < batch.row(r)[j], out.row(r)[i] < out.row(r)[j]);
                }
            }
        }
    }

    #[test]
    fn hr_monotone(g in 0.01f64..20.0, y in -3.0f64..3.0, dy in 0.01f64..1.0, dg in 0.01f64..5.0) {
        prop_assert!(hr_bivariate_cdf(g, y + dy, y + dy).unwrap() > hr_bivariate_cdf(g, y, y).unwrap());
        prop_assert!(hr_bivariate_cdf(g + dg, y, y).unwrap() < hr_bivariate_cdf(g, y, y).unwrap());
    }

    #[test]
    fn centering_vanishes_below_one(i in 1u64..10_000, alpha in 0.01f64..0.999) {
        prop_assert_eq!(centering_b(i, alpha).unwrap(), 0.0);
    }

    #[test]
    fn tail_bound_shrinks_with_terms(alpha in 0.2f64..0.95, n in 10usize..5000, extra in 1usize..5000) {
        let g = GammaMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut params = StableSeriesParams::new(alpha, g, Convention::Reciprocal);
        params.truncation = Truncation { max_terms: 100_000, tail_budget: 1.0 };
        let s = StableSampler::new(params).unwrap();
        prop_assert!(s.tail_bound_at(n + extra) < s.tail_bound_at(n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn empirical_covariance_matches(k in 1usize..10, entries in prop::collection::vec(-1.0f64..1.0, 100), seed in any::<u64>()) {
        let c = spd(k, &entries);
        let f = cholesky_factor(&c, JitterPolicy::default()).unwrap();
        let m = 100_000;
        let b = sample_paths(&f, m, &mut Stream::from_seed(seed));
        let cols: Vec<Vec<f64>> = (0..k).map(|j| b.column(j)).collect();
        for i in 0..k {
            for j in 0..=i {
                let prods: Vec<f64> = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).collect();
                let mean = prods.iter().sum::<f64>() / m as f64;
                let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
                let se = (var / m as f64).sqrt();
                prop_assert!((mean - c.get(i, j)).abs() <= 5.0 * se, "entry ({i},{j}): {mean} vs {}", c.get(i, j));
            }
        }
    }

    #[test]
    fn stable_values_nonnegative_without_centering(alpha in 0.3f64..0.9, seed in any::<u64>()) {
        let g = GammaMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let s = StableSampler::new(StableSeriesParams::new(alpha, g, Convention::Reciprocal)).unwrap();
        let (b, _) = s.sample(500, &mut Stream::from_seed(seed)).unwrap();
        prop_assert!(b.values.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn paths_do_not_depend_on_worker_count() {
    let c = spd(4, &(0..100).map(|i| ((i * 37 % 17) as f64 - 8.0) / 8.0).collect::<Vec<_>>());
    let f = cholesky_factor(&c, JitterPolicy::default()).unwrap();
    let draw = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_paths(&f, 5000, &mut Stream::from_seed(21)).values)
    };
    assert_eq!(draw(1), draw(3));
}
