use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use probelens::tensor::NeuronIndexMap;
use probelens::{channel_scores, fit_pls1, top_k, vip_scores, PlsModel, VipReport};

fn random_problem(seed: u64, n: usize, m: usize) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal));
    let y = Array1::from_shape_fn(n, |i| 2.0 * x[[i, m / 2]] + rng.sample::<f64, _>(StandardNormal));
    (x, y)
}

/// Term-by-term evaluation of the VIP definition from the fitted arrays.
fn vip_direct(model: &PlsModel<f64>) -> Vec<f64> {
    let w = model.weights();
    let t = model.scores();
    let q = model.y_loadings();
    let (m, k) = w.dim();
    let mut ss = vec![0.0; k];
    for i in 0..k {
        let mut tt = 0.0;
        for r in 0..t.nrows() {
            tt += t[[r, i]] * t[[r, i]];
        }
        ss[i] = q[i] * q[i] * tt;
    }
    let total: f64 = ss.iter().sum();
    (0..m)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..k {
                let norm2: f64 = (0..m).map(|r| w[[r, i]] * w[[r, i]]).sum();
                s += ss[i] * w[[j, i]] * w[[j, i]] / norm2;
            }
            (m as f64 * s / total).sqrt()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn squares_sum_to_dimension(seed in any::<u64>(), n in 10usize..=40, m in 2usize..=300, k in 1usize..=8) {
        let (x, y) = random_problem(seed, n, m);
        let model = fit_pls1(x.view(), y.view(), k.min(n - 1).min(m)).unwrap();
        let v = vip_scores(&model).unwrap();
        prop_assert!((v.dot(&v) - m as f64).abs() <= 1e-6);
    }

    #[test]
    fn one_component_closed_form(seed in any::<u64>(), n in 10usize..=40, m in 2usize..=300) {
        let (x, y) = random_problem(seed, n, m);
        let model = fit_pls1(x.view(), y.view(), 1).unwrap();
        let v = vip_scores(&model).unwrap();
        let w = model.weights().column(0);
        for j in 0..m {
            prop_assert!((v[j] - (m as f64).sqrt() * w[j].abs()).abs() <= 1e-12);
        }
    }

    #[test]
    fn matches_direct_evaluation(seed in any::<u64>(), n in 10usize..=40, m in 2usize..=200, k in 1usize..=8) {
        let (x, y) = random_problem(seed, n, m);
        let model = fit_pls1(x.view(), y.view(), k.min(n - 1).min(m)).unwrap();
        let v = vip_scores(&model).unwrap();
        for (a, b) in v.iter().zip(vip_direct(&model)) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn permutation_equivariant(seed in any::<u64>(), n in 10usize..=40, m in 2usize..=100, k in 1usize..=5) {
        let (x, y) = random_problem(seed, n, m);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let xp = Array2::from_shape_fn((n, m), |(r, c)| x[[r, perm[c]]]);
        let k = k.min(n - 1).min(m);
        let v = vip_scores(&fit_pls1(x.view(), y.view(), k).unwrap()).unwrap();
        let vp = vip_scores(&fit_pls1(xp.view(), y.view(), k).unwrap()).unwrap();
        for c in 0..m {
            prop_assert!((vp[c] - v[perm[c]]).abs() <= 1e-8);
        }
    }

    #[test]
    fn column_scale_invariant(seed in any::<u64>(), n in 10usize..=40, m in 2usize..=100, k in 1usize..=5) {
        let (x, y) = random_problem(seed, n, m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let factors: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let xs = Array2::from_shape_fn((n, m), |(r, c)| x[[r, c]] * factors[c]);
        let k = k.min(n - 1).min(m);
        let v = vip_scores(&fit_pls1(x.view(), y.view(), k).unwrap()).unwrap();
        let vs = vip_scores(&fit_pls1(xs.view(), y.view(), k).unwrap()).unwrap();
        for c in 0..m {
            prop_assert!((vs[c] - v[c]).abs() <= 1e-8);
        }
    }

    #[test]
    fn top_k_is_a_prefix(scores in proptest::collection::vec(-5.0f64..5.0, 1..200), k in 1usize..200) {
        let k = k.min(scores.len());
        let all = top_k(&scores, scores.len()).unwrap();
        let some = top_k(&scores, k).unwrap();
        prop_assert_eq!(&all[..k], &some[..]);
        for pair in all.windows(2) {
            prop_assert!(scores[pair[0]] > scores[pair[1]] || (scores[pair[0]] == scores[pair[1]] && pair[0] < pair[1]));
        }
    }

    #[test]
    fn channel_scores_average_their_columns(h in 1usize..5, w in 1usize..5, c in 1usize..6, seed in any::<u64>()) {
        let map = NeuronIndexMap::spatial(h, w, c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..map.len()).map(|_| rng.random_range(0.0..3.0)).collect();
        let ch = channel_scores(&scores, &map).unwrap();
        for (ci, &v) in ch.iter().enumerate() {
            let cols = map.channel_columns(ci).unwrap();
            let mean = cols.iter().map(|&j| scores[j]).sum::<f64>() / cols.len() as f64;
            prop_assert!((v - mean).abs() <= 1e-12);
        }
    }
}

#[test]
fn ties_break_by_index() {
    assert_eq!(top_k(&[1.0, 3.0, 3.0, 2.0], 3).unwrap(), vec![1, 2, 3]);
    assert!(top_k(&[1.0, 2.0], 0).is_err());
    assert!(top_k(&[1.0, 2.0], 3).is_err());
}

#[test]
fn report_clamps_and_skips_channels_on_flat_layers() {
    let (x, y) = random_problem(4, 20, 6);
    let model = fit_pls1(x.view(), y.view(), 2).unwrap();
    let flat = VipReport::build("fc", &model, &NeuronIndexMap::flat(6), 8).unwrap();
    assert_eq!(flat.top_neurons.len(), 6);
    assert!(flat.channel_scores.is_none() && flat.top_channels.is_none());
    let spatial = VipReport::build("conv", &model, &NeuronIndexMap::spatial(1, 2, 3), 2).unwrap();
    assert_eq!(spatial.top_channels.unwrap().len(), 2);
    assert_eq!(spatial.top_neurons[0], 3);
}
