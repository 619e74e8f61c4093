use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use probelens::probe::{
    analyze_layer, fit_and_score, probe_layer, probe_neurons, probe_top_channels, probe_top_neurons, run_probe,
    single_neuron_sweep, synth_generate, PlantedUnit, ProbeConfig, SynthLayer, SynthSpec,
};
use probelens::tensor::{balanced_split, load_labels, Manifest, NeuronIndexMap, SampleSplit};
use probelens::Error;

/// Balanced labels and standard-normal activations; `planted` columns get `snr·(2y−1)` added.
fn fixture(n: usize, m: usize, planted: &[usize], snr: f64, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    labels.shuffle(&mut rng);
    let mut x = Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal));
    for (i, &y) in labels.iter().enumerate() {
        for &j in planted {
            x[[i, j]] += snr * (2.0 * f64::from(y) - 1.0);
        }
    }
    (x, labels)
}

fn config(n_train: usize, n_val: usize) -> ProbeConfig {
    ProbeConfig {
        n_train,
        n_val,
        ..ProbeConfig::default()
    }
}

fn split_for(labels: &[u8], cfg: &ProbeConfig) -> SampleSplit {
    balanced_split(labels, cfg.n_train, cfg.n_val, cfg.seed).unwrap()
}

#[test]
fn validation_labels_never_reach_the_fit() {
    let cfg = config(400, 2000);
    let (x, labels) = fixture(2400, 40, &[3], 5.0, 1);
    let split = split_for(&labels, &cfg);
    let (model, acc) = probe_layer(&x, &split, &labels, &cfg).unwrap();
    assert!(acc >= 0.98);

    let mut shuffled = labels.clone();
    let mut val_labels: Vec<u8> = split.val_indices.iter().map(|&i| labels[i]).collect();
    val_labels.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    for (&i, &v) in split.val_indices.iter().zip(&val_labels) {
        shuffled[i] = v;
    }
    let (model2, acc2) = probe_layer(&x, &split, &shuffled, &cfg).unwrap();
    assert_eq!(model, model2);
    assert!((0.45..=0.55).contains(&acc2), "accuracy {acc2} after shuffling validation labels");
    let top = probe_top_neurons(
        &x,
        &split,
        &shuffled,
        &fit_and_score(&x, &NeuronIndexMap::flat(40), "l", &split, &labels, &cfg).unwrap().1,
        &cfg,
    )
    .unwrap();
    assert!((0.45..=0.55).contains(&top));
}

#[test]
fn noise_layers_sit_in_the_null_band() {
    let cfg = config(400, 2000);
    let (x, labels) = fixture(2400, 2 * 2 * 8, &[], 0.0, 2);
    let split = split_for(&labels, &cfg);
    let map = NeuronIndexMap::spatial(2, 2, 8);
    let r = analyze_layer(&x, &map, "noise", 0, &split, &labels, &cfg).unwrap();
    for acc in [r.acc_full, r.acc_top_neurons, r.acc_top_channels.unwrap()] {
        assert!((0.45..=0.55).contains(&acc), "accuracy {acc} outside the null band");
    }
}

#[test]
fn full_layer_sees_what_top_neurons_see() {
    let cfg = config(400, 1000);
    for seed in 0..3 {
        let (x, labels) = fixture(1400, 60, &[7, 11], 0.8, seed);
        let split = split_for(&labels, &cfg);
        let r = analyze_layer(&x, &NeuronIndexMap::flat(60), "fc", 0, &split, &labels, &cfg).unwrap();
        assert!(r.acc_full >= r.acc_top_neurons - 0.05);
        assert!(r.acc_top_channels.is_none() && r.top_channels.is_empty());
    }
}

#[test]
fn selecting_every_neuron_equals_the_full_layer() {
    let cfg = ProbeConfig {
        top_k_units: 6,
        ..config(300, 600)
    };
    let (x, labels) = fixture(900, 6, &[1], 1.0, 3);
    let split = split_for(&labels, &cfg);
    let (_, vip, _) = fit_and_score(&x, &NeuronIndexMap::flat(6), "fc", &split, &labels, &cfg).unwrap();
    let top = probe_top_neurons(&x, &split, &labels, &vip, &cfg).unwrap();
    let all = probe_neurons(&x, &split, &labels, &[0, 1, 2, 3, 4, 5], &cfg).unwrap();
    assert!((top - all).abs() <= 1.0 / 600.0, "{top} vs {all}");
}

#[test]
fn pointwise_channels_match_neurons() {
    let cfg = config(1000, 2000);
    let (x, labels) = fixture(3000, 16, &[3, 9], 0.7, 4);
    let split = split_for(&labels, &cfg);
    let map = NeuronIndexMap::spatial(1, 1, 16);
    let (_, vip, _) = fit_and_score(&x, &map, "pw", &split, &labels, &cfg).unwrap();
    assert_eq!(vip.top_channels.as_deref(), Some(&vip.top_neurons[..]));
    let channels = probe_top_channels(&x, &map, &split, &labels, &vip, &cfg).unwrap();
    let neurons = probe_top_neurons(&x, &split, &labels, &vip, &cfg).unwrap();
    assert!((channels - neurons).abs() <= 0.02, "{channels} vs {neurons}");
}

#[test]
fn channel_probe_needs_spatial_layers() {
    let cfg = config(100, 100);
    let (x, labels) = fixture(200, 10, &[0], 2.0, 5);
    let split = split_for(&labels, &cfg);
    let map = NeuronIndexMap::flat(10);
    let (_, vip, _) = fit_and_score(&x, &map, "fc", &split, &labels, &cfg).unwrap();
    let err = probe_top_channels(&x, &map, &split, &labels, &vip, &cfg).unwrap_err();
    assert!(matches!(err, Error::UnsupportedStructure(_)));
}

#[test]
fn constant_training_labels_are_rejected() {
    let cfg = config(4, 2);
    let (x, _) = fixture(10, 5, &[], 0.0, 6);
    let labels = vec![1u8; 10];
    let split = SampleSplit {
        train_indices: vec![0, 1, 2, 3],
        val_indices: vec![4, 5],
        seed: 0,
    };
    assert!(matches!(probe_layer(&x, &split, &labels, &cfg), Err(Error::DegenerateLabels)));
}

#[test]
fn sweep_is_clamped_and_sorted() {
    let cfg = config(100, 100);
    let (x, labels) = fixture(200, 10, &[4], 2.0, 7);
    let split = split_for(&labels, &cfg);
    let (_, vip, _) = fit_and_score(&x, &NeuronIndexMap::flat(10), "fc", &split, &labels, &cfg).unwrap();
    let sweep = single_neuron_sweep(&x, &split, &labels, &vip.neuron_scores, &cfg, 1).unwrap();
    assert_eq!(sweep.len(), 10);
    assert!(sweep.windows(2).all(|p| p[0].vip >= p[1].vip));
    assert_eq!(sweep[0].neuron, 4);
    assert!(sweep[0].accuracy > 0.9);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_samples: 600,
        layers: vec![
            SynthLayer { name: "c1".into(), shape: vec![3, 3, 4] },
            SynthLayer { name: "c2".into(), shape: vec![2, 2, 8] },
            SynthLayer { name: "fc".into(), shape: vec![20] },
        ],
        planted: PlantedUnit { layer: 1, coords: vec![1, 0, 5] },
        snr: 3.0,
        attribute: "Planted".into(),
        image_size: None,
    };
    let out = synth_generate(&spec, 8, dir.path()).unwrap();
    let manifest = Manifest::load(&out.manifest).unwrap();
    let labels = load_labels(&out.labels).unwrap();
    let cfg = ProbeConfig { sweep_size: 10, ..config(200, 300) };
    let attrs = vec!["Planted".to_string(), "Missing".to_string()];
    let one = run_probe(&manifest, &labels, &attrs, &cfg, 1).unwrap();
    let three = run_probe(&manifest, &labels, &attrs, &cfg, 3).unwrap();
    assert!(matches!(one[1].report, Err(Error::AttributeNotFound(_))));
    let (a, b) = (one[0].report.as_ref().unwrap(), three[0].report.as_ref().unwrap());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    a.check_structure().unwrap();
    assert_eq!(a.layers.iter().map(|l| l.depth_index).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert_eq!(a.layers[1].top_neurons[0].index, out.planted_neuron);
    assert_eq!(a.layers[1].top_channels[0].channel, 5);
    assert_eq!(a.layers[2].acc_top_channels, None);
    let best = a.best.neuron.as_ref().unwrap();
    assert_eq!((best.depth_index, best.unit), (1, Some(out.planted_neuron)));
}
