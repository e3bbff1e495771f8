//! Property tests for the pipeline's structural invariants.

use proptest::prelude::*;

use vidtex::classify::{nn_cosine, vote_subvideos, GallerySet, Prediction};
use vidtex::codebook::{encode_histogram, Codebook};
use vidtex::features::FeatureVector;
use vidtex::hash::{binarize, relaxed_gradient, relaxed_objective, BinaryCodeSet, HashModel, Lambdas};
use vidtex::linalg::Matrix;
use vidtex::pdv::{extract_pdvs, PdvMatrix};
use vidtex::video::{load_volume, save_volume, VideoVolume};

fn volume_strategy(max_side: usize) -> impl Strategy<Value = VideoVolume> {
    (3..=max_side, 3..=max_side, 3..=max_side).prop_flat_map(|(t, h, w)| {
        proptest::collection::vec(any::<u8>(), t * h * w)
            .prop_map(move |data| VideoVolume::new(t, h, w, data))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dtvol_roundtrip_is_byte_identical(v in volume_strategy(6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.dtvol");
        save_volume(&v, &path).unwrap();
        let loaded = load_volume(&path).unwrap();
        prop_assert_eq!(loaded, v);
    }

    #[test]
    fn pdvs_invariant_to_intensity_offset(v in volume_strategy(5), offset in 1u8..40) {
        // clamp-free shift: keep everything below 255 - offset
        let capped = VideoVolume::new(
            v.frames(), v.height(), v.width(),
            v.data().iter().map(|&x| x.min(255 - offset)).collect(),
        );
        let shifted = VideoVolume::new(
            v.frames(), v.height(), v.width(),
            capped.data().iter().map(|&x| x + offset).collect(),
        );
        let a: PdvMatrix<f64> = extract_pdvs(&capped, 3, (1, 1, 1), usize::MAX, 0).unwrap();
        let b: PdvMatrix<f64> = extract_pdvs(&shifted, 3, (1, 1, 1), usize::MAX, 0).unwrap();
        prop_assert_eq!(a.values().data(), b.values().data());
    }

    #[test]
    fn pdv_count_formula_holds(v in volume_strategy(6)) {
        let (t, h, w) = v.dims();
        let m: PdvMatrix<f64> = extract_pdvs(&v, 3, (1, 1, 1), usize::MAX, 0).unwrap();
        prop_assert_eq!(m.count(), (t - 2) * (h - 2) * (w - 2));
    }

    #[test]
    fn gradient_matches_finite_differences(
        seed in any::<u64>(),
        n in 4usize..24,
        k in 2usize..6,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let dim = 7;
        let x = PdvMatrix::new(2, Matrix::from_vec(
            n, dim, (0..n * dim).map(|_| (rng.gen::<f64>() - 0.5) * 8.0).collect(),
        ));
        let w = Matrix::from_vec(dim, k, (0..dim * k).map(|_| (rng.gen::<f64>() - 0.5) * 0.6).collect());
        let lambdas = Lambdas {
            quantization: 0.5 + rng.gen::<f64>() * 2.0,
            balance: 0.5 + rng.gen::<f64>() * 2.0,
            variance: 0.5 + rng.gen::<f64>() * 2.0,
        };
        let model = HashModel::new(2, w.clone(), lambdas);
        let b = binarize(&model, &x).unwrap();
        let grad = relaxed_gradient(&model, &x, &b).unwrap();
        let h = 1e-5;
        for r in 0..dim {
            for c in 0..k {
                let mut wp = w.clone();
                wp.set(r, c, w.get(r, c) + h);
                let mut wm = w.clone();
                wm.set(r, c, w.get(r, c) - h);
                let fp = relaxed_objective(&HashModel::new(2, wp, lambdas), &x, &b).unwrap();
                let fm = relaxed_objective(&HashModel::new(2, wm, lambdas), &x, &b).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let g = grad.get(r, c);
                prop_assert!((g - fd).abs() <= (1e-4 * fd.abs()).max(1e-7));
            }
        }
    }

    #[test]
    fn binarize_output_is_binary_and_idempotent(
        seed in any::<u64>(),
        n in 1usize..40,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let dim = 7;
        let k = 5;
        let w = Matrix::from_vec(dim, k, (0..dim * k).map(|_| rng.gen::<f64>() - 0.5).collect());
        let model = HashModel::new(2, w, Lambdas::default());
        let x = PdvMatrix::new(2, Matrix::from_vec(
            n, dim, (0..n * dim).map(|_| (rng.gen::<f64>() - 0.5) * 100.0).collect(),
        ));
        let a = binarize(&model, &x).unwrap();
        let b = binarize(&model, &x).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.codes().iter().all(|&bit| bit <= 1));
    }

    #[test]
    fn nn_cosine_invariant_under_positive_scaling(
        seed in any::<u64>(),
        scale in 0.01f64..1000.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let dim = 6;
        let gallery = GallerySet::new(
            (0..10)
                .map(|_| FeatureVector::new((0..dim).map(|_| rng.gen::<f64>() + 0.1).collect()))
                .collect(),
            (0..10).collect(),
        )
        .unwrap();
        let probe: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() + 0.1).collect();
        let a = nn_cosine(&gallery, &FeatureVector::new(probe.clone())).unwrap();
        let scaled: Vec<f64> = probe.iter().map(|x| x * scale).collect();
        let b = nn_cosine(&gallery, &FeatureVector::new(scaled)).unwrap();
        prop_assert_eq!(a.label, b.label);
    }

    #[test]
    fn vote_single_prediction_is_identity(label in 0u32..100, sim in -1.0f64..1.0) {
        let p = Prediction { label, similarity: sim };
        prop_assert_eq!(vote_subvideos(&[p]).unwrap(), label);
    }

    #[test]
    fn histogram_is_unit_norm(seed in any::<u64>(), n in 1usize..200) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let k = 5;
        let d = 6;
        let centroids = Matrix::from_vec(d, k, (0..d * k).map(|_| rng.gen::<f64>()).collect());
        let book = Codebook::new(0, centroids);
        let codes = BinaryCodeSet::new(
            k, n, (0..n * k).map(|_| (rng.gen::<u64>() % 2) as u8).collect(),
        );
        let h = encode_histogram(&book, &codes).unwrap();
        let norm: f64 = h.bins().iter().map(|b| b * b).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        let total: f64 = h.bins().iter().sum::<f64>();
        prop_assert!(total > 0.0);
    }
}
