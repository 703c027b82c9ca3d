use chronos_nn::layers::*;
use chronos_nn::{xavier_init, ModelCheckpoint, Sequential, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random(shape: &[usize], r: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

fn classifier_like(r: &mut ChaCha8Rng) -> Sequential {
    let specs = [
        LayerSpec::Reshape { dims: vec![1, 5, 10] },
        LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 2,
            kernel: (2, 1),
        },
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::Dense {
            inputs: 80,
            outputs: 25,
        },
        LayerSpec::Relu,
        LayerSpec::batch_norm(25),
        LayerSpec::Dropout { rate: 0.2 },
        LayerSpec::Dense { inputs: 25, outputs: 1 },
        LayerSpec::Sigmoid,
    ];
    Sequential::from_specs(&specs, r).unwrap()
}

#[test]
fn batch_norm_eval_is_affine() {
    let mut r = rng(1);
    let mut bn = BatchNorm1d::new(4, 0.1, 1e-5).unwrap();
    for _ in 0..5 {
        bn.forward(&random(&[16, 4], &mut r), Mode::Train, &mut r).unwrap();
    }
    let x = random(&[3, 4], &mut r);
    let y = random(&[3, 4], &mut r);
    let zero = Tensor::zeros(&[3, 4]);
    let shift = bn.infer(&zero).unwrap();
    let f = |t: &Tensor| {
        let mut out = bn.infer(t).unwrap();
        out.data_mut().iter_mut().zip(shift.data()).for_each(|(a, b)| *a -= b);
        out
    };
    let (a, b) = (0.7, -1.3);
    let mut combo = x.map(|v| a * v);
    combo.add_assign(&y.map(|v| b * v)).unwrap();
    let lhs = f(&combo);
    let (fx, fy) = (f(&x), f(&y));
    for i in 0..lhs.len() {
        assert!((lhs.data()[i] - (a * fx.data()[i] + b * fy.data()[i])).abs() < 1e-8);
    }
}

#[test]
fn batch_norm_running_statistics_follow_momentum() {
    let mut r = rng(2);
    let mut bn = BatchNorm1d::new(2, 0.1, 1e-5).unwrap();
    let x = Tensor::new(&[4, 2], vec![1.0, 10.0, 3.0, 10.0, 5.0, 10.0, 7.0, 10.0]).unwrap();
    bn.forward(&x, Mode::Train, &mut r).unwrap();
    assert!((bn.running_mean.data()[0] - 0.4).abs() < 1e-15);
    assert!((bn.running_mean.data()[1] - 1.0).abs() < 1e-15);
    // unbiased variance of 1,3,5,7 is 20/3
    assert!((bn.running_var.data()[0] - (0.9 + 0.1 * 20.0 / 3.0)).abs() < 1e-14);
    assert!((bn.running_var.data()[1] - 0.9).abs() < 1e-15);
    let before = bn.running_mean.clone();
    bn.forward(&x, Mode::Eval, &mut r).unwrap();
    assert_eq!(bn.running_mean, before);
}

#[test]
fn dropout_eval_identity_and_train_expectation() {
    let mut r = rng(3);
    let mut d = Dropout::new(0.2).unwrap();
    let x = random(&[2, 5], &mut r);
    assert_eq!(d.forward(&x, Mode::Eval, &mut r).unwrap(), x);
    assert_eq!(d.infer(&x).unwrap(), x);
    let draws = 10_000;
    let mut sum = vec![0.0; x.len()];
    for _ in 0..draws {
        let y = d.forward(&x, Mode::Train, &mut r).unwrap();
        sum.iter_mut().zip(y.data()).for_each(|(s, v)| *s += v);
    }
    for (s, &v) in sum.iter().zip(x.data()) {
        let mean = s / draws as f64;
        // each draw is v/(1-p) with probability 1-p, else 0
        let sigma = v.abs() * (0.2f64 / 0.8).sqrt() / (draws as f64).sqrt();
        assert!((mean - v).abs() <= 3.0 * sigma, "{mean} vs {v}");
    }
}

#[test]
fn eval_inference_is_bit_deterministic() {
    let mut r = rng(4);
    let mut model = classifier_like(&mut r);
    for _ in 0..3 {
        model.forward(&random(&[32, 50], &mut r), Mode::Train, &mut r).unwrap();
    }
    let x = random(&[9, 50], &mut r);
    let a = model.infer(&x).unwrap();
    let b = model.infer(&x).unwrap();
    assert_eq!(a, b);
    let c = model.forward(&x, Mode::Eval, &mut rng(99)).unwrap();
    assert_eq!(a, c);
    assert!(a.data().iter().all(|p| *p > 0.0 && *p < 1.0));
}

#[test]
fn checkpoint_restores_identical_inference() {
    let mut r = rng(5);
    let mut model = classifier_like(&mut r);
    for _ in 0..3 {
        model.forward(&random(&[32, 50], &mut r), Mode::Train, &mut r).unwrap();
    }
    assert_eq!(model.param_count(), 2107);
    let mut ckpt = model.to_checkpoint("test");
    ckpt.seed = 11;
    ckpt.epoch = 2;
    ckpt.loss_history = vec![0.7, 0.6];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    ckpt.save(&path).unwrap();
    let back = ModelCheckpoint::load(&path).unwrap();
    assert_eq!(back, ckpt);
    let restored = Sequential::from_checkpoint(&back).unwrap();
    let x = random(&[7, 50], &mut r);
    assert_eq!(restored.infer(&x).unwrap(), model.infer(&x).unwrap());

    let mut wrong = back.clone();
    wrong.arrays[0].shape = vec![1, 2, 2, 1];
    wrong.arrays[0].data = vec![0.0; 4];
    wrong.layers[1] = LayerSpec::Conv2d {
        in_channels: 1,
        out_channels: 2,
        kernel: (1, 1),
    };
    assert!(Sequential::from_checkpoint(&wrong).is_err());
    let mut missing = back;
    missing.arrays.pop();
    assert!(Sequential::from_checkpoint(&missing).is_err());
}

#[test]
fn xavier_bounds_variance_and_determinism() {
    let one = xavier_init(&[1, 1], &mut rng(6)).unwrap();
    assert!(one.data()[0].abs() <= 3f64.sqrt());
    let (fan_out, fan_in) = (100, 1000);
    let t = xavier_init(&[fan_out, fan_in], &mut rng(7)).unwrap();
    let n = t.len() as f64;
    let mean = t.data().iter().sum::<f64>() / n;
    let var = t.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let expect = 2.0 / (fan_in + fan_out) as f64;
    assert!((var / expect - 1.0).abs() < 0.05, "{var} vs {expect}");
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    assert!(t.data().iter().all(|x| x.abs() <= bound));
    assert_eq!(
        xavier_init(&[4, 3], &mut rng(8)).unwrap(),
        xavier_init(&[4, 3], &mut rng(8)).unwrap()
    );
    assert!(xavier_init(&[5], &mut rng(8)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_is_affine_in_its_input(seed in any::<u64>(), b in 1usize..6, i in 1usize..12, o in 1usize..12, a in -3.0f64..3.0) {
        let mut r = rng(seed);
        let layer = Dense::new(i, o, &mut r).unwrap();
        let x = random(&[b, i], &mut r);
        let zero = layer.infer(&Tensor::zeros(&[b, i])).unwrap();
        let fx = layer.infer(&x).unwrap();
        let fax = layer.infer(&x.map(|v| a * v)).unwrap();
        for k in 0..fx.len() {
            let lin = fx.data()[k] - zero.data()[k];
            prop_assert!((fax.data()[k] - zero.data()[k] - a * lin).abs() < 1e-10);
        }
    }

    #[test]
    fn sigmoid_output_is_a_probability(x in -1e3f64..1e3) {
        let y = Sigmoid::default().infer(&Tensor::new(&[1, 1], vec![x]).unwrap()).unwrap().data()[0];
        prop_assert!((0.0..=1.0).contains(&y));
    }
}
