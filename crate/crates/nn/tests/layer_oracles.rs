//! Layer outputs against straightforward reference loops.

use chronos_nn::layers::*;
use chronos_nn::{Error, Mode, Sequential, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random(shape: &[usize], r: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

/// `out[b][o] = bias[o] + Σ_i w[o][i] x[b][i]`
fn dense_reference(x: &Tensor, w: &Tensor, bias: &Tensor) -> Vec<f64> {
    let (b, i, o) = (x.shape()[0], x.shape()[1], w.shape()[0]);
    let mut out = vec![0.0; b * o];
    for n in 0..b {
        for j in 0..o {
            let mut acc = bias.data()[j];
            for k in 0..i {
                acc += w.data()[j * i + k] * x.data()[n * i + k];
            }
            out[n * o + j] = acc;
        }
    }
    out
}

/// Direct valid cross-correlation with explicit 4-D indexing.
fn conv_reference(x: &Tensor, w: &Tensor, bias: &Tensor) -> (Vec<usize>, Vec<f64>) {
    let [b, ci, h, wd] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]];
    let [co, _, kh, kw] = [w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]];
    let (ho, wo) = (h - kh + 1, wd - kw + 1);
    let at_x = |n: usize, c: usize, r: usize, s: usize| x.data()[((n * ci + c) * h + r) * wd + s];
    let at_w = |o: usize, c: usize, u: usize, v: usize| w.data()[((o * ci + c) * kh + u) * kw + v];
    let mut out = Vec::new();
    for n in 0..b {
        for o in 0..co {
            for r in 0..ho {
                for s in 0..wo {
                    let mut acc = bias.data()[o];
                    for c in 0..ci {
                        for u in 0..kh {
                            for v in 0..kw {
                                acc += at_w(o, c, u, v) * at_x(n, c, r + u, s + v);
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    (vec![b, co, ho, wo], out)
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn dense_matches_reference() {
    let mut r = rng(1);
    for (b, i, o) in [(1, 1, 1), (3, 7, 5), (16, 80, 25), (5, 32, 1)] {
        let layer = Dense::new(i, o, &mut r).unwrap();
        let mut layer = Dense::from_params(layer.weight.value.clone(), random(&[o], &mut r));
        let x = random(&[b, i], &mut r);
        let out = layer.forward(&x, Mode::Train, &mut r).unwrap();
        assert_eq!(out.shape(), &[b, o]);
        let expect = dense_reference(&x, &layer.weight.value, &layer.bias.value);
        assert!(max_abs(out.data(), &expect) < 1e-12);
        assert_eq!(layer.infer(&x).unwrap(), out);
    }
}

#[test]
fn conv_matches_reference() {
    let mut r = rng(2);
    for (b, ci, co, h, w, kh, kw) in [(2, 1, 2, 5, 10, 2, 1), (3, 2, 3, 4, 4, 2, 2), (1, 3, 1, 3, 5, 3, 5)] {
        let mut layer = Conv2d::from_params(random(&[co, ci, kh, kw], &mut r), random(&[co], &mut r));
        let x = random(&[b, ci, h, w], &mut r);
        let out = layer.forward(&x, Mode::Train, &mut r).unwrap();
        let (shape, expect) = conv_reference(&x, &layer.weight.value, &layer.bias.value);
        assert_eq!(out.shape(), shape.as_slice());
        assert!(max_abs(out.data(), &expect) < 1e-12);
    }
}

#[test]
fn network_shape_contract() {
    let mut r = rng(3);
    let mut conv = Conv2d::new(1, 2, (2, 1), &mut r).unwrap();
    let x = random(&[7, 1, 5, 10], &mut r);
    let y = conv.forward(&x, Mode::Eval, &mut r).unwrap();
    assert_eq!(y.shape(), &[7, 2, 4, 10]);
    let flat = Flatten::default().infer(&y).unwrap();
    assert_eq!(flat.shape(), &[7, 80]);
    let hidden = Dense::new(80, 25, &mut r).unwrap().infer(&flat).unwrap();
    assert_eq!(hidden.shape(), &[7, 25]);
    let reshaped = Reshape::new(&[1, 5, 10])
        .unwrap()
        .infer(&random(&[4, 50], &mut r))
        .unwrap();
    assert_eq!(reshaped.shape(), &[4, 1, 5, 10]);
}

#[test]
fn empty_model_is_identity() {
    let mut r = rng(4);
    let mut model = Sequential::default();
    let x = random(&[3, 4], &mut r);
    assert_eq!(model.forward(&x, Mode::Train, &mut r).unwrap(), x);
    assert_eq!(model.infer(&x).unwrap(), x);
    assert_eq!(model.backward(&x).unwrap(), x);
}

#[test]
fn shape_errors_are_reported() {
    let mut r = rng(5);
    let x = random(&[2, 3], &mut r);
    let mut dense = Dense::new(4, 2, &mut r).unwrap();
    assert!(matches!(
        dense.forward(&x, Mode::Eval, &mut r),
        Err(Error::ShapeMismatch { .. })
    ));
    let mut conv = Conv2d::new(1, 2, (2, 1), &mut r).unwrap();
    assert!(conv
        .forward(&random(&[2, 1, 1, 3], &mut r), Mode::Eval, &mut r)
        .is_err());
    assert!(conv
        .forward(&random(&[2, 2, 5, 3], &mut r), Mode::Eval, &mut r)
        .is_err());
    let mut bn = BatchNorm1d::new(3, 0.1, 1e-5).unwrap();
    assert!(bn.forward(&random(&[1, 3], &mut r), Mode::Train, &mut r).is_err());
    assert!(Reshape::new(&[2, 2]).unwrap().infer(&x).is_err());
}

#[test]
fn backward_requires_a_forward_pass() {
    let mut r = rng(6);
    let specs = [
        LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 2,
            kernel: (2, 1),
        },
        LayerSpec::Dense { inputs: 3, outputs: 2 },
        LayerSpec::Relu,
        LayerSpec::Silu,
        LayerSpec::Sigmoid,
        LayerSpec::batch_norm(3),
        LayerSpec::Dropout { rate: 0.2 },
        LayerSpec::Flatten,
        LayerSpec::Reshape { dims: vec![3] },
    ];
    for s in specs {
        let mut layer = build_layer(&s, &mut r).unwrap();
        let g = random(&[2, 3], &mut r);
        assert!(matches!(layer.backward(&g), Err(Error::NoForwardCache(_))), "{s}");
    }
}

#[test]
fn zero_upstream_gradient_gives_zero_parameter_gradients() {
    let mut r = rng(7);
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
        LayerSpec::Silu,
        LayerSpec::batch_norm(25),
        LayerSpec::Dropout { rate: 0.2 },
        LayerSpec::Dense { inputs: 25, outputs: 1 },
        LayerSpec::Sigmoid,
    ];
    let mut model = Sequential::from_specs(&specs, &mut r).unwrap();
    let x = random(&[6, 50], &mut r);
    let y = model.forward(&x, Mode::Train, &mut r).unwrap();
    model.zero_grad();
    let dx = model.backward(&Tensor::zeros(y.shape())).unwrap();
    assert!(dx.data().iter().all(|v| *v == 0.0));
    for (name, p) in model.named_params() {
        assert!(p.grad.data().iter().all(|v| *v == 0.0), "{name}");
    }
}
