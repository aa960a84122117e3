//! Finite-difference checks of the reverse-mode tape and of every loss.
//!
//! Relative error of an analytic gradient `a` against a central-difference estimate `n`
//! is `max|a − n| / max(max|a|, max|n|, 1e-8)`, with `a` and `n` the full gradient
//! vectors over every differentiated input, so an entry that is exactly zero is judged
//! against the scale of the whole gradient rather than against its own roundoff.

use cyclegzsl::diffmath::{Matrix, Tape, Var};
use cyclegzsl::losses::{cls_loss, cls_loss_logsumexp, critic_loss, cyc_loss, generator_adversarial_loss, reg_loss, CycleTerm};
use cyclegzsl::models::{
    init_classifier, init_discriminator, init_generator, init_regressor, sample_noise, Activation, Layer, Mlp, NetworkKind,
    RegressorOutput, LEAKY_SLOPE,
};
use cyclegzsl::rng::seeded;
use proptest::prelude::*;
use rand::Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(a: &[Matrix<f64>], n: &[Matrix<f64>]) -> f64 {
    let diff = a.iter().zip(n).map(|(x, y)| x.max_abs_diff(y).unwrap()).fold(0.0, f64::max);
    let scale = a
        .iter()
        .chain(n)
        .flat_map(|m| m.as_slice())
        .fold(1e-8f64, |m, v| m.max(v.abs()));
    diff / scale
}

/// Central differences of `f` with respect to every entry of every input.
fn numeric_grads(inputs: &[Matrix<f64>], f: &dyn Fn(&[Matrix<f64>]) -> f64) -> Vec<Matrix<f64>> {
    let mut work = inputs.to_vec();
    (0..inputs.len())
        .map(|k| {
            let (r, c) = inputs[k].shape();
            Matrix::from_fn(r, c, |i, j| {
                let orig = inputs[k].get(i, j);
                work[k].set(i, j, orig + H);
                let up = f(&work);
                work[k].set(i, j, orig - H);
                let down = f(&work);
                work[k].set(i, j, orig);
                (up - down) / (2.0 * H)
            })
        })
        .collect()
}

/// `build` records a scalar on a fresh tape from leaves holding `inputs`; analytic
/// gradients from `backward` are compared against central differences of the same value.
fn check(inputs: &[Matrix<f64>], build: &dyn Fn(&mut Tape<f64>, &[Var]) -> Var) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|m| tape.leaf(m.clone())).collect();
    let root = build(&mut tape, &vars);
    let analytic = tape.backward(root, &vars).unwrap().into_matrices();
    let value = |xs: &[Matrix<f64>]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = xs.iter().map(|m| t.leaf(m.clone())).collect();
        let r = build(&mut t, &vs);
        t.value(r).item().unwrap()
    };
    let numeric = numeric_grads(inputs, &value);
    rel_err(&analytic, &numeric)
}

fn random(rng: &mut impl Rng, r: usize, c: usize) -> Matrix<f64> {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Values bounded away from 0 so that rectifier kinks are never crossed by the stencil.
fn off_kink(rng: &mut impl Rng, r: usize, c: usize) -> Matrix<f64> {
    Matrix::from_fn(r, c, |_, _| {
        let v: f64 = rng.random_range(0.05..1.0);
        if rng.random::<bool>() {
            v
        } else {
            -v
        }
    })
}

/// Reduces any matrix node to a scalar through a fixed random weighting.
fn weighted_sum(t: &mut Tape<f64>, x: Var, seed: u64) -> Var {
    let (r, c) = t.value(x).shape();
    let mut rng = seeded(seed, 77);
    let w = t.leaf(random(&mut rng, r, c));
    let p = t.mul(x, w).unwrap();
    let s = t.sum_cols(p);
    let s = t.sum_rows(s);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn primitive_gradients_match_finite_differences(r in 1usize..=16, c in 1usize..=16, m in 1usize..=16, seed in 0u64..10_000) {
        let mut rng = seeded(seed, 1);
        let a = random(&mut rng, r, c);
        let b = random(&mut rng, r, c);
        let w = random(&mut rng, c, m);
        let bias = random(&mut rng, 1, c);
        let col = random(&mut rng, r, 1);
        let row = random(&mut rng, 1, c);
        let k = off_kink(&mut rng, r, c);
        let labels: Vec<usize> = (0..r).map(|i| (i * 7 + seed as usize) % c).collect();
        let split = c / 2;

        type Build = Box<dyn Fn(&mut Tape<f64>, &[Var]) -> Var>;
        let cases: Vec<(&str, Vec<Matrix<f64>>, Build)> = vec![
            ("matmul", vec![a.clone(), w.clone()], Box::new(move |t, v| { let y = t.matmul(v[0], v[1]).unwrap(); weighted_sum(t, y, seed) })),
            ("bias_add", vec![a.clone(), bias.clone()], Box::new(move |t, v| { let y = t.bias_add(v[0], v[1]).unwrap(); weighted_sum(t, y, seed) })),
            ("leaky_relu", vec![k.clone()], Box::new(move |t, v| { let y = t.leaky_relu(v[0], LEAKY_SLOPE); weighted_sum(t, y, seed) })),
            ("relu", vec![k.clone()], Box::new(move |t, v| { let y = t.relu(v[0]); weighted_sum(t, y, seed) })),
            ("sigmoid", vec![a.clone()], Box::new(move |t, v| { let y = t.sigmoid(v[0]); weighted_sum(t, y, seed) })),
            ("exp", vec![a.clone()], Box::new(move |t, v| { let y = t.exp(v[0]); weighted_sum(t, y, seed) })),
            ("safe_recip", vec![k.clone()], Box::new(move |t, v| { let y = t.safe_recip(v[0]); weighted_sum(t, y, seed) })),
            ("add", vec![a.clone(), b.clone()], Box::new(move |t, v| { let y = t.add(v[0], v[1]).unwrap(); weighted_sum(t, y, seed) })),
            ("sub", vec![a.clone(), b.clone()], Box::new(move |t, v| { let y = t.sub(v[0], v[1]).unwrap(); weighted_sum(t, y, seed) })),
            ("mul", vec![a.clone(), b.clone()], Box::new(move |t, v| { let y = t.mul(v[0], v[1]).unwrap(); weighted_sum(t, y, seed) })),
            ("scale", vec![a.clone()], Box::new(move |t, v| { let y = t.scale(v[0], -1.7); weighted_sum(t, y, seed) })),
            ("add_scalar", vec![a.clone()], Box::new(move |t, v| { let y = t.add_scalar(v[0], 0.3); weighted_sum(t, y, seed) })),
            ("row_sq_norm", vec![a.clone()], Box::new(move |t, v| { let y = t.row_sq_norm(v[0]); weighted_sum(t, y, seed) })),
            ("row_norm", vec![k.clone()], Box::new(move |t, v| { let y = t.row_norm(v[0]); weighted_sum(t, y, seed) })),
            ("mean_rows", vec![a.clone()], Box::new(move |t, v| { let y = t.mean_rows(v[0]); weighted_sum(t, y, seed) })),
            ("sum_rows", vec![a.clone()], Box::new(move |t, v| { let y = t.sum_rows(v[0]); weighted_sum(t, y, seed) })),
            ("sum_cols", vec![a.clone()], Box::new(move |t, v| { let y = t.sum_cols(v[0]); weighted_sum(t, y, seed) })),
            ("broadcast_rows", vec![row.clone()], Box::new(move |t, v| { let y = t.broadcast_rows(v[0], r).unwrap(); weighted_sum(t, y, seed) })),
            ("broadcast_cols", vec![col.clone()], Box::new(move |t, v| { let y = t.broadcast_cols(v[0], c).unwrap(); weighted_sum(t, y, seed) })),
            ("logsumexp", vec![a.clone()], Box::new(move |t, v| { let y = t.logsumexp(v[0]); weighted_sum(t, y, seed) })),
            ("transpose", vec![a.clone()], Box::new(move |t, v| { let y = t.transpose(v[0]); weighted_sum(t, y, seed) })),
            ("concat_cols", vec![a.clone(), col.clone()], Box::new(move |t, v| { let y = t.concat_cols(v[0], v[1]).unwrap(); weighted_sum(t, y, seed) })),
            ("slice_cols", vec![a.clone()], Box::new(move |t, v| { let y = t.slice_cols(v[0], split, c).unwrap(); weighted_sum(t, y, seed) })),
            ("softmax_cross_entropy", vec![a.clone()], Box::new(move |t, v| { let y = t.softmax_cross_entropy(v[0], &labels).unwrap(); weighted_sum(t, y, seed) })),
        ];
        for (name, inputs, build) in cases {
            let err = check(&inputs, &*build);
            prop_assert!(err <= TOL, "{name}: relative error {err:e} at {r}x{c}");
        }
    }

    #[test]
    fn second_order_primitive_gradients(r in 1usize..=8, c in 1usize..=8, seed in 0u64..10_000) {
        // d/dθ of ‖∂f/∂x‖² for several f, compared with differences of the recorded input
        // gradient.
        let mut rng = seeded(seed, 2);
        let x = off_kink(&mut rng, r, c);
        let w = random(&mut rng, c, c);
        type Build = Box<dyn Fn(&mut Tape<f64>, &[Var]) -> Var>;
        let inner: Vec<(&str, Build)> = vec![
            ("sigmoid", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); let s = t.sigmoid(h); t.sum_cols(s) })),
            ("exp", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); let s = t.exp(h); t.sum_cols(s) })),
            ("logsumexp", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); t.logsumexp(h) })),
            ("row_norm", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); t.row_norm(h) })),
            ("row_sq_norm", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); t.row_sq_norm(h) })),
            ("mul", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); let s = t.mul(h, h).unwrap(); t.sum_cols(s) })),
            ("slice", Box::new(|t, v| { let h = t.matmul(v[0], v[1]).unwrap(); let cols = t.value(h).cols(); let s = t.slice_cols(h, 0, cols.div_ceil(2)).unwrap(); let s = t.mul(s, s).unwrap(); t.sum_cols(s) })),
        ];
        for (name, f) in inner {
            let err = check(&[x.clone(), w.clone()], &|t, v| {
                let per_row = f(t, v);
                let g = t.input_gradient(per_row, v[0]).unwrap();
                let sq = t.row_sq_norm(g);
                t.mean_rows(sq)
            });
            prop_assert!(err <= TOL, "{name}: relative error {err:e}");
        }
    }
}

fn two_layer(t: &mut Tape<f64>, v: &[Var]) -> Var {
    let h = t.matmul(v[0], v[1]).unwrap();
    let h = t.bias_add(h, v[2]).unwrap();
    let h = t.leaky_relu(h, LEAKY_SLOPE);
    let o = t.matmul(h, v[3]).unwrap();
    let o = t.bias_add(o, v[4]).unwrap();
    let o = t.relu(o);
    let s = t.row_sq_norm(o);
    t.mean_rows(s)
}

#[test]
fn two_layer_network_8x8_seeds_0_to_4() {
    for seed in 0..5 {
        let mut rng = seeded(seed, 3);
        let inputs = vec![
            random(&mut rng, 8, 8),
            random(&mut rng, 8, 8),
            random(&mut rng, 1, 8),
            random(&mut rng, 8, 8),
            random(&mut rng, 1, 8),
        ];
        let err = check(&inputs, &two_layer);
        assert!(err <= TOL, "seed {seed}: {err:e}");
    }
}

#[test]
fn backward_is_bitwise_deterministic() {
    let mut rng = seeded(11, 3);
    let inputs: Vec<Matrix<f64>> = vec![
        random(&mut rng, 8, 8),
        random(&mut rng, 8, 8),
        random(&mut rng, 1, 8),
        random(&mut rng, 8, 8),
        random(&mut rng, 1, 8),
    ];
    let run = || {
        let mut t = Tape::new();
        let vs: Vec<Var> = inputs.iter().map(|m| t.leaf(m.clone())).collect();
        let root = two_layer(&mut t, &vs);
        t.backward(root, &vs).unwrap().into_matrices()
    };
    let a = run();
    let b = run();
    for (x, y) in a.iter().zip(&b) {
        let xb: Vec<u64> = x.as_slice().iter().map(|v| v.to_bits()).collect();
        let yb: Vec<u64> = y.as_slice().iter().map(|v| v.to_bits()).collect();
        assert_eq!(xb, yb);
    }
}

#[test]
fn gradient_of_sum_is_sum_of_gradients() {
    let mut rng = seeded(5, 4);
    let x0 = random(&mut rng, 4, 3);
    let w0 = random(&mut rng, 3, 2);
    let f = |t: &mut Tape<f64>, x: Var, w: Var| {
        let y = t.matmul(x, w).unwrap();
        let y = t.row_sq_norm(y);
        t.mean_rows(y)
    };
    let g = |t: &mut Tape<f64>, x: Var| {
        let y = t.sigmoid(x);
        let y = t.sum_cols(y);
        t.mean_rows(y)
    };
    let grad = |which: u8| {
        let mut t = Tape::new();
        let x = t.leaf(x0.clone());
        let w = t.leaf(w0.clone());
        let root = match which {
            0 => f(&mut t, x, w),
            1 => g(&mut t, x),
            _ => {
                let a = f(&mut t, x, w);
                let b = g(&mut t, x);
                t.add(a, b).unwrap()
            }
        };
        t.backward(root, &[x]).unwrap().into_matrices().remove(0)
    };
    let sum = grad(0).add(&grad(1)).unwrap();
    assert_eq!(grad(2), sum);
}

fn rand_mlp(rng: &mut impl Rng, kind: NetworkKind, widths: &[usize], acts: &[Activation]) -> Mlp<f64> {
    Mlp {
        kind,
        layers: widths
            .windows(2)
            .zip(acts)
            .map(|(w, &activation)| Layer { weight: random(rng, w[0], w[1]), bias: random(rng, 1, w[1]).scale(0.1), activation })
            .collect(),
    }
}

fn mlp_from(template: &Mlp<f64>, params: &[Matrix<f64>]) -> Mlp<f64> {
    let mut m = template.clone();
    for (p, v) in m.params_mut().zip(params) {
        *p = v.clone();
    }
    m
}

/// Closed-form input gradient of a one-hidden-layer leaky critic, restricted to the
/// visual block: `((1{pre>0} + s·1{pre≤0}) ⊙ w₂ᵀ) W₁[:K]ᵀ`.
fn critic_input_grad_closed_form(critic: &Mlp<f64>, x: &Matrix<f64>, a: &Matrix<f64>) -> Matrix<f64> {
    let (w1, b1, w2) = (&critic.layers[0].weight, &critic.layers[0].bias, &critic.layers[1].weight);
    let input = x.concat_cols(a).unwrap();
    let pre = input.matmul(w1).unwrap().add_row(b1).unwrap();
    let k = x.cols();
    Matrix::from_fn(x.rows(), k, |i, j| {
        (0..w1.cols())
            .map(|h| {
                let slope = if pre.get(i, h) > 0.0 { 1.0 } else { LEAKY_SLOPE };
                slope * w2.get(h, 0) * w1.get(j, h)
            })
            .sum()
    })
}

fn critic_forward_plain(critic: &Mlp<f64>, x: &Matrix<f64>, a: &Matrix<f64>) -> Matrix<f64> {
    critic.forward(&x.concat_cols(a).unwrap()).unwrap()
}

/// Critic loss evaluated without the tape: Wasserstein estimate from plain forward passes,
/// penalty from the closed-form input gradient.
fn critic_loss_oracle(critic: &Mlp<f64>, x: &Matrix<f64>, f: &Matrix<f64>, a: &Matrix<f64>, alpha: &[f64], lambda: f64) -> f64 {
    let mean = |m: &Matrix<f64>| m.as_slice().iter().sum::<f64>() / m.len() as f64;
    let interp = Matrix::from_fn(x.rows(), x.cols(), |i, j| alpha[i] * x.get(i, j) + (1.0 - alpha[i]) * f.get(i, j));
    let g = critic_input_grad_closed_form(critic, &interp, a);
    let pen = (0..g.rows())
        .map(|i| {
            let n = g.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            (n - 1.0).powi(2)
        })
        .sum::<f64>()
        / g.rows() as f64;
    mean(&critic_forward_plain(critic, f, a)) - mean(&critic_forward_plain(critic, x, a)) + lambda * pen
}

fn hidden_preactivations_clear(critic: &Mlp<f64>, batches: &[(&Matrix<f64>, &Matrix<f64>)]) -> bool {
    batches.iter().all(|(x, a)| {
        let pre = x.concat_cols(a).unwrap().matmul(&critic.layers[0].weight).unwrap().add_row(&critic.layers[0].bias).unwrap();
        pre.as_slice().iter().all(|v| v.abs() > 1e-3)
    })
}

#[test]
fn critic_loss_second_order_against_closed_form_oracle() {
    let mut checked = 0;
    for seed in 0..20u64 {
        let mut rng = seeded(seed, 5);
        let (b, k, l, hdim) = (6, 8, 4, 10);
        let critic = rand_mlp(&mut rng, NetworkKind::Discriminator, &[k + l, hdim, 1], &[Activation::LeakyRelu, Activation::Identity]);
        let x = random(&mut rng, b, k).map(f64::abs);
        let f = random(&mut rng, b, k).map(f64::abs);
        let a = random(&mut rng, b, l);
        let alpha: Vec<f64> = (0..b).map(|_| rng.random()).collect();
        let interp = Matrix::from_fn(b, k, |i, j| alpha[i] * x.get(i, j) + (1.0 - alpha[i]) * f.get(i, j));
        if !hidden_preactivations_clear(&critic, &[(&x, &a), (&f, &a), (&interp, &a)]) {
            continue;
        }
        let mut t = Tape::new();
        let vars = critic.register(&mut t);
        let xv = t.leaf(x.clone());
        let fv = t.leaf(f.clone());
        let av = t.leaf(a.clone());
        let c = critic_loss(&mut t, &critic, &vars, xv, fv, av, &alpha, 10.0).unwrap();
        let value = t.value(c.loss).item().unwrap();
        let oracle_value = critic_loss_oracle(&critic, &x, &f, &a, &alpha, 10.0);
        assert!((value - oracle_value).abs() <= 1e-10 * oracle_value.abs().max(1.0));

        let analytic = t.backward(c.loss, &vars.all()).unwrap().into_matrices();
        let params: Vec<Matrix<f64>> = critic.params().cloned().collect();
        let numeric = numeric_grads(&params, &|ps| critic_loss_oracle(&mlp_from(&critic, ps), &x, &f, &a, &alpha, 10.0));
        let err = rel_err(&analytic, &numeric);
        assert!(err <= TOL, "seed {seed}: {err:e}");
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} kink-free instances");
}

#[test]
fn cls_loss_routes_agree_and_match_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = seeded(seed, 6);
        let (b, k, c) = (7, 6, 4);
        let clf: Mlp<f64> = init_classifier(k, c, seed).unwrap();
        let clf = mlp_from(&clf, &[random(&mut rng, k, c), random(&mut rng, 1, c)]);
        let x = random(&mut rng, b, k);
        let labels: Vec<usize> = (0..b).map(|i| i % c).collect();
        let build = |t: &mut Tape<f64>, v: &[Var], fused: bool| {
            let net = mlp_from(&clf, &[t.value(v[0]).clone(), t.value(v[1]).clone()]);
            let vars = cyclegzsl::models::MlpVars { layers: vec![(v[0], v[1])] };
            let xv = t.leaf(x.clone());
            if fused {
                cls_loss(t, &net, &vars, xv, &labels).unwrap()
            } else {
                cls_loss_logsumexp(t, &net, &vars, xv, &labels).unwrap()
            }
        };
        let params: Vec<Matrix<f64>> = clf.params().cloned().collect();
        assert!(check(&params, &|t, v| build(t, v, true)) <= TOL);
        assert!(check(&params, &|t, v| build(t, v, false)) <= TOL);
        let mut t1 = Tape::new();
        let v1: Vec<Var> = params.iter().map(|p| t1.leaf(p.clone())).collect();
        let r1 = build(&mut t1, &v1, true);
        let mut t2 = Tape::new();
        let v2: Vec<Var> = params.iter().map(|p| t2.leaf(p.clone())).collect();
        let r2 = build(&mut t2, &v2, false);
        assert!((t1.value(r1).item().unwrap() - t2.value(r2).item().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn cyc_loss_gradient_wrt_generator_with_frozen_regressor() {
    for seed in 0..5u64 {
        let mut rng = seeded(seed, 7);
        let (b, k, l, z, h) = (5, 6, 3, 3, 8);
        let gen = rand_mlp(&mut rng, NetworkKind::Generator, &[l + z, h, k], &[Activation::LeakyRelu, Activation::Relu]);
        let reg = rand_mlp(&mut rng, NetworkKind::Regressor, &[k, l], &[Activation::Identity]);
        let a_s = random(&mut rng, b, l);
        let z_s = random(&mut rng, b, z);
        let a_u = random(&mut rng, b, l);
        let z_u = random(&mut rng, b, z);
        let params: Vec<Matrix<f64>> = gen.params().cloned().collect();
        for with_unseen in [false, true] {
            let err = check(&params, &|t, v| {
                let g = mlp_from(&gen, &v.iter().map(|&x| t.value(x).clone()).collect::<Vec<_>>());
                let gv = cyclegzsl::models::MlpVars { layers: vec![(v[0], v[1]), (v[2], v[3])] };
                let rv = reg.register(t);
                let seen = CycleTerm { semantics: t.leaf(a_s.clone()), noise: t.leaf(z_s.clone()) };
                let unseen = with_unseen.then(|| CycleTerm { semantics: t.leaf(a_u.clone()), noise: t.leaf(z_u.clone()) });
                cyc_loss(t, &g, &gv, &reg, &rv, seen, unseen).unwrap()
            });
            assert!(err <= TOL, "seed {seed} unseen={with_unseen}: {err:e}");
        }
    }
}

#[test]
fn reg_loss_gradient_both_output_modes() {
    for seed in 0..5u64 {
        let mut rng = seeded(seed, 8);
        for mode in [RegressorOutput::Identity, RegressorOutput::Sigmoid] {
            let reg: Mlp<f64> = init_regressor(6, 4, mode, seed).unwrap();
            let reg = mlp_from(&reg, &[random(&mut rng, 6, 4), random(&mut rng, 1, 4)]);
            let x = random(&mut rng, 9, 6);
            let a = random(&mut rng, 9, 4);
            let params: Vec<Matrix<f64>> = reg.params().cloned().collect();
            let err = check(&params, &|t, v| {
                let vars = cyclegzsl::models::MlpVars { layers: vec![(v[0], v[1])] };
                let xv = t.leaf(x.clone());
                let av = t.leaf(a.clone());
                reg_loss(t, &reg, &vars, xv, av).unwrap()
            });
            assert!(err <= TOL, "seed {seed} {mode:?}: {err:e}");
        }
    }
}

#[test]
fn generator_adversarial_gradient() {
    for seed in 0..5u64 {
        let mut rng = seeded(seed, 9);
        let (b, k, l, z, h) = (6, 5, 3, 3, 7);
        let gen: Mlp<f64> = init_generator(l, z, k, h, seed).unwrap();
        let gen = mlp_from(&gen, &gen.params().map(|p| random(&mut rng, p.rows(), p.cols())).collect::<Vec<_>>());
        let critic: Mlp<f64> = init_discriminator(k, l, h, seed).unwrap();
        let critic = mlp_from(&critic, &critic.params().map(|p| random(&mut rng, p.rows(), p.cols())).collect::<Vec<_>>());
        let a = random(&mut rng, b, l);
        let noise = sample_noise(&mut rng, b, z);
        let params: Vec<Matrix<f64>> = gen.params().cloned().collect();
        let err = check(&params, &|t, v| {
            let gv = cyclegzsl::models::MlpVars { layers: vec![(v[0], v[1]), (v[2], v[3])] };
            let cv = critic.register(t);
            let av = t.leaf(a.clone());
            let zv = t.leaf(noise.clone());
            let fake = cyclegzsl::models::generator_forward_tape(&gen, t, &gv, av, zv).unwrap();
            generator_adversarial_loss(t, &critic, &cv, fake, av).unwrap()
        });
        assert!(err <= TOL, "seed {seed}: {err:e}");
    }
}
