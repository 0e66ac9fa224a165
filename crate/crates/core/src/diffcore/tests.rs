use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

const EPS: f64 = 1e-4;
const TOL: f64 = 1e-4;

#[test]
fn uniform_logits_give_log_k() {
    let (p, loss) = softmax_xent(&[0.3; 57], 12).unwrap();
    assert!(p.iter().all(|&x| (x - 1.0 / 57.0).abs() < 1e-15));
    assert!((loss - 57f64.ln()).abs() < 1e-12);
}

#[test]
fn confident_logits_tiny_loss() {
    let (_, loss) = softmax_xent(&[10.0, -10.0], 0).unwrap();
    let oracle = (-20f64).exp().ln_1p();
    assert!(((loss - oracle) / oracle).abs() < 1e-5, "{loss} vs {oracle}");
    assert!((loss - 2.06e-9).abs() < 1e-11);
}

#[test]
fn softmax_shift_invariant_and_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let z: Vec<f64> = (0..7).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let c = rng.gen_range(-100.0..100.0);
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let (p, _) = softmax_xent(&z, 0).unwrap();
        let (q, _) = softmax_xent(&shifted, 0).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn gold_out_of_range() {
    assert_eq!(softmax_xent(&[1.0, 2.0], 2), Err(DiffError::ClassOutOfRange { gold: 2, classes: 2 }));
    let mut tape = Tape::new();
    let z = tape.constant(Tensor::column(vec![1.0, 2.0]));
    assert!(tape.softmax_xent(z, 5).is_err());
}

#[test]
fn tanh_outputs_open_interval() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::column(vec![-5.0, 0.0, 5.0, 0.3]));
    let t = tape.tanh(x);
    assert!(tape.value(t).data().iter().all(|v| v.abs() < 1.0));
}

#[test]
fn sum_of_parameters_has_unit_gradient() {
    let mut store = ParameterStore::new();
    let a = store.add("a", Tensor::column(vec![1.0, -2.0, 3.0])).unwrap();
    let b = store.add("b", Tensor::from_vec(2, 2, vec![0.5; 4])).unwrap();
    let unused = store.add("unused", Tensor::column(vec![7.0])).unwrap();
    let mut tape = Tape::new();
    let va = tape.param(&store, a);
    let vb = tape.param(&store, b);
    let sa = tape.sum(va);
    let sb = tape.sum(vb);
    let root = tape.add(sa, sb);
    store.zero_grad();
    tape.backward(root, &mut store).unwrap();
    assert!(store.grad(a).data().iter().all(|&g| g == 1.0));
    assert!(store.grad(b).data().iter().all(|&g| g == 1.0));
    assert_eq!(store.grad(unused).data(), &[0.0]);
}

#[test]
fn squared_norm_gradient_is_two_w() {
    let mut store = ParameterStore::new();
    let w = store.add("w", Tensor::column(vec![0.5, -1.5, 2.0])).unwrap();
    let mut tape = Tape::new();
    let v = tape.param(&store, w);
    let sq = tape.square(v);
    let root = tape.sum(sq);
    tape.backward(root, &mut store).unwrap();
    assert_eq!(store.grad(w).data(), &[1.0, -3.0, 4.0]);
}

#[test]
fn non_scalar_root_rejected() {
    let mut store = ParameterStore::new();
    let w = store.add("w", Tensor::column(vec![1.0, 2.0])).unwrap();
    let mut tape = Tape::new();
    let v = tape.param(&store, w);
    assert_eq!(tape.backward(v, &mut store), Err(DiffError::NonScalarRoot(vec![2, 1])));
}

#[test]
fn duplicate_names_rejected() {
    let mut store = ParameterStore::new();
    store.add("w", Tensor::scalar(1.0)).unwrap();
    assert!(matches!(store.add("w", Tensor::scalar(1.0)), Err(DiffError::DuplicateParameter(_))));
}

fn random_store(shapes: &[(&str, usize, usize)], seed: u64) -> ParameterStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    for &(name, r, c) in shapes {
        store.add(name, Tensor::uniform(r, c, 1.0, &mut rng)).unwrap();
    }
    store
}

fn check(store: &mut ParameterStore, f: impl FnMut(&ParameterStore, &mut Tape) -> Result<Var, DiffError>) -> f64 {
    let report = check_gradients(store, EPS, f).unwrap();
    assert!(report.coordinates > 0);
    report.max_relative_error
}

#[test]
fn finite_differences_per_op() {
    let mut store = random_store(&[("W", 3, 4), ("x", 4, 1), ("y", 3, 1)], 21);
    let [w, x, y] = ["W", "x", "y"].map(|n| store.id(n).unwrap());

    type Build = fn(&mut Tape, Var, Var, Var) -> Var;
    let cases: Vec<(&str, Build)> = vec![
        ("matmul", |t, w, x, _| {
            let m = t.matmul(w, x);
            t.sum(m)
        }),
        ("add", |t, w, x, y| {
            let m = t.matmul(w, x);
            let a = t.add(m, y);
            let s = t.square(a);
            t.sum(s)
        }),
        ("sub", |t, _, _, y| {
            let c = t.constant(Tensor::column(vec![0.1, 0.2, 0.3]));
            let d = t.sub(c, y);
            let s = t.square(d);
            t.sum(s)
        }),
        ("mul", |t, w, x, y| {
            let m = t.matmul(w, x);
            let p = t.mul(m, y);
            t.sum(p)
        }),
        ("scale", |t, _, _, y| {
            let s = t.scale(y, -2.5);
            let q = t.square(s);
            t.sum(q)
        }),
        ("sigmoid", |t, w, x, _| {
            let m = t.matmul(w, x);
            let s = t.sigmoid(m);
            let q = t.square(s);
            t.sum(q)
        }),
        ("tanh", |t, w, x, _| {
            let m = t.matmul(w, x);
            let s = t.tanh(m);
            let q = t.square(s);
            t.sum(q)
        }),
        ("softmax", |t, w, x, y| {
            let m = t.matmul(w, x);
            let p = t.softmax(m);
            let q = t.mul(p, y);
            t.sum(q)
        }),
        ("concat", |t, _, x, y| {
            let c = t.concat(&[x, y]);
            let q = t.square(c);
            let s = t.tanh(q);
            t.sum(s)
        }),
        ("mean", |t, w, x, y| {
            let m = t.matmul(w, x);
            let mean = t.mean(&[m, y, y]);
            let q = t.square(mean);
            t.sum(q)
        }),
        ("pick", |t, w, x, _| {
            let m = t.matmul(w, x);
            let a = t.pick(m, 1);
            let b = t.pick(m, 2);
            let d = t.mul(a, b);
            t.tanh(d)
        }),
        ("xent", |t, w, x, _| {
            let m = t.matmul(w, x);
            t.softmax_xent(m, 2).unwrap()
        }),
    ];
    for (name, build) in cases {
        let err = check(&mut store, |s, t| {
            let (vw, vx, vy) = (t.param(s, w), t.param(s, x), t.param(s, y));
            Ok(build(t, vw, vx, vy))
        });
        assert!(err <= TOL, "{name}: relative error {err}");
    }
}

#[test]
fn finite_differences_param_row() {
    let mut store = random_store(&[("E", 5, 3), ("v", 3, 1)], 22);
    let (e, v) = (store.id("E").unwrap(), store.id("v").unwrap());
    let err = check(&mut store, |s, t| {
        let r1 = t.param_row(s, e, 1);
        let r3 = t.param_row(s, e, 3);
        let again = t.param_row(s, e, 1);
        let vv = t.param(s, v);
        let a = t.mul(r1, vv);
        let b = t.mul(r3, again);
        let c = t.add(a, b);
        let q = t.tanh(c);
        Ok(t.sum(q))
    });
    assert!(err <= TOL, "{err}");
    // Rows never looked up get exactly zero gradient.
    assert!(store.grad(e).row(0).iter().all(|&g| g == 0.0));
}

#[test]
fn finite_differences_bilstm() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut store = ParameterStore::new();
    let enc = BiLstmParams::new(&mut store, "enc", 3, 4, &mut rng).unwrap();
    let head = store.add("head", Tensor::uniform(2, 8, 0.5, &mut rng)).unwrap();
    let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let err = check(&mut store, |s, t| {
        let seq: Vec<Var> = xs.iter().map(|x| t.constant(Tensor::column(x.clone()))).collect();
        let out = bilstm_encode(t, s, &enc, &seq)?;
        let h = t.param(s, head);
        let mid = t.mean(&out.steps);
        let both = t.add(mid, out.final_state);
        let logits = t.matmul(h, both);
        t.softmax_xent(logits, 1)
    });
    assert!(err <= TOL, "{err}");
}

#[test]
fn forward_backward_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut store = ParameterStore::new();
        let enc = BiLstmParams::new(&mut store, "enc", 2, 3, &mut rng).unwrap();
        let mut tape = Tape::new();
        let seq: Vec<Var> = (0..4).map(|i| tape.constant(Tensor::column(vec![i as f64 * 0.1, -0.2]))).collect();
        let out = bilstm_encode(&mut tape, &store, &enc, &seq).unwrap();
        let root = tape.sum(out.final_state);
        tape.backward(root, &mut store).unwrap();
        store.iter().flat_map(|(_, p)| p.grad.data().to_vec()).collect::<Vec<f64>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn adam_descends_a_quadratic() {
    let mut store = ParameterStore::new();
    let w = store.add("w", Tensor::column(vec![3.0, -2.0])).unwrap();
    let mut adam = Adam::new(&store, 0.1);
    for _ in 0..500 {
        store.zero_grad();
        let mut tape = Tape::new();
        let v = tape.param(&store, w);
        let sq = tape.square(v);
        let root = tape.sum(sq);
        tape.backward(root, &mut store).unwrap();
        adam.step(&mut store);
    }
    assert!(store.value(w).squared_norm() < 1e-3);
}

#[test]
fn adam_skips_frozen_parameters() {
    let mut store = ParameterStore::new();
    let w = store.add("w", Tensor::column(vec![3.0])).unwrap();
    store.set_trainable(w, false);
    store.get_mut(w).grad.fill(1.0);
    let mut adam = Adam::new(&store, 0.1);
    adam.step(&mut store);
    assert_eq!(store.value(w).data(), &[3.0]);
}
