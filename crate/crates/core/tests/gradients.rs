//! Tape gradients against central finite differences.

mod common;

use cogat::graph::{MaskMode, ModelParams};
use cogat::numerics::{seeded_rng, SeededRng, Tape, Tensor, Var};
use cogat::Result;
use common::{gradient_check, random_graph, relative_error, small_config};
use rand::Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random_tensor(rng: &mut SeededRng, shape: &[usize]) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap()
}

/// Reduces `op`'s output with fixed random weights and compares the gradient
/// of every input against central differences, at ten random points.
fn check_op<F>(name: &str, shapes: &[&[usize]], op: F)
where
    F: Fn(&Tape<'_>, &[Var]) -> Result<Var>,
{
    let mut rng = seeded_rng(name.len() as u64 * 31 + 7);
    for point in 0..10 {
        let inputs: Vec<Tensor> = shapes.iter().map(|s| random_tensor(&mut rng, s)).collect();
        let eval = |inputs: &[Tensor], weights: &Tensor| -> (f64, Vec<Option<Tensor>>) {
            let tape = Tape::new();
            let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t)).collect();
            let out = op(&tape, &vars).unwrap();
            let w = tape.constant(weights.clone());
            let prod = tape.mul(out, w).unwrap();
            let loss = tape.sum(prod);
            let grads = tape.backward(loss).unwrap();
            let g = vars.iter().map(|v| grads.get(*v).cloned()).collect();
            (tape.scalar(loss), g)
        };
        let out_shape = {
            let tape = Tape::new();
            let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t)).collect();
            let out = op(&tape, &vars).unwrap();
            tape.shape(out)
        };
        let weights = random_tensor(&mut rng, &out_shape);
        let (_, grads) = eval(&inputs, &weights);
        for (k, input) in inputs.iter().enumerate() {
            for i in 0..input.len() {
                let mut plus = inputs.clone();
                plus[k].data_mut()[i] += STEP;
                let mut minus = inputs.clone();
                minus[k].data_mut()[i] -= STEP;
                let numeric = (eval(&plus, &weights).0 - eval(&minus, &weights).0) / (2.0 * STEP);
                let analytic = grads[k].as_ref().map_or(0.0, |g| g.data()[i]);
                let err = relative_error(analytic, numeric);
                assert!(
                    err < TOL,
                    "{name}: point {point} input {k}[{i}] analytic {analytic} numeric {numeric} rel {err}"
                );
            }
        }
    }
}

#[test]
fn matmul_gradient() {
    check_op("matmul", &[&[3, 4], &[4, 2]], |t, v| t.matmul(v[0], v[1]));
}

#[test]
fn transpose_gradient() {
    check_op("transpose", &[&[2, 3]], |t, v| t.transpose(v[0]));
}

#[test]
fn elementwise_gradients() {
    check_op("add", &[&[2, 3], &[2, 3]], |t, v| t.add(v[0], v[1]));
    check_op("sub", &[&[2, 3], &[2, 3]], |t, v| t.sub(v[0], v[1]));
    check_op("mul", &[&[2, 3], &[2, 3]], |t, v| t.mul(v[0], v[1]));
    check_op("affine", &[&[2, 3]], |t, v| Ok(t.affine(v[0], -0.7, 0.3)));
    check_op("tanh", &[&[2, 3]], |t, v| Ok(t.tanh(v[0])));
}

#[test]
fn scalar_mul_gradient() {
    check_op("scalar_mul", &[&[1], &[2, 3]], |t, v| t.scalar_mul(v[0], v[1]));
}

#[test]
fn linear_gradient() {
    check_op("linear", &[&[3, 4], &[2, 4], &[1, 2]], |t, v| t.linear(v[0], v[1], v[2]));
}

#[test]
fn softmax_gradients() {
    check_op("softmax_rows", &[&[3, 4]], |t, v| t.softmax(v[0], 1));
    check_op("softmax_cols", &[&[3, 4]], |t, v| t.softmax(v[0], 0));
}

#[test]
fn cross_entropy_through_softmax() {
    check_op("cross_entropy", &[&[1, 3]], |t, v| {
        let p = t.softmax(v[0], 1)?;
        t.cross_entropy(p, 2)
    });
}

#[test]
fn reduction_gradients() {
    check_op("sum", &[&[2, 3]], |t, v| Ok(t.sum(v[0])));
    check_op("mean", &[&[2, 3]], |t, v| Ok(t.mean(v[0])));
    check_op("add_all", &[&[1], &[1], &[1]], |t, v| t.add_all(v));
}

#[test]
fn indexing_gradients() {
    check_op("index", &[&[2, 3]], |t, v| t.index(v[0], 4));
    check_op("row", &[&[3, 2]], |t, v| t.row(v[0], 1));
    check_op("slice_cols", &[&[2, 5]], |t, v| t.slice_cols(v[0], 1, 4));
    check_op("concat_cols", &[&[2, 2], &[2, 3]], |t, v| t.concat_cols(v));
    check_op("stack_rows", &[&[1, 3], &[1, 3], &[1, 3]], |t, v| t.stack_rows(v));
}

#[test]
fn embedding_bag_gradient() {
    check_op("embedding_bag", &[&[6, 3]], |t, v| t.embedding_bag(v[0], &[(1, 2.0), (4, 1.0), (5, 3.0)]));
}

#[test]
fn reused_variable_accumulates() {
    // x used twice: d/dx sum(x ⊙ x) = 2x, the sum of both branch gradients
    let x = Tensor::row(&[0.5, -2.0, 3.0]);
    let tape = Tape::new();
    let v = tape.param(&x);
    let sq = tape.mul(v, v).unwrap();
    let loss = tape.sum(sq);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get(v).unwrap().data(), &[1.0, -4.0, 6.0]);
}

#[test]
fn sum_gradient_is_ones() {
    let x = Tensor::zeros(&[3, 2]);
    let tape = Tape::new();
    let v = tape.param(&x);
    let loss = tape.sum(v);
    assert_eq!(tape.backward(loss).unwrap().get(v).unwrap().data(), &[1.0; 6]);
}

#[test]
fn non_scalar_backward_is_rejected() {
    let x = Tensor::zeros(&[3, 2]);
    let tape = Tape::new();
    let v = tape.param(&x);
    assert!(tape.backward(v).is_err());
}

#[test]
fn floored_cross_entropy_is_counted() {
    let p = Tensor::row(&[1.0, 0.0, 0.0]);
    let tape = Tape::new();
    let v = tape.param(&p);
    let loss = tape.cross_entropy(v, 1).unwrap();
    assert!((tape.scalar(loss) - -(1e-12f64).ln()).abs() < 1e-9);
    assert_eq!(tape.floor_hits(), 1);
    let g = tape.backward(loss).unwrap();
    assert!(g.get(v).is_none_or(|g| g.data().iter().all(|x| x.is_finite())));
}

#[test]
fn full_model_gradient_on_three_nodes() {
    for seed in [3, 17] {
        let mut rng = seeded_rng(seed);
        let graph = random_graph(&mut rng, 1, 3);
        let params = ModelParams::init(small_config(), seed).unwrap();
        let report = gradient_check(&params, &graph, STEP);
        for (name, err) in &report.per_tensor {
            assert!(*err < TOL, "seed {seed}: {name} rel err {err}");
        }
    }
}

#[test]
fn padded_graph_gradient() {
    let mut rng = seeded_rng(5);
    let graph = random_graph(&mut rng, 1, 0);
    let params = ModelParams::init(small_config(), 5).unwrap();
    assert!(gradient_check(&params, &graph, STEP).worst() < TOL);
}

#[test]
fn stacked_layers_gradient() {
    let mut cfg = small_config();
    cfg.layers = 2;
    let mut rng = seeded_rng(8);
    let graph = random_graph(&mut rng, 1, 3);
    let params = ModelParams::init(cfg, 8).unwrap();
    let report = gradient_check(&params, &graph, STEP);
    assert!(report.worst() < TOL, "{:?}", report.per_tensor);
}

#[test]
fn loss_ignores_mode_for_padding() {
    let mut rng = seeded_rng(2);
    let graph = random_graph(&mut rng, 1, 0);
    let params = ModelParams::init(small_config(), 2).unwrap();
    let a = common::loss_value(&params, &graph, MaskMode::Soft);
    let b = common::loss_value(&params, &graph, MaskMode::NoMask);
    assert_eq!(a, b);
}
