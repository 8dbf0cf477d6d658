mod common;

use approx::assert_abs_diff_eq;
use common::{away_from_zero, gradcheck, random_tensor, rng, weighted_sum};
use geofuse::tensor::{Adam, Tape, Tensor};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

#[test]
fn add_with_suffix_broadcast() {
    let mut g = rng(1);
    let ps = [random_tensor(&mut g, &[2, 3, 4]), random_tensor(&mut g, &[4])];
    let err = gradcheck(&ps, H, |t, v| {
        let y = t.add(v[0], v[1]).unwrap();
        weighted_sum(t, y, 9)
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn sub_mul_scale() {
    let mut g = rng(2);
    let ps = [random_tensor(&mut g, &[3, 5]), random_tensor(&mut g, &[3, 5])];
    let err = gradcheck(&ps, H, |t, v| {
        let d = t.sub(v[0], v[1]).unwrap();
        let m = t.mul(d, v[0]).unwrap();
        let s = t.scale(m, -1.7).unwrap();
        weighted_sum(t, s, 3)
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn sigmoid_and_relu() {
    let mut g = rng(3);
    let ps = [away_from_zero(&mut g, &[4, 6])];
    let err = gradcheck(&ps, H, |t, v| {
        let s = t.sigmoid(v[0]).unwrap();
        let r = t.relu(v[0]).unwrap();
        let y = t.mul(s, r).unwrap();
        weighted_sum(t, y, 4)
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn matmul_layouts() {
    let mut g = rng(4);
    let ps = [
        random_tensor(&mut g, &[2, 3, 4]),
        random_tensor(&mut g, &[2, 4, 5]),
        random_tensor(&mut g, &[4, 2]),
        random_tensor(&mut g, &[3, 3]),
    ];
    let err = gradcheck(&ps, H, |t, v| {
        let batched = t.matmul(v[0], v[1]).unwrap();
        let right = t.matmul(v[0], v[2]).unwrap();
        let left = t.matmul(v[3], v[0]).unwrap();
        let a = weighted_sum(t, batched, 1);
        let b = weighted_sum(t, right, 2);
        let c = weighted_sum(t, left, 3);
        let ab = t.add(a, b).unwrap();
        t.add(ab, c).unwrap()
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn reshape_slice_concat() {
    let mut g = rng(5);
    let ps = [random_tensor(&mut g, &[2, 3, 4]), random_tensor(&mut g, &[2, 3, 2])];
    let err = gradcheck(&ps, H, |t, v| {
        let a = t.slice(v[0], 2, 1, 2).unwrap();
        let b = t.slice(v[0], 1, 0, 3).unwrap();
        let b = t.slice(b, 0, 1, 1).unwrap();
        let c = t.concat(&[a, v[1]], 2).unwrap();
        let r = t.reshape(c, &[6, 4]).unwrap();
        let x = weighted_sum(t, r, 5);
        let y = weighted_sum(t, b, 6);
        t.add(x, y).unwrap()
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn conv1d_time_both_inputs() {
    let mut g = rng(6);
    let ps = [random_tensor(&mut g, &[2, 7, 3, 2]), random_tensor(&mut g, &[3, 2, 4])];
    let err = gradcheck(&ps, H, |t, v| {
        let y = t.conv1d_time(v[0], v[1]).unwrap();
        weighted_sum(t, y, 7)
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn dropout_with_fixed_mask() {
    let mut g = rng(7);
    let ps = [random_tensor(&mut g, &[5, 5])];
    let err = gradcheck(&ps, H, |t, v| {
        let mut r = rng(11);
        let y = t.dropout(v[0], 0.3, true, &mut r).unwrap();
        weighted_sum(t, y, 8)
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn random_three_layer_composite() {
    let mut g = rng(8);
    let ps = [
        random_tensor(&mut g, &[6, 4]),
        random_tensor(&mut g, &[4, 5]),
        random_tensor(&mut g, &[5]),
        random_tensor(&mut g, &[5, 3]),
        random_tensor(&mut g, &[3, 1]),
    ];
    let err = gradcheck(&ps, H, |t, v| {
        let h = t.matmul(v[0], v[1]).unwrap();
        let h = t.add(h, v[2]).unwrap();
        let h = t.sigmoid(h).unwrap();
        let h = t.matmul(h, v[3]).unwrap();
        let h = t.sigmoid(h).unwrap();
        let y = t.matmul(h, v[4]).unwrap();
        let sq = t.mul(y, y).unwrap();
        t.sum(sq).unwrap()
    });
    assert!(err < TOL, "{err}");
}

#[test]
fn fan_out_accumulates() {
    let mut t = Tape::new();
    let x = t.param(Tensor::from_vec(vec![1.0, 2.0, 3.0]));
    let y = t.mul(x, x).unwrap();
    let l = t.sum(y).unwrap();
    t.backward(l).unwrap();
    assert_eq!(t.grad(x).unwrap().data(), &[2.0, 4.0, 6.0]);
    assert!(t.backward(l).is_err());
}

#[test]
fn adam_matches_scalar_recurrence() {
    let lr = 0.1;
    let mut adam = Adam::new(lr);
    let mut params = vec![Tensor::from_vec(vec![0.0])];
    let (mut w, mut m, mut v) = (0.0_f64, 0.0_f64, 0.0_f64);
    for step in 1..=100 {
        let g = 2.0 * (params[0].data()[0] - 3.0);
        adam.step(&mut params, &[Tensor::from_vec(vec![g])]).unwrap();

        let go = 2.0 * (w - 3.0);
        m = 0.9 * m + 0.1 * go;
        v = 0.999 * v + 0.001 * go * go;
        let mh = m / (1.0 - 0.9_f64.powi(step));
        let vh = v / (1.0 - 0.999_f64.powi(step));
        w -= lr * mh / (vh.sqrt() + 1e-8);
        assert_abs_diff_eq!(params[0].data()[0], w, epsilon = 1e-12);
    }
    assert!((params[0].data()[0] - 3.0).abs() < 0.5);
    assert_eq!(adam.steps(), 100);
}
