mod common;

use common::{gradcheck, random_tensor, rng};
use geofuse::fusion::{pairwise_distances, DistanceMetric};
use geofuse::graph::{build_adjacency, graph_operator, OperatorKind};
use geofuse::stgcn::{graph_conv, l2_loss, GraphContext, GraphConvMode, StgcnConfig, StgcnModel};
use geofuse::tensor::{Tape, Tensor};
use ndarray::{Array2, Array3};
use rand::Rng;

fn context(s: usize, seed: u64, mode: GraphConvMode, order: usize) -> GraphContext {
    let mut g = rng(seed);
    let pts: Vec<[f64; 2]> = (0..s).map(|_| [g.gen_range(0.0..1.0), g.gen_range(0.0..1.0)]).collect();
    let adj = build_adjacency(&pairwise_distances(&pts, DistanceMetric::Euclidean).unwrap());
    let op = graph_operator(&adj, mode.operator_kind()).unwrap();
    GraphContext::new(&op, mode, order).unwrap()
}

fn tiny(mode: GraphConvMode, residual: bool) -> StgcnConfig {
    StgcnConfig {
        history: 6,
        in_channels: 2,
        channels: [3, 2, 3],
        kernel_t: 2,
        graph_kernel: if mode == GraphConvMode::Chebyshev { 3 } else { 1 },
        graph_mode: mode,
        dropout: 0.0,
        residual,
        target_channel: 0,
        init_seed: 5,
    }
}

fn check_full_model(mode: GraphConvMode, residual: bool) {
    let cfg = tiny(mode, residual);
    let ctx = context(3, 2, mode, cfg.graph_kernel);
    let model = StgcnModel::new(cfg).unwrap();
    let mut g = rng(3);
    let params: Vec<Tensor> = model.params.tensors.iter().map(|p| random_tensor(&mut g, p.shape())).collect();
    let x = random_tensor(&mut g, &[2, 6, 3, 2]);
    let y = random_tensor(&mut g, &[2, 3, 1]);
    let err = gradcheck(&params, 1e-5, |t, vars| {
        let xi = t.constant(x.clone());
        let yi = t.constant(y.clone());
        let mut r = rng(0);
        let p = model.forward(t, vars, xi, &ctx, false, &mut r).unwrap();
        l2_loss(t, p, yi).unwrap()
    });
    assert!(err < 1e-4, "{mode:?} residual={residual}: {err}");
}

#[test]
fn full_model_gradients_chebyshev() {
    check_full_model(GraphConvMode::Chebyshev, false);
}

#[test]
fn full_model_gradients_first_order() {
    check_full_model(GraphConvMode::FirstOrder, false);
}

#[test]
fn full_model_gradients_residual() {
    check_full_model(GraphConvMode::Chebyshev, true);
}

#[test]
fn chebyshev_graph_conv_matches_dense_expansion() {
    let ctx = context(4, 9, GraphConvMode::Chebyshev, 3);
    let mut g = rng(10);
    let x = random_tensor(&mut g, &[4, 2]);
    let theta = random_tensor(&mut g, &[3, 2, 3]);
    let mut t = Tape::new();
    let xv = t.constant(x.clone());
    let kv = t.constant(theta.clone());
    let y = graph_conv(&mut t, xv, kv, &ctx).unwrap();

    // independent recurrence on the rescaled operator T_1 = M
    let m = ctx.basis[1].clone();
    let t0 = Array2::<f64>::eye(4);
    let t1 = m.clone();
    let t2 = 2.0 * m.dot(&t1) - &t0;
    let xa = Array2::from_shape_vec((4, 2), x.data().to_vec()).unwrap();
    let mut expect = Array2::<f64>::zeros((4, 3));
    for (r, tr) in [t0, t1, t2].iter().enumerate() {
        let th = Array2::from_shape_vec((2, 3), theta.data()[r * 6..(r + 1) * 6].to_vec()).unwrap();
        expect = expect + tr.dot(&xa).dot(&th);
    }
    for (a, b) in t.value(y).data().iter().zip(expect.iter()) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn first_order_single_node_is_scaling() {
    let ctx = context(1, 1, GraphConvMode::FirstOrder, 1);
    let mut t = Tape::new();
    let x = t.constant(Tensor::new(vec![1, 1], vec![2.5]).unwrap());
    let k = t.constant(Tensor::new(vec![1, 1, 1], vec![-0.4]).unwrap());
    let y = graph_conv(&mut t, x, k, &ctx).unwrap();
    assert!((t.value(y).item() - (-1.0)).abs() < 1e-15);
}

#[test]
fn batch_rows_match_single_windows() {
    let cfg = StgcnConfig {
        history: 12,
        in_channels: 3,
        channels: [8, 4, 8],
        ..StgcnConfig::default()
    };
    let ctx = context(5, 4, GraphConvMode::Chebyshev, 3);
    let model = StgcnModel::new(cfg).unwrap();
    let mut g = rng(12);
    let windows: Vec<Array3<f64>> = (0..8)
        .map(|_| Array3::from_shape_fn((12, 5, 3), |_| g.gen_range(0.0..1.0)))
        .collect();
    let views: Vec<_> = windows.iter().map(|w| w.view()).collect();
    let batch = model.predict_batch(&views, &ctx).unwrap();
    for (i, w) in windows.iter().enumerate() {
        let single = model.predict_batch(&[w.view()], &ctx).unwrap();
        for (a, b) in single[0].iter().zip(&batch[i]) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn time_lengths_through_blocks() {
    let cfg = StgcnConfig {
        in_channels: 4,
        ..StgcnConfig::default()
    };
    let ctx = context(4, 6, GraphConvMode::Chebyshev, 3);
    let model = StgcnModel::new(cfg).unwrap();
    let mut t = Tape::new();
    let vars = model.register(&mut t);
    let mut g = rng(13);
    let x = t.constant(random_tensor(&mut g, &[2, 12, 4, 4]));
    let h1 = model.st_conv_block(&mut t, &vars, &model.block1, x, &ctx).unwrap();
    assert_eq!(t.shape(h1), &[2, 8, 4, 32]);
    let h2 = model.st_conv_block(&mut t, &vars, &model.block2, h1, &ctx).unwrap();
    assert_eq!(t.shape(h2), &[2, 4, 4, 32]);
    let mut r = rng(0);
    let y = model.forward(&mut t, &vars, x, &ctx, false, &mut r).unwrap();
    assert_eq!(t.shape(y), &[2, 4, 1]);
}

#[test]
fn too_short_history_is_rejected() {
    for (p, ft) in [(8, 3), (4, 2), (12, 4)] {
        let cfg = StgcnConfig {
            history: p,
            kernel_t: ft,
            ..StgcnConfig::default()
        };
        assert!(StgcnModel::new(cfg).is_err(), "P={p} f_t={ft}");
    }
    assert!(StgcnModel::new(StgcnConfig {
        history: 9,
        ..StgcnConfig::default()
    })
    .is_ok());
}

#[test]
fn mismatched_operator_is_rejected() {
    let mut g = rng(1);
    let pts: Vec<[f64; 2]> = (0..3).map(|_| [g.gen_range(0.0..1.0), g.gen_range(0.0..1.0)]).collect();
    let adj = build_adjacency(&pairwise_distances(&pts, DistanceMetric::Euclidean).unwrap());
    let op = graph_operator(&adj, OperatorKind::RenormalizedAdjacency).unwrap();
    assert!(GraphContext::new(&op, GraphConvMode::Chebyshev, 3).is_err());
}
