use approx::assert_abs_diff_eq;
use ndarray::prelude::*;

use super::*;
use crate::linalg;

/// The 3-node path model used throughout: b12 = 1, b23 = 2, M = D = I,
/// SISO at node 0.
pub(crate) fn path3() -> SecondOrderModel<f64> {
    let net = NetworkModel::new(
        3,
        vec![(0, 1, 1.0), (1, 2, 2.0)],
        array![1.0, 1.0, 1.0],
        array![1.0, 1.0, 1.0],
        IoMap::selector(vec![0]),
        IoMap::selector(vec![0]),
    )
    .unwrap();
    let ps = ParameterSpace::around_unity(vec![1, 1, 1], 0.15).unwrap();
    SecondOrderModel::from_network(net, ps).unwrap()
}

#[test]
fn laplacian_of_path3_matches_hand_computation() {
    let model = path3();
    let expected = array![[1.0, -1.0, 0.0], [-1.0, 3.0, -2.0], [0.0, -2.0, 2.0]];
    assert_eq!(model.base_laplacian(), &expected);
}

#[test]
fn laplacian_single_edge() {
    let net = NetworkModel::new(
        2,
        vec![(0, 1, 1.0)],
        array![1.0, 1.0],
        array![1.0, 1.0],
        IoMap::identity(2),
        IoMap::identity(2),
    )
    .unwrap();
    let l = build_laplacian(&net).unwrap();
    assert_eq!(l, array![[1.0, -1.0], [-1.0, 1.0]]);
}

#[test]
fn laplacian_annihilates_ones() {
    let model = path3();
    let ones = Array1::ones(3);
    let r = model.base_laplacian().dot(&ones);
    use ndarray_linalg::Norm;
    assert!(r.norm_l2() <= 1e-12 * model.base_laplacian().norm_l2());
}

#[test]
fn disconnected_graph_names_components() {
    let err = NetworkModel::<f64>::new(
        4,
        vec![(0, 1, 1.0), (2, 3, 1.0)],
        Array1::ones(4),
        Array1::ones(4),
        IoMap::identity(4),
        IoMap::identity(4),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("2 components"), "{msg}");
    assert!(msg.contains("{0, 1}") && msg.contains("{2, 3}"), "{msg}");
}

#[test]
fn scaled_laplacian_hand_value() {
    let model = path3();
    let lp = model.scaled_laplacian(&[2.0, 1.0, 1.0]).unwrap();
    let expected = array![[4.0, -2.0, 0.0], [-2.0, 3.0, -2.0], [0.0, -2.0, 2.0]];
    assert_eq!(lp, expected);
    // null vector P^{-1} 1 = [0.5, 1, 1]
    let v = model.null_vector(&[2.0, 1.0, 1.0]).unwrap();
    assert_eq!(v, array![0.5, 1.0, 1.0]);
    use ndarray_linalg::Norm;
    assert!(lp.dot(&v).norm_l2() <= 1e-12 * lp.norm_l2());
}

#[test]
fn unit_parameter_recovers_base_bitwise() {
    let model = path3();
    let lp = model.scaled_laplacian(&[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(&lp, model.base_laplacian());
}

#[test]
fn nonpositive_parameter_rejected() {
    let model = path3();
    assert!(model.scaled_laplacian(&[0.0, 1.0, 1.0]).is_err());
    assert!(model.scaled_laplacian(&[-1.0, 1.0, 1.0]).is_err());
}

#[test]
fn null_vector_block_expansion() {
    let ps = ParameterSpace::<f64>::around_unity(vec![2, 2], 0.5).unwrap();
    let v = ps.null_vector(&[2.0, 4.0]).unwrap();
    assert_eq!(v, array![0.5, 0.5, 0.25, 0.25]);
    // p = 1 gives the ones vector
    assert_eq!(ps.null_vector(&[1.0, 1.0]).unwrap(), Array1::<f64>::ones(4));
}

#[test]
fn block_indicators_span_null_vectors() {
    let ps = ParameterSpace::<f64>::around_unity(vec![2, 2], 0.15).unwrap();
    let es = ps.block_indicators();
    assert_eq!(es[0], array![1.0, 1.0, 0.0, 0.0]);
    assert_eq!(es[1], array![0.0, 0.0, 1.0, 1.0]);
    // any null vector is a combination of the indicators
    let v = ps.null_vector(&[1.1, 0.9]).unwrap();
    let expected = &es[0] * (1.0 / 1.1) + &es[1] * (1.0 / 0.9);
    assert_abs_diff_eq!(v.as_slice().unwrap(), expected.as_slice().unwrap(), epsilon = 1e-15);
}

#[test]
fn generator_is_deterministic() {
    let cfg = GeneratorConfig::default();
    let a = generate_network::<f64>(NetworkKind::RandomConnected, 50, 7, &cfg).unwrap();
    let b = generate_network::<f64>(NetworkKind::RandomConnected, 50, 7, &cfg).unwrap();
    assert_eq!(a, b);
    let c = generate_network::<f64>(NetworkKind::RandomConnected, 50, 8, &cfg).unwrap();
    assert_ne!(a, c);
}

#[test]
fn generated_networks_satisfy_invariants() {
    let cfg = GeneratorConfig::default();
    for seed in 0..10 {
        for kind in [NetworkKind::Path, NetworkKind::Ring, NetworkKind::RandomConnected] {
            let net = generate_network::<f64>(kind, 20, seed, &cfg).unwrap();
            assert_eq!(net.node_count(), 20);
            assert!(net.inertia().iter().all(|&m| m > 0.0));
            assert!(net.damping().iter().all(|&d| d > 0.0));
            assert!(net.edges().iter().all(|&(i, j, b)| i < j && b > 0.0));
            // simple zero eigenvalue of the Laplacian (connectivity)
            let model = SecondOrderModel::with_default_params(net).unwrap();
            let evals = linalg::eigvals_symmetric(model.base_laplacian()).unwrap();
            let scale = evals[evals.len() - 1];
            assert!(evals[0].abs() <= 1e-12 * scale);
            assert!(evals[1] > 1e-9 * scale, "lambda_2 = {}", evals[1]);
        }
    }
}

#[test]
fn generator_rejects_bad_ranges() {
    let mut cfg = GeneratorConfig::default();
    cfg.ranges.inertia = (0.0, 1.0);
    assert!(generate_network::<f64>(NetworkKind::Path, 5, 0, &cfg).is_err());
}

#[test]
fn matpower_three_bus_case() {
    let case = r#"
function mpc = case3
mpc.version = '2';
mpc.baseMVA = 100;
% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
mpc.bus = [
    1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;
    2 2 0 0 0 0 1 1 0 345 1 1.1 0.9;
    3 2 0 0 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.branch = [
    1 2 0 1.0 0 250 250 250 0 0 1 -360 360;
    2 3 0 0.5 0 250 250 250 0 0 1 -360 360;
];
"#;
    let net = parse_matpower_case::<f64>(case, &MatpowerDefaults::default()).unwrap();
    let l = build_laplacian(&net).unwrap();
    assert_eq!(l, array![[1.0, -1.0, 0.0], [-1.0, 3.0, -2.0], [0.0, -2.0, 2.0]]);
}

#[test]
fn matpower_merges_parallel_and_skips_status_zero() {
    let case = r#"
mpc.bus = [
    1 1 0 0 0 0 1 1 0 345 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.branch = [
    1 2 0 1.0 0 0 0 0 0 0 1 -360 360;
    1 2 0 1.0 0 0 0 0 0 0 1 -360 360;
    1 2 0 0.1 0 0 0 0 0 0 0 -360 360;
];
"#;
    let net = parse_matpower_case::<f64>(case, &MatpowerDefaults::default()).unwrap();
    assert_eq!(net.edges(), &[(0, 1, 2.0)]);
}

#[test]
fn matpower_empty_branch_table_is_disconnected() {
    let case = "mpc.bus = [\n 1 1 0 0 0 0 1 1 0 345 1 1.1 0.9;\n 2 1 0 0 0 0 1 1 0 345 1 1.1 0.9;\n];\nmpc.branch = [\n];\n";
    let err = parse_matpower_case::<f64>(case, &MatpowerDefaults::default()).unwrap_err();
    assert!(matches!(err, crate::Error::Disconnected(_)), "{err}");
}

#[test]
fn matpower_malformed_entry_reports_line() {
    let case = "mpc.bus = [\n 1 1 0;\n 2 1 zz;\n];\nmpc.branch = [\n 1 2 0 1.0;\n];\n";
    let err = parse_matpower_case::<f64>(case, &MatpowerDefaults::default()).unwrap_err();
    match err {
        crate::Error::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other}"),
    }
}

#[test]
fn matpower_nonpositive_reactance_skipped_with_warning() {
    let case = "mpc.bus = [\n 1 1 0;\n 2 1 0;\n 3 1 0;\n];\nmpc.branch = [\n 1 2 0 1.0;\n 2 3 0 -0.5;\n 2 3 0 0.5;\n];\n";
    let net = parse_matpower_case::<f64>(case, &MatpowerDefaults::default()).unwrap();
    assert_eq!(net.edges(), &[(0, 1, 1.0), (1, 2, 2.0)]);
}

#[test]
fn matpower_roundtrip_preserves_laplacian() {
    let cfg = GeneratorConfig::default();
    let net = generate_network::<f64>(NetworkKind::RandomConnected, 30, 3, &cfg).unwrap();
    let case = to_matpower_case(&net);
    let defaults = MatpowerDefaults {
        input_nodes: Some(vec![0]),
        output_nodes: Some(vec![0]),
        ..MatpowerDefaults::default()
    };
    let reparsed = parse_matpower_case::<f64>(&case, &defaults).unwrap();
    let l0 = build_laplacian(&net).unwrap();
    let l1 = build_laplacian(&reparsed).unwrap();
    // susceptances pass through a double reciprocal; allow a few ulps
    for (a, b) in l0.iter().zip(l1.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-13 * l0[[0, 0]].abs().max(1.0));
    }
}

#[test]
fn model_json_roundtrip_is_exact() {
    let model = path3();
    let text = model_to_json(&model).unwrap();
    let back = model_from_json::<f64>(&text).unwrap();
    assert_eq!(model, back);
    // and the serialization itself is stable
    assert_eq!(text, model_to_json(&back).unwrap());
}

#[test]
fn model_json_roundtrip_random_model_bit_exact() {
    let cfg = GeneratorConfig::default();
    let net = generate_network::<f64>(NetworkKind::RandomConnected, 40, 11, &cfg).unwrap();
    let model = SecondOrderModel::with_default_params(net).unwrap();
    let text = model_to_json(&model).unwrap();
    let back = model_from_json::<f64>(&text).unwrap();
    assert_eq!(model, back);
}

#[test]
fn model_file_block_sum_mismatch_is_schema_error() {
    let model = path3();
    let mut file = ModelFile::from_model(&model);
    file.param_blocks = vec![2, 2];
    file.param_box = ParamBox {
        lower: vec![0.85, 0.85],
        upper: vec![1.15, 1.15],
    };
    let err = file.into_model().unwrap_err();
    match err {
        crate::Error::Schema { path, .. } => assert_eq!(path, "param_blocks"),
        other => panic!("expected schema error, got {other}"),
    }
}

#[test]
fn model_file_negative_susceptance_names_edge() {
    let model = path3();
    let mut file = ModelFile::from_model(&model);
    file.edges[1] = (1, 2, -2.0);
    let err = file.into_model().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("(1, 2)"), "{msg}");
}

#[test]
fn selector_and_dense_io_maps() {
    let sel = IoMap::<f64>::selector(vec![2, 0]);
    let b = sel.input_matrix(3);
    assert_eq!(b, array![[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]);
    let c = sel.output_matrix(3);
    assert_eq!(c, array![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
    let dense = IoMap::Dense(vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
    assert_eq!(dense.input_matrix(3).dim(), (3, 2));
}

#[test]
fn lambda2_of_path3() {
    // eigenvalues of the path Laplacian [[1,-1,0],[-1,3,-2],[0,-2,2]] are
    // {0, 3 - sqrt(3), 3 + sqrt(3)}
    let model = path3();
    let l2 = model.lambda2().unwrap();
    assert_abs_diff_eq!(l2, 3.0 - 3.0_f64.sqrt(), epsilon = 1e-12);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// For random connected models and admissible parameters, L(p) is
        /// symmetric PSD with exactly one eigenvalue below lambda_2 / 2.
        #[test]
        fn scaled_laplacian_keeps_simple_zero(seed in 0u64..500, pbits in 0u32..1024) {
            let cfg = GeneratorConfig::default();
            let net = generate_network::<f64>(NetworkKind::RandomConnected, 12, seed, &cfg).unwrap();
            let model = SecondOrderModel::with_default_params(net).unwrap();
            let nu = model.param_space().num_blocks();
            let p: Vec<f64> = (0..nu)
                .map(|k| 0.85 + 0.3 * (((pbits >> (k % 10)) & 1) as f64 * 0.5 + 0.25))
                .collect();
            let lp = model.scaled_laplacian(&p).unwrap();
            prop_assert!(linalg::symmetry_defect(&lp.view()) <= 1e-14);
            let evals = linalg::eigvals_symmetric(&lp).unwrap();
            let norm = evals[evals.len() - 1];
            prop_assert!(evals[0] >= -1e-10 * norm);
            let lambda2 = evals[1];
            let below = evals.iter().filter(|&&e| e < lambda2 / 2.0).count();
            prop_assert_eq!(below, 1);
        }

        /// save -> load is structurally exact for random generated models.
        #[test]
        fn json_roundtrip(seed in 0u64..500) {
            let cfg = GeneratorConfig::default();
            let net = generate_network::<f64>(NetworkKind::RandomConnected, 10, seed, &cfg).unwrap();
            let model = SecondOrderModel::with_default_params(net).unwrap();
            let text = model_to_json(&model).unwrap();
            let back = model_from_json::<f64>(&text).unwrap();
            prop_assert_eq!(model, back);
        }
    }
}

