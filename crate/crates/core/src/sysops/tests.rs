use approx::assert_abs_diff_eq;
use ndarray::prelude::*;
use ndarray_linalg::Norm;
use num_complex::Complex64;

use super::*;
use crate::linalg;
use crate::netmodel::tests::path3;

type C64 = Complex64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Scalar second-order system M s^2 + D s + L with B = C = 1.
fn scalar_system(m: f64, d: f64, l: f64) -> SecondOrderSystem<f64> {
    SecondOrderSystem {
        mass: CoeffMatrix::Diag(array![m]),
        damping: CoeffMatrix::Diag(array![d]),
        stiffness: array![[l]],
        b: array![[1.0]],
        c: array![[1.0]],
    }
}

/// Test-side pole/residue oracle: evaluate `C (sI - A)^{-1} B` through the
/// raw eigendecomposition of `A`, independently of the solver-based path.
struct EigOracle {
    vals: Array1<C64>,
    cx: Array2<C64>, // C X
    xb: Array2<C64>, // X^{-1} B
}

impl EigOracle {
    fn new(a: &Array2<f64>, b: &Array2<f64>, cmat: &Array2<f64>) -> Self {
        let (vals, vecs) = linalg::eig_general(a).unwrap();
        let bc = linalg::to_complex::<f64>(&b.view());
        let xb = linalg::solve_multi::<f64>(&vecs, &bc, "oracle").unwrap();
        let cx = linalg::to_complex::<f64>(&cmat.view()).dot(&vecs);
        Self { vals, cx, xb }
    }

    fn eval(&self, s: C64) -> Array2<C64> {
        let n = self.vals.len();
        let (q, m) = (self.cx.nrows(), self.xb.ncols());
        let mut out = Array2::zeros((q, m));
        for k in 0..n {
            let w = 1.0 / (s - self.vals[k]);
            for i in 0..q {
                for j in 0..m {
                    out[[i, j]] += self.cx[[i, k]] * w * self.xb[[k, j]];
                }
            }
        }
        out
    }

    /// Residue matrix of the eigenvalue closest to zero.
    fn zero_residue(&self) -> Array2<C64> {
        let mut k0 = 0;
        for (k, l) in self.vals.iter().enumerate() {
            if l.norm() < self.vals[k0].norm() {
                k0 = k;
            }
        }
        let (q, m) = (self.cx.nrows(), self.xb.ncols());
        let mut out = Array2::zeros((q, m));
        for i in 0..q {
            for j in 0..m {
                out[[i, j]] = self.cx[[i, k0]] * self.xb[[k0, j]];
            }
        }
        out
    }
}

#[test]
fn scalar_transfer_closed_form() {
    // H(s) = 1/(s^2 + s), H(1) = 0.5
    let sys = scalar_system(1.0, 1.0, 0.0);
    let h = sys.eval(c(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(h[[0, 0]].re, 0.5, epsilon = 1e-14);
    assert_abs_diff_eq!(h[[0, 0]].im, 0.0, epsilon = 1e-14);
}

#[test]
fn transfer_matches_eigendecomposition_oracle() {
    let model = path3();
    let p = vec![1.0, 1.0, 1.0];
    let real = companion_form(&model, &p).unwrap();
    let oracle = EigOracle::new(real.a(), real.b(), real.c());
    for s in [c(0.0, 1.0), c(1.0, 0.0), c(0.3, 2.0), c(0.0, 0.01)] {
        let direct = eval_transfer(&model, s, &p).unwrap();
        let probe = oracle.eval(s);
        let denom = probe.norm_l2().max(1e-300);
        assert!(
            (&direct - &probe).norm_l2() / denom <= 1e-10,
            "mismatch at s = {s}"
        );
    }
}

#[test]
fn transfer_singular_at_zero() {
    let model = path3();
    let err = eval_transfer(&model, c(0.0, 0.0), &[1.0, 1.0, 1.0]).unwrap_err();
    match err {
        crate::Error::Singular { rcond, .. } => assert!(rcond < 1e-12),
        other => panic!("expected singularity error, got {other}"),
    }
}

#[test]
fn companion_blocks_scalar_example() {
    // M = 2, D = 3, L = 0, B = 1: A = [[0, 1], [0, -1.5]], B1 = [0, 0.5]^T
    let sys = scalar_system(2.0, 3.0, 0.0);
    let real = FirstOrderRealization::new(sys).unwrap();
    assert_eq!(real.a(), &array![[0.0, 1.0], [0.0, -1.5]]);
    assert_eq!(real.b(), &array![[0.0], [0.5]]);
    assert_eq!(real.c(), &array![[1.0, 0.0]]);
}


/// Greedy nearest-neighbor matching between two spectra.
fn assert_spectra_match(expected: &[C64], got: &[C64], rel_tol: f64) {
    assert_eq!(expected.len(), got.len());
    let mut remaining: Vec<C64> = got.to_vec();
    for e in expected {
        let (k, d) = remaining
            .iter()
            .enumerate()
            .map(|(k, g)| (k, (e - g).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(d <= rel_tol * e.norm().max(1.0), "unmatched pole {e} (closest {})", remaining[k]);
        remaining.swap_remove(k);
    }
}

/// Polynomial arithmetic for the quadratic-pencil determinant oracle.
mod poly {
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn add_scaled(acc: &mut Vec<f64>, s: f64, b: &[f64]) {
        if acc.len() < b.len() {
            acc.resize(b.len(), 0.0);
        }
        for (j, &y) in b.iter().enumerate() {
            acc[j] += s * y;
        }
    }

    /// Leibniz determinant of a matrix of polynomials (tiny n only).
    pub fn det(mat: &[Vec<Vec<f64>>]) -> Vec<f64> {
        let n = mat.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut out = vec![0.0];
        permute(&mut perm, 0, &mut |perm, sign| {
            let mut term = vec![1.0];
            for (i, &j) in perm.iter().enumerate() {
                term = mul(&term, &mat[i][j]);
            }
            add_scaled(&mut out, sign, &term);
        });
        out
    }

    fn permute(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize], f64)) {
        let n = perm.len();
        if k == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if perm[i] > perm[j] {
                        inv += 1;
                    }
                }
            }
            f(perm, if inv % 2 == 0 { 1.0 } else { -1.0 });
            return;
        }
        for i in k..n {
            perm.swap(k, i);
            permute(perm, k + 1, f);
            perm.swap(k, i);
        }
    }

    /// Roots of a polynomial via its companion matrix.
    pub fn roots(coeffs: &[f64]) -> Vec<num_complex::Complex64> {
        let deg = coeffs.len() - 1;
        let lead = coeffs[deg];
        let mut a = ndarray::Array2::<f64>::zeros((deg, deg));
        for i in 1..deg {
            a[[i, i - 1]] = 1.0;
        }
        for i in 0..deg {
            a[[i, deg - 1]] = -coeffs[i] / lead;
        }
        let (vals, _) = crate::linalg::eig_general(&a).unwrap();
        vals.to_vec()
    }
}

#[test]
fn companion_poles_match_polynomial_oracle() {
    let model = path3();
    let p = vec![1.1, 0.9, 1.05];
    let real = companion_form(&model, &p).unwrap();
    let vals = real.eigenvalues().unwrap();

    // det(s^2 M + s D + L(p)) entries as polynomials in s
    let lp = model.scaled_laplacian(&p).unwrap();
    let m = model.inertia();
    let d = model.damping();
    let mut mat = vec![vec![vec![0.0]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut entry = vec![lp[[i, j]]];
            if i == j {
                entry = vec![lp[[i, j]], d[i], m[i]];
            }
            mat[i][j] = entry;
        }
    }
    let charpoly = poly::det(&mat);
    let expected = poly::roots(&charpoly);
    let got = vals.to_vec();
    assert_spectra_match(&expected, &got, 1e-8);
    // exactly one zero eigenvalue
    let zero_tol = real.zero_tol();
    assert_eq!(got.iter().filter(|z| z.norm() < zero_tol).count(), 1);
}

#[test]
fn companion_agrees_with_second_order_eval() {
    let model = path3();
    let p = vec![0.95, 1.1, 1.0];
    let so = realize(&model, &p).unwrap();
    let real = companion_form(&model, &p).unwrap();
    for s in [c(0.5, 0.7), c(0.0, 3.0), c(2.0, 0.0), c(0.1, -0.4), c(1.0, 5.0)] {
        let h2 = so.eval(s).unwrap();
        let h1 = real.eval(s).unwrap();
        assert!((&h1 - &h2).norm_l2() <= 1e-9 * h2.norm_l2().max(1e-300));
    }
}

#[test]
fn full_model_abscissa_negative_excluding_zero() {
    use crate::netmodel::{generate_network, GeneratorConfig, NetworkKind, SecondOrderModel};
    let cfg = GeneratorConfig::default();
    for seed in 0..20 {
        let net = generate_network::<f64>(NetworkKind::RandomConnected, 12, seed, &cfg).unwrap();
        let model = SecondOrderModel::with_default_params(net).unwrap();
        let real = companion_form(&model, &vec![1.0; 12]).unwrap();
        let vals = real.eigenvalues().unwrap();
        let zero_tol = real.zero_tol();
        let mut zeros = 0;
        for l in vals.iter() {
            if l.norm() < zero_tol {
                zeros += 1;
            } else {
                assert!(l.re < 0.0, "seed {seed}: pole {l}");
            }
        }
        assert_eq!(zeros, 1, "seed {seed}");
    }
}

#[test]
fn zero_residue_example_and_oracle() {
    // n = 3 path, M = D = I, SISO at node 0: alpha = 3, phi0 = 1/3
    let model = path3();
    let p = vec![1.0, 1.0, 1.0];
    let res = model_zero_residue(&model, &p).unwrap();
    assert_abs_diff_eq!(res.alpha_d, 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(res.phi0[[0, 0]], 1.0 / 3.0, epsilon = 1e-15);

    // partial-fraction oracle from the companion eigendecomposition
    let real = companion_form(&model, &p).unwrap();
    let oracle = EigOracle::new(real.a(), real.b(), real.c());
    let phi0_oracle = oracle.zero_residue();
    assert!((res.phi0[[0, 0]] - phi0_oracle[[0, 0]].re).abs() <= 1e-10 * res.phi0[[0, 0]].abs());
    assert!(phi0_oracle[[0, 0]].im.abs() <= 1e-12);
}

#[test]
fn zero_residue_invariant_under_scaling() {
    let model = path3();
    let so = realize(&model, &[1.2, 0.9, 1.0]).unwrap();
    let upsilon = model.null_vector(&[1.2, 0.9, 1.0]).unwrap();
    let r1 = system_zero_residue(&so, &upsilon.view()).unwrap();
    let scaled = upsilon.mapv(|x| x * -7.5);
    let r2 = system_zero_residue(&so, &scaled.view()).unwrap();
    assert_abs_diff_eq!(r1.phi0[[0, 0]], r2.phi0[[0, 0]], epsilon = 1e-14);
}

#[test]
fn closed_form_zero_eigenvectors_annihilate_companion() {
    let model = path3();
    let p = vec![1.05, 0.9, 1.1];
    let real = companion_form(&model, &p).unwrap();
    let res = model_zero_residue(&model, &p).unwrap();
    let n = 3;
    let mut q1 = Array1::zeros(2 * n);
    q1.slice_mut(s![0..n]).assign(&res.upsilon);
    let dv = model.damping() * &res.upsilon;
    let mv = model.inertia() * &res.upsilon;
    let mut q1t = Array1::zeros(2 * n);
    q1t.slice_mut(s![0..n]).assign(&dv);
    q1t.slice_mut(s![n..]).assign(&mv);
    q1t.mapv_inplace(|x| x / res.alpha_d);
    assert!(real.a().dot(&q1).norm_l2() <= 1e-12 * real.a().norm_l2());
    assert!(real.a().t().dot(&q1t).norm_l2() <= 1e-12 * real.a().norm_l2());
    assert_abs_diff_eq!(q1t.dot(&q1), 1.0, epsilon = 1e-13);
}

#[test]
fn deflate_scalar_free_mass() {
    // M = D = 1, L = 0: H(s) = 1/(s^2 + s) = 1/s - 1/(s+1)
    let sys = scalar_system(1.0, 1.0, 0.0);
    let real = FirstOrderRealization::new(sys.clone()).unwrap();
    let upsilon = array![1.0];
    let res = system_zero_residue(&sys, &upsilon.view()).unwrap();
    assert_abs_diff_eq!(res.phi0[[0, 0]], 1.0, epsilon = 1e-15);
    let split = deflate_zero_mode(&real, &res).unwrap();
    assert_eq!(split.stable_part.order(), 1);
    assert_abs_diff_eq!(split.stable_part.a[[0, 0]], -1.0, epsilon = 1e-12);
    // stable part value at s = 1 is -1/(s+1) = -0.5
    let h = split.stable_part.eval(c(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(h[[0, 0]].re, -0.5, epsilon = 1e-12);
}

#[test]
fn deflation_preserves_input_output_behavior() {
    let model = path3();
    let p = vec![1.0, 0.9, 1.1];
    let split = deflate_model(&model, &p).unwrap();
    let so = realize(&model, &p).unwrap();
    for k in 0..10 {
        let s = c(0.1 + 0.2 * k as f64, 1.5 - 0.3 * k as f64);
        let direct = so.eval(s).unwrap();
        let recombined = split.eval(s).unwrap();
        assert!(
            (&direct - &recombined).norm_l2() <= 1e-9 * direct.norm_l2(),
            "probe {k}"
        );
    }
}

#[test]
fn deflated_poles_are_the_nonzero_companion_eigenvalues() {
    let model = path3();
    let p = vec![1.0, 1.0, 1.0];
    let real = companion_form(&model, &p).unwrap();
    let split = deflate_model(&model, &p).unwrap();
    let full: Vec<C64> = real
        .eigenvalues()
        .unwrap()
        .to_vec()
        .into_iter()
        .filter(|z| z.norm() >= real.zero_tol())
        .collect();
    let (stable_vals, _) = linalg::eig_general(&split.stable_part.a).unwrap();
    let stable = stable_vals.to_vec();
    assert_spectra_match(&full, &stable, 1e-8);
}

#[test]
fn h2_norm_first_order_closed_form() {
    // H(s) = 1/(s+1): ||H||_2 = 1/sqrt(2)
    let ss = StateSpace {
        a: array![[-1.0]],
        b: array![[1.0]],
        c: array![[1.0]],
    };
    let h2 = h2_norm_stable(&ss).unwrap();
    assert_abs_diff_eq!(h2, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
    let quad = h2_norm_quadrature(&ss, 1e-6, 1e7, 1e-9).unwrap();
    assert!((quad - h2).abs() <= 1e-3 * h2);
}

/// Random asymptotically stable second-order system (positive-definite
/// stiffness, so no zero pole).
fn random_stable_system(n: usize, seed: u64) -> SecondOrderSystem<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            l[[i, j]] = rng.random_range(-1.0..1.0);
        }
    }
    let stiff = l.t().dot(&l) + Array2::<f64>::eye(n) * 0.3;
    let mass = Array1::from_iter((0..n).map(|_| rng.random_range(0.5..2.0)));
    let damp = Array1::from_iter((0..n).map(|_| rng.random_range(0.5..2.0)));
    SecondOrderSystem {
        mass: CoeffMatrix::Diag(mass),
        damping: CoeffMatrix::Diag(damp),
        stiffness: stiff,
        b: Array2::from_shape_fn((n, 1), |_| rng.random_range(-1.0..1.0)),
        c: Array2::from_shape_fn((1, n), |_| rng.random_range(-1.0..1.0)),
    }
}

#[test]
fn h2_lyapunov_vs_quadrature_on_random_stable_systems() {
    for seed in 0..10 {
        let sys = random_stable_system(5 + (seed as usize % 4), seed);
        let real = FirstOrderRealization::new(sys).unwrap();
        let ss = StateSpace {
            a: real.a().clone(),
            b: real.b().clone(),
            c: real.c().clone(),
        };
        let lyap = h2_norm_stable(&ss).unwrap();
        let quad = h2_norm_quadrature(&ss, 1e-7, 1e7, 1e-8).unwrap();
        assert!(
            (lyap - quad).abs() <= 0.01 * lyap,
            "seed {seed}: lyapunov {lyap} vs quadrature {quad}"
        );
    }
}

#[test]
fn h2_error_requires_matched_residues() {
    let model = path3();
    let p = vec![1.0, 1.0, 1.0];
    let split = deflate_model(&model, &p).unwrap();
    let mut bad = split.clone();
    bad.zero_residue.phi0[[0, 0]] += 0.1;
    let err = h2_norm_error(&split, &bad, 1e-8).unwrap_err();
    assert!(matches!(err, crate::Error::ResidueMismatch { .. }));
    // matched pair: error norm of a system against itself is ~0 relative
    // to the system's own H2 norm
    let zero = h2_norm_error(&split, &split.clone(), 1e-8).unwrap();
    let scale = h2_norm_split(&split).unwrap();
    assert!(zero <= 1e-7 * scale, "{zero} vs scale {scale}");
}

#[test]
fn hinf_first_order_dc_gain() {
    let ss = StateSpace {
        a: array![[-1.0]],
        b: array![[1.0]],
        c: array![[1.0]],
    };
    let grid = FreqGrid::default();
    let peak = hinf_norm(&ss, &grid).unwrap();
    assert!(peak.value >= 0.999, "grid peak {}", peak.value);
    assert!(peak.value <= 1.0 + 1e-9);
}

#[test]
fn hinf_error_norm_gates_on_residue() {
    let model = path3();
    let p = vec![1.0, 1.0, 1.0];
    let split = deflate_model(&model, &p).unwrap();
    let mut bad = split.clone();
    bad.zero_residue.phi0[[0, 0]] += 0.1;
    let grid = FreqGrid::default();
    assert!(matches!(
        hinf_error_norm(&split, &bad, &grid, 1e-8).unwrap_err(),
        crate::Error::ResidueMismatch { .. }
    ));
    let zero = hinf_error_norm(&split, &split.clone(), &grid, 1e-8).unwrap();
    assert!(zero.value <= 1e-12);
}

#[test]
fn modal_system_matches_direct_eval() {
    let model = path3();
    let p = vec![1.0, 0.85, 1.15];
    let real = companion_form(&model, &p).unwrap();
    let modal = ModalSystem::from_realization(&real).unwrap();
    let so = realize(&model, &p).unwrap();
    for s in [c(0.0, 0.5), c(0.0, 10.0), c(1.0, 1.0)] {
        let a = modal.eval(s);
        let b = so.eval(s).unwrap();
        assert!((&a - &b).norm_l2() <= 1e-9 * b.norm_l2());
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Conjugate symmetry of real-coefficient transfer functions.
        #[test]
        fn conjugate_symmetry(seed in 0u64..200, re in -2.0f64..2.0, im in 0.05f64..5.0) {
            let sys = random_stable_system(4, seed);
            let h = sys.eval(c(re, im)).unwrap();
            let hc = sys.eval(c(re, -im)).unwrap();
            for (a, b) in h.iter().zip(hc.iter()) {
                prop_assert!((a.conj() - b).norm() <= 1e-12 * a.norm().max(1e-12));
            }
        }

        /// Companion and second-order evaluation agree at random probes.
        #[test]
        fn companion_equals_second_order(seed in 0u64..200, re in -1.0f64..1.0, im in 0.1f64..4.0) {
            let sys = random_stable_system(5, seed);
            let real = FirstOrderRealization::new(sys.clone()).unwrap();
            let s = c(re, im);
            let h1 = real.eval(s).unwrap();
            let h2 = sys.eval(s).unwrap();
            prop_assert!((&h1 - &h2).norm_l2() <= 1e-9 * h2.norm_l2().max(1e-300));
        }
    }
}
