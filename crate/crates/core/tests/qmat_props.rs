use num_complex::Complex64;
use proptest::prelude::*;

use nvsim::qmat::{
    conjugate, expm_hermitian, hermitian_eigen, validate_density, ComplexMatrix, QmatError, UnitaryMatrix,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn hermitian(dim: usize, raw: &[(f64, f64)]) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, |i, j| {
        let (re, im) = raw[i * dim + j];
        c(re, im)
    });
    (&a + &a.adjoint()).scale_real(0.5)
}

fn hermitian_strategy() -> impl Strategy<Value = ComplexMatrix> {
    (2usize..=8).prop_flat_map(|d| {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), d * d).prop_map(move |raw| hermitian(d, &raw))
    })
}

fn mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.try_mul(b).unwrap()
}

/// exp(-iHt) by scaling, a 64-term Taylor series and repeated squaring.
fn taylor_expm(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let d = h.dim();
    let norm = h.frobenius_norm() * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let a = h.scale(c(0.0, -t / f64::from(1u32 << squarings)));
    let mut sum = ComplexMatrix::identity(d);
    let mut term = ComplexMatrix::identity(d);
    for k in 1..=64 {
        term = mul(&term, &a).scale_real(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

fn sorted_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v = hermitian_eigen(m).unwrap().values;
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn expm_matches_taylor_oracle() {
    let h = ComplexMatrix::from_rows(&[
        vec![c(0.7, 0.0), c(0.3, -1.1), c(-0.4, 0.2)],
        vec![c(0.3, 1.1), c(-1.3, 0.0), c(0.9, 0.5)],
        vec![c(-0.4, -0.2), c(0.9, -0.5), c(0.25, 0.0)],
    ])
    .unwrap();
    let u = expm_hermitian(&h, 0.37).unwrap();
    assert!(u.matrix().max_abs_diff(&taylor_expm(&h, 0.37)) < 1e-10);
}

#[test]
fn sz_at_pi_flips_outer_phases() {
    let u = expm_hermitian(&ComplexMatrix::from_diag(&[1.0, 0.0, -1.0]), std::f64::consts::PI).unwrap();
    let expect = ComplexMatrix::from_diag(&[-1.0, 1.0, -1.0]);
    assert!(u.matrix().max_abs_diff(&expect) < 1e-12);
}

#[test]
fn not_psd_names_the_residual() {
    match validate_density(&ComplexMatrix::from_diag(&[0.6, 0.6, -0.2])) {
        Err(QmatError::NotPsd { min_eigenvalue }) => assert!((min_eigenvalue + 0.2).abs() < 1e-12),
        other => panic!("expected NotPsd, got {other:?}"),
    }
}

#[test]
fn swap_conjugation_permutes_diagonal() {
    let a = ComplexMatrix::from_diag(&[1.0, 2.0, 3.0]);
    let out = conjugate(&UnitaryMatrix::swap(3, 0, 1), &a).unwrap();
    assert!(out.max_abs_diff(&ComplexMatrix::from_diag(&[2.0, 1.0, 3.0])) < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_group_law(h in hermitian_strategy(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let a = expm_hermitian(&h, t1).unwrap();
        let b = expm_hermitian(&h, t2).unwrap();
        let ab = expm_hermitian(&h, t1 + t2).unwrap();
        prop_assert!(a.then_after(&b).matrix().max_abs_diff(ab.matrix()) < 1e-10);
    }

    #[test]
    fn expm_adjoint_is_time_reversal(h in hermitian_strategy(), t in -2.0f64..2.0) {
        let u = expm_hermitian(&h, t).unwrap();
        let back = expm_hermitian(&h, -t).unwrap();
        prop_assert!(u.matrix().adjoint().max_abs_diff(back.matrix()) < 1e-12);
    }

    #[test]
    fn expm_agrees_with_taylor(h in hermitian_strategy(), t in -1.0f64..1.0) {
        let u = expm_hermitian(&h, t).unwrap();
        prop_assert!(u.matrix().max_abs_diff(&taylor_expm(&h, t)) < 1e-10);
    }

    #[test]
    fn conjugation_preserves_spectrum(h in hermitian_strategy(), g in hermitian_strategy(), t in -2.0f64..2.0) {
        prop_assume!(h.dim() == g.dim());
        let u = expm_hermitian(&g, t).unwrap();
        let out = conjugate(&u, &h).unwrap();
        prop_assert!(out.hermiticity_residual() < 1e-12 * (1.0 + h.frobenius_norm()));
        let (before, after) = (sorted_eigenvalues(&h), sorted_eigenvalues(&out));
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn purity_is_bounded(
        d in 2usize..=8,
        weights in prop::collection::vec(0.0f64..1.0, 1..5),
        seed_amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 40),
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-3);
        let mut rho = ComplexMatrix::zeros(d);
        for (k, w) in weights.iter().enumerate() {
            let psi: Vec<Complex64> = (0..d).map(|m| {
                let (re, im) = seed_amps[(k * d + m) % seed_amps.len()];
                c(re + 1e-3, im)
            }).collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
            rho = &rho + &ComplexMatrix::outer(&psi).scale_real(w / total);
        }
        let valid = validate_density(&rho).unwrap();
        let p = valid.purity();
        prop_assert!(p >= 1.0 / d as f64 - 1e-12 && p <= 1.0 + 1e-12);
    }
}
