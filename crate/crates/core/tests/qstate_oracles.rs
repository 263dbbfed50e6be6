use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64 as C;
use proptest::prelude::*;
use swapsim::qstate::{
    bell_decompose, correlation_qm, make_bell, project_bsm, werner, BellLabel, Ket,
};
use swapsim::stats::{chsh, ChshSettings, CorrelationEstimate};

const LABELS: [BellLabel; 4] = [
    BellLabel::PsiPlus,
    BellLabel::PsiMinus,
    BellLabel::PhiPlus,
    BellLabel::PhiMinus,
];

/// Bell amplitudes over |HH⟩,|HV⟩,|VH⟩,|VV⟩, written out independently.
fn bell(label: BellLabel) -> [f64; 4] {
    let h = FRAC_1_SQRT_2;
    match label {
        BellLabel::PsiPlus => [0.0, h, h, 0.0],
        BellLabel::PsiMinus => [0.0, h, -h, 0.0],
        BellLabel::PhiPlus => [h, 0.0, 0.0, h],
        BellLabel::PhiMinus => [h, 0.0, 0.0, -h],
    }
}

fn bits(idx: usize) -> [usize; 4] {
    [(idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1]
}

/// 16-element vector |L12⟩_{12} ⊗ |L03⟩_{03}, built by index arithmetic.
fn basis_vector(l12: BellLabel, l03: BellLabel) -> [f64; 16] {
    let (a, b) = (bell(l12), bell(l03));
    std::array::from_fn(|idx| {
        let [b0, b1, b2, b3] = bits(idx);
        a[2 * b1 + b2] * b[2 * b0 + b3]
    })
}

/// Oracle: coefficients of `psi` in the 16-vector Bell⊗Bell basis on
/// pairs (1,2) and (0,3).
fn oracle_coefficients(psi: &[C]) -> [[C; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let v = basis_vector(LABELS[i], LABELS[j]);
            v.iter().zip(psi).map(|(b, p)| p * b).sum()
        })
    })
}

fn product_amplitudes(l01: BellLabel, l23: BellLabel) -> Vec<C> {
    let (a, b) = (bell(l01), bell(l23));
    (0..16)
        .map(|idx| {
            let [b0, b1, b2, b3] = bits(idx);
            C::new(a[2 * b0 + b1] * b[2 * b2 + b3], 0.0)
        })
        .collect()
}

#[test]
fn oracle_basis_is_orthonormal() {
    for i in 0..16 {
        for j in 0..16 {
            let u = basis_vector(LABELS[i / 4], LABELS[i % 4]);
            let v = basis_vector(LABELS[j / 4], LABELS[j % 4]);
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
}

#[test]
fn singlet_pair_swap_signs_match_oracle() {
    let state = make_bell(BellLabel::PsiMinus, 0, 1)
        .unwrap()
        .tensor(&make_bell(BellLabel::PsiMinus, 2, 3).unwrap())
        .unwrap();
    assert_eq!(
        state.amplitudes(),
        &product_amplitudes(BellLabel::PsiMinus, BellLabel::PsiMinus)[..]
    );

    // Oracle: diagonal in labels with (+1/2, −1/2, −1/2, +1/2).
    let oc = oracle_coefficients(state.amplitudes());
    let expected = [0.5, -0.5, -0.5, 0.5];
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { expected[i] } else { 0.0 };
            assert!(
                (oc[i][j] - C::new(want, 0.0)).norm() < 1e-12,
                "oracle ({i},{j})"
            );
        }
    }

    let terms = bell_decompose(&state, (1, 2)).unwrap();
    for (t, want) in terms.iter().zip(expected) {
        assert!(
            (t.coefficient - C::new(want, 0.0)).norm() < 1e-12,
            "{:?}",
            t.label
        );
        let r = t.residual.as_ref().unwrap();
        assert_eq!(r.modes(), &[0, 3]);
        assert_eq!(r, &make_bell(t.label, 0, 3).unwrap());
    }
}

#[test]
fn phi_plus_pair_matches_oracle() {
    let state = make_bell(BellLabel::PhiPlus, 0, 1)
        .unwrap()
        .tensor(&make_bell(BellLabel::PhiPlus, 2, 3).unwrap())
        .unwrap();
    let oc = oracle_coefficients(state.amplitudes());
    let terms = bell_decompose(&state, (1, 2)).unwrap();
    for (i, t) in terms.iter().enumerate() {
        // c_i |r_i⟩ must equal Σ_j oc[i][j] |L_j⟩_{03}
        let r = t.residual.as_ref().unwrap();
        let mut want = [C::new(0.0, 0.0); 4];
        for (j, l) in LABELS.iter().enumerate() {
            for (k, a) in bell(*l).iter().enumerate() {
                want[k] += oc[i][j] * a;
            }
        }
        for k in 0..4 {
            assert!((t.coefficient * r.amplitudes()[k] - want[k]).norm() < 1e-12);
        }
        assert!((t.coefficient.norm_sqr() - 0.25).abs() < 1e-12);
    }
    // Φ⁺Φ⁺ swaps onto the same label on (0,3), all with weight +1/2
    for (i, row) in oc.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 0.5 } else { 0.0 };
            assert!((v - C::new(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn bsm_projection_on_ideal_input() {
    let state = make_bell(BellLabel::PsiMinus, 0, 1)
        .unwrap()
        .tensor(&make_bell(BellLabel::PsiMinus, 2, 3).unwrap())
        .unwrap();
    for label in LABELS {
        let p = project_bsm(&state, label, (1, 2)).unwrap();
        assert!((p.probability - 0.25).abs() < 1e-12);
        let post = p.post_state.unwrap();
        let overlap = post.inner(&make_bell(label, 0, 3).unwrap()).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }
}

fn random_state(re: &[f64], im: &[f64]) -> Ket {
    let amps = re.iter().zip(im).map(|(a, b)| C::new(*a, *b)).collect();
    Ket::normalized(&[0, 1, 2, 3], amps).unwrap()
}

fn pair_strategy() -> impl Strategy<Value = (usize, usize)> {
    (0usize..4, 0usize..4).prop_filter("distinct", |(a, b)| a != b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decomposition_recombines(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        pair in pair_strategy(),
    ) {
        prop_assume!(re.iter().chain(&im).map(|x| x * x).sum::<f64>() > 1e-3);
        let psi = random_state(&re, &im);
        let terms = bell_decompose(&psi, pair).unwrap();
        let mut total = vec![C::new(0.0, 0.0); 16];
        let mut weight = 0.0;
        for t in &terms {
            weight += t.coefficient.norm_sqr();
            if let Some(r) = &t.residual {
                let piece = make_bell(t.label, pair.0, pair.1).unwrap().tensor(r).unwrap();
                for (acc, a) in total.iter_mut().zip(piece.amplitudes()) {
                    *acc += t.coefficient * a;
                }
            }
        }
        prop_assert!((weight - 1.0).abs() < 1e-12);
        for (a, b) in total.iter().zip(psi.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn bsm_probabilities_sum_to_one(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        pair in pair_strategy(),
    ) {
        prop_assume!(re.iter().chain(&im).map(|x| x * x).sum::<f64>() > 1e-3);
        let psi = random_state(&re, &im);
        let total: f64 = LABELS.iter().map(|l| project_bsm(&psi, *l, pair).unwrap().probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_has_analyzer_period(phi0 in -360.0f64..360.0, phi3 in -360.0f64..360.0, f in 0.0f64..1.0) {
        let rho = werner(f, 0, 3).unwrap();
        let e = correlation_qm(&rho, phi0.into(), phi3.into()).unwrap();
        let e0 = correlation_qm(&rho, (phi0 + 180.0).into(), phi3.into()).unwrap();
        let e3 = correlation_qm(&rho, phi0.into(), (phi3 - 180.0).into()).unwrap();
        prop_assert!((e - e0).abs() < 1e-10 && (e - e3).abs() < 1e-10);
    }
}

#[test]
fn werner_correlations_scale() {
    let pairs = [
        (0.0, 0.0),
        (0.0, 22.5),
        (0.0, 67.5),
        (45.0, 22.5),
        (45.0, 67.5),
        (10.0, 100.0),
        (30.0, -15.0),
        (170.0, 5.0),
    ];
    for f in [0.25, 0.5, 0.79, 0.84, 1.0] {
        let rho = werner(f, 0, 3).unwrap();
        for (a, b) in pairs {
            let e = correlation_qm(&rho, a.into(), b.into()).unwrap();
            let want = (4.0 * f - 1.0) / 3.0 * -(2.0 * (a - b)).to_radians().cos();
            assert!((e - want).abs() < 1e-10, "F={f} ({a},{b}): {e} vs {want}");
        }
    }
}

#[test]
fn pure_singlet_reaches_tsirelson() {
    let rho = werner(1.0, 0, 3).unwrap();
    let settings = ChshSettings::canonical();
    let est: Vec<CorrelationEstimate> = settings
        .pairs()
        .iter()
        .map(|&(a, b)| CorrelationEstimate {
            e: correlation_qm(&rho, a, b).unwrap(),
            sigma_e: 0.0,
            total_counts: 0,
            phi0: a,
            phi3: b,
        })
        .collect();
    let r = chsh(&[est[0], est[1], est[2], est[3]]).unwrap();
    assert!((r.s - 2.0 * SQRT_2).abs() < 1e-10);
}
