use std::f64::consts::PI;

mod common;

use common::{oracle_branches, oracle_fidelity, trace};

use swapsim::photonics::{
    bsa_detect, detect, emit, random_walk_phase, BsaChannel, BsaOutcome, Composition, ModeOverlap,
    PairKind, SourceConfig, SourceVisibility, ONE_WAVELENGTH_PER_400S,
};
use swapsim::qstate::{fidelity, make_bell, BellLabel, DensityOp};
use swapsim::rng::{substream, Stream};

fn ideal_source() -> SourceConfig {
    SourceConfig {
        visibility: SourceVisibility {
            hv: 1.0,
            diagonal: 1.0,
        },
        ..SourceConfig::default()
    }
}

fn ideal_channel(v: f64) -> BsaChannel {
    BsaChannel::new(
        &ideal_source().product_state().unwrap(),
        ModeOverlap::new(v).unwrap(),
    )
    .unwrap()
}

fn within_binomial(hits: u64, n: u64, p: f64, k: f64) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    ((hits as f64 / n as f64) - p).abs() <= k * sigma
}

#[test]
fn detection_fraction_at_forty_percent() {
    let mut rng = substream(11, Stream::Detectors, 0);
    let n = 1_000_000u64;
    let hits = (0..n).filter(|_| detect(true, 0.4, &mut rng)).count() as f64;
    assert!(
        (hits / n as f64 - 0.4).abs() <= 0.002,
        "{}",
        hits / n as f64
    );
    assert!((0..1000).all(|_| !detect(false, 1.0, &mut rng)));
}

#[test]
fn emission_compositions_follow_closed_form() {
    let config = SourceConfig {
        pair_prob: 0.1,
        double_pair_prob: 0.05,
        ..ideal_source()
    };
    let mut rng = substream(5, Stream::Sources, 0);
    let n = 400_000u64;
    let mut counts = [[0u64; 3]; 3];
    for pulse in 0..n {
        let mut k = [0usize; 2];
        for e in emit(&config, pulse, &mut rng) {
            assert_eq!(e.pulse_index, pulse);
            k[e.source as usize] = match e.kind {
                PairKind::SinglePair => 1,
                PairKind::DoublePairSameModes => 2,
            };
        }
        counts[k[0]][k[1]] += 1;
    }
    let single = |k: usize| match k {
        0 => 1.0 - config.pair_prob - config.double_pair_prob,
        1 => config.pair_prob,
        _ => config.double_pair_prob,
    };
    for i in 0..3 {
        for j in 0..3 {
            let p = single(i) * single(j);
            assert!(within_binomial(counts[i][j], n, p, 4.0), "({i},{j})");
        }
    }
    for c in Composition::MULTI_PAIR {
        let p = single(c.source_i as usize) * single(c.source_ii as usize);
        assert!((c.probability(&config) - p).abs() < 1e-15);
    }
}

#[test]
fn acceptance_is_one_quarter_for_any_overlap() {
    let n = 1_000_000u64;
    for (i, v) in [0.0, 0.5, 0.92, 1.0].into_iter().enumerate() {
        let ch = ideal_channel(v);
        assert!((ch.acceptance() - 0.25).abs() < 1e-12);
        let mut rng = substream(3, Stream::Bsa, i as u64);
        let hits = (0..n).filter(|_| ch.sample(&mut rng).is_accepted()).count() as u64;
        assert!(within_binomial(hits, n, 0.25, 3.0), "v={v}: {hits}");
    }
}

#[test]
fn single_shot_detect_matches_channel() {
    let joint = ideal_source().product_state().unwrap();
    let overlap = ModeOverlap::new(0.7).unwrap();
    let mut rng = substream(4, Stream::Bsa, 0);
    let n = 4000u64;
    let hits = (0..n)
        .filter(|_| bsa_detect(&joint, overlap, &mut rng).unwrap().is_accepted())
        .count() as u64;
    assert!(within_binomial(hits, n, 0.25, 4.0));
    let two_photon = make_bell(BellLabel::PsiMinus, 0, 3).unwrap();
    let rho = DensityOp::from_ket(&two_photon);
    assert!(!bsa_detect(&rho, overlap, &mut rng).unwrap().is_accepted());
}

#[test]
fn oracle_limits_are_exact() {
    let (coherent, marginal) = oracle_branches();
    assert!((trace(&coherent) - 0.25).abs() < 1e-15);
    assert!((trace(&marginal) - 1.0).abs() < 1e-15);
    assert!((oracle_fidelity(1.0) - 1.0).abs() < 1e-14);
    assert!((oracle_fidelity(0.0) - 0.25).abs() < 1e-14);
}

#[test]
fn mixture_model_matches_density_matrix_oracle() {
    for v in [0.0, 0.5, 0.92, 1.0] {
        let post = ideal_channel(v).post_state().unwrap();
        let f = fidelity(&post, BellLabel::PsiMinus).unwrap();
        let want = oracle_fidelity(v);
        assert!((f - want).abs() < 1e-10, "v={v}: {f} vs {want}");
        assert!((want - (3.0 * v + 1.0) / 4.0).abs() < 1e-12);
    }
}

#[test]
fn fidelity_is_monotone_in_overlap() {
    let mut last = 0.0;
    for k in 0..=50 {
        let v = k as f64 / 50.0;
        let f = fidelity(&ideal_channel(v).post_state().unwrap(), BellLabel::PsiMinus).unwrap();
        assert!(f + 1e-12 >= last, "v={v}");
        last = f;
    }
}

#[test]
fn sampled_branches_average_to_post_state() {
    let v = 0.6;
    let ch = ideal_channel(v);
    let mut rng = substream(8, Stream::Bsa, 1);
    let (mut sum, mut sum2, mut n) = (0.0, 0.0, 0u64);
    for _ in 0..200_000 {
        if let BsaOutcome::Accepted { post_state, .. } = ch.sample(&mut rng) {
            let f = fidelity(&post_state, BellLabel::PsiMinus).unwrap();
            sum += f;
            sum2 += f * f;
            n += 1;
        }
    }
    let mean = sum / n as f64;
    let sd = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    let want = (3.0 * v + 1.0) / 4.0;
    assert!((mean - want).abs() < 3.0 * sd, "{mean} vs {want}");
}

fn phased_joint(theta: f64) -> DensityOp {
    let a = make_bell(BellLabel::PsiMinus, 0, 1).unwrap();
    let b = make_bell(BellLabel::PsiMinus, 2, 3)
        .unwrap()
        .with_global_phase(theta);
    DensityOp::from_ket(&a.tensor(&b).unwrap())
}

#[test]
fn global_pump_phase_changes_nothing() {
    let reference = ideal_channel(0.92);
    let ref_post = reference.post_state().unwrap();
    let mut rng = substream(2, Stream::Phase, 0);
    let walk = random_walk_phase(ONE_WAVELENGTH_PER_400S, 10.0, 4000.0, &mut rng).unwrap();
    assert!(walk.max_abs_excursion() > 2.0 * PI);
    let fixed = [0.3, PI / 2.0, PI, 5.0];
    for theta in fixed.iter().chain(walk.samples.iter().step_by(40)) {
        let ch = BsaChannel::new(&phased_joint(*theta), ModeOverlap::new(0.92).unwrap()).unwrap();
        assert!((ch.acceptance() - reference.acceptance()).abs() < 1e-12);
        let diff = (ch.post_state().unwrap().matrix() - ref_post.matrix()).camax();
        assert!(diff < 1e-12, "theta={theta}");
    }
}

#[test]
fn zero_sigma_walk_is_constant() {
    let mut rng = substream(1, Stream::Phase, 0);
    let walk = random_walk_phase(0.0, 1.0, 100.0, &mut rng).unwrap();
    assert!(walk.samples.iter().all(|p| *p == 0.0));
}

#[test]
fn one_wavelength_in_four_hundred_seconds() {
    let n = 10_000u64;
    let mut sum2 = 0.0;
    for r in 0..n {
        let mut rng = substream(21, Stream::Phase, r);
        let walk = random_walk_phase(ONE_WAVELENGTH_PER_400S, 1.0, 400.0, &mut rng).unwrap();
        sum2 += walk.net_drift().powi(2);
    }
    let sd = (sum2 / n as f64).sqrt();
    assert!((sd / (2.0 * PI) - 1.0).abs() < 0.03, "{}", sd / (2.0 * PI));
}

#[test]
fn ten_hour_envelope_brackets_fifteen_wavelengths() {
    let mut peaks: Vec<f64> = (0..1000u64)
        .map(|r| {
            let mut rng = substream(22, Stream::Phase, r);
            let walk =
                random_walk_phase(ONE_WAVELENGTH_PER_400S, 10.0, 36_000.0, &mut rng).unwrap();
            walk.max_abs_excursion() / (2.0 * PI)
        })
        .collect();
    peaks.sort_by(f64::total_cmp);
    let median = peaks[500];
    let (lo, hi) = (peaks[50], peaks[950]);
    assert!((10.0..=20.0).contains(&median), "median {median}");
    assert!(lo < 15.0 && 15.0 < hi, "[{lo}, {hi}]");
}
