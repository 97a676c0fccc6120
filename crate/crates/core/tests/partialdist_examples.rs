use interference::fock::{Arrangement, Species};
use interference::linalg::{beam_splitter, haar_random_unitary};
use interference::partialdist::{
    distinguishability_weights, dominant_type_approximation, gram_schmidt, semiclassical_bin_masses,
    semiclassical_density, two_mode_signal, WavepacketSet,
};
use interference::transition::{probability, two_mode_boson_distribution};
use num_complex::Complex64;

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn dominant_type_limits() {
    let u = haar_random_unitary(2, 12).unwrap();
    let r = Arrangement::new(vec![3, 4]).unwrap();
    let at_zero = dominant_type_approximation(3, 4, &u, 1.0).unwrap();
    let far = dominant_type_approximation(3, 4, &u, 0.0).unwrap();
    for s1 in 0..=7 {
        let s = Arrangement::new(vec![s1, 7 - s1]).unwrap();
        let pb = probability(Species::Boson, &r, &s, &u).unwrap();
        let pd = probability(Species::Distinguishable, &r, &s, &u).unwrap();
        assert!((at_zero[s1] - pb).abs() < 1e-12);
        assert!((far[s1] - pd).abs() < 1e-12);
    }
}

#[test]
fn dominant_type_close_to_exact_at_half_overlap() {
    let u = beam_splitter(0.5).unwrap();
    let exact = two_mode_signal(16, 16, &u, 0.5).unwrap();
    let approx = dominant_type_approximation(16, 16, &u, 0.5).unwrap();
    let d = tv(&exact, &approx);
    println!("total variation at N = 32: {d:.4}");
    assert!(d < 0.08, "{d}");
}

#[test]
fn semiclassical_bins_match_balanced_bosons() {
    let u = beam_splitter(0.5).unwrap();
    let p = two_mode_boson_distribution(16, 16, &u).unwrap();
    let mut binned = vec![0.0; 32];
    for (s1, v) in p.iter().enumerate() {
        binned[s1.min(31)] += v;
    }
    let masses = semiclassical_bin_masses(32);
    let sup = (1..31).map(|b| (binned[b] - masses[b]).abs()).fold(0.0, f64::max);
    println!("sup error over inner bins: {sup:.4}");
    assert!(sup < 0.05, "{sup}");
}

#[test]
fn semiclassical_density_symmetry() {
    for x in [0.01, 0.2, 0.37, 0.5] {
        let a = semiclassical_density(x).unwrap();
        let b = semiclassical_density(1.0 - x).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
    assert!(semiclassical_density(1.0).is_err());
}

#[test]
fn three_three_vanishes_when_indistinguishable() {
    let u = beam_splitter(0.5).unwrap();
    let p = two_mode_signal(3, 3, &u, 1.0).unwrap();
    assert!(p[3] < 1e-12, "{}", p[3]);
}

#[test]
fn balanced_inputs_have_no_odd_outcomes() {
    let u = beam_splitter(0.5).unwrap();
    for half in 1..=8 {
        let p = two_mode_signal(half, half, &u, 1.0).unwrap();
        for s1 in (1..=2 * half).step_by(2) {
            assert!(p[s1] < 1e-12, "N={} s1={s1}: {}", 2 * half, p[s1]);
        }
    }
}

#[test]
fn weights_sum_to_one_and_w0_decays() {
    for r2 in 0..12 {
        for w in [0.0, 0.1, 0.5, 0.77, 1.0] {
            let ws = distinguishability_weights(r2, w).unwrap();
            assert!(ws.iter().all(|&v| v >= 0.0));
            assert!((ws.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(ws[0], w.powi(r2 as i32));
        }
    }
    let w0: Vec<f64> = (1..6).map(|r2| distinguishability_weights(r2, 0.6).unwrap()[0]).collect();
    assert!(w0.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn overlap_at_one_coherence_length() {
    let wp = WavepacketSet::default_photons();
    let lc = wp.coherence_length();
    let c = interference::partialdist::SPEED_OF_LIGHT;
    let expected = (-(lc * wp.delta_omega).powi(2) / (4.0 * c * c)).exp();
    let got = wp.gaussian_overlap(0.0, lc / c).norm();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn two_particle_triangle_is_normalised() {
    let wp = WavepacketSet::default_photons();
    for tau in [0.0, 2e-13, 7e-13, 3e-12] {
        let t = gram_schmidt(&wp, &[0.0, tau]).unwrap();
        let row = &t.coefficients[t.coefficients.len() - 1];
        let norm: f64 = row.iter().map(Complex64::norm_sqr).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
