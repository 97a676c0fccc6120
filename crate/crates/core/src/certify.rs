//! Certification tests that decide whether an event stream is compatible with
//! indistinguishable bosons.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::Arrangement;
use crate::linalg::ComplexMatrix;
use crate::sampling::EventStream;
use crate::suppression::boson_suppressed;

/// Default z threshold of [`mean_occupation_test`].
pub const DEFAULT_Z: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub test: String,
    pub verdict: Verdict,
    pub statistic: f64,
    pub threshold: f64,
    pub events: usize,
    /// Only the suppression test has a confidence formula; the others leave
    /// this empty.
    pub confidence: Option<f64>,
}

fn check_stream(stream: &EventStream, r: &Arrangement, n: usize) -> Result<()> {
    if stream.is_empty() {
        return Err(Error::Input("empty event stream".into()));
    }
    if r.modes() != n {
        return Err(Error::Dimension(format!("{}-mode input for an {n}-mode device", r.modes())));
    }
    if let Some(e) = stream.events.iter().find(|e| e.modes() != n || e.particles() != r.particles()) {
        return Err(Error::Dimension(format!("event {e} does not match input {r}")));
    }
    Ok(())
}

fn check_device(u: &ComplexMatrix, r: &Arrangement) -> Result<()> {
    if !u.is_square() || u.rows() != r.modes() {
        return Err(Error::Dimension(format!("{}-mode input for a {}x{} device", r.modes(), u.rows(), u.cols())));
    }
    Ok(())
}

/// 𝒫(s) = ∏_k Σ_j p_{d_k(r), d_j(s)}.
pub fn aa_metric(r: &Arrangement, s: &Arrangement, u: &ComplexMatrix) -> Result<f64> {
    check_device(u, r)?;
    if s.modes() != r.modes() || s.particles() != r.particles() {
        return Err(Error::Dimension(format!("output {s} does not match input {r}")));
    }
    let ds = s.mode_assignment();
    Ok(r.mode_assignment()
        .iter()
        .map(|&a| ds.iter().map(|&b| u[(a - 1, b - 1)].norm_sqr()).sum::<f64>())
        .product())
}

/// Each event votes boson-like when 𝒫 > (N/n)^N; the stream is accepted when
/// boson-like votes are a strict majority. The statistic is the vote share.
pub fn uniform_discrimination(stream: &EventStream, r: &Arrangement, u: &ComplexMatrix) -> Result<CertificationReport> {
    check_device(u, r)?;
    check_stream(stream, r, u.rows())?;
    let cut = (r.particles() as f64 / r.modes() as f64).powi(r.particles() as i32);
    let mut votes = 0usize;
    for s in &stream.events {
        if aa_metric(r, s, u)? > cut {
            votes += 1;
        }
    }
    let k = stream.len();
    Ok(CertificationReport {
        test: "aa-discriminator".into(),
        verdict: if 2 * votes > k { Verdict::Accept } else { Verdict::Reject },
        statistic: votes as f64 / k as f64,
        threshold: 0.5,
        events: k,
        confidence: None,
    })
}

/// Predicted mean occupations ⟨n_j⟩ = Σ_k p_{d_k(r), j}; identical for every
/// species.
pub fn predicted_occupations(r: &Arrangement, u: &ComplexMatrix) -> Result<Vec<f64>> {
    check_device(u, r)?;
    let n = r.modes();
    Ok((0..n)
        .map(|j| r.mode_assignment().iter().map(|&a| u[(a - 1, j)].norm_sqr()).sum())
        .collect())
}

/// Compares observed mean occupations with the prediction using binomial
/// standard errors √(N·p̄(1−p̄)/k), p̄ = ⟨n_j⟩/N. Rejects when any |z| exceeds
/// `z`; the statistic is the largest |z|.
pub fn mean_occupation_test(stream: &EventStream, r: &Arrangement, u: &ComplexMatrix, z: f64) -> Result<CertificationReport> {
    check_device(u, r)?;
    check_stream(stream, r, u.rows())?;
    let predicted = predicted_occupations(r, u)?;
    let k = stream.len() as f64;
    let big_n = r.particles() as f64;
    let mut worst: f64 = 0.0;
    for (j, &mean) in predicted.iter().enumerate() {
        let observed = stream.events.iter().map(|e| e.occupations()[j] as f64).sum::<f64>() / k;
        let pbar = if big_n > 0.0 { mean / big_n } else { 0.0 };
        let se = (big_n * pbar * (1.0 - pbar) / k).sqrt();
        let diff = (observed - mean).abs();
        let zj = if se > 0.0 {
            diff / se
        } else if diff > crate::NUMERICAL_ZERO {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(zj);
    }
    Ok(CertificationReport {
        test: "mean-occupation".into(),
        verdict: if worst > z { Verdict::Reject } else { Verdict::Accept },
        statistic: worst,
        threshold: z,
        events: stream.len(),
        confidence: None,
    })
}

/// Counts events the bosonic Fourier suppression law forbids for input `r` on
/// the n-mode Fourier multiport. Rejects when the count exceeds
/// `allowed_violations`; an accepted stream carries confidence 1 − (1/p)^k
/// with p the largest repetition count of r.
pub fn suppression_certification(
    stream: &EventStream,
    r: &Arrangement,
    n: usize,
    allowed_violations: usize,
) -> Result<CertificationReport> {
    check_stream(stream, r, n)?;
    let p = r.max_repetitions();
    if p < 2 {
        return Err(Error::InapplicableTest(format!("input {r} is not periodic")));
    }
    let mut violations = 0usize;
    for s in &stream.events {
        if boson_suppressed(r, s, n)?.suppressed {
            violations += 1;
        }
    }
    let k = stream.len();
    let accept = violations <= allowed_violations;
    Ok(CertificationReport {
        test: "suppression".into(),
        verdict: if accept { Verdict::Accept } else { Verdict::Reject },
        statistic: violations as f64,
        threshold: allowed_violations as f64,
        events: k,
        confidence: accept.then(|| 1.0 - (1.0 / p as f64).powi(k.min(i32::MAX as usize) as i32)),
    })
}

/// The symmetric-state test: symmetric states cannot be told apart from
/// bosonic ones by symmetry alone, so every stream is accepted.
pub fn symmetric_test(stream: &EventStream) -> CertificationReport {
    CertificationReport {
        test: "symmetric".into(),
        verdict: Verdict::Accept,
        statistic: 0.0,
        threshold: 0.0,
        events: stream.len(),
        confidence: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Species;
    use crate::linalg::{fourier_unitary, haar_random_unitary};
    use crate::sampling::{sample_exact, sample_uniform, EventStream, Source};

    fn a(q: &[usize]) -> Arrangement {
        Arrangement::new(q.to_vec()).unwrap()
    }

    fn constant_stream(r: &Arrangement, e: Arrangement, k: usize) -> EventStream {
        EventStream {
            source: Source::Uniform,
            seed: 0,
            input: r.clone(),
            device_digest: String::new(),
            events: vec![e; k],
        }
    }

    #[test]
    fn fourier_metric_is_flat() {
        let u = fourier_unitary(4).unwrap();
        let r = a(&[1, 1, 0, 0]);
        for s in crate::fock::enumerate_arrangements(2, 4).unwrap() {
            assert!((aa_metric(&r, &s, &u).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn tie_is_rejected() {
        let u = fourier_unitary(4).unwrap();
        let r = a(&[1, 1, 0, 0]);
        let st = constant_stream(&r, a(&[1, 1, 0, 0]), 10);
        assert_eq!(uniform_discrimination(&st, &r, &u).unwrap().verdict, Verdict::Reject);
    }

    #[test]
    fn mean_occupation_cases() {
        let u = haar_random_unitary(5, 1).unwrap();
        let r = a(&[1, 1, 1, 0, 0]);
        let good = sample_exact(Species::Boson, &r, &u, 100_000, 3).unwrap();
        assert_eq!(mean_occupation_test(&good, &r, &u, DEFAULT_Z).unwrap().verdict, Verdict::Accept);
        let fermi = sample_exact(Species::Fermion, &r, &u, 100_000, 3).unwrap();
        assert_eq!(mean_occupation_test(&fermi, &r, &u, DEFAULT_Z).unwrap().verdict, Verdict::Accept);
        let bad = constant_stream(&r, a(&[3, 0, 0, 0, 0]), 1000);
        assert_eq!(mean_occupation_test(&bad, &r, &u, DEFAULT_Z).unwrap().verdict, Verdict::Reject);
    }

    #[test]
    fn suppression_test_cases() {
        let r = a(&[1, 1, 1, 1]);
        let u = fourier_unitary(4).unwrap();
        let st = sample_exact(Species::Boson, &r, &u, 2000, 1).unwrap();
        let rep = suppression_certification(&st, &r, 4, 0).unwrap();
        assert_eq!(rep.verdict, Verdict::Accept);
        assert!((rep.confidence.unwrap() - 1.0).abs() < 1e-12);
        let uni = sample_uniform(4, 4, 100, 2).unwrap();
        let uni = EventStream { input: r.clone(), ..uni };
        assert_eq!(suppression_certification(&uni, &r, 4, 0).unwrap().verdict, Verdict::Reject);
        let ap = a(&[2, 1, 1, 0]);
        let st2 = constant_stream(&ap, a(&[2, 1, 1, 0]), 3);
        assert!(matches!(suppression_certification(&st2, &ap, 4, 0), Err(Error::InapplicableTest(_))));
    }

    #[test]
    fn confidence_formula() {
        let r = a(&[1, 0, 1, 0]);
        let st = constant_stream(&r, a(&[1, 0, 1, 0]), 3);
        let rep = suppression_certification(&st, &r, 4, 0).unwrap();
        assert_eq!(rep.verdict, Verdict::Accept);
        assert!((rep.confidence.unwrap() - (1.0 - 0.125)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_accepts_anything() {
        let r = a(&[1, 1]);
        assert_eq!(symmetric_test(&constant_stream(&r, a(&[2, 0]), 5)).verdict, Verdict::Accept);
    }

    #[test]
    fn empty_stream_is_an_error() {
        let r = a(&[1, 1]);
        let u = fourier_unitary(2).unwrap();
        let st = constant_stream(&r, a(&[2, 0]), 0);
        assert!(uniform_discrimination(&st, &r, &u).is_err());
    }
}
