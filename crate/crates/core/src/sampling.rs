//! Event generators: exact sampling from the full distribution and the
//! alien sources (classical Monte Carlo, uniform, mean-field) used to probe
//! certification tests.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Arrangement, Species};
use crate::linalg::ComplexMatrix;
use crate::transition::full_distribution;

/// Origin of an event stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Source {
    #[serde(rename = "exact-boson")]
    ExactBoson,
    #[serde(rename = "exact-fermion")]
    ExactFermion,
    #[serde(rename = "exact-distinguishable")]
    ExactDistinguishable,
    #[serde(rename = "classical-mc")]
    ClassicalMc,
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "meanfield")]
    Meanfield,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::ExactBoson => "exact-boson",
            Source::ExactFermion => "exact-fermion",
            Source::ExactDistinguishable => "exact-distinguishable",
            Source::ClassicalMc => "classical-mc",
            Source::Uniform => "uniform",
            Source::Meanfield => "meanfield",
        }
    }

    fn exact(species: Species) -> Self {
        match species {
            Species::Boson => Source::ExactBoson,
            Species::Fermion => Source::ExactFermion,
            Species::Distinguishable => Source::ExactDistinguishable,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-boson" | "exact" => Ok(Source::ExactBoson),
            "exact-fermion" => Ok(Source::ExactFermion),
            "exact-distinguishable" => Ok(Source::ExactDistinguishable),
            "classical-mc" | "classical" => Ok(Source::ClassicalMc),
            "uniform" => Ok(Source::Uniform),
            "meanfield" | "semiclassical" => Ok(Source::Meanfield),
            other => Err(Error::Input(format!("unknown source '{other}'"))),
        }
    }
}

/// A reproducible batch of detected output arrangements.
#[derive(Debug, Clone, Serialize)]
pub struct EventStream {
    pub source: Source,
    pub seed: u64,
    pub input: Arrangement,
    /// Content hash of the device; empty for device-free sources.
    pub device_digest: String,
    pub events: Vec<Arrangement>,
}

impl EventStream {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn particles(&self) -> usize {
        self.input.particles()
    }

    pub fn modes(&self) -> usize {
        self.input.modes()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_device(r: &Arrangement, u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() || u.rows() != r.modes() {
        return Err(Error::Dimension(format!(
            "{}-mode input for a {}x{} device",
            r.modes(),
            u.rows(),
            u.cols()
        )));
    }
    Ok(())
}

fn weights(w: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(w).map_err(|e| Error::Input(format!("cannot sample from weights: {e}")))
}

/// Inverse-CDF draws from the full distribution of `species`.
pub fn sample_exact(species: Species, r: &Arrangement, u: &ComplexMatrix, k: usize, seed: u64) -> Result<EventStream> {
    check_device(r, u)?;
    let dist = full_distribution(species, r, u)?;
    let pick = weights(&dist.probabilities)?;
    let mut g = rng(seed);
    let events = (0..k).map(|_| dist.arrangements[pick.sample(&mut g)].clone()).collect();
    Ok(EventStream { source: Source::exact(species), seed, input: r.clone(), device_digest: u.digest(), events })
}

/// Distinguishable particles routed one at a time by p_{j,k} = |U_{j,k}|².
pub fn sample_classical_mc(r: &Arrangement, u: &ComplexMatrix, k: usize, seed: u64) -> Result<EventStream> {
    check_device(r, u)?;
    let n = r.modes();
    let rows: Vec<Option<WeightedIndex<f64>>> = (0..n)
        .map(|j| {
            if r.occupations()[j] == 0 {
                Ok(None)
            } else {
                let p: Vec<f64> = u.row(j).iter().map(|z| z.norm_sqr()).collect();
                weights(&p).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let mut g = rng(seed);
    let mut events = Vec::with_capacity(k);
    for _ in 0..k {
        let mut q = vec![0usize; n];
        for (j, &occ) in r.occupations().iter().enumerate() {
            let row = rows[j].as_ref();
            for _ in 0..occ {
                q[row.expect("occupied row").sample(&mut g)] += 1;
            }
        }
        events.push(Arrangement::new(q)?);
    }
    Ok(EventStream { source: Source::ClassicalMc, seed, input: r.clone(), device_digest: u.digest(), events })
}

/// Uniform draws over all arrangements of `particles` in `modes`, by choosing
/// the bar positions of a stars-and-bars string uniformly.
pub fn sample_uniform(particles: usize, modes: usize, k: usize, seed: u64) -> Result<EventStream> {
    if modes == 0 {
        return Err(Error::Input("at least one mode is required".into()));
    }
    let slots = particles + modes - 1;
    let mut g = rng(seed);
    let mut events = Vec::with_capacity(k);
    for _ in 0..k {
        let mut bars = rand::seq::index::sample(&mut g, slots, modes - 1).into_vec();
        bars.sort_unstable();
        let mut q = Vec::with_capacity(modes);
        let mut prev = 0;
        for (i, &b) in bars.iter().enumerate() {
            // Stars strictly between consecutive bars.
            q.push(b - prev - usize::from(i > 0));
            prev = b;
        }
        let last = if bars.is_empty() { particles } else { slots - prev - 1 };
        q.push(last);
        events.push(Arrangement::new(q)?);
    }
    let input = Arrangement::bunched(particles, modes, 1)?;
    Ok(EventStream { source: Source::Uniform, seed, input, device_digest: String::new(), events })
}

/// Mean-field events: a random-phase single-particle wave
/// Σ_l √r_l e^{iθ_l} U_{l,j} is drawn per event and all N particles are routed
/// independently by its intensities.
pub fn sample_meanfield(r: &Arrangement, u: &ComplexMatrix, k: usize, seed: u64) -> Result<EventStream> {
    check_device(r, u)?;
    let n = r.modes();
    let amps: Vec<f64> = r.occupations().iter().map(|&q| (q as f64).sqrt()).collect();
    let mut g = rng(seed);
    let mut events = Vec::with_capacity(k);
    for _ in 0..k {
        let phases: Vec<Complex64> = amps
            .iter()
            .map(|&a| Complex64::from_polar(a, g.random_range(0.0..2.0 * PI)))
            .collect();
        let intensity: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|l| phases[l] * u[(l, j)]).sum::<Complex64>().norm_sqr())
            .collect();
        let pick = weights(&intensity)?;
        let mut q = vec![0usize; n];
        for _ in 0..r.particles() {
            q[pick.sample(&mut g)] += 1;
        }
        events.push(Arrangement::new(q)?);
    }
    Ok(EventStream { source: Source::Meanfield, seed, input: r.clone(), device_digest: u.digest(), events })
}

/// Dispatches on `source`; device-free sources ignore `u` apart from its size.
pub fn sample(source: Source, r: &Arrangement, u: &ComplexMatrix, k: usize, seed: u64) -> Result<EventStream> {
    match source {
        Source::ExactBoson => sample_exact(Species::Boson, r, u, k, seed),
        Source::ExactFermion => sample_exact(Species::Fermion, r, u, k, seed),
        Source::ExactDistinguishable => sample_exact(Species::Distinguishable, r, u, k, seed),
        Source::ClassicalMc => sample_classical_mc(r, u, k, seed),
        Source::Uniform => {
            let mut st = sample_uniform(r.particles(), r.modes(), k, seed)?;
            st.input = r.clone();
            Ok(st)
        }
        Source::Meanfield => sample_meanfield(r, u, k, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_arrangements;
    use crate::linalg::{beam_splitter, haar_random_unitary};
    use proptest::prelude::*;

    fn a(q: &[usize]) -> Arrangement {
        Arrangement::new(q.to_vec()).unwrap()
    }

    #[test]
    fn bosons_never_coincide_on_balanced_splitter() {
        let u = beam_splitter(0.5).unwrap();
        let st = sample_exact(Species::Boson, &a(&[1, 1]), &u, 10_000, 1).unwrap();
        assert!(st.events.iter().all(|e| *e != a(&[1, 1])));
        assert_eq!(st.source, Source::ExactBoson);
        assert_eq!(st.len(), 10_000);
    }

    #[test]
    fn meanfield_coincidence_between_zero_and_half() {
        let u = beam_splitter(0.5).unwrap();
        let st = sample_meanfield(&a(&[1, 1]), &u, 20_000, 2).unwrap();
        let f = st.events.iter().filter(|e| **e == a(&[1, 1])).count() as f64 / 20_000.0;
        assert!(f > 0.15 && f < 0.35, "coincidence share {f}");
    }

    #[test]
    fn streams_are_reproducible() {
        let u = haar_random_unitary(4, 9).unwrap();
        let r = a(&[1, 1, 0, 1]);
        for src in [Source::ExactBoson, Source::ClassicalMc, Source::Uniform, Source::Meanfield] {
            let x = sample(src, &r, &u, 200, 5).unwrap();
            let y = sample(src, &r, &u, 200, 5).unwrap();
            let z = sample(src, &r, &u, 200, 6).unwrap();
            assert_eq!(x.events, y.events);
            assert_ne!(x.events, z.events);
        }
    }

    #[test]
    fn uniform_hits_every_arrangement_evenly() {
        let all = enumerate_arrangements(3, 3).unwrap();
        let st = sample_uniform(3, 3, 50_000, 4).unwrap();
        for s in &all {
            let c = st.events.iter().filter(|e| *e == s).count() as f64 / 50_000.0;
            assert!((c - 0.1).abs() < 0.01, "{s}: {c}");
        }
    }

    #[test]
    fn source_tags_round_trip() {
        for s in [Source::ExactBoson, Source::ExactFermion, Source::ClassicalMc, Source::Uniform, Source::Meanfield] {
            assert_eq!(s.tag().parse::<Source>().unwrap(), s);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]

        #[test]
        fn events_conserve_particles(seed in 0u64..500, q in prop::collection::vec(0usize..3, 1..5)) {
            let r = Arrangement::new(q).unwrap();
            prop_assume!(r.particles() > 0);
            let u = haar_random_unitary(r.modes(), seed).unwrap();
            for src in [Source::ExactBoson, Source::ClassicalMc, Source::Uniform, Source::Meanfield] {
                let st = sample(src, &r, &u, 20, seed).unwrap();
                prop_assert!(st.events.iter().all(|e| e.particles() == r.particles() && e.modes() == r.modes()));
            }
        }
    }
}
