//! Many-particle transition probabilities P(r → s) through a device U.
//!
//! Distinguishable particles: perm(|M|²)/∏s_j!. Bosons: |perm M|²/(∏r_j!∏s_j!).
//! Fermions: |det M|². M is the scattering submatrix of r and s.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{enumerate_arrangements, factorial, next_permutation, Arrangement, Species};
use crate::linalg::{determinant, permanent, permanent_nonnegative, scattering_submatrix, ComplexMatrix};

/// Largest particle number accepted by [`probability_bruteforce`].
pub const MAX_BRUTEFORCE_PARTICLES: usize = 8;

/// A validated transition query.
#[derive(Debug, Clone, Copy)]
pub struct TransitionQuery<'a> {
    pub species: Species,
    pub input: &'a Arrangement,
    pub output: &'a Arrangement,
    pub device: &'a ComplexMatrix,
}

impl<'a> TransitionQuery<'a> {
    pub fn new(species: Species, input: &'a Arrangement, output: &'a Arrangement, device: &'a ComplexMatrix) -> Result<Self> {
        validate(species, input, output, device)?;
        Ok(TransitionQuery { species, input, output, device })
    }

    pub fn probability(&self) -> Result<f64> {
        probability(self.species, self.input, self.output, self.device)
    }
}

fn validate(species: Species, r: &Arrangement, s: &Arrangement, u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::Dimension(format!("device is {}x{}", u.rows(), u.cols())));
    }
    if r.modes() != u.rows() || s.modes() != u.rows() {
        return Err(Error::Dimension(format!(
            "arrangements over {} and {} modes for a {}-mode device",
            r.modes(),
            s.modes(),
            u.rows()
        )));
    }
    if r.particles() != s.particles() {
        return Err(Error::Dimension(format!("{} particles in, {} out", r.particles(), s.particles())));
    }
    if species == Species::Fermion && !(r.is_pauli() && s.is_pauli()) {
        return Err(Error::Species(format!("fermions cannot occupy {r} -> {s}")));
    }
    Ok(())
}

/// P(r → s) for the given species.
pub fn probability(species: Species, r: &Arrangement, s: &Arrangement, u: &ComplexMatrix) -> Result<f64> {
    validate(species, r, s, u)?;
    if r.particles() == 0 {
        return Ok(1.0);
    }
    let m = scattering_submatrix(u, r, s)?;
    match species {
        Species::Distinguishable => {
            let p = m.abs_sq();
            Ok(permanent_nonnegative(&p, m.rows())? / s.factorial_product())
        }
        Species::Boson => Ok(permanent(&m)?.norm_sqr() / (r.factorial_product() * s.factorial_product())),
        Species::Fermion => Ok(determinant(&m)?.norm_sqr()),
    }
}

/// Independent route: sums single-particle path products over the distinct
/// orderings of d(s), without permanents or determinants.
pub fn probability_bruteforce(species: Species, r: &Arrangement, s: &Arrangement, u: &ComplexMatrix) -> Result<f64> {
    validate(species, r, s, u)?;
    let n = r.particles();
    if n > MAX_BRUTEFORCE_PARTICLES {
        return Err(Error::SizeLimit(format!(
            "brute force limited to {MAX_BRUTEFORCE_PARTICLES} particles, got {n}"
        )));
    }
    let dr: Vec<usize> = r.mode_assignment().iter().map(|d| d - 1).collect();
    let mut ds: Vec<usize> = s.mode_assignment().iter().map(|d| d - 1).collect();
    let mut real = 0.0;
    let mut amp = Complex64::new(0.0, 0.0);
    loop {
        match species {
            Species::Distinguishable => {
                real += dr.iter().zip(&ds).map(|(&a, &b)| u[(a, b)].norm_sqr()).product::<f64>();
            }
            Species::Boson => {
                amp += dr.iter().zip(&ds).map(|(&a, &b)| u[(a, b)]).product::<Complex64>();
            }
            Species::Fermion => {
                let term: Complex64 = dr.iter().zip(&ds).map(|(&a, &b)| u[(a, b)]).product();
                if inversions(&ds) % 2 == 1 {
                    amp -= term;
                } else {
                    amp += term;
                }
            }
        }
        if !next_permutation(&mut ds) {
            break;
        }
    }
    Ok(match species {
        Species::Distinguishable => real,
        Species::Boson => amp.norm_sqr() * s.factorial_product() / r.factorial_product(),
        Species::Fermion => amp.norm_sqr(),
    })
}

fn inversions(v: &[usize]) -> usize {
    (0..v.len()).map(|i| (i + 1..v.len()).filter(|&j| v[i] > v[j]).count()).sum()
}

/// Probabilities of every output arrangement, in enumeration order.
#[derive(Debug, Clone, Serialize)]
pub struct Distribution {
    pub arrangements: Vec<Arrangement>,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn get(&self, s: &Arrangement) -> Option<f64> {
        self.arrangements.iter().position(|a| a == s).map(|i| self.probabilities[i])
    }
}

/// Full output distribution for input `r`. Fermionic entries at non-Pauli
/// outputs are zero.
pub fn full_distribution(species: Species, r: &Arrangement, u: &ComplexMatrix) -> Result<Distribution> {
    if species == Species::Fermion && !r.is_pauli() {
        return Err(Error::Species(format!("fermions cannot occupy {r}")));
    }
    if !u.is_square() || r.modes() != u.rows() {
        return Err(Error::Dimension(format!("{}-mode input for a {}x{} device", r.modes(), u.rows(), u.cols())));
    }
    let arrangements = enumerate_arrangements(r.particles(), r.modes())?;
    let probabilities = arrangements
        .par_iter()
        .map(|s| {
            if species == Species::Fermion && !s.is_pauli() {
                Ok(0.0)
            } else {
                probability(species, r, s, u)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Distribution { arrangements, probabilities })
}

/// Boson and distinguishable probabilities for all particles ending in one mode.
#[derive(Debug, Clone, Serialize)]
pub struct BunchingCheck {
    pub boson: f64,
    pub distinguishable: f64,
    /// P_B / P_D (NaN when P_D vanishes).
    pub ratio: f64,
    /// N!/∏r_j!
    pub expected_ratio: f64,
}

/// Compares the full-bunching probabilities into `target_mode` (1-based).
pub fn bunching_ratio_check(r: &Arrangement, target_mode: usize, u: &ComplexMatrix) -> Result<BunchingCheck> {
    let s = Arrangement::bunched(r.particles(), r.modes(), target_mode)?;
    let boson = probability(Species::Boson, r, &s, u)?;
    let distinguishable = probability(Species::Distinguishable, r, &s, u)?;
    Ok(BunchingCheck {
        boson,
        distinguishable,
        ratio: boson / distinguishable,
        expected_ratio: factorial(r.particles()) / r.factorial_product(),
    })
}

/// Bosonic output state of a two-mode device for input (r1, r2): amplitudes
/// ⟨s1, N−s1| U |r1, r2⟩ for s1 = 0..=N. Creation operators are applied one
/// at a time with the running state kept at unit norm, so there is no
/// particle-number cap and no large cancelling terms.
pub fn two_mode_boson_amplitudes(r1: usize, r2: usize, u: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::Dimension("two-mode amplitudes need a 2x2 device".into()));
    }
    // state[s1] for the particles placed so far.
    let mut state = vec![Complex64::new(1.0, 0.0)];
    for (input, count) in [(0usize, r1), (1usize, r2)] {
        let (to1, to2) = (u[(input, 0)], u[(input, 1)]);
        for k in 0..count {
            let placed = state.len() - 1;
            let mut next = vec![Complex64::new(0.0, 0.0); placed + 2];
            for (s1, &c) in state.iter().enumerate() {
                let s2 = placed - s1;
                next[s1 + 1] += c * to1 * ((s1 + 1) as f64).sqrt();
                next[s1] += c * to2 * ((s2 + 1) as f64).sqrt();
            }
            // k+1 identical creation operators of this input mode so far.
            let scale = 1.0 / ((k + 1) as f64).sqrt();
            state = next.into_iter().map(|z| z * scale).collect();
        }
    }
    Ok(state)
}

/// Bosonic distribution over output mode-1 counts s1 = 0..=N for a two-mode
/// device.
pub fn two_mode_boson_distribution(r1: usize, r2: usize, u: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(two_mode_boson_amplitudes(r1, r2, u)?.iter().map(|a| a.norm_sqr()).collect())
}

/// Two-particle reference values through a balanced beam splitter, used as a
/// fixed point in tests and documentation: P(1,1 → 1,1) per species.
pub fn hong_ou_mandel_coincidence(species: Species) -> f64 {
    match species {
        Species::Distinguishable => 0.5,
        Species::Boson => 0.0,
        Species::Fermion => 1.0,
    }
}
