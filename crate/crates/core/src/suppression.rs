//! Suppression laws of the Fourier multiport: events forbidden by the
//! periodicity of the input or output arrangement.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{enumerate_arrangements, Arrangement};

/// Which arrangement carries the period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The output s is periodic; Q = m·Σd(r).
    Forward,
    /// The input r is periodic; Q = m·Σd(s).
    Reversed,
}

/// One period that forbids the event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub direction: Direction,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    /// Q mod n
    pub residue: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuppressionVerdict {
    pub suppressed: bool,
    pub witnesses: Vec<Witness>,
}

impl SuppressionVerdict {
    fn from_witnesses(witnesses: Vec<Witness>) -> Self {
        SuppressionVerdict { suppressed: !witnesses.is_empty(), witnesses }
    }
}

fn check(r: &Arrangement, s: &Arrangement, n: usize) -> Result<()> {
    if r.modes() != n || s.modes() != n {
        return Err(Error::Dimension(format!(
            "arrangements over {} and {} modes for an {n}-mode multiport",
            r.modes(),
            s.modes()
        )));
    }
    if r.particles() != s.particles() {
        return Err(Error::Dimension(format!("{} particles in, {} out", r.particles(), s.particles())));
    }
    Ok(())
}

/// Walks the periods of `periodic` and reports those whose Q = m·Σd(other)
/// satisfies `forbidden(p, Q mod n)`.
fn witnesses(
    periodic: &Arrangement,
    other: &Arrangement,
    n: usize,
    direction: Direction,
    forbidden: impl Fn(usize, usize) -> bool,
) -> Vec<Witness> {
    let sum = other.label_sum();
    periodic
        .periods()
        .into_iter()
        .filter_map(|(m, p)| {
            let q = m * sum;
            let residue = q % n;
            forbidden(p, residue).then_some(Witness { direction, m, p, q, residue })
        })
        .collect()
}

/// Bosonic law: an m-periodic s forbids r whenever m·Σd(r) is not a multiple
/// of n, and symmetrically with r and s exchanged.
pub fn boson_suppressed(r: &Arrangement, s: &Arrangement, n: usize) -> Result<SuppressionVerdict> {
    check(r, s, n)?;
    let rule = |_: usize, residue: usize| residue != 0;
    let mut w = witnesses(s, r, n, Direction::Forward, rule);
    w.extend(witnesses(r, s, n, Direction::Reversed, rule));
    Ok(SuppressionVerdict::from_witnesses(w))
}

/// Fermionic law for Pauli arrangements. With N odd or N/p even the event is
/// forbidden when Q mod n ≠ 0; with N even and N/p odd, when Q mod n ≠ n/2.
pub fn fermion_suppressed(r: &Arrangement, s: &Arrangement, n: usize) -> Result<SuppressionVerdict> {
    check(r, s, n)?;
    if !r.is_pauli() || !s.is_pauli() {
        return Err(Error::Species(format!("fermions cannot occupy {r} -> {s}")));
    }
    let big_n = r.particles();
    let rule = |p: usize, residue: usize| {
        if big_n % 2 == 1 || (big_n / p).is_multiple_of(2) {
            residue != 0
        } else {
            residue != n / 2
        }
    };
    let mut w = witnesses(s, r, n, Direction::Forward, rule);
    w.extend(witnesses(r, s, n, Direction::Reversed, rule));
    Ok(SuppressionVerdict::from_witnesses(w))
}

#[derive(Debug, Clone, Serialize)]
pub struct SuppressedFraction {
    /// Suppressed share of all output arrangements.
    pub exact: f64,
    /// 1 − 1/p_max with p_max the largest repetition count of r.
    pub estimate: f64,
    pub suppressed: usize,
    pub total: usize,
}

/// Counts the bosonically suppressed outputs of input `r` on the n-mode
/// Fourier multiport.
pub fn suppressed_fraction(r: &Arrangement, n: usize) -> Result<SuppressedFraction> {
    if r.modes() != n {
        return Err(Error::Dimension(format!("{}-mode input for an {n}-mode multiport", r.modes())));
    }
    let all = enumerate_arrangements(r.particles(), n)?;
    let mut suppressed = 0;
    for s in &all {
        if boson_suppressed(r, s, n)?.suppressed {
            suppressed += 1;
        }
    }
    Ok(SuppressedFraction {
        exact: suppressed as f64 / all.len() as f64,
        estimate: 1.0 - 1.0 / r.max_repetitions() as f64,
        suppressed,
        total: all.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Species;
    use crate::linalg::fourier_unitary;
    use crate::transition::probability;
    use proptest::prelude::*;

    fn a(q: &[usize]) -> Arrangement {
        Arrangement::new(q.to_vec()).unwrap()
    }

    #[test]
    fn four_bosons_in_four_modes() {
        let r = a(&[1, 1, 1, 1]);
        let v = boson_suppressed(&r, &r, 4).unwrap();
        assert!(v.suppressed);
        assert!(v.witnesses.iter().any(|w| w.m == 1 && w.residue == 2));
    }

    #[test]
    fn reversed_direction_example() {
        let v = boson_suppressed(&a(&[2, 2]), &a(&[3, 1]), 2).unwrap();
        assert!(v.suppressed);
        assert!(v.witnesses.iter().all(|w| w.direction == Direction::Reversed));
        assert_eq!(v.witnesses[0].q, 5);
    }

    #[test]
    fn fermion_pair_on_two_modes_allowed() {
        let r = a(&[1, 1]);
        assert!(!fermion_suppressed(&r, &r, 2).unwrap().suppressed);
        assert!(matches!(fermion_suppressed(&a(&[2, 0]), &a(&[1, 1]), 2), Err(Error::Species(_))));
    }

    #[test]
    fn bunched_input_has_nothing_suppressed() {
        for n in 2..=6 {
            let f = suppressed_fraction(&Arrangement::bunched(n, n, 1).unwrap(), n).unwrap();
            assert_eq!(f.exact, 0.0);
            assert_eq!(f.estimate, 0.0);
        }
    }

    #[test]
    fn half_case_needs_even_n() {
        // Whenever the n/2 branch is taken, n is even.
        for n in 1..=8 {
            for k in 0..=n {
                for r in enumerate_arrangements(k, n).unwrap().iter().filter(|x| x.is_pauli()) {
                    for (_, p) in r.periods() {
                        if k % 2 == 0 && (k / p) % 2 == 1 {
                            assert_eq!(n % 2, 0);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn suppressed_boson_events_vanish(n in 2usize..7, k in 1usize..5, i in 0usize..1000, j in 0usize..1000) {
            let all = enumerate_arrangements(k, n).unwrap();
            let r = &all[i % all.len()];
            let s = &all[j % all.len()];
            let u = fourier_unitary(n).unwrap();
            if boson_suppressed(r, s, n).unwrap().suppressed {
                prop_assert!(probability(Species::Boson, r, s, &u).unwrap() < 1e-12);
            }
            let rev = boson_suppressed(s, r, n).unwrap().suppressed;
            prop_assert_eq!(rev, boson_suppressed(r, s, n).unwrap().suppressed);
        }
    }
}
