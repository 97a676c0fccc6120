//! Mode occupations ("arrangements"), their mode-assignment lists, and the
//! particle species.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state space that is ever materialised.
pub const MAX_STATE_SPACE: u128 = 10_000_000;

/// Particle species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Distinguishable,
    Boson,
    Fermion,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Distinguishable, Species::Boson, Species::Fermion];

    pub fn name(self) -> &'static str {
        match self {
            Species::Distinguishable => "distinguishable",
            Species::Boson => "boson",
            Species::Fermion => "fermion",
        }
    }

    /// +1 for bosons, −1 for fermions.
    pub fn exchange_sign(self) -> Result<f64> {
        match self {
            Species::Boson => Ok(1.0),
            Species::Fermion => Ok(-1.0),
            Species::Distinguishable => Err(Error::Species("distinguishable particles have no exchange symmetry".into())),
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Species {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "dist" | "distinguishable" => Ok(Species::Distinguishable),
            "b" | "boson" | "bosons" => Ok(Species::Boson),
            "f" | "fermion" | "fermions" => Ok(Species::Fermion),
            other => Err(Error::Input(format!("unknown species '{other}'"))),
        }
    }
}

/// Occupation numbers q_1..q_n of n modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arrangement {
    occupations: Vec<usize>,
}

impl Arrangement {
    pub fn new(occupations: Vec<usize>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::Input("an arrangement needs at least one mode".into()));
        }
        Ok(Arrangement { occupations })
    }

    /// All `n` particles in mode `mode` (1-based) of `modes`.
    pub fn bunched(particles: usize, modes: usize, mode: usize) -> Result<Self> {
        if mode == 0 || mode > modes {
            return Err(Error::Input(format!("mode {mode} outside 1..={modes}")));
        }
        let mut q = vec![0; modes];
        q[mode - 1] = particles;
        Arrangement::new(q)
    }

    /// Inverse of [`Arrangement::mode_assignment`]: counts 1-based labels.
    pub fn from_assignment(labels: &[usize], modes: usize) -> Result<Self> {
        let mut q = vec![0; modes];
        for &d in labels {
            if d == 0 || d > modes {
                return Err(Error::Input(format!("mode label {d} outside 1..={modes}")));
            }
            q[d - 1] += 1;
        }
        Arrangement::new(q)
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }

    pub fn particles(&self) -> usize {
        self.occupations.iter().sum()
    }

    /// Non-decreasing list of 1-based mode labels, one per particle.
    pub fn mode_assignment(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .enumerate()
            .flat_map(|(j, &q)| std::iter::repeat_n(j + 1, q))
            .collect()
    }

    /// Sum of the mode-assignment list.
    pub fn label_sum(&self) -> usize {
        self.occupations.iter().enumerate().map(|(j, &q)| (j + 1) * q).sum()
    }

    /// At most one particle per mode.
    pub fn is_pauli(&self) -> bool {
        self.occupations.iter().all(|&q| q <= 1)
    }

    /// ∏_j q_j!
    pub fn factorial_product(&self) -> f64 {
        self.occupations.iter().map(|&q| factorial(q)).product()
    }

    /// All (m, p) with m·p = n such that the occupations are p repetitions of
    /// their first m entries, in increasing m. Always contains (n, 1).
    pub fn periods(&self) -> Vec<(usize, usize)> {
        let n = self.modes();
        (1..=n)
            .filter(|&m| n.is_multiple_of(m))
            .filter(|&m| (0..n).all(|j| self.occupations[j] == self.occupations[j % m]))
            .map(|m| (m, n / m))
            .collect()
    }

    /// Largest repetition count p over all periods.
    pub fn max_repetitions(&self) -> usize {
        self.periods().iter().map(|&(_, p)| p).max().unwrap_or(1)
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.occupations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Arrangement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let occ = t
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Input(format!("'{x}' is not a non-negative occupation in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Arrangement::new(occ)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// binom(a, b) as u128, `None` on overflow.
pub fn binomial(a: u64, b: u64) -> Option<u128> {
    if b > a {
        return Some(0);
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc.checked_mul((a - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of arrangements of `particles` over `modes`, binom(N+n−1, N).
pub fn arrangement_count(particles: usize, modes: usize) -> Result<u128> {
    if modes == 0 {
        return Err(Error::Input("at least one mode is required".into()));
    }
    binomial((particles + modes - 1) as u64, particles as u64)
        .ok_or_else(|| Error::SizeLimit(format!("arrangement count for N={particles}, n={modes} overflows")))
}

/// Every arrangement of `particles` over `modes`, lexicographically
/// decreasing: (N,0,…,0) first, (0,…,0,N) last.
pub fn enumerate_arrangements(particles: usize, modes: usize) -> Result<Vec<Arrangement>> {
    let count = arrangement_count(particles, modes)?;
    if count > MAX_STATE_SPACE {
        return Err(Error::SizeLimit(format!(
            "{count} arrangements for N={particles}, n={modes} exceed {MAX_STATE_SPACE}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut q = vec![0usize; modes];
    fill(&mut q, 0, particles, &mut out);
    Ok(out)
}

fn fill(q: &mut [usize], pos: usize, left: usize, out: &mut Vec<Arrangement>) {
    if pos + 1 == q.len() {
        q[pos] = left;
        out.push(Arrangement { occupations: q.to_vec() });
        return;
    }
    for take in (0..=left).rev() {
        q[pos] = take;
        fill(q, pos + 1, left - take, out);
    }
    q[pos] = 0;
}

/// Advances `v` to its next lexicographic permutation; false after the last.
/// Repeated values yield each distinct ordering once.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(q: &[usize]) -> Arrangement {
        Arrangement::new(q.to_vec()).unwrap()
    }

    #[test]
    fn assignment_of_example() {
        assert_eq!(a(&[2, 1, 0]).mode_assignment(), vec![1, 1, 2]);
        assert_eq!(a(&[0, 0, 3]).mode_assignment(), vec![3, 3, 3]);
    }

    #[test]
    fn enumeration_counts_and_order() {
        let all = enumerate_arrangements(4, 8).unwrap();
        assert_eq!(all.len(), 330);
        assert_eq!(all[0], a(&[4, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!(all[329], a(&[0, 0, 0, 0, 0, 0, 0, 4]));
        assert!(all.windows(2).all(|w| w[0] > w[1]));
        let two = enumerate_arrangements(2, 2).unwrap();
        assert_eq!(two, vec![a(&[2, 0]), a(&[1, 1]), a(&[0, 2])]);
    }

    #[test]
    fn enumeration_size_errors() {
        assert!(matches!(enumerate_arrangements(40, 40), Err(Error::SizeLimit(_))));
        assert!(matches!(arrangement_count(200, 200), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn periods_of_examples() {
        assert_eq!(a(&[1, 0, 1, 0]).periods(), vec![(2, 2), (4, 1)]);
        assert_eq!(a(&[1, 1, 1, 1]).periods(), vec![(1, 4), (2, 2), (4, 1)]);
        assert_eq!(a(&[2, 0, 0]).periods(), vec![(3, 1)]);
    }

    #[test]
    fn pauli_and_factorials() {
        assert!(a(&[1, 0, 1]).is_pauli());
        assert!(!a(&[2, 0, 1]).is_pauli());
        assert_eq!(a(&[3, 2, 0]).factorial_product(), 12.0);
    }

    #[test]
    fn parse_and_display() {
        let x: Arrangement = "2,1,0".parse().unwrap();
        assert_eq!(x, a(&[2, 1, 0]));
        assert_eq!(x.to_string(), "2,1,0");
        assert!("2,-1".parse::<Arrangement>().is_err());
        assert!("".parse::<Arrangement>().is_err());
        assert_eq!("boson".parse::<Species>().unwrap(), Species::Boson);
    }

    #[test]
    fn distinct_permutations_of_multiset() {
        let mut v = vec![1, 1, 2];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen, vec![vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]]);
    }

    fn arrangement() -> impl Strategy<Value = Arrangement> {
        prop::collection::vec(0usize..4, 1..7).prop_map(|q| Arrangement::new(q).unwrap())
    }

    proptest! {
        #[test]
        fn assignment_round_trips(r in arrangement()) {
            let d = r.mode_assignment();
            prop_assert_eq!(d.len(), r.particles());
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(Arrangement::from_assignment(&d, r.modes()).unwrap(), r);
        }

        #[test]
        fn periods_tile_the_arrangement(r in arrangement()) {
            let ps = r.periods();
            prop_assert!(ps.contains(&(r.modes(), 1)));
            for (m, p) in ps {
                prop_assert_eq!(m * p, r.modes());
                prop_assert_eq!(r.particles() % p, 0);
                let block: usize = r.occupations()[..m].iter().sum();
                prop_assert_eq!(block * p, r.particles());
            }
        }

        #[test]
        fn enumeration_matches_count(n in 0usize..6, modes in 1usize..6) {
            let all = enumerate_arrangements(n, modes).unwrap();
            prop_assert_eq!(all.len() as u128, arrangement_count(n, modes).unwrap());
            prop_assert!(all.iter().all(|x| x.particles() == n && x.modes() == modes));
        }
    }
}
