//! Entanglement generated by propagation and post-selected detection of
//! identical particles: the two-particle transition state and N-party qudit
//! states produced by a scattering matrix W.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{factorial, Species};
use crate::linalg::{determinant, ginibre, permanent, solve, ComplexMatrix};

/// Default finite-difference step (relative) for the Jacobian.
pub const DEFAULT_JACOBIAN_STEP: f64 = 1e-6;
/// Default rank threshold, relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Two-qubit state shared by the observers behind the two output modes,
/// in the basis |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Debug, Clone, Serialize)]
pub struct BipartiteState {
    pub rho: ComplexMatrix,
    /// Wootters concurrence of `rho`.
    pub concurrence: f64,
}

/// ρ = |c21|²·|Ψ^{−δ}⟩⟨Ψ^{−δ}| + |c22|²·ρ_class with
/// |Ψ^{∓}⟩ = (|01⟩ ∓ |10⟩)/√2 and ρ_class = (|01⟩⟨01| + |10⟩⟨10|)/2.
pub fn bipartite_transition_state(species: Species, c21_mod2: f64) -> Result<BipartiteState> {
    let delta = species.exchange_sign()?;
    if !(0.0..=1.0).contains(&c21_mod2) {
        return Err(Error::Input(format!("|c21|² = {c21_mod2} outside [0, 1]")));
    }
    let mut rho = ComplexMatrix::zeros(4, 4)?;
    rho[(1, 1)] = Complex64::new(0.5, 0.0);
    rho[(2, 2)] = Complex64::new(0.5, 0.0);
    rho[(1, 2)] = Complex64::new(-delta * c21_mod2 / 2.0, 0.0);
    rho[(2, 1)] = Complex64::new(-delta * c21_mod2 / 2.0, 0.0);
    let concurrence = concurrence(&rho)?;
    Ok(BipartiteState { rho, concurrence })
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.adjoint()
}

/// Wootters concurrence max(0, λ1−λ2−λ3−λ4) of a two-qubit density matrix,
/// λ_i the decreasing square roots of the eigenvalues of ρ·(σy⊗σy)ρ*(σy⊗σy).
pub fn concurrence(rho: &ComplexMatrix) -> Result<f64> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::Dimension("concurrence needs a 4x4 density matrix".into()));
    }
    let r = rho.to_nalgebra();
    let flip = {
        let mut f = DMatrix::<Complex64>::zeros(4, 4);
        // σy⊗σy = antidiagonal (−1, 1, 1, −1)
        f[(0, 3)] = Complex64::new(-1.0, 0.0);
        f[(1, 2)] = Complex64::new(1.0, 0.0);
        f[(2, 1)] = Complex64::new(1.0, 0.0);
        f[(3, 0)] = Complex64::new(-1.0, 0.0);
        f
    };
    let tilde = &flip * r.map(|z| z.conj()) * &flip;
    let s = hermitian_sqrt(&r);
    let m = &s * tilde * &s;
    let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut lambdas: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Amplitudes g̃_{j1…jN} of N parties with d-level qudits, party 1 most
/// significant.
#[derive(Debug, Clone, Serialize)]
pub struct QuditStateTensor {
    pub parties: usize,
    pub dim: usize,
    pub amplitudes: Vec<Complex64>,
}

impl QuditStateTensor {
    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &j| acc * self.dim + j)
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.parties];
        for k in (0..self.parties).rev() {
            out[k] = index % self.dim;
            index /= self.dim;
        }
        out
    }

    pub fn get(&self, digits: &[usize]) -> Complex64 {
        self.amplitudes[self.index_of(digits)]
    }

    /// Probability that every party receives exactly one particle.
    pub fn postselection_probability(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The tensor reshaped with the parties in `cut` as row index.
    pub fn matricize(&self, cut: &[usize]) -> Result<DMatrix<Complex64>> {
        if cut.iter().any(|&k| k >= self.parties) {
            return Err(Error::Dimension(format!("cut {cut:?} names a party beyond {}", self.parties)));
        }
        let mut a: Vec<usize> = cut.to_vec();
        a.sort_unstable();
        a.dedup();
        let b: Vec<usize> = (0..self.parties).filter(|k| !a.contains(k)).collect();
        let rows = self.dim.pow(a.len() as u32);
        let cols = self.dim.pow(b.len() as u32);
        let mut m = DMatrix::<Complex64>::zeros(rows, cols);
        for (idx, &z) in self.amplitudes.iter().enumerate() {
            let d = self.digits_of(idx);
            let ri = a.iter().fold(0, |acc, &k| acc * self.dim + d[k]);
            let ci = b.iter().fold(0, |acc, &k| acc * self.dim + d[k]);
            m[(ri, ci)] = z;
        }
        Ok(m)
    }
}

fn check_w(w: &ComplexMatrix, d: usize) -> Result<usize> {
    if !w.is_square() {
        return Err(Error::Dimension(format!("W is {}x{}", w.rows(), w.cols())));
    }
    if d < 2 || !w.rows().is_multiple_of(d) {
        return Err(Error::Dimension(format!("{} modes do not split into qudits of dimension {d}", w.rows())));
    }
    Ok(w.rows() / d)
}

/// Matrix V with V_{a,k} = W_{d·a, d·k + j_k} (0-based), sources in rows.
fn v_matrix(w: &ComplexMatrix, d: usize, digits: &[usize]) -> Result<ComplexMatrix> {
    let n = digits.len();
    let rows: Vec<usize> = (0..n).map(|a| a * d).collect();
    let cols: Vec<usize> = digits.iter().enumerate().map(|(k, &j)| k * d + j).collect();
    w.select(&rows, &cols)
}

fn tensor_from(w: &ComplexMatrix, species: Species, d: usize, parties: usize) -> Result<QuditStateTensor> {
    let size = d.checked_pow(parties as u32).ok_or_else(|| Error::SizeLimit("qudit tensor too large".into()))?;
    let mut t = QuditStateTensor { parties, dim: d, amplitudes: Vec::with_capacity(size) };
    for idx in 0..size {
        let v = v_matrix(w, d, &t.digits_of(idx))?;
        let g = match species {
            Species::Boson => permanent(&v)?,
            Species::Fermion => determinant(&v)?,
            Species::Distinguishable => {
                return Err(Error::Species("entanglement generation needs identical particles".into()))
            }
        };
        t.amplitudes.push(g);
    }
    Ok(t)
}

/// Post-selected N-party state produced by W (n = N·d modes, source particle
/// k in internal level 0 of external mode k): g̃ = perm or det of V.
pub fn multipartite_coefficients(w: &ComplexMatrix, species: Species, d: usize) -> Result<QuditStateTensor> {
    let parties = check_w(w, d)?;
    tensor_from(w, species, d, parties)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinorCheck {
    /// Largest |g̃_j − g̃_0·det(C̄_j)| over all j.
    pub defect: f64,
    pub g0: Complex64,
}

/// For qubits: with E = V_{(0…0)}, F = V_{(1…1)} and C = E⁻¹F, every
/// fermionic amplitude equals g̃_0 times the principal minor of C on the
/// parties in level 1.
pub fn fermion_minor_factorization_check(w: &ComplexMatrix) -> Result<MinorCheck> {
    let parties = check_w(w, 2)?;
    let state = tensor_from(w, Species::Fermion, 2, parties)?;
    let e = v_matrix(w, 2, &vec![0; parties])?;
    let f = v_matrix(w, 2, &vec![1; parties])?;
    let g0 = determinant(&e)?;
    if g0.norm() == 0.0 {
        return Err(Error::Singular("E is singular".into()));
    }
    let c = solve(&e, &f)?;
    let mut defect: f64 = 0.0;
    for (idx, &g) in state.amplitudes.iter().enumerate() {
        let keep: Vec<usize> = state.digits_of(idx).iter().enumerate().filter(|(_, &j)| j == 1).map(|(k, _)| k).collect();
        let minor = if keep.is_empty() { Complex64::new(1.0, 0.0) } else { determinant(&c.select(&keep, &keep)?)? };
        defect = defect.max((g - g0 * minor).norm());
    }
    Ok(MinorCheck { defect, g0 })
}

/// Number of singular values above `tol`·σ_max across the bipartition
/// `cut` | rest; a lower bound on the generalized Schmidt rank.
pub fn bipartition_rank(state: &QuditStateTensor, cut: &[usize], tol: f64) -> Result<usize> {
    let m = state.matricize(cut)?;
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::RankUndefined("zero tensor".into()));
    }
    Ok(sv.iter().filter(|&&s| s > tol * max).count())
}

/// N!/∏ r_j! for sources with the given multiplicities.
pub fn combinatorial_rank_bound(multiplicities: &[usize]) -> f64 {
    let n: usize = multiplicities.iter().sum();
    factorial(n) / multiplicities.iter().map(|&m| factorial(m)).product::<f64>()
}

/// N(N−1)+2.
pub fn fermion_dimension_bound(parties: usize) -> usize {
    parties * (parties - 1) + 2
}

/// 2N(N−1)+2.
pub fn boson_dimension_bound(parties: usize) -> usize {
    2 * parties * (parties - 1) + 2
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionEstimate {
    /// Modal complex dimension: half the real Jacobian rank.
    pub dimension: usize,
    /// Real Jacobian rank at each sample point.
    pub real_ranks: Vec<usize>,
    pub bound: usize,
    /// d^N, the complex dimension of the full state space.
    pub state_space: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct JacobianOptions {
    pub step: f64,
    pub rank_tol: f64,
}

impl Default for JacobianOptions {
    fn default() -> Self {
        JacobianOptions { step: DEFAULT_JACOBIAN_STEP, rank_tol: DEFAULT_RANK_TOL }
    }
}

fn state_vector(w: &ComplexMatrix, rows: &[usize], x: &[f64], species: Species, d: usize, parties: usize) -> Result<Vec<f64>> {
    let mut w = w.clone();
    let half = x.len() / 2;
    let cols = w.cols();
    for (i, &row) in rows.iter().enumerate() {
        for c in 0..cols {
            w[(row, c)] = Complex64::new(x[i * cols + c], x[half + i * cols + c]);
        }
    }
    let t = tensor_from(&w, species, d, parties)?;
    Ok(t.amplitudes.iter().map(|z| z.re).chain(t.amplitudes.iter().map(|z| z.im)).collect())
}

/// Real rank of the Jacobian of g̃ with respect to the occupied rows of W at
/// one point.
pub fn jacobian_rank(w: &ComplexMatrix, species: Species, d: usize, opts: JacobianOptions) -> Result<usize> {
    let parties = check_w(w, d)?;
    let rows: Vec<usize> = (0..parties).map(|a| a * d).collect();
    let cols = w.cols();
    let mut x = vec![0.0; 2 * rows.len() * cols];
    let half = x.len() / 2;
    for (i, &row) in rows.iter().enumerate() {
        for c in 0..cols {
            x[i * cols + c] = w[(row, c)].re;
            x[half + i * cols + c] = w[(row, c)].im;
        }
    }
    let columns: Vec<Vec<f64>> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let h = opts.step * x[i].abs().max(1.0);
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            let fu = state_vector(w, &rows, &up, species, d, parties)?;
            let fd = state_vector(w, &rows, &down, species, d, parties)?;
            Ok(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    let m = columns[0].len();
    let jac = DMatrix::<f64>::from_fn(m, columns.len(), |r, c| columns[c][r]);
    let sv = jac.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > opts.rank_tol * max).count())
}

/// Dimension of the manifold of states reachable with N parties, estimated
/// from the Jacobian rank at `samples` random W (Ginibre, seeds
/// `seed..seed+samples`). The map is holomorphic, so its real rank is twice
/// the complex dimension reported here.
pub fn manifold_dimension_estimate(
    species: Species,
    parties: usize,
    d: usize,
    seed: u64,
    samples: usize,
    opts: JacobianOptions,
) -> Result<DimensionEstimate> {
    if samples == 0 || parties == 0 {
        return Err(Error::Input("need at least one sample and one party".into()));
    }
    species.exchange_sign()?;
    let n = parties * d;
    let real_ranks = (0..samples as u64)
        .map(|i| jacobian_rank(&ginibre(n, n, seed + i)?, species, d, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = std::collections::BTreeMap::new();
    for &r in &real_ranks {
        *counts.entry(r).or_insert(0usize) += 1;
    }
    let (&modal, &hits) = counts.iter().max_by_key(|(_, &c)| c).expect("samples > 0");
    if 2 * hits <= samples {
        return Err(Error::AmbiguousRank(format!("ranks per sample: {real_ranks:?}")));
    }
    let bound = match species {
        Species::Fermion if d == 2 => fermion_dimension_bound(parties),
        Species::Boson if d == 2 => boson_dimension_bound(parties),
        _ => 0,
    };
    Ok(DimensionEstimate { dimension: modal / 2, real_ranks, bound, state_space: d.pow(parties as u32) })
}
