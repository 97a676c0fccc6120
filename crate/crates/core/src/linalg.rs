//! Dense complex matrices, permanents and determinants, and the device
//! constructors used throughout (Fourier multiport, beam splitter, Haar-random
//! unitaries).

use std::f64::consts::PI;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::Arrangement;

/// Largest matrix order accepted by [`permanent`].
pub const MAX_PERMANENT_ORDER: usize = 30;

/// Orders at or above this split the Gray-code walk into fixed chunks that run
/// in parallel. The chunking does not depend on the thread count, so results
/// are bitwise reproducible.
const PARALLEL_PERMANENT_ORDER: usize = 16;
const PERMANENT_CHUNKS: u64 = 64;

/// Row-major dense complex matrix with at least one row and one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// On-disk layout: `{"rows", "cols", "entries": [[re, im], ...]}` row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        let data = m.entries.iter().map(|e| Complex64::new(e[0], e[1])).collect();
        ComplexMatrix::new(m.rows, m.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix must have at least one row and column".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        ComplexMatrix::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        ComplexMatrix::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        ComplexMatrix::new(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        ComplexMatrix::from_fn(n, n, |j, k| if j == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |j, k| self[(k, j)].conj()).expect("non-empty")
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |j, k| self[(k, j)]).expect("non-empty")
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        ComplexMatrix::from_fn(self.rows, other.cols, |j, k| {
            (0..self.cols).map(|l| self[(j, l)] * other[(l, k)]).sum()
        })
    }

    /// Largest entry of |U·U† − 1|; zero for an exactly unitary matrix.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let p = self.matmul(&self.adjoint()).expect("square");
        let mut worst: f64 = 0.0;
        for j in 0..self.rows {
            for k in 0..self.cols {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((p[(j, k)] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Elementwise squared moduli, the single-particle probabilities p_{j,k}.
    pub fn abs_sq(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Submatrix with rows `rs` and columns `cs` (0-based, repetitions allowed).
    pub fn select(&self, rs: &[usize], cs: &[usize]) -> Result<ComplexMatrix> {
        if let Some(bad) = rs.iter().find(|&&j| j >= self.rows) {
            return Err(Error::Dimension(format!("row {bad} out of range")));
        }
        if let Some(bad) = cs.iter().find(|&&k| k >= self.cols) {
            return Err(Error::Dimension(format!("column {bad} out of range")));
        }
        ComplexMatrix::from_fn(rs.len(), cs.len(), |j, k| self[(rs[j], cs[k])])
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Result<ComplexMatrix> {
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |j, k| m[(j, k)])
    }

    /// Short content hash identifying a device in stream and file headers.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows as u64).to_le_bytes());
        h.update((self.cols as u64).to_le_bytes());
        for z in &self.data {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
        let out = h.finalize();
        hex::encode(&out[..8])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (j, k): (usize, usize)) -> &Complex64 {
        assert!(j < self.rows && k < self.cols, "index ({j},{k}) out of range");
        &self.data[j * self.cols + k]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut Complex64 {
        assert!(j < self.rows && k < self.cols, "index ({j},{k}) out of range");
        &mut self.data[j * self.cols + k]
    }
}

/// Scalars the Ryser walk runs over: complex amplitudes and real probabilities.
pub trait Field: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn zero() -> Self;
    fn one() -> Self;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
}

/// Permanent of a square complex matrix (Ryser formula, Gray-code order).
pub fn permanent(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("permanent of a {}x{} matrix", m.rows, m.cols)));
    }
    permanent_of(m.entries(), m.rows)
}

/// Permanent of an `n`×`n` row-major matrix over any [`Field`]. The empty
/// matrix has permanent one.
pub fn permanent_of<T: Field>(a: &[T], n: usize) -> Result<T> {
    if a.len() != n * n {
        return Err(Error::Dimension(format!("{} entries for order {n}", a.len())));
    }
    if n > MAX_PERMANENT_ORDER {
        return Err(Error::SizeLimit(format!(
            "permanent of order {n} exceeds the cap of {MAX_PERMANENT_ORDER}"
        )));
    }
    if n == 0 {
        return Ok(T::one());
    }
    let total: u64 = 1 << n;
    let sum = if n < PARALLEL_PERMANENT_ORDER {
        ryser_range(a, n, 1, total)
    } else {
        let step = total / PERMANENT_CHUNKS;
        let parts: Vec<T> = (0..PERMANENT_CHUNKS)
            .into_par_iter()
            .map(|c| {
                let lo = (c * step).max(1);
                let hi = if c + 1 == PERMANENT_CHUNKS { total } else { (c + 1) * step };
                ryser_range(a, n, lo, hi)
            })
            .collect();
        parts.into_iter().fold(T::zero(), |acc, x| acc + x)
    };
    // Ryser carries an overall (-1)^n.
    Ok(if n % 2 == 1 { T::zero() - sum } else { sum })
}

/// Largest order handled by [`permanent_nonnegative`]'s subset recursion;
/// larger matrices fall back to Ryser.
pub const MAX_SUBSET_RECURSION_ORDER: usize = 22;

/// Permanent of a matrix with non-negative entries, by recursion over the
/// column subsets used by the leading rows. Every partial sum is a sum of
/// non-negative terms, so small permanents keep full relative accuracy where
/// Ryser's alternating sum would cancel.
pub fn permanent_nonnegative(a: &[f64], n: usize) -> Result<f64> {
    if a.len() != n * n {
        return Err(Error::Dimension(format!("{} entries for order {n}", a.len())));
    }
    if let Some(x) = a.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::Input(format!("negative or NaN entry {x}")));
    }
    if n > MAX_SUBSET_RECURSION_ORDER {
        return permanent_of(a, n);
    }
    let mut dp = vec![0.0f64; 1 << n];
    dp[0] = 1.0;
    for mask in 1usize..1 << n {
        let row = mask.count_ones() as usize - 1;
        let mut acc = 0.0;
        let mut rest = mask;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            acc += dp[mask ^ (1 << j)] * a[row * n + j];
        }
        dp[mask] = acc;
    }
    Ok(dp[(1 << n) - 1])
}

/// Signed Ryser terms for Gray-code steps `lo..hi` (`lo >= 1`).
fn ryser_range<T: Field>(a: &[T], n: usize, lo: u64, hi: u64) -> T {
    let start = (lo - 1) ^ ((lo - 1) >> 1);
    let mut sums = vec![T::zero(); n];
    for col in 0..n {
        if start >> col & 1 == 1 {
            for (i, s) in sums.iter_mut().enumerate() {
                *s = *s + a[i * n + col];
            }
        }
    }
    let mut acc = T::zero();
    for k in lo..hi {
        let col = k.trailing_zeros() as usize;
        let gray = k ^ (k >> 1);
        if gray >> col & 1 == 1 {
            for (i, s) in sums.iter_mut().enumerate() {
                *s = *s + a[i * n + col];
            }
        } else {
            for (i, s) in sums.iter_mut().enumerate() {
                *s = *s - a[i * n + col];
            }
        }
        let prod = sums.iter().fold(T::one(), |p, &s| p * s);
        if gray.count_ones() % 2 == 1 {
            acc = acc - prod;
        } else {
            acc = acc + prod;
        }
    }
    acc
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("determinant of a {}x{} matrix", m.rows, m.cols)));
    }
    let n = m.rows;
    let mut a = m.data.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
            .expect("non-empty range");
        if a[pivot * n + col].norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
        }
    }
    Ok(det)
}

/// Solves `A X = B` for `X`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows != b.rows {
        return Err(Error::Dimension("solve needs square A with matching B".into()));
    }
    let n = a.rows;
    let w = b.cols;
    let mut m = a.data.clone();
    let mut x = b.data.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p * n + col].norm().total_cmp(&m[q * n + col].norm()))
            .expect("non-empty range");
        if m[pivot * n + col].norm() == 0.0 {
            return Err(Error::Singular("zero pivot".into()));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            for k in 0..w {
                x.swap(pivot * w + k, col * w + k);
            }
        }
        let p = m[col * n + col];
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row * n + col] / p;
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
            for k in 0..w {
                let v = x[col * w + k];
                x[row * w + k] -= f * v;
            }
        }
    }
    for row in 0..n {
        let p = m[row * n + row];
        for k in 0..w {
            x[row * w + k] /= p;
        }
    }
    ComplexMatrix::new(n, w, x)
}

/// The n-mode Fourier multiport, U_{j,k} = exp(2πi·j·k/n)/√n with 1-based
/// labels j, k.
pub fn fourier_unitary(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::Dimension("Fourier multiport needs n >= 1".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |j, k| {
        let phase = ((j + 1) * (k + 1)) % n;
        Complex64::from_polar(norm, 2.0 * PI * phase as f64 / n as f64)
    })
}

/// Two-mode beam splitter with reflectivity `r`:
/// [[i√R, √(1−R)], [√(1−R), i√R]].
pub fn beam_splitter(r: f64) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Input(format!("reflectivity {r} outside [0, 1]")));
    }
    let a = Complex64::new(0.0, r.sqrt());
    let b = Complex64::new((1.0 - r).sqrt(), 0.0);
    ComplexMatrix::new(2, 2, vec![a, b, b, a])
}

/// Matrix of independent standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, seed: u64) -> Result<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        data.push(Complex64::new(re, im) / 2f64.sqrt());
    }
    ComplexMatrix::new(rows, cols, data)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal moved into Q.
pub fn haar_random_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    let g = ginibre(n, n, seed)?.to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for j in 0..n {
            q[(j, k)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

/// Scattering submatrix M_{j,k} = U_{d_j(r), d_k(s)}.
pub fn scattering_submatrix(u: &ComplexMatrix, r: &Arrangement, s: &Arrangement) -> Result<ComplexMatrix> {
    if !u.is_square() {
        return Err(Error::Dimension("device matrix must be square".into()));
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
        return Err(Error::Dimension(format!(
            "{} particles in, {} out",
            r.particles(),
            s.particles()
        )));
    }
    if r.particles() == 0 {
        return Err(Error::Dimension("scattering submatrix of zero particles".into()));
    }
    let rows: Vec<usize> = r.mode_assignment().iter().map(|d| d - 1).collect();
    let cols: Vec<usize> = s.mode_assignment().iter().map(|d| d - 1).collect();
    u.select(&rows, &cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Permanent by expansion over all permutations (Heap's algorithm).
    fn naive_permanent(m: &ComplexMatrix) -> Complex64 {
        let n = m.rows();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut total = c(0.0, 0.0);
        let mut stack = vec![0usize; n];
        let term = |idx: &[usize]| (0..n).map(|i| m[(i, idx[i])]).product::<Complex64>();
        total += term(&idx);
        let mut i = 0;
        while i < n {
            if stack[i] < i {
                if i % 2 == 0 {
                    idx.swap(0, i);
                } else {
                    idx.swap(stack[i], i);
                }
                total += term(&idx);
                stack[i] += 1;
                i = 0;
            } else {
                stack[i] = 0;
                i += 1;
            }
        }
        total
    }

    #[test]
    fn permanent_of_two_by_two() {
        let m = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!((permanent(&m).unwrap() - c(10.0, 0.0)).norm() < 1e-14);
        assert!((determinant(&m).unwrap() - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_permanent_is_one() {
        for n in 1..=8 {
            let i = ComplexMatrix::identity(n).unwrap();
            assert!((permanent(&i).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn all_ones_permanent_is_factorial() {
        let m = ComplexMatrix::from_fn(6, 6, |_, _| c(1.0, 0.0)).unwrap();
        assert!((permanent(&m).unwrap().re - 720.0).abs() < 1e-9);
    }

    #[test]
    fn ryser_matches_permutation_expansion() {
        for n in 1..=7 {
            let m = ginibre(n, n, 40 + n as u64).unwrap();
            let a = permanent(&m).unwrap();
            let b = naive_permanent(&m);
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn chunked_walk_matches_single_walk() {
        let n = PARALLEL_PERMANENT_ORDER;
        let m = ginibre(n, n, 7).unwrap();
        let chunked = permanent(&m).unwrap();
        let whole = ryser_range(m.entries(), n, 1, 1 << n);
        let whole = if n % 2 == 1 { -whole } else { whole };
        assert!((chunked - whole).norm() <= 1e-9 * whole.norm());
    }

    #[test]
    fn nonnegative_recursion_matches_ryser() {
        for n in 1..=9 {
            let m = ginibre(n, n, 90 + n as u64).unwrap().abs_sq();
            let x = permanent_nonnegative(&m, n).unwrap();
            let y = permanent_of(&m, n).unwrap();
            assert!((x - y).abs() <= 1e-11 * y);
        }
        assert!(permanent_nonnegative(&[-1.0], 1).is_err());
    }

    #[test]
    fn permanent_rejects_bad_shapes() {
        let m = ComplexMatrix::zeros(2, 3).unwrap();
        assert!(matches!(permanent(&m), Err(Error::Dimension(_))));
        let big = ComplexMatrix::zeros(31, 31).unwrap();
        assert!(matches!(permanent(&big), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn determinant_of_fourier_has_unit_modulus() {
        for n in 1..=8 {
            let u = fourier_unitary(n).unwrap();
            assert!((determinant(&u).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_entries() {
        let u = fourier_unitary(4).unwrap();
        assert!((u[(0, 0)] - c(0.0, 0.5)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        for n in 1..=12 {
            assert!(fourier_unitary(n).unwrap().unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn beam_splitter_is_unitary() {
        for r in [0.0, 0.2, 0.5, 1.0] {
            assert!(beam_splitter(r).unwrap().unitarity_defect() < 1e-15);
        }
        assert!(beam_splitter(1.5).is_err());
    }

    #[test]
    fn haar_is_unitary_and_seeded() {
        let a = haar_random_unitary(6, 3).unwrap();
        let b = haar_random_unitary(6, 3).unwrap();
        let d = haar_random_unitary(6, 4).unwrap();
        assert!(a.unitarity_defect() < 1e-12);
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), d.digest());
    }

    #[test]
    fn solve_inverts() {
        let a = ginibre(5, 5, 11).unwrap();
        let b = ginibre(5, 3, 12).unwrap();
        let x = solve(&a, &b).unwrap();
        let back = a.matmul(&x).unwrap();
        for (p, q) in back.entries().iter().zip(b.entries()) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let u = haar_random_unitary(3, 1).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        assert!(s.contains("\"entries\""));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(u, back);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#).is_err());
    }

    #[test]
    fn submatrix_repeats_rows() {
        let u = fourier_unitary(3).unwrap();
        let r = Arrangement::new(vec![2, 0, 1]).unwrap();
        let s = Arrangement::new(vec![0, 1, 2]).unwrap();
        let m = scattering_submatrix(&u, &r, &s).unwrap();
        assert_eq!(m[(0, 0)], u[(0, 1)]);
        assert_eq!(m[(1, 2)], u[(0, 2)]);
        assert_eq!(m[(2, 0)], u[(2, 1)]);
    }
}
