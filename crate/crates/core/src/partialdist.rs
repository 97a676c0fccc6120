//! Partially distinguishable particles: Gaussian wavepackets with arrival-time
//! offsets, their orthogonal decomposition, and the resulting counting signals.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{enumerate_arrangements, Arrangement};
use crate::linalg::{permanent, scattering_submatrix, ComplexMatrix};
use crate::transition::{two_mode_boson_distribution, Distribution};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest particle number for [`multimode_signal`].
pub const MAX_MULTIMODE_PARTICLES: usize = 8;

/// Coefficients with modulus below this are merged into the existing basis.
pub const GRAM_SCHMIDT_MERGE_TOL: f64 = 1e-14;

/// Largest number of (input, output) label configurations a multimode signal
/// may visit.
const MAX_MULTIMODE_WORK: usize = 20_000_000;

/// Gaussian spectral profile shared by all particles: central angular
/// frequency ω0 and amplitude width Δω, so that
/// ⟨t_j|t_k⟩ = e^{i(t_k−t_j)ω0}·e^{−(t_j−t_k)²Δω²/4}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavepacketSet {
    pub omega0: f64,
    pub delta_omega: f64,
}

impl WavepacketSet {
    pub fn new(omega0: f64, delta_omega: f64) -> Result<Self> {
        if !(omega0.is_finite() && delta_omega.is_finite() && delta_omega > 0.0) {
            return Err(Error::Input(format!("invalid wavepacket parameters ω0={omega0}, Δω={delta_omega}")));
        }
        Ok(WavepacketSet { omega0, delta_omega })
    }

    /// From a central wavelength and a bandwidth in metres. The bandwidth is
    /// read as the full width at half maximum of the spectral amplitude.
    pub fn from_wavelengths(lambda: f64, delta_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && delta_lambda > 0.0) {
            return Err(Error::Input("wavelengths must be positive".into()));
        }
        let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda;
        let fwhm = 2.0 * PI * SPEED_OF_LIGHT * delta_lambda / (lambda * lambda);
        WavepacketSet::new(omega0, fwhm / (2.0 * (2.0 * LN_2).sqrt()))
    }

    /// 800 nm photons with 2.5 nm bandwidth (coherence length ≈ 226 μm).
    pub fn default_photons() -> Self {
        WavepacketSet::from_wavelengths(800e-9, 2.5e-9).expect("valid defaults")
    }

    /// Path-length difference at which the two-photon overlap |c21|² drops to
    /// 1/2, doubled: the full width of the two-photon dip.
    pub fn coherence_length(&self) -> f64 {
        2.0 * SPEED_OF_LIGHT * (2.0 * LN_2).sqrt() / self.delta_omega
    }

    pub fn gaussian_overlap(&self, tj: f64, tk: f64) -> Complex64 {
        let dt = tk - tj;
        Complex64::from_polar((-dt * dt * self.delta_omega * self.delta_omega / 4.0).exp(), dt * self.omega0)
    }

    /// |c21|² for a path-length difference `x` (metres).
    pub fn overlap_sq_at(&self, x: f64) -> f64 {
        self.gaussian_overlap(0.0, x / SPEED_OF_LIGHT).norm_sqr()
    }
}

/// Lower-triangular expansion |t_j⟩ = Σ_l c_{j,l} |t̃_l⟩ of arrival-time kets
/// in an orthonormal basis, with c_{j,l} = ⟨t̃_l|t_j⟩ and real c_{j,j} ≥ 0.
#[derive(Debug, Clone, Serialize)]
pub struct GramSchmidtTriangle {
    /// Distinct arrival times, in first-seen order; one row each.
    pub times: Vec<f64>,
    /// `coefficients[j][l]`, one row per distinct time, one column per basis ket.
    pub coefficients: Vec<Vec<Complex64>>,
}

impl GramSchmidtTriangle {
    pub fn labels(&self) -> usize {
        self.coefficients.first().map_or(0, Vec::len)
    }

    /// Row index of an arrival time.
    pub fn ket_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| x == t)
    }

    pub fn c(&self, j: usize, l: usize) -> Complex64 {
        self.coefficients[j][l]
    }
}

/// Orthogonalises the kets of the given arrival times (seconds). Equal times
/// share a row; a ket whose new component falls below the merge tolerance adds
/// no basis vector.
pub fn gram_schmidt(wp: &WavepacketSet, times: &[f64]) -> Result<GramSchmidtTriangle> {
    if times.is_empty() {
        return Err(Error::Input("no arrival times".into()));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Input(format!("arrival time {t} is not finite")));
    }
    let mut distinct: Vec<f64> = Vec::new();
    for &t in times {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }
    // Basis kets are represented through the time kets that spawned them.
    let mut basis_rows: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (j, &tj) in distinct.iter().enumerate() {
        let mut row = Vec::with_capacity(basis_rows.len() + 1);
        for (l, &b) in basis_rows.iter().enumerate() {
            // ⟨t̃_l|t_j⟩ = (⟨t_b|t_j⟩ − Σ_{m<l} conj(c_{b,m}) c_{j,m}) / c_{b,l}
            let mut v = wp.gaussian_overlap(distinct[b], tj);
            for m in 0..l {
                v -= rows[b][m].conj() * row[m];
            }
            row.push(v / rows[b][l].re);
        }
        let rest = 1.0 - row.iter().map(|z: &Complex64| z.norm_sqr()).sum::<f64>();
        let diag = rest.max(0.0).sqrt();
        // 1 − Σ|c|² carries round-off of a few ε, so residuals at that level
        // are merged as well.
        if diag > GRAM_SCHMIDT_MERGE_TOL && rest > 1e3 * f64::EPSILON {
            row.push(Complex64::new(diag, 0.0));
            basis_rows.push(j);
        }
        rows.push(row);
    }
    let labels = basis_rows.len();
    for row in rows.iter_mut() {
        row.resize(labels, Complex64::new(0.0, 0.0));
    }
    Ok(GramSchmidtTriangle { times: distinct, coefficients: rows })
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

fn binomial_pmf(d: usize, p: f64) -> Vec<f64> {
    (0..=d)
        .map(|b| {
            let lc = ln_factorial(d) - ln_factorial(b) - ln_factorial(d - b);
            let pb = if b == 0 { 1.0 } else { p.powi(b as i32) };
            let qb = if d == b { 1.0 } else { (1.0 - p).powi((d - b) as i32) };
            lc.exp() * pb * qb
        })
        .collect()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn check_two_mode(u: &ComplexMatrix, c21_mod2: f64) -> Result<()> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::Dimension("two-mode signal needs a 2x2 device".into()));
    }
    if !(0.0..=1.0).contains(&c21_mod2) {
        return Err(Error::Input(format!("|c21|² = {c21_mod2} outside [0, 1]")));
    }
    Ok(())
}

/// Distribution over s1 = 0..=N when `d` of the r2 mode-2 particles are fully
/// distinguishable from everything else and the rest interfere as bosons.
pub fn fixed_type_distribution(r1: usize, r2: usize, d: usize, u: &ComplexMatrix) -> Result<Vec<f64>> {
    if d > r2 {
        return Err(Error::Input(format!("{d} distinguishable particles out of {r2}")));
    }
    let inter = two_mode_boson_distribution(r1, r2 - d, u)?;
    // The distinguishable group enters mode 2 in a common state; each reaches
    // output mode 1 with probability |U_{2,1}|².
    let apart = binomial_pmf(d, u[(1, 0)].norm_sqr());
    Ok(convolve(&inter, &apart))
}

/// W_d for d = 0..=r2 distinguishable mode-2 particles at overlap |c21|².
pub fn distinguishability_weights(r2: usize, c21_mod2: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&c21_mod2) {
        return Err(Error::Input(format!("|c21|² = {c21_mod2} outside [0, 1]")));
    }
    let c22_mod2 = 1.0 - c21_mod2;
    Ok((0..=r2)
        .map(|d| {
            let lc = ln_factorial(r2) - ln_factorial(d) - ln_factorial(r2 - d);
            lc.exp() * c22_mod2.powi(d as i32) * c21_mod2.powi((r2 - d) as i32)
        })
        .collect())
}

/// Two-mode counting signal P_T(s1) for s1 = 0..=N: bosons in input mode 1
/// with one arrival time, bosons in mode 2 with another, temporal overlap
/// |c21|². Weighted over the number d of mode-2 particles that are
/// distinguishable, W_d = binom(r2, d)·|c22|^{2d}·|c21|^{2(r2−d)}.
pub fn two_mode_signal(r1: usize, r2: usize, u: &ComplexMatrix, c21_mod2: f64) -> Result<Vec<f64>> {
    check_two_mode(u, c21_mod2)?;
    let w = distinguishability_weights(r2, c21_mod2)?;
    let mut out = vec![0.0; r1 + r2 + 1];
    for (d, &wd) in w.iter().enumerate() {
        if wd == 0.0 {
            continue;
        }
        for (s1, p) in fixed_type_distribution(r1, r2, d, u)?.into_iter().enumerate() {
            out[s1] += wd * p;
        }
    }
    Ok(out)
}

/// Replaces the mixture over d by its single most likely term:
/// d̄ = round(r2·|c21|²) mode-2 particles interfere, ties rounding up.
pub fn dominant_type_approximation(r1: usize, r2: usize, u: &ComplexMatrix, c21_mod2: f64) -> Result<Vec<f64>> {
    check_two_mode(u, c21_mod2)?;
    let dbar = ((r2 as f64 * c21_mod2) + 0.5).floor() as usize;
    fixed_type_distribution(r1, r2, r2 - dbar.min(r2), u)
}

/// Limit density of the mode-1 share x = s1/N for large balanced inputs.
/// Diverges at both endpoints; integrate over bins there instead.
pub fn semiclassical_density(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Divergence(format!("density is unbounded at x = {x}")));
    }
    Ok(1.0 / (PI * (x * (1.0 - x)).sqrt()))
}

/// Mass of [`semiclassical_density`] in `bins` equal bins over [0, 1].
pub fn semiclassical_bin_masses(bins: usize) -> Vec<f64> {
    let cdf = |x: f64| 2.0 / PI * x.sqrt().asin();
    (0..bins)
        .map(|b| cdf((b + 1) as f64 / bins as f64) - cdf(b as f64 / bins as f64))
        .collect()
}

/// A sampled signal against path-length difference.
#[derive(Debug, Clone, Serialize)]
pub struct Scan {
    pub x: Vec<f64>,
    pub signal: Vec<f64>,
    /// Value at full distinguishability.
    pub baseline: f64,
}

/// P_T(s1, x) of a two-mode input over the delays `xs` (metres).
pub fn two_mode_scan(r1: usize, r2: usize, s1: usize, u: &ComplexMatrix, wp: &WavepacketSet, xs: &[f64]) -> Result<Scan> {
    if s1 > r1 + r2 {
        return Err(Error::Dimension(format!("{s1} particles out of {}", r1 + r2)));
    }
    let signal = xs
        .iter()
        .map(|&x| two_mode_signal(r1, r2, u, wp.overlap_sq_at(x)).map(|p| p[s1]))
        .collect::<Result<Vec<_>>>()?;
    let baseline = two_mode_signal(r1, r2, u, 0.0)?[s1];
    Ok(Scan { x: xs.to_vec(), signal, baseline })
}

/// Evenly spaced grid of `points` values over [lo, hi].
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

/// Full width at half depth (dip) or half height (peak) relative to the
/// baseline, by linear interpolation between scan points around the sample
/// that deviates most from the baseline. Both flanks must approach the
/// baseline monotonically down to the half level.
pub fn fwhm(scan: &Scan) -> Result<f64> {
    let n = scan.signal.len();
    if n < 3 || scan.x.len() != n {
        return Err(Error::Input("scan too short".into()));
    }
    let (peak, dev) = scan
        .signal
        .iter()
        .map(|v| v - scan.baseline)
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty");
    if dev.abs() <= crate::NUMERICAL_ZERO {
        return Err(Error::Input("flat signal has no width".into()));
    }
    let half = scan.baseline + dev / 2.0;
    let beyond = |i: usize| (scan.signal[i] - half) * dev.signum() < 0.0;
    let cross = |a: usize, b: usize| {
        let (ya, yb) = (scan.signal[a], scan.signal[b]);
        scan.x[a] + (half - ya) * (scan.x[b] - scan.x[a]) / (yb - ya)
    };
    let right = (peak + 1..n)
        .find(|&i| beyond(i))
        .ok_or_else(|| Error::WidthUndefined("no half crossing right of the extremum".into()))?;
    let left = (0..peak)
        .rev()
        .find(|&i| beyond(i))
        .ok_or_else(|| Error::WidthUndefined("no half crossing left of the extremum".into()))?;
    let slack = 1e-12 * dev.abs();
    let receding = |i: usize, j: usize| (scan.signal[j] - scan.signal[i]) * dev.signum() <= slack;
    if !(peak..right).all(|i| receding(i, i + 1)) || !(left + 1..=peak).all(|i| receding(i, i - 1)) {
        return Err(Error::WidthUndefined("flank is not monotonic".into()));
    }
    Ok(cross(right - 1, right) - cross(left + 1, left))
}

/// All compositions of `total` into `parts` non-negative parts.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    enumerate_arrangements(total, parts)
        .map(|v| v.into_iter().map(|a| a.occupations().to_vec()).collect())
        .unwrap_or_default()
}

/// Cartesian product of per-mode choices.
fn product<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for item in c {
                let mut p = prefix.clone();
                p.push(item.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Distribution of a general N ≤ 8 input through an n-mode device, with
/// particles in mode j arriving at `times[j]` (seconds). Each particle is
/// expanded over orthonormal temporal labels; particles sharing a label
/// interfere as bosons, and amplitudes that feed the same label-resolved
/// output add coherently before squaring.
pub fn multimode_signal(r: &Arrangement, u: &ComplexMatrix, times: &[f64], wp: &WavepacketSet) -> Result<Distribution> {
    let n = r.modes();
    if !u.is_square() || u.rows() != n {
        return Err(Error::Dimension(format!("{n}-mode input for a {}x{} device", u.rows(), u.cols())));
    }
    if times.len() != n {
        return Err(Error::Dimension(format!("{} arrival times for {n} modes", times.len())));
    }
    let big_n = r.particles();
    if big_n > MAX_MULTIMODE_PARTICLES {
        return Err(Error::SizeLimit(format!("{big_n} particles exceed {MAX_MULTIMODE_PARTICLES}")));
    }
    let occupied: Vec<usize> = (0..n).filter(|&j| r.occupations()[j] > 0).collect();
    let occupied_times: Vec<f64> = occupied.iter().map(|&j| times[j]).collect();
    let outputs = enumerate_arrangements(big_n, n)?;
    if big_n == 0 {
        let probabilities = vec![1.0; outputs.len()];
        return Ok(Distribution { arrangements: outputs, probabilities });
    }
    let tri = gram_schmidt(wp, &occupied_times)?;
    let labels = tri.labels();

    // Input label splits A[j][l], grouped by per-label particle counts.
    let per_mode: Vec<Vec<Vec<usize>>> = occupied.iter().map(|&j| compositions(r.occupations()[j], labels)).collect();
    let mut by_counts: HashMap<Vec<usize>, Vec<(Complex64, Vec<Arrangement>)>> = HashMap::new();
    for split in product(&per_mode) {
        let mut coeff = Complex64::new(1.0, 0.0);
        for (idx, &j) in occupied.iter().enumerate() {
            let ket = tri.ket_of(times[j]).expect("time registered");
            let rj = r.occupations()[j];
            let mut denom = 0.0;
            for (l, &a) in split[idx].iter().enumerate() {
                if a > 0 {
                    coeff *= tri.c(ket, l).powu(a as u32);
                    denom += ln_factorial(a);
                }
            }
            coeff *= (0.5 * ln_factorial(rj) - denom).exp();
        }
        if coeff.norm() == 0.0 {
            continue;
        }
        let groups: Vec<Arrangement> = (0..labels)
            .map(|l| {
                let mut q = vec![0usize; n];
                for (idx, &j) in occupied.iter().enumerate() {
                    q[j] = split[idx][l];
                }
                Arrangement::new(q)
            })
            .collect::<Result<_>>()?;
        let counts: Vec<usize> = groups.iter().map(Arrangement::particles).collect();
        by_counts.entry(counts).or_default().push((coeff, groups));
    }

    let mut work = 0usize;
    let mut probabilities = Vec::with_capacity(outputs.len());
    let mut perm_cache: HashMap<(Arrangement, Arrangement), Complex64> = HashMap::new();
    for s in &outputs {
        let per_out: Vec<Vec<Vec<usize>>> = s.occupations().iter().map(|&q| compositions(q, labels)).collect();
        let mut total = 0.0;
        for split in product(&per_out) {
            let groups: Vec<Arrangement> = (0..labels)
                .map(|l| Arrangement::new(split.iter().map(|row| row[l]).collect()))
                .collect::<Result<_>>()?;
            let counts: Vec<usize> = groups.iter().map(Arrangement::particles).collect();
            let Some(inputs) = by_counts.get(&counts) else { continue };
            work += inputs.len();
            if work > MAX_MULTIMODE_WORK {
                return Err(Error::SizeLimit("multimode signal state space too large".into()));
            }
            let norm: f64 = groups.iter().map(Arrangement::factorial_product).product::<f64>().sqrt();
            let mut amp = Complex64::new(0.0, 0.0);
            for (coeff, ins) in inputs {
                let mut term = *coeff;
                for (a, f) in ins.iter().zip(&groups) {
                    if a.particles() == 0 {
                        continue;
                    }
                    let key = (a.clone(), f.clone());
                    let p = match perm_cache.get(&key) {
                        Some(p) => *p,
                        None => {
                            let p = permanent(&scattering_submatrix(u, a, f)?)?;
                            perm_cache.insert(key, p);
                            p
                        }
                    };
                    term *= p;
                }
                amp += term;
            }
            total += (amp / norm).norm_sqr();
        }
        probabilities.push(total);
    }
    Ok(Distribution { arrangements: outputs, probabilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Species;
    use crate::linalg::{beam_splitter, haar_random_unitary};
    use crate::transition::{full_distribution, probability};
    use proptest::prelude::*;

    fn a(q: &[usize]) -> Arrangement {
        Arrangement::new(q.to_vec()).unwrap()
    }

    #[test]
    fn default_coherence_length() {
        let lc = WavepacketSet::default_photons().coherence_length();
        assert!((lc - 226e-6).abs() < 1e-6, "{lc}");
    }

    #[test]
    fn overlap_properties() {
        let wp = WavepacketSet::default_photons();
        assert!((wp.gaussian_overlap(1e-13, 1e-13) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let lc = wp.coherence_length();
        assert!((wp.overlap_sq_at(lc / 2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn triangle_shapes() {
        let wp = WavepacketSet::default_photons();
        let tau = 1e-13;
        let t = gram_schmidt(&wp, &[0.0, tau, 2.0 * tau]).unwrap();
        assert_eq!(t.coefficients.len(), 3);
        assert_eq!(t.labels(), 3);
        let same = gram_schmidt(&wp, &[tau, tau, tau]).unwrap();
        assert_eq!(same.coefficients, vec![vec![Complex64::new(1.0, 0.0)]]);
        let pair = gram_schmidt(&wp, &[0.0, tau]).unwrap();
        assert!((pair.c(1, 0) - wp.gaussian_overlap(0.0, tau)).norm() < 1e-15);
    }

    #[test]
    fn hom_dip_values() {
        let u = beam_splitter(0.5).unwrap();
        for w in [0.0, 0.3, 1.0] {
            let p = two_mode_signal(1, 1, &u, w).unwrap();
            assert!((p[1] - (1.0 - w) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_mode_limits() {
        let u = haar_random_unitary(2, 8).unwrap();
        let full = two_mode_signal(2, 3, &u, 1.0).unwrap();
        let none = two_mode_signal(2, 3, &u, 0.0).unwrap();
        for s1 in 0..=5 {
            let s = a(&[s1, 5 - s1]);
            let pb = probability(Species::Boson, &a(&[2, 3]), &s, &u).unwrap();
            let pd = probability(Species::Distinguishable, &a(&[2, 3]), &s, &u).unwrap();
            assert!((full[s1] - pb).abs() < 1e-12);
            assert!((none[s1] - pd).abs() < 1e-12);
        }
    }

    #[test]
    fn multimode_matches_two_mode_signal() {
        let u = beam_splitter(0.5).unwrap();
        let wp = WavepacketSet::default_photons();
        let lc = wp.coherence_length();
        for x in [0.0, 0.3 * lc, 0.8 * lc] {
            let dist = multimode_signal(&a(&[2, 2]), &u, &[0.0, x / SPEED_OF_LIGHT], &wp).unwrap();
            let two = two_mode_signal(2, 2, &u, wp.overlap_sq_at(x)).unwrap();
            for s1 in 0..=4 {
                let p = dist.get(&a(&[s1, 4 - s1])).unwrap();
                assert!((p - two[s1]).abs() < 1e-10, "x={x} s1={s1}: {p} vs {}", two[s1]);
            }
        }
    }

    #[test]
    fn multimode_limits_on_haar_device() {
        let u = haar_random_unitary(3, 21).unwrap();
        let wp = WavepacketSet::default_photons();
        let r = a(&[2, 1, 0]);
        let together = multimode_signal(&r, &u, &[0.0; 3], &wp).unwrap();
        let apart = multimode_signal(&r, &u, &[0.0, 1e-9, 2e-9], &wp).unwrap();
        let pb = full_distribution(Species::Boson, &r, &u).unwrap();
        let pd = full_distribution(Species::Distinguishable, &r, &u).unwrap();
        for i in 0..pb.probabilities.len() {
            assert!((together.probabilities[i] - pb.probabilities[i]).abs() < 1e-10);
            assert!((apart.probabilities[i] - pd.probabilities[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn fwhm_of_triangle() {
        let xs = grid(-2.0, 2.0, 401);
        let signal = xs.iter().map(|x| 1.0 - (1.0 - x.abs()).max(0.0)).collect();
        let w = fwhm(&Scan { x: xs, signal, baseline: 1.0 }).unwrap();
        assert!((w - 1.0).abs() < 1e-9);
        let wiggly = xs_signal_with_shoulder();
        assert!(matches!(fwhm(&wiggly), Err(Error::WidthUndefined(_))));
    }

    fn xs_signal_with_shoulder() -> Scan {
        let x = grid(-2.0, 2.0, 401);
        let signal = x
            .iter()
            .map(|&v: &f64| {
                let bump = if (v.abs() - 0.3).abs() < 0.05 { 0.2 } else { 0.0 };
                (1.0 - v.abs()).max(0.0) + bump
            })
            .collect();
        Scan { x, signal, baseline: 0.0 }
    }

    #[test]
    fn semiclassical_masses_sum_to_one() {
        let m = semiclassical_bin_masses(32);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((semiclassical_density(0.5).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!(matches!(semiclassical_density(0.0), Err(Error::Divergence(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn triangle_reconstructs_overlaps(ts in prop::collection::vec(-5e-13f64..5e-13, 1..6)) {
            let wp = WavepacketSet::default_photons();
            let t = gram_schmidt(&wp, &ts).unwrap();
            for (j, &tj) in t.times.iter().enumerate() {
                let norm: f64 = t.coefficients[j].iter().map(|z| z.norm_sqr()).sum();
                prop_assert!((norm - 1.0).abs() < 1e-12);
                for (k, &tk) in t.times.iter().enumerate() {
                    let g: Complex64 = (0..t.labels()).map(|l| t.c(j, l).conj() * t.c(k, l)).sum();
                    prop_assert!((g - wp.gaussian_overlap(tj, tk)).norm() < 1e-9);
                }
            }
        }

        #[test]
        fn two_mode_signal_normalised(r1 in 0usize..8, r2 in 0usize..8, w in 0.0f64..=1.0, seed in 0u64..100) {
            let u = haar_random_unitary(2, seed).unwrap();
            let p = two_mode_signal(r1, r2, &u, w).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|&v| v >= -1e-15));
        }
    }
}
