//! Spectra of `H = p²/2 + V(q)` by diagonalization in an oscillator basis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{tridiagonal_lowest, SymBand};
use crate::model::{find_minima, ModelParams};
use crate::mp::Real;

/// Basis sizes tried by [`eigenvalues_lowest`] start here and double up to [`BASIS_CAP`].
pub const BASIS_START: usize = 64;
pub const BASIS_CAP: usize = 2048;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub params: ModelParams,
    pub basis_size: usize,
    pub center: f64,
    pub scale: f64,
    pub eigenvalues: Vec<f64>,
    /// Change of each eigenvalue under the last basis doubling.
    pub convergence: Vec<f64>,
    /// The same eigenvalues carried in double-double.
    #[serde(skip)]
    pub extended: Vec<Dd>,
}

impl SpectrumResult {
    pub fn level(&self, k: usize) -> Option<Dd> {
        self.extended.get(k).copied()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    pub center: Option<f64>,
    pub scale: f64,
    pub start: usize,
    pub cap: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { center: None, scale: 1.0, start: BASIS_START, cap: BASIS_CAP }
    }
}

fn real_to_dd(r: &Real) -> Dd {
    let hi = r.to_f64();
    let lo = r.sub(&Real::from_f64(hi, r.prec())).to_f64();
    Dd { hi, lo }
}

/// Midpoint of the two minima, or `1/(2g)` when the potential has a single well.
pub fn default_center(params: &ModelParams) -> f64 {
    match find_minima(&ModelParams { exact_mode: false, ..params.clone() }) {
        Ok((l, r)) => 0.5 * (l.q_star_f64() + r.q_star_f64()),
        Err(_) => 0.5 / params.g,
    }
}

/// Coefficients of `V(center + y)` in powers of `y`, degree 0..=4.
fn shifted_potential(params: &ModelParams, center: f64) -> [Dd; 5] {
    let bits = 160;
    let g = params.g_real(bits);
    let eps = params.epsilon_real(bits);
    let half = Real::one(bits).div_i64(2);
    // V(q) = q²/2 - g q³ + g² q⁴/2 - ε g q
    let a = [
        Real::zero(bits),
        eps.mul(&g).neg(),
        half.clone(),
        g.neg(),
        g.mul(&g).mul(&half),
    ];
    let c = Real::from_f64(center, bits);
    let binom = [[1, 0, 0, 0, 0], [1, 1, 0, 0, 0], [1, 2, 1, 0, 0], [1, 3, 3, 1, 0], [1, 4, 6, 4, 1]];
    let mut out = [Dd::ZERO; 5];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = Real::zero(bits);
        for j in k..5 {
            let term = a[j].mul(&c.powi((j - k) as i64)).mul_i64(binom[j][k]);
            acc = acc.add(&term);
        }
        *slot = real_to_dd(&acc);
    }
    out
}

/// Banded matrix of `H` in the oscillator basis of frequency `scale` centred at `center`.
pub fn build_hamiltonian(params: &ModelParams, basis_size: usize, center: f64, scale: f64) -> Result<SymBand> {
    if basis_size < 4 {
        return Err(Error::InvalidParameter(format!("basis size {basis_size} < 4")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let n = basis_size;
    let coeffs = shifted_potential(params, center);
    let inv = (Dd::new(2.0) * Dd::new(scale)).sqrt();
    let sq: Vec<Dd> = (0..=n + 4).map(|i| Dd::from_i64(i as i64).sqrt() / inv).collect();
    let s4 = Dd::new(scale) / Dd::new(4.0);
    let mut h = SymBand::zeros(n, 4);
    for j in 0..n {
        // column j of Σ c_k y^k, computed by repeated application of y on e_j
        let mut v = vec![Dd::ZERO; 9];
        v[4] = Dd::ONE;
        let mut col = [Dd::ZERO; 9];
        for (k, c) in coeffs.iter().enumerate() {
            if k > 0 {
                let mut w = [Dd::ZERO; 9];
                for (t, val) in v.iter().enumerate() {
                    if val.hi == 0.0 {
                        continue;
                    }
                    let idx = j as isize + t as isize - 4;
                    if idx < 0 {
                        continue;
                    }
                    let i = idx as usize;
                    // y|i> = sqrt(i+1)|i+1> + sqrt(i)|i-1>, scaled by 1/sqrt(2s)
                    if t + 1 < 9 {
                        w[t + 1] += *val * sq[i + 1];
                    }
                    if t > 0 && i > 0 {
                        w[t - 1] += *val * sq[i];
                    }
                }
                v = w.to_vec();
            }
            for t in 0..9 {
                col[t] += *c * v[t];
            }
        }
        for (t, val) in col.iter().enumerate() {
            let i = j as isize + t as isize - 4;
            if i < j as isize || i >= n as isize {
                continue;
            }
            let i = i as usize;
            let mut entry = *val;
            if i == j {
                entry += s4 * Dd::from_i64(2 * j as i64 + 1);
            } else if i == j + 2 {
                entry -= s4 * Dd::from_i64(((j + 1) * (j + 2)) as i64).sqrt();
            }
            h.set(i, j, entry);
        }
    }
    Ok(h)
}

/// Lowest `k` eigenvalues of a fixed matrix.
pub fn band_lowest(matrix: SymBand, k: usize) -> Vec<Dd> {
    let (d, e) = matrix.tridiagonalize();
    tridiagonal_lowest(&d, &e, k)
}

/// Lowest `k` eigenvalues, doubling the basis until every one moves by less than `tolerance`.
pub fn eigenvalues_lowest(params: &ModelParams, k: usize, tolerance: f64, opts: SpectrumOptions) -> Result<SpectrumResult> {
    if k == 0 || k > 10 {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..=10")));
    }
    let center = opts.center.unwrap_or_else(|| default_center(params));
    let mut n = opts.start.max(4 * k).max(16);
    let mut prev = band_lowest(build_hamiltonian(params, n, center, opts.scale)?, k);
    loop {
        let next = n * 2;
        if next > opts.cap {
            let (idx, last, previous) = (k - 1, prev[k - 1].to_f64(), f64::NAN);
            return Err(Error::NotConverged { k: idx, last, previous });
        }
        let cur = band_lowest(build_hamiltonian(params, next, center, opts.scale)?, k);
        let conv: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (*a - *b).to_f64().abs()).collect();
        if conv.iter().all(|c| *c < tolerance) {
            return Ok(SpectrumResult {
                params: params.clone(),
                basis_size: next,
                center,
                scale: opts.scale,
                eigenvalues: cur.iter().map(|v| v.to_f64()).collect(),
                convergence: conv,
                extended: cur,
            });
        }
        if next * 2 > opts.cap {
            let (worst, _) = conv.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            return Err(Error::NotConverged { k: worst, last: cur[worst].to_f64(), previous: prev[worst].to_f64() });
        }
        prev = cur;
        n = next;
    }
}

/// `E_num[level] - zeroth`, evaluated in double-double before rounding.
pub fn delta_e(params: &ModelParams, level: usize, zeroth: f64, tolerance: f64) -> Result<f64> {
    let spec = eigenvalues_lowest(params, level + 1, tolerance, SpectrumOptions::default())?;
    Ok((spec.extended[level] - Dd::new(zeroth)).to_f64())
}

/// Independent spectra over a list of parameter points.
pub fn spectra(params: &[ModelParams], k: usize, tolerance: f64, exec: Execution) -> Vec<Result<SpectrumResult>> {
    exec.map(params, |p| eigenvalues_lowest(p, k, tolerance, SpectrumOptions::default()))
}

/// CSV with columns `g2, level, E, convergence`.
pub fn write_spectrum_csv(results: &[SpectrumResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["g2", "level", "E", "convergence"])?;
    for r in results {
        for (lvl, (e, c)) in r.eigenvalues.iter().zip(&r.convergence).enumerate() {
            w.write_record([format!("{:.17e}", r.params.g2()), lvl.to_string(), format!("{e:.17e}"), format!("{c:.3e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_limit_is_diagonal() {
        let p = ModelParams::new(1e-12, 0.0).unwrap();
        let h = build_hamiltonian(&p, 12, 0.0, 1.0).unwrap();
        for i in 0..12 {
            assert!((h.get(i, i).to_f64() - (i as f64 + 0.5)).abs() < 1e-9);
            for j in 0..i {
                assert!(h.get(i, j).to_f64().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reflection_symmetric_centres_agree() {
        let p = ModelParams::new(0.3, 0.0).unwrap();
        let tol = 1e-12;
        let a = eigenvalues_lowest(&p, 3, tol, SpectrumOptions { center: Some(0.0), ..Default::default() }).unwrap();
        let b = eigenvalues_lowest(&p, 3, tol, SpectrumOptions { center: Some(1.0 / 0.3), ..Default::default() }).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn right_well_free_limit() {
        let p = ModelParams::from_g2(1e-3, 2.0).unwrap();
        let r = eigenvalues_lowest(&p, 2, 1e-12, SpectrumOptions::default()).unwrap();
        assert!((r.eigenvalues[0] + 1.5).abs() < 1e-2);
        assert!((r.eigenvalues[1] + 0.5).abs() < 2e-2);
    }

    #[test]
    fn spectrum_is_variational() {
        let p = ModelParams::from_g2(0.05, 0.5).unwrap();
        let c = default_center(&p);
        let small = band_lowest(build_hamiltonian(&p, 32, c, 1.0).unwrap(), 3);
        let large = band_lowest(build_hamiltonian(&p, 64, c, 1.0).unwrap(), 3);
        for (s, l) in small.iter().zip(&large) {
            assert!(l.to_f64() <= s.to_f64() + 1e-14);
        }
    }
}
