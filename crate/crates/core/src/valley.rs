//! Valley solutions in the scaled field `x = g q`, where the action reads
//! `S = g⁻² ∫ (ẋ²/2 + U(x)) dτ` with `U(x) = x²(1 - x)²/2 - κ x` and `κ = ε g²`.
//!
//! Actions reported here are `g² S`, so an instanton/anti-instanton pair at
//! infinite separation has action `1/3`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::model::{two_wells, ModelParams};

pub const DEFAULT_T: f64 = 40.0;
pub const DEFAULT_GRID: usize = 4001;

fn du(x: f64, kappa: f64) -> f64 {
    x * (1.0 - x) * (1.0 - 2.0 * x) - kappa
}

fn d2u(x: f64) -> f64 {
    1.0 - 6.0 * x + 6.0 * x * x
}

fn d3u(x: f64) -> f64 {
    -6.0 + 12.0 * x
}

fn u(x: f64, kappa: f64) -> f64 {
    0.5 * x * x * (1.0 - x) * (1.0 - x) - kappa * x
}

/// Minima of `U` in the scaled variable.
fn scaled_minima(kappa: f64) -> (f64, f64) {
    let newton = |mut x: f64| {
        for _ in 0..60 {
            let step = du(x, kappa) / d2u(x);
            x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        x
    };
    (newton(kappa), newton(1.0 + kappa))
}

/// Discrete action `Σ h (Δx/h)²/2 + Σ h U(x_i)` over a uniform grid, endpoints included.
pub fn discrete_action(x: &[f64], h: f64, kappa: f64) -> f64 {
    let kin: f64 = x.windows(2).map(|w| 0.5 * (w[1] - w[0]).powi(2) / h).sum();
    let n = x.len();
    let pot: f64 = x.iter().enumerate().map(|(i, v)| {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        w * h * u(*v, kappa)
    }).sum();
    kin + pot
}

/// `(1/h) ∂S/∂x_i` at interior sites, i.e. `-x'' + U'(x)` in central differences.
pub fn discrete_gradient(x: &[f64], h: f64, kappa: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 1..x.len() - 1 {
        g[i] = -(x[i + 1] - 2.0 * x[i] + x[i - 1]) / (h * h) + du(x[i], kappa);
    }
    g
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValleyConfig {
    pub tau: Vec<f64>,
    /// Field `q = x/g`.
    pub q: Vec<f64>,
    /// `-ẍ + U'(x)` in the scaled variable.
    pub f: Vec<f64>,
    pub lambda: f64,
    /// `g² S`.
    pub action: f64,
    /// Max-norm defect of the discrete equations.
    pub residual: f64,
    pub g: f64,
}

impl ValleyConfig {
    pub fn spacing(&self) -> f64 {
        self.tau[1] - self.tau[0]
    }

    pub fn x(&self) -> Vec<f64> {
        self.q.iter().map(|q| q * self.g).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValleySample {
    pub r: f64,
    pub s: f64,
    pub lambda: f64,
    /// Valley-equation defect relative to `‖F‖∞`.
    pub defect: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianSample {
    pub t: f64,
    /// `1/(dS/dR)`.
    pub big_f: f64,
    pub f: f64,
    /// Spread of `F` between the one-sided differences, a rough error estimate.
    pub spread: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ValleyProfile {
    /// Sorted by `R`.
    pub samples: Vec<ValleySample>,
    pub jacobian: Vec<JacobianSample>,
}

impl ValleyProfile {
    /// Whether `λ` is monotone in `R` over the sampled branch.
    pub fn lambda_monotone(&self) -> bool {
        let d: Vec<f64> = self.samples.windows(2).map(|w| w[1].lambda - w[0].lambda).collect();
        d.iter().all(|v| *v <= 1e-12) || d.iter().all(|v| *v >= -1e-12)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tolerance: 1e-9, max_iterations: 40 }
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration on a banded system.
fn newton<R, J>(z: &mut Vec<f64>, residual: R, jacobian: J, opts: NewtonOptions) -> Result<f64>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> BandMatrix,
{
    let mut r = residual(z);
    let mut norm = max_norm(&r);
    for _ in 0..opts.max_iterations {
        if !norm.is_finite() {
            break;
        }
        if norm < opts.tolerance {
            return Ok(norm);
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dz = jacobian(z).solve(&neg)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + t * b).collect();
            let rt = residual(&trial);
            let nt = max_norm(&rt);
            if nt.is_finite() && (nt < norm || t < 1e-3) {
                *z = trial;
                r = rt;
                norm = nt;
                break;
            }
            t *= 0.5;
        }
    }
    if norm < opts.tolerance {
        Ok(norm)
    } else if norm < 1e3 * opts.tolerance {
        Err(Error::GridTooCoarse(norm))
    } else {
        Err(Error::NoConvergence(format!("Newton residual {norm:e}")))
    }
}

/// Full-line system for the `λ = 0` valley-instanton.
///
/// Interior nodes `1..n-1` carry `(x, F, μ)`; the `μ` copies are tied together
/// by continuity rows and `x = 1/2` is pinned at the centre, which removes the
/// translation mode. `μ` is the finite-box remnant of `λ` and vanishes as `T → ∞`.
struct InstantonSystem {
    n: usize,
    h: f64,
    kappa: f64,
    left: f64,
    right: f64,
    mid: usize,
}

impl InstantonSystem {
    fn unpack(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; self.n];
        let mut f = vec![0.0; self.n];
        let mut mu = vec![0.0; self.n];
        x[0] = self.left;
        x[self.n - 1] = self.right;
        for i in 1..self.n - 1 {
            let b = 3 * (i - 1);
            x[i] = z[b];
            f[i] = z[b + 1];
            mu[i] = z[b + 2];
        }
        (x, f, mu)
    }

    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let (x, f, mu) = self.unpack(z);
        let h2 = self.h * self.h;
        let mut r = vec![0.0; z.len()];
        for i in 1..self.n - 1 {
            let b = 3 * (i - 1);
            r[b] = -(x[i + 1] - 2.0 * x[i] + x[i - 1]) / h2 + du(x[i], self.kappa) - f[i];
            r[b + 1] = -(f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2 + (d2u(x[i]) - mu[i]) * f[i];
            r[b + 2] = if i < self.mid {
                mu[i] - mu[i + 1]
            } else if i == self.mid {
                x[i] - 0.5
            } else {
                mu[i] - mu[i - 1]
            };
        }
        r
    }

    fn jacobian(&self, z: &[f64]) -> BandMatrix {
        let (x, f, mu) = self.unpack(z);
        let m = z.len();
        let h2 = self.h * self.h;
        let mut a = BandMatrix::zeros(m, 4, 4);
        for i in 1..self.n - 1 {
            let b = 3 * (i - 1);
            a.add(b, b, 2.0 / h2 + d2u(x[i]));
            a.add(b, b + 1, -1.0);
            a.add(b + 1, b, d3u(x[i]) * f[i]);
            a.add(b + 1, b + 1, 2.0 / h2 + d2u(x[i]) - mu[i]);
            a.add(b + 1, b + 2, -f[i]);
            if i > 1 {
                a.add(b, b - 3, -1.0 / h2);
                a.add(b + 1, b - 2, -1.0 / h2);
            }
            if i + 2 < self.n {
                a.add(b, b + 3, -1.0 / h2);
                a.add(b + 1, b + 4, -1.0 / h2);
            }
            if i < self.mid {
                a.add(b + 2, b + 2, 1.0);
                a.add(b + 2, b + 5, -1.0);
            } else if i == self.mid {
                a.add(b + 2, b, 1.0);
            } else {
                a.add(b + 2, b + 2, 1.0);
                a.add(b + 2, b - 1, -1.0);
            }
        }
        a
    }
}

/// `λ = 0` valley-instanton on `[-T/2, T/2]` with the crossing `x = 1/2` pinned at `τ = 0`.
pub fn solve_valley_instanton(params: &ModelParams, t_len: f64, grid_size: usize) -> Result<ValleyConfig> {
    solve_valley_instanton_with(params, t_len, grid_size, NewtonOptions::default())
}

pub fn solve_valley_instanton_with(params: &ModelParams, t_len: f64, grid_size: usize, opts: NewtonOptions) -> Result<ValleyConfig> {
    if !two_wells(params) {
        return Err(Error::DegeneratePotential(params.epsilon * params.g2()));
    }
    if grid_size < 11 || grid_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("grid size must be odd and ≥ 11, got {grid_size}")));
    }
    if !(t_len > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be positive, got {t_len}")));
    }
    let kappa = params.epsilon * params.g2();
    let (left, right) = scaled_minima(kappa);
    let n = grid_size;
    let h = t_len / (n - 1) as f64;
    let tau: Vec<f64> = (0..n).map(|i| -0.5 * t_len + i as f64 * h).collect();
    let mid = (n - 1) / 2;
    // tanh kink between the two minima
    let seed_x: Vec<f64> = tau.iter().map(|t| left + (right - left) * 0.5 * (1.0 + (0.5 * t).tanh())).collect();

    if kappa == 0.0 {
        // F ≡ 0: a plain boundary-value problem; the centre equation is replaced by the pin
        let mut z: Vec<f64> = seed_x[1..n - 1].to_vec();
        let res = |z: &[f64]| -> Vec<f64> {
            let mut x = vec![left];
            x.extend_from_slice(z);
            x.push(right);
            let g = discrete_gradient(&x, h, 0.0);
            let mut r = g[1..n - 1].to_vec();
            r[mid - 1] = x[mid] - 0.5;
            r
        };
        let jac = |z: &[f64]| -> BandMatrix {
            let m = z.len();
            let mut a = BandMatrix::zeros(m, 1, 1);
            for k in 0..m {
                if k == mid - 1 {
                    a.add(k, k, 1.0);
                    continue;
                }
                a.add(k, k, 2.0 / (h * h) + d2u(z[k]));
                if k > 0 {
                    a.add(k, k - 1, -1.0 / (h * h));
                }
                if k + 1 < m {
                    a.add(k, k + 1, -1.0 / (h * h));
                }
            }
            a
        };
        let residual = newton(&mut z, res, jac, opts)?;
        let mut x = vec![left];
        x.extend_from_slice(&z);
        x.push(right);
        return Ok(ValleyConfig {
            action: discrete_action(&x, h, 0.0),
            q: x.iter().map(|v| v / params.g).collect(),
            f: vec![0.0; n],
            lambda: 0.0,
            residual,
            tau,
            g: params.g,
        });
    }

    let sys = InstantonSystem { n, h, kappa, left, right, mid };
    // energy balance ∫F ẋ = U(right) - U(left) fixes the size of F ∝ ẋ
    let du_total = u(right, kappa) - u(left, kappa);
    let kink_norm = (right - left).powi(2) / 6.0;
    let c = du_total / kink_norm;
    let mut z = vec![0.0; 3 * (n - 2)];
    for i in 1..n - 1 {
        let b = 3 * (i - 1);
        let s = 1.0 / (0.5 * tau[i]).cosh();
        z[b] = seed_x[i];
        z[b + 1] = c * (right - left) * 0.25 * s * s;
    }
    let residual = newton(&mut z, |z| sys.residual(z), |z| sys.jacobian(z), opts)?;
    let (x, f, mu) = sys.unpack(&z);
    Ok(ValleyConfig {
        action: discrete_action(&x, h, kappa),
        q: x.iter().map(|v| v / params.g).collect(),
        f,
        lambda: mu[mid],
        residual,
        tau,
        g: params.g,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Coefficient of the resonant `τ e^{kτ}` term driven by `F`.
    pub slope: f64,
    pub rms: f64,
}

/// Fits `|x - x*| ≈ (a + b τ) e^{k τ}` on `τ ∈ window`, weighting relatively;
/// `k` is found by golden-section search with `(a, b)` projected out.
pub fn fit_tail(tau: &[f64], y: &[f64], window: (f64, f64)) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = tau
        .iter()
        .zip(y)
        .filter(|(t, v)| **t >= window.0 && **t <= window.1 && v.abs() > 0.0)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSamples { need: 5, have: pts.len() });
    }
    let centre = 0.5 * (window.0 + window.1);
    let project = |k: f64| -> (f64, f64, f64) {
        // weighted least squares for a, b with weights 1/|y|
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, v) in &pts {
            let e = (k * t).exp() / v.abs();
            let (p1, p2) = (e, (t - centre) * e);
            let w = v / v.abs();
            s11 += p1 * p1;
            s12 += p1 * p2;
            s22 += p2 * p2;
            r1 += p1 * w;
            r2 += p2 * w;
        }
        let det = s11 * s22 - s12 * s12;
        let a = (r1 * s22 - r2 * s12) / det;
        let b = (s11 * r2 - s12 * r1) / det;
        let ss: f64 = pts.iter().map(|(t, v)| ((a + b * (t - centre)) * (k * t).exp() / v.abs() - v / v.abs()).powi(2)).sum();
        (a - b * centre, b, ss)
    };
    // the objective is not unimodal: scan, then refine around the best bracket
    let sign = if window.0 + window.1 < 0.0 { 1.0 } else { -1.0 };
    let scan: Vec<f64> = (0..=340).map(|i| sign * (0.3 + 0.005 * i as f64)).collect();
    let best = (0..scan.len()).min_by(|a, b| project(scan[*a]).2.total_cmp(&project(scan[*b]).2)).unwrap();
    let (mut lo, mut hi) = (scan[best.saturating_sub(1)], scan[(best + 1).min(scan.len() - 1)]);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut fc, mut fd) = (project(c).2, project(d).2);
    while hi - lo > 1e-12 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = project(c).2;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = project(d).2;
        }
    }
    let k = 0.5 * (lo + hi);
    let (a, b, ss) = project(k);
    Ok(TailFit { exponent: k.abs(), amplitude: a, slope: b, rms: (ss / pts.len() as f64).sqrt() })
}

/// Left and right tail exponents of a valley-instanton on `τ ∈ ∓[9, 16]`.
pub fn tail_exponents(cfg: &ValleyConfig) -> Result<(TailFit, TailFit)> {
    let x = cfg.x();
    let (xl, xr) = (x[0], x[x.len() - 1]);
    let yl: Vec<f64> = x.iter().map(|v| v - xl).collect();
    let yr: Vec<f64> = x.iter().map(|v| xr - v).collect();
    Ok((fit_tail(&cfg.tau, &yl, (-16.0, -9.0))?, fit_tail(&cfg.tau, &yr, (9.0, 16.0))?))
}

/// Half-line system for the symmetric instanton/anti-instanton valley at `ε = 0`.
///
/// Nodes `0..m` on `τ ∈ [0, T/2)` carry `(x, F, λ)`; `τ = 0` is a symmetry point,
/// `τ = T/2` is the vacuum, and `x(0)` is pinned to the continuation parameter.
struct PairSystem {
    m: usize,
    h: f64,
    peak: f64,
}

impl PairSystem {
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let h2 = self.h * self.h;
        let xv = |j: usize| if j < self.m { z[3 * j] } else { 0.0 };
        let fv = |j: usize| if j < self.m { z[3 * j + 1] } else { 0.0 };
        let mut r = vec![0.0; z.len()];
        for j in 0..self.m {
            let (x, f, lam) = (z[3 * j], z[3 * j + 1], z[3 * j + 2]);
            let (xm, fm) = if j == 0 { (xv(1), fv(1)) } else { (xv(j - 1), fv(j - 1)) };
            r[3 * j] = -(xv(j + 1) - 2.0 * x + xm) / h2 + du(x, 0.0) - f;
            r[3 * j + 1] = -(fv(j + 1) - 2.0 * f + fm) / h2 + (d2u(x) - lam) * f;
            r[3 * j + 2] = if j == 0 { x - self.peak } else { lam - z[3 * (j - 1) + 2] };
        }
        r
    }

    fn jacobian(&self, z: &[f64]) -> BandMatrix {
        let h2 = self.h * self.h;
        let n = z.len();
        let mut a = BandMatrix::zeros(n, 4, 4);
        for j in 0..self.m {
            let b = 3 * j;
            let (x, f, lam) = (z[b], z[b + 1], z[b + 2]);
            a.add(b, b, 2.0 / h2 + d2u(x));
            a.add(b, b + 1, -1.0);
            a.add(b + 1, b, d3u(x) * f);
            a.add(b + 1, b + 1, 2.0 / h2 + d2u(x) - lam);
            a.add(b + 1, b + 2, -f);
            let up = if j == 0 { 2.0 } else { 1.0 };
            if j + 1 < self.m {
                a.add(b, b + 3, -up / h2);
                a.add(b + 1, b + 4, -up / h2);
            }
            if j > 0 {
                a.add(b, b - 3, -1.0 / h2);
                a.add(b + 1, b - 2, -1.0 / h2);
                a.add(b + 2, b + 2, 1.0);
                a.add(b + 2, b - 1, -1.0);
            } else {
                a.add(b + 2, b, 1.0);
            }
        }
        a
    }

    /// `(x, F)` on the full half grid including the vacuum node.
    fn fields(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut x: Vec<f64> = (0..self.m).map(|j| z[3 * j]).collect();
        let mut f: Vec<f64> = (0..self.m).map(|j| z[3 * j + 1]).collect();
        x.push(0.0);
        f.push(0.0);
        (x, f)
    }

    /// `g² S` of the symmetric pair.
    fn action(&self, z: &[f64]) -> f64 {
        let (x, _) = self.fields(z);
        // the τ = 0 node carries half weight on the half line
        let kin: f64 = x.windows(2).map(|w| 0.5 * (w[1] - w[0]).powi(2) / self.h).sum();
        let pot: f64 = x.iter().enumerate().map(|(j, v)| if j == 0 { 0.5 } else { 1.0 } * self.h * u(*v, 0.0)).sum();
        2.0 * (kin + pot)
    }

    /// Distance between the two crossings of `x = 1/2`, if they exist.
    fn crossing_distance(&self, z: &[f64]) -> Option<f64> {
        let (x, _) = self.fields(z);
        if x[0] < 0.5 {
            return None;
        }
        let j = x.windows(2).position(|w| w[0] >= 0.5 && w[1] < 0.5)?;
        let frac = (x[j] - 0.5) / (x[j] - x[j + 1]);
        Some(2.0 * (j as f64 + frac) * self.h)
    }

    fn defect(&self, z: &[f64]) -> f64 {
        let r = self.residual(z);
        let d = (0..self.m).map(|j| r[3 * j + 1].abs()).fold(0.0, f64::max);
        let fmax = (0..self.m).map(|j| z[3 * j + 1].abs()).fold(0.0, f64::max);
        if fmax > 0.0 { d / fmax } else { d }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    pub t_len: f64,
    pub grid_size: usize,
    pub n_samples: usize,
    /// Continuation range in `σ = -ln(1 - x(0))`.
    pub sigma_range: (f64, f64),
    /// Separation of the glued kink/anti-kink seed.
    pub seed_separation: f64,
    pub newton: NewtonOptions,
    /// Maximum number of step halvings before giving up.
    pub max_halvings: u32,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            t_len: DEFAULT_T,
            grid_size: DEFAULT_GRID,
            n_samples: 200,
            sigma_range: (0.005, 6.0),
            seed_separation: 10.0,
            newton: NewtonOptions::default(),
            max_halvings: 8,
        }
    }
}

/// Instanton/anti-instanton valley `S(R)` at `ε = 0`, with Jacobian samples attached.
pub fn trace_valley(params: &ModelParams, t_len: f64, grid_size: usize, n_samples: usize) -> Result<ValleyProfile> {
    trace_valley_with(params, TraceOptions { t_len, grid_size, n_samples, ..Default::default() })
}

pub fn trace_valley_with(params: &ModelParams, opts: TraceOptions) -> Result<ValleyProfile> {
    if params.epsilon != 0.0 {
        return Err(Error::InvalidParameter(format!("valley tracing needs ε = 0, got {}", params.epsilon)));
    }
    if opts.grid_size < 11 || opts.grid_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("grid size must be odd and ≥ 11, got {}", opts.grid_size)));
    }
    if opts.n_samples < 3 {
        return Err(Error::InsufficientSamples { need: 3, have: opts.n_samples });
    }
    let h = opts.t_len / (opts.grid_size - 1) as f64;
    let m = (opts.grid_size - 1) / 2;
    let (s_lo, s_hi) = opts.sigma_range;
    let targets: Vec<f64> = (0..opts.n_samples)
        .map(|k| s_lo + (s_hi - s_lo) * k as f64 / (opts.n_samples - 1) as f64)
        .collect();

    // glued kink and anti-kink
    let half_r = 0.5 * opts.seed_separation;
    let kink = |t: f64| 1.0 / (1.0 + (t - half_r).exp()) + 1.0 / (1.0 + (-t - half_r).exp()) - 1.0;
    let mut z = vec![0.0; 3 * m];
    for j in 0..m {
        z[3 * j] = kink(j as f64 * h);
    }
    {
        let sys = PairSystem { m, h, peak: z[0] };
        let (x, _) = sys.fields(&z);
        for j in 0..m {
            let xm = if j == 0 { x[1] } else { x[j - 1] };
            z[3 * j + 1] = -(x[j + 1] - 2.0 * x[j] + xm) / (h * h) + du(x[j], 0.0);
        }
    }
    let sigma_seed = -(1.0 - z[0]).ln();
    let start = targets
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - sigma_seed).abs().total_cmp(&(b.1 - sigma_seed).abs()))
        .map(|(i, _)| i)
        .unwrap();

    let solve_at = |z: &mut Vec<f64>, sigma: f64| -> Result<f64> {
        let sys = PairSystem { m, h, peak: 1.0 - (-sigma).exp() };
        newton(z, |v| sys.residual(v), |v| sys.jacobian(v), opts.newton)
    };
    let record = |z: &[f64], sigma: f64| -> ValleySample {
        let sys = PairSystem { m, h, peak: 1.0 - (-sigma).exp() };
        let s = sys.action(z);
        let r_small = (2.0 * s).sqrt();
        let r = sys.crossing_distance(z).map_or(r_small, |d| d.max(r_small));
        ValleySample { r, s, lambda: z[2], defect: sys.defect(z) }
    };

    let mut samples: Vec<ValleySample> = Vec::with_capacity(targets.len());
    solve_at(&mut z, targets[start]).map_err(|e| Error::ContinuationStalled {
        reason: format!("seed at σ = {:.3} failed: {e}", targets[start]),
        profile: Box::new(ValleyProfile::default()),
    })?;
    samples.push(record(&z, targets[start]));
    let anchor = z.clone();

    let mut stalled: Option<String> = None;
    for dir in [1isize, -1] {
        let mut cur = anchor.clone();
        let mut prev: Option<(Vec<f64>, f64)> = None;
        let mut sigma = targets[start];
        let mut k = start as isize + dir;
        while k >= 0 && (k as usize) < targets.len() {
            let target = targets[k as usize];
            match continue_to(&cur, prev.as_ref(), sigma, target, opts.max_halvings, &solve_at) {
                Ok(next) => {
                    samples.push(record(&next, target));
                    prev = Some((std::mem::replace(&mut cur, next), sigma));
                    sigma = target;
                }
                Err(e) => {
                    stalled = Some(format!("σ = {target:.4}: {e}"));
                    break;
                }
            }
            k += dir;
        }
        if stalled.is_some() {
            break;
        }
    }
    samples.sort_by(|a, b| a.r.total_cmp(&b.r));
    let mut profile = ValleyProfile { samples, jacobian: Vec::new() };
    if let Some(reason) = stalled {
        return Err(Error::ContinuationStalled { reason, profile: Box::new(profile) });
    }
    profile.jacobian = jacobian_profile(&profile)?;
    Ok(profile)
}

/// One continuation step with a secant predictor and step halving.
fn continue_to<S>(cur: &[f64], prev: Option<&(Vec<f64>, f64)>, sigma: f64, target: f64, halvings: u32, solve_at: &S) -> Result<Vec<f64>>
where
    S: Fn(&mut Vec<f64>, f64) -> Result<f64>,
{
    let predict = |to: f64| -> Vec<f64> {
        match prev {
            Some((p, sp)) if (sigma - sp).abs() > 0.0 => {
                let t = (to - sigma) / (sigma - sp);
                cur.iter().zip(p).map(|(c, q)| c + t * (c - q)).collect()
            }
            _ => cur.to_vec(),
        }
    };
    let mut z = predict(target);
    match solve_at(&mut z, target) {
        Ok(_) => Ok(z),
        Err(e) if halvings == 0 => Err(e),
        Err(_) => {
            let mid = 0.5 * (sigma + target);
            let zm = continue_to(cur, prev, sigma, mid, halvings - 1, solve_at)?;
            let pm = (cur.to_vec(), sigma);
            continue_to(&zm, Some(&pm), mid, target, halvings - 1, solve_at)
        }
    }
}

/// `F(t) = 1/(dS/dR)` and `f(t) = F √(2t) (1/3 - t)` from centred differences.
pub fn jacobian_profile(profile: &ValleyProfile) -> Result<Vec<JacobianSample>> {
    const NEED: usize = 100;
    let s = &profile.samples;
    if s.len() < NEED {
        return Err(Error::InsufficientSamples { need: NEED, have: s.len() });
    }
    let mut out = Vec::with_capacity(s.len() - 2);
    for i in 1..s.len() - 1 {
        let (r0, r1, r2) = (s[i - 1].r, s[i].r, s[i + 1].r);
        let (h0, h1) = (r1 - r0, r2 - r1);
        if h0 <= 0.0 || h1 <= 0.0 {
            continue;
        }
        // non-uniform three-point derivative
        let ds = -h1 / (h0 * (h0 + h1)) * s[i - 1].s + (h1 - h0) / (h0 * h1) * s[i].s + h0 / (h1 * (h0 + h1)) * s[i + 1].s;
        let t = s[i].s;
        let big_f = 1.0 / ds;
        let (back, fwd) = ((s[i].s - s[i - 1].s) / h0, (s[i + 1].s - s[i].s) / h1);
        let spread = (1.0 / back - 1.0 / fwd).abs();
        out.push(JacobianSample { t, big_f, f: big_f * (2.0 * t).sqrt() * (1.0 / 3.0 - t), spread });
    }
    Ok(out)
}

/// Closest approach to `t = 1/3` used for the upper endpoint; nearer samples are
/// dominated by the grid's offset of the asymptotic action and by the finite box.
pub const UPPER_GAP: f64 = 1e-4;

/// Endpoint values `f(0)` and `f(1/3)`, each extrapolated linearly in `t`
/// from the `k` usable samples nearest the end.
pub fn jacobian_endpoints(jac: &[JacobianSample], k: usize) -> Result<(f64, f64)> {
    let mut sorted: Vec<JacobianSample> = jac.iter().copied().filter(|p| p.t.is_finite() && p.f.is_finite()).collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let upper: Vec<JacobianSample> = sorted.iter().copied().filter(|p| p.t <= 1.0 / 3.0 - UPPER_GAP).collect();
    if k < 2 || sorted.len() < k || upper.len() < k {
        return Err(Error::InsufficientSamples { need: k.max(2), have: upper.len().min(sorted.len()) });
    }
    let line = |pts: &[JacobianSample], at: f64| -> f64 {
        let n = pts.len() as f64;
        let (mt, mf) = (pts.iter().map(|p| p.t).sum::<f64>() / n, pts.iter().map(|p| p.f).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.t - mt) * (p.f - mf)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.t - mt).powi(2)).sum();
        mf + sxy / sxx * (at - mt)
    };
    Ok((line(&sorted[..k], 0.0), line(&upper[upper.len() - k..], 1.0 / 3.0)))
}

/// Writes `valley_profile.csv` (R, S, lambda, precision) and `valley_jacobian.csv` (t, F, f, precision).
pub fn write_profile_csv(profile: &ValleyProfile, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("valley_profile.csv"))?;
    w.write_record(["R", "S", "lambda", "precision"])?;
    for s in &profile.samples {
        w.write_record([format!("{:.12e}", s.r), format!("{:.12e}", s.s), format!("{:.12e}", s.lambda), format!("{:.3e}", s.defect)])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("valley_jacobian.csv"))?;
    w.write_record(["t", "F", "f", "precision"])?;
    for j in &profile.jacobian {
        w.write_record([format!("{:.12e}", j.t), format!("{:.12e}", j.big_f), format!("{:.12e}", j.f), format!("{:.3e}", j.spread)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_instanton_action() {
        let p = ModelParams::from_g2(0.1, 0.0).unwrap();
        let c = solve_valley_instanton(&p, 40.0, 2001).unwrap();
        assert!((c.action - 1.0 / 6.0).abs() < 1e-4, "{}", c.action);
        assert!(c.f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 0.05;
        let x: Vec<f64> = (0..101).map(|i| 1.0 / (1.0 + (-(i as f64 - 50.0) * h).exp())).collect();
        let g = discrete_gradient(&x, h, 0.01);
        for i in [3usize, 17, 40, 50, 77, 96] {
            let d = 1e-6;
            let mut xp = x.clone();
            xp[i] += d;
            let mut xm = x.clone();
            xm[i] -= d;
            let fd = (discrete_action(&xp, h, 0.01) - discrete_action(&xm, h, 0.01)) / (2.0 * d * h);
            assert!((fd - g[i]).abs() < 1e-6, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn tail_fit_recovers_exponent() {
        let tau: Vec<f64> = (0..200).map(|i| -20.0 + 0.1 * i as f64).collect();
        let y: Vec<f64> = tau.iter().map(|t| (0.7 + 0.02 * t) * (0.97 * t).exp()).collect();
        let fit = fit_tail(&tau, &y, (-16.0, -9.0)).unwrap();
        assert!((fit.exponent - 0.97).abs() < 1e-6, "{}", fit.exponent);
    }
}
