//! Banded linear algebra: symmetric band eigenvalues in double-double and
//! a general banded LU solver in `f64`.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Symmetric band matrix stored by lower diagonals, with one spare diagonal
/// for the bulge created during reduction.
#[derive(Clone, Debug)]
pub struct SymBand {
    n: usize,
    kd: usize,
    /// `diag[d][i] = A[i + d][i]` for `d ≤ kd + 1`.
    diag: Vec<Vec<Dd>>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> SymBand {
        SymBand { n, kd, diag: (0..=kd + 1).map(|d| vec![Dd::ZERO; n.saturating_sub(d)]).collect() }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    pub fn get(&self, i: usize, j: usize) -> Dd {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        if d > self.kd + 1 {
            Dd::ZERO
        } else {
            self.diag[d][c]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Dd) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        assert!(d <= self.kd + 1, "write outside band at ({i}, {j})");
        self.diag[d][c] = v;
    }

    /// Largest `|A[i][j] - A[j][i]|` is zero by construction; this reports the
    /// largest element outside the nominal bandwidth instead.
    pub fn out_of_band_norm(&self) -> f64 {
        self.diag[self.kd + 1].iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Plane rotation `A ← G A Gᵀ` in rows/columns `(p, p+1)`.
    fn rotate(&mut self, p: usize, c: Dd, s: Dd) {
        let q = p + 1;
        let w = self.kd + 1;
        let lo = p.saturating_sub(w);
        let hi = (q + w).min(self.n - 1);
        for k in lo..=hi {
            if k == p || k == q {
                continue;
            }
            let (a, b) = (self.get(p, k), self.get(q, k));
            if a.hi == 0.0 && b.hi == 0.0 {
                continue;
            }
            let na = c * a + s * b;
            let nb = c * b - s * a;
            self.put_checked(p, k, na);
            self.put_checked(q, k, nb);
        }
        let (app, apq, aqq) = (self.get(p, p), self.get(p, q), self.get(q, q));
        let cc = c * c;
        let ss = s * s;
        let cs = c * s;
        let two_cs_apq = cs * apq * Dd::new(2.0);
        self.set(p, p, cc * app + two_cs_apq + ss * aqq);
        self.set(q, q, ss * app - two_cs_apq + cc * aqq);
        self.set(p, q, cs * (aqq - app) + (cc - ss) * apq);
    }

    fn put_checked(&mut self, i: usize, j: usize, v: Dd) {
        let d = i.abs_diff(j);
        if d > self.kd + 1 {
            debug_assert!(v.to_f64().abs() < 1e-25, "fill outside band");
            return;
        }
        self.set(i, j, v);
    }

    fn zero_with_rotation(&mut self, row: usize, col: usize) {
        let b = self.get(row, col);
        if b.hi == 0.0 {
            return;
        }
        let a = self.get(row - 1, col);
        let r = (a * a + b * b).sqrt();
        let (c, s) = (a / r, b / r);
        self.rotate(row - 1, c, s);
        self.set(row, col, Dd::ZERO);
    }

    /// Orthogonal reduction to tridiagonal form by bulge chasing.
    /// Returns `(diagonal, off-diagonal)`.
    pub fn tridiagonalize(mut self) -> (Vec<Dd>, Vec<Dd>) {
        let n = self.n;
        let kd = self.kd;
        if kd > 1 {
            for j in 0..n.saturating_sub(2) {
                for d in (2..=kd).rev() {
                    let row = j + d;
                    if row >= n {
                        continue;
                    }
                    self.zero_with_rotation(row, j);
                    // chase the bulge created at (row + kd, row - 1)
                    let mut r = row;
                    while r + kd < n {
                        let br = r + kd;
                        let bc = r - 1;
                        if self.get(br, bc).hi == 0.0 {
                            break;
                        }
                        self.zero_with_rotation(br, bc);
                        r = br;
                    }
                }
            }
        }
        let diag = (0..n).map(|i| self.get(i, i)).collect();
        let off = (0..n.saturating_sub(1)).map(|i| self.get(i + 1, i)).collect();
        (diag, off)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `sigma`.
pub fn sturm_count(diag: &[Dd], off2: &[Dd], sigma: Dd) -> usize {
    let tiny = Dd::new(1e-300);
    let mut count = 0;
    let mut q = diag[0] - sigma;
    if q.hi == 0.0 {
        q = tiny;
    }
    if q.hi < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - sigma - off2[i - 1] / q;
        if q.hi == 0.0 {
            q = tiny;
        }
        if q.hi < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_lowest(diag: &[Dd], off: &[Dd], k: usize) -> Vec<Dd> {
    let n = diag.len();
    let k = k.min(n);
    let off2: Vec<Dd> = off.iter().map(|e| *e * *e).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = off.get(i).map_or(0.0, |e| e.to_f64().abs()) + if i > 0 { off[i - 1].to_f64().abs() } else { 0.0 };
        lo = lo.min(diag[i].to_f64() - r);
        hi = hi.max(diag[i].to_f64() + r);
    }
    let (lo, hi) = (Dd::new(lo - 1e-8 * lo.abs() - 1e-30), Dd::new(hi + 1e-8 * hi.abs() + 1e-30));
    let half = Dd::new(0.5);
    (0..k)
        .map(|idx| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..400 {
                let m = (a + b) * half;
                if m <= a || m >= b || (b - a).to_f64() <= 1e-31 * m.to_f64().abs().max(1e-300) {
                    break;
                }
                if sturm_count(diag, &off2, m) > idx {
                    b = m;
                } else {
                    a = m;
                }
            }
            (a + b) * half
        })
        .collect()
}

/// General band matrix with `kl` sub- and `ku` super-diagonals, LU-factored with partial pivoting.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major storage of columns `i - kl ..= i + kl + ku` (extra room for pivoting fill).
    rows: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> BandMatrix {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, rows: vec![vec![0.0; width]; n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.rows[0].len() {
            None
        } else {
            Some(off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |o| self.rows[i][o])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.idx(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside band"));
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside declared band");
        self.rows[i][o] += v;
    }

    pub fn set_row_zero(&mut self, i: usize) {
        self.rows[i].iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b` in place of a copy; `A` is consumed by the factorization.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut x = b.to_vec();
        let kl = self.kl;
        let ucap = kl + self.ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let (mut piv, mut best) = (k, self.get(k, k).abs());
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::NoConvergence(format!("singular band matrix at column {k}")));
            }
            let jmax = (k + ucap).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    let (a, c) = (self.get(k, j), self.get(piv, j));
                    let (ok, op) = (self.idx(k, j).unwrap(), self.idx(piv, j).unwrap());
                    self.rows[k][ok] = c;
                    self.rows[piv][op] = a;
                }
                x.swap(k, piv);
            }
            let d = self.get(k, k);
            for i in k + 1..=last {
                let f = self.get(i, k) / d;
                if f == 0.0 {
                    continue;
                }
                let oi = self.idx(i, k).unwrap();
                self.rows[i][oi] = 0.0;
                for j in k + 1..=jmax {
                    let u = self.get(k, j);
                    if u != 0.0 {
                        let o = self.idx(i, j).unwrap();
                        self.rows[i][o] -= f * u;
                    }
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + ucap).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=jmax {
                s -= self.get(k, j) * x[j];
            }
            x[k] = s / self.get(k, k);
        }
        Ok(x)
    }
}
