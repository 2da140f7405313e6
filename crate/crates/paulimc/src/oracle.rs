//! Exact dense linear-algebra ground truth for the test suites: complex
//! Hermitian eigendecomposition (cyclic Jacobi), LU solves, matrix
//! exponentials and functions, Gibbs states, thermofield purifications and
//! resolvent Green's functions.
//!
//! Everything here is O(dim^3) or worse and deliberately self-contained;
//! it exists to check the samplers at 1-4 algorithmic qubits, not to scale.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            *m.at_mut(i, i) = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                *m.at_mut(r, c) = f(r, c);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &Complex64 {
        &self.data[r * self.dim + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale_mut(&mut self, c: Complex64) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> DenseMatrix {
        let mut out = self.clone();
        out.scale_mut(c);
        out
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let n = self.dim;
        Self::from_fn(n, |r, c| self.data[c * n + r].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.dim * other.dim;
        let mut out = Self::zeros(n);
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.data[r1 * self.dim + c1];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        *out.at_mut(r1 * other.dim + r2, c1 * other.dim + c2) =
                            a * other.data[r2 * other.dim + c2];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        let mut out = vec![ZERO; n];
        for r in 0..n {
            let mut acc = ZERO;
            for c in 0..n {
                acc += self.data[r * n + c] * v[c];
            }
            out[r] = acc;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max_{rc} |M_rc - conj(M_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.data[r * n + c] - self.data[c * n + r].conj()).norm());
            }
        }
        worst
    }

    /// Operator norm via eigendecomposition; requires Hermitian input.
    pub fn operator_norm_hermitian(&self) -> Result<f64> {
        let (w, _) = self.eigh()?;
        Ok(w.iter().fold(0.0f64, |m, &e| m.max(e.abs())))
    }

    /// Random Hermitian matrix on `n_qubits`, entries uniform in [-1, 1].
    pub fn random_hermitian(n_qubits: usize, seed: u64) -> DenseMatrix {
        let dim = 1usize << n_qubits;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            *m.at_mut(r, r) = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for c in (r + 1)..dim {
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                *m.at_mut(r, c) = v;
                *m.at_mut(c, r) = v.conj();
            }
        }
        m
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
    /// Returns ascending eigenvalues and a unitary `V` with `M = V D V†`.
    pub fn eigh(&self) -> Result<(Vec<f64>, DenseMatrix)> {
        let defect = self.hermiticity_defect();
        if defect > 1e-10 {
            return Err(Error::Validation(format!(
                "eigh requires a Hermitian matrix (defect {defect:.3e})"
            )));
        }
        let n = self.dim;
        let mut h = self.clone();
        // Symmetrize exactly so the sweeps preserve Hermiticity bit-for-bit.
        for r in 0..n {
            h.data[r * n + r] = Complex64::new(h.data[r * n + r].re, 0.0);
            for c in (r + 1)..n {
                let avg = 0.5 * (h.data[r * n + c] + h.data[c * n + r].conj());
                h.data[r * n + c] = avg;
                h.data[c * n + r] = avg.conj();
            }
        }
        let mut v = Self::identity(n);
        let scale = h.frobenius().max(1e-300);
        let tol = 1e-12 * scale;

        for _sweep in 0..200 {
            let mut off = 0.0;
            for r in 0..n {
                for c in (r + 1)..n {
                    off += h.data[r * n + c].norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= tol {
                let mut pairs: Vec<(f64, usize)> = (0..n)
                    .map(|i| (h.data[i * n + i].re, i))
                    .collect();
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let vs = Self::from_fn(n, |r, c| *v.at(r, pairs[c].1));
                return Ok((w, vs));
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut h, &mut v, p, q);
                }
            }
        }
        Err(Error::Construction(
            "Jacobi eigendecomposition failed to converge in 200 sweeps".into(),
        ))
    }

    /// `f(M)` for Hermitian `M` via eigendecomposition.
    pub fn func_hermitian(&self, f: impl Fn(f64) -> Complex64) -> Result<DenseMatrix> {
        let (w, v) = self.eigh()?;
        let n = self.dim;
        let vdag = v.adjoint();
        let mut scaled = v.clone();
        for c in 0..n {
            let fv = f(w[c]);
            for r in 0..n {
                *scaled.at_mut(r, c) *= fv;
            }
        }
        Ok(scaled.mul(&vdag))
    }

    /// `exp(i M t)` for Hermitian `M`.
    pub fn expm(&self, t: f64) -> Result<DenseMatrix> {
        self.func_hermitian(|e| Complex64::new(0.0, e * t).exp())
    }

    /// Solve `M x = b` by LU with partial pivoting (general complex `M`).
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} vs dim {n}",
                b.len()
            )));
        }
        let mut a = self.data.clone();
        let mut x: Vec<Complex64> = b.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, piv_norm) = (col..n)
                .map(|r| (r, a[perm[r] * n + col].norm()))
                .max_by(|u, w| u.1.partial_cmp(&w.1).unwrap())
                .unwrap();
            if piv_norm < 1e-300 {
                return Err(Error::Validation("singular matrix in solve".into()));
            }
            perm.swap(col, piv);
            let prow = perm[col];
            let pval = a[prow * n + col];
            for r in (col + 1)..n {
                let row = perm[r];
                let factor = a[row * n + col] / pval;
                if factor == ZERO {
                    continue;
                }
                a[row * n + col] = ZERO;
                for c in (col + 1)..n {
                    let sub = factor * a[prow * n + c];
                    a[row * n + c] -= sub;
                }
                let bsub = factor * x[prow];
                x[row] -= bsub;
            }
        }
        // Back substitution on the permuted system.
        let mut out = vec![ZERO; n];
        for col in (0..n).rev() {
            let row = perm[col];
            let mut acc = x[row];
            for c in (col + 1)..n {
                acc -= a[row * n + c] * out[c];
            }
            out[col] = acc / a[row * n + col];
        }
        Ok(out)
    }

    /// `||M^{-1}||` for Hermitian `M` (inverse of smallest |eigenvalue|).
    pub fn inverse_norm_hermitian(&self) -> Result<f64> {
        let (w, _) = self.eigh()?;
        let min_abs = w.iter().fold(f64::INFINITY, |m, &e| m.min(e.abs()));
        if min_abs < 1e-300 {
            return Err(Error::Validation("singular matrix".into()));
        }
        Ok(1.0 / min_abs)
    }
}

/// One complex Jacobi rotation zeroing H[p][q], accumulating into V.
fn jacobi_rotate(h: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let n = h.dim;
    let apq = h.data[p * n + q];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let phase = apq / b; // e^{i phi}
    let alpha = h.data[p * n + p].re;
    let delta = h.data[q * n + q].re;
    let tau = (delta - alpha) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = diag(1, e^{-i phi}) * [[c, s], [-s, c]] acting on columns (p, q).
    let j00 = Complex64::new(c, 0.0);
    let j01 = Complex64::new(s, 0.0);
    let j10 = -s * phase.conj();
    let j11 = c * phase.conj();

    // Right-multiply H and V by J on columns p, q.
    for r in 0..n {
        let hp = h.data[r * n + p];
        let hq = h.data[r * n + q];
        h.data[r * n + p] = j00 * hp + j10 * hq;
        h.data[r * n + q] = j01 * hp + j11 * hq;
        let vp = v.data[r * n + p];
        let vq = v.data[r * n + q];
        v.data[r * n + p] = j00 * vp + j10 * vq;
        v.data[r * n + q] = j01 * vp + j11 * vq;
    }
    // Left-multiply H by J† on rows p, q.
    for col in 0..n {
        let hp = h.data[p * n + col];
        let hq = h.data[q * n + col];
        h.data[p * n + col] = j00.conj() * hp + j10.conj() * hq;
        h.data[q * n + col] = j01.conj() * hp + j11.conj() * hq;
    }
    h.data[p * n + q] = ZERO;
    h.data[q * n + p] = ZERO;
    h.data[p * n + p] = Complex64::new(h.data[p * n + p].re, 0.0);
    h.data[q * n + q] = Complex64::new(h.data[q * n + q].re, 0.0);
}

/// Ground-state data of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct GroundInfo {
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub vector: Vec<Complex64>,
}

/// Lowest two eigenvalues and the ground eigenvector.
pub fn ground(h: &DenseMatrix) -> Result<GroundInfo> {
    let (w, v) = h.eigh()?;
    if w.len() < 2 {
        return Err(Error::Validation("need dimension >= 2".into()));
    }
    let vector = (0..h.dim()).map(|r| *v.at(r, 0)).collect();
    Ok(GroundInfo {
        e0: w[0],
        e1: w[1],
        gap: w[1] - w[0],
        vector,
    })
}

/// Normalized Gibbs state `e^{-beta H}/Z` and the partition function `Z`.
pub fn gibbs(h: &DenseMatrix, beta: f64) -> Result<(DenseMatrix, f64)> {
    let (w, v) = h.eigh()?;
    let z: f64 = w.iter().map(|&e| (-beta * e).exp()).sum();
    let n = h.dim();
    let vdag = v.adjoint();
    let mut scaled = v.clone();
    for c in 0..n {
        let fv = Complex64::new((-beta * w[c]).exp() / z, 0.0);
        for r in 0..n {
            *scaled.at_mut(r, c) *= fv;
        }
    }
    let mut rho = scaled.mul(&vdag);
    // Renormalize so the trace is exactly 1.
    let tr = rho.trace().re;
    rho.scale_mut(Complex64::new(1.0 / tr, 0.0));
    Ok((rho, z))
}

/// Thermofield-double purification of `e^{-beta H0}/Z0` on a doubled
/// register: `|Psi0> = Z0^{-1/2} Σ_i e^{-beta E_i/2} |E_i> ⊗ |E_i^*>`,
/// with subsystem A the most significant factor.
pub fn purify(h0: &DenseMatrix, beta: f64) -> Result<Vec<Complex64>> {
    let (w, v) = h0.eigh()?;
    let d = h0.dim();
    let z0: f64 = w.iter().map(|&e| (-beta * e).exp()).sum();
    let mut psi = vec![ZERO; d * d];
    for (i, &e) in w.iter().enumerate() {
        let amp = ((-beta * e).exp() / z0).sqrt();
        for r1 in 0..d {
            let a1 = *v.at(r1, i);
            if a1 == ZERO {
                continue;
            }
            for r2 in 0..d {
                let a2 = v.at(r2, i).conj();
                psi[r1 * d + r2] += amp * a1 * a2;
            }
        }
    }
    Ok(psi)
}

/// Partial trace over subsystem B (least significant factor) of |psi><psi|.
pub fn reduce_left(psi: &[Complex64], dim_a: usize, dim_b: usize) -> DenseMatrix {
    assert_eq!(psi.len(), dim_a * dim_b);
    let mut rho = DenseMatrix::zeros(dim_a);
    for ra in 0..dim_a {
        for ca in 0..dim_a {
            let mut acc = ZERO;
            for b in 0..dim_b {
                acc += psi[ra * dim_b + b] * psi[ca * dim_b + b].conj();
            }
            *rho.at_mut(ra, ca) = acc;
        }
    }
    rho
}

/// Dense Jordan-Wigner annihilation operator for mode `i` of `n_modes`:
/// `Z^{⊗(i-1)} ⊗ |0><1| ⊗ I^{⊗(n-i)}` with mode 0 the most significant
/// factor.
pub fn jw_annihilation_dense(n_modes: usize, i: usize) -> DenseMatrix {
    assert!(i < n_modes);
    let z = DenseMatrix::from_fn(2, |r, c| {
        if r == c {
            Complex64::new(if r == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            ZERO
        }
    });
    let lower = DenseMatrix::from_fn(2, |r, c| {
        if r == 0 && c == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    let mut m = DenseMatrix::identity(1);
    for q in 0..n_modes {
        let factor = if q < i {
            &z
        } else if q == i {
            &lower
        } else {
            &DenseMatrix::identity(2)
        };
        m = m.kron(factor);
    }
    m
}

/// Exact frequency-domain Green's function element via the resolvent:
/// `G+ = <E0| a_i (w - (H - E0) + i eta)^{-1} a_j† |E0>` and
/// `G- = <E0| a_i† (w + (H - E0) - i eta)^{-1} a_j |E0>`.
pub fn greens_exact(
    h: &DenseMatrix,
    omega: f64,
    eta: f64,
    e0: f64,
    i: usize,
    j: usize,
    plus_branch: bool,
) -> Result<Complex64> {
    let dim = h.dim();
    let n_modes = dim.trailing_zeros() as usize;
    let g = ground(h)?;
    let a_i = jw_annihilation_dense(n_modes, i);
    let a_j = jw_annihilation_dense(n_modes, j);
    let (left, rhs_op, gamma) = if plus_branch {
        // Gamma+ = (w + E0) I - H + i eta I
        let mut m = h.scaled(Complex64::new(-1.0, 0.0));
        for r in 0..dim {
            *m.at_mut(r, r) += Complex64::new(omega + e0, eta);
        }
        (a_i.adjoint(), a_j.adjoint(), m)
    } else {
        // Gamma- = (w - E0) I + H - i eta I
        let mut m = h.clone();
        for r in 0..dim {
            *m.at_mut(r, r) += Complex64::new(omega - e0, -eta);
        }
        (a_i, a_j, m)
    };
    let rhs = rhs_op.apply(&g.vector);
    let x = gamma.solve(&rhs)?;
    let w = left.apply(&g.vector);
    Ok(vec_inner(&w, &x))
}

/// `<a|b>` with the conjugation on `a`.
pub fn vec_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
