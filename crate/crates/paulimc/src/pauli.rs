//! Exact symbolic algebra for n-qubit Pauli strings and real-weighted Pauli
//! sums.
//!
//! Strings are stored as two packed bitmasks (x-bits, z-bits) in the standard
//! symplectic representation, with the convention `P = i^{|x∧z|} X^x Z^z` so
//! that `(1,1)` is the literal Pauli `Y`.  Bit `j` of a mask addresses index
//! bit `j` of the statevector, i.e. qubit `n-1-j` in left-to-right axis order
//! (qubit 0 is the most significant factor of the tensor product).
//!
//! Products of strings are exact: phases accumulate in `{±1, ±i}` and the
//! result is again a single string.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::DenseMatrix;

/// Coefficients with magnitude at or below this are dropped from operators.
/// Below the double-precision noise floor of trace inner products at n <= 12.
pub const DEDUP_TOL: f64 = 1e-12;

/// Hard cap imposed by the single-word bitmask representation.
pub const MAX_QUBITS: usize = 64;

/// Single-qubit Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    fn bits(self) -> (u64, u64) {
        match self {
            Axis::I => (0, 0),
            Axis::X => (1, 0),
            Axis::Y => (1, 1),
            Axis::Z => (0, 1),
        }
    }

    fn from_bits(x: u64, z: u64) -> Self {
        match (x, z) {
            (0, 0) => Axis::I,
            (1, 0) => Axis::X,
            (1, 1) => Axis::Y,
            _ => Axis::Z,
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Axis::I),
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// A fourth root of unity, stored as the exponent of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    /// `i^k`.
    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "+1"),
            1 => write!(f, "+i"),
            2 => write!(f, "-1"),
            _ => write!(f, "-i"),
        }
    }
}

/// An n-qubit Pauli string (tensor product of I, X, Y, Z with no phase).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u32,
    // Ordered (z, x) so the derived Ord is the canonical term order.
    z: u64,
    x: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_QUBITS, "qubit count out of range");
        PauliString {
            n: n as u32,
            x: 0,
            z: 0,
        }
    }

    /// Build from raw symplectic masks (mask bit j addresses index bit j).
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n >= 1 && n <= MAX_QUBITS, "qubit count out of range");
        let keep = mask_low(n);
        PauliString {
            n: n as u32,
            x: x & keep,
            z: z & keep,
        }
    }

    /// Build from per-qubit axes, qubit 0 first (most significant factor).
    pub fn from_axes(axes: &[Axis]) -> Self {
        let n = axes.len();
        assert!(n >= 1 && n <= MAX_QUBITS, "qubit count out of range");
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, axis) in axes.iter().enumerate() {
            let (bx, bz) = axis.bits();
            let j = n - 1 - q;
            x |= bx << j;
            z |= bz << j;
        }
        PauliString {
            n: n as u32,
            x,
            z,
        }
    }

    /// Single-qubit axis embedded in an n-qubit identity.
    pub fn single(n: usize, qubit: usize, axis: Axis) -> Self {
        assert!(qubit < n);
        let mut axes = vec![Axis::I; n];
        axes[qubit] = axis;
        Self::from_axes(&axes)
    }

    /// Parse a string like "XZIY".
    pub fn parse(s: &str) -> Result<Self> {
        let axes: Option<Vec<Axis>> = s.chars().map(Axis::from_char).collect();
        let axes = axes.ok_or_else(|| {
            Error::Validation(format!("invalid axis character in `{s}` (expected I/X/Y/Z)"))
        })?;
        if axes.is_empty() || axes.len() > MAX_QUBITS {
            return Err(Error::Validation(format!(
                "axis string length {} out of range 1..={MAX_QUBITS}",
                axes.len()
            )));
        }
        Ok(Self::from_axes(&axes))
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn axis_at(&self, qubit: usize) -> Axis {
        assert!(qubit < self.n());
        let j = self.n() - 1 - qubit;
        Axis::from_bits((self.x >> j) & 1, (self.z >> j) & 1)
    }

    pub fn axes(&self) -> Vec<Axis> {
        (0..self.n()).map(|q| self.axis_at(q)).collect()
    }

    /// Number of Y factors; the string conjugates to `(-1)^{y_count}` itself.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Number of non-identity factors.
    pub fn support(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// True iff the strings commute (symplectic product is even).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s % 2 == 0
    }

    /// Exact product with accumulated phase in `{±1, ±i}`.
    pub fn multiply(&self, other: &PauliString) -> Result<PhasedPauli> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "pauli product on {} vs {} qubits",
                self.n, other.n
            )));
        }
        let x3 = self.x ^ other.x;
        let z3 = self.z ^ other.z;
        // i^{wp} X Z · i^{wq} X Z with Z^{zp} X^{xq} = (-1)^{zp·xq} X^{xq} Z^{zp}
        let e = i64::from(self.y_count()) + i64::from(other.y_count())
            + 2 * i64::from((self.z & other.x).count_ones())
            - i64::from((x3 & z3).count_ones());
        Ok(PhasedPauli {
            phase: Phase::from_exponent(e),
            string: PauliString {
                n: self.n,
                x: x3,
                z: z3,
            },
        })
    }

    /// Action on a basis state: `P|i> = phase * |i ^ x_mask>`.
    /// Returns the phase exponent of i for basis index `i`.
    #[inline]
    pub fn basis_phase_exponent(&self, index: u64) -> u8 {
        let yk = self.y_count() as u64;
        let zi = (self.z & index).count_ones() as u64;
        ((yk + 2 * zi) % 4) as u8
    }

    /// Exact matrix-vector product, O(2^n).
    pub fn apply_to_state(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n();
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "state length {} vs dim {dim}",
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..dim {
            let j = i ^ self.x as usize;
            let ph = Phase(self.basis_phase_exponent(i as u64)).to_complex();
            out[j] = ph * v[i];
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n() {
            write!(f, "{}", self.axis_at(q).to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// A Pauli string together with a phase in `{±1, ±i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhasedPauli {
    pub phase: Phase,
    pub string: PauliString,
}

impl PhasedPauli {
    pub fn identity(n: usize) -> Self {
        PhasedPauli {
            phase: Phase::ONE,
            string: PauliString::identity(n),
        }
    }

    pub fn multiply(&self, other: &PhasedPauli) -> Result<PhasedPauli> {
        let mut p = self.string.multiply(&other.string)?;
        p.phase = p.phase.mul(self.phase).mul(other.phase);
        Ok(p)
    }

    pub fn adjoint(&self) -> PhasedPauli {
        // Strings are Hermitian; only the phase conjugates.
        PhasedPauli {
            phase: self.phase.conj(),
            string: self.string,
        }
    }

    pub fn apply_to_state(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = self.string.apply_to_state(v)?;
        let ph = self.phase.to_complex();
        for a in &mut out {
            *a *= ph;
        }
        Ok(out)
    }
}

/// A Hermitian operator as a real-weighted sum of Pauli strings,
/// `A = Σ a_ℓ P_ℓ` with `a_ℓ` real and no stored zero or duplicate terms.
///
/// Terms are kept in canonical order (lexicographic on z-bits then x-bits)
/// so iteration and serialization are deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOperator {
    n: usize,
    terms: Vec<(PauliString, f64)>,
}

impl PauliOperator {
    /// Sum duplicate strings, drop magnitudes at or below [`DEDUP_TOL`].
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Validation(format!(
                "qubit count {n} out of range 1..={MAX_QUBITS}"
            )));
        }
        let mut map: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (s, a) in terms {
            if s.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "term on {} qubits in {n}-qubit operator",
                    s.n()
                )));
            }
            if !a.is_finite() {
                return Err(Error::Validation("non-finite coefficient".into()));
            }
            *map.entry(s).or_insert(0.0) += a;
        }
        let terms: Vec<_> = map.into_iter().filter(|(_, a)| a.abs() > DEDUP_TOL).collect();
        Ok(PauliOperator { n, terms })
    }

    pub fn zero(n: usize) -> Self {
        PauliOperator { n, terms: vec![] }
    }

    pub fn identity_scaled(n: usize, c: f64) -> Self {
        Self::from_terms(n, [(PauliString::identity(n), c)]).expect("identity term")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    /// Pauli weight `λ = Σ |a_ℓ|`.
    pub fn weight(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.abs()).sum()
    }

    /// Pauli sparsity `L` (number of stored terms).
    pub fn sparsity(&self) -> usize {
        self.terms.len()
    }

    /// `A + c*B`.
    pub fn add_scaled(&self, other: &PauliOperator, c: f64) -> Result<PauliOperator> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "operator sum on {} vs {} qubits",
                self.n, other.n
            )));
        }
        Self::from_terms(
            self.n,
            self.terms
                .iter()
                .copied()
                .chain(other.terms.iter().map(|&(s, a)| (s, c * a))),
        )
    }

    pub fn scale(&self, c: f64) -> PauliOperator {
        let terms = self
            .terms
            .iter()
            .map(|&(s, a)| (s, c * a))
            .filter(|(_, a)| a.abs() > DEDUP_TOL)
            .collect();
        PauliOperator { n: self.n, terms }
    }

    /// Entrywise complex conjugate in the computational basis: flips the sign
    /// of every term with an odd number of Y factors.
    pub fn conjugate(&self) -> PauliOperator {
        let terms = self
            .terms
            .iter()
            .map(|&(s, a)| (s, if s.y_count() % 2 == 1 { -a } else { a }))
            .collect();
        PauliOperator { n: self.n, terms }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &PauliOperator) -> Result<PauliOperator> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(Error::Validation("kron exceeds max qubits".into()));
        }
        let shift = other.n;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(p, a) in &self.terms {
            for &(q, b) in &other.terms {
                let s = PauliString {
                    n: n as u32,
                    x: (p.x << shift) | q.x,
                    z: (p.z << shift) | q.z,
                };
                terms.push((s, a * b));
            }
        }
        Self::from_terms(n, terms)
    }

    pub fn apply_to_state(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n;
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "state length {} vs dim {dim}",
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for &(s, a) in &self.terms {
            for i in 0..dim {
                let j = i ^ s.x as usize;
                let ph = Phase(s.basis_phase_exponent(i as u64)).to_complex();
                out[j] += a * ph * v[i];
            }
        }
        Ok(out)
    }

    /// Dense reconstruction `Σ a_ℓ P_ℓ`.
    pub fn to_dense(&self) -> DenseMatrix {
        let dim = 1usize << self.n;
        let mut m = DenseMatrix::zeros(dim);
        for &(s, a) in &self.terms {
            for i in 0..dim {
                let j = i ^ s.x as usize;
                let ph = Phase(s.basis_phase_exponent(i as u64)).to_complex();
                // column i, row j of P gets phase(i)
                *m.at_mut(j, i) += a * ph;
            }
        }
        m
    }

    /// Serialize in the one-term-per-line text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(s, a) in &self.terms {
            out.push_str(&format!("{a} {s}\n"));
        }
        out
    }

    /// Parse the text format: `<signed decimal coefficient> <axes over IXYZ>`
    /// per line, `#` comments and blank lines ignored, duplicates rejected.
    pub fn parse_text(input: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut seen: BTreeMap<PauliString, usize> = BTreeMap::new();
        let mut terms = Vec::new();
        for (idx, raw) in input.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let mut parts = line.split_whitespace();
            let coeff = parts
                .next()
                .ok_or(Error::Parse {
                    line: lineno,
                    msg: "missing coefficient".into(),
                })?
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("bad coefficient: {e}"),
                })?;
            let axes = parts.next().ok_or(Error::Parse {
                line: lineno,
                msg: "missing axes string".into(),
            })?;
            if parts.next().is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "trailing tokens".into(),
                });
            }
            let s = PauliString::parse(axes).map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            match n {
                None => n = Some(s.n()),
                Some(n0) if n0 != s.n() => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("axes length {} differs from earlier {}", s.n(), n0),
                    });
                }
                _ => {}
            }
            if let Some(first) = seen.insert(s, lineno) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate string {s} (first at line {first})"),
                });
            }
            terms.push((s, coeff));
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "no terms".into(),
        })?;
        Self::from_terms(n, terms)
    }
}

/// Pauli-basis decomposition of a dense Hermitian matrix,
/// `a_ℓ = Tr[M P_ℓ] / 2^n`, dropping `|a_ℓ| <= tol`.
///
/// Runs by recursive 2x2 block splitting in O(n 4^n) rather than one trace
/// per string.
pub fn decompose_dense(m: &DenseMatrix, tol: f64) -> Result<PauliOperator> {
    let dim = m.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Validation(format!(
            "dimension {dim} is not a power of two >= 2"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 12 {
        return Err(Error::Validation(format!(
            "dense decomposition limited to n <= 12 qubits, got {n}"
        )));
    }
    let herm_defect = m.hermiticity_defect();
    if herm_defect > tol.max(1e-10) {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian within tolerance: defect {herm_defect:.3e}"
        )));
    }

    // coeffs[axes-index] with base-4 digit per qubit; recursion peels qubit 0.
    let data: Vec<Complex64> = (0..dim * dim).map(|k| *m.at(k / dim, k % dim)).collect();
    let coeffs = split_blocks(&data, dim);

    let mut terms = Vec::new();
    for (idx, c) in coeffs.iter().enumerate() {
        let a = c.re;
        if a.abs() > tol.max(DEDUP_TOL) {
            // idx encodes axes base-4, qubit 0 in the highest digit
            let mut axes = vec![Axis::I; n];
            let mut rem = idx;
            for q in (0..n).rev() {
                axes[q] = match rem % 4 {
                    0 => Axis::I,
                    1 => Axis::X,
                    2 => Axis::Y,
                    _ => Axis::Z,
                };
                rem /= 4;
            }
            terms.push((PauliString::from_axes(&axes), a));
        }
    }
    PauliOperator::from_terms(n, terms)
}

/// One level of the block recursion: M = I⊗MI + X⊗MX + Y⊗MY + Z⊗MZ with
/// MI=(A+D)/2, MX=(B+C)/2, MY=i(B-C)/2, MZ=(A-D)/2 for M=[[A,B],[C,D]].
fn split_blocks(data: &[Complex64], dim: usize) -> Vec<Complex64> {
    if dim == 1 {
        return vec![data[0]];
    }
    let h = dim / 2;
    let idx = |r: usize, c: usize| r * dim + c;
    let mut blocks = vec![vec![Complex64::new(0.0, 0.0); h * h]; 4];
    let i_mul = Complex64::new(0.0, 1.0);
    for r in 0..h {
        for c in 0..h {
            let a = data[idx(r, c)];
            let b = data[idx(r, c + h)];
            let cc = data[idx(r + h, c)];
            let d = data[idx(r + h, c + h)];
            blocks[0][r * h + c] = 0.5 * (a + d);
            blocks[1][r * h + c] = 0.5 * (b + cc);
            blocks[2][r * h + c] = 0.5 * i_mul * (b - cc);
            blocks[3][r * h + c] = 0.5 * (a - d);
        }
    }
    let mut out = Vec::with_capacity(4 * h * h);
    for block in &blocks {
        out.extend(split_blocks(block, h));
    }
    out
}

/// Hermitian embedding of `B = H1 + i H2` into `A = X⊗H1 - Y⊗H2` on one
/// extra qubit, so that the top-right block of `A` equals `B` and
/// `A^{-1} (b, 0)^T = (0, B^{-1} b)^T`.
pub fn hermitian_embed(h1: &PauliOperator, h2: &PauliOperator) -> Result<PauliOperator> {
    if h1.n() != h2.n() {
        return Err(Error::DimensionMismatch(format!(
            "embedding blocks on {} vs {} qubits",
            h1.n(),
            h2.n()
        )));
    }
    let x = PauliOperator::from_terms(1, [(PauliString::single(1, 0, Axis::X), 1.0)])?;
    let y = PauliOperator::from_terms(1, [(PauliString::single(1, 0, Axis::Y), 1.0)])?;
    x.kron(h1)?.add_scaled(&y.kron(h2)?, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DenseMatrix;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_products() {
        let x = PauliString::parse("X").unwrap();
        let y = PauliString::parse("Y").unwrap();
        let z = PauliString::parse("Z").unwrap();

        let xy = x.multiply(&y).unwrap();
        assert_eq!(xy.phase, Phase::I);
        assert_eq!(xy.string, z);

        let zz = z.multiply(&z).unwrap();
        assert_eq!(zz.phase, Phase::ONE);
        assert!(zz.string.is_identity());

        let yx = y.multiply(&x).unwrap();
        assert_eq!(yx.phase, Phase::MINUS_I);
        assert_eq!(yx.string, z);
    }

    #[test]
    fn self_inverse() {
        for s in ["XZIY", "YYYY", "IZXI"] {
            let p = PauliString::parse(s).unwrap();
            let sq = p.multiply(&p).unwrap();
            assert_eq!(sq.phase, Phase::ONE);
            assert!(sq.string.is_identity());
        }
    }

    #[test]
    fn two_qubit_product_xz_zx() {
        // XZ * ZX = (X*Z) (x) (Z*X) = (-iY) (x) (iY) = YY
        let a = PauliString::parse("XZ").unwrap();
        let b = PauliString::parse("ZX").unwrap();
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.phase, Phase::ONE);
        assert_eq!(p.string, PauliString::parse("YY").unwrap());
    }

    /// Exhaustive 2-qubit check of products against dense 4x4 matrices.
    #[test]
    fn products_match_dense_exhaustively() {
        let axes = [Axis::I, Axis::X, Axis::Y, Axis::Z];
        let mut strings = Vec::new();
        for &a0 in &axes {
            for &a1 in &axes {
                strings.push(PauliString::from_axes(&[a0, a1]));
            }
        }
        for p in &strings {
            for q in &strings {
                let prod = p.multiply(q).unwrap();
                let dense_p = dense_of_string(p);
                let dense_q = dense_of_string(q);
                let lhs = dense_p.mul(&dense_q);
                let mut rhs = dense_of_string(&prod.string);
                rhs.scale_mut(prod.phase.to_complex());
                assert!(lhs.max_abs_diff(&rhs) < 1e-14, "{p} * {q}");
            }
        }
    }

    /// Associativity with exact phases on random triples.
    #[test]
    fn product_associative() {
        let axes = [Axis::I, Axis::X, Axis::Y, Axis::Z];
        let mut strings = Vec::new();
        for &a0 in &axes {
            for &a1 in &axes {
                strings.push(PhasedPauli {
                    phase: Phase::ONE,
                    string: PauliString::from_axes(&[a0, a1]),
                });
            }
        }
        for p in &strings {
            for q in &strings {
                for r in strings.iter().step_by(3) {
                    let ab_c = p.multiply(q).unwrap().multiply(r).unwrap();
                    let a_bc = p.multiply(&q.multiply(r).unwrap()).unwrap();
                    assert_eq!(ab_c, a_bc);
                }
            }
        }
    }

    fn dense_of_string(s: &PauliString) -> DenseMatrix {
        PauliOperator::from_terms(s.n(), [(*s, 1.0)])
            .unwrap()
            .to_dense()
    }

    #[test]
    fn decompose_identity_and_z() {
        let id = DenseMatrix::identity(2);
        let op = decompose_dense(&id, 1e-12).unwrap();
        assert_eq!(op.sparsity(), 1);
        assert_eq!(op.terms()[0].0, PauliString::identity(1));
        assert!((op.terms()[0].1 - 1.0).abs() < 1e-14);
        assert!((op.weight() - 1.0).abs() < 1e-14);

        let mut zm = DenseMatrix::zeros(2);
        *zm.at_mut(0, 0) = c(1.0, 0.0);
        *zm.at_mut(1, 1) = c(-1.0, 0.0);
        let op = decompose_dense(&zm, 1e-12).unwrap();
        assert_eq!(op.sparsity(), 1);
        assert_eq!(op.terms()[0].0, PauliString::parse("Z").unwrap());
        assert!((op.terms()[0].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_x_plus_i_mix() {
        // 0.5*X + 0.3*I
        let mut m = DenseMatrix::zeros(2);
        *m.at_mut(0, 0) = c(0.3, 0.0);
        *m.at_mut(1, 1) = c(0.3, 0.0);
        *m.at_mut(0, 1) = c(0.5, 0.0);
        *m.at_mut(1, 0) = c(0.5, 0.0);
        let op = decompose_dense(&m, 1e-12).unwrap();
        assert_eq!(op.sparsity(), 2);
        assert!((op.weight() - 0.8).abs() < 1e-14);
        let x = PauliString::parse("X").unwrap();
        let coeff_x = op.terms().iter().find(|(s, _)| *s == x).unwrap().1;
        assert!((coeff_x - 0.5).abs() < 1e-14);
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let mut m = DenseMatrix::zeros(2);
        *m.at_mut(0, 1) = c(1.0, 0.0);
        assert!(matches!(
            decompose_dense(&m, 1e-12),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn embed_hermitian_block() {
        // B Hermitian (H2 = 0) -> A = X (x) B with equal weight.
        let h1 = PauliOperator::parse_text("0.7 Z\n0.2 X\n").unwrap();
        let h2 = PauliOperator::zero(1);
        let a = hermitian_embed(&h1, &h2).unwrap();
        assert_eq!(a.n(), 2);
        assert!((a.weight() - h1.weight()).abs() < 1e-14);
        let dense = a.to_dense();
        let b = h1.to_dense();
        for r in 0..2 {
            for col in 0..2 {
                assert!((dense.at(r, col + 2) - b.at(r, col)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn embed_weight_is_additive() {
        let h1 = PauliOperator::parse_text("0.7 Z\n").unwrap();
        let h2 = PauliOperator::parse_text("0.4 X\n-0.1 Y\n").unwrap();
        let a = hermitian_embed(&h1, &h2).unwrap();
        // X(x)P and Y(x)Q strings are disjoint, so weights add exactly.
        assert!((a.weight() - (h1.weight() + h2.weight())).abs() < 1e-14);
        assert!(a.weight() <= 2.0 * (h1.weight() + h2.weight()) + 1e-14);
    }

    #[test]
    fn apply_to_state_basics() {
        let z = PauliString::parse("Z").unwrap();
        let v0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(z.apply_to_state(&v0).unwrap(), v0);

        let x = PauliString::parse("X").unwrap();
        let out = x.apply_to_state(&v0).unwrap();
        assert!((out[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(out[0].norm() < 1e-15);

        // (0.5X + 0.3I)|0> = 0.3|0> + 0.5|1>
        let op = PauliOperator::parse_text("0.5 X\n0.3 I\n").unwrap();
        let out = op.apply_to_state(&v0).unwrap();
        assert!((out[0] - c(0.3, 0.0)).norm() < 1e-15);
        assert!((out[1] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn text_roundtrip_and_duplicate_rejection() {
        let text = "# comment line\n-0.5 XZIY\n\n0.25 IIIZ # trailing comment\n";
        let op = PauliOperator::parse_text(text).unwrap();
        assert_eq!(op.n(), 4);
        assert_eq!(op.sparsity(), 2);
        let echoed = PauliOperator::parse_text(&op.to_text()).unwrap();
        assert_eq!(op, echoed);

        let dup = "0.5 XZ\n0.25 XZ\n";
        assert!(matches!(
            PauliOperator::parse_text(dup),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = PauliString::parse("X").unwrap();
        let b = PauliString::parse("XX").unwrap();
        assert!(matches!(
            a.multiply(&b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    proptest! {
        /// decompose_dense then reconstruct is the identity (up to tol) on
        /// random Hermitian matrices, n <= 3.
        #[test]
        fn decompose_roundtrip(seed in 0u64..200, n in 1usize..4) {
            let m = DenseMatrix::random_hermitian(n, seed);
            let op = decompose_dense(&m, 1e-12).unwrap();
            let back = op.to_dense();
            prop_assert!(m.max_abs_diff(&back) < 1e-10);
        }

        /// Every coefficient survives within DEDUP_TOL of the trace formula.
        #[test]
        fn weight_and_sparsity_consistent(seed in 0u64..50) {
            let m = DenseMatrix::random_hermitian(2, seed);
            let op = decompose_dense(&m, 1e-12).unwrap();
            let w: f64 = op.terms().iter().map(|(_, a)| a.abs()).sum();
            prop_assert!((op.weight() - w).abs() < 1e-12);
            prop_assert_eq!(op.sparsity(), op.terms().len());
        }
    }
}
