//! Shot-faithful simulation of the two one-ancilla circuits behind every
//! estimator: the Hadamard test (ancilla-Z expectation gives Re or Im of
//! `<phi|U|psi>`) and the controlled/anticontrolled pair circuit measuring
//! `X ⊗ O` (gives the symmetrized cross term
//! `(<psi|U†OV|psi> + <psi|V†OU|psi>)/2`).
//!
//! The `log N + 1` qubit circuit is simulated exactly: with the ancilla in
//! `(|0>|s0> + |1>|s1>)/sqrt(2)`, controlled gates act on the `s1` half and
//! anticontrolled gates on the `s0` half, each half a contiguous
//! `2^n`-amplitude block.  Measurement draws from the exact ancilla-reduced
//! Born probabilities; there is no trajectory noise model.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{PauliOperator, PauliString, PhasedPauli};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which part of the overlap a Hadamard-test run estimates (`G = 1` for the
/// real part, `G = S†` for the imaginary part).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Real,
    Imaginary,
}

/// One element of a sampled gate string.
#[derive(Clone, Debug)]
pub enum GateElement {
    /// A multi-qubit Pauli product gate.
    Pauli(PauliString),
    /// `exp(i * angle * axis) = cos(angle) 1 + i sin(angle) axis`.
    Rotation { angle: f64, axis: PauliString },
}

/// One sampled unitary: alternating Pauli-product gates and single Pauli
/// rotations, with a unit-modulus global phase.
#[derive(Clone, Debug)]
pub struct GateString {
    n: usize,
    phase: Complex64,
    elements: Vec<GateElement>,
}

impl GateString {
    pub fn identity(n: usize) -> Self {
        GateString {
            n,
            phase: ONE,
            elements: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn elements(&self) -> &[GateElement] {
        &self.elements
    }

    pub fn mul_phase(&mut self, c: Complex64) {
        self.phase *= c;
    }

    /// Fold a phased Pauli into the string (phase goes to the global phase;
    /// an identity string contributes no element).
    pub fn push_phased_pauli(&mut self, p: &PhasedPauli) {
        debug_assert_eq!(p.string.n(), self.n);
        self.phase *= p.phase.to_complex();
        if !p.string.is_identity() {
            self.elements.push(GateElement::Pauli(p.string));
        }
    }

    pub fn push_pauli(&mut self, s: PauliString) {
        debug_assert_eq!(s.n(), self.n);
        self.elements.push(GateElement::Pauli(s));
    }

    pub fn push_rotation(&mut self, angle: f64, axis: PauliString) {
        debug_assert_eq!(axis.n(), self.n);
        self.elements.push(GateElement::Rotation { angle, axis });
    }

    pub fn rotation_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, GateElement::Rotation { .. }))
            .count()
    }

    pub fn pauli_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, GateElement::Pauli(_)))
            .count()
    }

    /// Apply `self` first, then `other`.
    pub fn then(&self, other: &GateString) -> Result<GateString> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "gate string composition on {} vs {} qubits",
                self.n, other.n
            )));
        }
        let mut out = self.clone();
        out.phase *= other.phase;
        out.elements.extend(other.elements.iter().cloned());
        Ok(out)
    }

    /// The inverse unitary: reversed elements, negated rotation angles,
    /// conjugated phase (Pauli gates are self-inverse).
    pub fn adjoint(&self) -> GateString {
        let elements = self
            .elements
            .iter()
            .rev()
            .map(|e| match e {
                GateElement::Pauli(s) => GateElement::Pauli(*s),
                GateElement::Rotation { angle, axis } => GateElement::Rotation {
                    angle: -angle,
                    axis: *axis,
                },
            })
            .collect();
        GateString {
            n: self.n,
            phase: self.phase.conj(),
            elements,
        }
    }

    pub fn apply_to(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), 1usize << self.n);
        for e in &self.elements {
            match e {
                GateElement::Pauli(s) => apply_pauli(v, s),
                GateElement::Rotation { angle, axis } => apply_rotation(v, *angle, axis),
            }
        }
        if self.phase != ONE {
            for a in v.iter_mut() {
                *a *= self.phase;
            }
        }
    }

    /// Dense matrix (test scale only).
    pub fn to_dense(&self) -> crate::oracle::DenseMatrix {
        let dim = 1usize << self.n;
        let mut m = crate::oracle::DenseMatrix::zeros(dim);
        for col in 0..dim {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[col] = ONE;
            self.apply_to(&mut v);
            for (row, a) in v.iter().enumerate() {
                *m.at_mut(row, col) = *a;
            }
        }
        m
    }

    fn validate(&self) -> Result<()> {
        if (self.phase.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "gate string phase has non-unit modulus {:.3e}",
                self.phase.norm()
            )));
        }
        Ok(())
    }
}

/// `P v` in place: a signed permutation of the amplitudes.
#[inline]
pub fn apply_pauli(v: &mut [Complex64], s: &PauliString) {
    let x = s.x_mask() as usize;
    if x == 0 {
        // Diagonal string: phases are (+/-)1 (no Y factors possible).
        let z = s.z_mask();
        for (i, a) in v.iter_mut().enumerate() {
            if ((z & i as u64).count_ones() & 1) == 1 {
                *a = -*a;
            }
        }
        return;
    }
    for i in 0..v.len() {
        let j = i ^ x;
        if i < j {
            let ph_i = phase_value(s.basis_phase_exponent(i as u64));
            let ph_j = phase_value(s.basis_phase_exponent(j as u64));
            let vi = v[i];
            let vj = v[j];
            v[j] = ph_i * vi;
            v[i] = ph_j * vj;
        }
    }
}

/// `exp(i θ P) v = cos θ v + i sin θ (P v)` in place.
#[inline]
pub fn apply_rotation(v: &mut [Complex64], angle: f64, axis: &PauliString) {
    let (sin, cos) = angle.sin_cos();
    let isin = Complex64::new(0.0, sin);
    let x = axis.x_mask() as usize;
    if x == 0 {
        let z = axis.z_mask();
        let plus = Complex64::new(cos, sin);
        let minus = Complex64::new(cos, -sin);
        for (i, a) in v.iter_mut().enumerate() {
            let odd = ((z & i as u64).count_ones() & 1) == 1;
            *a *= if odd { minus } else { plus };
        }
        return;
    }
    for i in 0..v.len() {
        let j = i ^ x;
        if i < j {
            let ph_i = phase_value(axis.basis_phase_exponent(i as u64));
            let ph_j = phase_value(axis.basis_phase_exponent(j as u64));
            let vi = v[i];
            let vj = v[j];
            v[i] = cos * vi + isin * ph_j * vj;
            v[j] = cos * vj + isin * ph_i * vi;
        }
    }
}

#[inline]
fn phase_value(exponent: u8) -> Complex64 {
    match exponent {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// How a pure input state is prepared.
#[derive(Clone, Debug)]
pub enum PrepKind {
    /// Computational basis state |index>.
    Basis(u64),
    /// Gate-list preparation applied to |0...0>.
    Gates(GateString),
    /// Explicit normalized amplitudes.
    Dense(Vec<Complex64>),
}

/// A state-preparation procedure with its reported gate depth.
#[derive(Clone, Debug)]
pub struct StatePrep {
    n: usize,
    kind: PrepKind,
    reported_depth: usize,
}

impl StatePrep {
    pub fn basis(n: usize, index: u64) -> Self {
        assert!((index as u128) < (1u128 << n), "basis index out of range");
        StatePrep {
            n,
            kind: PrepKind::Basis(index),
            reported_depth: 0,
        }
    }

    pub fn from_gates(g: GateString) -> Self {
        let depth = g.elements.len();
        StatePrep {
            n: g.n,
            kind: PrepKind::Gates(g),
            reported_depth: depth,
        }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n} qubits",
                amps.len()
            )));
        }
        let norm = crate::oracle::vec_norm(&amps);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "state vector norm {norm} is not 1 within 1e-10"
            )));
        }
        Ok(StatePrep {
            n,
            kind: PrepKind::Dense(amps),
            reported_depth: 0,
        })
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.reported_depth = depth;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reported_depth(&self) -> usize {
        self.reported_depth
    }

    /// Write the prepared state into `out` (overwritten, length `2^n`).
    pub fn prepare_into(&self, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), 1usize << self.n);
        out.fill(Complex64::new(0.0, 0.0));
        match &self.kind {
            PrepKind::Basis(i) => out[*i as usize] = ONE,
            PrepKind::Dense(amps) => out.copy_from_slice(amps),
            PrepKind::Gates(g) => {
                out[0] = ONE;
                g.apply_to(out);
            }
        }
    }

    pub fn vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 1usize << self.n];
        self.prepare_into(&mut v);
        v
    }
}

/// A measurement operator `O = Σ o_k P_k` with its term-sampling tables.
/// Shots importance-sample one Pauli term per run with probability
/// `|o_k| / Σ|o_k|`, so single-shot outcomes are bounded by the 1-norm
/// `Σ|o_k|` rather than the operator norm.
#[derive(Clone, Debug)]
pub struct Observable {
    op: PauliOperator,
    one_norm: f64,
    cdf: Vec<f64>,
}

impl Observable {
    pub fn new(op: PauliOperator) -> Result<Self> {
        if op.sparsity() == 0 {
            return Err(Error::Validation("empty observable".into()));
        }
        let one_norm = op.weight();
        let mut cdf = Vec::with_capacity(op.sparsity());
        let mut acc = 0.0;
        for (_, a) in op.terms() {
            acc += a.abs() / one_norm;
            cdf.push(acc);
        }
        Ok(Observable { op, one_norm, cdf })
    }

    pub fn op(&self) -> &PauliOperator {
        &self.op
    }

    pub fn one_norm(&self) -> f64 {
        self.one_norm
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn sample_term<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn term(&self, k: usize) -> (PauliString, f64) {
        self.op.terms()[k]
    }
}

/// Reusable scratch buffers for shot simulation.
pub struct CircuitSim {
    n: usize,
    s0: Vec<Complex64>,
    s1: Vec<Complex64>,
}

impl CircuitSim {
    pub fn new(n: usize) -> Self {
        let dim = 1usize << n;
        CircuitSim {
            n,
            s0: vec![Complex64::new(0.0, 0.0); dim],
            s1: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    fn check_dims(&self, prep: &StatePrep, u: &GateString) -> Result<()> {
        if prep.n() != self.n || u.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "prep on {} / gates on {} qubits vs simulator on {}",
                prep.n(),
                u.n(),
                self.n
            )));
        }
        u.validate()
    }

    /// Exact overlap `<phi| u |psi>` — the quantity whose real and imaginary
    /// parts the two Hadamard-test branches estimate.  Equals the
    /// ancilla-reduced statistics of the controlled-(U_phi† u U_psi) circuit.
    pub fn hadamard_amplitude(
        &mut self,
        prep_psi: &StatePrep,
        prep_phi: &StatePrep,
        u: &GateString,
    ) -> Result<Complex64> {
        self.check_dims(prep_psi, u)?;
        if prep_phi.n() != self.n {
            return Err(Error::DimensionMismatch("phi prep size".into()));
        }
        prep_psi.prepare_into(&mut self.s1);
        u.apply_to(&mut self.s1);
        prep_phi.prepare_into(&mut self.s0);
        Ok(crate::oracle::vec_inner(&self.s0, &self.s1))
    }

    /// Exact `P(outcome = +1)` of one Hadamard-test run.
    pub fn hadamard_prob_plus(
        &mut self,
        prep_psi: &StatePrep,
        prep_phi: &StatePrep,
        u: &GateString,
        part: Part,
    ) -> Result<f64> {
        let c = self.hadamard_amplitude(prep_psi, prep_phi, u)?;
        let mean = match part {
            Part::Real => c.re,
            Part::Imaginary => c.im,
        };
        Ok((0.5 * (1.0 + mean)).clamp(0.0, 1.0))
    }

    /// One Hadamard-test shot: a Bernoulli sample with mean Re or Im of
    /// `<phi| u |psi>`.
    pub fn hadamard_shot<R: Rng + ?Sized>(
        &mut self,
        prep_psi: &StatePrep,
        prep_phi: &StatePrep,
        u: &GateString,
        part: Part,
        rng: &mut R,
    ) -> Result<i8> {
        let p = self.hadamard_prob_plus(prep_psi, prep_phi, u, part)?;
        Ok(bernoulli_pm(p, rng))
    }

    /// Both branches of the Hadamard test from one state evolution.  The two
    /// circuit runs of a shot differ only in the ancilla gate G, so their
    /// outcome laws are Bernoulli in Re(c) and Im(c) for the same c; drawing
    /// them from one evolution is distribution-identical to two runs.
    pub fn hadamard_shot_pair<R: Rng + ?Sized>(
        &mut self,
        prep_psi: &StatePrep,
        prep_phi: &StatePrep,
        u: &GateString,
        rng: &mut R,
    ) -> Result<(i8, i8)> {
        let c = self.hadamard_amplitude(prep_psi, prep_phi, u)?;
        let o_re = bernoulli_pm((0.5 * (1.0 + c.re)).clamp(0.0, 1.0), rng);
        let o_im = bernoulli_pm((0.5 * (1.0 + c.im)).clamp(0.0, 1.0), rng);
        Ok((o_re, o_im))
    }

    /// Exact expectation of `X ⊗ P` after controlled-u / anticontrolled-v on
    /// `(|0> + |1>)/sqrt2 ⊗ |rho>`.
    pub fn lcu_pair_mean(
        &mut self,
        prep_rho: &StatePrep,
        u: &GateString,
        v: &GateString,
        term: &PauliString,
    ) -> Result<f64> {
        self.check_dims(prep_rho, u)?;
        v.validate()?;
        if v.n() != self.n || term.n() != self.n {
            return Err(Error::DimensionMismatch("lcu pair operand size".into()));
        }
        prep_rho.prepare_into(&mut self.s1);
        self.s0.copy_from_slice(&self.s1);
        u.apply_to(&mut self.s1);
        v.apply_to(&mut self.s0);
        apply_pauli(&mut self.s1, term);
        Ok(crate::oracle::vec_inner(&self.s0, &self.s1).re)
    }

    /// One pair-circuit shot.  Draws a Pauli term `k` of the observable with
    /// probability `|o_k|/one_norm`, measures `X ⊗ P_k` exactly, and returns
    /// `(outcome, k)`.  The caller weights the outcome by
    /// `sign(o_k) * one_norm`.
    pub fn lcu_pair_shot<R: Rng + ?Sized>(
        &mut self,
        prep_rho: &StatePrep,
        u: &GateString,
        v: &GateString,
        obs: &Observable,
        rng: &mut R,
    ) -> Result<(i8, usize)> {
        if obs.n() != self.n {
            return Err(Error::DimensionMismatch("observable size".into()));
        }
        let k = obs.sample_term(rng);
        let (term, _) = obs.term(k);
        let mean = self.lcu_pair_mean(prep_rho, u, v, &term)?;
        let p = (0.5 * (1.0 + mean)).clamp(0.0, 1.0);
        Ok((bernoulli_pm(p, rng), k))
    }
}

#[inline]
fn bernoulli_pm<R: Rng + ?Sized>(p_plus: f64, rng: &mut R) -> i8 {
    if rng.random::<f64>() < p_plus {
        1
    } else {
        -1
    }
}

/// One Hadamard-test shot with fresh scratch space (see [`CircuitSim`]).
pub fn hadamard_test_shot<R: Rng + ?Sized>(
    prep_psi: &StatePrep,
    prep_phi: &StatePrep,
    u: &GateString,
    part: Part,
    rng: &mut R,
) -> Result<i8> {
    CircuitSim::new(u.n()).hadamard_shot(prep_psi, prep_phi, u, part, rng)
}

/// One pair-circuit shot with fresh scratch space (see [`CircuitSim`]).
pub fn lcu_pair_shot<R: Rng + ?Sized>(
    prep_rho: &StatePrep,
    u: &GateString,
    v: &GateString,
    obs: &Observable,
    rng: &mut R,
) -> Result<(i8, usize)> {
    CircuitSim::new(u.n()).lcu_pair_shot(prep_rho, u, v, obs, rng)
}
