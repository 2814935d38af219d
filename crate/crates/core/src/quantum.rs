//! Dense complex linear algebra over the 2^N-dimensional spin space.
//!
//! Basis convention: `|0⟩` is the σz eigenstate with eigenvalue +1 and
//! qubit 0 (labelled "qubit 1" in reports and text formats) is the most
//! significant bit of a basis index. For two qubits the basis order is
//! `|00⟩, |01⟩, |10⟩, |11⟩`.

use std::fmt;
use std::ops::{Add, Mul};

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 8;

/// Tolerance for the hermiticity check, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for `U·U† = I` in max-entry norm.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn check_qubits(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(Error::arg("qubit count must be positive"));
    }
    if num_qubits > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{num_qubits} qubits exceeds the dense cap of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Bit mask of `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub fn qubit_mask(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

/// Normalized pure state of `num_qubits` spins.
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    amplitudes: DVector<Complex64>,
    num_qubits: usize,
}

impl QState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if amplitudes.len() != dim {
            return Err(Error::arg(format!(
                "state of {num_qubits} qubits needs {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::arg("state amplitudes must be finite"));
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::arg("state vector has zero norm"));
        }
        Ok(Self {
            amplitudes: v.unscale(norm),
            num_qubits,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::arg(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(num_qubits, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amplitudes.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Applies `op` and renormalizes.
    pub fn evolve(&self, op: &QOperator) -> Result<Self> {
        if op.num_qubits != self.num_qubits {
            return Err(Error::arg(format!(
                "operator acts on {} qubits, state has {}",
                op.num_qubits, self.num_qubits
            )));
        }
        let v = &op.matrix * &self.amplitudes;
        let norm = v.norm();
        Ok(Self {
            amplitudes: v.unscale(norm),
            num_qubits: self.num_qubits,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Largest per-component deviation after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &QState) -> f64 {
        let overlap = other.inner(self);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a * phase.conj() - b).norm())
            .fold(0.0, f64::max)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density_matrix(&self) -> QOperator {
        QOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            num_qubits: self.num_qubits,
        }
    }
}

/// Square operator on the 2^N-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    matrix: DMatrix<Complex64>,
    num_qubits: usize,
}

impl QOperator {
    pub fn identity(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        Ok(Self {
            matrix: DMatrix::identity(dim, dim),
            num_qubits,
        })
    }

    pub fn zeros(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        Ok(Self {
            matrix: DMatrix::zeros(dim, dim),
            num_qubits,
        })
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::arg("operator matrix must be square"));
        }
        let dim = matrix.nrows();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::arg(format!(
                "operator dimension {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_qubits(num_qubits)?;
        Ok(Self { matrix, num_qubits })
    }

    /// Diagonal operator from real entries.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let m = DMatrix::from_diagonal(&DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        Self::from_matrix(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            num_qubits: self.num_qubits,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            matrix: &self.matrix * c,
            num_qubits: self.num_qubits,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance between two operators of equal size.
    pub fn max_abs_diff(&self, other: &QOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &QOperator) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            num_qubits: self.num_qubits,
        }
    }

    /// Max-entry deviation from hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL * self.max_abs_entry().max(1.0)
    }

    /// Max-entry deviation of `U·U†` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let prod = &self.matrix * self.matrix.adjoint();
        let dim = self.dim();
        let id = DMatrix::<Complex64>::identity(dim, dim);
        prod.iter()
            .zip(id.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }

    /// Left-multiplies by a single-qubit gate acting on `qubit`.
    pub fn apply_single_qubit(&mut self, gate: &Matrix2<Complex64>, qubit: usize) {
        let mask = qubit_mask(self.num_qubits, qubit);
        let dim = self.dim();
        for col in 0..dim {
            for i0 in (0..dim).filter(|i| i & mask == 0) {
                let i1 = i0 | mask;
                let a = self.matrix[(i0, col)];
                let b = self.matrix[(i1, col)];
                self.matrix[(i0, col)] = gate[(0, 0)] * a + gate[(0, 1)] * b;
                self.matrix[(i1, col)] = gate[(1, 0)] * a + gate[(1, 1)] * b;
            }
        }
    }

    /// Left-multiplies by `exp(−i·phi·σz^a σz^b)`.
    pub fn apply_zz_phase(&mut self, a: usize, b: usize, phi: f64) {
        let ma = qubit_mask(self.num_qubits, a);
        let mb = qubit_mask(self.num_qubits, b);
        let same = Complex64::from_polar(1.0, -phi);
        let diff = Complex64::from_polar(1.0, phi);
        let dim = self.dim();
        for row in 0..dim {
            let parity_even = ((row & ma) == 0) == ((row & mb) == 0);
            let f = if parity_even { same } else { diff };
            for col in 0..dim {
                self.matrix[(row, col)] *= f;
            }
        }
    }
}

impl Mul for &QOperator {
    type Output = QOperator;

    fn mul(self, rhs: &QOperator) -> QOperator {
        QOperator {
            matrix: &self.matrix * &rhs.matrix,
            num_qubits: self.num_qubits,
        }
    }
}

impl Add for &QOperator {
    type Output = QOperator;

    fn add(self, rhs: &QOperator) -> QOperator {
        QOperator {
            matrix: &self.matrix + &rhs.matrix,
            num_qubits: self.num_qubits,
        }
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Matrix2<Complex64> {
        match self {
            Pauli::I => Matrix2::new(ONE, ZERO, ZERO, ONE),
            Pauli::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Matrix2::new(ZERO, -I, I, ZERO),
            Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    pub fn operator(self) -> QOperator {
        let m = self.matrix();
        QOperator {
            matrix: DMatrix::from_iterator(2, 2, m.iter().copied()),
            num_qubits: 1,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Tensor product of Pauli letters with a complex coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub letters: Vec<Pauli>,
    pub coefficient: Complex64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coefficient: Complex64) -> Self {
        Self {
            letters,
            coefficient,
        }
    }

    /// `coefficient · P_q` with identities elsewhere.
    pub fn single(num_qubits: usize, qubit: usize, letter: Pauli, coefficient: f64) -> Self {
        let mut letters = vec![Pauli::I; num_qubits];
        letters[qubit] = letter;
        Self::new(letters, Complex64::new(coefficient, 0.0))
    }

    /// `coefficient · P_a P_b` with identities elsewhere.
    pub fn pair(num_qubits: usize, a: usize, b: usize, letter: Pauli, coefficient: f64) -> Self {
        let mut letters = vec![Pauli::I; num_qubits];
        letters[a] = letter;
        letters[b] = letter;
        Self::new(letters, Complex64::new(coefficient, 0.0))
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &QOperator, b: &QOperator) -> QOperator {
    QOperator {
        matrix: a.matrix.kronecker(&b.matrix),
        num_qubits: a.num_qubits + b.num_qubits,
    }
}

/// Expands a Pauli string to its dense operator, qubit 0 leftmost.
pub fn pauli_string_to_operator(p: &PauliString, num_qubits: usize) -> Result<QOperator> {
    check_qubits(num_qubits)?;
    if p.letters.len() != num_qubits {
        return Err(Error::arg(format!(
            "Pauli string has {} letters, expected {num_qubits}",
            p.letters.len()
        )));
    }
    let mut op = p.letters[0].operator();
    for letter in &p.letters[1..] {
        op = kron(&op, &letter.operator());
    }
    Ok(op.scale(p.coefficient))
}

/// Spectral decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: QOperator,
}

impl Eigh {
    /// `V·diag(f(λ))·V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex64) -> QOperator {
        let v = &self.vectors.matrix;
        let mut scaled = v.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= s;
            }
        }
        QOperator {
            matrix: scaled * v.adjoint(),
            num_qubits: self.vectors.num_qubits,
        }
    }
}

fn require_hermitian(h: &QOperator) -> Result<()> {
    if !h.is_hermitian() {
        return Err(Error::arg(format!(
            "operator is not Hermitian (deviation {:e})",
            h.hermiticity_error()
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
pub fn eigh(h: &QOperator) -> Result<Eigh> {
    require_hermitian(h)?;
    eigh_matrix(&h.matrix).map(|(values, vectors)| Eigh {
        values,
        vectors: QOperator {
            matrix: vectors,
            num_qubits: h.num_qubits,
        },
    })
}

/// Hermitian eigensolver on a bare matrix (any size); used for sub-blocks.
pub(crate) fn eigh_matrix(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let n = m.nrows();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("eigensolver produced non-finite eigenvalues"));
    }
    Ok((values, vectors))
}

/// `exp(−i·h·t)` by diagonalization.
pub fn expm_hermitian(h: &QOperator, t: f64) -> Result<QOperator> {
    if !t.is_finite() {
        return Err(Error::arg("evolution time must be finite"));
    }
    if t == 0.0 {
        require_hermitian(h)?;
        return QOperator::identity(h.num_qubits());
    }
    let eig = eigh(h)?;
    Ok(eig.reconstruct_with(|lambda| Complex64::from_polar(1.0, -lambda * t)))
}

fn require_same_dim(u: &QOperator, v: &QOperator) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::arg(format!(
            "dimension mismatch: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// `1 − |tr(u†v)| / d`; zero iff `u = e^{iφ}·v`.
pub fn unitary_distance(u: &QOperator, v: &QOperator) -> Result<f64> {
    require_same_dim(u, v)?;
    let overlap = (u.matrix.adjoint() * &v.matrix).trace();
    Ok((1.0 - overlap.norm() / u.dim() as f64).clamp(0.0, 1.0))
}

/// `min_φ ‖e^{iφ}u − v‖_F / √d`.
///
/// Scales linearly with a small generator error, unlike
/// [`unitary_distance`] which is quadratic in it.
pub fn phase_aligned_error(u: &QOperator, v: &QOperator) -> Result<f64> {
    require_same_dim(u, v)?;
    let overlap = (u.matrix.adjoint() * &v.matrix).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    let diff = &u.matrix * phase - &v.matrix;
    Ok(diff.norm() / (u.dim() as f64).sqrt())
}
