use nalgebra::{Matrix3, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest tolerated deviation from Hermiticity and from unit trace.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Most negative eigenvalue accepted as rounding noise.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// State of a photon pair in the basis `[H1H2, H1V2, V1H2, V1V2]`.
///
/// Construction checks that the matrix is Hermitian, has unit trace and is
/// positive semidefinite, so every value of this type is a physical state.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensityMatrix(Matrix4<Complex64>);

fn pauli() -> [nalgebra::Matrix2<Complex64>; 3] {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    [
        nalgebra::Matrix2::new(o, l, l, o),
        nalgebra::Matrix2::new(o, -i, i, o),
        nalgebra::Matrix2::new(l, o, o, -l),
    ]
}

fn kron(a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

impl PairDensityMatrix {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidState(format!("matrix is not Hermitian (deviation {asym:e})")));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > HERMITIAN_TOLERANCE || trace.im.abs() > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min = SymmetricEigen::new(m).eigenvalues.min();
        if min < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(PairDensityMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[(r, c)]
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = SymmetricEigen::new(self.0).eigenvalues;
        let mut v = [e[0], e[1], e[2], e[3]];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Pauli correlation matrix `T_ij = Tr(ρ σ_i ⊗ σ_j)`, `i, j ∈ {x, y, z}`.
    pub fn correlation(&self) -> Matrix3<f64> {
        let s = pauli();
        Matrix3::from_fn(|i, j| (self.0 * kron(&s[i], &s[j])).trace().re)
    }

    /// Trace distance `½ Σ |λ(ρ − σ)|`.
    pub fn trace_distance(&self, other: &PairDensityMatrix) -> f64 {
        let e = SymmetricEigen::new(self.0 - other.0).eigenvalues;
        0.5 * e.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `U ρ U†` for a unitary `U`; fails if `U` is not unitary enough to
    /// keep the result a valid state.
    pub fn transformed(&self, u: &Matrix4<Complex64>) -> Result<Self> {
        let m = u * self.0 * u.adjoint();
        // symmetrize away rounding so the Hermiticity check is about U
        Self::new((m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }
}

/// Largest CHSH value over all local measurement settings,
/// `2√(u1 + u2)` with `u1 ≥ u2` the top eigenvalues of `TᵀT`.
pub fn bell_horodecki(rho: &PairDensityMatrix) -> f64 {
    let t = rho.correlation();
    let mut u: Vec<f64> = SymmetricEigen::new(t.transpose() * t).eigenvalues.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    2.0 * (u[0] + u[1]).max(0.0).sqrt()
}

/// CHSH value for the fixed settings that are optimal for `(|HH⟩ + |VV⟩)/√2`:
/// first photon along σz or σy, second along `(σz ∓ σy)/√2`, giving
/// `√2 (T_zz − T_yy)`.
pub fn bell_fixed_angle(rho: &PairDensityMatrix) -> f64 {
    let t = rho.correlation();
    std::f64::consts::SQRT_2 * (t[(2, 2)] - t[(1, 1)])
}
