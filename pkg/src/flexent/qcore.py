"""Small dense linear algebra for one- and two-qubit polarization states.

Basis order is fixed everywhere: ``H, V`` for a single qubit and
``HH, HV, VH, VV`` (signal tensor idler) for a pair.  Entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError

HERMITIAN_TOL = 1e-9
TRACE_TOL = 1e-10
PSD_TOL = -1e-9
ENTROPY_CUTOFF = 1e-12

_SQRT_HALF = np.sqrt(0.5)

PHI_PLUS = np.array([_SQRT_HALF, 0.0, 0.0, _SQRT_HALF], dtype=complex)
HH = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
VV = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.matrix
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def _check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    err = np.max(np.abs(a - a.conj().T))
    if err > tol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {err:.3g})")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix of dimension 2 or 4.

    Construction checks Hermiticity, unit trace and positivity.  Use
    :meth:`from_array` with ``clip=True`` to repair slightly negative
    eigenvalues; nothing is repaired silently.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=complex)
        if a.shape not in ((2, 2), (4, 4)):
            raise DimensionError(f"density matrix must be 2x2 or 4x4, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("density matrix has non-finite entries")
        _check_hermitian(a, 1e-10)
        tr = np.trace(a)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace is {tr.real:.12g}, expected 1")
        lmin = np.linalg.eigvalsh(a)[0]
        if lmin < PSD_TOL:
            raise ValidationError(f"minimum eigenvalue {lmin:.3g} is below {PSD_TOL}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_array(cls, m, clip: bool = False) -> "DensityMatrix":
        a = np.asarray(m, dtype=complex)
        if clip:
            a = 0.5 * (a + a.conj().T)
            w, v = np.linalg.eigh(a)
            w = np.clip(w, 0.0, None)
            if w.sum() <= 0:
                raise ValidationError("no positive weight left after clipping")
            a = (v * (w / w.sum())) @ v.conj().T
        return cls(a)

    @classmethod
    def from_pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"pure state has norm {norm:.15g}")
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int = 4) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        try:
            dim = int(obj["dim"])
            re = np.array(obj["re"], dtype=float)
            im = np.array(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed density matrix JSON: {exc}") from exc
        if re.shape != (dim, dim) or im.shape != (dim, dim):
            raise DimensionError(f"density matrix JSON entries do not match dim={dim}")
        return cls(re + 1j * im)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def werner(visibility: float, psi=PHI_PLUS) -> DensityMatrix:
    """``v |psi><psi| + (1 - v) I/4``."""
    psi = np.asarray(psi, dtype=complex)
    return DensityMatrix(visibility * np.outer(psi, psi.conj()) + (1 - visibility) * np.eye(4) / 4)


def hermitian_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and unitary eigenvector matrix of a Hermitian matrix."""
    a = _as_matrix(m)
    _check_hermitian(a)
    return np.linalg.eigh(0.5 * (a + a.conj().T))


def partial_transpose(rho, subsystem: str = "B") -> np.ndarray:
    a = _as_matrix(rho)
    if a.shape != (4, 4):
        raise DimensionError("partial transpose needs a 4x4 two-qubit operator")
    t = a.reshape(2, 2, 2, 2)  # a[i,j,k,l] = <ij| a |kl>
    if subsystem.upper() == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem.upper() == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValidationError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.reshape(4, 4).copy()


def partial_trace(rho, keep: str = "A") -> DensityMatrix:
    a = _as_matrix(rho)
    if a.shape != (4, 4):
        raise DimensionError("partial trace needs a 4x4 two-qubit state")
    t = a.reshape(2, 2, 2, 2)
    if keep.upper() == "A":
        r = np.einsum("ijkj->ik", t)
    elif keep.upper() == "B":
        r = np.einsum("ijil->jl", t)
    else:
        raise ValidationError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityMatrix(r)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; eigenvalues at or below 1e-12 contribute nothing."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    w = np.linalg.eigvalsh(rho.matrix)
    w = w[w > ENTROPY_CUTOFF]
    s = float(-np.sum(w * np.log2(w)))
    return min(max(s, 0.0), np.log2(rho.dim))


def trace_norm(m) -> float:
    w, _ = hermitian_eigen(m)
    return float(np.sum(np.abs(w)))


def trace_distance(a, b) -> float:
    return 0.5 * trace_norm(_as_matrix(a) - _as_matrix(b))


def kron_state(rho_a, rho_b) -> DensityMatrix:
    return DensityMatrix(np.kron(_as_matrix(rho_a), _as_matrix(rho_b)))


def sample_ginibre(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Matrix of i.i.d. complex normals with unit-variance real and imaginary parts."""
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    # QR with the phases of diag(R) pushed into Q makes the map Haar-distributed.
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_haar_unitary(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    return haar_from_ginibre(sample_ginibre(rng, dim))


def bures_from_factors(g: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``(I+U) G G^dag (I+U)^dag`` normalized to unit trace, as a raw array."""
    a = (np.eye(u.shape[0]) + u) @ g
    r = a @ a.conj().T
    return r / np.trace(r).real


def sample_bures(rng: np.random.Generator, dim: int = 4) -> DensityMatrix:
    if dim not in (2, 4):
        raise DimensionError("Bures sampling is only provided for dim 2 or 4")
    g = sample_ginibre(rng, dim)
    u = sample_haar_unitary(rng, dim)
    return DensityMatrix(bures_from_factors(g, u))


def local_unitary(u_a: np.ndarray, u_b: np.ndarray, rho) -> np.ndarray:
    """``(U_A x U_B) rho (U_A x U_B)^dag``."""
    u = np.kron(u_a, u_b)
    return u @ _as_matrix(rho) @ u.conj().T
