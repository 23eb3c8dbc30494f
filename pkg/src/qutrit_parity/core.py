"""Linear algebra for a single three-level system.

Basis ordering follows the energy-level diagram: index 0 is |+1>, index 1 is
|0>, index 2 is |-1>. All other modules share this convention and the
tolerances defined here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIM = 3

#: spin quantum number m of each basis index
LEVEL_OF_INDEX = (1, 0, -1)
INDEX_OF_LEVEL = {1: 0, 0: 1, -1: 2}


class NormalizationError(ValueError):
    """State amplitudes do not form a unit vector."""


class NonUnitaryError(ValueError):
    """Matrix fails the unitarity check; carries the worst entry deviation."""

    def __init__(self, message: str, max_deviation: float):
        super().__init__(f"{message} (max entry deviation {max_deviation:.3e})")
        self.max_deviation = max_deviation


@dataclass(frozen=True)
class Tolerance:
    entrywise_abs: float = 1e-10
    phase_equivalence: float = 1e-9

    def __post_init__(self):
        if self.entrywise_abs <= 0 or self.phase_equivalence <= 0:
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerance()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class QutritState:
    """Pure state of the qutrit, a normalized complex amplitude triple."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes, *, norm_tol: float = 1e-12):
        a = np.asarray(amplitudes, dtype=complex).reshape(DIM)
        norm_sq = float(np.sum(np.abs(a) ** 2))
        if abs(norm_sq - 1.0) > norm_tol:
            raise NormalizationError(
                f"amplitudes have squared norm {norm_sq!r}, expected 1"
            )
        self.amplitudes = _frozen(a.copy())

    @classmethod
    def ket(cls, level: int) -> "QutritState":
        """Basis state |m> for m in {+1, 0, -1}."""
        a = np.zeros(DIM, dtype=complex)
        a[INDEX_OF_LEVEL[level]] = 1.0
        return cls(a)

    def overlap(self, other: "QutritState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __repr__(self):
        return f"QutritState({self.amplitudes.tolist()})"


class Operator3:
    """3x3 complex matrix with optional unitarity/Hermiticity assertions."""

    __slots__ = ("entries",)

    def __init__(self, entries, *, unitary: bool = False, hermitian: bool = False,
                 tol: Tolerance = DEFAULT_TOL):
        m = np.asarray(entries, dtype=complex).reshape(DIM, DIM)
        if unitary:
            dev = float(np.max(np.abs(m @ m.conj().T - np.eye(DIM))))
            if dev > tol.entrywise_abs:
                raise NonUnitaryError("matrix is not unitary", dev)
        if hermitian:
            dev = float(np.max(np.abs(m - m.conj().T)))
            if dev > tol.entrywise_abs:
                raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
        self.entries = _frozen(m.copy())

    @classmethod
    def identity(cls) -> "Operator3":
        return cls(np.eye(DIM))

    def dagger(self) -> "Operator3":
        return Operator3(self.entries.conj().T)

    def __matmul__(self, other):
        if isinstance(other, Operator3):
            return Operator3(self.entries @ other.entries)
        return NotImplemented

    def __repr__(self):
        return f"Operator3({self.entries.tolist()})"


class DensityMatrix:
    """Ensemble state: either a true density matrix or a traceless deviation.

    NMR detection only sees the traceless deviation part, so pulse programs
    usually run on kind="deviation" matrices (no positivity requirement).
    """

    __slots__ = ("entries", "kind")

    KINDS = ("true-state", "deviation")

    def __init__(self, entries, kind: str = "true-state", *,
                 tol: Tolerance = DEFAULT_TOL):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}, got {kind!r}")
        m = np.asarray(entries, dtype=complex).reshape(DIM, DIM)
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > tol.entrywise_abs:
            raise ValueError(f"density matrix is not Hermitian (max deviation {dev:.3e})")
        tr = complex(np.trace(m))
        if kind == "true-state":
            if abs(tr - 1.0) > tol.entrywise_abs:
                raise ValueError(f"true-state trace is {tr!r}, expected 1")
            if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < -tol.entrywise_abs:
                raise ValueError("true-state has a negative eigenvalue")
        else:
            if abs(tr) > tol.entrywise_abs:
                raise ValueError(f"deviation trace is {tr!r}, expected 0")
        self.entries = _frozen(m.copy())
        self.kind = kind

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def __repr__(self):
        return f"DensityMatrix({self.entries.tolist()}, kind={self.kind!r})"


def dagger(m: Operator3 | np.ndarray) -> Operator3 | np.ndarray:
    """Conjugate transpose; an involution."""
    if isinstance(m, Operator3):
        return m.dagger()
    return np.asarray(m).conj().T


def _check_unitary(u: np.ndarray, tol: Tolerance):
    dev = float(np.max(np.abs(u @ u.conj().T - np.eye(DIM))))
    if dev > tol.entrywise_abs:
        raise NonUnitaryError("apply_unitary requires a unitary operator", dev)


def apply_unitary(state, u: Operator3 | np.ndarray,
                  tol: Tolerance = DEFAULT_TOL):
    """u|psi> for a pure state, u rho u^dagger for a density matrix."""
    um = u.entries if isinstance(u, Operator3) else np.asarray(u, dtype=complex)
    _check_unitary(um, tol)
    if isinstance(state, QutritState):
        return QutritState(um @ state.amplitudes)
    if isinstance(state, DensityMatrix):
        return DensityMatrix(um @ state.entries @ um.conj().T, state.kind, tol=tol)
    raise TypeError(f"cannot apply a unitary to {type(state).__name__}")


def equal_up_to_global_phase(a: QutritState, b: QutritState,
                             tol: Tolerance = DEFAULT_TOL):
    """Whether b = e^{i phi} a, and the phase phi = arg<a|b> when it is.

    Returns (True, phi) or (False, None).
    """
    ov = a.overlap(b)
    if abs(ov) >= 1.0 - tol.phase_equivalence:
        return True, float(np.angle(ov))
    return False, None


# --- serialization: matrices as row lists of [re, im] pairs -----------------

def matrix_to_rows(m) -> list:
    m = m.entries if isinstance(m, Operator3) else np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def rows_to_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def state_to_row(s: QutritState) -> list:
    return [[float(z.real), float(z.imag)] for z in s.amplitudes]


def row_to_state(row) -> QutritState:
    return QutritState([complex(re, im) for re, im in row])
