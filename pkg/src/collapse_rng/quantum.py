"""Dense operator arithmetic for small quantum systems (dimensions 2 through 8).

States, measurements and outcome distributions are immutable value types that
validate their invariants on construction.  Every function here is pure.
All logarithms are base 2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Tolerance for invariants on inputs and for contracts on computed results.
ATOL = 1e-9
RESULT_ATOL = 1e-8
# Eigenvalues below this are treated as exact zeros inside logarithms.
LOG_ZERO = 1e-12

MIN_DIM = 2
MAX_DIM = 8


class DimensionError(ValueError):
    """Operands live on spaces of different dimension."""


class InvariantError(ValueError):
    """A value violates a physical validity constraint."""


def _as_square(m: object, name: str = "matrix") -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvariantError(f"{name} must be square, got shape {arr.shape}")
    if not MIN_DIM <= arr.shape[0] <= MAX_DIM:
        raise InvariantError(f"{name} dimension {arr.shape[0]} outside {MIN_DIM}..{MAX_DIM}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def hermitian_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, symmetrised first to kill rounding skew."""
    h = 0.5 * (m + m.conj().T)
    return np.linalg.eigh(h)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator."""

    op: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_square(self.op, "density matrix")
        if not is_hermitian(arr):
            raise InvariantError("density matrix is not Hermitian")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > ATOL:
            raise InvariantError(f"density matrix trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0]
        if lo < -ATOL:
            raise InvariantError(f"density matrix has negative eigenvalue {lo!r}")
        object.__setattr__(self, "op", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.op.shape[0]

    @classmethod
    def pure(cls, vec: Sequence[complex] | np.ndarray) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def from_bloch(cls, r: Sequence[float]) -> "DensityMatrix":
        x, y, z = (float(c) for c in r)
        if x * x + y * y + z * z > 1 + ATOL:
            raise InvariantError(f"Bloch vector {tuple(r)} lies outside the unit ball")
        return cls(0.5 * (np.eye(2) + x * PAULI_X + y * PAULI_Y + z * PAULI_Z))

    def purity(self) -> float:
        return float(np.real(np.trace(self.op @ self.op)))

    def bloch(self) -> np.ndarray:
        if self.dim != 2:
            raise DimensionError("Bloch vector only defined for qubits")
        return np.real([np.trace(self.op @ p) for p in (PAULI_X, PAULI_Y, PAULI_Z)])


class MeasurementKind(enum.Enum):
    GENERAL_POVM = "general"
    PROJECTIVE = "projective"
    RANK_ONE_PROJECTIVE = "rank_one"


@dataclass(frozen=True, eq=False)
class Measurement:
    """Ordered list of POVM effects plus a kind tag.

    ``basis`` holds the unit vectors of a rank-one projective measurement and is
    ``None`` for every other kind.
    """

    effects: tuple[np.ndarray, ...]
    kind: MeasurementKind = MeasurementKind.GENERAL_POVM
    basis: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        effects = tuple(_frozen(_as_square(e, "effect")) for e in self.effects)
        if not effects:
            raise InvariantError("measurement needs at least one effect")
        dim = effects[0].shape[0]
        if any(e.shape[0] != dim for e in effects):
            raise DimensionError("effects have inconsistent dimensions")
        for i, e in enumerate(effects):
            if not is_hermitian(e):
                raise InvariantError(f"effect {i} is not Hermitian")
            lo = np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0]
            if lo < -ATOL:
                raise InvariantError(f"effect {i} has negative eigenvalue {lo!r}")
        total = sum(effects)
        if np.max(np.abs(total - np.eye(dim))) > ATOL:
            raise InvariantError("effects do not sum to the identity")

        kind = MeasurementKind(self.kind)
        if kind is not MeasurementKind.GENERAL_POVM:
            for i, e in enumerate(effects):
                if np.max(np.abs(e @ e - e)) > ATOL:
                    raise InvariantError(f"effect {i} is not a projector")
            for i in range(len(effects)):
                for j in range(i + 1, len(effects)):
                    if np.max(np.abs(effects[i] @ effects[j])) > ATOL:
                        raise InvariantError(f"effects {i} and {j} are not orthogonal")

        basis = None
        if kind is MeasurementKind.RANK_ONE_PROJECTIVE:
            if self.basis is None:
                raise InvariantError("rank-one projective measurement requires a basis")
            basis = tuple(_frozen(np.asarray(b, dtype=complex).reshape(-1)) for b in self.basis)
            if len(basis) != len(effects):
                raise InvariantError("basis length differs from effect count")
            for i, (b, e) in enumerate(zip(basis, effects)):
                if abs(np.linalg.norm(b) - 1) > ATOL:
                    raise InvariantError(f"basis vector {i} is not normalised")
                if np.max(np.abs(np.outer(b, b.conj()) - e)) > ATOL:
                    raise InvariantError(f"effect {i} differs from its basis projector")
        elif self.basis is not None:
            raise InvariantError("basis is only allowed for rank-one projective measurements")

        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    @property
    def is_projective(self) -> bool:
        return self.kind is not MeasurementKind.GENERAL_POVM

    @classmethod
    def from_basis(cls, vectors: Sequence[Sequence[complex]] | np.ndarray) -> "Measurement":
        """Rank-one projective measurement; ``vectors`` are the basis vectors (rows)."""
        vecs = [np.asarray(v, dtype=complex) for v in vectors]
        vecs = [v / np.linalg.norm(v) for v in vecs]
        return cls(
            tuple(np.outer(v, v.conj()) for v in vecs),
            MeasurementKind.RANK_ONE_PROJECTIVE,
            tuple(vecs),
        )

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "Measurement":
        """Measurement in the basis given by the columns of ``u``."""
        u = np.asarray(u, dtype=complex)
        return cls.from_basis(u.T)

    @classmethod
    def trivial(cls, dim: int) -> "Measurement":
        return cls((np.eye(dim, dtype=complex),), MeasurementKind.PROJECTIVE)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over measurement outcomes."""

    probs: np.ndarray = field()

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise InvariantError("empty distribution")
        if np.any(p < -1e-12) or not np.all(np.isfinite(p)):
            raise InvariantError(f"distribution has invalid entries {p}")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > ATOL:
            raise InvariantError(f"distribution sums to {p.sum()!r}")
        object.__setattr__(self, "probs", _frozen(p))

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i: int) -> float:
        return float(self.probs[i])

    def __iter__(self):
        return iter(self.probs.tolist())

    @classmethod
    def from_counts(cls, counts: Sequence[int] | np.ndarray) -> "Distribution":
        c = np.asarray(counts, dtype=float)
        return cls(c / c.sum())


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

SIGMA_Z = Measurement.from_basis([[1, 0], [0, 1]])
SIGMA_X = Measurement.from_basis([[1, 1], [1, -1]])
SIGMA_Y = Measurement.from_basis([[1, 1j], [1, -1j]])

KET_ZERO = DensityMatrix.pure([1, 0])
KET_ONE = DensityMatrix.pure([0, 1])
KET_PLUS = DensityMatrix.pure([1, 1])
KET_MINUS = DensityMatrix.pure([1, -1])


def rotated_qubit_basis(theta: float, phi: float = 0.0) -> Measurement:
    """Qubit basis whose first vector has Bloch angles (theta, phi).

    The overlap with the computational basis is |<0|b_0>|^2 = cos^2(theta/2).
    """
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    b0 = np.array([c, np.exp(1j * phi) * s])
    b1 = np.array([-np.exp(-1j * phi) * s, c])
    return Measurement.from_basis([b0, b1])


def _check_dims(*dims: int) -> None:
    if len(set(dims)) != 1:
        raise DimensionError(f"dimension mismatch: {dims}")


def outcome_distribution(m: Measurement, rho: DensityMatrix) -> Distribution:
    _check_dims(m.dim, rho.dim)
    probs = np.array([np.real(np.trace(rho.op @ e)) for e in m.effects])
    return Distribution(probs)


def operator_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Raises ``InvariantError`` for non-Hermitian input or eigenvalues below -1e-9.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise InvariantError("operator_sqrt needs a Hermitian matrix")
    w, v = hermitian_eigh(m)
    if w[0] < -ATOL:
        raise InvariantError(f"operator_sqrt needs a PSD matrix, min eigenvalue {w[0]!r}")
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def _kraus_apply(kraus: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    out = sum(k @ rho @ k.conj().T for k in kraus)
    return 0.5 * (out + out.conj().T)


def lueders_kraus(m: Measurement) -> tuple[np.ndarray, ...]:
    return tuple(operator_sqrt(e) for e in m.effects)


def lueders_channel(m: Measurement, rho: DensityMatrix) -> DensityMatrix:
    _check_dims(m.dim, rho.dim)
    return DensityMatrix(_kraus_apply(lueders_kraus(m), rho.op))


def check_unitary(u: np.ndarray, name: str = "unitary") -> np.ndarray:
    u = _as_square(u, name)
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > ATOL:
        raise InvariantError(f"{name} is not unitary")
    return u


def realized_instrument(
    m: Measurement, unitaries: Sequence[np.ndarray], rho: DensityMatrix
) -> DensityMatrix:
    """Post-measurement state sum_i U_i sqrt(M_i) rho sqrt(M_i) U_i^dagger."""
    _check_dims(m.dim, rho.dim)
    if len(unitaries) != m.n_outcomes:
        raise InvariantError(
            f"need one unitary per effect: {len(unitaries)} given, {m.n_outcomes} effects"
        )
    us = [check_unitary(u, f"unitary {i}") for i, u in enumerate(unitaries)]
    _check_dims(m.dim, *(u.shape[0] for u in us))
    kraus = [u @ s for u, s in zip(us, lueders_kraus(m))]
    return DensityMatrix(_kraus_apply(kraus, rho.op))


def _require_rank_one(m: Measurement, what: str) -> None:
    if m.kind is not MeasurementKind.RANK_ONE_PROJECTIVE:
        raise InvariantError(f"{what} requires a rank-one projective measurement, got {m.kind.value}")


def dephase(basis: Measurement, rho: DensityMatrix) -> DensityMatrix:
    _require_rank_one(basis, "dephase")
    _check_dims(basis.dim, rho.dim)
    return DensityMatrix(_kraus_apply(basis.effects, rho.op))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _check_dims(a.dim, b.dim)
    # both orderings, so the result is bitwise symmetric in (a, b)
    norm = _trace_norm(a.op - b.op) + _trace_norm(b.op - a.op)
    return float(min(1.0, 0.25 * norm))


def _trace_norm(x: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (x + x.conj().T)))))


def tv_distance(q: Distribution, q2: Distribution) -> float:
    if len(q) != len(q2):
        raise DimensionError(f"length mismatch: {len(q)} vs {len(q2)}")
    return float(min(1.0, 0.5 * np.sum(np.abs(q.probs - q2.probs))))


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def shannon_entropy(p: Distribution) -> float:
    return float(max(0.0, -np.sum(_xlog2x(p.probs))))


def collision_uncertainty(p: Distribution) -> float:
    """sqrt(1 - sum p_i^2); see :func:`collision_entropy` for the Renyi-2 counterpart."""
    return float(np.sqrt(max(0.0, 1.0 - np.sum(p.probs**2))))


def collision_entropy(p: Distribution) -> float:
    delta = collision_uncertainty(p)
    return float(-np.log2(1.0 - delta**2))


def renyi_half_entropy(q: Distribution) -> float:
    return float(max(0.0, 2.0 * np.log2(np.sum(np.sqrt(q.probs)))))


def kl_divergence(q: Distribution, q2: Distribution) -> float:
    """Kullback-Leibler divergence in bits; ``inf`` when q is not dominated by q2."""
    if len(q) != len(q2):
        raise DimensionError(f"length mismatch: {len(q)} vs {len(q2)}")
    a, b = q.probs, q2.probs
    nz = a > 0
    if np.any(b[nz] == 0):
        return float("inf")
    return float(max(0.0, np.sum(a[nz] * np.log2(a[nz] / b[nz]))))


def _log2_psd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    w, v = hermitian_eigh(m)
    w = np.where(w < LOG_ZERO, 0.0, w)
    return w, v, np.where(w > 0, np.log2(np.where(w > 0, w, 1.0)), 0.0)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    w = np.linalg.eigvalsh(0.5 * (rho.op + rho.op.conj().T))
    w = np.where(w < LOG_ZERO, 0.0, w)
    return float(max(0.0, -np.sum(_xlog2x(w))))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Quantum relative entropy S(rho||sigma) in bits; ``inf`` if supp(rho) is not in supp(sigma)."""
    _check_dims(rho.dim, sigma.dim)
    wr, vr, lr = _log2_psd(rho.op)
    ws, vs, ls = _log2_psd(sigma.op)
    # component of rho's support leaking into the kernel of sigma
    kernel = vs[:, ws == 0]
    if kernel.size:
        leak = np.real(np.trace(kernel.conj().T @ rho.op @ kernel))
        if leak > RESULT_ATOL:
            return float("inf")
    term_rho = float(np.sum(wr * lr))
    log_sigma = (vs * ls) @ vs.conj().T
    term_sigma = float(np.real(np.trace(rho.op @ log_sigma)))
    return max(0.0, term_rho - term_sigma)


def relative_entropy_to_dephased(rho: DensityMatrix, basis: Measurement) -> float:
    _require_rank_one(basis, "relative_entropy_to_dephased")
    value = relative_entropy(rho, dephase(basis, rho))
    if not np.isfinite(value):
        raise AssertionError("rho's support escapes its own dephased state")
    return value


def overlap_matrix(a: Measurement, b: Measurement) -> np.ndarray:
    """c_ij = |<a_i|b_j>|^2 for two rank-one projective measurements."""
    _require_rank_one(a, "overlap_matrix")
    _require_rank_one(b, "overlap_matrix")
    _check_dims(a.dim, b.dim)
    ua = np.array(a.basis)
    ub = np.array(b.basis)
    return np.abs(ua.conj() @ ub.T) ** 2


def overlap_factor(c: np.ndarray) -> float:
    """sum_j sqrt(1 - sum_i c_ij^2) of a doubly stochastic overlap matrix."""
    c = np.asarray(c, dtype=float)
    if np.max(np.abs(c.sum(axis=0) - 1)) > ATOL or np.max(np.abs(c.sum(axis=1) - 1)) > ATOL:
        raise InvariantError("overlap matrix is not doubly stochastic")
    # 1 - sum_i c_ij^2 == sum_{i != k} c_ij c_kj on a stochastic column; no cancellation near 0 or 1
    gram = np.einsum("ij,kj->jik", c, c)
    upper = np.triu(np.ones((c.shape[0], c.shape[0]), dtype=bool), 1)
    off = 2.0 * gram[:, upper].sum(axis=1)
    return float(np.sum(np.sqrt(np.clip(off, 0.0, None))))
