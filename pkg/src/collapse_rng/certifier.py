"""Certified randomness lower bounds computed from measured disturbance.

Single-shot bounds (T1-T3) lower-bound the classical-adversary min-entropy of
A's outcomes.  T4, T5 and the uncertainty-relation baseline lower-bound the
asymptotic (i.i.d.) rate instead.  Everything is in bits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy.optimize import minimize_scalar

from .quantum import (
    Distribution,
    InvariantError,
    kl_divergence,
    overlap_factor,
    renyi_half_entropy,
)

SQRT2 = math.sqrt(2.0)
DOMAIN_SLACK = 1e-9
# bounds below this are rounding residue, reported as exactly zero
BITS_FLOOR = 1e-12
# the bounds have infinite slope at their domain edge, so arguments this close
# to it are snapped onto it; otherwise 1e-16 of rounding costs ~1e-8 bits
EDGE_SNAP = 1e-13


class InconsistentDataError(ValueError):
    """Measured statistics are impossible under the declared trust assumptions."""


class UnsupportedConfigurationError(ValueError):
    pass


class TrustKind(enum.Enum):
    UNTRUSTED_POVM = "untrusted_povm"
    PROJECTIVE_UNCHARACTERIZED = "projective"
    TRUSTED_VON_NEUMANN = "trusted_von_neumann"


@dataclass(frozen=True, eq=False)
class TrustLevel:
    kind: TrustKind
    overlaps: np.ndarray | None = None

    def __post_init__(self) -> None:
        kind = TrustKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is TrustKind.TRUSTED_VON_NEUMANN:
            if self.overlaps is None:
                raise InvariantError("trusted von Neumann level needs the overlap matrix")
            c = np.asarray(self.overlaps, dtype=float)
            if c.shape != (2, 2):
                raise UnsupportedConfigurationError(
                    f"trusted von Neumann certification is qubit-only, got overlaps of shape {c.shape}"
                )
            overlap_factor(c)  # validates double stochasticity
            object.__setattr__(self, "overlaps", c)
        elif self.overlaps is not None:
            object.__setattr__(self, "overlaps", np.asarray(self.overlaps, dtype=float))

    @classmethod
    def untrusted(cls) -> "TrustLevel":
        return cls(TrustKind.UNTRUSTED_POVM)

    @classmethod
    def projective(cls) -> "TrustLevel":
        return cls(TrustKind.PROJECTIVE_UNCHARACTERIZED)

    @classmethod
    def trusted(cls, overlaps: np.ndarray) -> "TrustLevel":
        return cls(TrustKind.TRUSTED_VON_NEUMANN, overlaps)

    @property
    def is_projective(self) -> bool:
        return self.kind is not TrustKind.UNTRUSTED_POVM

    @property
    def is_trusted(self) -> bool:
        return self.kind is TrustKind.TRUSTED_VON_NEUMANN


@dataclass(frozen=True)
class NoiseParams:
    epsilon_a: float = 0.0
    epsilon_b: float = 0.0

    def __post_init__(self) -> None:
        for name in ("epsilon_a", "epsilon_b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InvariantError(f"{name}={v} outside [0, 1]")

    @property
    def is_zero(self) -> bool:
        return self.epsilon_a == 0 and self.epsilon_b == 0


class Theorem(enum.Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T4 = "T4"
    T5 = "T5"
    BASELINE = "UncertaintyBaseline"


SINGLE_SHOT = frozenset({Theorem.T1, Theorem.T2, Theorem.T3})


@dataclass(frozen=True)
class CertBound:
    bits: float
    theorem: Theorem
    disturbance_used: float
    tau: float | None = None
    adjusted: bool = False


def _in_domain(x: float, hi: float, what: str) -> float:
    if x < -DOMAIN_SLACK:
        raise InvariantError(f"{what}={x} is negative")
    if x > hi + DOMAIN_SLACK:
        raise InconsistentDataError(f"{what}={x:.12g} exceeds the largest value {hi:.12g} the trust level allows")
    if x > hi - EDGE_SNAP:
        return hi
    return max(x, 0.0)


def _guess_bound_bits(x2_coeff: float, x: float) -> float:
    root = math.sqrt(max(0.0, 1.0 - x2_coeff * x * x))
    return max(0.0, -math.log2(0.5 + 0.5 * root))


def adjust_disturbance(d_re: float, noise: NoiseParams, level: TrustLevel) -> float:
    """Subtract the declared instrument (and, for trusted B, test) noise from d_re."""
    if not -DOMAIN_SLACK <= d_re <= 1 + DOMAIN_SLACK:
        raise InvariantError(f"disturbance {d_re} outside [0, 1]")
    d = d_re - noise.epsilon_a
    if level.is_trusted:
        d -= 2 * noise.epsilon_b
    return max(0.0, d)


def bound_theorem1(d: float) -> CertBound:
    """POVM A obeying the Lueders rule: d <= sqrt(2)/2 always holds."""
    x = _in_domain(d, SQRT2 / 2, "disturbance")
    return CertBound(_guess_bound_bits(2.0, x), Theorem.T1, x)


def bound_theorem2(d: float) -> CertBound:
    x = _in_domain(d, 0.5, "disturbance")
    return CertBound(_guess_bound_bits(4.0, x), Theorem.T2, x)


def modified_disturbance(d: float, delta_ab: float) -> float:
    """tau = sqrt(2) d / delta_AB, which amplifies d when A and B nearly coincide."""
    if d < -DOMAIN_SLACK or delta_ab < 0:
        raise InvariantError("disturbance and overlap factor must be nonnegative")
    if delta_ab == 0:
        if d > DOMAIN_SLACK:
            raise InconsistentDataError("identical measurements cannot disturb one another")
        return 0.0
    return SQRT2 * max(d, 0.0) / delta_ab


def bound_theorem3(tau: float, d: float | None = None) -> CertBound:
    t = _in_domain(tau, 0.5, "modified disturbance")
    return CertBound(_guess_bound_bits(4.0, t), Theorem.T3, t if d is None else d, tau=t)


def bound_theorem4(q: Distribution, q_prime: Distribution, n_outcomes_a: int = 2) -> CertBound:
    kl = kl_divergence(q, q_prime)
    cap = math.log2(n_outcomes_a)
    return CertBound(min(kl, cap), Theorem.T4, 0.5 * float(np.abs(q.probs - q_prime.probs).sum()))


def bound_theorem5(tau: float, d: float | None = None) -> CertBound:
    t = _in_domain(tau, 0.5, "modified disturbance")
    return CertBound(min(4.0 * t * t, 1.0), Theorem.T5, t if d is None else d, tau=t)


def bound_uncertainty_baseline(c_max: float, q: Distribution) -> CertBound:
    if not 0.0 < c_max <= 1.0:
        raise InvariantError(f"c_max={c_max} outside (0, 1]")
    bits = -math.log2(c_max) - renyi_half_entropy(q)
    return CertBound(bits if bits > BITS_FLOOR else 0.0, Theorem.BASELINE, float("nan"))


def certify(
    q: Distribution,
    q_prime: Distribution,
    d: float,
    level: TrustLevel,
    noise: NoiseParams = NoiseParams(),
    n_outcomes_a: int = 2,
) -> list[CertBound]:
    """Every bound valid at ``level``, in theorem order.

    ``d`` is the disturbance seen with the real devices; the noise terms are
    subtracted before T1-T3 and T5.  T4 and the baseline use the raw
    distributions.  Use :func:`best_bound` to pick the strongest entry.
    """
    if n_outcomes_a != 2:
        raise UnsupportedConfigurationError(
            f"single-shot bounds are derived for binary A only, got {n_outcomes_a} outcomes"
        )
    adjusted = not noise.is_zero
    d_a = adjust_disturbance(d, noise, TrustLevel.untrusted())
    out = [_mark(bound_theorem1(d_a), adjusted)]
    if level.is_projective:
        out.append(_mark(bound_theorem2(d_a), adjusted))
    if level.is_trusted:
        d_ab = adjust_disturbance(d, noise, level)
        tau = modified_disturbance(d_ab, overlap_factor(level.overlaps))
        out.append(_mark(bound_theorem3(tau, d_ab), adjusted))
    out.append(bound_theorem4(q, q_prime, n_outcomes_a))
    if level.is_trusted:
        out.append(_mark(bound_theorem5(tau, d_ab), adjusted))
        out.append(bound_uncertainty_baseline(float(np.max(level.overlaps)), q))
    return out


def certify_stats(stats, level: TrustLevel, noise: NoiseParams = NoiseParams(), n_outcomes_a: int = 2):
    """:func:`certify` fed from an ``EmpiricalStats`` record."""
    return certify(stats.q_hat, stats.q_prime_hat, stats.d_hat, level, noise, n_outcomes_a)


def best_bound(bounds: Sequence[CertBound]) -> CertBound:
    """Largest bound; near-ties go to the earliest (most assumption-light) entry."""
    top = max(b.bits for b in bounds)
    return next(b for b in bounds if b.bits >= top - BITS_FLOOR)


def _mark(b: CertBound, adjusted: bool) -> CertBound:
    return CertBound(b.bits, b.theorem, b.disturbance_used, b.tau, adjusted)


# -- figure sweeps ----------------------------------------------------------


def qubit_overlaps(c00: float) -> np.ndarray:
    return np.array([[c00, 1 - c00], [1 - c00, c00]])


def figure2_tau_edge(c00: float) -> float:
    """Disturbance at which the modified disturbance reaches 1/2."""
    return overlap_factor(qubit_overlaps(c00)) / (2 * SQRT2)


@dataclass(frozen=True)
class Figure2Row:
    d: float
    thm1_bits: float | None
    thm2_bits: float | None
    thm3_bits: float | None


def sweep_figure2(c00: float, d_grid: Sequence[float]) -> list[Figure2Row]:
    """T1/T2/T3 bounds against disturbance for qubit bases with |<0|b_0>|^2 = c00.

    Cells outside a bound's domain are ``None``.
    """
    if not 0.5 < c00 < 1.0:
        raise InvariantError(f"c00={c00} outside (1/2, 1)")
    delta_ab = overlap_factor(qubit_overlaps(c00))
    rows = []
    for d in d_grid:
        d = float(d)
        t1 = bound_theorem1(d).bits if d <= SQRT2 / 2 + DOMAIN_SLACK else None
        t2 = bound_theorem2(d).bits if d <= 0.5 + DOMAIN_SLACK else None
        tau = modified_disturbance(d, delta_ab)
        t3 = bound_theorem3(tau).bits if tau <= 0.5 + DOMAIN_SLACK else None
        rows.append(Figure2Row(d, t1, t2, t3))
    return rows


def binary_kl(q0: float | np.ndarray, r0: float | np.ndarray) -> np.ndarray:
    """KL divergence in bits between (q0, 1-q0) and (r0, 1-r0), vectorised in r0."""
    q0 = np.asarray(q0, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    out = np.zeros(np.broadcast(q0, r0).shape)
    for qa, ra in ((q0, r0), (1 - q0, 1 - r0)):
        qa, ra = np.broadcast_arrays(qa, ra)
        nz = qa > 0
        with np.errstate(divide="ignore"):
            out[nz] += qa[nz] * np.log2(qa[nz] / ra[nz])
    return np.maximum(out, 0.0)


@dataclass(frozen=True)
class Figure3Row:
    q0: float
    baseline_bits: float
    kl_min_bits: float
    kl_max_bits: float


class _QubitPair:
    """A = sigma_z, B = basis tilted by angle theta in the x-z plane with cos^2(theta/2) = c."""

    def __init__(self, c: float) -> None:
        self.c = c
        cos_t = 2 * c - 1
        self.n_b = np.array([math.sqrt(max(0.0, 1 - cos_t**2)), 0.0, cos_t])
        self.n_a = np.array([0.0, 0.0, 1.0])
        # orthonormal frame of the plane perpendicular to n_b
        self.u = np.array([cos_t, 0.0, -self.n_b[0]])
        self.v = np.array([0.0, 1.0, 0.0])

    def circle_z(self, s: float, phi: np.ndarray) -> np.ndarray:
        """A-axis Bloch component of the pure states with n_b . r = s."""
        rad = math.sqrt(max(0.0, 1 - s * s))
        r = s * self.n_b[:, None] + rad * (np.cos(phi) * self.u[:, None] + np.sin(phi) * self.v[:, None])
        return r.T @ self.n_a

    def q_prime0(self, z: np.ndarray) -> np.ndarray:
        p0 = (1 + z) / 2
        return self.c * p0 + (1 - self.c) * (1 - p0)


def _constrained_extremes(pair: _QubitPair, q0: float, budget: int, rng: Generator) -> tuple[float, float]:
    s = 2 * q0 - 1

    def kl_at(phi):
        return binary_kl(q0, pair.q_prime0(pair.circle_z(s, np.atleast_1d(phi))))

    # restarts: a fixed lattice plus seeded random angles, each then polished locally
    phis = np.concatenate([np.linspace(0, 2 * np.pi, budget // 2, endpoint=False),
                           rng.uniform(0, 2 * np.pi, budget - budget // 2)])
    vals = kl_at(phis)
    step = 2 * np.pi / max(budget, 1)
    results = []
    for sign in (1.0, -1.0):
        k = int(np.argmin(sign * vals))
        best = float(vals[k])
        res = minimize_scalar(
            lambda p: sign * float(kl_at(p)[0]),
            bounds=(phis[k] - step, phis[k] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        polished = sign * float(res.fun)
        results.append(min(best, polished) if sign > 0 else max(best, polished))
    return results[0], results[1]


def sweep_figure3(
    c: float, q_grid: Sequence[Distribution], search_budget: int = 1000, seed: int = 0
) -> list[Figure3Row]:
    """Worst and best T4 bound (KL) over qubit states with fixed B statistics, next to the baseline.

    Mixed states add nothing: the feasible A-statistics of the constraint disk
    coincide with those of its boundary circle, which is what gets searched.
    """
    if not 0.5 < c < 1.0:
        raise InvariantError(f"c={c} outside (1/2, 1)")
    if search_budget < 1:
        raise InvariantError("search_budget must be >= 1")
    pair = _QubitPair(c)
    rng = Generator(Philox(key=np.array([seed, 3], dtype=np.uint64)))
    rows = []
    for q in q_grid:
        if len(q) != 2:
            raise InvariantError("figure 3 sweeps binary distributions only")
        q0 = q[0]
        lo, hi = _constrained_extremes(pair, q0, search_budget, rng)
        base = bound_uncertainty_baseline(c, q).bits
        rows.append(Figure3Row(q0, base, lo, hi))
    return rows


def figure3_grid(steps: int) -> list[Distribution]:
    return [Distribution([x, 1 - x]) for x in np.linspace(0.0, 1.0, steps + 1)]
