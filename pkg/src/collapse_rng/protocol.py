"""Monte Carlo execution of the two-path prepare-and-measure protocol.

Each prepared particle is routed either to the *upper* path (straight to the
test measurement B) or the *lower* path (randomness-generating measurement A,
then B).  The distance between the two B histograms estimates how much A
disturbs the state.

Randomness for trial ``t`` comes from block ``t`` of a Philox counter stream
keyed by ``(seed, 1)``, so results do not depend on how trials are chunked or
parallelised.  The upper-path subset is a partial Fisher-Yates draw from a
separate stream keyed by ``(seed, 0)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.random import Generator, Philox

from .quantum import (
    ATOL,
    DensityMatrix,
    Distribution,
    InvariantError,
    Measurement,
    _kraus_apply,
    check_unitary,
    lueders_kraus,
    outcome_distribution,
    tv_distance,
)

PATH_STREAM = 0
TRIAL_STREAM = 1
CHUNK = 1 << 18
THREADS_ENV = "COLLAPSE_RNG_THREADS"


def philox_key(seed: int, stream: int) -> np.ndarray:
    # explicit uint64: a plain list overflows int64 for seeds >= 2**63
    return np.array([seed, stream], dtype=np.uint64)


@dataclass(frozen=True)
class IdealLueders:
    pass


@dataclass(frozen=True, eq=False)
class RealizationUnitaries:
    unitaries: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        us = tuple(check_unitary(u, f"realization unitary {i}") for i, u in enumerate(self.unitaries))
        object.__setattr__(self, "unitaries", us)


@dataclass(frozen=True, eq=False)
class NoisyChannel:
    """Real instrument given by a full Kraus list; outcomes follow the declared effects."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        dim = ks[0].shape[0]
        total = sum(k.conj().T @ k for k in ks)
        if np.max(np.abs(total - np.eye(dim))) > ATOL:
            raise InvariantError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus", ks)


Realization = Union[IdealLueders, RealizationUnitaries, NoisyChannel]


@dataclass(frozen=True)
class InstrumentSpec:
    measurement: Measurement
    realization: Realization = field(default_factory=IdealLueders)
    epsilon_a: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon_a <= 1.0:
            raise InvariantError(f"epsilon_a={self.epsilon_a} outside [0, 1]")
        r = self.realization
        m = self.measurement
        if isinstance(r, RealizationUnitaries):
            if len(r.unitaries) != m.n_outcomes:
                raise InvariantError("need one realization unitary per effect")
            if any(u.shape[0] != m.dim for u in r.unitaries):
                raise InvariantError("realization unitaries have the wrong dimension")
        elif isinstance(r, NoisyChannel):
            if any(k.shape != (m.dim, m.dim) for k in r.kraus):
                raise InvariantError("Kraus operators have the wrong dimension")

    def outcome_kraus(self) -> list[np.ndarray] | None:
        """Per-outcome Kraus operators, or ``None`` when only the average channel is known."""
        r = self.realization
        sq = lueders_kraus(self.measurement)
        if isinstance(r, IdealLueders):
            return list(sq)
        if isinstance(r, RealizationUnitaries):
            return [u @ s for u, s in zip(r.unitaries, sq)]
        return None

    def channel_kraus(self) -> list[np.ndarray]:
        ks = self.outcome_kraus()
        return ks if ks is not None else list(self.realization.kraus)


@dataclass(frozen=True)
class TestMeasurementSpec:
    measurement: Measurement
    real_effects: tuple[np.ndarray, ...] | None = None
    epsilon_b: float = 0.0

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon_b <= 1.0:
            raise InvariantError(f"epsilon_b={self.epsilon_b} outside [0, 1]")
        if self.real_effects is not None:
            real = Measurement(tuple(self.real_effects))
            if real.dim != self.measurement.dim or real.n_outcomes != self.measurement.n_outcomes:
                raise InvariantError("real_effects do not match the ideal test measurement")
            object.__setattr__(self, "real_effects", real.effects)

    @property
    def effects(self) -> tuple[np.ndarray, ...]:
        return self.real_effects if self.real_effects is not None else self.measurement.effects


@dataclass(frozen=True)
class Scenario:
    rho: DensityMatrix
    instrument_a: InstrumentSpec
    test_b: TestMeasurementSpec
    n: int
    n_u: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.n_u < self.n:
            raise InvariantError(f"need 0 < n_u < n, got n_u={self.n_u}, n={self.n}")
        if not 0 <= self.seed < 2**64:
            raise InvariantError("seed must be an unsigned 64-bit integer")
        dims = {self.rho.dim, self.instrument_a.measurement.dim, self.test_b.measurement.dim}
        if len(dims) != 1:
            raise InvariantError(f"scenario mixes dimensions {sorted(dims)}")


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    counts_q: np.ndarray
    counts_q_prime: np.ndarray
    q_hat: Distribution
    q_prime_hat: Distribution
    d_hat: float
    raw_outcomes_a: np.ndarray


@dataclass(frozen=True)
class SeedLedger:
    t_bits: int
    per_run_cost: float
    asymptotic_estimate: float


# -- noise presets ----------------------------------------------------------


def weyl_operators(dim: int) -> list[np.ndarray]:
    """The dim^2 clock-and-shift unitaries; they form a unitary 1-design."""
    omega = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(omega ** np.arange(dim))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(dim)
        for b in range(dim)
    ]


def depolarizing_kraus(dim: int, weight: float) -> list[np.ndarray]:
    """rho -> (1 - weight) rho + weight I/dim."""
    if not 0.0 <= weight <= 1.0:
        raise InvariantError(f"depolarizing weight {weight} outside [0, 1]")
    ks = [math.sqrt(1 - weight) * np.eye(dim, dtype=complex)]
    ks += [math.sqrt(weight) / dim * w for w in weyl_operators(dim)]
    return ks


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    if not 0.0 <= gamma <= 1.0:
        raise InvariantError(f"damping rate {gamma} outside [0, 1]")
    return [
        np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def compose_after_lueders(m: Measurement, noise: Sequence[np.ndarray]) -> NoisyChannel:
    """Lueders instrument of ``m`` followed by the channel with Kraus list ``noise``."""
    return NoisyChannel(tuple(k @ s for s in lueders_kraus(m) for k in noise))


def depolarized_lueders(m: Measurement, weight: float, epsilon_a: float | None = None) -> InstrumentSpec:
    eps = weight if epsilon_a is None else epsilon_a
    return InstrumentSpec(m, compose_after_lueders(m, depolarizing_kraus(m.dim, weight)), eps)


def amplitude_damped_lueders(m: Measurement, gamma: float, epsilon_a: float | None = None) -> InstrumentSpec:
    eps = gamma if epsilon_a is None else epsilon_a
    return InstrumentSpec(m, compose_after_lueders(m, amplitude_damping_kraus(gamma)), eps)


# -- analytic side ----------------------------------------------------------


def apply_real_instrument(spec: InstrumentSpec, rho: DensityMatrix) -> tuple[Distribution, DensityMatrix]:
    p = outcome_distribution(spec.measurement, rho)
    post = DensityMatrix(_kraus_apply(spec.channel_kraus(), rho.op))
    return p, post


def _probs(effects: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    p = np.array([np.real(np.trace(rho @ e)) for e in effects])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def analytic_statistics(s: Scenario) -> tuple[Distribution, Distribution, float]:
    """Exact (q, q', D) using the ideal test effects and the declared realization of A."""
    _, post = apply_real_instrument(s.instrument_a, s.rho)
    b = s.test_b.measurement
    q = outcome_distribution(b, s.rho)
    q_prime = outcome_distribution(b, post)
    return q, q_prime, tv_distance(q, q_prime)


def seed_cost(n: int, n_u: int) -> SeedLedger:
    """Bits of true randomness needed to pick the n_u upper-path trials out of n."""
    if not 0 < n_u < n:
        raise InvariantError(f"need 0 < n_u < n, got n_u={n_u}, n={n}")
    ways = math.comb(n, n_u)
    t_bits = (ways - 1).bit_length()  # exact ceil(log2(ways)) for ways >= 1
    root = math.sqrt(n)
    return SeedLedger(t_bits, t_bits / (n - n_u), root * math.log2(root))


# -- sampling ---------------------------------------------------------------


def select_upper_path(n: int, n_u: int, seed: int) -> np.ndarray:
    """Boolean mask of the n_u upper-path trials (partial Fisher-Yates)."""
    rng = Generator(Philox(key=philox_key(seed, PATH_STREAM)))
    idx = np.arange(n)
    swaps = rng.integers(np.arange(n_u), n)
    for k, j in enumerate(swaps.tolist()):
        idx[k], idx[j] = idx[j], idx[k]
    mask = np.zeros(n, dtype=bool)
    mask[idx[:n_u]] = True
    return mask


def trial_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms in [0, 1) with shape (stop - start, 4); row t belongs to trial start + t."""
    raw = Philox(key=philox_key(seed, TRIAL_STREAM), counter=start).random_raw(4 * (stop - start))
    return (raw >> np.uint64(11)).astype(np.float64).reshape(-1, 4) * 2.0**-53


def _sample(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.searchsorted(cdf, u, side="right")
    return np.minimum(out, cdf.shape[-1] - 1)


def _cdf(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p)
    c[-1] = 1.0
    return c


class _TrialModel:
    """Precomputed per-outcome distributions for one scenario."""

    def __init__(self, s: Scenario) -> None:
        rho = s.rho.op
        eff_b = s.test_b.effects
        self.n_b = len(eff_b)
        self.q_cdf = _cdf(_probs(eff_b, rho))
        self.p = _probs(s.instrument_a.measurement.effects, rho)
        self.p_cdf = _cdf(self.p)
        ks = s.instrument_a.outcome_kraus()
        if ks is None:
            # only the average channel is known: B sees Lambda_re(rho) whatever A reported
            post = _kraus_apply(s.instrument_a.channel_kraus(), rho)
            row = _cdf(_probs(eff_b, post))
            self.cond_cdf = np.tile(row, (len(self.p), 1))
        else:
            rows = []
            for k, pi in zip(ks, self.p):
                if pi <= 0:
                    rows.append(self.q_cdf)  # never sampled
                    continue
                post = k @ rho @ k.conj().T / pi
                rows.append(_cdf(_probs(eff_b, post)))
            self.cond_cdf = np.array(rows)

    def run_chunk(self, seed: int, upper: np.ndarray, start: int, stop: int):
        u = trial_uniforms(seed, start, stop)
        up = upper[start:stop]
        b_upper = _sample(self.q_cdf, u[up, 1])
        lo = ~up
        a = _sample(self.p_cdf, u[lo, 0])
        cdfs = self.cond_cdf[a]
        b_lower = np.minimum((cdfs <= u[lo, 1][:, None]).sum(axis=1), self.n_b - 1)
        counts_q = np.bincount(b_upper, minlength=self.n_b)
        counts_qp = np.bincount(b_lower, minlength=self.n_b)
        return counts_q, counts_qp, a.astype(np.uint8 if len(self.p) < 256 else np.int64)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_protocol(s: Scenario, threads: int | None = None) -> EmpiricalStats:
    model = _TrialModel(s)
    upper = select_upper_path(s.n, s.n_u, s.seed)
    bounds = [(lo, min(lo + CHUNK, s.n)) for lo in range(0, s.n, CHUNK)]
    workers = threads if threads is not None else _threads()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: model.run_chunk(s.seed, upper, *b), bounds))
    else:
        parts = [model.run_chunk(s.seed, upper, *b) for b in bounds]
    counts_q = sum(p[0] for p in parts)
    counts_qp = sum(p[1] for p in parts)
    raw = np.concatenate([p[2] for p in parts])
    q_hat = Distribution.from_counts(counts_q)
    qp_hat = Distribution.from_counts(counts_qp)
    return EmpiricalStats(counts_q, counts_qp, q_hat, qp_hat, tv_distance(q_hat, qp_hat), raw)


# -- noise validation -------------------------------------------------------


def _random_states(dim: int, samples: int, rng: Generator) -> np.ndarray:
    """Random density matrices; rank cycles through 1..dim so pure states are well covered."""
    out = np.empty((samples, dim, dim), dtype=complex)
    for k in range(samples):
        rank = 1 + k % dim
        g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        g /= np.linalg.norm(g, axis=0)
        w = np.diff(np.concatenate([[0.0], np.sort(rng.random(rank - 1)), [1.0]]))
        out[k] = (g * w) @ g.conj().T
    return out


def _batch_trace_norm(x: np.ndarray) -> np.ndarray:
    h = 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))
    return np.abs(np.linalg.eigvalsh(h)).sum(axis=-1)


def _batch_channel(kraus: Sequence[np.ndarray], rhos: np.ndarray) -> np.ndarray:
    return sum(k @ rhos @ k.conj().T for k in kraus)


def empirical_epsilons(
    spec_a: InstrumentSpec, spec_b: TestMeasurementSpec, samples: int, seed: int = 0
) -> tuple[float, float]:
    """Largest deviations from the ideal models seen over random input states.

    These are lower bounds on the true worst-case epsilons and can only
    falsify a declared value, never certify one.
    """
    if samples < 1:
        raise InvariantError("samples must be >= 1")
    rng = Generator(Philox(key=philox_key(seed, 2)))
    rhos = _random_states(spec_a.measurement.dim, samples, rng)
    ideal = _batch_channel(lueders_kraus(spec_a.measurement), rhos)
    real = _batch_channel(spec_a.channel_kraus(), rhos)
    eps_a = float(np.max(0.5 * _batch_trace_norm(real - ideal)))

    diffs = [
        np.real(np.einsum("kij,ji->k", rhos, e_ideal - e_real))
        for e_ideal, e_real in zip(spec_b.measurement.effects, spec_b.effects)
    ]
    eps_b = float(np.max(0.5 * np.sum(np.abs(diffs), axis=0)))
    return eps_a, eps_b
