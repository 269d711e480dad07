"""Brute-force ground truth for the certifier.

Guessing probabilities and asymptotic min-entropies of mixed states are
optimisations over all pure-state decompositions; here they are estimated by
searching decompositions generated from random isometries (plus a fixed grid
for qubits).  Every estimate carries the direction of its bias so callers only
ever compare in the sound direction.

The ``verify_*`` functions sample random instances and check the
uncertainty-disturbance inequality chains numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from . import certifier as cert
from .quantum import (
    PAULI_X,
    DensityMatrix,
    Distribution,
    InvariantError,
    Measurement,
    MeasurementKind,
    collision_uncertainty,
    hermitian_eigh,
    kl_divergence,
    lueders_channel,
    operator_sqrt,
    outcome_distribution,
    overlap_factor,
    overlap_matrix,
    realized_instrument,
    relative_entropy,
    renyi_half_entropy,
    shannon_entropy,
    trace_distance,
    tv_distance,
)

SLACK = 1e-9
QUBIT_ANGLES = 181
QUBIT_PHASES = 64

Seed = int | Sequence[int]


def _rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


# -- instance generators ----------------------------------------------------


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def simplex_weights(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the probability simplex via sorted-uniform spacings."""
    cuts = np.sort(rng.random(k - 1))
    return np.diff(np.concatenate([[0.0], cuts, [1.0]]))


def random_state(dim: int, rank: int = 1, seed: Seed = 0) -> DensityMatrix:
    if not 1 <= rank <= dim:
        raise InvariantError(f"rank {rank} outside 1..{dim}")
    rng = _rng(seed)
    vecs = np.array([haar_vector(dim, rng) for _ in range(rank)]).T
    w = simplex_weights(rank, rng)
    return DensityMatrix((vecs * w) @ vecs.conj().T)


def random_measurement(
    dim: int, outcomes: int, kind: MeasurementKind | str = MeasurementKind.GENERAL_POVM, seed: Seed = 0
) -> Measurement:
    kind = MeasurementKind(kind)
    rng = _rng(seed)
    if kind is MeasurementKind.RANK_ONE_PROJECTIVE:
        if outcomes != dim:
            raise InvariantError("a rank-one projective measurement has exactly dim outcomes")
        return Measurement.from_unitary(haar_unitary(dim, rng))
    if kind is MeasurementKind.PROJECTIVE:
        if not 1 <= outcomes <= dim:
            raise InvariantError(f"cannot split dimension {dim} into {outcomes} subspaces")
        u = haar_unitary(dim, rng)
        # every block gets one column, the rest are dealt out at random
        sizes = np.ones(outcomes, dtype=int) + np.bincount(
            rng.integers(0, outcomes, dim - outcomes), minlength=outcomes
        )
        edges = np.concatenate([[0], np.cumsum(sizes)])
        effects = tuple(u[:, a:b] @ u[:, a:b].conj().T for a, b in zip(edges[:-1], edges[1:]))
        return Measurement(effects, MeasurementKind.PROJECTIVE)
    gs = []
    for _ in range(outcomes):
        x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        gs.append(x @ x.conj().T)
    s_inv_half = np.linalg.inv(operator_sqrt(sum(gs)))
    effects = [s_inv_half @ g @ s_inv_half for g in gs]
    effects = [0.5 * (e + e.conj().T) for e in effects]
    # push the rounding residue into the last effect so the sum is exactly I
    effects[-1] = np.eye(dim) - sum(effects[:-1])
    return Measurement(tuple(effects), MeasurementKind.GENERAL_POVM)


# -- decompositions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Decomposition:
    weights: Distribution
    states: tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(w * np.outer(s, s.conj()) for w, s in zip(self.weights, self.states))


def _isometry(g: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def _qubit_grid() -> np.ndarray:
    """2x2 unitaries R(a) diag(1, e^{i phi}); they reach every two-element decomposition."""
    a = np.linspace(0.0, np.pi, QUBIT_ANGLES)[:, None]
    phi = np.linspace(0.0, 2 * np.pi, QUBIT_PHASES, endpoint=False)[None, :]
    a, phi = np.broadcast_arrays(a, phi)
    a, phi = a.ravel(), phi.ravel()
    v = np.empty((a.size, 2, 2), dtype=complex)
    ph = np.exp(1j * phi)
    v[:, 0, 0] = np.cos(a)
    v[:, 0, 1] = -np.sin(a) * ph
    v[:, 1, 0] = np.sin(a)
    v[:, 1, 1] = np.cos(a) * ph
    return v


def _subnormalised_batches(rho: DensityMatrix, budget: int, seed: Seed) -> list[np.ndarray]:
    """Batches of shape (count, m, dim); row n of a decomposition is sqrt(r_n) |phi_n>.

    The first batch is the eigen-decomposition.  Random batches are generated
    so that a larger budget extends, never replaces, a smaller one.
    """
    if budget < 1:
        raise InvariantError("budget must be >= 1")
    w, v = hermitian_eigh(rho.op)
    keep = w > 1e-14
    w, v = w[keep], v[:, keep]
    rank = w.size
    frame = (v * np.sqrt(w)).T  # row k holds sqrt(lambda_k) |e_k>
    batches = [frame[None, :, :]]
    if rank == 1:
        return batches
    if rho.dim == 2:
        batches.append(_qubit_grid() @ frame)
    rng = _rng(seed)
    # one draw, so sample k is the same whatever the budget
    raw = rng.standard_normal((budget, rank + 2, rank, 2))
    g = raw[..., 0] + 1j * raw[..., 1]
    extra = np.arange(budget) % 3
    for e in range(3):
        idx = np.nonzero(extra == e)[0]
        if idx.size:
            iso = _isometry(g[idx, : rank + e, :])
            batches.append(iso @ frame)
    return batches


def decompositions_of(rho: DensityMatrix, budget: int, seed: Seed = 0) -> list[Decomposition]:
    out = []
    for batch in _subnormalised_batches(rho, budget, seed):
        for rows in batch:
            norms = np.sum(np.abs(rows) ** 2, axis=1)
            keep = norms > 1e-15
            rows, norms = rows[keep], norms[keep]
            states = tuple(r / math.sqrt(n) for r, n in zip(rows, norms))
            out.append(Decomposition(Distribution(norms / norms.sum()), states))
    return out


@dataclass(frozen=True)
class Estimate:
    """A brute-force value with the direction in which it may err."""

    value: float
    direction: Literal["exact", "lower", "upper"]

    def __float__(self) -> float:
        return self.value

    @property
    def exact(self) -> bool:
        return self.direction == "exact"


def _weighted_outcomes(batch: np.ndarray, m: Measurement) -> np.ndarray:
    """(count, m, outcomes) array of r_n p(i|phi_n)."""
    effects = np.array(m.effects)
    return np.real(np.einsum("bnx,ixy,bny->bni", batch.conj(), effects, batch))


def guessing_probability(rho: DensityMatrix, a: Measurement, budget: int = 10_000, seed: Seed = 0) -> Estimate:
    """Best classical guessing probability; for mixed states a lower estimate."""
    if rho.purity() > 1 - 1e-12:
        return Estimate(float(np.max(outcome_distribution(a, rho).probs)), "exact")
    best = 0.0
    for batch in _subnormalised_batches(rho, budget, seed):
        val = _weighted_outcomes(batch, a).max(axis=2).sum(axis=1)
        best = max(best, float(val.max()))
    return Estimate(min(best, 1.0), "lower")


def hmin_classical(rho: DensityMatrix, a: Measurement, budget: int = 10_000, seed: Seed = 0) -> Estimate:
    g = guessing_probability(rho, a, budget, seed)
    value = max(0.0, -math.log2(g.value))
    return Estimate(value, "exact" if g.exact else "upper")


def hmin_asy_classical(rho: DensityMatrix, a: Measurement, budget: int = 10_000, seed: Seed = 0) -> Estimate:
    """min over decompositions of the average Shannon entropy of A; an upper estimate."""
    if not a.is_projective:
        raise InvariantError("asymptotic classical min-entropy needs a projective measurement")
    if rho.purity() > 1 - 1e-12:
        return Estimate(shannon_entropy(outcome_distribution(a, rho)), "exact")
    best = math.inf
    for batch in _subnormalised_batches(rho, budget, seed):
        wp = np.clip(_weighted_outcomes(batch, a), 0.0, None)
        r = wp.sum(axis=2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = np.where(r > 0, wp / np.where(r > 0, r, 1.0), 0.0)
            h = -np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0).sum(axis=2)
        val = (r[..., 0] * h).sum(axis=1)
        best = min(best, float(val.min()))
    return Estimate(max(best, 0.0), "upper")


# -- qubit closed forms (used as cross-checks) --------------------------------


def qubit_guessing_probability(rho: DensityMatrix, a: Measurement) -> float:
    """(1 + sqrt(1 - |r_perp|^2)) / 2 where r_perp is the Bloch part orthogonal to A's axis."""
    axis = _qubit_axis(a)
    r = rho.bloch()
    perp2 = float(np.dot(r, r) - np.dot(r, axis) ** 2)
    return 0.5 * (1 + math.sqrt(max(0.0, 1 - perp2)))


def qubit_hmin_asy(rho: DensityMatrix, a: Measurement) -> float:
    g = qubit_guessing_probability(rho, a)
    return shannon_entropy(Distribution([g, 1 - g]))


def _qubit_axis(a: Measurement) -> np.ndarray:
    if a.dim != 2 or a.kind is not MeasurementKind.RANK_ONE_PROJECTIVE:
        raise InvariantError("qubit closed forms need a qubit basis measurement")
    return DensityMatrix(a.effects[0]).bloch()


# -- inequality chains ------------------------------------------------------


@dataclass
class ChainReport:
    """Running tally for one inequality chain ``x_0 >= x_1 >= ... >= x_k``."""

    name: str
    instances: int = 0
    violations: int = 0
    max_violation: float = 0.0
    min_slack: list[float] = field(default_factory=list)
    worst_instance: int | None = None

    def record(self, index: int, values: Sequence[float]) -> None:
        self.instances += 1
        gaps = [values[k] - values[k + 1] for k in range(len(values) - 1)]
        if not self.min_slack:
            self.min_slack = [math.inf] * len(gaps)
        self.min_slack = [min(a, b) for a, b in zip(self.min_slack, gaps)]
        worst = -min(gaps)
        if worst > SLACK:
            self.violations += 1
        if worst > self.max_violation:
            self.max_violation = worst
            self.worst_instance = index

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _rank(rng: np.random.Generator, dim: int) -> int:
    # half the instances pure: the chains are tightest there
    return 1 if rng.random() < 0.5 else int(rng.integers(1, dim + 1))


def chain_povm(rho: DensityMatrix, a: Measurement, b: Measurement) -> tuple[float, float, float]:
    post = lueders_channel(a, rho)
    delta = collision_uncertainty(outcome_distribution(a, rho))
    return (
        delta,
        trace_distance(rho, post),
        tv_distance(outcome_distribution(b, rho), outcome_distribution(b, post)),
    )


def chain_projective(rho: DensityMatrix, a: Measurement, b: Measurement) -> tuple[float, float, float]:
    delta, d_state, d_ab = chain_povm(rho, a, b)
    return (math.sqrt(2) / 2 * delta, d_state, d_ab)


def chain_von_neumann(rho: DensityMatrix, a: Measurement, b: Measurement) -> tuple[float, float]:
    post = lueders_channel(a, rho)
    delta = collision_uncertainty(outcome_distribution(a, rho))
    delta_ab = overlap_factor(overlap_matrix(a, b))
    d_ab = tv_distance(outcome_distribution(b, rho), outcome_distribution(b, post))
    return (0.5 * delta_ab * delta, d_ab)


def chain_entropic(rho: DensityMatrix, a: Measurement, b: Measurement) -> tuple[float, float, float]:
    post = lueders_channel(a, rho)
    return (
        shannon_entropy(outcome_distribution(a, rho)),
        relative_entropy(rho, post),
        kl_divergence(outcome_distribution(b, rho), outcome_distribution(b, post)),
    )


CHAINS = ("povm", "projective", "von_neumann", "entropic")


def _chain_instance(chain: str, dim: int, seed: Seed):
    rng = _rng(seed)
    sub = lambda k: [*np.atleast_1d(seed), k]  # noqa: E731
    if chain == "von_neumann":
        dim = 2
    rho = random_state(dim, _rank(rng, dim), sub(0))
    if chain == "povm":
        a = random_measurement(dim, int(rng.integers(2, 5)), MeasurementKind.GENERAL_POVM, sub(1))
    elif chain == "projective":
        a = random_measurement(dim, 2, _projective_kind(dim, 2), sub(1))
    elif chain == "von_neumann":
        a = random_measurement(2, 2, MeasurementKind.RANK_ONE_PROJECTIVE, sub(1))
    else:
        k = int(rng.integers(2, dim + 1))
        a = random_measurement(dim, k, _projective_kind(dim, k), sub(1))
    if chain == "von_neumann":
        b = random_measurement(2, 2, MeasurementKind.RANK_ONE_PROJECTIVE, sub(2))
    else:
        b = random_measurement(dim, int(rng.integers(2, 5)), MeasurementKind.GENERAL_POVM, sub(2))
    return rho, a, b


def _projective_kind(dim: int, outcomes: int) -> MeasurementKind:
    return MeasurementKind.RANK_ONE_PROJECTIVE if outcomes == dim else MeasurementKind.PROJECTIVE


_CHAIN_FUNCS = {
    "povm": chain_povm,
    "projective": chain_projective,
    "von_neumann": chain_von_neumann,
    "entropic": chain_entropic,
}


def verify_lemma_chains(
    instances: int = 10_000, dims: Iterable[int] = (2, 3, 4), seed: int = 0, chains: Iterable[str] = CHAINS
) -> dict[str, ChainReport]:
    """Check every chain on ``instances`` random (rho, A, B) triples each.

    povm:        collision uncertainty >= D(rho, rho') >= D(A->B), A a general POVM
    projective:  (sqrt2/2) uncertainty >= D(rho, rho') >= D(A->B), A two-outcome projective
    von_neumann: (1/2) delta_AB uncertainty >= D(A->B), qubit bases A and B
    entropic:    H(p) >= S(rho||rho') >= KL(q||q'), A projective
    """
    if instances < 1:
        raise InvariantError("instances must be >= 1")
    dims = list(dims)
    reports = {}
    for ci, chain in enumerate(chains):
        report = ChainReport(chain)
        fn = _CHAIN_FUNCS[chain]
        for i in range(instances):
            dim = dims[i % len(dims)]
            rho, a, b = _chain_instance(chain, dim, (seed, ci, i))
            report.record(i, fn(rho, a, b))
        reports[chain] = report
    return reports


def _qubit_pure_instance(rng: np.random.Generator):
    rho = DensityMatrix.pure(haar_vector(2, rng))
    a = Measurement.from_unitary(haar_unitary(2, rng))
    b = Measurement.from_unitary(haar_unitary(2, rng))
    return rho, a, b


def _qubit_mixed_instance(rng: np.random.Generator):
    rank = 1 if rng.random() < 0.5 else 2
    vecs = np.array([haar_vector(2, rng) for _ in range(rank)]).T
    rho = DensityMatrix((vecs * simplex_weights(rank, rng)) @ vecs.conj().T)
    a = Measurement.from_unitary(haar_unitary(2, rng))
    b = Measurement.from_unitary(haar_unitary(2, rng))
    return rho, a, b


def analytic_qdd(rho: DensityMatrix, a: Measurement, b: Measurement):
    post = lueders_channel(a, rho)
    q = outcome_distribution(b, rho)
    qp = outcome_distribution(b, post)
    return q, qp, tv_distance(q, qp)


def verify_bound_orderings(instances: int = 10_000, seed: int = 0) -> dict[str, ChainReport]:
    """On random qubit von Neumann triples: 4 tau^2 >= KL(q||q') >= -log2 c - H_1/2(q)."""
    t5_t4 = ChainReport("thm5_ge_thm4")
    t4_base = ChainReport("thm4_ge_baseline")
    for i in range(instances):
        rho, a, b = _qubit_mixed_instance(_rng((seed, 7, i)))
        c = overlap_matrix(a, b)
        q, qp, d = analytic_qdd(rho, a, b)
        delta_ab = overlap_factor(c)
        tau = cert.modified_disturbance(d, delta_ab) if delta_ab > 0 else 0.0
        kl = kl_divergence(q, qp)
        t5_t4.record(i, (4 * tau * tau, kl))
        t4_base.record(i, (kl, -math.log2(float(c.max())) - renyi_half_entropy(q)))
    return {r.name: r for r in (t5_t4, t4_base)}


def verify_soundness(instances: int = 10_000, seed: int = 0) -> dict[str, ChainReport]:
    """Certified bounds against the exact entropies of random pure qubit states.

    Single-shot bounds are compared with -log2 max_i p_i; the asymptotic bounds
    (T4, T5, baseline) with the Shannon entropy H(p), which is the asymptotic
    min-entropy of a pure state.
    """
    single = ChainReport("single_shot_le_hmin")
    asy = ChainReport("asymptotic_le_shannon")
    for i in range(instances):
        rho, a, b = _qubit_pure_instance(_rng((seed, 11, i)))
        q, qp, d = analytic_qdd(rho, a, b)
        level = cert.TrustLevel.trusted(overlap_matrix(a, b))
        p = outcome_distribution(a, rho)
        hmin = max(0.0, -math.log2(float(p.probs.max())))
        h = shannon_entropy(p)
        bounds = cert.certify(q, qp, d, level)
        s_best = max(x.bits for x in bounds if x.theorem in cert.SINGLE_SHOT)
        a_best = max(x.bits for x in bounds if x.theorem not in cert.SINGLE_SHOT)
        single.record(i, (hmin, s_best))
        asy.record(i, (h, a_best))
    return {r.name: r for r in (single, asy)}


# -- non-Lueders realizations -------------------------------------------------


@dataclass
class RealizationCase:
    label: str
    rho: np.ndarray
    unitaries: tuple[np.ndarray, ...]
    test_basis: np.ndarray
    disturbance: float
    lueders_disturbance: float
    uncertainty: float
    naive_bound_bits: float | None
    true_hmin_bits: float

    @property
    def chain_violated(self) -> bool:
        return self.disturbance > self.uncertainty + SLACK

    @property
    def sound(self) -> bool:
        return self.naive_bound_bits is None or self.naive_bound_bits <= self.true_hmin_bits + SLACK


def _realization_case(label, rho, a, us, b) -> RealizationCase:
    post = realized_instrument(a, us, rho)
    lpost = lueders_channel(a, rho)
    q = outcome_distribution(b, rho)
    d = tv_distance(q, outcome_distribution(b, post))
    p = outcome_distribution(a, rho)
    try:
        naive = cert.bound_theorem1(d).bits
    except cert.InconsistentDataError:
        naive = None
    return RealizationCase(
        label=label,
        rho=rho.op,
        unitaries=tuple(us),
        test_basis=np.array(b.basis),
        disturbance=d,
        lueders_disturbance=tv_distance(q, outcome_distribution(b, lpost)),
        uncertainty=collision_uncertainty(p),
        naive_bound_bits=naive,
        true_hmin_bits=max(0.0, -math.log2(float(p.probs.max()))),
    )


def adversarial_realization_demo(seed: int = 0, attempts: int = 20_000) -> list[RealizationCase]:
    """Show how non-Lueders realizations of sigma_z break the disturbance/randomness link.

    Returns the flip example, the identity realization, and the first randomly
    found pure qubit instance where the T1 bound computed from the realized
    disturbance exceeds the true min-entropy.
    """
    from .quantum import KET_ONE, SIGMA_X, SIGMA_Z

    eye = np.eye(2, dtype=complex)
    cases = [
        _realization_case("flip_on_one", KET_ONE, SIGMA_Z, (eye, PAULI_X), SIGMA_X),
        _realization_case("identity", KET_ONE, SIGMA_Z, (eye, eye), SIGMA_X),
    ]
    rng = _rng((seed, 13))
    for _ in range(attempts):
        rho = DensityMatrix.pure(haar_vector(2, rng))
        us = (haar_unitary(2, rng), haar_unitary(2, rng))
        b = Measurement.from_unitary(haar_unitary(2, rng))
        case = _realization_case("searched_counterexample", rho, SIGMA_Z, us, b)
        if not case.sound and case.chain_violated:
            cases.append(case)
            break
    return cases
