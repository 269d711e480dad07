"""Command-line front end: ``collapse-rng {simulate,certify,verify,figure2,figure3}``.

Configs are JSON documents.  See README.md for the grammar.  CSV output uses
``.`` as decimal separator, six significant digits and LF line endings, so a
given (config, seed) always yields byte-identical files.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 data inconsistent with the declared trust level.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import certifier as cert
from . import oracle
from . import protocol as proto
from .quantum import (
    KET_MINUS,
    KET_ONE,
    KET_PLUS,
    KET_ZERO,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    Measurement,
    MeasurementKind,
    overlap_matrix,
    rotated_qubit_basis,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONSISTENT = 3


class ConfigError(ValueError):
    pass


# -- number formatting --------------------------------------------------------


def fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    s = f"{float(x):.6g}"
    if s == "-0":
        s = "0"
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]], trailer: Sequence[str] = ()) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    lines += list(trailer)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# -- config parsing -----------------------------------------------------------

STATE_PRESETS = {
    "zero": KET_ZERO,
    "one": KET_ONE,
    "plus": KET_PLUS,
    "minus": KET_MINUS,
    "mixed:I/2": DensityMatrix.maximally_mixed(2),
}

MEASUREMENT_PRESETS = {"sigmaz": SIGMA_Z, "sigmax": SIGMA_X, "sigmay": SIGMA_Y}

TRUST_NAMES = {k.value: k for k in cert.TrustKind}


@dataclass
class RunConfig:
    scenario: proto.Scenario
    trust: cert.TrustLevel
    noise: cert.NoiseParams
    source: str = "analytic"
    budget: int = 1000
    out_dir: Path = field(default_factory=lambda: Path("."))


def _complex(entry: Any, key: str) -> complex:
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return complex(entry)
    if isinstance(entry, str):
        try:
            return complex(entry.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(f"{key}: cannot read {entry!r} as a complex number")


def _matrix(value: Any, key: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(f"{key}: expected a row-major list of rows")
    n = len(value)
    if any(len(r) != n for r in value):
        raise ConfigError(f"{key}: matrix is not square")
    return np.array([[_complex(x, key) for x in row] for row in value])


def _vector(value: Any, key: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected a list")
    return np.array([_complex(x, key) for x in value])


def _wrap(key: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def parse_state(value: Any, key: str = "state") -> DensityMatrix:
    if isinstance(value, str):
        if value not in STATE_PRESETS:
            raise ConfigError(f"{key}: unknown preset {value!r}; choose from {sorted(STATE_PRESETS)}")
        return STATE_PRESETS[value]
    if isinstance(value, dict):
        if "bloch" in value:
            return _wrap(key, DensityMatrix.from_bloch, [float(x) for x in value["bloch"]])
        if "vector" in value:
            return _wrap(key, DensityMatrix.pure, _vector(value["vector"], f"{key}.vector"))
        if "matrix" in value:
            return _wrap(key, DensityMatrix, _matrix(value["matrix"], f"{key}.matrix"))
    raise ConfigError(f"{key}: expected a preset name or an object with bloch/vector/matrix")


def parse_measurement(value: Any, key: str) -> Measurement:
    if isinstance(value, str):
        if value not in MEASUREMENT_PRESETS:
            raise ConfigError(f"{key}: unknown preset {value!r}; choose from {sorted(MEASUREMENT_PRESETS)}")
        return MEASUREMENT_PRESETS[value]
    if isinstance(value, dict):
        if "angle" in value:
            return _wrap(key, rotated_qubit_basis, float(value["angle"]), float(value.get("phase", 0.0)))
        if "overlap" in value:
            c = float(value["overlap"])
            if not 0.0 <= c <= 1.0:
                raise ConfigError(f"{key}.overlap: {c} outside [0, 1]")
            return rotated_qubit_basis(2 * math.acos(math.sqrt(c)), float(value.get("phase", 0.0)))
        if "basis" in value:
            vecs = [_vector(v, f"{key}.basis") for v in value["basis"]]
            return _wrap(key, Measurement.from_basis, vecs)
        if "effects" in value:
            effects = tuple(_matrix(e, f"{key}.effects") for e in value["effects"])
            kind = value.get("kind", "general")
            try:
                kind = MeasurementKind(kind)
            except ValueError:
                raise ConfigError(f"{key}.kind: unknown kind {kind!r}") from None
            if kind is MeasurementKind.RANK_ONE_PROJECTIVE:
                raise ConfigError(f"{key}: give rank-one projective measurements as a basis")
            return _wrap(key, Measurement, effects, kind)
    raise ConfigError(f"{key}: expected a preset name or an object with angle/overlap/basis/effects")


def _realization(value: Any, m: Measurement, eps_a: float | None) -> proto.InstrumentSpec:
    key = "realization"
    eps = 0.0 if eps_a is None else eps_a
    if value is None or value == "lueders":
        return _wrap(key, proto.InstrumentSpec, m, proto.IdealLueders(), eps)
    if isinstance(value, dict):
        if "unitaries" in value:
            us = tuple(_matrix(u, f"{key}.unitaries") for u in value["unitaries"])
            return _wrap(key, lambda: proto.InstrumentSpec(m, proto.RealizationUnitaries(us), eps))
        if "depolarizing" in value:
            return _wrap(key, proto.depolarized_lueders, m, float(value["depolarizing"]), eps_a)
        if "amplitude_damping" in value:
            if m.dim != 2:
                raise ConfigError(f"{key}.amplitude_damping: qubit only")
            return _wrap(key, proto.amplitude_damped_lueders, m, float(value["amplitude_damping"]), eps_a)
        if "kraus" in value:
            ks = tuple(_matrix(k, f"{key}.kraus") for k in value["kraus"])
            return _wrap(key, lambda: proto.InstrumentSpec(m, proto.NoisyChannel(ks), eps))
    raise ConfigError(f"{key}: expected 'lueders' or an object with unitaries/depolarizing/amplitude_damping/kraus")


def _number(doc: dict, key: str, default: Any, kind=float):
    value = doc.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


KNOWN_KEYS = {
    "state", "measurement_a", "measurement_b", "realization", "real_effects_b",
    "epsilon_a", "epsilon_b", "n", "n_u", "seed", "trust", "source", "budget", "out",
}


def parse_config(text: str, seed: int | None = None, out_dir: str | Path | None = None) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")

    rho = parse_state(doc.get("state", "plus"))
    a = parse_measurement(doc.get("measurement_a", "sigmaz"), "measurement_a")
    b = parse_measurement(doc.get("measurement_b", "sigmax"), "measurement_b")
    eps_a = _number(doc, "epsilon_a", None)
    eps_b = _number(doc, "epsilon_b", 0.0)
    inst = _realization(doc.get("realization"), a, eps_a)
    real_b = doc.get("real_effects_b")
    real_b = None if real_b is None else tuple(_matrix(e, "real_effects_b") for e in real_b)
    test = _wrap("real_effects_b", proto.TestMeasurementSpec, b, real_b, eps_b)

    n = _number(doc, "n", 10_000, int)
    n_u = _number(doc, "n_u", None, int)
    if n_u is None:
        n_u = math.ceil(math.sqrt(n))
    seed_val = seed if seed is not None else _number(doc, "seed", 0, int)
    scenario = _wrap("n", proto.Scenario, rho, inst, test, n, n_u, seed_val)

    trust_name = doc.get("trust")
    if trust_name is None:
        both_qubit_bases = (
            a.dim == 2 and a.kind is MeasurementKind.RANK_ONE_PROJECTIVE
            and b.kind is MeasurementKind.RANK_ONE_PROJECTIVE
        )
        trust_name = "trusted_von_neumann" if both_qubit_bases else (
            "projective" if a.is_projective else "untrusted_povm"
        )
    if trust_name not in TRUST_NAMES:
        raise ConfigError(f"trust: unknown level {trust_name!r}; choose from {sorted(TRUST_NAMES)}")
    kind = TRUST_NAMES[trust_name]
    if kind is cert.TrustKind.TRUSTED_VON_NEUMANN:
        if a.kind is not MeasurementKind.RANK_ONE_PROJECTIVE or b.kind is not MeasurementKind.RANK_ONE_PROJECTIVE:
            raise ConfigError("trust: trusted_von_neumann needs basis measurements for A and B")
        trust = _wrap("trust", cert.TrustLevel.trusted, overlap_matrix(a, b))
    else:
        if kind is cert.TrustKind.PROJECTIVE_UNCHARACTERIZED and not a.is_projective:
            raise ConfigError("trust: projective level declared but measurement_a is a general POVM")
        trust = cert.TrustLevel(kind)
    noise = _wrap("epsilon_a", cert.NoiseParams, inst.epsilon_a, test.epsilon_b)

    source = doc.get("source", "analytic")
    if source not in ("analytic", "simulate"):
        raise ConfigError(f"source: expected 'analytic' or 'simulate', got {source!r}")
    budget = _number(doc, "budget", 1000, int)
    out = Path(out_dir) if out_dir is not None else Path(doc.get("out", "."))
    return RunConfig(scenario, trust, noise, source, budget, out)


# -- commands -----------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    stats = proto.run_protocol(cfg.scenario)
    rows = []
    for path, counts, dist in (
        ("upper", stats.counts_q, stats.q_hat),
        ("lower", stats.counts_q_prime, stats.q_prime_hat),
    ):
        rows += [(path, str(j), int(c), f) for j, (c, f) in enumerate(zip(counts, dist))]
    write_csv(cfg.out_dir / "stats.csv", ("path", "outcome", "count", "freq"), rows, [f"d_hat,{fmt(stats.d_hat)}"])
    print(f"d_hat = {fmt(stats.d_hat)}  (n={cfg.scenario.n}, n_u={cfg.scenario.n_u}, seed={cfg.scenario.seed})")
    return EXIT_OK


def certification(cfg: RunConfig) -> list[cert.CertBound]:
    if cfg.source == "simulate":
        stats = proto.run_protocol(cfg.scenario)
        q, qp, d = stats.q_hat, stats.q_prime_hat, stats.d_hat
    else:
        q, qp, d = proto.analytic_statistics(cfg.scenario)
    n_a = cfg.scenario.instrument_a.measurement.n_outcomes
    return cert.certify(q, qp, d, cfg.trust, cfg.noise, n_a)


def cmd_certify(cfg: RunConfig) -> int:
    bounds = certification(cfg)
    best = cert.best_bound(bounds)
    rows = [(b.theorem.value, b.disturbance_used, b.tau, b.adjusted, b.bits) for b in bounds]
    rows.append(("best", best.disturbance_used, best.tau, best.adjusted, best.bits))
    write_csv(cfg.out_dir / "cert.csv", ("theorem", "disturbance", "tau", "adjusted", "bits"), rows)
    for b in bounds:
        print(f"{b.theorem.value:>20}  {fmt(b.bits)} bits")
    print(f"{'best':>20}  {fmt(best.bits)} bits ({best.theorem.value})")
    return EXIT_OK


def cmd_verify(instances: int, dims: Sequence[int], seed: int, out_dir: Path | None = None) -> int:
    reports = oracle.verify_lemma_chains(instances, dims, seed)
    reports.update(oracle.verify_bound_orderings(instances, seed))
    reports.update(oracle.verify_soundness(instances, seed))
    rows = []
    for name, r in reports.items():
        slack = min(r.min_slack) if r.min_slack else float("nan")
        rows.append((name, r.instances, r.violations, r.max_violation, slack))
        status = "ok" if r.ok else "FAIL"
        print(f"{name:>24}  {status:4}  instances={r.instances}  violations={r.violations}  "
              f"max_violation={fmt(r.max_violation)}  min_slack={fmt(slack)}")
    worked = oracle.chain_von_neumann(KET_PLUS, SIGMA_Z, SIGMA_X)
    print(f"worked example von_neumann chain: {fmt(worked[0])} >= {fmt(worked[1])}")
    if out_dir is not None:
        write_csv(out_dir / "verify.csv", ("chain", "instances", "violations", "max_violation", "min_slack"), rows)
    return EXIT_OK if all(r.ok for r in reports.values()) else EXIT_VERIFY_FAILED


def figure2_grid(c00: float, steps: int) -> list[float]:
    """Uniform grid over the T1 domain; from two steps up, also the T2 and T3 domain edges."""
    grid = set(np.linspace(0.0, math.sqrt(2) / 2, steps + 1).tolist())
    if steps > 1:
        grid |= {0.5, cert.figure2_tau_edge(c00)}
    return sorted(grid)


def cmd_figure2(c00: float, steps: int, out_dir: Path) -> int:
    rows = cert.sweep_figure2(c00, figure2_grid(c00, steps))
    write_csv(
        out_dir / "fig2.csv",
        ("d", "thm1_bits", "thm2_bits", "thm3_bits"),
        [(r.d, r.thm1_bits, r.thm2_bits, r.thm3_bits) for r in rows],
    )
    return EXIT_OK


def cmd_figure3(c: float, steps: int, budget: int, out_dir: Path, seed: int = 0) -> int:
    rows = cert.sweep_figure3(c, cert.figure3_grid(steps), budget, seed)
    write_csv(
        out_dir / "fig3.csv",
        ("q0", "baseline_bits", "kl_min_bits", "kl_max_bits"),
        [(r.q0, r.baseline_bits, r.kl_min_bits, r.kl_max_bits) for r in rows],
    )
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def _dims(text: str) -> list[int]:
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}") from None
    if not dims or any(not 2 <= d <= 8 for d in dims):
        raise argparse.ArgumentTypeError("dimensions must lie in 2..8")
    return dims


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collapse-rng", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        if config:
            p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=_u64, default=None)
        p.add_argument("--out", default=None, help="output directory")

    common(sub.add_parser("simulate", help="run the two-path protocol and write stats.csv"), config=True)
    common(sub.add_parser("certify", help="write certified bounds to cert.csv"), config=True)
    p = sub.add_parser("verify", help="numerically check the inequality chains")
    common(p)
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--dims", type=_dims, default=[2, 3, 4])
    p = sub.add_parser("figure2", help="T1/T2/T3 against disturbance -> fig2.csv")
    common(p)
    p.add_argument("--c00", type=float, default=0.75)
    p.add_argument("--steps", type=int, default=100)
    p = sub.add_parser("figure3", help="KL extremes against the baseline -> fig3.csv")
    common(p)
    p.add_argument("--c", type=float, default=0.62)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--budget", type=int, default=1000)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out_dir = Path(args.out) if args.out is not None else None
    try:
        if args.command in ("simulate", "certify"):
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            cfg = parse_config(text, seed=args.seed, out_dir=out_dir)
            return cmd_simulate(cfg) if args.command == "simulate" else cmd_certify(cfg)
        seed = args.seed if args.seed is not None else 0
        out = out_dir if out_dir is not None else Path(".")
        if args.command == "verify":
            if args.instances < 1:
                raise ConfigError("--instances must be >= 1")
            return cmd_verify(args.instances, args.dims, seed, out_dir)
        if args.steps < 1:
            raise ConfigError("--steps must be >= 1")
        if args.command == "figure2":
            if not 0.5 < args.c00 < 1.0:
                raise ConfigError("--c00 must lie in (1/2, 1)")
            return cmd_figure2(args.c00, args.steps, out)
        if not 0.5 < args.c < 1.0:
            raise ConfigError("--c must lie in (1/2, 1)")
        if args.budget < 1:
            raise ConfigError("--budget must be >= 1")
        return cmd_figure3(args.c, args.steps, args.budget, out, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cert.InconsistentDataError as exc:
        print(f"inconsistent data: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except cert.UnsupportedConfigurationError as exc:
        print(f"unsupported configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
