"""Bulk classification of basis-permutation gates.

A census enumerates permutation gates on ``H1 (x) H2`` (all of them in
lexicographic order, or a seeded sample of distinct ones), classifies each
with the discontinuity prober, and appends one JSON record per gate to a
JSONL file whose first line is a header carrying a hash of the semantic
configuration.  Runs are resumable: a rerun with ``resume=True`` verifies
the header hash, skips gates already recorded, and repairs a partial
trailing line left by an interrupted write.  Records are written in
enumeration order regardless of worker count, so reruns produce identical
files apart from per-record wall times.
"""

import itertools
import json
import hashlib
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discontinuity import DEFAULT_EPSILONS, JUMP_TOL, VERDICTS, classify
from .states import UnitaryGate

__all__ = [
    "CensusConfig",
    "CensusRecord",
    "CensusSummary",
    "CensusFileError",
    "enumerate_permutation_gates",
    "run_census",
    "summarize",
]

EXHAUSTIVE_CAP = 40_320  # 8!


class CensusFileError(Exception):
    """A census file is missing, corrupt, or does not match the config."""


@dataclass
class CensusConfig:
    dim1: int
    dim2: int
    mode: str = "exhaustive"
    sample_size: int = 0
    seed: int = 0
    strategy: str = "vertex_pairs"
    epsilons: tuple = DEFAULT_EPSILONS
    jump_tol: float = JUMP_TOL
    max_refinements: int = 1
    workers: int = 1
    out_path: str = "census.jsonl"
    exhaustive_cap: int = EXHAUSTIVE_CAP

    def __post_init__(self):
        if self.dim1 < 1 or self.dim2 < 1:
            raise ValueError("factor dimensions must be positive")
        if self.mode not in ("exhaustive", "sample"):
            raise ValueError(f"unknown census mode {self.mode!r}")
        total = math.factorial(self.dim1 * self.dim2)
        if self.mode == "exhaustive" and total > self.exhaustive_cap:
            raise ValueError(
                f"exhaustive census of {total} gates exceeds the cap "
                f"{self.exhaustive_cap}; use sample mode"
            )
        if self.mode == "sample":
            if self.sample_size < 1:
                raise ValueError("sample mode needs sample_size >= 1")
            if self.sample_size > total:
                raise ValueError(f"sample_size {self.sample_size} exceeds {total} gates")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.epsilons = tuple(float(e) for e in self.epsilons)

    def semantics(self):
        """The fields that determine census content (not where/how it runs)."""
        return {
            "dim1": self.dim1,
            "dim2": self.dim2,
            "mode": self.mode,
            "sample_size": self.sample_size,
            "seed": self.seed,
            "strategy": self.strategy,
            "epsilons": list(self.epsilons),
            "jump_tol": self.jump_tol,
            "max_refinements": self.max_refinements,
        }

    def config_hash(self):
        blob = json.dumps(self.semantics(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_json(self):
        obj = self.semantics()
        obj.update(
            workers=self.workers,
            out_path=self.out_path,
            exhaustive_cap=self.exhaustive_cap,
        )
        return obj

    @classmethod
    def from_json(cls, obj):
        kwargs = dict(obj)
        if "epsilons" in kwargs:
            kwargs["epsilons"] = tuple(kwargs["epsilons"])
        return cls(**kwargs)


@dataclass
class CensusRecord:
    permutation: tuple
    verdict: str
    sigma_jump: float
    rho_hat_jump: float
    wall_time: float
    witness_digest: str

    def to_json(self):
        return {
            "permutation": list(self.permutation),
            "verdict": self.verdict,
            "sigma_jump": self.sigma_jump,
            "rho_hat_jump": self.rho_hat_jump,
            "wall_time": self.wall_time,
            "witness_digest": self.witness_digest,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            permutation=tuple(int(i) for i in obj["permutation"]),
            verdict=str(obj["verdict"]),
            sigma_jump=float(obj["sigma_jump"]),
            rho_hat_jump=float(obj["rho_hat_jump"]),
            wall_time=float(obj["wall_time"]),
            witness_digest=str(obj["witness_digest"]),
        )


@dataclass
class CensusSummary:
    total: int
    fraction_physical: float
    fraction_ephemeral_or_physical: float
    fraction_continuous_witnessed_none: float
    counts: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "total": self.total,
            "fraction_physical": self.fraction_physical,
            "fraction_ephemeral_or_physical": self.fraction_ephemeral_or_physical,
            "fraction_continuous_witnessed_none": self.fraction_continuous_witnessed_none,
            "counts": dict(self.counts),
        }


def _permutation_tuples(dim1, dim2, mode, sample_size, seed, cap):
    d = dim1 * dim2
    total = math.factorial(d)
    if mode == "exhaustive":
        if total > cap:
            raise ValueError(f"exhaustive enumeration of {total} gates exceeds cap {cap}")
        return list(itertools.permutations(range(d)))
    if sample_size > total:
        raise ValueError(f"cannot sample {sample_size} distinct gates from {total}")
    rng = np.random.default_rng(seed)
    seen = set()
    out = []
    while len(out) < sample_size:
        p = tuple(int(i) for i in rng.permutation(d))
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def enumerate_permutation_gates(
    dim1, dim2, mode="exhaustive", sample_size=0, seed=0, cap=EXHAUSTIVE_CAP
):
    """Yield permutation gates, lexicographic or seeded distinct sample."""
    for p in _permutation_tuples(dim1, dim2, mode, sample_size, seed, cap):
        yield UnitaryGate.from_permutation(dim1, dim2, p)


def _classify_one(args):
    perm, cfg = args
    gate = UnitaryGate.from_permutation(cfg["dim1"], cfg["dim2"], perm)
    t0 = time.perf_counter()
    cls = classify(
        gate,
        strategy=cfg["strategy"],
        epsilons=cfg["epsilons"],
        jump_tol=cfg["jump_tol"],
        seed=cfg["seed"],
        max_refinements=cfg["max_refinements"],
    )
    wall = time.perf_counter() - t0
    return CensusRecord(
        permutation=tuple(perm),
        verdict=cls.verdict,
        sigma_jump=cls.sigma_jump,
        rho_hat_jump=cls.rho_hat_jump,
        wall_time=wall,
        witness_digest=cls.witness_digest(),
    )


def _read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _load_existing(path, config, repair=False):
    """Header check plus the set of permutations already recorded.

    With ``repair=True`` an unparseable final line (an interrupted append)
    is truncated away; corruption anywhere else always raises.
    """
    lines = _read_lines(path)
    if not lines:
        return set()
    try:
        header = json.loads(lines[0])
        stored_hash = header["config_hash"]
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        raise CensusFileError(f"{path} line 1: bad census header ({exc})") from exc
    if stored_hash != config.config_hash():
        raise CensusFileError(
            f"{path} was produced by a different configuration "
            f"({stored_hash[:12]}... != {config.config_hash()[:12]}...)"
        )
    done = set()
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = CensusRecord.from_json(json.loads(line))
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            if repair and i == len(lines):
                keep = "\n".join(lines[:-1]) + "\n"
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(keep)
                break
            raise CensusFileError(f"{path} line {i}: corrupt record ({exc})") from exc
        done.add(rec.permutation)
    return done


def run_census(config, resume=False):
    """Run (or continue) a census and return its summary.

    A fresh run refuses to touch an existing output file unless
    ``resume=True``; resuming verifies the header hash and classifies only
    gates without a record yet.  Rerunning a finished census is a no-op.
    """
    path = config.out_path
    perms = _permutation_tuples(
        config.dim1, config.dim2, config.mode, config.sample_size, config.seed,
        config.exhaustive_cap,
    )

    done = set()
    if os.path.exists(path) and os.path.getsize(path) > 0:
        if not resume:
            raise CensusFileError(f"{path} exists; resume or remove it first")
        done = _load_existing(path, config, repair=True)
    else:
        header = {
            "kind": "ctckit-census",
            "version": 1,
            "config_hash": config.config_hash(),
            "config": config.to_json(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")

    todo = [p for p in perms if p not in done]
    cfg = {
        "dim1": config.dim1,
        "dim2": config.dim2,
        "strategy": config.strategy,
        "epsilons": config.epsilons,
        "jump_tol": config.jump_tol,
        "seed": config.seed,
        "max_refinements": config.max_refinements,
    }
    args = [(p, cfg) for p in todo]

    with open(path, "a", encoding="utf-8") as fh:
        if config.workers > 1 and todo:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                for rec in pool.map(_classify_one, args):
                    fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
                    fh.flush()
        else:
            for a in args:
                rec = _classify_one(a)
                fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
                fh.flush()

    return summarize(path)


def summarize(path):
    """Verdict counts and fractions for a census file.

    Duplicate records for a permutation are counted once.  Raises
    :class:`CensusFileError` with a line number on any corrupt line.
    """
    if not os.path.exists(path):
        raise CensusFileError(f"{path} does not exist")
    lines = _read_lines(path)
    if not lines:
        return CensusSummary(0, 0.0, 0.0, 0.0, {v: 0 for v in VERDICTS})
    try:
        json.loads(lines[0])["config_hash"]
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        raise CensusFileError(f"{path} line 1: bad census header ({exc})") from exc

    by_perm = {}
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = CensusRecord.from_json(json.loads(line))
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise CensusFileError(f"{path} line {i}: corrupt record ({exc})") from exc
        if rec.verdict not in VERDICTS:
            raise CensusFileError(f"{path} line {i}: unknown verdict {rec.verdict!r}")
        by_perm.setdefault(rec.permutation, rec)

    counts = {v: 0 for v in VERDICTS}
    for rec in by_perm.values():
        counts[rec.verdict] += 1
    total = len(by_perm)
    if total == 0:
        return CensusSummary(0, 0.0, 0.0, 0.0, counts)
    n_phys = counts["physical"]
    n_eph = counts["ephemeral"]
    n_none = counts["continuous_witnessed_none"]
    return CensusSummary(
        total=total,
        fraction_physical=n_phys / total,
        fraction_ephemeral_or_physical=(n_phys + n_eph) / total,
        fraction_continuous_witnessed_none=n_none / total,
        counts=counts,
    )
