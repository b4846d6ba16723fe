"""Simulated annealing over QUBO assignments and the exhaustive feasible oracle."""
from __future__ import annotations

import csv
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np

from .errors import DomainError, ParseError
from .qubo import QuboMatrix, bitstring, decode, incompatible_index_pairs, parse_bitstring

# Reads are annealed in batches so the pre-drawn uniforms stay small.
_READ_BATCH = 128


@dataclass(frozen=True)
class SaParams:
    num_reads: int = 1000
    sweeps_per_read: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if int(self.num_reads) != self.num_reads or self.num_reads < 1:
            raise DomainError(f"num_reads must be a positive integer, got {self.num_reads!r}")
        if int(self.sweeps_per_read) != self.sweeps_per_read or self.sweeps_per_read < 1:
            raise DomainError(f"sweeps_per_read must be a positive integer, got {self.sweeps_per_read!r}")
        if not 0 < self.beta_initial < self.beta_final:
            raise DomainError(
                f"need 0 < beta_initial < beta_final, got {self.beta_initial!r}, {self.beta_final!r}"
            )
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def schedule(self) -> np.ndarray:
        """Inverse temperature of every sweep, geometric from initial to final."""
        return np.geomspace(self.beta_initial, self.beta_final, self.sweeps_per_read)


@dataclass(frozen=True)
class SampleResult:
    assignment: np.ndarray
    objective: float
    frequency: int
    one_hot_ok: bool = True
    pairwise_ok: bool = True

    @property
    def feasible(self) -> bool:
        return self.one_hot_ok and self.pairwise_ok

    @property
    def bits(self) -> str:
        return bitstring(self.assignment)


@dataclass(frozen=True)
class SolveReport:
    samples: tuple[SampleResult, ...]
    params: SaParams
    wall_time: float = 0.0
    read_objectives: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def best(self) -> SampleResult:
        return self.samples[0]

    @property
    def feasible_best(self) -> Optional[SampleResult]:
        return next((s for s in self.samples if s.feasible), None)

    @property
    def most_frequent(self) -> SampleResult:
        return max(self.samples, key=lambda s: (s.frequency, -s.objective))

    def to_dict(self, q: Optional[QuboMatrix] = None, timing: bool = False) -> dict:
        doc = {
            "format": "handqubo-solve-report",
            "version": 1,
            "params": asdict(self.params),
            "samples": [
                {
                    "bits": s.bits,
                    "objective": s.objective,
                    "frequency": s.frequency,
                    "one_hot": s.one_hot_ok,
                    "pairwise": s.pairwise_ok,
                    "selection": decode(s.assignment, q.layout).chosen if q is not None else None,
                }
                for s in self.samples
            ],
            "best": self.best.bits,
            "feasible_best": self.feasible_best.bits if self.feasible_best else None,
        }
        if timing:
            doc["wall_time"] = self.wall_time
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SolveReport":
        try:
            if doc.get("format") != "handqubo-solve-report":
                raise ParseError(f"$.format: expected 'handqubo-solve-report', got {doc.get('format')!r}")
            samples = tuple(
                SampleResult(parse_bitstring(s["bits"]), float(s["objective"]), int(s["frequency"]),
                             bool(s["one_hot"]), bool(s["pairwise"]))
                for s in doc["samples"]
            )
            return cls(samples, SaParams(**doc["params"]), float(doc.get("wall_time", 0.0)))
        except KeyError as exc:
            raise ParseError(f"solve report is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"solve report is malformed: {exc}") from None


def _adjacency(q: QuboMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR neighbour lists holding each off-diagonal coefficient on both endpoints."""
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(q.n)]
    for (p, r), v in sorted(q.offdiag.items()):
        if v != 0.0:
            nbrs[p].append((r, v))
            nbrs[r].append((p, v))
    ptr = np.zeros(q.n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(row) for row in nbrs])
    idx = np.array([j for row in nbrs for j, _ in row], dtype=np.int64)
    val = np.array([v for row in nbrs for _, v in row], dtype=np.float64)
    return ptr, idx, val


@numba.njit(cache=True)
def _anneal_batch(diag, ptr, idx, val, init, uniforms, betas):
    n = diag.size
    out = init.copy()
    local = np.empty(n)
    for r in range(init.shape[0]):
        x = out[r]
        # local[i]: objective change when x[i] goes 0 -> 1 given the other bits
        for i in range(n):
            local[i] = diag[i]
        for i in range(n):
            if x[i]:
                for k in range(ptr[i], ptr[i + 1]):
                    local[idx[k]] += val[k]
        u = 0
        for s in range(betas.size):
            beta = betas[s]
            for i in range(n):
                delta = local[i] if x[i] == 0 else -local[i]
                if delta <= 0.0 or uniforms[r, u] < math.exp(-beta * delta):
                    x[i] = 1 - x[i]
                    sign = 1.0 if x[i] else -1.0
                    for k in range(ptr[i], ptr[i + 1]):
                        local[idx[k]] += sign * val[k]
                u += 1
    return out


def _feasibility(q: QuboMatrix, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized one-hot and pairing flags for an ``(m, n)`` 0/1 array."""
    one_hot = np.ones(x.shape[0], dtype=bool)
    for rng in q.layout.group_ranges.values():
        one_hot &= x[:, rng.start:rng.stop].sum(axis=1) == 1
    clash = np.zeros(x.shape[0], dtype=bool)
    for p, r in incompatible_index_pairs(q.layout):
        clash |= (x[:, p] == 1) & (x[:, r] == 1)
    # pairing is only judged when both groups hold exactly one selection
    ranges = q.layout.group_ranges
    judged = np.ones(x.shape[0], dtype=bool)
    for f in ("ring", "little"):
        if f in ranges:
            judged &= x[:, ranges[f].start:ranges[f].stop].sum(axis=1) == 1
    return one_hot, ~(clash & judged)


def anneal_reads(q: QuboMatrix, p: SaParams, first_read: int = 0) -> np.ndarray:
    """Final assignment of every read; read r uses a generator seeded with seed + r."""
    ptr, idx, val = _adjacency(q)
    betas = p.schedule()
    n_flips = p.sweeps_per_read * q.n
    finals = []
    for start in range(first_read, first_read + p.num_reads, _READ_BATCH):
        stop = min(start + _READ_BATCH, first_read + p.num_reads)
        init = np.empty((stop - start, q.n), dtype=np.int8)
        uniforms = np.empty((stop - start, n_flips))
        for k, read in enumerate(range(start, stop)):
            rng = np.random.default_rng(p.seed + read)
            init[k] = rng.integers(0, 2, q.n, dtype=np.int8)
            uniforms[k] = rng.random(n_flips)
        finals.append(_anneal_batch(q.diag, ptr, idx, val, init, uniforms, betas))
    return np.concatenate(finals)


def simulated_anneal(q: QuboMatrix, p: SaParams) -> SolveReport:
    t0 = time.perf_counter()
    finals = anneal_reads(q, p)
    read_obj = q.objectives(finals)
    groups: dict[bytes, list] = {}
    for r, x in enumerate(finals):
        key = x.tobytes()
        if key in groups:
            groups[key][1] += 1
        else:
            groups[key] = [r, 1]
    keys = list(groups)
    uniq = np.array([np.frombuffer(k, dtype=np.int8) for k in keys])
    # exact re-evaluation of each distinct assignment
    objs = [q.objective(x) for x in uniq]
    one_hot, pairwise = _feasibility(q, uniq)
    samples = [
        SampleResult(uniq[k].copy(), objs[k], groups[key][1], bool(one_hot[k]), bool(pairwise[k]))
        for k, key in enumerate(keys)
    ]
    samples.sort(key=lambda s: (s.objective, s.bits))
    return SolveReport(tuple(samples), p, time.perf_counter() - t0, read_obj)


@dataclass(frozen=True)
class OracleResult:
    assignment: np.ndarray
    objective: float
    feasible_count: int
    one_hot_count: int


def one_hot_assignments(q: QuboMatrix) -> np.ndarray:
    """Every assignment with exactly one selection per group, in lexicographic order."""
    ranges = list(q.layout.group_ranges.values())
    combos = list(itertools.product(*[list(r) for r in ranges]))
    x = np.zeros((len(combos), q.n), dtype=np.int8)
    for k, combo in enumerate(combos):
        x[k, list(combo)] = 1
    # lexicographic order on the bit vectors themselves
    order = np.lexsort(x.T[::-1])
    return x[order]


def exhaustive_feasible_min(q: QuboMatrix, catalog=None) -> OracleResult:
    if catalog is not None:
        for f, rng in q.layout.group_ranges.items():
            if len(catalog.family(f)) != len(rng):
                raise DomainError(f"layout group {f} has {len(rng)} ids, catalog has {len(catalog.family(f))}")
    x = one_hot_assignments(q)
    _, pairwise = _feasibility(q, x)
    feasible = x[pairwise]
    objs = np.array([q.objective(a) for a in feasible])
    best = int(np.argmin(objs))  # first minimum is the lexicographically smallest
    return OracleResult(feasible[best].copy(), float(objs[best]), len(feasible), len(x))


@dataclass(frozen=True)
class BandRow:
    nor: int
    runs: tuple[float, ...]

    @property
    def minimum(self) -> float:
        return min(self.runs)

    @property
    def maximum(self) -> float:
        return max(self.runs)

    @property
    def mean(self) -> float:
        return math.fsum(self.runs) / len(self.runs)

    @property
    def width(self) -> float:
        return self.maximum - self.minimum


def run_seed(base_seed: int, nor_index: int, run: int) -> int:
    state = np.random.SeedSequence([base_seed, nor_index, run]).generate_state(1, np.uint64)[0]
    return int(state) >> 1


def band_statistics(
    q: QuboMatrix,
    nor_list: Sequence[int],
    runs_per_nor: int,
    base_seed: int = 0,
    template: Optional[SaParams] = None,
) -> list[BandRow]:
    """Best objective of ``runs_per_nor`` independent SA runs for each number of reads."""
    if runs_per_nor < 1:
        raise DomainError(f"runs_per_nor must be >= 1, got {runs_per_nor}")
    if not nor_list:
        raise DomainError("empty list of read counts")
    template = template or SaParams()
    rows = []
    for k, nor in enumerate(nor_list):
        best = []
        for run in range(runs_per_nor):
            params = SaParams(nor, template.sweeps_per_read, template.beta_initial,
                              template.beta_final, run_seed(base_seed, k, run))
            best.append(simulated_anneal(q, params).best.objective)
        rows.append(BandRow(int(nor), tuple(best)))
    return rows


def write_band_csv(path, rows: Sequence[BandRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nor", "run", "best_objective"])
        for row in rows:
            for run, value in enumerate(row.runs):
                w.writerow([row.nor, run, repr(value)])


def read_band_csv(path) -> list[BandRow]:
    runs: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["nor", "run", "best_objective"]:
            raise ParseError(f"{path}: line 1: expected header nor,run,best_objective")
        for lineno, rec in enumerate(reader, start=2):
            try:
                runs.setdefault(int(rec["nor"]), []).append(float(rec["best_objective"]))
            except (TypeError, ValueError):
                raise ParseError(f"{path}: line {lineno}: malformed row") from None
    return [BandRow(nor, tuple(v)) for nor, v in runs.items()]


@dataclass(frozen=True)
class DominanceReport:
    feasible_min: float
    lowest_infeasible: float
    lowest_assignment: np.ndarray
    trials: int
    descents: int

    @property
    def undercuts(self) -> bool:
        return self.lowest_infeasible < self.feasible_min

    def to_dict(self) -> dict:
        return {
            "feasible_min": self.feasible_min,
            "lowest_infeasible": self.lowest_infeasible,
            "lowest_assignment": bitstring(self.lowest_assignment),
            "undercuts": self.undercuts,
            "trials": self.trials,
            "descents": self.descents,
        }


def _greedy_infeasible_descent(q: QuboMatrix, start: np.ndarray) -> tuple[np.ndarray, float]:
    """Steepest single-flip descent that never leaves the infeasible region."""
    x = start.copy()
    current = q.objective(x)
    while True:
        neighbours = np.repeat(x[None], q.n, axis=0)
        neighbours[np.arange(q.n), np.arange(q.n)] ^= 1
        one_hot, pairwise = _feasibility(q, neighbours)
        objs = q.objectives(neighbours)
        objs[one_hot & pairwise] = np.inf
        k = int(np.argmin(objs))
        if not objs[k] < current:
            return x, current
        x, current = neighbours[k], float(objs[k])


def infeasible_dominance_check(
    q: QuboMatrix,
    feasible_min: float,
    trials: int,
    seed: int = 0,
    start: Optional[np.ndarray] = None,
    chunk: int = 100_000,
) -> DominanceReport:
    """Search for constraint-violating assignments that beat the feasible minimum.

    Half of the random trials are uniform bit vectors, half are one-hot
    assignments with one to three random bit flips.  Greedy descents start from
    every single-flip neighbour of ``start`` (the feasible minimizer).
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    ranges = list(q.layout.group_ranges.values())
    best_val, best_x = math.inf, None
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = rng.integers(0, 2, (m, q.n), dtype=np.int8)
        near = np.arange(m) % 2 == 1
        k = int(near.sum())
        if k:
            y = np.zeros((k, q.n), dtype=np.int8)
            for rg in ranges:
                y[np.arange(k), rng.integers(rg.start, rg.stop, k)] = 1
            for _ in range(3):
                flip = rng.integers(0, q.n, k)
                active = rng.random(k) < 0.7
                y[np.arange(k)[active], flip[active]] ^= 1
            y[np.arange(k), rng.integers(0, q.n, k)] ^= 1
            x[near] = y
        one_hot, pairwise = _feasibility(q, x)
        x = x[~(one_hot & pairwise)]
        if len(x):
            objs = q.objectives(x)
            j = int(np.argmin(objs))
            if objs[j] < best_val:
                best_val, best_x = float(objs[j]), x[j].copy()
        done += m

    descents = 0
    if start is not None:
        for i in range(q.n):
            s = np.asarray(start, dtype=np.int8).copy()
            s[i] ^= 1
            one_hot, pairwise = _feasibility(q, s[None])
            if one_hot[0] and pairwise[0]:
                continue
            x, val = _greedy_infeasible_descent(q, s)
            descents += 1
            if val < best_val:
                best_val, best_x = val, x
    if best_x is None:
        best_x = np.zeros(q.n, dtype=np.int8)
    return DominanceReport(feasible_min, best_val, best_x, trials, descents)


def write_report_json(path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
