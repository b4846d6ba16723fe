"""Assembly, evaluation and exchange formats of the 27-variable design QUBO.

Objective (to be minimized) over binary v:

    f(v) = sum_p Q_pp v_p + sum_{p<q} Q_pq v_p v_q

Each one-hot group g contributes ``lam_g (sum v - 1)^2``; with ``v^2 = v`` this
becomes ``-lam_g`` on every diagonal entry, ``+2 lam_g`` on every pair inside the
group and a constant ``+lam_g``.  The constants are kept out of the matrix and
reported as ``constant_offset``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .catalog import FAMILY_SIZES, FINGERS, PREFIX, compatibility
from .errors import ConstructionError, DomainError, ParseError

_FINGER_OF_PREFIX = {v: k for k, v in PREFIX.items()}


@dataclass(frozen=True)
class PenaltyConfig:
    lambda_t: float = 14.0
    lambda_i: float = 4.0
    lambda_m: float = 12.0
    lambda_r: float = 8.0
    lambda_l: float = 16.0
    lambda_rl: float = 24.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be positive, got {value!r}")

    @classmethod
    def from_family_sizes(cls, sizes: Optional[dict[str, int]] = None) -> "PenaltyConfig":
        """Twice the family size for each one-hot group; ring + little for the pair term."""
        sizes = sizes or FAMILY_SIZES
        lam = {f: 2.0 * sizes[f] for f in FINGERS}
        return cls(lam["thumb"], lam["index"], lam["middle"], lam["ring"], lam["little"],
                   lam["ring"] + lam["little"])

    def group(self, finger: str) -> float:
        return getattr(self, f"lambda_{PREFIX[finger]}")

    @property
    def one_hot_total(self) -> float:
        return sum(self.group(f) for f in FINGERS)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> "PenaltyConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown penalty field(s): {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class VariableLayout:
    order: tuple[str, ...]

    def __post_init__(self):
        order = tuple(self.order)
        object.__setattr__(self, "order", order)
        if len(set(order)) != len(order):
            raise DomainError("layout ids must be unique")
        seen = []
        for cid in order:
            f = finger_of(cid)
            if seen and seen[-1] != f and f in seen:
                raise DomainError(f"layout group {f!r} is not contiguous")
            if not seen or seen[-1] != f:
                seen.append(f)

    @classmethod
    def default(cls) -> "VariableLayout":
        return cls(tuple(f"{PREFIX[f]}{v}" for f in FINGERS for v in range(1, FAMILY_SIZES[f] + 1)))

    @classmethod
    def from_families(cls, families: dict[str, list[str]]) -> "VariableLayout":
        return cls(tuple(cid for f in FINGERS for cid in families.get(f, [])))

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def group_ranges(self) -> dict[str, range]:
        ranges = {}
        for p, cid in enumerate(self.order):
            f = finger_of(cid)
            start = ranges[f].start if f in ranges else p
            ranges[f] = range(start, p + 1)
        return ranges

    def index(self, cid: str) -> int:
        return self.order.index(cid)


def finger_of(cid: str) -> str:
    try:
        return _FINGER_OF_PREFIX[cid[0]]
    except (KeyError, IndexError):
        raise DomainError(f"cannot tell the finger of candidate id {cid!r}") from None


def variant_of(cid: str) -> int:
    return int(cid[1:])


def incompatible_index_pairs(layout: VariableLayout) -> list[tuple[int, int]]:
    ranges = layout.group_ranges
    if "ring" not in ranges or "little" not in ranges:
        return []
    pairs = []
    for p in ranges["ring"]:
        for q in ranges["little"]:
            if not compatibility(variant_of(layout.order[p]), variant_of(layout.order[q])):
                pairs.append((min(p, q), max(p, q)))
    return pairs


@dataclass(frozen=True)
class QuboMatrix:
    diag: np.ndarray
    offdiag: dict[tuple[int, int], float]
    layout: VariableLayout
    penalties: PenaltyConfig
    constant_offset: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        object.__setattr__(self, "diag", diag)
        if diag.shape != (self.layout.n,):
            raise DomainError(f"diagonal has length {diag.size}, layout has {self.layout.n} ids")
        for p, q in self.offdiag:
            if not 0 <= p < q < self.layout.n:
                raise DomainError(f"off-diagonal entry ({p}, {q}) is not strictly upper triangular")

    @property
    def n(self) -> int:
        return self.layout.n

    def upper(self) -> np.ndarray:
        """Dense upper-triangular matrix with the diagonal on the diagonal."""
        m = np.diag(self.diag)
        for (p, q), v in self.offdiag.items():
            m[p, q] = v
        return m

    def symmetric(self) -> np.ndarray:
        """Dense symmetric matrix with halved off-diagonals (same quadratic form)."""
        strict = self.upper() - np.diag(self.diag)
        return np.diag(self.diag) + (strict + strict.T) / 2.0

    def objective(self, bits: Sequence[int]) -> float:
        return objective(self, bits)

    def objectives(self, bits: np.ndarray) -> np.ndarray:
        """Objective of each row of an ``(m, n)`` 0/1 array."""
        x = np.asarray(bits, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n:
            raise DomainError(f"expected assignments of length {self.n}, got shape {x.shape}")
        strict = self.upper() - np.diag(self.diag)
        return x @ self.diag + np.einsum("ij,ij->i", x @ strict, x)

    def penalty_part(self, bits: Sequence[int]) -> float:
        """Contribution of the one-hot and pairing penalties (constant excluded)."""
        x = np.asarray(bits, dtype=int)
        total = 0.0
        for f, rng in self.layout.group_ranges.items():
            s = int(x[rng.start:rng.stop].sum())
            total += self.penalties.group(f) * ((s - 1) ** 2 - 1)
        for p, q in incompatible_index_pairs(self.layout):
            total += self.penalties.lambda_rl * x[p] * x[q]
        return total

    def to_dict(self) -> dict:
        return {
            "format": "handqubo-qubo",
            "version": 1,
            "n": self.n,
            "order": list(self.layout.order),
            "diag": [float(v) for v in self.diag],
            "offdiag": [[p, q, float(v)] for (p, q), v in sorted(self.offdiag.items())],
            "constant_offset": self.constant_offset,
            "penalties": self.penalties.to_dict(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QuboMatrix":
        try:
            if doc.get("format") != "handqubo-qubo":
                raise ParseError(f"$.format: expected 'handqubo-qubo', got {doc.get('format')!r}")
            layout = VariableLayout(tuple(doc["order"]))
            offdiag = {}
            for k, entry in enumerate(doc["offdiag"]):
                if len(entry) != 3:
                    raise ParseError(f"$.offdiag[{k}]: expected [p, q, value]")
                offdiag[(int(entry[0]), int(entry[1]))] = float(entry[2])
            return cls(
                diag=np.array([float(v) for v in doc["diag"]]),
                offdiag=offdiag,
                layout=layout,
                penalties=PenaltyConfig.from_dict(doc["penalties"]),
                constant_offset=float(doc["constant_offset"]),
                provenance=dict(doc.get("provenance", {})),
            )
        except KeyError as exc:
            raise ParseError(f"QUBO document is missing field {exc.args[0]!r}") from None
        except DomainError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"QUBO document is invalid: {exc}") from None
        except (TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"QUBO document is malformed: {exc}") from None

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def read_json(cls, path) -> "QuboMatrix":
        with open(path) as fh:
            text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        try:
            return cls.from_dict(doc)
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}") from None


def build_qubo(
    table,
    penalties: Optional[PenaltyConfig] = None,
    layout: Optional[VariableLayout] = None,
) -> QuboMatrix:
    """Assemble the upper-triangular QUBO from an evaluation table."""
    penalties = penalties or PenaltyConfig()
    layout = layout or VariableLayout.default()
    n = layout.n
    groups = {cid: finger_of(cid) for cid in layout.order}

    diag = np.zeros(n)
    for p, cid in enumerate(layout.order):
        try:
            score = table.score(cid)
        except KeyError:
            raise ConstructionError(f"evaluation table has no score for candidate {cid!r}") from None
        diag[p] = -score - penalties.group(groups[cid])

    offdiag: dict[tuple[int, int], float] = {}

    def add(p, q, value):
        key = (min(p, q), max(p, q))
        offdiag[key] = offdiag.get(key, 0.0) + value

    for f, rng in layout.group_ranges.items():
        lam = penalties.group(f)
        for p in rng:
            for q in range(p + 1, rng.stop):
                add(p, q, 2.0 * lam)

    ranges = layout.group_ranges
    for p in ranges.get("thumb", ()):
        for q in range(n):
            if groups[layout.order[q]] == "thumb":
                continue
            pair = (layout.order[p], layout.order[q])
            if pair not in table.norm_overlap:
                raise ConstructionError(f"evaluation table has no overlap for pair {pair[0]}-{pair[1]}")
            add(p, q, -table.norm_overlap[pair])

    for p, q in incompatible_index_pairs(layout):
        add(p, q, penalties.lambda_rl)

    provenance = {k: table.provenance[k] for k in ("resolution", "voxel_size", "three_dof_mode")
                  if k in getattr(table, "provenance", {})}
    provenance["d_h"] = getattr(table, "d_h", None)
    return QuboMatrix(diag, offdiag, layout, penalties, penalties.one_hot_total, provenance)


def objective(q: QuboMatrix, bits: Sequence[int]) -> float:
    x = np.asarray(bits)
    if x.shape != (q.n,):
        raise DomainError(f"assignment has length {x.size}, QUBO has {q.n} variables")
    if not np.isin(x, (0, 1)).all():
        raise DomainError("assignment entries must be 0 or 1")
    on = np.flatnonzero(x)
    total = float(q.diag[on].sum())
    on_set = set(on.tolist())
    for (p, r), v in q.offdiag.items():
        if p in on_set and r in on_set:
            total += v
    return total


@dataclass(frozen=True)
class Selection:
    chosen: dict[str, list[str]]
    one_hot_ok: bool
    pairwise_ok: bool

    @property
    def feasible(self) -> bool:
        return self.one_hot_ok and self.pairwise_ok

    def label(self) -> str:
        return "(" + ", ".join("+".join(v) if v else "-" for v in self.chosen.values()) + ")"


def decode(bits: Sequence[int], layout: Optional[VariableLayout] = None) -> Selection:
    layout = layout or VariableLayout.default()
    x = np.asarray(bits)
    chosen = {f: [layout.order[p] for p in rng if x[p]] for f, rng in layout.group_ranges.items()}
    one_hot = all(len(v) == 1 for v in chosen.values())
    ring, little = chosen.get("ring"), chosen.get("little")
    pairwise = True
    if ring is not None and little is not None and len(ring) == 1 and len(little) == 1:
        pairwise = compatibility(variant_of(ring[0]), variant_of(little[0]))
    return Selection(chosen, one_hot, pairwise)


def encode(ids: Sequence[str], layout: Optional[VariableLayout] = None) -> np.ndarray:
    layout = layout or VariableLayout.default()
    bits = np.zeros(layout.n, dtype=np.int8)
    for cid in ids:
        bits[layout.index(cid)] = 1
    return bits


def bitstring(bits: Sequence[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def parse_bitstring(text: str) -> np.ndarray:
    if not re.fullmatch(r"[01]+", text):
        raise ParseError(f"not a bit string: {text!r}")
    return np.array([int(c) for c in text], dtype=np.int8)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_coo(q: QuboMatrix, path) -> None:
    """Plain-text triplets ``p q value`` (0-based, diagonal as p == q)."""
    with open(path, "w") as fh:
        fh.write(f"# qubo n={q.n} offset={float(q.constant_offset)!r}\n")
        entries = [((p, p), v) for p, v in enumerate(q.diag)] + list(q.offdiag.items())
        for (p, r), v in sorted(entries):
            fh.write(f"{p} {r} {_fmt(v)}\n")


_HEADER = re.compile(r"#\s*qubo\s+n=(\d+)\s+offset=(\S+)\s*$")


def read_coo(path, layout: Optional[VariableLayout] = None,
             penalties: Optional[PenaltyConfig] = None) -> QuboMatrix:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not _HEADER.match(lines[0]):
        raise ParseError(f"{path}: line 1: expected header '# qubo n=<n> offset=<value>'")
    m = _HEADER.match(lines[0])
    n, offset = int(m.group(1)), float(m.group(2))
    layout = layout or VariableLayout.default()
    if layout.n != n:
        raise ParseError(f"{path}: line 1: n={n} does not match layout of {layout.n} ids")
    diag = np.zeros(n)
    offdiag = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        try:
            p, r, v = int(parts[0]), int(parts[1]), float(parts[2])
            if len(parts) != 3:
                raise ValueError
        except (ValueError, IndexError):
            raise ParseError(f"{path}: line {lineno}: expected 'p q value', got {line!r}") from None
        if not 0 <= p <= r < n:
            raise ParseError(f"{path}: line {lineno}: indices ({p}, {r}) must satisfy 0 <= p <= q < {n}")
        if p == r:
            diag[p] = v
        else:
            offdiag[(p, r)] = v
    return QuboMatrix(diag, offdiag, layout, penalties or PenaltyConfig(), offset)
