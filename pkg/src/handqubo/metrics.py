"""Per-candidate scores and thumb-finger overlap values feeding the QUBO.

Thumbs are scored by manipulability alone (their DoF is constant).  Other
fingers combine normalized manipulability and a DoF cost with equal weights.
Overlap volumes are normalized independently for every (thumb, finger family)
block.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .catalog import FINGERS, Catalog
from .errors import DomainError, ParseError
from .kinematics import global_manipulability
from .workspace import (
    DEFAULT_RESOLUTION,
    DEFAULT_VOXEL_SIZE,
    VoxelSet,
    chain_grid,
    overlap_volume,
    reachable_voxels,
)

MANIPULABILITY_WEIGHT = 0.5
DOF_WEIGHT = 0.5


@dataclass(frozen=True)
class EvaluationTable:
    families: dict[str, list[str]]
    raw_manipulability: dict[str, float]
    dof: dict[str, int]
    raw_overlap: dict[tuple[str, str], int]
    thumb_score: dict[str, float]
    finger_score: dict[str, float]
    norm_overlap: dict[tuple[str, str], float]
    d_h: int
    provenance: dict = field(default_factory=dict, compare=False)

    def score(self, cid: str) -> float:
        if cid in self.thumb_score:
            return self.thumb_score[cid]
        return self.finger_score[cid]

    @property
    def ids(self) -> list[str]:
        return [cid for f in FINGERS for cid in self.families.get(f, [])]

    def to_dict(self) -> dict:
        candidates = []
        for f in FINGERS:
            for cid in self.families.get(f, []):
                candidates.append({
                    "id": cid,
                    "finger": f,
                    "dof": self.dof[cid],
                    "raw_manipulability": self.raw_manipulability[cid],
                    "score": self.score(cid),
                })
        overlaps = [
            {"thumb": t, "finger": k, "raw": self.raw_overlap[(t, k)], "norm": self.norm_overlap[(t, k)]}
            for (t, k) in self.raw_overlap
        ]
        return {
            "format": "handqubo-evaluation",
            "version": 1,
            "d_h": self.d_h,
            "provenance": self.provenance,
            "candidates": candidates,
            "overlaps": overlaps,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvaluationTable":
        try:
            if doc.get("format") != "handqubo-evaluation":
                raise ParseError(f"$.format: expected 'handqubo-evaluation', got {doc.get('format')!r}")
            families: dict[str, list[str]] = {}
            raw, dof, thumb, finger = {}, {}, {}, {}
            for n, c in enumerate(doc["candidates"]):
                where = f"$.candidates[{n}]"
                if c["finger"] not in FINGERS:
                    raise ParseError(f"{where}.finger: unknown finger {c['finger']!r}")
                families.setdefault(c["finger"], []).append(c["id"])
                raw[c["id"]] = float(c["raw_manipulability"])
                dof[c["id"]] = int(c["dof"])
                (thumb if c["finger"] == "thumb" else finger)[c["id"]] = float(c["score"])
            raw_o, norm_o = {}, {}
            for o in doc["overlaps"]:
                raw_o[(o["thumb"], o["finger"])] = int(o["raw"])
                norm_o[(o["thumb"], o["finger"])] = float(o["norm"])
            return cls(families, raw, dof, raw_o, thumb, finger, norm_o, int(doc["d_h"]),
                       dict(doc.get("provenance", {})))
        except KeyError as exc:
            raise ParseError(f"evaluation document is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"evaluation document is malformed: {exc}") from None

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def read_json(cls, path) -> "EvaluationTable":
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

    def write_csv(self, path) -> None:
        """Raw metric table: one row per candidate, then one per thumb-finger pair."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "id", "partner", "dof", "raw", "normalized"])
            for cid in self.ids:
                w.writerow(["candidate", cid, "", self.dof[cid],
                            repr(self.raw_manipulability[cid]), repr(self.score(cid))])
            for (t, k), raw in self.raw_overlap.items():
                w.writerow(["overlap", t, k, "", raw, repr(self.norm_overlap[(t, k)])])


def finger_score(m_norm: float, dof: int, d_h: int) -> float:
    if dof < 1 or d_h < dof:
        raise DomainError(f"need d_h >= dof >= 1, got dof={dof}, d_h={d_h}")
    return MANIPULABILITY_WEIGHT * m_norm - DOF_WEIGHT * dof / d_h


def _hand_dof(combo) -> int:
    palms = set()
    for c in combo:
        if c.palm_mr:
            palms.add("mr")
        if c.palm_rl:
            palms.add("rl")
    return sum(c.finger_dof for c in combo) + len(palms)


def _feasible(combo) -> bool:
    ring = [c for c in combo if c.finger == "ring"]
    little = [c for c in combo if c.finger == "little"]
    return not (ring and little) or ring[0].palm_mr == little[0].palm_mr


def max_hand_dof(catalog: Catalog) -> int:
    """Largest total hand DoF over feasible combinations, each palm joint counted once."""
    families = [catalog.family(f) for f in FINGERS if catalog.family(f)]
    best = 0
    for combo in itertools.product(*families):
        if _feasible(combo):
            best = max(best, _hand_dof(combo))
    return best


def _normalize(values: dict[str, float], label: str) -> dict[str, float]:
    top = max(values.values())
    if top <= 0:
        warnings.warn(f"{label}: maximum is zero, normalized values set to 0", RuntimeWarning)
        return {k: 0.0 for k in values}
    return {k: v / top for k, v in values.items()}


def score_table(
    families: dict[str, list[str]],
    raw_manipulability: dict[str, float],
    dof: dict[str, int],
    raw_overlap: dict[tuple[str, str], int],
    d_h: int,
    provenance: Optional[dict] = None,
) -> EvaluationTable:
    """Normalize raw evaluations into thumb scores, finger scores and overlap values."""
    thumbs = families["thumb"]
    thumb_score = _normalize({t: raw_manipulability[t] for t in thumbs}, "thumb manipulability")
    finger_scores: dict[str, float] = {}
    norm_overlap: dict[tuple[str, str], float] = {}
    for f in FINGERS[1:]:
        ids = families.get(f, [])
        if not ids:
            continue
        m_norm = _normalize({k: raw_manipulability[k] for k in ids}, f"{f} manipulability")
        for k in ids:
            finger_scores[k] = finger_score(m_norm[k], dof[k], d_h)
        block = {(t, k): float(raw_overlap[(t, k)]) for t in thumbs for k in ids}
        norm_overlap.update(_normalize(block, f"thumb-{f} overlap"))
    raw_o = {(t, k): int(raw_overlap[(t, k)]) for f in FINGERS[1:]
             for t in thumbs for k in families.get(f, [])}
    return EvaluationTable(
        families={f: list(families[f]) for f in FINGERS if f in families},
        raw_manipulability=dict(raw_manipulability),
        dof=dict(dof),
        raw_overlap=raw_o,
        thumb_score=thumb_score,
        finger_score=finger_scores,
        norm_overlap={key: norm_overlap[key] for key in raw_o},
        d_h=d_h,
        provenance=dict(provenance or {}),
    )


def measure_candidates(
    catalog: Catalog,
    resolution: float = DEFAULT_RESOLUTION,
    voxel_size: float = DEFAULT_VOXEL_SIZE,
    threads: int = 1,
) -> tuple[dict[str, float], dict[str, VoxelSet]]:
    """Global manipulability and reachable voxels of every candidate."""
    if not (resolution > 0 and math.isfinite(resolution)):
        raise DomainError(f"resolution must be positive, got {resolution!r}")
    if not (voxel_size > 0 and math.isfinite(voxel_size)):
        raise DomainError(f"voxel_size must be positive, got {voxel_size!r}")

    def measure(candidate):
        grid = chain_grid(candidate.chain, resolution)
        return (global_manipulability(candidate.chain, grid),
                reachable_voxels(candidate.chain, grid, voxel_size))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(measure, catalog.candidates))
    else:
        results = [measure(c) for c in catalog.candidates]
    manip = {c.id: m for c, (m, _) in zip(catalog.candidates, results)}
    voxels = {c.id: v for c, (_, v) in zip(catalog.candidates, results)}
    return manip, voxels


def tabulate(
    catalog: Catalog,
    manipulability: dict[str, float],
    voxels: dict[str, VoxelSet],
    d_h: Optional[int] = None,
    provenance: Optional[dict] = None,
) -> EvaluationTable:
    families = {f: [c.id for c in catalog.family(f)] for f in FINGERS}
    raw_overlap = {
        (t, k): overlap_volume(voxels[t], voxels[k])
        for f in FINGERS[1:] for t in families["thumb"] for k in families[f]
    }
    if d_h is None:
        d_h = max_hand_dof(catalog)
    provenance = dict(provenance or {})
    provenance["three_dof_mode"] = catalog.parameters.three_dof_mode
    provenance["voxel_counts"] = {cid: len(v) for cid, v in voxels.items()}
    return score_table(families, manipulability, {c.id: c.dof_count for c in catalog},
                       raw_overlap, d_h, provenance)


def evaluate_catalog(
    catalog: Catalog,
    resolution: float = DEFAULT_RESOLUTION,
    voxel_size: float = DEFAULT_VOXEL_SIZE,
    d_h: Optional[int] = None,
    threads: int = 1,
) -> EvaluationTable:
    manip, voxels = measure_candidates(catalog, resolution, voxel_size, threads)
    return tabulate(catalog, manip, voxels, d_h, {"resolution": resolution, "voxel_size": voxel_size})
