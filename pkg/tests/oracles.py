"""Reference implementations kept deliberately naive and separate from the library."""
import itertools
import math

import numpy as np


# Independent oracle: elementary 4x4 factors multiplied out one by one.
def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1.0]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])


def trans(x=0.0, y=0.0, z=0.0):
    m = np.eye(4)
    m[:3, 3] = (x, y, z)
    return m


def oracle_frames(chain, q):
    m = np.eye(4)
    frames = {}
    for row in chain.rows:
        theta = row.theta_offset + (q[row.joint] if row.joint is not None else 0.0)
        m = m @ rot_x(row.alpha_prev) @ trans(x=row.a_prev) @ rot_z(theta) @ trans(z=row.d)
        if row.joint is not None:
            frames[row.joint] = m.copy()
    return m, frames


def oracle_tip(chain, q):
    return oracle_frames(chain, q)[0][:3, 3]


def oracle_voxels(chain, configurations, voxel_size, tol=1e-9):
    """Cells from plain floor binning, plus the cells of points lying on a face.

    Returns ``(sure, ambiguous)``: ``sure`` holds cells of points well inside a
    cell; ``ambiguous`` holds every cell a near-face point could round into.
    """
    sure, ambiguous = set(), set()
    for q in configurations:
        p = oracle_tip(chain, q) / voxel_size
        options = []
        for v in p:
            k = math.floor(v)
            near = round(v)
            options.append({k, near - 1, near} if abs(v - near) < tol else {k})
        if all(len(o) == 1 for o in options):
            sure.add(tuple(o.pop() for o in options))
        else:
            ambiguous.update(itertools.product(*options))
    return sure, ambiguous


def direct_objective(bits, layout, table, penalties):
    """Score reward plus one-hot and pairing penalties, expanded by hand (constant dropped)."""
    from handqubo.catalog import compatibility

    ids = [cid for cid, b in zip(layout.order, bits) if b]
    groups = layout.group_ranges
    total = 0.0
    for f, rng in groups.items():
        s = sum(int(bits[p]) for p in rng)
        total += penalties.group(f) * ((1 - s) ** 2 - 1)
    thumbs = [c for c in ids if c.startswith("t")]
    others = [c for c in ids if not c.startswith("t")]
    total -= sum(table.score(c) for c in ids)
    total -= sum(table.norm_overlap[(t, k)] for t in thumbs for k in others)
    rings = [int(c[1:]) for c in ids if c.startswith("r")]
    littles = [int(c[1:]) for c in ids if c.startswith("l")]
    for r in rings:
        for l in littles:
            if not compatibility(r, l):
                total += penalties.lambda_rl
    return total


class FlatTable:
    """Evaluation stand-in with constant scores and overlaps."""

    def __init__(self, layout, score=0.0, overlap=0.0):
        self.d_h = 23
        self.provenance = {}
        self._score = {cid: score for cid in layout.order}
        thumbs = [c for c in layout.order if c.startswith("t")]
        self.norm_overlap = {(t, k): overlap for t in thumbs for k in layout.order if not k.startswith("t")}

    def score(self, cid):
        return self._score[cid]
