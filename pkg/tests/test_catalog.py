import dataclasses
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from handqubo.catalog import (
    FAMILY_SIZES,
    HandParameters,
    build_catalog,
    compatibility,
    incompatible_pairs,
    thumb_segment_lengths,
)
from handqubo.errors import DomainError
from handqubo.kinematics import forward_kinematics


def test_default_parameters_close_the_hand_length():
    p = HandParameters()
    assert abs(p.d_a + p.l_3d1 + p.l_3d2 + p.l_3d3 - 1) < 1e-12
    assert p.d_w_steps == (0.46, 0.51, 0.56)


@pytest.mark.parametrize("field,value", [("a_w", 0.0), ("l_t", -1.0), ("d_a", 0.5)])
def test_invalid_parameters(field, value):
    with pytest.raises(DomainError):
        dataclasses.replace(HandParameters(), **{field: value})


def test_mount_steps_must_increase_by_005():
    with pytest.raises(DomainError):
        HandParameters(d_w_steps=(0.46, 0.52))


@pytest.mark.parametrize("ratio,expected", [
    ((1, 1, 1), (0.20, 0.20, 0.20)),
    ((2, 1, 1), (0.30, 0.15, 0.15)),
    ((1, 2, 2), (0.12, 0.24, 0.24)),
])
def test_thumb_segment_lengths(ratio, expected):
    assert thumb_segment_lengths(ratio, 0.60) == pytest.approx(expected, abs=1e-15)


def test_thumb_ratio_must_be_positive():
    with pytest.raises(DomainError):
        thumb_segment_lengths((0, 1, 1), 0.6)


@given(st.tuples(*[st.integers(1, 2)] * 3))
def test_thumb_lengths_sum_to_total(ratio):
    assert abs(sum(thumb_segment_lengths(ratio, 0.60)) - 0.60) < 1e-12


def test_family_counts(catalog):
    counts = {f: len(catalog.family(f)) for f in FAMILY_SIZES}
    assert counts == {"thumb": 7, "index": 2, "middle": 6, "ring": 4, "little": 8}
    assert len(catalog) == 27
    assert len(set(catalog.ids)) == 27


def test_thumbs_have_five_dof(catalog):
    assert all(c.dof_count == 5 for c in catalog.family("thumb"))


def test_dof_counts(catalog):
    dof = {c.id: c.dof_count for c in catalog}
    assert dof["l7"] == 6
    assert [dof[f"i{v}"] for v in (1, 2)] == [4, 3]
    assert [dof[f"m{v}"] for v in range(1, 7)] == [4, 3, 4, 3, 4, 3]
    assert [dof[f"r{v}"] for v in range(1, 5)] == [4, 3, 5, 4]
    assert [dof[f"l{v}"] for v in range(1, 9)] == [4, 3, 5, 4, 5, 4, 6, 5]


def test_palm_flags(catalog):
    for c in catalog.family("ring"):
        assert c.palm_mr == (c.variant in (3, 4)) and not c.palm_rl
    for c in catalog.family("little"):
        assert c.palm_mr == (c.variant in (3, 4, 7, 8))
        assert c.palm_rl == (c.variant in (5, 6, 7, 8))


def test_thumb_variant_order(catalog):
    assert [c.meta["ratio"] for c in catalog.family("thumb")] == [
        "1:1:1", "2:1:1", "1:2:1", "1:1:2", "2:2:1", "2:1:2", "1:2:2"]


def test_middle_mounts(catalog):
    assert [c.meta["d_w"] for c in catalog.family("middle")] == [0.46, 0.46, 0.51, 0.51, 0.56, 0.56]


def test_every_joint_has_finite_nonzero_range(catalog):
    for c in catalog:
        for lo, hi in c.chain.joint_limits:
            assert np.isfinite([lo, hi]).all() and hi > lo


def test_lateral_layout(catalog):
    """Straight fingers sit at z = 0, a_w, 2 a_w, 3 a_w; pivots at 1.5 and 2.5 a_w."""
    a_w = catalog.parameters.a_w
    for cid, k in (("i1", 0), ("m1", 1), ("r1", 2), ("r3", 2), ("l1", 3), ("l3", 3), ("l5", 3), ("l7", 3)):
        chain = catalog[cid].chain
        tip = forward_kinematics(chain, [0.0] * chain.joint_count)
        assert tip[2] == pytest.approx(k * a_w, abs=1e-12)
        assert tip[1] == pytest.approx(1.0, abs=1e-12)
    # rotating the ring-little pivot swings the fingertip about z = 2.5 a_w
    chain = catalog["l5"].chain
    q = np.zeros(chain.joint_count)
    q[0] = 0.3
    tip = forward_kinematics(chain, q)
    assert np.hypot(tip[2] - 2.5 * a_w, tip[0]) == pytest.approx(0.5 * a_w, abs=1e-12)


def test_palm_chains_match_straight_chains_at_zero(catalog):
    for straight, palm in (("r1", "r3"), ("r2", "r4"), ("l1", "l3"), ("l1", "l5"), ("l1", "l7"), ("l2", "l8")):
        a, b = catalog[straight].chain, catalog[palm].chain
        rng = np.random.default_rng(3)
        q = np.array([rng.uniform(lo, hi) for lo, hi in a.joint_limits])
        pad = np.zeros(b.joint_count - a.joint_count)
        assert np.allclose(forward_kinematics(a, q), forward_kinematics(b, np.concatenate([pad, q])),
                           atol=1e-12)


def test_three_dof_modes_differ_only_in_short_fingers():
    two = build_catalog(HandParameters(three_dof_mode="two_segment"))
    frozen = build_catalog(HandParameters(three_dof_mode="frozen_distal"))
    q = [0.1, -0.5, -0.7]
    tip_two = forward_kinematics(two["i2"].chain, q)
    tip_frozen = forward_kinematics(frozen["i2"].chain, q)
    assert not np.allclose(tip_two, tip_frozen)
    assert np.array_equal(forward_kinematics(two["i1"].chain, q + [-0.2]),
                          forward_kinematics(frozen["i1"].chain, q + [-0.2]))
    # both keep the straight length of the finger
    for cat in (two, frozen):
        tip = forward_kinematics(cat["i2"].chain, [0.0] * 3)
        assert tip[1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("ring,little,expected", [(1, 5, True), (1, 3, False), (4, 8, True)])
def test_compatibility_examples(ring, little, expected):
    assert compatibility(ring, little) is expected


def test_compatibility_counts():
    pairs = list(itertools.product(range(1, 5), range(1, 9)))
    assert sum(compatibility(r, l) for r, l in pairs) == 16
    assert len(incompatible_pairs()) == 16


@pytest.mark.parametrize("ring,little", [(0, 1), (5, 1), (1, 9)])
def test_compatibility_range(ring, little):
    with pytest.raises(DomainError):
        compatibility(ring, little)


def test_parameters_round_trip():
    p = HandParameters(three_dof_mode="frozen_distal")
    assert HandParameters.from_dict(p.to_dict()) == p
    with pytest.raises(DomainError):
        HandParameters.from_dict({"bogus": 1})
