import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handqubo.catalog import HandParameters, finger_chain
from handqubo.errors import DomainError
from handqubo.workspace import (
    VoxelSet,
    chain_grid,
    fingertip_cloud,
    overlap_volume,
    read_points_csv,
    read_voxel_csv,
    reachable_voxels,
    sample_joint_grid,
    voxel_indices,
    write_points_csv,
    write_voxel_csv,
)

from oracles import oracle_voxels

PI = math.pi


def test_grid_counts():
    grid = sample_joint_grid([(-PI / 2, 0.0), (-PI / 6, PI / 6), (0.3, 0.3)], PI / 36)
    assert grid.shape == (19, 13, 1)
    assert grid.size == 19 * 13


def test_grid_includes_both_limits():
    grid = sample_joint_grid([(-PI / 2, PI / 9), (0.0, 0.7)], PI / 36)
    for axis, (lo, hi) in zip(grid.axes, [(-PI / 2, PI / 9), (0.0, 0.7)]):
        assert axis[0] == lo and axis[-1] == hi
        assert np.all(np.diff(axis) > 0)
        assert np.all(np.diff(axis) <= PI / 36 + 1e-12)


def test_grid_enumeration_is_lexicographic():
    grid = sample_joint_grid([(0, 1), (0, 2)], 1.0)
    assert grid.configurations().tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]


@pytest.mark.parametrize("resolution", [0.0, -0.1, float("nan")])
def test_nonpositive_resolution(resolution):
    with pytest.raises(DomainError):
        sample_joint_grid([(0, 1)], resolution)


def test_coarse_grid_is_subset_of_fine_grid():
    fine = sample_joint_grid([(-PI / 2, PI / 9)], PI / 36).axes[0]
    coarse = sample_joint_grid([(-PI / 2, PI / 9)], PI / 18).axes[0]
    assert set(coarse.tolist()) <= set(fine.tolist())


def test_voxel_floor_rule():
    cells = voxel_indices(np.array([[0.0, 0.049, -0.001], [0.05, -0.05, 0.1]]), 0.05)
    assert cells.tolist() == [[0, 0, -1], [1, -1, 2]]


def middle():
    p = HandParameters()
    return finger_chain(p, p.a_w, p.d_a, four_dof=True)


def test_single_configuration_gives_one_cell():
    grid = sample_joint_grid([(0.1, 0.1), (-0.2, -0.2), (-0.3, -0.3), (-0.1, -0.1)], PI / 36)
    assert len(reachable_voxels(middle(), grid, 0.05)) == 1


def test_voxel_count_bounded_by_configurations():
    chain = middle()
    grid = chain_grid(chain, PI / 12)
    assert 1 <= len(reachable_voxels(chain, grid, 0.05)) <= grid.size


def test_reachable_voxels_match_oracle(catalog):
    for cid in ("t3", "i2", "m4", "r3", "l7"):
        chain = catalog[cid].chain
        grid = chain_grid(chain, PI / 6)
        sure, ambiguous = oracle_voxels(chain, grid.configurations(), 0.05)
        got = reachable_voxels(chain, grid, 0.05).cells
        assert sure <= got, cid
        assert got - sure <= ambiguous, cid


def test_reachable_voxels_chunk_independent():
    chain = middle()
    grid = chain_grid(chain, PI / 12)
    assert reachable_voxels(chain, grid, 0.05, chunk_size=13) == reachable_voxels(chain, grid, 0.05)


def test_refinement_only_adds_voxels(catalog):
    chain = catalog["l5"].chain
    coarse = reachable_voxels(chain, chain_grid(chain, PI / 6), 0.05)
    fine = reachable_voxels(chain, chain_grid(chain, PI / 12), 0.05)
    assert coarse.cells <= fine.cells


def test_nonpositive_voxel_size():
    chain = middle()
    with pytest.raises(DomainError):
        reachable_voxels(chain, chain_grid(chain, PI / 6), 0.0)


def test_grid_dimension_mismatch():
    with pytest.raises(DomainError):
        reachable_voxels(middle(), sample_joint_grid([(0, 1)], 0.5), 0.05)


cells = st.frozensets(st.tuples(*[st.integers(-3, 3)] * 3), max_size=40)


@settings(max_examples=100)
@given(a=cells, b=cells)
def test_overlap_properties(a, b):
    va, vb = VoxelSet(0.05, a), VoxelSet(0.05, b)
    n = overlap_volume(va, vb)
    assert n == overlap_volume(vb, va)
    assert 0 <= n <= min(len(a), len(b))
    assert overlap_volume(va, va) == len(a)
    assert n == sum(1 for x in a for y in b if x == y)


def test_overlap_requires_equal_voxel_size():
    with pytest.raises(DomainError):
        overlap_volume(VoxelSet(0.05, frozenset()), VoxelSet(0.1, frozenset()))


def test_voxel_csv_round_trip(tmp_path, catalog):
    chain = catalog["i1"].chain
    voxels = reachable_voxels(chain, chain_grid(chain, PI / 12), 0.05)
    path = tmp_path / "v.csv"
    write_voxel_csv(path, voxels)
    lines = path.read_text().splitlines()
    assert len(lines) == len(voxels)
    assert all(len(line.split(",")) == 3 for line in lines)
    assert read_voxel_csv(path, 0.05) == voxels


def test_points_csv_round_trip(tmp_path, catalog):
    chain = catalog["t1"].chain
    points = fingertip_cloud(chain, chain_grid(chain, PI / 6))
    path = tmp_path / "p.csv"
    write_points_csv(path, points)
    assert np.array_equal(read_points_csv(path), points)
