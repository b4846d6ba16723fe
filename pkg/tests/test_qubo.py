import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handqubo.errors import ConstructionError, DomainError, ParseError
from handqubo.qubo import (
    PenaltyConfig,
    QuboMatrix,
    VariableLayout,
    bitstring,
    build_qubo,
    decode,
    encode,
    objective,
    parse_bitstring,
    read_coo,
    write_coo,
)

from oracles import FlatTable, direct_objective

LAYOUT = VariableLayout.default()


def idx(cid):
    return LAYOUT.index(cid)


def test_default_layout_ranges():
    ranges = LAYOUT.group_ranges
    assert [(r.start, r.stop) for r in ranges.values()] == [(0, 7), (7, 9), (9, 15), (15, 19), (19, 27)]
    assert LAYOUT.order[0] == "t1" and LAYOUT.order[-1] == "l8"


def test_layout_rejects_split_group():
    with pytest.raises(DomainError):
        VariableLayout(("t1", "i1", "t2"))


def test_default_penalties_follow_family_sizes():
    assert PenaltyConfig.from_family_sizes() == PenaltyConfig()
    assert PenaltyConfig().one_hot_total == 54.0


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_penalties_must_be_positive(bad):
    with pytest.raises(DomainError):
        PenaltyConfig(lambda_t=bad)


def test_diagonal(coarse_table, coarse_qubo):
    lam = {"t": 14, "i": 4, "m": 12, "r": 8, "l": 16}
    for p, cid in enumerate(LAYOUT.order):
        assert coarse_qubo.diag[p] == pytest.approx(-coarse_table.score(cid) - lam[cid[0]], abs=1e-15)


def test_off_diagonal_entries(coarse_table, coarse_qubo):
    off = coarse_qubo.offdiag
    assert off[(idx("l1"), idx("l2"))] == 32.0
    assert off[(idx("m1"), idx("m6"))] == 24.0
    assert off[(idx("r1"), idx("l3"))] == 24.0
    assert (idx("r1"), idx("l1")) not in off
    assert off[(idx("t4"), idx("m6"))] == -coarse_table.norm_overlap[("t4", "m6")]
    assert (idx("i1"), idx("m1")) not in off


def test_sparsity(coarse_qubo):
    within = sum(len(r) * (len(r) - 1) // 2 for r in LAYOUT.group_ranges.values())
    assert within == 21 + 1 + 15 + 6 + 28
    assert len(coarse_qubo.offdiag) == within + 7 * 20 + 16 == 227


def test_constant_offset_not_in_form(coarse_qubo):
    assert coarse_qubo.constant_offset == 54.0
    assert objective(coarse_qubo, np.zeros(27, dtype=int)) == 0.0


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=27, max_size=27))
def test_expansion_matches_term_by_term_evaluation(coarse_table, coarse_qubo, bits):
    expected = direct_objective(bits, LAYOUT, coarse_table, coarse_qubo.penalties)
    assert abs(objective(coarse_qubo, bits) - expected) < 1e-9


def test_feasible_penalty_part_is_minus_54(coarse_qubo):
    for combo in [("t4", "i1", "m6", "r2", "l2"), ("t1", "i2", "m3", "r3", "l8")]:
        assert coarse_qubo.penalty_part(encode(combo)) == -54.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=27, max_size=27))
def test_symmetric_and_vectorized_forms_agree(coarse_qubo, bits):
    x = np.array(bits, dtype=float)
    direct = objective(coarse_qubo, bits)
    assert x @ coarse_qubo.symmetric() @ x == pytest.approx(direct, abs=1e-9)
    assert x @ coarse_qubo.upper() @ x == pytest.approx(direct, abs=1e-9)
    assert coarse_qubo.objectives(x[None])[0] == pytest.approx(direct, abs=1e-9)


def test_objective_rejects_bad_assignments(coarse_qubo):
    with pytest.raises(DomainError):
        objective(coarse_qubo, [0] * 26)
    with pytest.raises(DomainError):
        objective(coarse_qubo, [2] + [0] * 26)


def test_decode_examples():
    sel = decode(encode(["t4", "i1", "m6", "r2", "l2"]))
    assert sel.feasible
    assert sel.chosen == {"thumb": ["t4"], "index": ["i1"], "middle": ["m6"], "ring": ["r2"], "little": ["l2"]}
    assert sel.label() == "(t4, i1, m6, r2, l2)"
    sel = decode(encode(["t4", "i1", "m6", "r2", "l3"]))
    assert sel.one_hot_ok and not sel.pairwise_ok
    sel = decode(encode(["t4", "t5", "i1", "m6", "r2", "l2"]))
    assert not sel.one_hot_ok


def test_bitstring_round_trip():
    bits = encode(["t7", "i2", "m6", "r4", "l8"])
    assert np.array_equal(parse_bitstring(bitstring(bits)), bits)
    with pytest.raises(ParseError):
        parse_bitstring("01x")


def test_coo_round_trip(tmp_path, coarse_qubo):
    path = tmp_path / "q.coo"
    write_coo(coarse_qubo, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# qubo n=27 offset=54.0"
    assert len(lines) == 1 + 27 + 227
    again = read_coo(path)
    assert np.array_equal(again.diag, coarse_qubo.diag)
    assert again.offdiag == coarse_qubo.offdiag
    assert again.constant_offset == 54.0


def test_coo_parse_errors(tmp_path):
    path = tmp_path / "q.coo"
    path.write_text("# qubo n=27 offset=54.0\n0 0 -1\n3 2 1.0\n")
    with pytest.raises(ParseError, match="line 3"):
        read_coo(path)
    path.write_text("0 0 1\n")
    with pytest.raises(ParseError, match="line 1"):
        read_coo(path)
    path.write_text("# qubo n=27 offset=54.0\n0 0 abc\n")
    with pytest.raises(ParseError, match="line 2"):
        read_coo(path)


def test_json_round_trip(tmp_path, coarse_qubo):
    path = tmp_path / "q.json"
    coarse_qubo.write_json(path)
    again = QuboMatrix.read_json(path)
    assert np.array_equal(again.diag, coarse_qubo.diag)
    assert again.offdiag == coarse_qubo.offdiag
    assert again.penalties == coarse_qubo.penalties
    assert again.layout == coarse_qubo.layout


def test_missing_score_raises():
    table = FlatTable(LAYOUT)
    del table._score["m3"]
    with pytest.raises(ConstructionError, match="m3"):
        build_qubo(table)


def test_missing_overlap_raises():
    table = FlatTable(LAYOUT)
    del table.norm_overlap[("t2", "r4")]
    with pytest.raises(ConstructionError, match="t2-r4"):
        build_qubo(table)


def test_custom_pair_penalty(coarse_table):
    q = build_qubo(coarse_table, PenaltyConfig(lambda_rl=30.0))
    pairs = [(p, r) for (p, r), v in q.offdiag.items() if v == 30.0]
    assert len(pairs) == 16


def test_penalty_only_feasible_values_are_equal():
    q = build_qubo(FlatTable(LAYOUT))
    values = set()
    for combo in itertools.product(*[[LAYOUT.order[p] for p in r] for r in LAYOUT.group_ranges.values()]):
        bits = encode(combo)
        if decode(bits).feasible:
            values.add(objective(q, bits))
    assert values == {-54.0}
