import itertools

import numpy as np
import pytest

from hypercube.code import (
    address,
    build_code,
    code_params,
    flat_index,
    logical_address,
    logical_flat_index,
    logical_support,
)


def gf2_rank(m):
    m = np.array(m, dtype=np.uint8) % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, c]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] ^= m[rank]
        rank += 1
    return rank


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_parameters(level):
    p = code_params(level)
    assert (p.n, p.k, p.d) == (6**level, 4**level, 2**level)
    assert p.rate == pytest.approx((4 / 6) ** level)


def test_level3_parameters_and_string():
    table = build_code(3)
    assert (table.n, table.k) == (216, 64)
    assert len(table.stabilizer_generators) == 152
    assert str(table.params) == "[[216,64,8]] rate=0.2963"


def test_level1_generators_and_logicals():
    table = build_code(1)
    gens = [str(g) for g in table.stabilizer_generators]
    assert gens == ["ZZZZZZ", "XXXXXX"]
    assert str(table.logical_z[0]) == "ZZIIII"
    assert str(table.logical_x[0]) == "IXXIII"
    assert table.logical_z[0].symplectic(table.logical_x[0]) == 1


@pytest.mark.parametrize("level", [1, 2, 3])
def test_commutation_structure(level):
    t = build_code(level)
    hz, hx = t.hz.astype(np.uint8), t.hx.astype(np.uint8)
    lz, lx = t.lz.astype(np.uint8), t.lx.astype(np.uint8)
    # Z-type vs X-type products; same-type operators always commute.
    assert not (hz @ hx.T % 2).any()
    assert not (hz @ lx.T % 2).any()
    assert not (hx @ lz.T % 2).any()
    assert np.array_equal(lz @ lx.T % 2, np.eye(t.k, dtype=np.uint8))


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_generator_count_and_independence(level):
    t = build_code(level)
    assert len(t.hz) + len(t.hx) == t.n - t.k
    if level <= 3:
        assert gf2_rank(t.hz) == len(t.hz)
        assert gf2_rank(np.vstack([t.hz, t.lz])) == len(t.hz) + t.k


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_generator_weights(level):
    t = build_code(level)
    weights = t.hz.sum(axis=1)
    assert np.array_equal(weights, 6 * 2 ** (t.generator_levels - 1))
    assert np.array_equal(t.hx.sum(axis=1), weights)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_logical_supports_are_hypercubes(level):
    t = build_code(level)
    for basis in "ZX":
        for m in range(t.k):
            supp = logical_support(t, m, basis)
            assert len(supp) == 2**level
            digits = [address(q, level) for q in supp]
            per_digit = [sorted({d[i] for d in digits}) for i in range(level)]
            assert all(len(v) == 2 for v in per_digit)
            assert set(digits) == set(itertools.product(*per_digit))


def test_logical_support_examples():
    t1 = build_code(1)
    assert logical_support(t1, (1,), "Z") == {flat_index((1,), 1), flat_index((2,), 1)}
    t3 = build_code(3)
    cube = logical_support(t3, (1, 1, 1), "Z")
    expected = {flat_index(a, 3) for a in itertools.product((1, 2), repeat=3)}
    assert cube == expected
    with pytest.raises(ValueError):
        logical_support(t3, 64, "Z")
    with pytest.raises(ValueError):
        logical_support(t3, (5, 1, 1), "Z")


def test_logical_supports_inside_stabilizer_span():
    t = build_code(2)
    for rows, stabs in ((t.lz, t.hz), (t.lx, t.hx)):
        union = stabs.any(axis=0)
        assert union[rows.any(axis=0)].all()


def test_flat_index_examples():
    assert flat_index((1, 1, 1), 3) == 0
    assert flat_index((6, 6, 6), 3) == 215
    assert flat_index((2, 3), 2) == 8
    for i in range(216):
        assert flat_index(address(i, 3), 3) == i
    for i in range(64):
        assert logical_flat_index(logical_address(i, 3), 3) == i
    with pytest.raises(ValueError):
        flat_index((7, 1), 2)
    with pytest.raises(ValueError):
        flat_index((1,), 2)


def test_level_bounds():
    with pytest.raises(ValueError):
        build_code(0)
    with pytest.raises(ValueError):
        build_code(99)


def test_hadamard_label_map_swaps_pairs():
    t = build_code(2)
    perm = t.hadamard_label_map()
    for m in range(t.k):
        a = logical_address(m, 2)
        swapped = tuple({1: 2, 2: 1, 3: 4, 4: 3}[d] for d in a)
        assert perm[m] == logical_flat_index(swapped, 2)
