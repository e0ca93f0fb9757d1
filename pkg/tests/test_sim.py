import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercube.sim import (
    AllOf, AllZero, Binding, Circuit, DecodeCheck, FeedForward, NoiseModel, PairCheck, Tableau,
    count_sites, outcome_distribution, sample, simulate,
)
from hypercube.sim.frame import reference_slots
from hypercube.sim.noise import TWO_QUBIT_PAULIS, pauli_name
from hypercube.sim.tableau import product_sign

import statevector as sv


def random_circuit(rng, n, gates=40, max_meas=None):
    c = Circuit(n)
    for _ in range(gates):
        r = rng.integers(0, 10)
        a, b = (int(v) for v in rng.choice(n, 2, replace=False))
        if r < 2:
            c.h([a])
        elif r < 4:
            c.append("S", [a])
        elif r < 7:
            c.cnot([a], [b], noisy=False)
        elif r == 7:
            c.append(str(rng.choice(["X", "Y", "Z"])), [a])
        elif r == 8:
            c.swap([a], [b])
        elif max_meas is None or c.num_classical < max_meas:
            c.measure([a], noisy=False)
        else:
            c.append("R", [a])
    return c


def empirical(bits):
    keys, counts = np.unique(bits, axis=0, return_counts=True)
    return {tuple(int(v) for v in k): c / len(bits) for k, c in zip(keys, counts)}


# --- tableau -------------------------------------------------------------

@pytest.mark.parametrize("seed", range(60))
def test_tableau_matches_state_vector_exactly(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, int(rng.integers(2, 8)))
    assert sv.total_variation(outcome_distribution(c), sv.distribution(c)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_tableau_stays_symplectic(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    c = random_circuit(rng, n, gates=80)
    rec = simulate(c, seed=seed, keep_tableau=True)
    rec.tableau.check()


def test_bell_and_ghz_outcomes():
    c = Circuit(3)
    c.h([0])
    c.cnot([0, 0], [1, 2], noisy=False)
    c.measure([0, 1, 2], noisy=False)
    assert outcome_distribution(c) == pytest.approx({(0, 0, 0): 0.5, (1, 1, 1): 0.5})
    for seed in range(20):
        s = simulate(c, seed=seed).slots
        assert s[0] == s[1] == s[2]


def test_repeated_measurement_is_idempotent():
    c = Circuit(1)
    c.h([0])
    c.measure([0, 0], noisy=False)
    for seed in range(20):
        a, b = simulate(c, seed=seed).slots
        assert a == b


def test_expectation_values():
    t = Tableau(2)
    t.h(0)
    t.cnot(0, 1)
    xx = np.array([1, 1], bool), np.array([0, 0], bool)
    zz = np.array([0, 0], bool), np.array([1, 1], bool)
    z0 = np.array([0, 0], bool), np.array([1, 0], bool)
    assert t.expectation(*xx) == 1
    assert t.expectation(*zz) == 1
    assert t.expectation(*z0) == 0
    t.pauli(0, False, True)
    assert t.expectation(*xx) == -1


def test_product_sign_of_anticommuting_pair_is_rejected():
    xs = np.array([[1], [0]], bool)
    zs = np.array([[0], [1]], bool)
    with pytest.raises(ValueError):
        product_sign(xs, zs, np.zeros(2, np.uint8))


# --- Pauli-frame sampler -------------------------------------------------

@pytest.mark.parametrize("seed", range(25))
def test_frame_sampler_matches_state_vector(seed):
    # at most three recorded bits keeps the sampling noise of the TV distance small
    rng = np.random.default_rng(1000 + seed)
    c = random_circuit(rng, int(rng.integers(2, 7)), max_meas=3)
    ref = reference_slots(c)
    rec = sample(c, shots=10_000, seed=seed, reference=ref)
    assert sv.total_variation(empirical(rec.slots), sv.distribution(c)) < 0.03


def test_two_qubit_channel_hits_all_fifteen_paulis_uniformly():
    # qubits 0 and 1 each share a Bell pair with a partner; a Bell measurement
    # afterwards reads both the X and the Z part of the injected Pauli
    c = Circuit(4)
    c.reset(range(4), noisy=False)
    c.h([0, 1])
    c.cnot([0, 1], [2, 3], noisy=False)
    c.noise("cnot", [0, 1])
    c.cnot([0, 1], [2, 3], noisy=False)
    c.h([0, 1])
    z0, z1, x0, x1 = c.measure([0, 1, 2, 3], noisy=False)
    shots = 15_000
    s = sample(c, NoiseModel(1.0), shots=shots, seed=3).slots.astype(np.int64)
    code = s[:, x0] + 2 * s[:, z0] + 4 * s[:, x1] + 8 * s[:, z1]
    counts = np.bincount(code.astype(np.int64), minlength=16)
    assert counts[0] == 0
    expected = shots / 15
    sigma = np.sqrt(shots * (1 / 15) * (14 / 15))
    assert np.all(np.abs(counts[1:] - expected) < 3 * sigma)


def test_pauli_table_layout():
    assert len({tuple(r) for r in TWO_QUBIT_PAULIS}) == 15
    assert pauli_name(1) == "XI" and pauli_name(15) == "YY" and pauli_name(10) == "ZZ" and pauli_name(6) == "ZX"


@pytest.mark.parametrize("kind", ["prep", "meas", "flip"])
def test_single_site_noise_rate(kind):
    n, shots, p = 100, 1000, 0.03
    c = Circuit(n)
    c.reset(range(n), noisy=False)
    c.noise(kind, range(n))
    c.measure(range(n), noisy=False)
    noise = NoiseModel(p_circ=p, p_flip=p)
    flips = sample(c, noise, shots=shots, seed=11).slots.sum()
    total = n * shots
    assert abs(flips - total * p) < 4 * np.sqrt(total * p * (1 - p))


def test_disabled_noise_kinds_are_silent():
    c = Circuit(2)
    c.reset([0, 1])
    c.cnot([0], [1])
    c.measure([0, 1])
    rec = sample(c, NoiseModel(0.5, prep=False, meas=False, cnot=False), shots=500, seed=0)
    assert not rec.slots.any()


def test_noiseless_runs_agree_across_seeds():
    c = Circuit(7)
    c.reset(range(7))
    c.cnot([0, 1, 2], [3, 4, 5])
    c.measure(range(6))
    body = Circuit(2)
    body.reset([0, 1])
    body.cnot([0], [1])
    slot = body.measure([1])
    c.repeat(body, [5, 6], AllZero(slot), label="blk")
    for seed in range(5):
        rec = sample(c, shots=64, seed=seed)
        assert not rec.slots.any()
        assert np.all(rec.attempts["blk"] == 1)
        t = simulate(c, seed=seed)
        assert not t.slots.any() and t.attempts["blk"] == [1]


def test_tableau_and_frame_agree_under_noise():
    c = Circuit(4)
    c.reset(range(4))
    c.h([0])
    c.cnot([0, 0, 0], [1, 2, 3])
    c.measure(range(4))
    noise = NoiseModel(0.08)
    frame = empirical(sample(c, noise, shots=20_000, seed=5).slots)
    rng = np.random.default_rng(7)
    tab = empirical(np.array([simulate(c, noise, seed=rng).slots for _ in range(3000)]))
    assert sv.total_variation(frame, tab) < 0.06


def _plus_body():
    body = Circuit(1)
    body.reset([0], noisy=False)
    body.h([0])
    slot = body.measure([0], noisy=False)
    return body, AllZero(slot)


def test_repeat_until_success_statistics():
    body, pred = _plus_body()
    c = Circuit(1)
    c.repeat(body, [0], pred, max_attempts=1000, label="plus")
    rec = sample(c, shots=4000, seed=2)
    att = rec.attempts["plus"]
    assert not rec.exhausted.any()
    assert abs(att.mean() - 2.0) < 0.15
    single = sample(c, shots=4000, seed=2, single_attempt=True)
    assert abs(single.rejected.mean() - 0.5) < 0.05


@pytest.mark.parametrize("width", [1, 3])
def test_repeat_attempts_are_geometric(width):
    """Replicated retries must keep the attempt count geometric with the body's acceptance."""
    body = Circuit(width)
    body.reset(range(width), noisy=False)
    body.h(range(width))
    slots = body.measure(range(width), noisy=False)
    c = Circuit(width)
    c.repeat(body, range(width), AllZero(tuple(slots)), max_attempts=1000, label="g")
    shots = 20_000
    att = sample(c, shots=shots, seed=4).attempts["g"]
    q = 2.0**-width
    for k in range(1, 6):
        p = q * (1 - q) ** (k - 1)
        assert abs((att == k).mean() - p) < 4 * math.sqrt(p * (1 - p) / shots)


def test_repeat_exhaustion_fraction():
    body, pred = _plus_body()
    c = Circuit(1)
    c.repeat(body, [0], pred, max_attempts=3, label="plus")
    shots = 20_000
    rec = sample(c, shots=shots, seed=6)
    frac = rec.exhausted.mean()
    assert abs(frac - 1 / 8) < 4 * math.sqrt(1 / 8 * 7 / 8 / shots)
    assert np.all(rec.attempts["plus"][rec.exhausted] == 3)


def test_exhaustion_is_flagged():
    body = Circuit(1)
    body.reset([0], noisy=False)
    body.x([0])
    slot = body.measure([0], noisy=False)
    c = Circuit(1)
    c.repeat(body, [0], AllZero(slot), max_attempts=5, label="never")
    assert sample(c, shots=10, seed=0).exhausted.all()
    assert simulate(c, seed=0).exhausted


def test_body_must_reset_before_use():
    body = Circuit(1)
    body.h([0])
    body.measure([0], noisy=False)
    c = Circuit(1)
    c.repeat(body, [0], None)
    with pytest.raises(ValueError):
        sample(c, shots=2, seed=0)


def test_count_sites_orders_single_attempt_sites():
    c = Circuit(3)
    c.reset([0, 1])
    c.cnot([0], [1])
    c.measure([1])
    kinds = [k for k, _ in count_sites(c)]
    assert kinds == ["prep", "prep", "cnot", "meas"]


def test_forced_fault_lands_on_the_chosen_site():
    c = Circuit(2)
    c.reset([0, 1])
    c.cnot([0], [1])
    c.measure([0, 1])
    sites = count_sites(c)
    cnot_site = [k for k, _ in sites].index("cnot")
    # code 5 is X on both qubits
    rec = sample(c, shots=3, seed=0, forced=([cnot_site, -1, 0], [5, 0, 1]))
    assert rec.slots.tolist() == [[1, 1], [0, 0], [1, 1]]


# --- feed-forward --------------------------------------------------------

def test_feedforward_corrects_logical_flip():
    # a level-1 register carrying X on logical 1 is measured onto a copy,
    # and the decoded bit flips the target register back
    from hypercube.circuits import build_zero_encoder
    from hypercube.code import build_code

    table = build_code(1)
    c = Circuit(12)
    for start in (0, 6):
        for op in build_zero_encoder(1).ops:
            c.append(op.name, [q + start for q in op.targets], kind=op.kind)
    flip = np.flatnonzero(table.lx[0])
    c.x(flip)
    c.x(flip + 6)
    slots = c.measure(range(6), noisy=False)
    c.ops.append(FeedForward((slots,), 1, Binding("hard", "correct", 1), "X", (tuple(range(6, 12)),)))
    out = c.measure(range(6, 12), noisy=False)
    for seed in range(10):
        s = simulate(c, seed=seed).slots
        bits = s[list(out)]
        assert not (table.lz @ bits % 2).any()


# --- text format ---------------------------------------------------------

def _nested_circuit():
    body = Circuit(3)
    body.reset(range(3))
    body.h([0])
    body.cnot([0], [1])
    s = body.measure([1])
    c = Circuit(20)
    c.repeat(body, [4, 5, 6], AllOf((AllZero(s),)), max_attempts=7, label="inner")
    c.noise("flip", range(3))
    slots = c.measure(range(6))
    slots2 = c.measure(range(6, 12))
    c.ops.append(FeedForward((slots,), 1, Binding("md", "correct", 1), "Z", (tuple(range(12, 18)),), (1, 0, 2, 3)))
    c.ops.append(FeedForward((slots, slots2), 1, Binding("hard", "correct", 1), "X",
                             (tuple(range(12, 18)),), None, "and"))
    return c, slots, slots2


def test_text_round_trip():
    c, slots, slots2 = _nested_circuit()
    text = c.to_text()
    back = Circuit.from_text(text)
    assert back.to_text() == text
    assert back.num_qubits == c.num_qubits and back.num_classical == c.num_classical
    assert back.count() == c.count()


def test_predicates_round_trip():
    from hypercube.sim.circuit import _parse_predicate

    preds = [
        AllZero((0, 1, 2, 5)),
        DecodeCheck(tuple(range(36)), 2, Binding("md", "detect", 1), True),
        PairCheck(tuple(range(6)), tuple(range(6, 12)), 1, Binding("hard", "detect", 1)),
    ]
    for p in preds:
        assert _parse_predicate(p.to_text()) == AllOf((p,)) or _parse_predicate(p.to_text()) == p


@pytest.mark.parametrize("text", [
    "CIRCUIT qubits=2 slots=0\nFOO 0\n",
    "CIRCUIT qubits=2 slots=0\nCNOT 0\n",
    "CIRCUIT qubits=2 slots=1\nMEASZ 0 1 -> 0\n",
    "CIRCUIT qubits=2 slots=0\nH 5\n",
])
def test_malformed_text_is_rejected(text):
    with pytest.raises(ValueError):
        Circuit.from_text(text).validate()


def test_validate_catches_bad_ops():
    c = Circuit(2)
    c.append("CNOT", [0, 0])
    with pytest.raises(ValueError):
        c.validate()
    c = Circuit(2)
    c.append("NOISE", [0], kind="bogus")
    with pytest.raises(ValueError):
        c.validate()
    with pytest.raises(ValueError):
        Circuit(2).cnot([0, 1], [1])
    with pytest.raises(ValueError):
        FeedForward(((0,),), 1, Binding(), "Y", ((0,),))


def test_noise_model_bounds():
    with pytest.raises(ValueError):
        NoiseModel(1.5)
    assert NoiseModel().silent and not NoiseModel(0.1).silent
