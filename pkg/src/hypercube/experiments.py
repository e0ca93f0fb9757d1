"""Monte Carlo harnesses and the statistics built on them.

Two experiments produce :class:`ExperimentResult` rows:

* ``run_bitflip``: ideal zero-state readout with independent bit flips,
  decoded by one of the three decoders;
* ``run_cnot``: the ten-round logical-CNOT benchmark under circuit noise,
  sampled with the Pauli-frame engine.

Trial counts are adaptive: batches run until ``target_failures`` failures
are seen or ``trials`` is reached.  Batches are seeded from one
``SeedSequence`` per cell, so a (config, seed) pair always reproduces the
same counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuits import MD_CORRECT, build_cnot_experiment
from .code import build_code
from .decoders import DECODERS, DecoderConfig, hard_decode_batch, md_decode_batch, soft_decode_batch
from .sim.circuit import Binding
from .sim.frame import sample
from .sim.noise import NoiseModel

CSV_COLUMNS = ("level", "decoder", "rate", "trials", "failures", "p_fail", "stderr", "discarded", "seed")
DEFAULT_TARGET_FAILURES = 100
DEFAULT_TRIAL_CAP = 10**6


@dataclass(frozen=True)
class ExperimentResult:
    level: int
    decoder: str
    error_rate: float
    trials: int
    failures: int
    discarded: int = 0
    seed: int = 0
    kind: str = "bitflip"

    def __post_init__(self):
        if self.trials < 0 or not 0 <= self.failures <= self.trials or self.discarded < 0:
            raise ValueError("inconsistent trial counts")

    @property
    def p_fail(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        if not self.trials:
            return 0.0
        p = self.p_fail
        return math.sqrt(p * (1 - p) / self.trials)

    def cnot_stats(self) -> tuple[float, float, float, float]:
        """``(p_1, Δ_1, p_CNOT, Δ_CNOT)`` for a CNOT-benchmark row."""
        if self.kind != "cnot":
            raise ValueError("only CNOT benchmark rows convert to per-gate rates")
        return convert_cnot_stats(self.p_fail, self.stderr, 4**self.level)

    def csv_row(self) -> list[str]:
        return [str(self.level), self.decoder, f"{self.error_rate:.6g}", str(self.trials),
                str(self.failures), f"{self.p_fail:.6e}", f"{self.stderr:.6e}", str(self.discarded),
                str(self.seed)]


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor: float
    points_used: int
    residual: float


@dataclass(frozen=True)
class ThresholdResult:
    """Curve crossing; ``value`` is None when the curves do not cross."""

    value: float | None
    stderr: float | None = None
    low: float | None = None
    high: float | None = None
    resamples: int = 0
    crossed_fraction: float = 0.0

    @property
    def crossed(self) -> bool:
        return self.value is not None


# --- adaptive batching ---------------------------------------------------

def _batches(trials: int, batch: int, seed: int, cell_key: tuple):
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in cell_key))
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        (child,) = ss.spawn(1)
        yield size, np.random.default_rng(child)
        done += size


def _rate_key(rate: float) -> int:
    return int(round(rate * 1e12))


# --- bit-flip benchmark --------------------------------------------------

def _zero_state_readout(level: int, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Ideal Z readout of the logical all-zero state: a uniformly random
    element of the span of the X-type stabilizer supports."""
    hx = build_code(level).hx.astype(np.uint8)
    coeffs = rng.integers(0, 2, size=(shots, hx.shape[0]), dtype=np.uint8)
    return (coeffs.astype(np.int64) @ hx.astype(np.int64) & 1).astype(np.uint8)


def decode_logical(outcomes: np.ndarray, level: int, decoder: str, rng: np.random.Generator,
                   cfg: DecoderConfig | None = None, p_e: float = 0.01) -> np.ndarray:
    """Logical bits ``(shots, 4**level)`` from any of the three decoders in correct mode."""
    if decoder == "hard":
        return hard_decode_batch(outcomes, level, rng=rng)[0]
    if decoder == "soft":
        return soft_decode_batch(outcomes, level, p_e)
    if decoder == "md":
        return md_decode_batch(outcomes, level, cfg or DecoderConfig(), rng=rng)[0]
    raise ValueError(f"unknown decoder {decoder!r}; expected one of {DECODERS}")


def run_bitflip(level: int, decoder: str, p_flip: float, trials: int, seed: int = 0, *,
                target_failures: int | None = DEFAULT_TARGET_FAILURES, batch: int | None = None,
                cfg: DecoderConfig | None = None, p_e: float | None = None) -> ExperimentResult:
    """Logical failure rate of ``decoder`` under independent bit flips.

    A trial reads out the ideal logical zero state, flips each bit with
    probability ``p_flip`` and fails when any decoded logical bit is 1.
    The soft decoder uses ``p_e`` (default ``p_flip``) as its channel
    estimate.  ``target_failures=None`` runs exactly ``trials`` trials.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0.0 <= p_flip <= 1.0:
        raise ValueError("p_flip must be a probability")
    if decoder not in DECODERS:
        raise ValueError(f"unknown decoder {decoder!r}")
    if batch is None:
        batch = 500 if (decoder == "md" and level >= 4) else 5000
    p_e = p_flip if p_e is None else p_e
    p_e = min(max(p_e, 1e-12), 0.5)
    n = 6**level
    failures = done = 0
    for size, rng in _batches(trials, batch, seed, (level, DECODERS.index(decoder), _rate_key(p_flip))):
        words = _zero_state_readout(level, size, rng)
        words ^= (rng.random((size, n)) < p_flip).astype(np.uint8)
        logical = decode_logical(words, level, decoder, rng, cfg, p_e)
        failures += int(logical.any(axis=1).sum())
        done += size
        if target_failures is not None and failures >= target_failures:
            break
    return ExperimentResult(level, decoder, p_flip, done, failures, 0, seed, "bitflip")


# --- circuit-level CNOT benchmark ----------------------------------------

def cnot_failures(slots: np.ndarray, layout, rng: np.random.Generator, decoder: str = "md",
                  cfg: DecoderConfig | None = None) -> np.ndarray:
    """Per-shot failure flags: any register decodes to a nonzero logical string."""
    fails = np.zeros(len(slots), dtype=bool)
    for reg in layout.slots:
        fails |= decode_logical(slots[:, list(reg)], layout.level, decoder, rng, cfg).any(axis=1)
    return fails


def run_cnot(level: int, p_circ: float, trials: int, seed: int = 0, *,
             target_failures: int | None = DEFAULT_TARGET_FAILURES, batch: int | None = None,
             rounds: int = 10, binding: Binding = MD_CORRECT, max_attempts: int = 1000,
             noise: NoiseModel | None = None) -> ExperimentResult:
    """Failure fraction ``p_10`` of the ``rounds``-round logical-CNOT benchmark.

    Shots whose encoders exhausted ``max_attempts`` count as discarded and
    are left out of ``trials``.  The final registers are decoded with the
    same decoder as the teleportation feed-forward.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    noise = noise or NoiseModel(p_circ)
    circuit, layout = build_cnot_experiment(level, rounds, binding, max_attempts)
    if batch is None:
        batch = {1: 20000, 2: 4000}.get(level, 1000)
    failures = done = discarded = 0
    for size, rng in _batches(trials, batch, seed, (level, 99, _rate_key(p_circ))):
        rec = sample(circuit, noise, shots=size, seed=rng)
        keep = ~rec.exhausted
        discarded += int((~keep).sum())
        fails = cnot_failures(rec.slots[keep], layout, rng, binding.decoder)
        failures += int(fails.sum())
        done += int(keep.sum())
        if target_failures is not None and failures >= target_failures:
            break
    return ExperimentResult(level, binding.decoder, p_circ, done, failures, discarded, seed, "cnot")


# --- statistics ----------------------------------------------------------

def convert_cnot_stats(p_10: float, d_10: float, k: int) -> tuple[float, float, float, float]:
    """Per-round and per-gate rates from the ten-round failure fraction.

    ``p_1 = 1 - (1 - p_10)**(1/10)`` and ``p_CNOT = 1 - (1 - p_1)**(1/k)``,
    with error bars propagated to first order.  Evaluated through
    ``log1p``/``expm1`` so tiny rates keep full relative precision.
    """
    if not 0.0 <= p_10 < 1.0:
        raise ValueError("p_10 must lie in [0, 1); at p_10 = 1 the error bars are undefined")
    if k < 1:
        raise ValueError("logical qubit count must be positive")
    log_10 = math.log1p(-p_10)
    p_1 = -math.expm1(log_10 / 10)
    d_1 = d_10 / 10 * math.exp(log_10 * (0.1 - 1))
    log_1 = math.log1p(-p_1)
    p_cnot = -math.expm1(log_1 / k)
    d_cnot = d_1 / k * math.exp(log_1 * (1 / k - 1))
    return p_1, d_1, p_cnot, d_cnot


def invert_cnot_stats(p_cnot: float, k: int) -> tuple[float, float]:
    """Inverse of the rate part of :func:`convert_cnot_stats`: ``(p_1, p_10)``."""
    if not 0.0 <= p_cnot < 1.0:
        raise ValueError("p_CNOT must lie in [0, 1)")
    log_c = math.log1p(-p_cnot)
    p_1 = -math.expm1(log_c * k)
    p_10 = -math.expm1(log_c * k * 10)
    return p_1, p_10


def _points(points):
    out = []
    for pt in points:
        if isinstance(pt, ExperimentResult):
            out.append((pt.error_rate, pt.p_fail, pt.trials))
        else:
            rate, p = pt[0], pt[1]
            out.append((float(rate), float(p), int(pt[2]) if len(pt) > 2 else 0))
    return sorted(out)


def fit_exponent(points, window: int = 5, start: int = 0) -> FitResult:
    """Least-squares power law through a contiguous window of the lowest-rate points.

    ``points`` holds ``(rate, p_fail)`` pairs or results; the window starts
    at the ``start``-th lowest rate and spans ``window`` points.
    """
    pts = _points(points)
    chosen = pts[start:start + window]
    if len(chosen) < 2:
        raise ValueError("a fit needs at least two points")
    x = np.array([p[0] for p in chosen])
    y = np.array([p[1] for p in chosen])
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("power-law fits need positive rates and failure probabilities")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return FitResult(float(slope), float(np.exp(intercept)), len(chosen), float(np.sqrt(np.mean(resid**2))))


def _crossing(xa, ya, xb, yb) -> float | None:
    """First crossing of two log-log piecewise-linear curves over their overlap."""
    lo, hi = max(xa[0], xb[0]), min(xa[-1], xb[-1])
    if lo >= hi:
        return None
    grid = np.unique(np.concatenate([xa, xb]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    lg = np.log(grid)
    diff = np.interp(lg, np.log(xa), np.log(ya)) - np.interp(lg, np.log(xb), np.log(yb))
    for i in range(len(grid) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0:
            return float(grid[i])
        if d0 * d1 < 0:
            t = d0 / (d0 - d1)
            return float(np.exp(lg[i] + t * (lg[i + 1] - lg[i])))
    if diff[-1] == 0:
        return float(grid[-1])
    return None


def estimate_threshold(curve_a, curve_b, *, bootstrap: int = 200, seed: int = 0) -> ThresholdResult:
    """Crossing rate of two failure curves (e.g. adjacent code levels).

    Points with zero failures are dropped from the point estimate.  When
    trial counts are known, the error bar comes from ``bootstrap`` binomial
    resamples of every point, where a resampled zero count is replaced by
    half a failure.
    """
    a, b = _points(curve_a), _points(curve_b)
    a_pos = [p for p in a if p[1] > 0]
    b_pos = [p for p in b if p[1] > 0]
    if len(a_pos) < 2 or len(b_pos) < 2:
        return ThresholdResult(None)
    xa, ya = np.array([p[0] for p in a_pos]), np.array([p[1] for p in a_pos])
    xb, yb = np.array([p[0] for p in b_pos]), np.array([p[1] for p in b_pos])
    value = _crossing(xa, ya, xb, yb)
    if value is None:
        return ThresholdResult(None)
    if bootstrap <= 0 or any(p[2] <= 0 for p in a + b):
        return ThresholdResult(value)
    rng = np.random.default_rng(seed)
    samples = []

    def resample(curve):
        x = np.array([p[0] for p in curve])
        n = np.array([p[2] for p in curve])
        k = rng.binomial(n, np.array([p[1] for p in curve]))
        return x, np.maximum(k, 0.5) / n

    for _ in range(bootstrap):
        c = _crossing(*resample(a), *resample(b))
        if c is not None:
            samples.append(c)
    if not samples:
        return ThresholdResult(value, resamples=bootstrap)
    s = np.array(samples)
    return ThresholdResult(value, float(s.std(ddof=1)) if len(s) > 1 else 0.0,
                           float(np.quantile(s, 0.025)), float(np.quantile(s, 0.975)),
                           bootstrap, len(s) / bootstrap)


# --- sweeps and output ---------------------------------------------------

@dataclass
class SweepSpec:
    kind: str = "bitflip"
    levels: tuple = (2, 3)
    decoders: tuple = ("md",)
    rates: tuple = ()
    trials: int = DEFAULT_TRIAL_CAP
    target_failures: int | None = DEFAULT_TARGET_FAILURES
    seed: int = 0
    max_attempts: int = 1000
    decoder_cfg: DecoderConfig = field(default_factory=DecoderConfig)
    p_e: float | None = None

    def cells(self):
        decoders = self.decoders if self.kind == "bitflip" else ("md",)
        return [(lv, dec, r) for lv in self.levels for dec in decoders for r in self.rates]


def _run_cell(spec: SweepSpec, cell) -> ExperimentResult:
    level, decoder, rate = cell
    if spec.kind == "bitflip":
        return run_bitflip(level, decoder, rate, spec.trials, spec.seed, target_failures=spec.target_failures,
                           cfg=spec.decoder_cfg, p_e=spec.p_e)
    if spec.kind == "cnot":
        return run_cnot(level, rate, spec.trials, spec.seed, target_failures=spec.target_failures,
                        max_attempts=spec.max_attempts)
    raise ValueError(f"unknown experiment kind {spec.kind!r}")


def run_sweep(spec: SweepSpec, jobs: int = 1, progress=None) -> list[ExperimentResult]:
    """Run every (level, decoder, rate) cell; results come back in cell order."""
    cells = spec.cells()
    if jobs <= 1:
        out = []
        for cell in cells:
            res = _run_cell(spec, cell)
            if progress:
                progress(res)
            out.append(res)
        return out
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        out = list(pool.map(_run_cell, [spec] * len(cells), cells))
    if progress:
        for res in out:
            progress(res)
    return out


def results_to_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in results:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def results_from_csv(text: str, kind: str = "bitflip") -> list[ExperimentResult]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV columns")
    return [ExperimentResult(int(r["level"]), r["decoder"], float(r["rate"]), int(r["trials"]),
                             int(r["failures"]), int(r["discarded"]), int(r["seed"]), kind) for r in rows]


def summarize(results, window: int = 5, bootstrap: int = 200, seed: int = 0) -> dict:
    """Fits per (level, decoder) and crossings of adjacent levels per decoder."""
    groups: dict = {}
    for r in results:
        groups.setdefault((r.decoder, r.level), []).append(r)
    fits, thresholds = {}, {}
    for (dec, lv), rows in sorted(groups.items()):
        positive = [r for r in rows if r.failures > 0]
        key = f"{dec}:L{lv}"
        try:
            fits[key] = asdict(fit_exponent(positive, window))
        except ValueError as exc:
            fits[key] = {"error": str(exc)}
    for dec in sorted({d for d, _ in groups}):
        levels = sorted(lv for d, lv in groups if d == dec)
        for lo, hi in zip(levels, levels[1:]):
            res = estimate_threshold(groups[(dec, lo)], groups[(dec, hi)], bootstrap=bootstrap, seed=seed)
            thresholds[f"{dec}:L{lo}-L{hi}"] = asdict(res) | {"crossed": res.crossed}
    return {"fits": fits, "thresholds": thresholds}


def summary_json(results, **kwargs) -> str:
    return json.dumps(summarize(results, **kwargs), indent=2, sort_keys=True) + "\n"
