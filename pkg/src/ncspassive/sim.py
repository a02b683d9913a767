"""Monte Carlo simulation of the lossy networked loop.

Each step draws the two arrival bits, routes the scheduled state
component through the gain to the scheduled actuator, and advances the
plant. Traces carry the dissipation ledger sums so empirical passivity
can be read off directly. Trials use explicit per-trial seeds
(base, base+1, ...) so ensembles are reproducible regardless of
execution order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FitUnavailable
from .model import Gain, LossModel, Plant, Schedule, selector_matrices

__all__ = [
    "InputSignal",
    "SimTrace",
    "EnsembleStats",
    "simulate",
    "ensemble",
    "decay_fit",
    "trace_to_csv",
]

SIGNAL_KINDS = ("zero", "white-noise", "sinusoid", "impulse")


@dataclass(frozen=True)
class InputSignal:
    """Exogenous input generator: zero, white noise, sinusoid, or impulse."""

    kind: str
    dimension: int
    sigma: float = 1.0
    amplitude: float = 1.0
    period: int = 16
    magnitude: float = 1.0
    step: int = 0

    def __post_init__(self) -> None:
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}; expected one of {SIGNAL_KINDS}")
        if self.dimension < 1:
            raise ValueError("signal dimension must be >= 1")
        for name in ("sigma", "amplitude", "magnitude"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.period < 1:
            raise ValueError("sinusoid period must be >= 1")

    @classmethod
    def zero(cls, dimension: int) -> "InputSignal":
        return cls("zero", dimension)

    @classmethod
    def white_noise(cls, dimension: int, sigma: float = 1.0) -> "InputSignal":
        return cls("white-noise", dimension, sigma=sigma)

    @classmethod
    def sinusoid(cls, dimension: int, amplitude: float = 1.0, period: int = 16) -> "InputSignal":
        return cls("sinusoid", dimension, amplitude=amplitude, period=period)

    @classmethod
    def impulse(cls, dimension: int, magnitude: float = 1.0, step: int = 0) -> "InputSignal":
        return cls("impulse", dimension, magnitude=magnitude, step=step)

    def sample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(self.dimension)
        if self.kind == "white-noise":
            return self.sigma * rng.standard_normal(self.dimension)
        if self.kind == "sinusoid":
            return np.full(self.dimension, self.amplitude * np.sin(2.0 * np.pi * k / self.period))
        return np.full(self.dimension, self.magnitude if k == self.step else 0.0)


@dataclass(frozen=True)
class SimTrace:
    """One sampled trajectory with its dissipation ledger.

    ``x`` has horizon+1 rows (state before each step plus the terminal
    state); ``w``, ``z``, ``v``, the mode bits, and slot indices have one
    row per step.
    """

    horizon: int
    x: np.ndarray
    w: np.ndarray
    z: np.ndarray
    v: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    slots: np.ndarray
    seed: int
    schedule: Schedule
    sum_wz: float
    sum_ww: float

    def dissipation_sum(self, eta: float) -> float:
        """Sum over the horizon of w'z - eta w'w."""
        return self.sum_wz - eta * self.sum_ww


def simulate(
    plant: Plant,
    gain: Gain,
    schedule: Schedule,
    loss: LossModel,
    signal: InputSignal,
    horizon: int,
    seed: int,
    x0=None,
) -> SimTrace:
    """Run the lossy loop for ``horizon`` steps, deterministically per seed.

    Per step: draw theta1 then theta2 (message arrives when the uniform
    draw clears the drop rate), then sample w; the received measurement
    is theta1 * S1'S1 x, the applied actuation theta2 * S2S2' K yhat.
    The initial state defaults to zero, matching the zero-initial-state
    passivity experiments.
    """
    if signal.dimension != plant.m1:
        raise DimensionMismatch(
            f"signal dimension {signal.dimension} != plant exogenous width {plant.m1}"
        )
    if gain.K.shape != (plant.m2, plant.n):
        raise DimensionMismatch(
            f"gain must be {plant.m2}x{plant.n} for this plant, got {gain.K.shape}"
        )
    n = plant.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)

    rng = np.random.default_rng(seed)
    xs = np.empty((horizon + 1, n))
    ws = np.empty((horizon, plant.m1))
    zs = np.empty((horizon, plant.p1))
    vs = np.empty((horizon, plant.m2))
    t1s = np.empty(horizon, dtype=np.int64)
    t2s = np.empty(horizon, dtype=np.int64)
    slots = np.empty(horizon, dtype=np.int64)

    projections = {}
    x = x0.copy()
    xs[0] = x
    for k in range(horizon):
        slot = k % schedule.period
        if slot not in projections:
            s1k, s2k = selector_matrices(schedule, slot, plant.p2, plant.m2)
            projections[slot] = (s1k.T @ s1k, s2k @ s2k.T)
        proj_in, proj_out = projections[slot]

        theta1 = int(rng.random() >= loss.alpha1)
        theta2 = int(rng.random() >= loss.alpha2)
        w = signal.sample(k, rng)

        y_hat = theta1 * (proj_in @ x)
        v = gain.K @ y_hat
        applied = theta2 * (proj_out @ v)
        z = plant.C1 @ x + plant.D11 @ w + plant.D12 @ applied
        x = plant.A @ x + plant.B1 @ w + plant.B2 @ applied

        xs[k + 1] = x
        ws[k] = w
        zs[k] = z
        vs[k] = v
        t1s[k] = theta1
        t2s[k] = theta2
        slots[k] = slot

    # the dissipation pairing w'z needs a square channel (p1 == m1)
    sum_wz = float(np.sum(ws * zs)) if plant.p1 == plant.m1 else float("nan")
    sum_ww = float(np.sum(ws * ws))
    return SimTrace(
        horizon=horizon,
        x=xs,
        w=ws,
        z=zs,
        v=vs,
        theta1=t1s,
        theta2=t2s,
        slots=slots,
        seed=seed,
        schedule=schedule,
        sum_wz=sum_wz,
        sum_ww=sum_ww,
    )


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregates over independent trials."""

    trials: int
    horizon: int
    base_seed: int
    eta: float
    mean_sq_norm: np.ndarray  # per-step mean of ||x(k)||^2, length horizon+1
    terminal_fraction: float  # fraction of trials with ||x(T)|| below the threshold
    terminal_threshold: float
    dissipation_mean: float
    dissipation_se: float
    mode_counts: np.ndarray  # 2x2 array of (theta1, theta2) occurrence counts


def ensemble(
    plant: Plant,
    gain: Gain,
    schedule: Schedule,
    loss: LossModel,
    signal: InputSignal,
    horizon: int,
    trials: int,
    base_seed: int,
    x0=None,
    eta: float = 0.0,
    terminal_threshold: float = 1e-3,
) -> EnsembleStats:
    """Run ``trials`` independent traces with seeds base_seed, base_seed+1, ..."""
    if trials < 1:
        raise ValueError("need at least one trial")
    sq_sum = np.zeros(horizon + 1)
    dissipation = np.empty(trials)
    terminal_hits = 0
    mode_counts = np.zeros((2, 2), dtype=np.int64)
    for trial in range(trials):
        trace = simulate(plant, gain, schedule, loss, signal, horizon, base_seed + trial, x0)
        sq_sum += np.sum(trace.x * trace.x, axis=1)
        dissipation[trial] = trace.dissipation_sum(eta)
        if float(np.linalg.norm(trace.x[-1])) < terminal_threshold:
            terminal_hits += 1
        for i in (0, 1):
            for j in (0, 1):
                mode_counts[i, j] += int(np.sum((trace.theta1 == i) & (trace.theta2 == j)))
    mean = float(np.mean(dissipation))
    se = float(np.std(dissipation, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return EnsembleStats(
        trials=trials,
        horizon=horizon,
        base_seed=base_seed,
        eta=eta,
        mean_sq_norm=sq_sum / trials,
        terminal_fraction=terminal_hits / trials,
        terminal_threshold=terminal_threshold,
        dissipation_mean=mean,
        dissipation_se=se,
        mode_counts=mode_counts,
    )


def decay_fit(stats: EnsembleStats) -> tuple[float, float]:
    """Exponential fit (beta, alpha) of the mean-square norm over the tail half.

    Least squares on log mean||x(k)||^2 against k for k in [T/2, T];
    alpha is the fitted per-step ratio, beta the normalized prefactor.
    Raises FitUnavailable when the tail contains zeros (nothing to fit).
    """
    tail_start = stats.horizon // 2
    tail = stats.mean_sq_norm[tail_start:]
    if tail.size < 2 or np.any(tail <= 0.0) or stats.mean_sq_norm[0] <= 0.0:
        raise FitUnavailable("mean-square norm is degenerate over the fitted range")
    ks = np.arange(tail_start, stats.horizon + 1, dtype=float)
    slope, intercept = np.polyfit(ks, np.log(tail), 1)
    alpha = float(np.exp(slope))
    beta = float(np.exp(intercept) / stats.mean_sq_norm[0])
    return beta, alpha


def trace_to_csv(trace: SimTrace, path) -> None:
    """Write one row per step: k, slot, theta1, theta2, x..., w..., z..., v...

    The state column holds x(k), the state the step started from; the
    terminal state appears only through the following row's dynamics and
    the ensemble statistics. Floats are written with full round-trip
    precision.
    """
    n = trace.x.shape[1]
    m1 = trace.w.shape[1]
    p1 = trace.z.shape[1]
    m2 = trace.v.shape[1]
    header = (
        ["k", "slot", "theta1", "theta2"]
        + [f"x{i}" for i in range(n)]
        + [f"w{i}" for i in range(m1)]
        + [f"z{i}" for i in range(p1)]
        + [f"v{i}" for i in range(m2)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(trace.horizon):
            row = [k, int(trace.slots[k]), int(trace.theta1[k]), int(trace.theta2[k])]
            row += [repr(float(v)) for v in trace.x[k]]
            row += [repr(float(v)) for v in trace.w[k]]
            row += [repr(float(v)) for v in trace.z[k]]
            row += [repr(float(v)) for v in trace.v[k]]
            writer.writerow(row)
