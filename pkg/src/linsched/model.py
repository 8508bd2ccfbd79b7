"""Thread/throughput/power curves for a WAN transfer.

Throughput saturates at the path limit ``L`` as threads grow, and CPU power
saturates at ``p_max``. Throughput is in Gbps, power in watts, thread counts
are real-valued until plan export.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SaturationError(ValueError):
    """Throughput at or above the path limit has no finite thread count."""


@dataclass(frozen=True)
class ThroughputModel:
    limit_gbps: float
    s_rho: float = 1 / 24

    def __post_init__(self):
        if not self.limit_gbps > 0 or not self.s_rho > 0:
            raise ValueError("limit_gbps and s_rho must be positive")


@dataclass(frozen=True)
class PowerModel:
    p_max: float = 100.0
    p_min: float = 88.0
    s_p: float = 1 / 50

    def __post_init__(self):
        if not (self.p_max > self.p_min >= 0):
            raise ValueError("need p_max > p_min >= 0")
        if not self.s_p > 0:
            raise ValueError("s_p must be positive")

    @property
    def delta(self) -> float:
        return self.p_max - self.p_min


@dataclass(frozen=True)
class Models:
    """A throughput and power model pair evaluated on the same path."""

    throughput: ThroughputModel
    power: PowerModel = PowerModel()

    @classmethod
    def default(cls, limit_gbps: float) -> "Models":
        return cls(ThroughputModel(limit_gbps))

    @property
    def limit(self) -> float:
        return self.throughput.limit_gbps

    @property
    def k(self) -> float:
        """Curvature constant ``s_P * dP / (s_rho * L)`` of the power-throughput curve."""
        return self.power.s_p * self.power.delta / (self.throughput.s_rho * self.limit)


# The curve functions accept scalars or arrays and return the same kind.


def _out(arr: np.ndarray):
    return arr if arr.ndim else float(arr)


def _threads(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta >= 0):
        raise ValueError(f"thread count must be non-negative, got {theta}")
    return theta


def throughput_of_threads(model: ThroughputModel, theta):
    theta = _threads(theta)
    L = model.limit_gbps
    return _out(L * (1.0 - 1.0 / (model.s_rho * L * theta + 1.0)))


def threads_of_throughput(model: ThroughputModel, rho):
    """Exact inverse of :func:`throughput_of_threads`."""
    rho = np.asarray(rho, dtype=float)
    L = model.limit_gbps
    if not np.all(rho >= 0):
        raise ValueError(f"throughput must be non-negative, got {rho}")
    if np.any(rho >= L):
        raise SaturationError(f"saturation: no finite thread count reaches limit {L} Gbps")
    return _out((1.0 / (model.s_rho * L)) * (rho / (L - rho)))


def power_of_threads(model: PowerModel, theta):
    """CPU draw with ``theta`` threads; ``theta = inf`` gives exactly ``p_max``."""
    theta = _threads(theta)
    d = model.delta
    return _out(d * (1.0 - 1.0 / (model.s_p * d * theta + 1.0)) + model.p_min)


def _throughput(models: Models, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if not np.all((rho >= 0) & (rho <= models.limit)):
        raise ValueError(f"throughput outside [0, {models.limit}]")
    return rho


def power_of_throughput_exact(models: Models, rho):
    rho = _throughput(models, rho)
    L, K = models.limit, models.k
    pw = models.power
    return _out(pw.p_max + pw.delta * (rho - L) / ((K - 1.0) * rho + L))


def power_of_throughput_linear(models: Models, rho):
    rho = _throughput(models, rho)
    return _out(models.power.delta / models.limit * rho + models.power.p_min)
