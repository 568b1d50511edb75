"""Joint maximum-likelihood estimation of per-stream arrival rates.

Arrivals of every stream are Poisson with rate ``lambda_k = lambda_0 * gamma_k``,
where the stream proportions ``gamma_k`` come from queued-CV counts over the
last few cycles.  Each queued CV at position ``p`` with arrival time ``t``
after red start is one Poisson observation, which gives the closed form

    lambda_0 = sum(p) / sum_k gamma_k * sum_{i in k}(t_i).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

LAMBDA_MIN = 1e-4


class CycleHistory:
    """Ring buffer of per-stream queued-CV counts for the last ``c`` decisions."""

    def __init__(self, n_streams: int = 8, c: int = 10):
        self.n_streams = n_streams
        self.c = c
        self._rows: deque[np.ndarray] = deque(maxlen=c)

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def counts(self) -> np.ndarray:
        if not self._rows:
            return np.zeros((0, self.n_streams))
        return np.stack(self._rows)

    def copy(self) -> "CycleHistory":
        h = CycleHistory(self.n_streams, self.c)
        h._rows.extend(r.copy() for r in self._rows)
        return h


def update_history(h: CycleHistory, eta_hat) -> CycleHistory:
    """Push one decision's (possibly noisy) counts, clamped at zero."""
    eta = np.asarray(eta_hat, dtype=np.float64)
    if eta.shape != (h.n_streams,):
        raise DimensionMismatch(f"expected {h.n_streams} counts, got shape {eta.shape}")
    h._rows.append(np.maximum(eta, 0.0))
    return h


def gamma_from_history(h: CycleHistory) -> np.ndarray:
    """Stream proportions of queued CVs; uniform when the history is empty or all zero."""
    totals = h.counts.sum(axis=0)
    grand = totals.sum()
    if grand <= 0:
        return np.full(h.n_streams, 1.0 / h.n_streams)
    return totals / grand


@dataclass
class ArrivalEstimate:
    lambda_k: np.ndarray
    gamma_k: np.ndarray
    degenerate: bool = False

    @property
    def total(self) -> float:
        return float(self.lambda_k.sum())


def joint_rates(p_hat, t_hat, gamma) -> np.ndarray | None:
    """Unclamped joint MLE; ``None`` when the weighted time sum is not positive.

    Inputs are clamped at zero first.  Exposed separately so scenario sampling
    can check a draw against the admissible range before clamping.
    """
    p = np.maximum(np.asarray(p_hat, dtype=np.float64), 0.0)
    t = np.maximum(np.asarray(t_hat, dtype=np.float64), 0.0)
    g = np.asarray(gamma, dtype=np.float64)
    denom = float(np.dot(g, t))
    if not denom > 0:
        return None
    return g * p.sum() / denom


def estimate(p_hat, t_hat, gamma, lambda_max=np.inf,
             lambda_min: float = LAMBDA_MIN) -> ArrivalEstimate:
    """Per-stream arrival rates (veh/s) from aggregated positions and arrival times.

    ``lambda_max`` is a scalar or per-stream cap (the saturation flow ``1/h_k``).
    A non-positive denominator returns ``lambda_min`` everywhere and sets
    ``degenerate``.
    """
    p_hat = np.asarray(p_hat, dtype=np.float64)
    t_hat = np.asarray(t_hat, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    if not (p_hat.shape == t_hat.shape == gamma.shape):
        raise DimensionMismatch("p_hat, t_hat and gamma must have the same shape")
    rates = joint_rates(p_hat, t_hat, gamma)
    if rates is None:
        return ArrivalEstimate(np.full(gamma.shape, lambda_min), gamma.copy(), degenerate=True)
    upper = np.broadcast_to(np.asarray(lambda_max, dtype=np.float64), rates.shape)
    return ArrivalEstimate(np.clip(rates, lambda_min, upper), gamma.copy())
