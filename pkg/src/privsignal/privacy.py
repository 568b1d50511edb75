"""Privacy budget, vast-majority sensitivities, noise samplers, CV protection types."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidRisk, NonPositiveBudget, NonPositiveInput, TooFewParties

# A four-link intersection has 4 links x 2 directions.
N_DIRECTIONS = 8


def epsilon_bound(p_dire: float, n: float) -> float:
    """Largest privacy budget keeping per-direction identification risk <= p_dire.

    ``eps = ln(8 p_dire (n - 1) / (1 - 8 p_dire))`` for ``n`` participants.

    Raises:
        InvalidRisk: if ``8 * p_dire`` is not in (0, 1).
        NonPositiveBudget: if the bound is <= 0 (risk at or below a random guess).
    """
    risk = N_DIRECTIONS * p_dire
    if not 0.0 < risk < 1.0:
        raise InvalidRisk(f"8*p_dire must lie in (0, 1), got {risk}")
    if n < 2:
        raise TooFewParties(f"need n >= 2, got {n}")
    arg = risk * (n - 1) / (1.0 - risk)
    if arg <= 1.0:
        raise NonPositiveBudget(f"p_dire={p_dire}, n={n} gives ln({arg:.4g}) <= 0")
    return float(np.log(arg))


@dataclass(frozen=True)
class PrivacyBudget:
    p_dire: float
    n_ref: float
    epsilon: float

    @classmethod
    def from_risk(cls, p_dire: float, n_ref: float) -> "PrivacyBudget":
        return cls(p_dire, n_ref, epsilon_bound(p_dire, n_ref))


@dataclass(frozen=True)
class Sensitivity:
    """Vast-majority sensitivities for one stream.

    ``delta_p`` bounds a queued CV's position (vehicles) and ``delta_t`` its
    arrival time after red start (seconds).
    """

    q_e: float
    phi: float
    r_k: float

    def __post_init__(self):
        if self.q_e <= 0 or self.phi <= 0 or self.r_k <= 0:
            raise NonPositiveInput("q_e, phi and r_k must be positive")

    @property
    def delta_eta(self) -> float:
        return 1.0

    @property
    def delta_p(self) -> float:
        return float(self.q_e)

    @property
    def delta_t(self) -> float:
        return float(self.phi * self.r_k)


@dataclass(frozen=True)
class LaplaceSpec:
    b: float


def laplace_scale(delta: float, eps: float) -> LaplaceSpec:
    """Laplace scale ``b = delta / eps`` for a query of sensitivity ``delta``."""
    if delta <= 0 or eps <= 0:
        raise NonPositiveInput(f"delta and eps must be positive (got {delta}, {eps})")
    return LaplaceSpec(delta / eps)


def laplace_from_uniform(u, b: float):
    """Inverse CDF of Lap(0, b) evaluated at ``u`` in (0, 1)."""
    u = np.asarray(u, dtype=np.float64) - 0.5
    return -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace(spec: LaplaceSpec, rng: np.random.Generator, size=None):
    """Draw from Lap(0, b) by inverting the CDF."""
    if spec.b <= 0:
        raise NonPositiveInput("Laplace scale must be positive")
    # rng.random() is in [0, 1); 1 - u is in (0, 1] and avoids log(0).
    u = 1.0 - rng.random(size)
    out = laplace_from_uniform(u, spec.b)
    return float(out) if size is None else out


def beta1_from_uniform(u, n: int):
    """Inverse CDF of Beta(1, n - 1): ``1 - (1 - u)^(1/(n-1))``."""
    if n < 2:
        raise TooFewParties(f"Beta(1, n-1) needs n >= 2, got {n}")
    u = np.asarray(u, dtype=np.float64)
    return -np.expm1(np.log1p(-u) / (n - 1))


def sample_beta_1(n: int, rng: np.random.Generator, size=None):
    """Draw the broadcast mixing weight ``beta ~ Beta(1, n - 1)``."""
    out = beta1_from_uniform(rng.random(size), n)
    return float(out) if size is None else out


@dataclass
class VastMajorityReport:
    type1: int = 0
    type2: int = 0
    type3: int = 0

    @property
    def total(self) -> int:
        return self.type1 + self.type2 + self.type3

    def fractions(self) -> tuple[float, float, float]:
        n = self.total
        if n == 0:
            return (float("nan"),) * 3
        return self.type1 / n, self.type2 / n, self.type3 / n

    def __iadd__(self, other: "VastMajorityReport"):
        self.type1 += other.type1
        self.type2 += other.type2
        self.type3 += other.type3
        return self


def classify_vast_majority(states, sens) -> VastMajorityReport:
    """Count queued CVs by how many of (position, arrival time) fall within bounds.

    ``sens`` is either one :class:`Sensitivity` or a sequence indexed by
    stream.  Type 1: both within bounds; Type 2: exactly one; Type 3: neither.
    Unqueued CVs are not classified.
    """
    report = VastMajorityReport()
    for s in states:
        if not s.delta:
            continue
        sk = sens if isinstance(sens, Sensitivity) else sens[s.stream]
        ok = int(s.p <= sk.delta_p) + int(s.t <= sk.delta_t)
        if ok == 2:
            report.type1 += 1
        elif ok == 1:
            report.type2 += 1
        else:
            report.type3 += 1
    return report


class ParticipantHistory:
    """Sliding mean of observed participant counts, used as the budget's n_ref."""

    def __init__(self, window: int = 5, initial: float = 40.0):
        self.window = window
        self.initial = initial
        self._counts: deque[float] = deque(maxlen=window)

    def push(self, n: float) -> None:
        self._counts.append(float(n))

    @property
    def n_ref(self) -> float:
        if not self._counts:
            return self.initial
        return float(np.mean(self._counts))

    def budget(self, p_dire: float) -> PrivacyBudget:
        return PrivacyBudget.from_risk(p_dire, self.n_ref)
