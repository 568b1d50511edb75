"""Secure aggregation of CV key parameters: additive sharing plus distributed Laplace noise.

A round is simulated in-process.  Party steps inside a phase are independent
and the phases (share exchange -> beta broadcast -> noisy submission ->
reconstruction) run as barriers, so executing them as array operations is
equivalent to message passing over reliable, confidential channels.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, FullCoalition, InvalidIndicator, TooFewParties
from .field import FixedPointCodec, mod_add, mod_sum, split
from .privacy import (
    LaplaceSpec, PrivacyBudget, Sensitivity, laplace_scale, sample_beta_1, sample_laplace,
)

VARIABLES = ("eta", "pos", "time")


class Mode(str, enum.Enum):
    SMPC_ONLY = "smpc"
    SMPC_DP = "smpc+dp"


@dataclass(frozen=True)
class CvState:
    """What one CV shares at a decision step.

    ``alpha`` is the one-hot stream indicator, ``delta`` the queued flag,
    ``p`` the position in vehicles from the stopline and ``t`` the virtual
    arrival time relative to the stream's red start.
    """

    alpha: tuple
    delta: int
    p: float
    t: float

    @classmethod
    def in_stream(cls, k: int, n_streams: int, delta: int, p: float, t: float):
        alpha = tuple(int(j == k) for j in range(n_streams))
        return cls(alpha, int(delta), float(p), float(t))

    @property
    def stream(self) -> int:
        return int(np.argmax(self.alpha))


@dataclass(frozen=True)
class PrivateRecord:
    eta: np.ndarray
    pos: np.ndarray
    time: np.ndarray

    @property
    def n_streams(self) -> int:
        return len(self.eta)

    def as_vector(self) -> np.ndarray:
        """Values in protocol variable order: all eta, then pos, then time."""
        return np.concatenate([self.eta, self.pos, self.time])


def prepare_record(s: CvState) -> PrivateRecord:
    """Build the per-stream private values eta = a*d, pos = a*d*p, time = a*d*t."""
    alpha = np.asarray(s.alpha, dtype=np.float64)
    if alpha.ndim != 1 or np.any((alpha != 0) & (alpha != 1)) or alpha.sum() != 1:
        raise InvalidIndicator(f"indicator must be one-hot, got {s.alpha}")
    if s.delta and s.p <= 0:
        raise ValueError("a queued CV must have a positive position")
    eta = alpha * s.delta
    return PrivateRecord(eta, eta * s.p, eta * s.t)


@dataclass
class RoundTranscript:
    """Every message of one round.

    ``shares[v, i, j]`` is the share of variable ``v`` that CV ``i`` sends to
    CV ``j`` (the diagonal is kept locally, never sent).  ``beta`` holds the
    broadcast mixing weight per variable (absent in SMPC-only rounds) and
    ``submissions[v, j]`` the value CV ``j`` submits to the data center.
    """

    round_id: int
    tags: tuple
    shares: np.ndarray
    submissions: np.ndarray
    beta: np.ndarray | None = None

    @property
    def n_parties(self) -> int:
        return self.shares.shape[1]

    @property
    def share_messages(self) -> int:
        n = self.n_parties
        return len(self.tags) * n * (n - 1)

    @property
    def submission_messages(self) -> int:
        return len(self.tags) * self.n_parties

    def messages(self):
        """Yield (round, sender, receiver, tag, value) for every sent message."""
        n = self.n_parties
        for v, tag in enumerate(self.tags):
            for i in range(n):
                for j in range(n):
                    if i != j:
                        yield self.round_id, f"cv{i}", f"cv{j}", tag, int(self.shares[v, i, j])
        if self.beta is not None:
            for v, tag in enumerate(self.tags):
                for j in range(n):
                    yield self.round_id, "dc", f"cv{j}", f"{tag}:beta", float(self.beta[v])
        for v, tag in enumerate(self.tags):
            for j in range(n):
                yield self.round_id, f"cv{j}", "dc", tag, int(self.submissions[v, j])

    def dump(self, fh) -> None:
        """Write one tab-separated line per message."""
        for msg in self.messages():
            fh.write("\t".join(str(x) for x in msg) + "\n")


@dataclass
class AggregateResult:
    eta_hat: np.ndarray
    p_hat: np.ndarray
    t_hat: np.ndarray
    mode: Mode
    n_observed: int
    noise_scale: dict = field(default_factory=dict)

    @property
    def n_streams(self) -> int:
        return len(self.eta_hat)


def _per_stream(sens, n_streams):
    if isinstance(sens, Sensitivity):
        return [sens] * n_streams
    sens = list(sens)
    if len(sens) != n_streams:
        raise DimensionMismatch(f"{len(sens)} sensitivities for {n_streams} streams")
    return sens


def noise_scales(budget: PrivacyBudget, sens, n_streams: int) -> np.ndarray:
    """Laplace scale per protocol variable (eta block, pos block, time block)."""
    sens = _per_stream(sens, n_streams)
    eps = budget.epsilon
    return np.concatenate([
        [laplace_scale(s.delta_eta, eps).b for s in sens],
        [laplace_scale(s.delta_p, eps).b for s in sens],
        [laplace_scale(s.delta_t, eps).b for s in sens],
    ])


def plaintext_sums(records) -> np.ndarray:
    """Exact per-variable sums, for reference and diagnostics only."""
    return np.sum([r.as_vector() for r in records], axis=0)


@functools.lru_cache(maxsize=256)
def _share_order(n: int) -> np.ndarray:
    """Column permutation putting CV i's kept (dependent) share on the diagonal.

    ``split`` returns the dependent share last; row ``i`` of the result maps
    receiver ``j`` to the drawn share index, so the free shares go to the
    other CVs in order.
    """
    j = np.arange(n)
    i = j[:, None]
    return np.where(j == i, n - 1, j - (j > i))


@functools.lru_cache(maxsize=64)
def _tags(k: int) -> tuple:
    return tuple(f"{name}[{s}]" for name in VARIABLES for s in range(k))


def run_round(records, mode=Mode.SMPC_DP, budget: PrivacyBudget | None = None, sens=None,
              rng: np.random.Generator | None = None, codec: FixedPointCodec | None = None,
              round_id: int = 0):
    """Aggregate every (variable, stream) pair over all CVs.

    Returns:
        ``(AggregateResult, RoundTranscript)``.

    Raises:
        TooFewParties: with fewer than two records.
    """
    records = list(records)
    n = len(records)
    if n < 2:
        raise TooFewParties(f"aggregation needs at least 2 CVs, got {n}")
    mode = Mode(mode)
    rng = np.random.default_rng() if rng is None else rng
    codec = codec or FixedPointCodec()
    k = records[0].n_streams
    if any(r.n_streams != k for r in records):
        raise DimensionMismatch("records disagree on the number of streams")

    values = np.stack([r.as_vector() for r in records], axis=1)  # (V, N)
    n_vars = values.shape[0]
    encoded = codec.encode(values)

    # Share phase: CV i keeps the dependent share and sends the free ones.
    drawn = split(encoded, n, rng)  # (V, N, N), dependent share last
    shares = drawn[:, np.arange(n)[:, None], _share_order(n)]
    received = mod_sum(shares, axis=1)  # (V, N): S_j

    beta = None
    scales = {}
    if mode is Mode.SMPC_DP:
        if budget is None or sens is None:
            raise ValueError("SMPC+DP rounds need a privacy budget and sensitivities")
        b = noise_scales(budget, sens, k)
        beta = sample_beta_1(n, rng, size=n_vars)
        # Lap(0, b) is b times a unit Laplace draw.
        xi = b[:, None] * sample_laplace(LaplaceSpec(1.0), rng, size=(n_vars, n))
        submissions = mod_add(received, codec.encode(np.sqrt(beta)[:, None] * xi))
        scales = {name: b[i * k:(i + 1) * k].copy() for i, name in enumerate(VARIABLES)}
    else:
        submissions = received

    totals = codec.decode(mod_sum(submissions, axis=1))
    result = AggregateResult(
        eta_hat=totals[:k], p_hat=totals[k:2 * k], t_hat=totals[2 * k:],
        mode=mode, n_observed=n, noise_scale=scales,
    )
    tags = _tags(k)
    transcript = RoundTranscript(round_id, tags, shares, submissions, beta)
    return result, transcript


@dataclass
class CoalitionView:
    members: tuple
    sent: np.ndarray       # (V, |C|, N): shares the members created
    received: np.ndarray   # (V, N, |C|): shares the members received
    beta: np.ndarray | None


def coalition_view(t: RoundTranscript, coalition) -> CoalitionView:
    """Messages visible to a set of colluding CVs: their own shares plus beta.

    Raises:
        FullCoalition: if every CV is in the coalition.
    """
    members = tuple(sorted(set(coalition)))
    n = t.n_parties
    if any(m < 0 or m >= n for m in members):
        raise ValueError(f"coalition members must be in [0, {n})")
    if len(members) == n:
        raise FullCoalition("a coalition of all CVs learns every input")
    idx = np.asarray(members, dtype=np.intp)
    return CoalitionView(
        members=members,
        sent=t.shares[:, idx, :],
        received=t.shares[:, :, idx],
        beta=None if t.beta is None else t.beta.copy(),
    )
