"""Budget accounting in the concentrated-DP regime, plus the two mechanisms.

The accountant tracks a total budget rho derived from (epsilon, delta) via
epsilon = rho + 2*sqrt(rho*ln(1/delta)); rho composes additively across
mechanism calls and post-processing is free. The Gaussian mechanism perturbs
a sensitivity-1/n answer with variance 1/(2*n^2*rho). Noisy-max selection
adds i.i.d. Gumbel(1/(sqrt(2*rho)*n)) noise to error scores and reports the
argmax, which matches exponential-mechanism selection probabilities.

All randomness flows through explicit NoiseSource streams; there is no global
RNG state. A rho of +inf is the sentinel for noiseless test runs: mechanisms
become identity/argmax and the ledger records zero spend.
"""

from __future__ import annotations

import math
import random
import zlib
from dataclasses import dataclass, field

import numpy as np


class BudgetError(ValueError):
    """A spend would exceed the total budget, or parameters are invalid."""


def rho_from_eps_delta(epsilon: float, delta: float) -> float:
    """Solve epsilon = rho + 2*sqrt(rho*L) for rho, with L = ln(1/delta).

    Closed form: rho = (sqrt(L + epsilon) - sqrt(L))^2. At delta = 1 the
    conversion collapses to rho = epsilon.
    """
    if not epsilon > 0:
        raise BudgetError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < delta <= 1:
        raise BudgetError(f"delta must be in (0, 1], got {delta}")
    big_l = math.log(1.0 / delta)
    return (math.sqrt(big_l + epsilon) - math.sqrt(big_l)) ** 2


def eps_from_rho_delta(rho: float, delta: float) -> float:
    """epsilon = rho + 2*sqrt(rho*ln(1/delta)); inverse of rho_from_eps_delta."""
    if rho < 0:
        raise BudgetError(f"rho must be >= 0, got {rho}")
    if not 0 < delta <= 1:
        raise BudgetError(f"delta must be in (0, 1], got {delta}")
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


_STREAM_SALT = {"init": 0, "gaussian": 1, "gumbel": 2, "rounding": 3}


class NoiseSource:
    """A named, deterministic pseudo-random stream.

    Streams are derived from (seed, label) so that a single run seed fans out
    into independent sub-streams (init, gaussian, gumbel, rounding) and each
    component is reproducible on its own. With crypto=True the stream is
    backed by the OS entropy pool instead (random.SystemRandom) and is not
    reproducible; see README for the caveat on floating-point noise sampling.
    """

    def __init__(self, seed: int = 0, label: str = "", crypto: bool = False):
        self.seed = seed
        self.label = label
        self.crypto = crypto
        if crypto:
            self._sys = random.SystemRandom()
            self._rng = None
        else:
            salt = _STREAM_SALT.get(label, zlib.crc32(label.encode("utf-8")))
            self._rng = np.random.default_rng(np.random.SeedSequence((int(seed), salt)))
            self._sys = None

    def uniform(self, size: int | None = None):
        """Uniform draws on the open interval (0, 1)."""
        if self._rng is not None:
            u = self._rng.random(size)
            tiny = np.finfo(np.float64).tiny
            return float(max(u, tiny)) if size is None else np.maximum(u, tiny)
        if size is None:
            return self._sys.random() or math.ulp(0.0)
        return np.array([self._sys.random() or math.ulp(0.0) for _ in range(size)])

    def normal(self, scale: float, size: int | None = None):
        """Centered Gaussian draws with standard deviation `scale`."""
        if self._rng is not None:
            return self._rng.normal(0.0, scale, size)
        if size is None:
            return self._sys.gauss(0.0, scale)
        return np.array([self._sys.gauss(0.0, scale) for _ in range(size)])

    def uniform_signed(self, shape):
        """Uniform draws on [-1, 1); used for dataset initialization."""
        if self._rng is not None:
            return self._rng.uniform(-1.0, 1.0, shape)
        flat = np.array([self._sys.uniform(-1.0, 1.0) for _ in range(int(np.prod(shape)))])
        return flat.reshape(shape)


def gaussian_noise_sigma(n: int, rho: float) -> float:
    """Standard deviation sqrt(1/(2*n^2*rho)) for a sensitivity-1/n answer."""
    return math.sqrt(1.0 / (2.0 * n * n * rho))


def gaussian_mechanism(true_answer, n: int, rho: float, rng: NoiseSource):
    """Perturb answer(s) with Gaussian noise of variance 1/(2*n^2*rho).

    Accepts a scalar or a vector of answers; one draw is consumed per answer,
    in order. rho = +inf is the noiseless sentinel and returns the input
    unchanged. Recording the spend on a ledger is the caller's job.
    """
    if n < 1:
        raise BudgetError(f"n must be >= 1, got {n}")
    if math.isinf(rho):
        return true_answer
    if not rho > 0:
        raise BudgetError(f"rho must be > 0, got {rho}")
    sigma = gaussian_noise_sigma(n, rho)
    arr = np.asarray(true_answer, dtype=np.float64)
    if arr.ndim == 0:
        return float(arr) + rng.normal(sigma)
    return arr + rng.normal(sigma, size=arr.shape[0])


def gumbel_sample(scale: float, rng: NoiseSource, size: int | None = None):
    """Standard Gumbel draws scaled by `scale`: -scale*ln(-ln(U)), U in (0,1)."""
    if not scale > 0:
        raise BudgetError(f"scale must be > 0, got {scale}")
    u = rng.uniform(size)
    return -scale * np.log(-np.log(u))


def report_noisy_max(
    true_answers, conjectured, n: int, rho: float, rng: NoiseSource
) -> int:
    """Index of the largest |true - conjectured| after Gumbel perturbation.

    Noise scale is 1/(sqrt(2*rho)*n); one draw per candidate is consumed in
    index order. rho = +inf returns the deterministic argmax. Ties break
    toward the smallest index.
    """
    t = np.asarray(true_answers, dtype=np.float64)
    c = np.asarray(conjectured, dtype=np.float64)
    if t.shape != c.shape or t.ndim != 1:
        raise BudgetError(f"score vectors must be equal-length 1-D, got {t.shape} vs {c.shape}")
    if t.shape[0] == 0:
        raise BudgetError("cannot select from empty score vectors")
    scores = np.abs(t - c)
    if math.isinf(rho):
        return int(np.argmax(scores))
    if not rho > 0:
        raise BudgetError(f"rho must be > 0, got {rho}")
    scale = 1.0 / (math.sqrt(2.0 * rho) * n)
    return int(np.argmax(scores + gumbel_sample(scale, rng, size=t.shape[0])))


# Relative slack on the budget cap: per-call shares are rounded floats, so a
# full run's ledger can exceed rho_total by a few ulps without being a leak.
_CAP_SLACK = 1e-9


@dataclass
class PrivacyBudget:
    """Total budget plus an append-only ledger of per-call spends."""

    epsilon: float
    delta: float
    rho_total: float
    private: bool = True
    ledger: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.private:
            back = eps_from_rho_delta(self.rho_total, self.delta)
            if abs(back - self.epsilon) > 1e-9:
                raise BudgetError(
                    f"rho_total {self.rho_total} does not reproduce epsilon "
                    f"{self.epsilon} (got {back})"
                )

    @classmethod
    def from_eps_delta(cls, epsilon: float, delta: float) -> "PrivacyBudget":
        if not 0 < delta < 1:
            raise BudgetError(f"delta must be in (0, 1), got {delta}")
        return cls(epsilon, delta, rho_from_eps_delta(epsilon, delta))

    @classmethod
    def non_private(cls) -> "PrivacyBudget":
        """Noiseless sentinel budget for test runs; spends are recorded as 0."""
        return cls(math.inf, 0.0, math.inf, private=False)

    def spend(self, label: str, rho: float) -> None:
        if rho < 0 or math.isinf(rho):
            raise BudgetError(f"ledger spend must be finite and >= 0, got {rho}")
        new_total = self.spent() + rho
        if self.private and new_total > self.rho_total * (1.0 + _CAP_SLACK) + 1e-15:
            raise BudgetError(
                f"spend {rho} for {label!r} would exceed budget: "
                f"{new_total} > {self.rho_total}"
            )
        self.ledger.append((label, rho))

    def spent(self) -> float:
        return math.fsum(r for _, r in self.ledger)

    def remaining(self) -> float:
        return self.rho_total - self.spent()

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "rho_total": self.rho_total,
            "rho_spent": self.spent(),
            "private": self.private,
        }

    def ledger_json(self) -> list[dict]:
        return [{"label": lab, "rho": rho} for lab, rho in self.ledger]
