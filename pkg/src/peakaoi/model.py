"""Domain types: system constants, sensing/computing time laws and policies.

Every type here is an immutable dataclass, so instances can be shared freely
between worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np

from .errors import DeadPolicy, InvalidParam

__all__ = [
    "SystemParams",
    "ScDistribution",
    "EmpiricalSc",
    "ThresholdFb",
    "WindowFb",
    "ProbFb",
    "WindowNoFb",
    "ProbNoFb",
    "ThresholdNoFb",
    "PolicySpec",
    "SCHEMES",
    "make_policy",
    "validate",
    "sample_sc",
]


def _finite_number(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParam(f"{name} must be a real number, got {value!r}") from None
    if math.isnan(value):
        raise InvalidParam(f"{name} must not be NaN")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Energy arrival rate ``lam``, erasure probability ``pe`` and the
    deterministic transmission duration ``D``."""

    lam: float
    pe: float
    D: float

    def __post_init__(self):
        lam = _finite_number(self.lam, "lambda")
        pe = _finite_number(self.pe, "pe")
        D = _finite_number(self.D, "D")
        if not (lam > 0 and math.isfinite(lam)):
            raise InvalidParam(f"lambda must be > 0 and finite, got {lam}")
        if not 0.0 <= pe < 1.0:
            raise InvalidParam(f"pe must lie in [0, 1), got {pe}")
        if not (D > 0 and math.isfinite(D)):
            raise InvalidParam(f"D must be > 0 and finite, got {D}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "pe", pe)
        object.__setattr__(self, "D", D)

    @property
    def mean_recharge(self) -> float:
        return 1.0 / self.lam


@dataclass(frozen=True)
class ScDistribution:
    """Two-point sensing/computing time: ``m1`` w.p. ``1 - p2``, ``m2`` w.p. ``p2``.

    ``p2 = 0`` gives a deterministic S/C time.
    """

    m1: float
    m2: float
    p2: float

    def __post_init__(self):
        m1 = _finite_number(self.m1, "m1")
        m2 = _finite_number(self.m2, "m2")
        p2 = _finite_number(self.p2, "p2")
        if not (m1 >= 0 and math.isfinite(m1)):
            raise InvalidParam(f"m1 must be >= 0 and finite, got {m1}")
        if not (m2 >= m1 and math.isfinite(m2)):
            raise InvalidParam(f"m2 must be finite and >= m1 = {m1}, got {m2}")
        if not 0.0 <= p2 <= 1.0:
            raise InvalidParam(f"p2 must lie in [0, 1], got {p2}")
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def from_theta(cls, theta: float) -> "ScDistribution":
        """Mean-5 family with variance ``20 + 4 * theta``."""
        theta = _finite_number(theta, "theta")
        if theta < 0:
            raise InvalidParam(f"theta must be >= 0, got {theta}")
        return cls(m1=1.0, m2=10.0 + theta, p2=4.0 / (9.0 + theta))

    @property
    def p1(self) -> float:
        return 1.0 - self.p2

    def mean(self) -> float:
        return self.p1 * self.m1 + self.p2 * self.m2

    def second_moment(self) -> float:
        return self.p1 * self.m1**2 + self.p2 * self.m2**2

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    @property
    def min_support(self) -> float:
        return self.m1 if self.p2 < 1.0 else self.m2

    @property
    def max_support(self) -> float:
        return self.m2 if self.p2 > 0.0 else self.m1


@dataclass(frozen=True, eq=False)
class EmpiricalSc:
    """S/C time resampled uniformly from observed durations.

    Only the simulator accepts this law; closed forms need the two-point family.
    """

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64).ravel()
        if arr.size == 0:
            raise InvalidParam("empirical S/C sample must contain at least one value")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidParam("empirical S/C durations must be finite and >= 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_file(cls, path) -> "EmpiricalSc":
        values = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    values.append(float(line))
                except ValueError:
                    raise InvalidParam(
                        f"{path}:{lineno}: not a duration: {line!r}"
                    ) from None
        return cls(np.array(values))

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def second_moment(self) -> float:
        return float(np.mean(self.samples**2))

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    @property
    def min_support(self) -> float:
        return float(self.samples.min())

    @property
    def max_support(self) -> float:
        return float(self.samples.max())

    def __eq__(self, other):
        return isinstance(other, EmpiricalSc) and np.array_equal(
            self.samples, other.samples
        )

    def __hash__(self):
        return hash(self.samples.tobytes())


AnyScDistribution = Union[ScDistribution, EmpiricalSc]


# --- policies ---------------------------------------------------------------


def _check_window(W, allow_inf):
    W = _finite_number(W, "W")
    if math.isinf(W) and (W < 0 or not allow_inf):
        raise InvalidParam(f"W must be finite for this scheme, got {W}")
    if W < 0:
        raise InvalidParam(f"W must be >= 0, got {W}")
    return W


@dataclass(frozen=True)
class _Policy:
    W: float

    scheme: ClassVar[str] = ""
    feedback: ClassVar[bool] = True
    has_closed_form: ClassVar[bool] = False
    _allow_inf: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "W", _check_window(self.W, self._allow_inf))

    def render(self) -> str:
        extra = [f"{k}={getattr(self, k)}" for k in ("B", "pTx") if hasattr(self, k)]
        return f"{self.scheme}(W={self.W:g}{''.join(', ' + e for e in extra)})"


def _check_attempts(B):
    if isinstance(B, bool) or not float(B).is_integer() or int(B) < 1:
        raise InvalidParam(f"B must be a positive integer, got {B!r}")
    return int(B)


@dataclass(frozen=True)
class ThresholdFb(_Policy):
    """Transmit while the update's age is at most ``W``; stop on success."""

    scheme: ClassVar[str] = "threshold-fb"


@dataclass(frozen=True)
class ThresholdNoFb(_Policy):
    """Keep resending while the age is at most ``W`` regardless of success."""

    scheme: ClassVar[str] = "threshold-nofb"
    feedback: ClassVar[bool] = False
    _allow_inf: ClassVar[bool] = False


@dataclass(frozen=True)
class WindowFb(_Policy):
    """Commit when ``C + I <= W``; up to ``B`` total attempts, stop on success."""

    B: int = 1

    scheme: ClassVar[str] = "window-fb"
    has_closed_form: ClassVar[bool] = True

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "B", _check_attempts(self.B))


@dataclass(frozen=True)
class WindowNoFb(WindowFb):
    """Commit when ``C + I <= W``; always make exactly ``B`` attempts."""

    scheme: ClassVar[str] = "window-nofb"
    feedback: ClassVar[bool] = False


@dataclass(frozen=True)
class ProbFb(_Policy):
    """Commit when ``C + I <= W``; each epoch transmit w.p. ``pTx``, stop on success."""

    pTx: float = 1.0

    scheme: ClassVar[str] = "prob-fb"
    has_closed_form: ClassVar[bool] = True

    def __post_init__(self):
        super().__post_init__()
        p = _finite_number(self.pTx, "pTx")
        if not 0.0 < p <= 1.0:
            raise InvalidParam(f"pTx must lie in (0, 1], got {p}")
        object.__setattr__(self, "pTx", p)


@dataclass(frozen=True)
class ProbNoFb(ProbFb):
    """Like :class:`ProbFb` without feedback; ``pTx = 1`` would never release."""

    pTx: float = 0.5

    scheme: ClassVar[str] = "prob-nofb"
    feedback: ClassVar[bool] = False

    def __post_init__(self):
        super().__post_init__()
        if self.pTx >= 1.0:
            raise InvalidParam(
                "pTx must be < 1 without feedback (the extra-time term diverges)"
            )


PolicySpec = Union[ThresholdFb, WindowFb, ProbFb, WindowNoFb, ProbNoFb, ThresholdNoFb]

SCHEMES = {
    cls.scheme: cls
    for cls in (ThresholdFb, WindowFb, ProbFb, ThresholdNoFb, WindowNoFb, ProbNoFb)
}


def make_policy(scheme: str, W: float = math.inf, B=None, pTx=None) -> PolicySpec:
    """Build a policy from its scheme name, e.g. ``"window-fb"``."""
    try:
        cls = SCHEMES[scheme]
    except KeyError:
        raise InvalidParam(
            f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}"
        ) from None
    kwargs = {"W": W}
    if issubclass(cls, WindowFb):
        kwargs["B"] = 1 if B is None else B
    elif issubclass(cls, ProbFb):
        if pTx is not None:
            kwargs["pTx"] = pTx
    return cls(**kwargs)


def validate(params: SystemParams, dist, policy) -> None:
    """Raise unless ``(params, dist, policy)`` describes a policy that completes cycles.

    Type invariants are enforced at construction; this adds the cross-object
    check that the initial-age gate ``C + I <= W`` has positive probability.
    """
    if not isinstance(params, SystemParams):
        raise InvalidParam(f"params must be SystemParams, got {type(params).__name__}")
    if not isinstance(dist, (ScDistribution, EmpiricalSc)):
        raise InvalidParam(f"dist must be an S/C distribution, got {type(dist).__name__}")
    if not isinstance(policy, _Policy):
        raise InvalidParam(f"policy must be a PolicySpec, got {type(policy).__name__}")
    if policy.W <= dist.min_support:
        raise DeadPolicy(
            f"W = {policy.W:g} <= smallest S/C time {dist.min_support:g}: "
            "the age gate C + I <= W can never pass"
        )


def sample_sc(dist, rng: np.random.Generator, size=None):
    """Draw S/C durations from ``dist`` using ``rng``."""
    if isinstance(dist, EmpiricalSc):
        return rng.choice(dist.samples, size=size)
    u = rng.random(size)
    return np.where(u < dist.p1, dist.m1, dist.m2) if size is not None else (
        dist.m1 if u < dist.p1 else dist.m2
    )
