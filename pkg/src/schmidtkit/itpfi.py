"""Type of infinite tensor products of finite type I factors from Schmidt spectra.

Per-site spectra ``lambda^(k)`` (decreasing, positive, summing to one) feed
three series:

* ``S1 = sum_k |1 - lambda_1^(k)|``                         (finite iff type I)
* ``S2 = sum_k sum_r |d_k^(-1/2) - (lambda_r^(k))^(1/2)|^2``   (finite iff type II_1)
* ``S3 = sum_k sum_r lambda_r^(k) min(|lambda_1^(k)/lambda_r^(k) - 1|, C)``
  (infinite iff type III, when ``lambda_1^(k)`` stays bounded below)

Closed-form families (constant, alternating, geometric) are decided exactly;
anything else gets a heuristic verdict from the decay of the series terms.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .exceptions import ValidationError
from .states import BipartiteVector, DensityOperator

NORMALIZATION_TOL = 1e-12
FAMILIES = ("constant", "alternating", "geometric", "explicit_list", "generator")
EXACT_FAMILIES = ("constant", "alternating", "geometric")
# heuristic mode: terms whose second-half minimum stays above this fraction of the
# first-half median are treated as not tending to zero
NON_DECAY_RATIO = 0.9
# heuristic guard: lambda_1 counts as bounded below unless log lambda_1 falls
# faster than k**-GUARD_SLOPE over the second half of the horizon
GUARD_SLOPE = 0.05
III_ALTERNATING_NOTE = ("alternating spectra (1/(1+a1), a1/(1+a1)), (1/(1+a2), a2/(1+a2)) give "
                        "type III_1 when log(a1)/log(a2) is irrational; not decidable in floating point")


def _check_spectrum(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValidationError("a spectrum must be a nonempty list")
    if np.any(lam <= 0):
        raise ValidationError("spectrum values must be strictly positive")
    if abs(lam.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"spectrum sums to {lam.sum():.15g}, not 1")
    if np.any(np.diff(lam) > NORMALIZATION_TOL):
        raise ValidationError("spectrum must be in decreasing order")
    return lam


def _terms(lam: np.ndarray, c: float):
    d = lam.size
    t1 = abs(1.0 - lam[0])
    t2 = float(np.sum((d ** -0.5 - np.sqrt(lam)) ** 2))
    # lambda_r min(|lambda_1/lambda_r - 1|, C) = min(|lambda_1 - lambda_r|, C lambda_r)
    t3 = float(np.sum(np.minimum(np.abs(lam[0] - lam), c * lam)))
    return t1, t2, t3


@dataclass(frozen=True)
class SchmidtSpectrumSequence:
    """Per-site Schmidt spectra.

    ``values`` holds the spectra that define the family: one list for
    ``constant``, two for ``alternating``, the explicit list for
    ``explicit_list``. The ``geometric`` family uses ``weights`` and ``ratio``:
    ``lambda_r^(k) = weights[r-2] * ratio**k`` for ``r >= 2`` and
    ``lambda_1^(k) = 1 - sum_r lambda_r^(k)``. ``trivial_prefix`` prepends that
    many sites with spectrum ``(1,)``.
    """

    family_tag: str
    values: List[List[float]] = field(default_factory=list)
    horizon: int = 1000
    weights: Optional[List[float]] = None
    ratio: Optional[float] = None
    generator: Optional[Callable[[int], Sequence[float]]] = field(default=None, compare=False)
    trivial_prefix: int = 0

    def __post_init__(self):
        if self.family_tag not in FAMILIES:
            raise ValidationError(f"unknown family_tag {self.family_tag!r}")
        if self.horizon < 2:
            raise ValidationError("horizon must be at least 2")
        vals = [_check_spectrum(v) for v in self.values]
        object.__setattr__(self, "values", [list(map(float, v)) for v in vals])
        tag = self.family_tag
        if tag == "constant" and len(vals) != 1:
            raise ValidationError("constant family needs exactly one spectrum")
        if tag == "alternating" and len(vals) != 2:
            raise ValidationError("alternating family needs exactly two spectra")
        if tag == "explicit_list" and not vals:
            raise ValidationError("explicit_list family needs at least one spectrum")
        if tag == "generator" and self.generator is None:
            raise ValidationError("generator family needs a callable")
        if tag == "geometric":
            if not self.weights or self.ratio is None or not 0 < self.ratio < 1:
                raise ValidationError("geometric family needs weights and 0 < ratio < 1")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w <= 0) or np.any(np.diff(w) > 0):
                raise ValidationError("geometric weights must be positive and decreasing")
            if 1 - w.sum() * self.ratio < w[0] * self.ratio:
                raise ValidationError("geometric family is not decreasingly ordered at k = 1")

    @classmethod
    def constant(cls, lam, horizon: int = 1000) -> "SchmidtSpectrumSequence":
        return cls("constant", [list(lam)], horizon)

    @classmethod
    def alternating(cls, lam1, lam2, horizon: int = 1000) -> "SchmidtSpectrumSequence":
        return cls("alternating", [list(lam1), list(lam2)], horizon)

    @classmethod
    def geometric(cls, weights, ratio: float, horizon: int = 1000) -> "SchmidtSpectrumSequence":
        return cls("geometric", [], horizon, weights=list(weights), ratio=float(ratio))

    @classmethod
    def powers(cls, alpha: float, horizon: int = 1000) -> "SchmidtSpectrumSequence":
        """Constant two-level spectrum ``(1/(1+alpha), alpha/(1+alpha))``."""
        if not 0 < alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        return cls.constant([1 / (1 + alpha), alpha / (1 + alpha)], horizon)

    def with_horizon(self, horizon: int) -> "SchmidtSpectrumSequence":
        return SchmidtSpectrumSequence(self.family_tag, self.values, horizon, self.weights,
                                       self.ratio, self.generator, self.trivial_prefix)

    def with_trivial_prefix(self, count: int) -> "SchmidtSpectrumSequence":
        return SchmidtSpectrumSequence(self.family_tag, self.values, self.horizon, self.weights,
                                       self.ratio, self.generator, self.trivial_prefix + count)

    @property
    def effective_horizon(self) -> int:
        if self.family_tag == "explicit_list":
            return min(self.horizon, self.trivial_prefix + len(self.values))
        return self.horizon

    def spectrum(self, k: int) -> np.ndarray:
        """Spectrum at site ``k >= 1``; geometric tails may underflow to zero."""
        if k < 1:
            raise ValidationError("sites are numbered from 1")
        if k <= self.trivial_prefix:
            return np.ones(1)
        j = k - self.trivial_prefix
        tag = self.family_tag
        if tag == "constant":
            return np.asarray(self.values[0])
        if tag == "alternating":
            return np.asarray(self.values[(j - 1) % 2])
        if tag == "explicit_list":
            return np.asarray(self.values[j - 1])
        if tag == "geometric":
            tail = np.asarray(self.weights) * self.ratio ** j
            return np.concatenate([[1 - tail.sum()], tail])
        return _check_spectrum(self.generator(j))

    def terms(self, k: int, c: float):
        """Summands of ``(S1, S2, S3)`` at site ``k``."""
        if self.family_tag == "geometric" and k > self.trivial_prefix:
            j = k - self.trivial_prefix
            tail = np.asarray(self.weights) * self.ratio ** j
            eps = float(tail.sum())
            d = tail.size + 1
            head = np.sqrt(1 - eps) if eps > 1e-8 else 1 - eps / 2
            t2 = (d ** -0.5 - head) ** 2 + float(np.sum((d ** -0.5 - np.sqrt(tail)) ** 2))
            t3 = float(np.sum(np.minimum(np.abs(1 - eps - tail), c * tail)))
            return eps, t2, t3
        return _terms(self.spectrum(k), c)


@dataclass(frozen=True)
class TypeVerdict:
    type_label: str
    partial_sums: np.ndarray  # shape (3, horizon)
    mode: str
    decisions: tuple = ()
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"type": self.type_label, "mode": self.mode,
                "decisions": {"S1": self.decisions[0], "S2": self.decisions[1], "S3": self.decisions[2]},
                "partial_sums": {"S1": self.partial_sums[0].tolist(),
                                 "S2": self.partial_sums[1].tolist(),
                                 "S3": self.partial_sums[2].tolist()},
                "notes": list(self.notes)}


def _exact_decisions(seq: SchmidtSpectrumSequence, c: float):
    """Convergence of the three series for the closed-form families."""
    if seq.family_tag == "geometric":
        # S1 terms are geometric; S2 terms tend to |d^-1/2 - 1|^2 + (d-1)/d > 0;
        # S3 terms are eventually C * (geometric tail)
        return "converges", "diverges", "converges"
    spectra = [np.asarray(v) for v in seq.values]
    term_sets = [_terms(lam, c) for lam in spectra]
    # periodic sequences: a series converges iff every periodic term vanishes
    out = []
    for idx in range(3):
        out.append("converges" if all(t[idx] == 0.0 for t in term_sets) else "diverges")
    return tuple(out)


def _decay_decision(terms: np.ndarray) -> str:
    """Geometric-vs-power-law fit of series terms over the second half of the horizon."""
    tail = terms[len(terms) // 2:]
    if np.all(tail == 0):
        return "converges"
    k = np.arange(len(terms) // 2, len(terms)) + 1.0
    pos = tail > 0
    if pos.sum() < 4:
        return "converges" if tail[-1] == 0 else "inconclusive"
    kk, logt = k[pos], np.log(tail[pos])
    spread = np.ptp(logt)
    if spread < 1e-9:
        return "diverges"  # constant positive terms
    head = terms[:len(terms) // 2]
    if tail.min() >= NON_DECAY_RATIO * np.median(head):
        return "diverges"  # terms do not tend to zero (e.g. periodic)

    def r2(x, y):
        coef = np.polyfit(x, y, 1)
        resid = y - np.polyval(coef, x)
        tot = np.sum((y - y.mean()) ** 2)
        return (1 - np.sum(resid ** 2) / tot if tot > 0 else 1.0), coef[0]

    r2_geo, slope_geo = r2(kk, logt)
    r2_pow, slope_pow = r2(np.log(kk), logt)
    geo = "converges" if slope_geo < 0 else "diverges"
    p = -slope_pow
    if p > 1.1:
        power = "converges"
    elif p < 0.9:
        power = "diverges"
    else:
        power = "inconclusive"
    if abs(r2_geo - r2_pow) < 1e-3:
        return geo if geo == power else "inconclusive"
    return geo if r2_geo > r2_pow else power


def _log_slope(values: np.ndarray) -> float:
    """Slope of ``log values`` against ``log k`` over the second half of the horizon."""
    half = len(values) // 2
    k = np.arange(half, len(values)) + 1.0
    return float(np.polyfit(np.log(k), np.log(values[half:]), 1)[0])


def _verdict(decisions, guard_ok: bool) -> str:
    s1, s2, s3 = decisions
    if s1 == "converges":
        return "I"
    if s1 == "diverges" and s2 == "converges":
        return "II1"
    if s1 == "diverges" and s2 == "diverges" and guard_ok and s3 == "diverges":
        return "III"
    return "inconclusive"


def classify(seq: SchmidtSpectrumSequence, c: float = 1.0) -> TypeVerdict:
    """Decide the factor type of the ITPFI state defined by ``seq``."""
    if not c > 0:
        raise ValidationError("C must be positive")
    horizon = seq.effective_horizon
    terms = np.array([seq.terms(k, c) for k in range(1, horizon + 1)]).T
    partial = np.cumsum(terms, axis=1)
    lam1 = np.array([seq.spectrum(k)[0] for k in range(1, horizon + 1)])
    delta = float(lam1.min())
    notes = [f"guard delta = min lambda_1 over horizon = {delta:.9g}"]
    if seq.family_tag in EXACT_FAMILIES:
        decisions = _exact_decisions(seq, c)
        mode = "exact"
        guard_ok = delta > 0  # closed-form families keep lambda_1 >= 1/d
    else:
        decisions = tuple(_decay_decision(t) for t in terms)
        mode = "heuristic"
        guard_ok = delta > 0 and _log_slope(lam1) > -GUARD_SLOPE
        if not guard_ok:
            notes.append("lambda_1 appears to decay: criterion 3 not applicable")
    label = _verdict(decisions, guard_ok)
    if label == "III" and seq.family_tag == "alternating":
        notes.append(III_ALTERNATING_NOTE)
    if label == "inconclusive" and decisions[:2] == ("diverges", "diverges") and decisions[2] == "converges":
        notes.append("neither type I, II_1 nor III: outside the classifier's scope")
    return TypeVerdict(label, partial, mode, tuple(decisions), tuple(notes))


@dataclass(frozen=True)
class PowersBlocks:
    """First ``pairs`` blocks of the two-qubit product state with parameter ``alpha``."""

    alpha: float
    pairs: int
    block: BipartiteVector
    block_marginal: DensityOperator
    state: BipartiteVector
    schmidt_rank: int


def powers_state_correlations(alpha: float, pairs: int) -> PowersBlocks:
    """Blocks ``(1+alpha)^(-1/2) (|00> + sqrt(alpha) |11>)``, Alice holding one qubit of each."""
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    if pairs < 1:
        raise ValidationError("pairs must be >= 1")
    amps = np.array([1.0, 0.0, 0.0, np.sqrt(alpha)]) / np.sqrt(1 + alpha)
    block = BipartiteVector((2, 2), amps)
    marginal = DensityOperator(np.diag([1 / (1 + alpha), alpha / (1 + alpha)]).astype(complex))
    state = block
    for _ in range(pairs - 1):
        state = state.tensor(block)
    return PowersBlocks(alpha, pairs, block, marginal, state, 2 ** pairs)
