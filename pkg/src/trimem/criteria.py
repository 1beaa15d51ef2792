"""
Tripartite inseparability criteria, their closed forms and optimal gains.

For node ``k`` the criterion value is

    I_k = [Var(X_i - X_j) + Var(g_k P_k + P_i + P_j)] / 2,   {i, j} = other nodes,

which equals 1 on the vacuum with zero gains. Violating (I_k < 1) any two of the
three certifies GHZ-like tripartite entanglement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from .config import ExperimentSpec
from .gaussian import GaussianState, combination_variance, vacuum_level
from .network import Stage, run_pipeline, stage_efficiencies


class BracketError(RuntimeError):
    """No sign change of the objective's slope could be bracketed."""


@dataclass(frozen=True)
class GainTriple:
    g1: float
    g2: float
    g3: float

    def __post_init__(self) -> None:
        for name in ("g1", "g2", "g3"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(math.isfinite(g) for g in self):
            raise ValueError(f"gains must be finite, got {tuple(self)}")

    def __iter__(self):
        return iter((self.g1, self.g2, self.g3))

    def __getitem__(self, k: int) -> float:
        return (self.g1, self.g2, self.g3)[k]

    @classmethod
    def uniform(cls, g: float) -> GainTriple:
        return cls(g, g, g)


@dataclass(frozen=True)
class CriterionResult:
    I1: float
    I2: float
    I3: float
    gains: GainTriple
    stage: Stage | None = None
    stderr: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        for name in ("I1", "I2", "I3"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.stderr is not None:
            object.__setattr__(self, "stderr", tuple(float(s) for s in self.stderr))

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.I1, self.I2, self.I3)

    @property
    def entangled(self) -> bool:
        return bool(sum(v < 1.0 for v in self.values) >= 2)

    @property
    def I(self) -> float:
        """Second-smallest of the three values: the verdict flips exactly when it crosses 1."""
        return sorted(self.values)[1]

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "stage": self.stage.value if self.stage else None,
            "I": self.I,
            "I1": self.I1,
            "I2": self.I2,
            "I3": self.I3,
            "gains": list(self.gains),
            "entangled": self.entangled,
        }
        if self.stderr is not None:
            d["stderr"] = list(self.stderr)
        return d


def _others(k: int) -> tuple[int, int]:
    if k not in (0, 1, 2):
        raise IndexError(f"node index must be 0, 1 or 2, got {k}")
    i, j = (m for m in range(3) if m != k)
    return i, j


def x_combination(k: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Coefficients of ``X_i - X_j`` paired with node ``k``."""
    i, j = _others(k)
    cx = np.zeros(3)
    cx[i], cx[j] = 1.0, -1.0
    return cx, np.zeros(3)


def p_combination(k: int, g: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Coefficients of ``P_1 + P_2 + P_3`` with gain ``g`` on node ``k``."""
    _others(k)
    cp = np.ones(3)
    cp[k] = g
    return np.zeros(3), cp


def criterion_value(state: GaussianState, k: int, g: float) -> float:
    return 0.5 * (combination_variance(state, *x_combination(k))
                  + combination_variance(state, *p_combination(k, g)))


def evaluate_criteria(state: GaussianState, gains: GainTriple | ArrayLike,
                      stage: Stage | str | None = None) -> CriterionResult:
    if state.n_modes != 3:
        raise ValueError(f"criteria need a 3-mode state, got {state.n_modes} modes")
    if not isinstance(gains, GainTriple):
        gains = GainTriple(*np.asarray(gains, dtype=float).reshape(3))
    vals = [criterion_value(state, k, gains[k]) for k in range(3)]
    return CriterionResult(*vals, gains=gains, stage=Stage(stage) if stage else None)


def state_optimal_gains(state: GaussianState) -> GainTriple:
    """Per-node gain minimising ``Var(g P_k + P_i + P_j)``: ``-Cov(P_k, P_i + P_j) / Var(P_k)``."""
    cov = state.cov
    gains = []
    for k in range(3):
        i, j = _others(k)
        pk, pi, pj = 2 * k + 1, 2 * i + 1, 2 * j + 1
        gains.append(-(cov[pk, pi] + cov[pk, pj]) / cov[pk, pk])
    return GainTriple(*gains)


def _check_closed_form_args(stage: Stage, efficiency: NDArray[np.float64]) -> None:
    if np.any((efficiency < 0) | (efficiency > 1)) or not np.all(np.isfinite(efficiency)):
        raise ValueError("efficiency must lie in [0, 1]")
    if stage is Stage.INPUT and np.any(efficiency != 1.0):
        raise ValueError("the input stage is lossless; efficiency must be 1")


def closed_form_I(stage: Stage | str, r: ArrayLike, efficiency: ArrayLike, g: ArrayLike):
    """Equal-parameter criterion value at any stage.

    ``eta [12 e^{-2r} + 2 (g+2)^2 e^{-2r} + 4 (g-1)^2 e^{2r}] / 24 + (1 - eta)(1 + g^2/4)``

    ``efficiency`` is 1 at the input, ``eta_M`` for the spin waves and
    ``eta_M * eta_read`` after read-out. The vacuum term carries ``g^2``: it is
    ``Var(g P_1 + P_2 + P_3) / 2`` on the vacuum. Broadcasts over arrays.
    """
    stage = Stage(stage)
    r = np.asarray(r, dtype=float)
    eta = np.asarray(efficiency, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_closed_form_args(stage, eta)
    em, ep = np.exp(-2 * r), np.exp(2 * r)
    signal = (12 * em + 2 * (g + 2) ** 2 * em + 4 * (g - 1) ** 2 * ep) / 24
    out = eta * signal + (1 - eta) * (1 + g**2 / 4)
    return float(out) if out.ndim == 0 else out


def optimal_gain(stage: Stage | str, r: ArrayLike, efficiency: ArrayLike = 1.0):
    """Exact minimiser of :func:`closed_form_I` in ``g``.

    ``2 eta (e^{4r} - 1) / (3 e^{2r} + eta - 3 eta e^{2r} + 2 eta e^{4r})``,
    which at ``eta = 1`` is ``(2 e^{4r} - 2) / (2 e^{4r} + 1)``.
    """
    stage = Stage(stage)
    r = np.asarray(r, dtype=float)
    eta = np.asarray(efficiency, dtype=float)
    _check_closed_form_args(stage, eta)
    e2, e4 = np.exp(2 * r), np.exp(4 * r)
    if stage is Stage.INPUT:
        out = (2 * e4 - 2) / (2 * e4 + 1)
    else:
        out = 2 * eta * (e4 - 1) / (3 * e2 + eta - 3 * eta * e2 + 2 * eta * e4)
    return float(out) if out.ndim == 0 else out


def numeric_optimal_gain(objective: Callable[[float], float], bracket: tuple[float, float] = (-1.0, 2.0),
                         xtol: float = 1e-12, step: float = 1e-3, max_expand: int = 60) -> float:
    """Minimise a smooth unimodal scalar function by root-finding its slope.

    The slope is a central difference of ``objective`` (exact up to rounding
    for a quadratic). The bracket is widened until the slope changes sign,
    then Brent's method pins the root to ``xtol``. Uses nothing but function
    evaluations, so it can check the analytic gains.
    """

    def slope(g: float) -> float:
        return (objective(g + step) - objective(g - step)) / (2 * step)

    lo, hi = bracket
    s_lo, s_hi = slope(lo), slope(hi)
    for _ in range(max_expand):
        if s_lo <= 0 <= s_hi:
            break
        width = hi - lo
        if s_lo > 0:
            lo -= width
            s_lo = slope(lo)
        if s_hi < 0:
            hi += width
            s_hi = slope(hi)
    else:
        raise BracketError(f"no minimum bracketed in [{lo:g}, {hi:g}] (slopes {s_lo:g}, {s_hi:g})")
    if s_lo == 0:
        return lo
    if s_hi == 0:
        return hi
    return float(brentq(slope, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))


def closed_form_objective(stage: Stage | str, r: float, efficiency: float) -> Callable[[float], float]:
    return lambda g: closed_form_I(stage, r, efficiency, g)


def state_objective(state: GaussianState, k: int = 0) -> Callable[[float], float]:
    return lambda g: criterion_value(state, k, g)


def to_dB(variance: float, vacuum_level: float) -> float:
    if not (variance > 0 and vacuum_level > 0):
        raise ValueError(f"variance and vacuum level must be positive, got {variance}, {vacuum_level}")
    return 10.0 * math.log10(variance / vacuum_level)


def combination_dB(state: GaussianState, x_coeffs: ArrayLike, p_coeffs: ArrayLike) -> float:
    return to_dB(combination_variance(state, x_coeffs, p_coeffs), vacuum_level(x_coeffs, p_coeffs))


# ---------------------------------------------------------------------------
# six-row correlation ledger
# ---------------------------------------------------------------------------

ROW_LABELS = (
    "<d2(X2-X3)>",
    "<d2(g1 P1+P2+P3)>",
    "<d2(X1-X3)>",
    "<d2(P1+g2 P2+P3)>",
    "<d2(X1-X2)>",
    "<d2(P1+P2+g3 P3)>",
)


@dataclass(frozen=True)
class LedgerRow:
    combination: str
    input_dB: float
    atomic_dB: float
    released_dB: float

    def model(self, stage: Stage | str) -> float:
        return {Stage.INPUT: self.input_dB, Stage.ATOMIC: self.atomic_dB,
                Stage.RELEASED: self.released_dB}[Stage(stage)]


def _rows_for(state: GaussianState, gains: GainTriple) -> list[float]:
    out = []
    for k in range(3):
        out.append(combination_dB(state, *x_combination(k)))
        out.append(combination_dB(state, *p_combination(k, gains[k])))
    return out


def table1_report(spec: ExperimentSpec, atomic_gains: str = "inferred") -> list[LedgerRow]:
    """Model dB values for the six correlation combinations at each stage.

    Input and released columns use each state's own optimal gains. The
    spin-wave column is by default what a read-channel inversion of the
    released data reports, i.e. the atomic state at the *released* gains
    (``atomic_gains="inferred"``); ``"optimal"`` uses the atomic state's own
    optimal gains instead.
    """
    if atomic_gains not in ("inferred", "optimal"):
        raise ValueError("atomic_gains must be 'inferred' or 'optimal'")
    inp, atomic, released = (s.state for s in run_pipeline(spec))
    g_in = state_optimal_gains(inp)
    g_rel = state_optimal_gains(released)
    g_at = g_rel if atomic_gains == "inferred" else state_optimal_gains(atomic)
    cols = (_rows_for(inp, g_in), _rows_for(atomic, g_at), _rows_for(released, g_rel))
    return [LedgerRow(label, cols[0][n], cols[1][n], cols[2][n]) for n, label in enumerate(ROW_LABELS)]


def pipeline_criteria(spec: ExperimentSpec, stage: Stage | str = Stage.RELEASED,
                      gains: GainTriple | None = None) -> CriterionResult:
    """Criteria on one stage of the pipeline, at that state's optimal gains by default."""
    stage = Stage(stage)
    staged = {s.stage: s.state for s in run_pipeline(spec)}[stage]
    return evaluate_criteria(staged, gains or state_optimal_gains(staged), stage)


def symmetric_efficiency(spec: ExperimentSpec, stage: Stage | str) -> float:
    effs = stage_efficiencies(spec, stage)
    if max(effs) - min(effs) > 0:
        raise ValueError("closed forms need equal per-node efficiencies")
    return effs[0]
