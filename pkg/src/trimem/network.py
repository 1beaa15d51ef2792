"""
Three-node pipeline: squeezed-light source, write to atoms, storage, read out.

Mode ``k`` of every staged state is node ``k+1`` (optical submode L_{k+1} at the
input and released stages, spin wave A_{k+1} at the atomic stage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .config import ExperimentSpec, as_triple
from .gaussian import (
    VACUUM_VARIANCE,
    GaussianChannel,
    GaussianState,
    Orientation,
    SymplecticOp,
    beamsplitter,
    loss_channel,
    squeezer,
    vacuum_state,
)


class Stage(str, Enum):
    INPUT = "input"
    ATOMIC = "atomic"
    RELEASED = "released"


class InfeasibleMeasurement(ValueError):
    """Inverting the read channel gives a variance no physical state can have."""


@dataclass(frozen=True)
class StageState:
    stage: Stage
    state: GaussianState


# Initial slots of the three squeezed beams. With these slots the two beam
# splitters deliver L1, L2, L3 into modes 0, 1, 2 without a final permutation.
_SLOT_S1, _SLOT_S2, _SLOT_S3 = 2, 0, 1


def _check_r(rs: Sequence[float]) -> None:
    if any(not math.isfinite(r) or r < 0 for r in rs):
        raise ValueError(f"squeezing parameters must be finite and >= 0, got {tuple(rs)}")


def input_network(r1: float, r2: float, r3: float) -> SymplecticOp:
    """Symplectic map from three vacua to the entangled input submodes.

    DOPA_1 (phase-squeezed, ``r1``) and DOPA_2 (amplitude-squeezed, ``r2``)
    meet on a T=2/3 splitter; one output and DOPA_3 (amplitude-squeezed,
    ``r3``) meet on a T=1/2 splitter. All relative phases are zero.
    """
    _check_r((r1, r2, r3))
    sq = (
        squeezer(3, _SLOT_S1, r1, Orientation.PHASE)
        @ squeezer(3, _SLOT_S2, r2, Orientation.AMPLITUDE)
        @ squeezer(3, _SLOT_S3, r3, Orientation.AMPLITUDE)
    )
    bs1 = beamsplitter(3, _SLOT_S2, _SLOT_S1, 2.0 / 3.0)
    bs2 = beamsplitter(3, _SLOT_S3, _SLOT_S1, 0.5)
    return bs2 @ bs1 @ sq


def source_slots() -> tuple[int, int, int]:
    """Vacuum-input slots feeding DOPA_1, DOPA_2, DOPA_3."""
    return _SLOT_S1, _SLOT_S2, _SLOT_S3


def build_input_state(r1: float, r2: float | None = None, r3: float | None = None) -> GaussianState:
    r2 = r1 if r2 is None else r2
    r3 = r1 if r3 is None else r3
    return input_network(r1, r2, r3).apply(vacuum_state(3))


def input_coefficient_matrix(r1: float, r2: float | None = None,
                             r3: float | None = None) -> NDArray[np.float64]:
    """Closed-form input coefficients, written out term by term.

    Rows are ``(X_L1, P_L1, X_L2, P_L2, X_L3, P_L3)``; columns are the vacuum
    quadratures ``(X_S1, P_S1, X_S2, P_S2, X_S3, P_S3)`` before squeezing.
    Kept independent of the beam-splitter composition on purpose.
    """
    r2 = r1 if r2 is None else r2
    r3 = r1 if r3 is None else r3
    _check_r((r1, r2, r3))
    a, b, c = math.sqrt(1 / 3), math.sqrt(2 / 3), math.sqrt(1 / 6)
    h = math.sqrt(1 / 2)
    e1p, e1m = math.exp(r1), math.exp(-r1)
    e2p, e2m = math.exp(r2), math.exp(-r2)
    e3p, e3m = math.exp(r3), math.exp(-r3)
    m = np.zeros((6, 6))
    # X_L1, P_L1
    m[0, 0], m[0, 2] = a * e1p, b * e2m
    m[1, 1], m[1, 3] = a * e1m, b * e2p
    # X_L2, P_L2
    m[2, 0], m[2, 2], m[2, 4] = a * e1p, -c * e2m, h * e3m
    m[3, 1], m[3, 3], m[3, 5] = a * e1m, -c * e2p, h * e3p
    # X_L3, P_L3
    m[4, 0], m[4, 2], m[4, 4] = a * e1p, -c * e2m, -h * e3m
    m[5, 1], m[5, 3], m[5, 5] = a * e1m, -c * e2p, -h * e3p
    return m


def stage_coefficient_matrix(r: float, efficiency: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Closed-form coefficients of a lossy stage at equal parameters.

    Returns ``(signal, vacuum)``: the squeezed-input coefficients scaled by
    ``sqrt(efficiency)`` and the ``sqrt(1 - efficiency)`` vacuum admixture,
    i.e. the atomic-stage expressions with ``efficiency = eta_M`` and the
    released-stage expressions with ``efficiency = eta_M * eta_read``.
    """
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency}")
    return math.sqrt(efficiency) * input_coefficient_matrix(r), math.sqrt(1 - efficiency) * np.eye(6)


def mapping_efficiency(eta_T: float, eta_W: float, t_ns: float, tau_s_ns: float | None) -> float:
    """Light-to-spin-wave efficiency after storage, ``eta_T * eta_W * exp(-t/tau_s)``.

    ``tau_s_ns=None`` (or ``inf``) disables the decay factor.
    """
    for name, v in (("eta_T", eta_T), ("eta_W", eta_W)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    if t_ns < 0:
        raise ValueError(f"t_ns must be >= 0, got {t_ns}")
    if tau_s_ns is None or math.isinf(tau_s_ns):
        return eta_T * eta_W
    if not tau_s_ns > 0:
        raise ValueError(f"tau_s_ns must be > 0, got {tau_s_ns}")
    return eta_T * eta_W * math.exp(-t_ns / tau_s_ns)


def node_mapping_efficiencies(spec: ExperimentSpec) -> tuple[float, float, float]:
    if spec.eta_M is not None:
        return spec.eta_M
    return tuple(  # type: ignore[return-value]
        mapping_efficiency(et, ew, spec.t_ns, spec.tau_s_ns) for et, ew in zip(spec.eta_T, spec.eta_W)
    )


def write_channel(eta_M: float | Sequence[float], excess_noise: float | Sequence[float] = 0.0) -> GaussianChannel:
    etas = as_triple(eta_M, "eta_M")
    noise = as_triple(excess_noise, "excess_noise")
    ch = loss_channel(3, 0, etas[0], noise[0])
    for k in (1, 2):
        ch = ch.then(loss_channel(3, k, etas[k], noise[k]))
    return ch


def read_channel(eta_read: float | Sequence[float]) -> GaussianChannel:
    """Read-out map: loss with the retrieved quadratures sign-flipped."""
    etas = as_triple(eta_read, "eta_read")
    ch = loss_channel(3, 0, etas[0], sign=-1.0)
    for k in (1, 2):
        ch = ch.then(loss_channel(3, k, etas[k], sign=-1.0))
    return ch


def write_to_atoms(state: GaussianState, eta_M: float | Sequence[float],
                   excess_noise: float | Sequence[float] = 0.0) -> GaussianState:
    return write_channel(eta_M, excess_noise).apply(state)


def read_from_atoms(state: GaussianState, eta_read: float | Sequence[float]) -> GaussianState:
    return read_channel(eta_read).apply(state)


def infer_atomic_from_released(measured_variance: float, eta_read: float,
                               vacuum: float = 2 * VACUUM_VARIANCE) -> float:
    """Undo the read channel for one combination variance.

    ``V_rel = eta' V_atom + (1 - eta') V_vac`` is solved for ``V_atom``;
    ``vacuum`` is the combination's own vacuum level (1 for ``X_i - X_j``).
    """
    if not 0.0 < eta_read <= 1.0:
        raise ValueError(f"retrieval efficiency must lie in (0, 1], got {eta_read}")
    if not (measured_variance > 0 and vacuum > 0):
        raise ValueError("variances must be positive")
    atomic = (measured_variance - (1.0 - eta_read) * vacuum) / eta_read
    if atomic <= 0:
        raise InfeasibleMeasurement(
            f"released variance {measured_variance:.6g} is below the read-channel floor "
            f"{(1.0 - eta_read) * vacuum:.6g}; no atomic state maps to it"
        )
    return atomic


def infer_atomic_db(released_db: float, eta_read: float) -> float:
    """dB version of :func:`infer_atomic_from_released` (both relative to vacuum)."""
    rel = 10.0 ** (released_db / 10.0)
    return 10.0 * math.log10(infer_atomic_from_released(rel, eta_read, vacuum=1.0))


def run_pipeline(spec: ExperimentSpec) -> tuple[StageState, StageState, StageState]:
    inp = build_input_state(*spec.r)
    atomic = write_to_atoms(inp, node_mapping_efficiencies(spec), spec.excess_noise)
    released = read_from_atoms(atomic, spec.eta_read)
    return (StageState(Stage.INPUT, inp), StageState(Stage.ATOMIC, atomic),
            StageState(Stage.RELEASED, released))


def stage_efficiencies(spec: ExperimentSpec, stage: Stage | str) -> tuple[float, float, float]:
    """Per-node end-to-end efficiency from the input light to ``stage``."""
    stage = Stage(stage)
    if stage is Stage.INPUT:
        return (1.0, 1.0, 1.0)
    eta_m = node_mapping_efficiencies(spec)
    if stage is Stage.ATOMIC:
        return eta_m
    return tuple(a * b for a, b in zip(eta_m, spec.eta_read))  # type: ignore[return-value]
