"""
Gaussian-state engine over quadrature phase space.

Conventions
-----------
* Quadratures are interleaved: ``(x_1, p_1, x_2, p_2, ..., x_N, p_N)``.
* ``X = (a + a^dag)/sqrt(2)``, ``P = (a - a^dag)/(sqrt(2) i)``, so every
  quadrature of the vacuum has variance 1/2.
* States, symplectic maps and channels are immutable values; every operation
  returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

VACUUM_VARIANCE = 0.5

SYMMETRY_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10
CP_TOL = 1e-9


class PhysicalityError(ValueError):
    """A covariance matrix, symplectic map or channel violates a physical constraint."""


class Orientation(str, Enum):
    """Which quadrature a single-mode squeezer stretches.

    ``PHASE`` is the DOPA_1 role (P squeezed, X anti-squeezed) and ``AMPLITUDE``
    the DOPA_2,3 role (X squeezed, P anti-squeezed).
    """

    PHASE = "phase"
    AMPLITUDE = "amplitude"


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Block-diagonal symplectic form for interleaved ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _frozen(a: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def symplectic_eigenvalues(cov: NDArray[np.float64]) -> NDArray[np.float64]:
    """Williamson eigenvalues of a covariance matrix (ascending)."""
    n = cov.shape[0] // 2
    omega = symplectic_form(n)
    ev = np.abs(np.linalg.eigvals(1j * omega @ cov))
    return np.sort(ev)[::2]


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and covariance matrix of an N-mode Gaussian state."""

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be 2N x 2N, got shape {cov.shape}")
        if mean.shape[0] != cov.shape[0]:
            raise ValueError("mean and covariance sizes disagree")
        if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(mean))):
            raise ValueError("non-finite moments")
        cov = 0.5 * (cov + cov.T)
        nu = symplectic_eigenvalues(cov)
        if nu.min() < VACUUM_VARIANCE - UNCERTAINTY_TOL:
            raise PhysicalityError(
                f"uncertainty principle violated: smallest symplectic eigenvalue {nu.min():.6g} < 1/2"
            )
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def quadrature_index(self, mode: int, quadrature: str) -> int:
        self._check_mode(mode)
        q = quadrature.lower()
        if q not in ("x", "p"):
            raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
        return 2 * mode + (q == "p")

    def _check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes}-mode state")

    def purity(self) -> float:
        """Tr(rho^2) = 1/sqrt(det(2 cov))."""
        return float(1.0 / np.sqrt(np.linalg.det(2.0 * self.cov)))

    def symplectic_eigenvalues(self) -> NDArray[np.float64]:
        return symplectic_eigenvalues(self.cov)

    def reduced(self, modes: Sequence[int]) -> GaussianState:
        idx = [2 * m + k for m in modes for k in (0, 1)]
        for m in modes:
            self._check_mode(m)
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def allclose(self, other: GaussianState, atol: float = 1e-12) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )


@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Linear symplectic map ``S`` acting as ``cov -> S cov S^T``, ``mean -> S mean``."""

    matrix: NDArray[np.float64]

    def __post_init__(self) -> None:
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be 2N x 2N, got shape {s.shape}")
        err = symplectic_defect(s)
        if err > SYMPLECTIC_TOL:
            raise PhysicalityError(f"matrix is not symplectic: max |S Om S^T - Om| = {err:.3g}")
        object.__setattr__(self, "matrix", _frozen(s))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def __matmul__(self, other: SymplecticOp) -> SymplecticOp:
        """Composition: ``(a @ b)`` applies ``b`` first."""
        return SymplecticOp(self.matrix @ other.matrix)

    def apply(self, state: GaussianState) -> GaussianState:
        if state.n_modes != self.n_modes:
            raise ValueError("mode count mismatch")
        s = self.matrix
        return GaussianState(s @ state.mean, s @ state.cov @ s.T)


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Gaussian channel ``cov -> A cov A^T + M``, ``mean -> A mean``."""

    scale: NDArray[np.float64]
    noise: NDArray[np.float64]

    def __post_init__(self) -> None:
        a = np.asarray(self.scale, dtype=float)
        m = np.asarray(self.noise, dtype=float)
        if a.shape != m.shape or a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise ValueError("scale and noise must be matching 2N x 2N matrices")
        m = 0.5 * (m + m.T)
        defect = cp_defect(a, m)
        if defect < -CP_TOL:
            raise PhysicalityError(f"channel is not completely positive (min eigenvalue {defect:.3g})")
        object.__setattr__(self, "scale", _frozen(a))
        object.__setattr__(self, "noise", _frozen(m))

    @property
    def n_modes(self) -> int:
        return self.scale.shape[0] // 2

    def apply(self, state: GaussianState) -> GaussianState:
        if state.n_modes != self.n_modes:
            raise ValueError("mode count mismatch")
        a = self.scale
        return GaussianState(a @ state.mean, a @ state.cov @ a.T + self.noise)

    def then(self, other: GaussianChannel) -> GaussianChannel:
        """Channel applying ``self`` first, then ``other``."""
        b = other.scale
        return GaussianChannel(b @ self.scale, b @ self.noise @ b.T + other.noise)


def symplectic_defect(s: NDArray[np.float64]) -> float:
    """max |S Om S^T - Om|."""
    omega = symplectic_form(s.shape[0] // 2)
    return float(np.max(np.abs(s @ omega @ s.T - omega)))


def cp_defect(scale: NDArray[np.float64], noise: NDArray[np.float64]) -> float:
    """Smallest eigenvalue of ``M + (i/2)(Om - A Om A^T)``; >= 0 for a CP channel."""
    omega = symplectic_form(scale.shape[0] // 2)
    herm = noise + 0.5j * (omega - scale @ omega @ scale.T)
    return float(np.linalg.eigvalsh(herm).min())


# ---------------------------------------------------------------------------
# states and elementary maps
# ---------------------------------------------------------------------------


def vacuum_state(n: int) -> GaussianState:
    if n < 1:
        raise ValueError(f"need at least one mode, got {n}")
    return GaussianState(np.zeros(2 * n), VACUUM_VARIANCE * np.eye(2 * n))


def _embed(n_modes: int, blocks: dict[tuple[int, int], NDArray[np.float64]]) -> NDArray[np.float64]:
    """Identity on 2N, with 2x2 blocks overwritten at (row_mode, col_mode)."""
    s = np.eye(2 * n_modes)
    for (i, j), blk in blocks.items():
        s[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = blk
    return s


def squeezer(n_modes: int, mode: int, r: float, orientation: Orientation | str) -> SymplecticOp:
    """Single-mode squeezer; ``r >= 0`` and the orientation picks the squeezed quadrature."""
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"squeezing parameter must be finite and >= 0, got {r}")
    _check_mode_index(n_modes, mode)
    o = Orientation(orientation)
    sign = 1.0 if o is Orientation.PHASE else -1.0
    blk = np.diag([np.exp(sign * r), np.exp(-sign * r)])
    return SymplecticOp(_embed(n_modes, {(mode, mode): blk}))


def phase_shift(n_modes: int, mode: int, phi: float) -> SymplecticOp:
    """Rotation ``a -> e^{i phi} a``."""
    _check_mode_index(n_modes, mode)
    c, s = np.cos(phi), np.sin(phi)
    return SymplecticOp(_embed(n_modes, {(mode, mode): np.array([[c, -s], [s, c]])}))


def beamsplitter(
    n_modes: int, mode_i: int, mode_j: int, transmissivity: float, relative_phase: float = 0.0
) -> SymplecticOp:
    """Lossless beam splitter.

    Mode ``j`` first picks up ``e^{i relative_phase}``; then

        a_i' =  sqrt(T) a_i + sqrt(R) a_j
        a_j' = -sqrt(R) a_i + sqrt(T) a_j

    with ``R = 1 - T``. This sign choice is the one under which the two-splitter
    network in :func:`trimem.network.input_network` yields the published input
    coefficients with every relative phase at zero.
    """
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    _check_mode_index(n_modes, mode_i)
    _check_mode_index(n_modes, mode_j)
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    t = np.sqrt(transmissivity)
    rr = np.sqrt(1.0 - transmissivity)
    eye = np.eye(2)
    mix = SymplecticOp(
        _embed(n_modes, {(mode_i, mode_i): t * eye, (mode_i, mode_j): rr * eye,
                         (mode_j, mode_i): -rr * eye, (mode_j, mode_j): t * eye})
    )
    if relative_phase == 0.0:
        return mix
    return mix @ phase_shift(n_modes, mode_j, relative_phase)


def loss_channel(n_modes: int, mode: int, efficiency: float, excess_noise: float = 0.0,
                 sign: float = 1.0) -> GaussianChannel:
    """Pure-loss (beam splitter with vacuum) channel on one mode.

    ``excess_noise`` is added to both quadrature variances in units of the
    vacuum variance; ``sign=-1`` flips the transmitted quadratures.
    """
    _check_mode_index(n_modes, mode)
    _check_efficiency(efficiency)
    if excess_noise < 0:
        raise ValueError(f"excess noise must be >= 0, got {excess_noise}")
    if sign not in (1.0, -1.0):
        raise ValueError("sign must be +1 or -1")
    scale = np.eye(2 * n_modes)
    noise = np.zeros((2 * n_modes, 2 * n_modes))
    sl = slice(2 * mode, 2 * mode + 2)
    scale[sl, sl] = sign * np.sqrt(efficiency) * np.eye(2)
    noise[sl, sl] = ((1.0 - efficiency) + excess_noise) * VACUUM_VARIANCE * np.eye(2)
    return GaussianChannel(scale, noise)


def apply_squeezer(state: GaussianState, mode: int, r: float,
                   orientation: Orientation | str) -> GaussianState:
    return squeezer(state.n_modes, mode, r, orientation).apply(state)


def apply_phase_shift(state: GaussianState, mode: int, phi: float) -> GaussianState:
    return phase_shift(state.n_modes, mode, phi).apply(state)


def apply_beamsplitter(state: GaussianState, mode_i: int, mode_j: int, transmissivity: float,
                       relative_phase: float = 0.0) -> GaussianState:
    return beamsplitter(state.n_modes, mode_i, mode_j, transmissivity, relative_phase).apply(state)


def apply_loss(state: GaussianState, mode: int, efficiency: float,
               excess_noise: float = 0.0) -> GaussianState:
    return loss_channel(state.n_modes, mode, efficiency, excess_noise).apply(state)


def combination_vector(x_coeffs: ArrayLike, p_coeffs: ArrayLike) -> NDArray[np.float64]:
    """Interleave X and P coefficient vectors into one 2N vector."""
    cx = np.asarray(x_coeffs, dtype=float).reshape(-1)
    cp = np.asarray(p_coeffs, dtype=float).reshape(-1)
    if cx.shape != cp.shape:
        raise ValueError(f"x and p coefficient lengths differ ({cx.size} vs {cp.size})")
    c = np.empty(2 * cx.size)
    c[0::2] = cx
    c[1::2] = cp
    return c


def combination_variance(state: GaussianState, x_coeffs: ArrayLike, p_coeffs: ArrayLike) -> float:
    """Variance of ``sum_k x_k X_k + p_k P_k`` (``c^T cov c``)."""
    c = combination_vector(x_coeffs, p_coeffs)
    if c.size != 2 * state.n_modes:
        raise ValueError(
            f"coefficient vectors must have length {state.n_modes}, got {c.size // 2}"
        )
    return float(c @ state.cov @ c)


def vacuum_level(x_coeffs: ArrayLike, p_coeffs: ArrayLike) -> float:
    """The same combination evaluated on the vacuum: ``|c|^2 / 2``."""
    c = combination_vector(x_coeffs, p_coeffs)
    return float(VACUUM_VARIANCE * c @ c)


def _check_mode_index(n_modes: int, mode: int) -> None:
    if not 0 <= mode < n_modes:
        raise IndexError(f"mode {mode} out of range for {n_modes} modes")


def _check_efficiency(eta: float) -> None:
    if not (np.isfinite(eta) and 0.0 <= eta <= 1.0):
        raise ValueError(f"efficiency must lie in [0, 1], got {eta}")
