"""(r, eta) grids of the equal-parameter criterion value."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .config import ConfigError
from .criteria import closed_form_I, optimal_gain
from .network import Stage

CSV_COLUMNS = ("r", "eta", "g", "I", "stage")


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition. ``eta`` is the stage's end-to-end efficiency at storage time ``t_ns``
    (``eta_M`` for spin waves, ``eta_M * eta_read`` after read-out)."""

    stage: Stage = Stage.RELEASED
    r_range: tuple[float, float, int] = (0.0, 1.2, 121)
    eta_range: tuple[float, float, int] = (0.0, 1.0, 101)
    t_ns: float = 1000.0
    gain_mode: str = "optimal"
    fixed_g: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "stage", Stage(self.stage))
        for name in ("r_range", "eta_range"):
            lo, hi, steps = getattr(self, name)
            if int(steps) != steps or steps < 2:
                raise ConfigError(f"{name}: steps must be an integer >= 2, got {steps}")
            if not lo <= hi:
                raise ConfigError(f"{name}: min must not exceed max")
            object.__setattr__(self, name, (float(lo), float(hi), int(steps)))
        if self.r_range[0] < 0:
            raise ConfigError("r must be >= 0")
        lo, hi, _ = self.eta_range
        if lo < 0 or hi > 1:
            raise ConfigError("eta must lie in [0, 1]")
        if self.stage is Stage.INPUT and (lo, hi) != (1.0, 1.0):
            raise ConfigError("the input stage is lossless; use eta range 1:1:steps")
        if self.gain_mode not in ("optimal", "fixed"):
            raise ConfigError(f"gain_mode must be 'optimal' or 'fixed', got {self.gain_mode!r}")
        if self.t_ns < 0:
            raise ConfigError("t_ns must be >= 0")

    @property
    def r_values(self) -> NDArray[np.float64]:
        return np.linspace(*self.r_range)

    @property
    def eta_values(self) -> NDArray[np.float64]:
        return np.linspace(*self.eta_range)


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """Cell values on an ``(n_r, n_eta)`` grid; ``r`` is the slow (row) axis."""

    stage: Stage
    r: NDArray[np.float64]
    eta: NDArray[np.float64]
    g: NDArray[np.float64]
    I: NDArray[np.float64]

    @property
    def shape(self) -> tuple[int, int]:
        return self.I.shape

    def rows(self):
        for idx in np.ndindex(*self.shape):
            yield float(self.r[idx]), float(self.eta[idx]), float(self.g[idx]), float(self.I[idx])

    def monotonicity_violations(self, tol: float = 1e-12) -> tuple[int, int]:
        """Number of adjacent-cell increases along r and along eta."""
        return int((np.diff(self.I, axis=0) > tol).sum()), int((np.diff(self.I, axis=1) > tol).sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r, eta, g, val in self.rows():
            w.writerow([f"{r:.17g}", f"{eta:.17g}", f"{g:.17g}", f"{val:.17g}", self.stage.value])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def sweep(spec: SweepSpec) -> SweepGrid:
    r, eta = np.meshgrid(spec.r_values, spec.eta_values, indexing="ij")
    if spec.gain_mode == "optimal":
        g = optimal_gain(spec.stage, r, eta)
    else:
        g = np.full_like(r, spec.fixed_g)
    return SweepGrid(spec.stage, r, eta, g, closed_form_I(spec.stage, r, eta, g))


def read_csv(path_or_text: str | Path) -> SweepGrid:
    """Parse a sweep CSV back into a grid (rows must be in row-major r/eta order)."""
    text = path_or_text
    if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    rows = list(csv.DictReader(io.StringIO(str(text))))
    if not rows:
        raise ValueError("empty sweep file")
    stages = {row["stage"] for row in rows}
    if len(stages) != 1:
        raise ValueError(f"mixed stages in one sweep file: {sorted(stages)}")
    cols = {k: np.array([float(row[k]) for row in rows]) for k in ("r", "eta", "g", "I")}
    n_r = np.unique(cols["r"]).size
    n_eta = len(rows) // n_r
    if n_r * n_eta != len(rows):
        raise ValueError("sweep rows do not form a full grid")
    shaped = {k: v.reshape(n_r, n_eta) for k, v in cols.items()}
    return SweepGrid(Stage(stages.pop()), **shaped)


def parse_range(text: str) -> tuple[float, float, int]:
    """``"min:max:steps"`` -> tuple."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must look like min:max:steps, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}: {exc}") from exc
