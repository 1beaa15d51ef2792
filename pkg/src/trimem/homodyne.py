"""
Monte Carlo re-creation of pulsed balanced-homodyne verification.

Synthesis model, per channel and shot, with ``u`` the unit-norm temporal mode
(window times a carrier at the analysis frequency)::

    s[n] = q u[n] + w_shot[n] + w_el[n]

``q`` is the quadrature value sampled from the model state (its vacuum part is
the in-mode shot noise). ``w_shot`` is white shot noise of the *other* temporal
modes; it is projected orthogonal to the estimator and so averages out exactly.
``w_el`` is white electronic noise scaled so that, at the estimator output, its
variance is ``electronic_noise_rel`` times the vacuum shot noise.

Estimator: zero-phase band-pass ``C`` (the Butterworth power response
``|H(f)|^2`` applied in the frequency domain, i.e. forward-backward filtering on
a circular record), then projection onto the filtered mode ``C u``. The raw
estimate is ``y = q |Cu|^2 + noise``; the vacuum calibration batch fixes the
scale so vacuum reads 1/2.
"""

from __future__ import annotations

import csv
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import signal

from .config import ExperimentSpec, MCSettings
from .criteria import (
    CriterionResult,
    GainTriple,
    p_combination,
    state_optimal_gains,
    x_combination,
)
from .gaussian import VACUUM_VARIANCE, GaussianState, vacuum_state
from .network import Stage, run_pipeline

TRACE_MAGIC = b"QNETTRC1"
_HEADER = struct.Struct("<8sIId")

# RNG stream ids; every (seed, stream, chunk) triple owns an independent generator.
STREAM_X_SHOTS, STREAM_X_NOISE = 1, 2
STREAM_P_SHOTS, STREAM_P_NOISE = 3, 4
STREAM_CAL_SHOTS, STREAM_CAL_NOISE = 5, 6


class FilterError(RuntimeError):
    """Unstable or degenerate digital filter."""

    def __init__(self, message: str, sos: NDArray[np.float64]):
        super().__init__(f"{message}\nsecond-order sections:\n{np.array2string(sos, precision=6)}")
        self.sos = sos


def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, chunk))))


def _chunks(settings: MCSettings) -> list[tuple[int, int]]:
    step = settings.chunk_shots
    return [(c, min(step, settings.shots - c * step)) for c in range(-(-settings.shots // step))]


def _map_chunks(fn, settings: MCSettings) -> list:
    chunks = _chunks(settings)
    if settings.workers == 1 or len(chunks) == 1:
        return [fn(c, n) for c, n in chunks]
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        return list(pool.map(lambda cn: fn(*cn), chunks))


# ---------------------------------------------------------------------------
# shot sampling
# ---------------------------------------------------------------------------


def _basis_indices(state: GaussianState, basis: Sequence[str] | str) -> list[int]:
    basis = list(basis)
    if len(basis) != state.n_modes:
        raise ValueError(f"need one basis letter per mode ({state.n_modes}), got {basis}")
    return [state.quadrature_index(m, b) for m, b in enumerate(basis)]


def _factor(cov: NDArray[np.float64]) -> NDArray[np.float64]:
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-12 * max(1.0, w.max()):
        raise np.linalg.LinAlgError(f"measured-quadrature covariance is not PSD (eigenvalue {w.min():.3g})")
    return v * np.sqrt(np.clip(w, 0.0, None))


def _sample(mean, factor, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    return mean + rng.standard_normal((n, factor.shape[1])) @ factor.T


def sample_shots(state: GaussianState, basis: Sequence[str] | str, settings: MCSettings,
                 stream: int = 0) -> NDArray[np.float64]:
    """Draw ``settings.shots`` joint samples of one quadrature per mode.

    ``basis`` holds ``'x'`` or ``'p'`` per mode. Returns shots x modes.
    """
    idx = _basis_indices(state, basis)
    mean = state.mean[idx]
    factor = _factor(state.cov[np.ix_(idx, idx)])
    parts = _map_chunks(lambda c, n: _sample(mean, factor, n, chunk_rng(settings.seed, stream, c)), settings)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# temporal mode, filter, estimator
# ---------------------------------------------------------------------------


def filter_sos(settings: MCSettings) -> NDArray[np.float64]:
    lo, hi = settings.filter_band_hz
    sos = signal.butter(settings.filter_order, [lo, hi], btype="bandpass", output="sos",
                        fs=settings.sample_rate_hz)
    poles = np.concatenate([np.roots(sec[3:]) for sec in sos])
    if not np.all(np.isfinite(sos)) or np.any(np.abs(poles) >= 1.0):
        raise FilterError("band-pass design is unstable", sos)
    return sos


def filter_power_response(settings: MCSettings, freqs_hz: NDArray[np.float64] | Sequence[float]) -> NDArray[np.float64]:
    """Zero-phase power gain ``|H(f)|^2`` at the given frequencies (linear)."""
    _, h = signal.sosfreqz(filter_sos(settings), worN=np.asarray(freqs_hz, dtype=float),
                           fs=settings.sample_rate_hz)
    return np.abs(h) ** 2


@dataclass(frozen=True)
class Estimator:
    """Precomputed vectors of the linear pipeline for one settings value."""

    mode: NDArray[np.float64]          # u, unit norm
    response: NDArray[np.float64]      # |H|^2 on the rfft grid
    template: NDArray[np.float64]      # C u
    kernel: NDArray[np.float64]        # h = C C u, so y = h . s
    gain: float                        # h . u


@lru_cache(maxsize=32)
def estimator_for(settings: MCSettings) -> Estimator:
    fs, n = settings.sample_rate_hz, settings.n_samples
    t = np.arange(n) / fs
    if settings.temporal_mode == "flat":
        w = np.ones(n)
    else:
        w = np.hanning(n)
    u = w * np.cos(2 * np.pi * settings.filter_center_hz * t)
    u /= np.linalg.norm(u)
    resp = filter_power_response(settings, np.fft.rfftfreq(n, d=1.0 / fs))
    template = zero_phase_filter(u, resp)
    kernel = zero_phase_filter(template, resp)
    gain = float(kernel @ u)
    if not gain > 0:
        raise FilterError("temporal mode lies outside the pass band", filter_sos(settings))
    for arr in (u, resp, template, kernel):
        arr.setflags(write=False)
    return Estimator(u, resp, template, kernel, gain)


def zero_phase_filter(x: NDArray[np.float64], response: NDArray[np.float64]) -> NDArray[np.float64]:
    """Apply a real power response along the last axis (circular, zero phase)."""
    n = x.shape[-1]
    return np.fft.irfft(np.fft.rfft(x, axis=-1) * response, n=n, axis=-1)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TraceBatch:
    """Pulsed homodyne records: ``traces[channel, shot, sample]``."""

    traces: NDArray[np.float64]
    labels: tuple[str, ...]
    settings: MCSettings
    calibration: TraceBatch | None = None

    def __post_init__(self) -> None:
        tr = np.asarray(self.traces, dtype=float)
        if tr.ndim != 3:
            raise ValueError("traces must be channels x shots x samples")
        if len(self.labels) != tr.shape[0]:
            raise ValueError("one label per channel")
        if not np.all(np.isfinite(tr)):
            raise ValueError("non-finite trace samples")
        if self.calibration is not None and self.calibration.settings != self.settings:
            raise ValueError("calibration batch must share the settings of the data batch")
        object.__setattr__(self, "traces", tr)

    @property
    def shots(self) -> int:
        return self.traces.shape[1]

    @property
    def samples(self) -> int:
        return self.traces.shape[2]


def synthesize_traces(shot_values: NDArray[np.float64], settings: MCSettings,
                      rng: np.random.Generator | int | None = None,
                      labels: Sequence[str] | None = None,
                      calibration: TraceBatch | None = None,
                      noise: bool = True) -> TraceBatch:
    """Turn shots x channels quadrature values into homodyne traces.

    ``noise=False`` drops both white-noise terms (useful for linearity checks).
    """
    q = np.atleast_2d(np.asarray(shot_values, dtype=float))
    if q.ndim != 2:
        raise ValueError("shot values must be shots x channels")
    if settings.filter_band_hz[1] >= settings.sample_rate_hz / 2:
        raise ValueError("analysis band exceeds Nyquist")
    est = estimator_for(settings)
    n = est.mode.size
    shots, channels = q.shape
    traces = q.T[:, :, None] * est.mode[None, None, :]
    if noise:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        h = est.kernel
        hh = float(h @ h)
        shot_floor = rng.standard_normal((channels, shots, n)) * np.sqrt(VACUUM_VARIANCE / n)
        shot_floor -= (shot_floor @ h)[..., None] * (h / hh)
        sigma_el = np.sqrt(settings.electronic_noise_rel * VACUUM_VARIANCE * est.gain**2 / hh)
        traces = traces + shot_floor + sigma_el * rng.standard_normal((channels, shots, n))
    labels = tuple(labels) if labels is not None else tuple(f"ch{k + 1}" for k in range(channels))
    return TraceBatch(traces, labels, settings, calibration)


def raw_estimates(traces: NDArray[np.float64], settings: MCSettings) -> NDArray[np.float64]:
    """Filter, then integrate against the filtered temporal mode. Returns ``[..., shot]``."""
    est = estimator_for(settings)
    filtered = zero_phase_filter(np.asarray(traces, dtype=float), est.response)
    return filtered @ est.template


def bandpass_and_average(batch: TraceBatch, settings: MCSettings | None = None) -> NDArray[np.float64]:
    """Per-shot quadrature estimates (shots x channels), vacuum-normalised to variance 1/2.

    Each channel is scaled by its own vacuum calibration, which includes the
    electronic noise floor, as a real detector calibration would.
    """
    settings = settings or batch.settings
    if batch.calibration is None:
        raise ValueError("bandpass_and_average needs a vacuum calibration batch")
    y = raw_estimates(batch.traces, settings)
    y_cal = raw_estimates(batch.calibration.traces, settings)
    scale = np.sqrt(VACUUM_VARIANCE / y_cal.var(axis=1, ddof=1))
    return (y * scale[:, None]).T


# ---------------------------------------------------------------------------
# end-to-end estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCRun:
    criteria: CriterionResult
    x_variances: tuple[float, float, float]
    p_variances: tuple[float, float, float]
    x_stderr: tuple[float, float, float]
    p_stderr: tuple[float, float, float]
    x_estimates: NDArray[np.float64]
    p_estimates: NDArray[np.float64]
    stage: Stage


def _raw_batch(state: GaussianState, basis: str, settings: MCSettings,
               shot_stream: int, noise_stream: int) -> NDArray[np.float64]:
    """Raw estimates (channels x shots) for one basis, chunk by chunk."""
    idx = _basis_indices(state, basis)
    mean = state.mean[idx]
    factor = _factor(state.cov[np.ix_(idx, idx)])

    def run(c: int, n: int) -> NDArray[np.float64]:
        q = _sample(mean, factor, n, chunk_rng(settings.seed, shot_stream, c))
        batch = synthesize_traces(q, settings, rng=chunk_rng(settings.seed, noise_stream, c))
        return raw_estimates(batch.traces, settings)

    return np.concatenate(_map_chunks(run, settings), axis=1)


def _jackknife(stat, blocks: int, n: int):
    """Delete-one-block jackknife of ``stat(mask)``; returns (full value, stderr)."""
    edges = np.linspace(0, n, blocks + 1).astype(int)
    full = stat(np.ones(n, dtype=bool))
    reps = []
    for b in range(blocks):
        mask = np.ones(n, dtype=bool)
        mask[edges[b]:edges[b + 1]] = False
        reps.append(stat(mask))
    reps = np.asarray(reps)
    se = np.sqrt((blocks - 1) / blocks * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    return full, se


def run_mc(spec: ExperimentSpec, stage: Stage | str = Stage.RELEASED,
           gains: GainTriple | None = None, blocks: int = 50) -> MCRun:
    """Sample X- and P-basis homodyne batches of one pipeline stage and estimate the criteria.

    Combination variances are corrected for the calibrated electronic noise:
    ``V = (1 + e) Var(c . q_hat) - e |c|^2 / 2`` with ``e = electronic_noise_rel``.
    """
    stage = Stage(stage)
    settings = spec.mc
    state = {s.stage: s.state for s in run_pipeline(spec)}[stage]
    gains = gains or state_optimal_gains(state)
    eps = settings.electronic_noise_rel

    yx = _raw_batch(state, "xxx", settings, STREAM_X_SHOTS, STREAM_X_NOISE)
    yp = _raw_batch(state, "ppp", settings, STREAM_P_SHOTS, STREAM_P_NOISE)
    ycal = _raw_batch(vacuum_state(3), "xxx", settings, STREAM_CAL_SHOTS, STREAM_CAL_NOISE)
    n = settings.shots
    blocks = max(2, min(blocks, n))

    x_coeffs = [x_combination(k)[0] for k in range(3)]
    p_coeffs = [p_combination(k, gains[k])[1] for k in range(3)]

    def combos(mask: NDArray[np.bool_]) -> NDArray[np.float64]:
        scale = np.sqrt(VACUUM_VARIANCE / ycal[:, mask].var(axis=1, ddof=1))
        cx = np.cov(yx[:, mask] * scale[:, None])
        cp = np.cov(yp[:, mask] * scale[:, None])
        out = []
        for c in x_coeffs:
            out.append((1 + eps) * c @ cx @ c - eps * VACUUM_VARIANCE * c @ c)
        for c in p_coeffs:
            out.append((1 + eps) * c @ cp @ c - eps * VACUUM_VARIANCE * c @ c)
        v = np.asarray(out)
        return np.concatenate([v, 0.5 * (v[:3] + v[3:])])

    full, se = _jackknife(combos, blocks, n)
    scale = np.sqrt(VACUUM_VARIANCE / ycal.var(axis=1, ddof=1))
    crit = CriterionResult(*full[6:], gains=gains, stage=stage, stderr=tuple(float(s) for s in se[6:]))
    return MCRun(
        criteria=crit,
        x_variances=tuple(float(v) for v in full[:3]),
        p_variances=tuple(float(v) for v in full[3:6]),
        x_stderr=tuple(float(s) for s in se[:3]),
        p_stderr=tuple(float(s) for s in se[3:6]),
        x_estimates=(yx * scale[:, None]).T,
        p_estimates=(yp * scale[:, None]).T,
        stage=stage,
    )


def estimate_criteria_mc(spec: ExperimentSpec, stage: Stage | str = Stage.RELEASED,
                         gains: GainTriple | None = None) -> CriterionResult:
    return run_mc(spec, stage, gains).criteria


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def write_trace_file(path: str | Path, traces: NDArray[np.float64], sample_rate_hz: float) -> None:
    """Binary record: magic, u32 shots, u32 samples, f64 rate, f64 data (row-major, LE)."""
    arr = np.ascontiguousarray(traces, dtype="<f8")
    if arr.ndim != 2:
        raise ValueError("trace file holds one shots x samples array")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TRACE_MAGIC, arr.shape[0], arr.shape[1], float(sample_rate_hz)))
        fh.write(arr.tobytes(order="C"))


def read_trace_file(path: str | Path) -> tuple[NDArray[np.float64], float]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, shots, samples, rate = _HEADER.unpack_from(data)
    if magic != TRACE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != 8 * shots * samples:
        raise ValueError(f"{path}: expected {shots}x{samples} samples, found {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").reshape(shots, samples).copy(), rate


def export_batch(batch: TraceBatch, stem: str | Path) -> list[Path]:
    """Write one trace file per channel (and calibration channel) plus a JSON sidecar."""
    stem = Path(stem)
    written = []
    entries = []
    for kind, b in (("data", batch), ("calibration", batch.calibration)):
        if b is None:
            continue
        for k, label in enumerate(b.labels):
            suffix = "" if kind == "data" else "_cal"
            p = stem.with_name(f"{stem.name}{suffix}_ch{k + 1}.qtrc")
            write_trace_file(p, b.traces[k], b.settings.sample_rate_hz)
            written.append(p)
            entries.append({"file": p.name, "kind": kind, "channel": k + 1, "label": label})
    sidecar = stem.with_name(stem.name + ".json")
    sidecar.write_text(json.dumps({"settings": asdict(batch.settings), "files": entries}, indent=2) + "\n",
                       encoding="utf-8")
    written.append(sidecar)
    return written


def write_shot_csv(path: str | Path, run: MCRun) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["shot", "basis", "q1", "q2", "q3"])
        for basis, est in (("x", run.x_estimates), ("p", run.p_estimates)):
            for i, row in enumerate(est):
                w.writerow([i, basis, *(f"{v:.17g}" for v in row)])


__all__ = [
    "TraceBatch", "MCRun", "FilterError", "Estimator", "sample_shots", "synthesize_traces",
    "bandpass_and_average", "raw_estimates", "estimate_criteria_mc", "run_mc", "filter_sos",
    "filter_power_response", "zero_phase_filter", "estimator_for", "chunk_rng",
    "write_trace_file", "read_trace_file", "export_batch", "write_shot_csv",
]
