"""Time-series container, text I/O and end-growing window slicing.

Series are daily position records: epochs in MJD days, values in mm.
Missing epochs are genuine gaps; they are never interpolated and all
downstream likelihoods operate on the observed epochs only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

__all__ = [
    "TimeSeries",
    "OffsetCatalog",
    "SeriesFormatError",
    "parse_series",
    "write_series",
    "slice_window",
    "MIN_FIT_LENGTH",
]

# Minimum epochs for a window fit: two years, so trend and annual
# harmonics stay separable.
MIN_FIT_LENGTH = 730


class SeriesFormatError(ValueError):
    """Raised for malformed series/offset files, with the line number."""


@dataclass(frozen=True)
class TimeSeries:
    """Displacement series on an (optionally gapped) uniform day grid.

    Parameters
    ----------
    epochs : array of MJD epochs (days), strictly increasing.
    values : displacement per epoch (mm), all finite.
    dt : nominal sampling interval in days.
    header : comment lines retained from the source file.
    """

    epochs: np.ndarray
    values: np.ndarray
    dt: float = 1.0
    header: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        epochs = np.asarray(self.epochs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        epochs.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "values", values)
        if epochs.ndim != 1 or values.ndim != 1 or epochs.size != values.size:
            raise ValueError("epochs and values must be 1-d arrays of equal length")
        if epochs.size < 2:
            raise ValueError(f"series needs at least 2 epochs, got {epochs.size}")
        if self.dt <= 0:
            raise ValueError(f"sampling interval must be positive, got {self.dt}")
        if np.any(np.diff(epochs) <= 0):
            bad = int(np.flatnonzero(np.diff(epochs) <= 0)[0])
            raise ValueError(f"epochs must be strictly increasing (violation after index {bad})")
        if not np.all(np.isfinite(values)):
            raise ValueError("all values must be finite")

    def __len__(self) -> int:
        return int(self.epochs.size)

    @property
    def span_days(self) -> float:
        return float(self.epochs[-1] - self.epochs[0])

    def gap_epochs(self) -> np.ndarray:
        """Epochs of the implied dt-grid that carry no observation."""
        full = np.arange(self.epochs[0], self.epochs[-1] + 0.5 * self.dt, self.dt)
        present = np.isin(np.round((full - self.epochs[0]) / self.dt).astype(int),
                          np.round((self.epochs - self.epochs[0]) / self.dt).astype(int))
        return full[~present]

    @property
    def n_gaps(self) -> int:
        return int(self.gap_epochs().size)

    def is_gapless(self) -> bool:
        return bool(np.allclose(np.diff(self.epochs), self.dt))

    def grid_indices(self) -> np.ndarray:
        """Integer positions of the observed epochs on the underlying dt-grid."""
        idx = np.round((self.epochs - self.epochs[0]) / self.dt).astype(int)
        if not np.allclose(self.epochs, self.epochs[0] + idx * self.dt, rtol=0.0, atol=1e-6 * self.dt):
            raise ValueError("epochs do not sit on a uniform dt grid")
        return idx

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.epochs, np.asarray(values, dtype=float), self.dt, self.header)


@dataclass(frozen=True)
class OffsetCatalog:
    """Offset (step discontinuity) epochs, with optional known magnitudes."""

    epochs: np.ndarray = field(default_factory=lambda: np.empty(0))
    magnitudes: np.ndarray | None = None

    def __post_init__(self):
        epochs = np.asarray(self.epochs, dtype=float)
        epochs.setflags(write=False)
        object.__setattr__(self, "epochs", epochs)
        if epochs.size and np.any(np.diff(epochs) <= 0):
            raise ValueError("offset epochs must be strictly increasing")
        if self.magnitudes is not None:
            mags = np.asarray(self.magnitudes, dtype=float)
            if mags.shape != epochs.shape:
                raise ValueError("magnitudes must match offset epochs in length")
            object.__setattr__(self, "magnitudes", mags)

    def __len__(self) -> int:
        return int(self.epochs.size)

    def within(self, t_first: float, t_last: float) -> "OffsetCatalog":
        """Restrict to offsets inside a window span."""
        keep = (self.epochs > t_first) & (self.epochs <= t_last)
        mags = self.magnitudes[keep] if self.magnitudes is not None else None
        return OffsetCatalog(self.epochs[keep], mags)


def parse_series(stream: IO[str] | Iterable[str], dt: float = 1.0) -> TimeSeries:
    """Parse the two-column text format ``MJD value [sigma]``.

    Lines starting with ``#`` are header/comment lines and are retained.
    A third numeric field (per-epoch sigma) is accepted and ignored.
    """
    epochs, values, header = [], [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header.append(line)
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise SeriesFormatError(f"line {lineno}: expected 'MJD value [sigma]', got {line!r}")
        try:
            t = float(parts[0])
            v = float(parts[1])
            if len(parts) == 3:
                float(parts[2])
        except ValueError as exc:
            raise SeriesFormatError(f"line {lineno}: non-numeric field in {line!r}") from exc
        epochs.append(t)
        values.append(v)
    if len(epochs) < 2:
        raise SeriesFormatError("series file holds fewer than 2 data lines")
    if np.any(np.diff(epochs) <= 0):
        bad = int(np.flatnonzero(np.diff(epochs) <= 0)[0])
        raise SeriesFormatError(f"epochs not strictly increasing near data line {bad + 2}")
    return TimeSeries(np.array(epochs), np.array(values), dt=dt, header=tuple(header))


def write_series(ts: TimeSeries, stream: IO[str]) -> None:
    """Emit the text format parsed by :func:`parse_series` (exact round-trip)."""
    for line in ts.header:
        stream.write(line if line.startswith("#") else "# " + line)
        stream.write("\n")
    for t, v in zip(ts.epochs, ts.values):
        stream.write(f"{float(t)!r} {float(v)!r}\n")


def parse_offsets(stream: IO[str] | Iterable[str]) -> OffsetCatalog:
    """Parse an offset catalog: one MJD per line, ``#`` comments."""
    epochs = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            epochs.append(float(line.split()[0]))
        except ValueError as exc:
            raise SeriesFormatError(f"line {lineno}: bad offset epoch {line!r}") from exc
    return OffsetCatalog(np.array(sorted(epochs)))


def slice_window(ts: TimeSeries, end_offset_days: float, growth_days: float = 365.0,
                 min_length: int = MIN_FIT_LENGTH) -> TimeSeries:
    """Prefix window that grows from the end of the series.

    The base window ends ``growth_days`` before the last epoch;
    ``end_offset_days`` in ``[0, growth_days]`` moves the cutoff towards the
    full series. The earliest data stay fixed, so all windows share their
    time origin.
    """
    if not 0.0 <= end_offset_days <= growth_days:
        raise ValueError(f"end offset must lie in [0, {growth_days}] days, got {end_offset_days}")
    cutoff = ts.epochs[-1] - growth_days + end_offset_days
    n = int(np.searchsorted(ts.epochs, cutoff, side="right"))
    if n < min_length:
        raise ValueError(
            f"window of {n} epochs is shorter than the minimum fit length {min_length}")
    return TimeSeries(ts.epochs[:n], ts.values[:n], ts.dt, ts.header)
