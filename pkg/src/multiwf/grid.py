"""Periodic sampled fields, their transforms and the ``.gfld`` file format.

A ``.gfld`` file is one JSON header line::

    {"n": 2, "counts": [512, 512], "lengths": [6.283..., 6.283...], "dtype": "c128le"}

followed by the raw little-endian complex128 payload in row-major order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "GridField",
    "FieldFormatError",
    "MAX_SAMPLES",
    "read_field",
    "write_field",
    "read_header",
    "make_field",
    "GENERATORS",
]

MAX_SAMPLES = 1 << 24
MIN_COUNT = 16
JUMP_AMPLITUDE = None


class FieldFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex samples of a function on the periodic box ``prod [0, L_j)``.

    Sample ``j`` along an axis sits at ``x = j * L / N``; the transform is
    ``u_hat(xi) = sum u(x) exp(-i x.xi) dV`` at ``xi_j = 2 pi k_j / L_j`` with
    integer ``k_j`` in ``(-N_j/2, N_j/2]``.
    """

    n: int
    counts: tuple[int, ...]
    lengths: tuple[float, ...]
    samples: np.ndarray

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "lengths", lengths)
        if self.n < 1 or len(counts) != self.n or len(lengths) != self.n:
            raise FieldFormatError("dimension does not match counts/lengths")
        for c in counts:
            if c < MIN_COUNT or c & (c - 1):
                raise FieldFormatError(f"axis count {c} must be a power of two >= {MIN_COUNT}")
        if any(v <= 0 for v in lengths):
            raise FieldFormatError("box lengths must be positive")
        if int(np.prod(counts)) > MAX_SAMPLES:
            raise FieldFormatError(f"{int(np.prod(counts))} samples exceed the cap of {MAX_SAMPLES}")
        arr = np.array(self.samples, dtype=np.complex128, order="C")
        if arr.shape != counts:
            raise FieldFormatError(f"samples have shape {arr.shape}, expected {counts}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @classmethod
    def like(cls, other: "GridField", samples) -> "GridField":
        return cls(other.n, other.counts, other.lengths, samples)

    @property
    def spacing(self) -> np.ndarray:
        return np.array(self.lengths) / np.array(self.counts)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [np.arange(c) * (L / c) for c, L in zip(self.counts, self.lengths)]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def freq_axes(self) -> list[np.ndarray]:
        out = []
        for c, L in zip(self.counts, self.lengths):
            k = np.fft.fftfreq(c, d=1.0 / c)
            k[c // 2] = c // 2
            out.append(2 * np.pi * k / L)
        return out

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequency grid of shape ``counts + (n,)`` in FFT order."""
        return np.stack(np.meshgrid(*self.freq_axes(), indexing="ij"), axis=-1)

    @property
    def nyquist(self) -> np.ndarray:
        return np.pi * np.array(self.counts) / np.array(self.lengths)

    def transform(self) -> np.ndarray:
        return np.fft.fftn(self.samples) * self.cell_volume

    def l2_norm(self, mask=None) -> float:
        v = np.abs(self.samples) ** 2
        if mask is not None:
            v = v[mask]
        return float(np.sqrt(v.sum() * self.cell_volume))

    def header(self) -> dict:
        return {"n": self.n, "counts": list(self.counts), "lengths": list(self.lengths), "dtype": "c128le"}


def write_field(path, field: GridField) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(json.dumps(field.header()).encode("utf-8") + b"\n")
        fh.write(field.samples.astype("<c16").tobytes(order="C"))


def read_header(path) -> tuple[dict, str]:
    with Path(path).open("rb") as fh:
        line = fh.readline()
    if not line.endswith(b"\n"):
        raise FieldFormatError("missing header line")
    text = line[:-1].decode("utf-8")
    try:
        header = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"bad header: {exc}") from None
    for key in ("n", "counts", "lengths", "dtype"):
        if key not in header:
            raise FieldFormatError(f"header lacks {key!r}")
    if header["dtype"] != "c128le":
        raise FieldFormatError(f"unsupported dtype {header['dtype']!r}")
    return header, text


def read_field(path) -> GridField:
    header, text = read_header(path)
    with Path(path).open("rb") as fh:
        fh.readline()
        payload = fh.read()
    counts = tuple(int(c) for c in header["counts"])
    expected = int(np.prod(counts)) * 16
    if len(payload) != expected:
        raise FieldFormatError(f"payload has {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<c16").reshape(counts)
    return GridField(int(header["n"]), counts, tuple(header["lengths"]), data)


# ---------------------------------------------------------------------------
# test field generators


def _box(n, counts, lengths):
    counts = (int(counts),) * n if np.isscalar(counts) else tuple(counts)
    if lengths is None:
        lengths = (2 * np.pi,) * n
    elif np.isscalar(lengths):
        lengths = (float(lengths),) * n
    return counts, tuple(float(v) for v in lengths)


def _centered(points, center, lengths):
    L = np.asarray(lengths)
    return (points - np.asarray(center) + L / 2) % L - L / 2


def gaussian(n=2, counts=512, lengths=None, sigma=0.1, center=None, amplitude=None) -> GridField:
    """Periodized Gaussian ``A exp(-sum_j (x_j - c_j)^2 / (2 sigma_j^2))`` (nearest images summed).

    ``sigma`` may be a scalar or one width per axis.  ``amplitude=None``
    normalizes to unit mass.
    """
    counts, lengths = _box(n, counts, lengths)
    center = np.asarray(lengths) / 2 if center is None else np.asarray(center, dtype=float)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (n,))
    if np.any(sig <= 0):
        raise ValueError("sigma must be positive")
    if amplitude is None:
        amplitude = 1.0 / float(np.prod(np.sqrt(2 * np.pi) * sig))
    tmp = GridField(n, counts, lengths, np.zeros(counts))
    d = _centered(tmp.points(), center, lengths)
    L = np.asarray(lengths)
    total = np.zeros(counts)
    for shift in np.ndindex(*(3,) * n):
        off = (np.asarray(shift) - 1) * L
        total += np.exp(-np.sum(((d + off) / sig) ** 2, axis=-1) / 2)
    return GridField(n, counts, lengths, amplitude * total)


def jump(n=2, counts=512, lengths=None, sigma=(0.4, 0.15), center=None, amplitude=JUMP_AMPLITUDE) -> GridField:
    """``sign(x_1 - c_1)`` times a Gaussian bump: a jump across ``{x_1 = c_1}``."""
    g = gaussian(n, counts, lengths, sigma, center, amplitude)
    center = np.asarray(g.lengths) / 2 if center is None else np.asarray(center, dtype=float)
    x1 = g.points()[..., 0]
    return GridField.like(g, np.sign(x1 - center[0]) * g.samples.real)


def _spectral(n, counts, lengths, center, coef) -> GridField:
    counts, lengths = _box(n, counts, lengths)
    center = np.asarray(lengths) / 2 if center is None else np.asarray(center, dtype=float)
    tmp = GridField(n, counts, lengths, np.zeros(counts))
    ks = np.stack(
        np.meshgrid(*[np.fft.fftfreq(c, d=1.0 / c) for c in counts], indexing="ij"), axis=-1
    )
    phase = np.exp(-1j * np.sum(ks * (2 * np.pi * center / np.asarray(lengths)), axis=-1))
    uhat = coef(ks) * phase
    u = np.fft.ifftn(uhat) * uhat.size
    return GridField.like(tmp, u)


def spectral_gevrey(theta=0.5, n=1, counts=4096, lengths=None, center=None) -> GridField:
    """Fourier series with coefficients ``exp(-|k|^theta)``; Gevrey of order ``1/theta``."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return _spectral(n, counts, lengths, center, lambda k: np.exp(-np.linalg.norm(k, axis=-1) ** theta))


def ridge(theta=0.8, n=2, counts=512, lengths=None, center=None, sigma=0.1) -> GridField:
    """Gevrey-``1/theta`` profile in ``x_1`` times a unit-mass Gaussian bump.

    The profile has Fourier coefficients ``exp(-|k_1|^theta)``, so the field
    is singular (for Gevrey indices below ``1/theta``) across ``{x_1 = c_1}``
    and smooth in the transverse directions.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    prof = _spectral(1, counts if np.isscalar(counts) else counts[0],
                     None if lengths is None else (lengths if np.isscalar(lengths) else lengths[0]),
                     None if center is None else [center[0]],
                     lambda k: np.exp(-np.abs(k[..., 0]) ** theta)).samples.real
    prof = prof / np.abs(prof).max()
    bump = gaussian(n, counts, lengths, sigma, center)
    shape = (-1,) + (1,) * (n - 1)
    return GridField.like(bump, bump.samples * prof.reshape(shape))


def plane_wave(k=(3, 2), counts=512, lengths=None) -> GridField:
    """Single Fourier mode ``exp(i k.x 2 pi / L)`` (an eigenfunction of every constant-coefficient operator)."""
    n = len(k)
    counts, lengths = _box(n, counts, lengths)
    tmp = GridField(n, counts, lengths, np.zeros(counts))
    phase = tmp.points() @ (2 * np.pi * np.asarray(k, dtype=float) / np.asarray(lengths))
    return GridField.like(tmp, np.exp(1j * phase))


def packet(k=(6, 4), counts=512, lengths=None, sigma=0.1, center=None) -> GridField:
    """Wave packet: the mode ``k`` times a unit-mass Gaussian bump."""
    bump = gaussian(len(k), counts, lengths, sigma, center)
    return GridField.like(bump, bump.samples * plane_wave(k, counts, lengths).samples)


GENERATORS = {
    "gaussian": gaussian,
    "jump": jump,
    "spectral-gevrey": spectral_gevrey,
    "ridge": ridge,
    "mode": plane_wave,
    "packet": packet,
}


def make_field(name: str, **kwargs) -> GridField:
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[name](**kwargs)
