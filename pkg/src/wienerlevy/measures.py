"""Measure algebra for mixed pure-point plus absolutely-continuous measures.

Atoms are indexed by exact integer combination vectors over a fixed finite
frequency basis, so convolution is lattice addition and never compares
floating-point frequencies. Densities are uniformly sampled complex functions
on a 1-D grid and are treated as band-limited to the grid's Nyquist band; all
shifts and convolutions preserve the grid (fractional shifts are realized by a
frequency-domain phase ramp).

All values are immutable after construction and all operations are pure, so
they can be shared freely between threads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import ValidationError

# Relative atom prune applied after convolutions; keeps atom counts bounded.
CONVOLUTION_PRUNE = 1e-15

_ALIGN_TOL = 1e-9


def _as_points(y, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce ``y`` to an (m, dim) float array; second item flags scalar input."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise ValidationError(f"scalar y is invalid for dimension {dim}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if arr.size == dim:
            return arr.reshape(1, dim), True
        if dim == 1:
            return arr.reshape(-1, 1), False
        raise ValidationError(f"y of shape {arr.shape} does not match dimension {dim}")
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise ValidationError(f"y of shape {arr.shape} does not match dimension {dim}")


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class FrequencyBasis:
    """Ordered finite list of frequency vectors in R^d.

    Atom locations are integer combinations of these vectors; distinct atoms
    are distinguished by their integer vectors, never by comparing the real
    locations.
    """

    dim: int
    gammas: Tuple[Tuple[float, ...], ...] = ()

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValidationError("basis dimension must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        norm = []
        for g in self.gammas:
            vec = tuple(float(c) for c in (g if isinstance(g, (tuple, list, np.ndarray)) else (g,)))
            if len(vec) != self.dim:
                raise ValidationError("frequency vector length differs from basis dimension")
            norm.append(vec)
        object.__setattr__(self, "gammas", tuple(norm))

    @property
    def size(self) -> int:
        return len(self.gammas)

    @cached_property
    def gamma_matrix(self) -> np.ndarray:
        if not self.gammas:
            return np.zeros((0, self.dim))
        return np.array(self.gammas, dtype=float)

    def zero_key(self) -> tuple[int, ...]:
        return (0,) * self.size

    def locations(self, kmat) -> np.ndarray:
        """Real locations of the integer vectors in ``kmat`` (m, size) -> (m, dim)."""
        kmat = np.asarray(kmat, dtype=float).reshape(-1, self.size)
        return kmat @ self.gamma_matrix


@dataclass(frozen=True)
class PointMeasure:
    """Finite pure-point measure: map from integer vector to complex mass."""

    basis: FrequencyBasis
    atoms: Mapping[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in self.atoms.items():
            key = tuple(int(v) for v in k)
            if len(key) != self.basis.size:
                raise ValidationError("atom index length differs from basis size")
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValidationError("atom coefficient must be finite")
            if c != 0:
                clean[key] = c
        object.__setattr__(self, "atoms", clean)

    # --- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, basis: FrequencyBasis) -> "PointMeasure":
        return cls(basis, {})

    @classmethod
    def delta(cls, basis: FrequencyBasis, k=None, coef: complex = 1.0) -> "PointMeasure":
        key = basis.zero_key() if k is None else tuple(int(v) for v in k)
        return cls(basis, {key: complex(coef)})

    @classmethod
    def from_atoms(cls, basis: FrequencyBasis, pairs: Iterable) -> "PointMeasure":
        acc: dict = {}
        for k, c in pairs:
            key = tuple(int(v) for v in k)
            acc[key] = acc.get(key, 0j) + complex(c)
        return cls(basis, acc)

    # --- queries ------------------------------------------------------------
    @property
    def atom_count(self) -> int:
        return len(self.atoms)

    def total_variation(self) -> float:
        return float(sum(abs(c) for c in self.atoms.values()))

    def key_matrix(self) -> np.ndarray:
        n = len(self.atoms)
        if n == 0 or self.basis.size == 0:
            return np.zeros((n, self.basis.size), dtype=np.int64)
        return np.array(list(self.atoms.keys()), dtype=np.int64)

    def coefficients(self) -> np.ndarray:
        return np.array(list(self.atoms.values()), dtype=complex)

    def fourier(self, y):
        """Fourier-Stieltjes transform sum(c_k exp(-2 pi i <rho_k, y>))."""
        pts, scalar = _as_points(y, self.basis.dim)
        if not self.atoms:
            out = np.zeros(len(pts), dtype=complex)
        else:
            locs = self.basis.locations(self.key_matrix())
            phases = pts @ locs.T
            out = np.exp(-2j * np.pi * phases) @ self.coefficients()
        return complex(out[0]) if scalar else out

    # --- algebra ------------------------------------------------------------
    def scaled(self, c: complex) -> "PointMeasure":
        c = complex(c)
        if c == 0:
            return PointMeasure.zero(self.basis)
        return PointMeasure(self.basis, {k: v * c for k, v in self.atoms.items()})

    def plus(self, other: "PointMeasure") -> "PointMeasure":
        if self.basis != other.basis:
            raise ValidationError("point measures live over different bases")
        acc = dict(self.atoms)
        for k, c in other.atoms.items():
            acc[k] = acc.get(k, 0j) + c
        return PointMeasure(self.basis, acc)

    def conjugate_reflect(self) -> "PointMeasure":
        return PointMeasure(
            self.basis,
            {tuple(-v for v in k): complex(c).conjugate() for k, c in self.atoms.items()},
        )

    def convolved(self, other: "PointMeasure", prune_rel: float = CONVOLUTION_PRUNE) -> "PointMeasure":
        if self.basis != other.basis:
            raise ValidationError("convolution requires a common basis")
        if not self.atoms or not other.atoms:
            return PointMeasure.zero(self.basis)
        if self.basis.size == 0:
            return PointMeasure(self.basis, {(): self.atoms[()] * other.atoms[()]})
        k1, c1 = self.key_matrix(), self.coefficients()
        k2, c2 = other.key_matrix(), other.coefficients()
        keys = (k1[:, None, :] + k2[None, :, :]).reshape(-1, self.basis.size)
        vals = (c1[:, None] * c2[None, :]).ravel()
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        acc = np.zeros(len(uniq), dtype=complex)
        np.add.at(acc, inv.ravel(), vals)
        thresh = prune_rel * float(np.abs(acc).sum())
        out = {
            tuple(int(x) for x in uniq[i]): complex(acc[i])
            for i in range(len(uniq))
            if abs(acc[i]) > thresh
        }
        return PointMeasure(self.basis, out)

    def power(self, p: int, prune_rel: float = CONVOLUTION_PRUNE) -> "PointMeasure":
        if p < 0:
            raise ValidationError("convolution power requires p >= 0")
        out = PointMeasure.delta(self.basis)
        for _ in range(p):
            out = out.convolved(self, prune_rel)
        return out

    def pruned(self, threshold_abs: float) -> tuple["PointMeasure", float]:
        """Drop atoms below an absolute threshold; returns (measure, lost mass)."""
        keep, lost = {}, 0.0
        for k, c in self.atoms.items():
            if abs(c) > threshold_abs:
                keep[k] = c
            else:
                lost += abs(c)
        return PointMeasure(self.basis, keep), lost

    def largest(self, count: int) -> "PointMeasure":
        items = sorted(self.atoms.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
        return PointMeasure(self.basis, dict(items[:count]))


@dataclass(frozen=True)
class GridDensity:
    """Uniformly sampled complex density on a 1-D interval.

    Represents the absolutely continuous measure f(x) dx with
    f(x0 + j dx) = samples[j].
    """

    x0: float
    dx: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dx > 0:
            raise ValidationError("grid spacing must be positive")
        arr = np.asarray(self.samples, dtype=complex)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("density samples must be a nonempty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("density samples must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))

    def __eq__(self, other):
        return (
            isinstance(other, GridDensity)
            and self.x0 == other.x0
            and self.dx == other.dx
            and self.samples.shape == other.samples.shape
            and bool(np.all(self.samples == other.samples))
        )

    @property
    def size(self) -> int:
        return int(self.samples.size)

    def grid(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.size)

    def l1_norm(self) -> float:
        return float(self.dx * np.abs(self.samples).sum())

    def fourier(self, y):
        """Riemann-sum Fourier transform dx * sum f_j exp(-2 pi i x_j y)."""
        pts, scalar = _as_points(y, 1)
        phases = pts[:, 0][:, None] * self.grid()[None, :]
        out = self.dx * (np.exp(-2j * np.pi * phases) @ self.samples)
        return complex(out[0]) if scalar else out

    def scaled(self, c: complex) -> "GridDensity":
        return GridDensity(self.x0, self.dx, self.samples * complex(c))

    def _steps_to(self, other: "GridDensity") -> int:
        if abs(self.dx - other.dx) > _ALIGN_TOL * self.dx:
            raise ValidationError("densities have incompatible grid spacings")
        off = (other.x0 - self.x0) / self.dx
        j = round(off)
        if abs(off - j) > 1e-6:
            raise ValidationError("density grids are not aligned (offset is not an integer number of steps)")
        return int(j)

    def plus(self, other: "GridDensity") -> "GridDensity":
        j = self._steps_to(other)
        lo = min(0, j)
        hi = max(self.size, j + other.size)
        out = np.zeros(hi - lo, dtype=complex)
        out[-lo : -lo + self.size] += self.samples
        out[j - lo : j - lo + other.size] += other.samples
        return GridDensity(self.x0 + lo * self.dx, self.dx, out)

    def conjugate_reflect(self) -> "GridDensity":
        new_x0 = -(self.x0 + (self.size - 1) * self.dx)
        return GridDensity(new_x0, self.dx, np.conj(self.samples[::-1]))

    def shifted(self, rho: float) -> "GridDensity":
        """Band-limited shift by rho (a phase ramp on a zero-padded grid)."""
        if rho == 0:
            return self
        m = int(np.ceil(abs(rho) / self.dx)) + 8
        n_tot = _next_pow2(self.size + 2 * m)
        f = np.zeros(n_tot, dtype=complex)
        f[m : m + self.size] = self.samples
        yy = np.fft.fftfreq(n_tot, d=self.dx)
        g = np.fft.ifft(np.fft.fft(f) * np.exp(-2j * np.pi * rho * yy))
        return GridDensity(self.x0 - m * self.dx, self.dx, g)

    def convolved(self, other: "GridDensity") -> "GridDensity":
        """Linear convolution (integral sense) via zero-padded FFT."""
        if abs(self.dx - other.dx) > _ALIGN_TOL * self.dx:
            raise ValidationError("densities have incompatible grid spacings")
        n = self.size + other.size - 1
        n_tot = _next_pow2(n)
        fa = np.fft.fft(self.samples, n_tot)
        fb = np.fft.fft(other.samples, n_tot)
        conv = np.fft.ifft(fa * fb)[:n] * self.dx
        return GridDensity(self.x0 + other.x0, self.dx, conv)

    def trimmed(self, rel: float = 1e-16) -> "GridDensity":
        mags = np.abs(self.samples)
        top = mags.max()
        if top == 0:
            return GridDensity(self.x0, self.dx, self.samples[:1])
        keep = np.nonzero(mags > rel * top)[0]
        i0, i1 = int(keep[0]), int(keep[-1]) + 1
        if i0 == 0 and i1 == self.size:
            return self
        return GridDensity(self.x0 + i0 * self.dx, self.dx, self.samples[i0:i1])


def grid_spectrum(d: GridDensity, n_pad: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Sampled Fourier transform of a density on its dual DFT grid.

    Returns (y, fhat) with y = fftfreq(n_pad, dx) and
    fhat[m] = dx * sum_j f_j exp(-2 pi i x_j y_m).
    """
    n_pad = d.size if n_pad is None else int(n_pad)
    if n_pad < d.size:
        raise ValidationError("padding must not truncate the density")
    f = np.zeros(n_pad, dtype=complex)
    f[: d.size] = d.samples
    y = np.fft.fftfreq(n_pad, d=d.dx)
    fhat = d.dx * np.exp(-2j * np.pi * d.x0 * y) * np.fft.fft(f)
    return y, fhat


def density_from_spectrum(fhat: np.ndarray, x0: float, dx: float) -> GridDensity:
    """Inverse of :func:`grid_spectrum` on the same implicit grid."""
    fhat = np.asarray(fhat, dtype=complex)
    y = np.fft.fftfreq(fhat.size, d=dx)
    samples = np.fft.ifft(fhat * np.exp(2j * np.pi * x0 * y)) / dx
    return GridDensity(x0, dx, samples)


@dataclass(frozen=True)
class MixedMeasure:
    """Pure-point part plus optional absolutely continuous part."""

    point: PointMeasure
    density: Optional[GridDensity] = None

    def __post_init__(self):
        if self.density is not None and self.basis.dim != 1:
            raise ValidationError("densities are supported in dimension 1 only")

    @property
    def basis(self) -> FrequencyBasis:
        return self.point.basis

    @classmethod
    def of(cls, m) -> "MixedMeasure":
        if isinstance(m, MixedMeasure):
            return m
        if isinstance(m, PointMeasure):
            return cls(m, None)
        if isinstance(m, GridDensity):
            return cls(PointMeasure.zero(FrequencyBasis(1, ())), m)
        raise ValidationError(f"cannot interpret {type(m).__name__} as a measure")

    def is_pure_point(self) -> bool:
        return self.density is None

    def total_variation(self) -> float:
        tv = self.point.total_variation()
        if self.density is not None:
            tv += self.density.l1_norm()
        return tv

    def fourier(self, y):
        out = self.point.fourier(y)
        if self.density is not None:
            out = out + self.density.fourier(y)
        return out

    def scaled(self, c: complex) -> "MixedMeasure":
        dens = None if self.density is None else self.density.scaled(c)
        return MixedMeasure(self.point.scaled(c), dens)

    def plus(self, other: "MixedMeasure") -> "MixedMeasure":
        pt = self.point.plus(other.point)
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        else:
            dens = self.density.plus(other.density)
        return MixedMeasure(pt, dens)

    def conjugate_reflect(self) -> "MixedMeasure":
        dens = None if self.density is None else self.density.conjugate_reflect()
        return MixedMeasure(self.point.conjugate_reflect(), dens)

    def convolved(self, other: "MixedMeasure", prune_rel: float = CONVOLUTION_PRUNE) -> "MixedMeasure":
        pp = self.point.convolved(other.point, prune_rel)
        parts = []
        if other.density is not None and self.point.atoms:
            parts.append(_atoms_times_density(self.point, other.density))
        if self.density is not None and other.point.atoms:
            parts.append(_atoms_times_density(other.point, self.density))
        if self.density is not None and other.density is not None:
            parts.append(self.density.convolved(other.density))
        dens = None
        for p in parts:
            dens = p if dens is None else dens.plus(p)
        return MixedMeasure(pp, dens)


def _atoms_times_density(pm: PointMeasure, dens: GridDensity) -> GridDensity:
    if pm.basis.dim != 1:
        raise ValidationError("atom-by-density convolution requires dimension 1")
    locs = pm.basis.locations(pm.key_matrix())[:, 0]
    out = None
    for rho, c in zip(locs, pm.coefficients()):
        part = dens.shifted(float(rho)).scaled(c)
        out = part if out is None else out.plus(part)
    return out


# --- spec-facing operation names --------------------------------------------

Measure = Union[PointMeasure, GridDensity, MixedMeasure]


def total_variation(m: Measure) -> float:
    return MixedMeasure.of(m).total_variation()


def fourier_at(m: Measure, y):
    return MixedMeasure.of(m).fourier(y)


def convolve(a: Measure, b: Measure, prune_threshold: float = CONVOLUTION_PRUNE) -> MixedMeasure:
    return MixedMeasure.of(a).convolved(MixedMeasure.of(b), prune_threshold)


def conjugate_reflect(m: Measure):
    if isinstance(m, (PointMeasure, GridDensity)):
        return m.conjugate_reflect()
    return MixedMeasure.of(m).conjugate_reflect()


def convolution_power(m: Measure, p: int, prune_threshold: float = CONVOLUTION_PRUNE) -> MixedMeasure:
    if p < 0:
        raise ValidationError("convolution power requires p >= 0")
    mm = MixedMeasure.of(m)
    out = MixedMeasure(PointMeasure.delta(mm.basis), None)
    for _ in range(int(p)):
        out = out.convolved(mm, prune_threshold)
    return out


def truncate_atoms(m: PointMeasure, budget: float) -> tuple[PointMeasure, float]:
    """Keep the fewest largest-modulus atoms so the dropped mass is < budget."""
    if not budget > 0:
        raise ValidationError("truncation budget must be positive")
    items = sorted(m.atoms.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    mags = [abs(c) for _, c in items]
    tail = float(sum(mags))
    keep = 0
    while tail >= budget and keep < len(items):
        tail -= mags[keep]
        keep += 1
    tail = float(sum(mags[keep:]))
    return PointMeasure(m.basis, dict(items[:keep])), tail


def residual_split(
    mu: MixedMeasure, v: Optional[GridDensity], s: PointMeasure
) -> tuple[MixedMeasure, MixedMeasure]:
    """Real/imaginary symmetrizations of the residual mu - v dx - s.

    The transforms satisfy lam_R^ = Re mu^ - alpha and lam_I^ = Im mu^ - beta
    where alpha + i beta = (v + s)^.
    """
    mu = MixedMeasure.of(mu)
    r_point = mu.point.plus(s.scaled(-1))
    if v is None:
        r_dens = mu.density
    else:
        if mu.density is None:
            r_dens = v.scaled(-1)
        else:
            j = mu.density._steps_to(v)
            if j != 0 or v.size != mu.density.size:
                raise ValidationError("lowpass approximant grid differs from the measure's density grid")
            r_dens = mu.density.plus(v.scaled(-1))
    r = MixedMeasure(r_point, r_dens)
    refl = r.conjugate_reflect()
    lam_r = r.plus(refl).scaled(0.5)
    lam_i = r.plus(refl.scaled(-1)).scaled(-0.5j)
    return lam_r, lam_i


# --- JSON-lines serialization ------------------------------------------------


def serialize_measure(m: Measure) -> str:
    """One basis header record, one record per atom, optional density record."""
    mm = MixedMeasure.of(m)
    lines = [json.dumps({"dim": mm.basis.dim, "gammas": [list(g) for g in mm.basis.gammas]})]
    for k in sorted(mm.point.atoms):
        c = mm.point.atoms[k]
        freq = mm.basis.locations(np.array([k]))[0]
        lines.append(
            json.dumps(
                {"k": list(k), "freq": [float(f) for f in freq], "re": c.real, "im": c.imag}
            )
        )
    if mm.density is not None:
        d = mm.density
        lines.append(
            json.dumps(
                {
                    "x0": d.x0,
                    "dx": d.dx,
                    "samples_re": [float(v) for v in d.samples.real],
                    "samples_im": [float(v) for v in d.samples.imag],
                }
            )
        )
    return "\n".join(lines) + "\n"


def deserialize_measure(text: str) -> MixedMeasure:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty measure stream")
    head = json.loads(lines[0])
    if "dim" not in head or "gammas" not in head:
        raise ValidationError("measure stream must start with a basis record")
    basis = FrequencyBasis(head["dim"], tuple(tuple(g) for g in head["gammas"]))
    atoms: dict = {}
    density = None
    for ln in lines[1:]:
        rec = json.loads(ln)
        if "k" in rec:
            if density is not None:
                raise ValidationError("atom records must precede the density record")
            key = tuple(int(v) for v in rec["k"])
            if len(key) != basis.size:
                raise ValidationError("atom index length differs from basis size")
            if key in atoms:
                raise ValidationError(f"duplicate atom record for {key}")
            c = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
            if "freq" in rec:
                stated = np.asarray(rec["freq"], dtype=float)
                actual = basis.locations(np.array([key]))[0]
                if stated.shape != actual.shape or np.any(
                    np.abs(stated - actual) > 1e-9 * (1.0 + np.abs(actual))
                ):
                    raise ValidationError(f"atom frequency inconsistent with its index {key}")
            atoms[key] = c
        elif "x0" in rec:
            if density is not None:
                raise ValidationError("at most one density record is allowed")
            re = np.asarray(rec["samples_re"], dtype=float)
            im = np.asarray(rec.get("samples_im", np.zeros_like(re)), dtype=float)
            if re.shape != im.shape:
                raise ValidationError("density sample arrays differ in length")
            density = GridDensity(rec["x0"], rec["dx"], re + 1j * im)
        else:
            raise ValidationError(f"unrecognized measure record: {sorted(rec)}")
    return MixedMeasure(PointMeasure(basis, atoms), density)
