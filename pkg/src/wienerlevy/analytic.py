"""Real-analytic functions near a compact plane set, their two-complex-variable
continuations, and the smooth compactly supported extension used by the
synthesis pipeline.

The extension is a cutoff product: H(z1, z2) = step(dist4/eps) * h(z1, z2),
where step is 1 up to 7 and 0 beyond 9. It agrees with the continuation of h
within distance 7*eps of the set and vanishes beyond 9*eps, which is all the
synthesis needs from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ValidationError

# Cutoff radii in units of eps: plateau ends at 7, support ends at 9.
PLATEAU_RADIUS = 7.0
SUPPORT_RADIUS = 9.0

# Margin convention declared by entire built-ins; with the 0.9/13 rule below it
# makes choose_epsilon return 0.9. Any positive value is valid for entire h.
ENTIRE_MARGIN = 13.0


def _as_complex_points(z) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    return np.atleast_1d(arr), scalar


# --- compact plane sets -------------------------------------------------------


class CompactSet:
    """A compact subset of the plane with an exact Euclidean distance oracle."""

    def dist2(self, z) -> np.ndarray:
        """Distance from the plane point(s) z (complex) to the set."""
        raise NotImplementedError

    def interior_depth(self, z) -> np.ndarray:
        """Distance from z to the complement; zero outside the set."""
        raise NotImplementedError

    def boundary_points(self, n: int) -> np.ndarray:
        """n complex samples on the boundary (used for set-to-set distances)."""
        raise NotImplementedError

    def contains(self, z) -> np.ndarray:
        return np.asarray(self.dist2(z)) == 0.0


@dataclass(frozen=True)
class Disc(CompactSet):
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("disc radius must be positive")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def dist2(self, z):
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        return np.maximum(d - self.radius, 0.0)

    def interior_depth(self, z):
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        return np.maximum(self.radius - d, 0.0)

    def boundary_points(self, n):
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.center + self.radius * np.exp(1j * t)


@dataclass(frozen=True)
class Annulus(CompactSet):
    center: complex
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (0 < self.r_inner < self.r_outer):
            raise ValidationError("annulus requires 0 < r_inner < r_outer")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "r_inner", float(self.r_inner))
        object.__setattr__(self, "r_outer", float(self.r_outer))

    def dist2(self, z):
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        below = np.maximum(self.r_inner - d, 0.0)
        above = np.maximum(d - self.r_outer, 0.0)
        return below + above

    def interior_depth(self, z):
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        return np.maximum(np.minimum(d - self.r_inner, self.r_outer - d), 0.0)

    def boundary_points(self, n):
        half = max(n // 2, 1)
        t = np.linspace(0.0, 2.0 * np.pi, half, endpoint=False)
        return np.concatenate(
            [self.center + self.r_inner * np.exp(1j * t), self.center + self.r_outer * np.exp(1j * t)]
        )


@dataclass(frozen=True)
class Polygon(CompactSet):
    vertices: Tuple[complex, ...]

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        if len(verts) < 3:
            raise ValidationError("polygon requires at least three vertices")
        object.__setattr__(self, "vertices", verts)

    def _segments(self):
        v = np.asarray(self.vertices, dtype=complex)
        return v, np.roll(v, -1)

    def _segment_distance(self, z):
        z = np.asarray(z, dtype=complex)
        a, b = self._segments()
        zz = z[..., None]
        ab = b - a
        t = np.clip(((zz - a) * np.conj(ab)).real / np.abs(ab) ** 2, 0.0, 1.0)
        proj = a + t * ab
        return np.abs(zz - proj).min(axis=-1)

    def _inside(self, z):
        z = np.asarray(z, dtype=complex)
        a, b = self._segments()
        x, y = z.real[..., None], z.imag[..., None]
        ax, ay, bx, by = a.real, a.imag, b.real, b.imag
        crosses = ((ay <= y) & (by > y)) | ((by <= y) & (ay > y))
        slope_x = ax + (y - ay) * (bx - ax) / np.where(by == ay, 1.0, by - ay)
        hits = crosses & (x < slope_x)
        return hits.sum(axis=-1) % 2 == 1

    def dist2(self, z):
        d = self._segment_distance(z)
        return np.where(self._inside(z), 0.0, d)

    def interior_depth(self, z):
        d = self._segment_distance(z)
        return np.where(self._inside(z), d, 0.0)

    def boundary_points(self, n):
        a, b = self._segments()
        per_edge = max(n // len(a), 2)
        t = np.linspace(0.0, 1.0, per_edge, endpoint=False)
        return (a[:, None] + t[None, :] * (b - a)[:, None]).ravel()


@dataclass(frozen=True)
class UnionSet(CompactSet):
    components: Tuple[CompactSet, ...]

    def __post_init__(self):
        if not self.components:
            raise ValidationError("union of compact sets needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))

    def dist2(self, z):
        return np.minimum.reduce([c.dist2(z) for c in self.components])

    def interior_depth(self, z):
        return np.maximum.reduce([c.interior_depth(z) for c in self.components])

    def boundary_points(self, n):
        per = max(n // len(self.components), 8)
        return np.concatenate([c.boundary_points(per) for c in self.components])


def set_distance(a: CompactSet, b: CompactSet, n: int = 4096) -> float:
    """Distance between two compact sets, from dense boundary sampling."""
    pa = a.boundary_points(n)
    pb = b.boundary_points(n)
    d = min(float(np.min(b.dist2(pa))), float(np.min(a.dist2(pb))))
    # Overlap shows up as an interior sample of one set lying in the other.
    if np.any(b.dist2(pa) == 0.0) or np.any(a.dist2(pb) == 0.0):
        return 0.0
    return d


# --- smooth cutoff -------------------------------------------------------------


def smooth_step(t):
    """C-infinity step: 1 for t <= 7, 0 for t >= 9, strictly monotone between.

    Built from g(u) = exp(-1/u) as g(9-t) / (g(9-t) + g(t-7)).
    """
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros(arr.shape, dtype=float)
    out[arr <= PLATEAU_RADIUS] = 1.0
    mid = (arr > PLATEAU_RADIUS) & (arr < SUPPORT_RADIUS)
    if np.any(mid):
        u = arr[mid]
        a = np.exp(-1.0 / (SUPPORT_RADIUS - u))
        b = np.exp(-1.0 / (u - PLATEAU_RADIUS))
        out[mid] = a / (a + b)
    return float(out[0]) if scalar else out


def dist4(zeta1, zeta2, K: CompactSet):
    """Euclidean distance in C^2 from (zeta1, zeta2) to K embedded at real points."""
    z1 = np.asarray(zeta1, dtype=complex)
    z2 = np.asarray(zeta2, dtype=complex)
    scalar = z1.ndim == 0 and z2.ndim == 0
    z1, z2 = np.broadcast_arrays(np.atleast_1d(z1), np.atleast_1d(z2))
    planar = K.dist2(z1.real + 1j * z2.real)
    out = np.sqrt(z1.imag**2 + z2.imag**2 + planar**2)
    return float(out[0]) if scalar else out


# --- analytic functions ---------------------------------------------------------


class AnalyticFunction:
    """A real-analytic function of one complex variable near a compact set.

    ``eval`` is the plane evaluation h(z); ``continuation`` evaluates the
    holomorphic continuation of h(xi + i eta) in the two complex variables
    (xi, eta), which agrees with ``eval`` on real points (xi, eta).
    """

    name = "analytic"

    def eval(self, z):
        z1, scalar = _as_complex_points(z)
        out = self.continuation(z1.real.astype(complex), z1.imag.astype(complex))
        return complex(out[0]) if scalar else out

    def continuation(self, zeta1, zeta2):
        raise NotImplementedError

    def domain_margin(self, K: CompactSet) -> Optional[float]:
        """Lower bound on the plane distance from K to where h stops being valid.

        None means the caller must declare the margin explicitly.
        """
        return None


@dataclass(frozen=True)
class Holomorphic(AnalyticFunction):
    """Holomorphic h; the continuation is h(zeta1 + i zeta2)."""

    fn: Callable
    label: str = "holomorphic"
    margin_fn: Optional[Callable[[CompactSet], float]] = None

    @property
    def name(self):
        return self.label

    def continuation(self, zeta1, zeta2):
        z1 = np.asarray(zeta1, dtype=complex)
        z2 = np.asarray(zeta2, dtype=complex)
        return self.fn(z1 + 1j * z2)

    def domain_margin(self, K):
        return None if self.margin_fn is None else float(self.margin_fn(K))


@dataclass(frozen=True)
class ConjugatePolynomial(AnalyticFunction):
    """Polynomial in z and conj(z); genuinely real-analytic, not holomorphic.

    terms maps (i, j) to the coefficient of z^i conj(z)^j. The continuation
    substitutes z -> zeta1 + i zeta2 and conj(z) -> zeta1 - i zeta2.
    """

    terms: Tuple[Tuple[Tuple[int, int], complex], ...]
    label: str = "zbar-polynomial"

    def __post_init__(self):
        norm = tuple(((int(i), int(j)), complex(c)) for (i, j), c in self.terms)
        object.__setattr__(self, "terms", norm)

    @property
    def name(self):
        return self.label

    def continuation(self, zeta1, zeta2):
        z1 = np.asarray(zeta1, dtype=complex)
        z2 = np.asarray(zeta2, dtype=complex)
        u = z1 + 1j * z2
        w = z1 - 1j * z2
        out = np.zeros(np.broadcast(u, w).shape, dtype=complex)
        for (i, j), c in self.terms:
            out = out + c * u**i * w**j
        return out

    def domain_margin(self, K):
        return ENTIRE_MARGIN


@dataclass(frozen=True)
class PowerSeries2D(AnalyticFunction):
    """Bivariate power series in (xi - Re z0, eta - Im z0) with radius r.

    coeffs[k, n] multiplies (xi - Re z0)^k (eta - Im z0)^n. Evaluation outside
    the C^2 ball of radius r is a domain error.
    """

    center: complex
    radius: float
    coeffs: np.ndarray
    label: str = "power-series"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("power series radius must be positive")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2:
            raise ValidationError("power series coefficients must be a 2-D array")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def name(self):
        return self.label

    def continuation(self, zeta1, zeta2):
        z1 = np.asarray(zeta1, dtype=complex) - self.center.real
        z2 = np.asarray(zeta2, dtype=complex) - self.center.imag
        z1, z2 = np.broadcast_arrays(z1, z2)
        if np.any(np.abs(z1) ** 2 + np.abs(z2) ** 2 >= self.radius**2):
            raise DomainError("power series evaluated outside its ball of convergence")
        # Horner in the second variable inside Horner in the first.
        out = np.zeros(z1.shape, dtype=complex)
        for row in self.coeffs[::-1]:
            inner = np.zeros(z2.shape, dtype=complex)
            for c in row[::-1]:
                inner = inner * z2 + c
            out = out * z1 + inner
        return out

    def domain_margin(self, K):
        # The series continues inside the C^2 ball around its center.
        far = float(np.max(np.abs(K.boundary_points(2048) - self.center)))
        return max(self.radius - far, 0.0)


@dataclass(frozen=True)
class Piecewise(AnalyticFunction):
    """Different analytic functions on pairwise far-apart compact components."""

    pieces: Tuple[Tuple[CompactSet, AnalyticFunction], ...]
    select_radius: Optional[float] = None
    label: str = "piecewise"

    def __post_init__(self):
        if not self.pieces:
            raise ValidationError("piecewise function needs at least one piece")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if self.select_radius is None and len(self.pieces) > 1:
            gap = min(
                set_distance(a, b)
                for i, (a, _) in enumerate(self.pieces)
                for b, _ in (p for j, p in enumerate(self.pieces) if j > i)
            )
            object.__setattr__(self, "select_radius", 0.49 * gap)
        elif self.select_radius is None:
            object.__setattr__(self, "select_radius", math.inf)

    @property
    def name(self):
        return self.label

    def continuation(self, zeta1, zeta2):
        z1 = np.asarray(zeta1, dtype=complex)
        z2 = np.asarray(zeta2, dtype=complex)
        z1, z2 = np.broadcast_arrays(np.atleast_1d(z1), np.atleast_1d(z2))
        out = np.full(z1.shape, np.nan + 0j)
        assigned = np.zeros(z1.shape, dtype=bool)
        for K_i, h_i in self.pieces:
            m = (dist4(z1, z2, K_i) <= self.select_radius) & ~assigned
            if np.any(m):
                out[m] = h_i.continuation(z1[m], z2[m])
                assigned |= m
        if not np.all(assigned):
            raise DomainError("piecewise function evaluated away from every component")
        if np.asarray(zeta1).ndim == 0 and np.asarray(zeta2).ndim == 0:
            return complex(out.reshape(-1)[0])
        return out

    def domain_margin(self, K):
        margins = [h.domain_margin(K_i) for K_i, h in self.pieces]
        if any(m is None for m in margins):
            return None
        return min(margins)


# --- built-in registry ----------------------------------------------------------


def _reciprocal_margin(K: CompactSet) -> float:
    d = float(K.dist2(np.array([0j]))[0])
    if d <= 0:
        raise ValidationError("reciprocal is singular at 0, which lies in K")
    return d


def _log_margin(K: CompactSet) -> float:
    pts = K.boundary_points(8192)
    ray = np.abs(np.where(pts.real <= 0, pts.imag, pts))
    # Also reject K actually meeting the cut.
    cut = -np.linspace(0.0, float(np.abs(pts).max()) + 1.0, 4096)
    if np.any(K.dist2(cut) == 0.0):
        raise ValidationError("log branch cut (-inf, 0] meets K")
    d = float(np.min(ray))
    if d <= 0:
        raise ValidationError("log branch cut (-inf, 0] meets K")
    return d


def _entire(fn, label):
    return Holomorphic(fn, label, margin_fn=lambda K: ENTIRE_MARGIN)


BUILTIN_FUNCTIONS = {
    "identity": lambda: _entire(lambda z: z, "identity"),
    "square": lambda: _entire(lambda z: z**2, "square"),
    "cube": lambda: _entire(lambda z: z**3, "cube"),
    "exp": lambda: _entire(np.exp, "exp"),
    "constant": lambda value=1.0: _entire(
        lambda z, c=complex(value): np.full(np.shape(z), c, dtype=complex) if np.ndim(z) else c,
        "constant",
    ),
    "affine": lambda a=1.0, b=0.0: _entire(
        lambda z, aa=complex(a), bb=complex(b): aa * z + bb, "affine"
    ),
    "reciprocal": lambda: Holomorphic(lambda z: 1.0 / z, "reciprocal", margin_fn=_reciprocal_margin),
    "log": lambda: Holomorphic(np.log, "log", margin_fn=_log_margin),
    "conjugate": lambda: ConjugatePolynomial((((0, 1), 1.0),), "conjugate"),
    "abs_square": lambda: ConjugatePolynomial((((1, 1), 1.0),), "abs_square"),
}


def make_function(name: str, **params) -> AnalyticFunction:
    if name not in BUILTIN_FUNCTIONS:
        raise ValidationError(
            f"unknown function {name!r}; built-ins are: {', '.join(sorted(BUILTIN_FUNCTIONS))}"
        )
    try:
        return BUILTIN_FUNCTIONS[name](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for function {name!r}: {exc}") from None


# --- operations -----------------------------------------------------------------


def continuation_eval(h: AnalyticFunction, zeta1, zeta2):
    """Continuation of h at the C^2 point (zeta1, zeta2)."""
    z1, s1 = _as_complex_points(zeta1)
    z2, s2 = _as_complex_points(zeta2)
    out = h.continuation(z1, z2)
    if s1 and s2:
        return complex(np.asarray(out).reshape(-1)[0])
    return out


def choose_epsilon(K: CompactSet, domain_margin: float) -> float:
    """Margin-to-epsilon rule 0.9 * margin / 13.

    The factor 13 keeps every continuation point within sqrt(2)*9*eps < 13*eps
    of K in the plane, hence inside the declared domain of validity.
    """
    if not domain_margin > 0:
        raise ValidationError("domain margin must be positive")
    return 0.9 * float(domain_margin) / 13.0


@dataclass(frozen=True)
class SmoothedExtension:
    """Smooth compactly supported extension of h around K.

    Evaluates step(dist4/eps) * continuation(h); for piecewise h each piece
    gets its own cutoff around its own component, and the 10*eps neighborhoods
    of the components must be pairwise disjoint.
    """

    pieces: Tuple[Tuple[CompactSet, AnalyticFunction], ...]
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(self.pieces) > 1:
            for i, (a, _) in enumerate(self.pieces):
                for b, _ in self.pieces[i + 1 :]:
                    if set_distance(a, b) <= 20.0 * self.eps:
                        raise ValidationError(
                            "piecewise components' 10*eps neighborhoods overlap; "
                            "decrease eps or separate the components"
                        )

    @classmethod
    def build(
        cls,
        h: AnalyticFunction,
        K: Optional[CompactSet],
        eps: float,
        domain_margin: Optional[float] = None,
    ) -> "SmoothedExtension":
        if isinstance(h, Piecewise):
            pieces = h.pieces
        else:
            if K is None:
                raise ValidationError("a compact set is required for a non-piecewise function")
            pieces = ((K, h),)
        for K_i, h_i in pieces:
            margin = domain_margin if domain_margin is not None else h_i.domain_margin(K_i)
            if margin is None:
                raise ValidationError(
                    f"function {h_i.name!r} does not declare a domain margin; pass domain_margin"
                )
            if not eps < margin / 13.0:
                raise ValidationError(
                    f"eps={eps:g} violates eps < margin/13 = {margin / 13.0:g} for {h_i.name!r}"
                )
        return cls(pieces, float(eps))

    @property
    def K(self) -> CompactSet:
        if len(self.pieces) == 1:
            return self.pieces[0][0]
        return UnionSet(tuple(K_i for K_i, _ in self.pieces))

    def eval(self, zeta1, zeta2):
        z1 = np.asarray(zeta1, dtype=complex)
        z2 = np.asarray(zeta2, dtype=complex)
        scalar = z1.ndim == 0 and z2.ndim == 0
        z1, z2 = np.broadcast_arrays(np.atleast_1d(z1), np.atleast_1d(z2))
        out = np.zeros(z1.shape, dtype=complex)
        for K_i, h_i in self.pieces:
            cut = smooth_step(dist4(z1, z2, K_i) / self.eps)
            m = cut > 0.0
            if np.any(m):
                out[m] += cut[m] * h_i.continuation(z1[m], z2[m])
        return complex(out.reshape(-1)[0]) if scalar else out


def extension_eval(H: SmoothedExtension, zeta1, zeta2):
    return H.eval(zeta1, zeta2)
