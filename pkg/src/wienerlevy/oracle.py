"""Independent verification: the parametrized polydisk Cauchy integral, the
geometric-series inverse oracle, and residual reporting."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .analytic import AnalyticFunction, CompactSet, SmoothedExtension
from .errors import ConfigurationError, ValidationError
from .measures import FrequencyBasis, MixedMeasure, PointMeasure, _as_points


def cauchy_polydisk_value(
    y,
    H: SmoothedExtension,
    center_eval: Callable,
    mu,
    quad_n: int = 256,
):
    """Trapezoid quadrature of the parametrized two-circle Cauchy integral.

    F(y) = int int H(a + 3e exp(2 pi i t1), b + 3e exp(2 pi i t2))
                 * 9 e^2 exp(2 pi i (t1+t2))
                 / ((a + 3e exp(2 pi i t1) - Re mu^)(b + 3e exp(2 pi i t2) - Im mu^))
           dt1 dt2,
    with a + i b = center_eval(y). The integrand is 1-periodic and smooth, so
    the uniform grid converges spectrally; when mu^(y) lies in K the value
    equals h(mu^(y)) within quadrature error.
    """
    mu = MixedMeasure.of(mu)
    if quad_n < 64:
        raise ValidationError("polydisk quadrature requires quad_n >= 64")
    pts, scalar = _as_points(y, mu.basis.dim)
    eps = H.eps
    tau = np.arange(quad_n) / quad_n
    e = 3.0 * eps * np.exp(2j * np.pi * tau)
    centers = np.atleast_1d(np.asarray(center_eval(pts), dtype=complex))
    muh = np.atleast_1d(np.asarray(mu.fourier(pts), dtype=complex))

    out = np.empty(len(pts), dtype=complex)
    block = max(1, (1 << 22) // (quad_n * quad_n))
    ee = e[:, None] * e[None, :]
    for i0 in range(0, len(pts), block):
        i1 = min(i0 + block, len(pts))
        z1 = centers.real[i0:i1, None, None] + e[None, :, None]
        z2 = centers.imag[i0:i1, None, None] + e[None, None, :]
        den1 = z1 - muh.real[i0:i1, None, None]
        den2 = z2 - muh.imag[i0:i1, None, None]
        closest = min(float(np.abs(den1).min()), float(np.abs(den2).min()))
        if closest < 1e-10:
            raise ConfigurationError(
                "a quadrature node hit a pole of the Cauchy integrand; the contraction "
                "bound guarantees a margin, so this indicates an invalid (v, s) pair"
            )
        hv = H.eval(z1, z2)
        out[i0:i1] = (hv * ee[None, :, :] / (den1 * den2)).mean(axis=(1, 2))
    return complex(out[0]) if scalar else out


def geometric_inverse(a: complex, gamma, terms: int) -> PointMeasure:
    """Truncated Neumann inverse of delta_0 + a delta_gamma: sum (-a)^k delta_{k gamma}."""
    a = complex(a)
    if abs(a) >= 1:
        raise ValidationError("geometric inverse requires |a| < 1")
    vec = tuple(float(g) for g in (gamma if isinstance(gamma, (tuple, list, np.ndarray)) else (gamma,)))
    basis = FrequencyBasis(len(vec), (vec,))
    return PointMeasure(basis, {(k,): (-a) ** k for k in range(int(terms) + 1)})


@dataclass
class ResidualStats:
    """Per-point verification columns plus in-K aggregates."""

    y: np.ndarray  # (m, d)
    mu_hat: np.ndarray  # (m,)
    nu_hat: np.ndarray  # (m,)
    h_of_mu: np.ndarray  # (m,), NaN where h is not evaluable
    cauchy: Optional[np.ndarray]  # (m,) or None when quadrature was skipped
    in_k: np.ndarray  # (m,) bool
    in_k_margin: float

    @property
    def residual(self) -> np.ndarray:
        return np.abs(self.nu_hat - self.h_of_mu)

    @property
    def in_k_count(self) -> int:
        return int(self.in_k.sum())

    @property
    def sup_in_k(self) -> float:
        if not self.in_k.any():
            return 0.0
        return float(np.nanmax(self.residual[self.in_k]))

    @property
    def mean_in_k(self) -> float:
        if not self.in_k.any():
            return 0.0
        return float(np.nanmean(self.residual[self.in_k]))

    def aggregate(self) -> dict:
        return {
            "count": int(len(self.mu_hat)),
            "in_k_count": self.in_k_count,
            "in_k_margin": self.in_k_margin,
            "sup_residual_in_k": self.sup_in_k,
            "mean_residual_in_k": self.mean_in_k,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        d = self.y.shape[1] if self.y.ndim == 2 else 1
        writer = csv.writer(buf, lineterminator="\n")
        header = [f"y{i}" for i in range(d)]
        header += ["mu_hat_re", "mu_hat_im", "in_k", "nu_hat_re", "nu_hat_im"]
        header += ["cauchy_re", "cauchy_im", "h_re", "h_im", "abs_residual"]
        writer.writerow(header)
        for i in range(len(self.mu_hat)):
            row = [f"{v:.17g}" for v in np.atleast_1d(self.y[i])]
            row += [f"{self.mu_hat[i].real:.17g}", f"{self.mu_hat[i].imag:.17g}"]
            row += [int(self.in_k[i])]
            row += [f"{self.nu_hat[i].real:.17g}", f"{self.nu_hat[i].imag:.17g}"]
            if self.cauchy is None:
                row += ["", ""]
            else:
                row += [f"{self.cauchy[i].real:.17g}", f"{self.cauchy[i].imag:.17g}"]
            h = self.h_of_mu[i]
            if np.isnan(h.real):
                row += ["", "", ""]
            else:
                row += [f"{h.real:.17g}", f"{h.imag:.17g}", f"{abs(self.nu_hat[i] - h):.17g}"]
            writer.writerow(row)
        return buf.getvalue()


def residual_report(
    nu,
    mu,
    h: AnalyticFunction,
    K: CompactSet,
    y_set,
    H: Optional[SmoothedExtension] = None,
    center_eval: Optional[Callable] = None,
    quad_n: int = 0,
    in_k_margin: float = 0.0,
) -> ResidualStats:
    """Evaluate every verification column per y; asserts nothing itself."""
    mu = MixedMeasure.of(mu)
    nu = MixedMeasure.of(nu)
    pts = np.asarray(y_set, dtype=float).reshape(-1, mu.basis.dim)
    m = len(pts)
    if m == 0:
        return ResidualStats(
            y=pts,
            mu_hat=np.zeros(0, complex),
            nu_hat=np.zeros(0, complex),
            h_of_mu=np.zeros(0, complex),
            cauchy=None,
            in_k=np.zeros(0, bool),
            in_k_margin=in_k_margin,
        )
    mu_hat = np.atleast_1d(np.asarray(mu.fourier(pts), dtype=complex))
    nu_hat = np.atleast_1d(np.asarray(nu.fourier(pts), dtype=complex))
    depth = np.asarray(K.interior_depth(mu_hat), dtype=float)
    in_k = depth > in_k_margin
    h_vals = np.full(m, np.nan + 1j * np.nan)
    inside = np.asarray(K.dist2(mu_hat)) == 0.0
    if np.any(inside):
        h_vals[inside] = np.atleast_1d(np.asarray(h.eval(mu_hat[inside]), dtype=complex))
    cauchy = None
    if H is not None and quad_n:
        if center_eval is None:
            center_eval = lambda y: mu.fourier(y)  # noqa: E731
        cauchy = np.atleast_1d(
            np.asarray(cauchy_polydisk_value(pts, H, center_eval, mu, quad_n), dtype=complex)
        )
    return ResidualStats(
        y=pts,
        mu_hat=mu_hat,
        nu_hat=nu_hat,
        h_of_mu=h_vals,
        cauchy=cauchy,
        in_k=in_k,
        in_k_margin=in_k_margin,
    )


def emit_plot_data(stats: ResidualStats) -> str:
    """Plot-ready CSV: y coordinates, |mu^|, |nu^ - h(mu^)|, in_K flag."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = stats.y.shape[1] if stats.y.ndim == 2 else 1
    writer.writerow([f"y{i}" for i in range(d)] + ["abs_mu_hat", "abs_residual", "in_k"])
    res = stats.residual
    for i in range(len(stats.mu_hat)):
        row = [f"{v:.17g}" for v in np.atleast_1d(stats.y[i])]
        row.append(f"{abs(stats.mu_hat[i]):.17g}")
        row.append("" if np.isnan(res[i]) else f"{res[i]:.17g}")
        row.append(int(stats.in_k[i]))
        writer.writerow(row)
    return buf.getvalue()
