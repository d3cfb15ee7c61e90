"""Torus coefficient machinery.

Samples the periodic function built from the smoothed extension H and the
truncated atomic part s on a product grid, extracts theta-Fourier coefficients
by multidimensional FFT, then (p, q) coefficients by FFT over the two tau
variables. Coefficient decay is audited against the k^-2 product envelope.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .analytic import SmoothedExtension
from .errors import ConfigurationError, ValidationError
from .measures import PointMeasure

# Per-dimension full sum of the decay envelope: 1 + 2*sum_{k>=1} min(1, k^-2).
ENVELOPE_ROW_SUM = 1.0 + 2.0 * (np.pi**2 / 6.0)

_CHUNK_ELEMS = 1 << 22


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    """Sampling and truncation controls for the torus pipeline."""

    n_theta: int
    m_theta: int
    m_tau: int
    k_max: int
    p_max: int
    memory_budget: int = 1 << 26  # complex elements for the sample tensor

    def __post_init__(self):
        if self.n_theta < 0:
            raise ValidationError("number of theta dimensions must be >= 0")
        if not (_is_pow2(self.m_theta) and _is_pow2(self.m_tau)):
            raise ValidationError("grid sizes must be powers of two")
        if self.n_theta > 0 and self.m_theta <= 2 * self.k_max:
            raise ValidationError("need m_theta > 2*k_max for coefficient extraction")
        if self.m_tau <= 2 * self.p_max:
            raise ValidationError("need m_tau > 2*p_max for coefficient extraction")
        if self.tensor_elements() > self.memory_budget:
            raise ConfigurationError(
                f"sample tensor needs {self.tensor_elements()} complex elements "
                f"(m_theta^{self.n_theta} * m_tau^2), over the budget {self.memory_budget}"
            )

    def tensor_elements(self) -> int:
        return self.m_theta**self.n_theta * self.m_tau**2

    def k_range(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    def k_vectors(self) -> np.ndarray:
        """All retained integer vectors, shape ((2k+1)^N, N)."""
        if self.n_theta == 0:
            return np.zeros((1, 0), dtype=np.int64)
        axes = [self.k_range()] * self.n_theta
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.n_theta).astype(np.int64)


def split_torus_atoms(s: PointMeasure):
    """Split s into the origin coefficient and the atoms carrying a phase.

    Atoms at the lattice origin contribute a constant offset to the torus trig
    polynomial and need no theta dimension.
    """
    offset = 0j
    keys, coeffs = [], []
    for k, c in sorted(s.atoms.items()):
        if all(v == 0 for v in k):
            offset += c
        else:
            keys.append(k)
            coeffs.append(c)
    kmat = (
        np.array(keys, dtype=np.int64).reshape(-1, s.basis.size)
        if keys
        else np.zeros((0, s.basis.size), dtype=np.int64)
    )
    return offset, kmat, np.array(coeffs, dtype=complex)


def sample_torus_function(s: PointMeasure, H: SmoothedExtension, grid: TorusGrid) -> np.ndarray:
    """Sample T(Theta, tau) = H(zeta1, zeta2) on the product grid.

    With w(Theta) = a0 + sum a_n exp(2 pi i theta_n) over the nonzero-location
    atoms of s, the C^2 evaluation point is
        zeta1 = Re w + 3 eps exp(2 pi i tau1),
        zeta2 = Im w + 3 eps exp(2 pi i tau2);
    substituting theta_n = -<rho_n, y> recovers H at (Re s^(y)+..., Im s^(y)+...).
    """
    offset, kmat, coeffs = split_torus_atoms(s)
    n = len(coeffs)
    if n != grid.n_theta:
        raise ValidationError(
            f"grid has {grid.n_theta} theta dimensions but s carries {n} phased atoms"
        )
    theta = np.arange(grid.m_theta) / grid.m_theta
    phase = np.exp(2j * np.pi * theta)
    w = np.full((grid.m_theta,) * n, offset, dtype=complex)
    for j in range(n):
        shape = [1] * n
        shape[j] = grid.m_theta
        w = w + coeffs[j] * phase.reshape(shape)

    eps = H.eps
    tau = np.arange(grid.m_tau) / grid.m_tau
    e = 3.0 * eps * np.exp(2j * np.pi * tau)

    out = np.empty(w.shape + (grid.m_tau, grid.m_tau), dtype=complex)
    c1 = w.real[..., None]
    c2 = w.imag[..., None]
    # Chunk over tau1 to bound the evaluation workspace.
    block = max(1, _CHUNK_ELEMS // max(w.size * grid.m_tau, 1))
    for i0 in range(0, grid.m_tau, block):
        i1 = min(i0 + block, grid.m_tau)
        z1 = c1[..., None] + e[None, i0:i1, None]
        z2 = c2[..., None] + e[None, None, :]
        out[..., i0:i1, :] = H.eval(z1, z2)
    return out


@dataclass(frozen=True)
class ThetaCoefficients:
    """Theta-Fourier coefficients b_k(tau) for the retained k box."""

    grid: TorusGrid
    k_vectors: np.ndarray  # (n_k, N)
    values: np.ndarray  # (n_k, m_tau, m_tau)
    b_norm_bound: float  # max over tau of sum_k |b_k|, over the retained box
    full_norm_bound: float  # same, over every computed k
    edge_mass: float  # max over tau of the |k| > 0.4*m_theta band mass

    def sup_by_k(self) -> np.ndarray:
        return np.abs(self.values).max(axis=(1, 2))


def theta_coefficients(samples: np.ndarray, grid: TorusGrid) -> ThetaCoefficients:
    """DFT-normalized theta coefficients of the sampled torus function."""
    n = grid.n_theta
    axes = tuple(range(n))
    if n:
        full = np.fft.fftn(samples, axes=axes) / (grid.m_theta**n)
    else:
        full = samples.copy()
    mags = np.abs(full)
    sums = mags.sum(axis=axes) if n else mags
    full_norm = float(sums.max()) if n else float(mags.reshape(-1, *mags.shape[-2:]).sum(axis=0).max())

    # Mass in the outer spectral band, an aliasing proxy.
    if n:
        inner = mags
        half = grid.m_theta // 2
        edge_lo = int(np.ceil(0.4 * grid.m_theta))
        for ax in range(n):
            idx = np.r_[0:edge_lo, grid.m_theta - edge_lo + 1 : grid.m_theta]
            idx = idx[(idx >= 0) & (idx < grid.m_theta)]
            inner = np.take(inner, idx, axis=ax)
        edge = float((sums - inner.sum(axis=tuple(range(n)))).max())
    else:
        edge = 0.0

    take = np.r_[grid.m_theta - grid.k_max : grid.m_theta, 0 : grid.k_max + 1] if n else None
    cropped = full
    for ax in range(n):
        cropped = np.take(cropped, take, axis=ax)
    n_k = (2 * grid.k_max + 1) ** n if n else 1
    values = cropped.reshape(n_k, grid.m_tau, grid.m_tau)
    b_norm = float(np.abs(values).sum(axis=0).max())
    return ThetaCoefficients(grid, grid.k_vectors(), values, b_norm, full_norm, edge)


@dataclass(frozen=True)
class TorusCoefficients:
    """(k, p, q) coefficients of the torus function.

    coeff[i, p, q] is the coefficient of exp(2 pi i (<k_i, Theta> + p tau1 + q tau2)),
    retained for |k_j| <= k_max and 0 <= p, q <= p_max.
    """

    grid: TorusGrid
    k_vectors: np.ndarray  # (n_k, N)
    coeff: np.ndarray  # (n_k, p_max+1, p_max+1)
    b_norm_bound: float
    sup_b_by_k: np.ndarray  # (n_k,) sup over tau of |b_k|
    term_norm_cap: float  # sum_k sup_tau |b_k|, bounds every ||nu_pq||
    dropped_k_mass: np.ndarray  # (p_max+1, p_max+1) mass of |k| > k_max modes
    negative_pq_mass: float  # mass of computed coefficients outside p,q >= 0 box
    alias_estimate: float

    def summary(self) -> dict:
        return {
            "n_theta": int(self.grid.n_theta),
            "m_theta": int(self.grid.m_theta),
            "m_tau": int(self.grid.m_tau),
            "k_max": int(self.grid.k_max),
            "p_max": int(self.grid.p_max),
            "b_norm_bound": self.b_norm_bound,
            "term_norm_cap": self.term_norm_cap,
            "dropped_k_mass_max": float(self.dropped_k_mass.max()),
            "negative_pq_mass": self.negative_pq_mass,
            "alias_estimate": self.alias_estimate,
        }


def tau_coefficients(theta: ThetaCoefficients, samples: Optional[np.ndarray] = None) -> TorusCoefficients:
    """(p, q) Fourier coefficients over the tau grid of each b_k.

    Only p, q >= 0 up to p_max are retained; mass outside that box is logged.
    ``samples`` (the raw tensor) is needed to account for the mass dropped at
    the theta-cropping stage; without it the dropped-k ledger is zero.
    """
    grid = theta.grid
    P = grid.p_max
    c_kept = np.fft.fft2(theta.values, axes=(1, 2)) / (grid.m_tau**2)
    coeff = c_kept[:, : P + 1, : P + 1].copy()
    neg_mass = float(np.abs(c_kept).sum() - np.abs(c_kept[:, : P + 1, : P + 1]).sum())

    dropped = np.zeros((P + 1, P + 1))
    if samples is not None and grid.n_theta > 0:
        n = grid.n_theta
        full = np.fft.fftn(samples, axes=tuple(range(n))) / (grid.m_theta**n)
        full = np.fft.fft2(full, axes=(n, n + 1)) / (grid.m_tau**2)
        total_abs = np.abs(full).sum(axis=tuple(range(n)))[: P + 1, : P + 1]
        kept_abs = np.abs(c_kept[:, : P + 1, : P + 1]).sum(axis=0)
        dropped = np.maximum(total_abs - kept_abs, 0.0)

    sup_b = theta.sup_by_k()
    return TorusCoefficients(
        grid=grid,
        k_vectors=theta.k_vectors,
        coeff=coeff,
        b_norm_bound=theta.b_norm_bound,
        sup_b_by_k=sup_b,
        term_norm_cap=float(sup_b.sum()),
        dropped_k_mass=dropped,
        negative_pq_mass=neg_mass,
        alias_estimate=theta.edge_mass,
    )


def decay_envelope(k_vectors: np.ndarray) -> np.ndarray:
    """prod_j min(1, k_j^-2) for each retained integer vector."""
    if k_vectors.shape[1] == 0:
        return np.ones(len(k_vectors))
    k = np.abs(k_vectors).astype(float)
    factors = np.where(k > 1, 1.0 / np.maximum(k, 1.0) ** 2, 1.0)
    return factors.prod(axis=1)


@dataclass(frozen=True)
class DecayReport:
    c_hat: float  # max |b_k(tau)| / envelope over all retained (k, tau)
    c_hat_small: float  # same, restricted to |k_j| <= 2 (the calibration box)
    tail_bound: float  # c_hat * closed-form envelope mass beyond the k box
    k_max: int
    n_theta: int
    max_violation: float  # max |b_k|/ (c_hat_small * envelope); decay holds if <= ~1

    def to_dict(self) -> dict:
        return {
            "c_hat": self.c_hat,
            "c_hat_small": self.c_hat_small,
            "tail_bound": self.tail_bound,
            "k_max": self.k_max,
            "n_theta": self.n_theta,
            "max_violation": self.max_violation,
        }


def envelope_tail(k_max: int, n_theta: int) -> float:
    """Closed-form bound on the envelope mass beyond the |k_j| <= k_max box.

    Uses sum_{k > K} k^-2 <= 1/K per axis and a union bound over axes.
    """
    if n_theta == 0 or k_max < 1:
        return 0.0
    return n_theta * (2.0 / k_max) * ENVELOPE_ROW_SUM ** (n_theta - 1)


def decay_check(theta: ThetaCoefficients) -> DecayReport:
    env = decay_envelope(theta.k_vectors)
    sup_b = theta.sup_by_k()
    ratios = sup_b / env
    c_hat = float(ratios.max()) if len(ratios) else 0.0
    small = np.all(np.abs(theta.k_vectors) <= 2, axis=1)
    c_small = float(ratios[small].max()) if np.any(small) else c_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        viol = float(np.max(sup_b / (c_small * env))) if c_small > 0 else 0.0
    return DecayReport(
        c_hat=c_hat,
        c_hat_small=c_small,
        tail_bound=c_hat * envelope_tail(theta.grid.k_max, theta.grid.n_theta),
        k_max=theta.grid.k_max,
        n_theta=theta.grid.n_theta,
        max_violation=viol,
    )


def neumann_weight_tail(r1: float, r2: float, p_max: int) -> float:
    """sum over p+q > p_max of r1^p r2^q, exactly (requires r1, r2 < 1)."""
    if r1 == 0.0 and r2 == 0.0:
        return 0.0
    if not (0 <= r1 < 1 and 0 <= r2 < 1):
        raise ValidationError("geometric tail requires contraction ratios below 1")
    total = 1.0 / ((1.0 - r1) * (1.0 - r2))
    part = 0.0
    for m in range(p_max + 1):
        part += sum(r1**p * r2 ** (m - p) for p in range(m + 1))
    return max(total - part, 0.0)


def select_truncation(
    n_theta: int,
    decay: DecayReport,
    coeff_budget: float,
    m_theta: int = 64,
    m_tau: int = 64,
    norm_cap: float = 1.0,
    memory_budget: int = 1 << 26,
) -> TorusGrid:
    """Smallest (k_max, p_max) meeting the envelope tail and Neumann tail budgets.

    Grid sizes only ever grow from the supplied defaults. Raises a configuration
    error naming the required sizes when the memory budget cannot hold them.
    """
    if not coeff_budget > 0:
        raise ValidationError("coefficient tail budget must be positive")
    k_max = 1
    if n_theta > 0 and decay.c_hat > 0:
        while decay.c_hat * envelope_tail(k_max, n_theta) >= coeff_budget:
            k_max += 1
            if k_max > 1 << 26:
                raise ConfigurationError("no feasible k_max meets the coefficient budget")
    p_max = 1
    while norm_cap * neumann_weight_tail(2.0 / 3.0, 2.0 / 3.0, p_max) >= coeff_budget:
        p_max += 1
        if p_max > 4096:
            raise ConfigurationError("no feasible p_max meets the Neumann tail budget")

    mt = m_theta
    while mt <= 2 * k_max:
        mt *= 2
    mtau = m_tau
    while mtau <= 2 * p_max:
        mtau *= 2
    need = mt**n_theta * mtau**2
    if need > memory_budget:
        raise ConfigurationError(
            f"required grid m_theta={mt}, m_tau={mtau} (k_max={k_max}, p_max={p_max}) "
            f"needs {need} complex elements, over the budget {memory_budget}"
        )
    return TorusGrid(n_theta, mt, mtau, k_max, p_max, memory_budget)
