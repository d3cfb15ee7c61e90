"""Assembly of the output measure.

Given a mixed measure mu, a real-analytic h near a compact plane set K, and
grid/tolerance parameters, the pipeline truncates mu to a band-limited density
v plus a finite atomic part s, splits the residual into contraction measures,
extracts torus and density coefficients of the smoothed extension H, and sums
the Neumann series of convolution powers. The result nu satisfies
nu^(y) ~= h(mu^(y)) wherever mu^(y) lies in K, within the reported budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from . import oracle
from .analytic import (
    Annulus,
    CompactSet,
    Disc,
    Piecewise,
    SmoothedExtension,
    UnionSet,
    choose_epsilon,
    make_function,
    smooth_step,
)
from .errors import ConfigurationError, ValidationError
from .measures import (
    FrequencyBasis,
    GridDensity,
    MixedMeasure,
    PointMeasure,
    _next_pow2,
    density_from_spectrum,
    grid_spectrum,
    residual_split,
    truncate_atoms,
)
from .torus import (
    TorusGrid,
    decay_check,
    neumann_weight_tail,
    sample_torus_function,
    split_torus_atoms,
    tau_coefficients,
    theta_coefficients,
)

CONTRACTION_LIMIT = 2.0 / 3.0


@dataclass
class SynthesisParams:
    """Tolerances and grid controls for the synthesis pipeline."""

    eps: Optional[float] = None  # margin; computed from domain_margin when None
    domain_margin: Optional[float] = None
    atom_budget: Optional[float] = None  # defaults to eps
    lowpass_budget: Optional[float] = None  # defaults to eps
    p_max: int = 8
    k_max: int = 16
    m_theta: int = 64
    m_tau: int = 64
    neumann_tol: float = 1e-8
    coeff_tol: float = 1e-8
    prune_threshold: float = 1e-15
    y_samples: int = 2048
    y_span: Optional[float] = None
    in_k_margin: Optional[float] = None  # defaults to 2*eps
    max_torus_atoms: int = 6
    memory_budget: int = 1 << 26
    pad_factor: int = 4
    adapt: bool = True
    verify_quad_n: int = 64  # 0 skips the polydisk-integral column
    seed: int = 0

    def __post_init__(self):
        for name in ("eps", "atom_budget", "lowpass_budget"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValidationError(f"{name} must be positive")
        if self.p_max < 0 or self.k_max < 1:
            raise ValidationError("p_max must be >= 0 and k_max >= 1")
        if self.y_samples < 1 or self.pad_factor < 1:
            raise ValidationError("y_samples and pad_factor must be >= 1")
        if not 0 <= self.prune_threshold < 1e-6:
            raise ValidationError("prune_threshold must lie in [0, 1e-6)")


@dataclass
class PipelineIntermediates:
    """Everything the verification oracle needs from a synthesis run."""

    v: Optional[GridDensity]
    s: PointMeasure
    lam_real: MixedMeasure
    lam_imag: MixedMeasure
    extension: SmoothedExtension
    center_eval: Callable  # y -> (v + s)^(y), complex
    coefficients: object  # TorusCoefficients
    point_terms: Dict[Tuple[int, int], PointMeasure]
    density_terms: Dict[Tuple[int, int], GridDensity]


@dataclass
class SynthesisReport:
    """Per-stage error accounting plus verification aggregates."""

    eps: float = 0.0
    n_torus: int = 0
    contraction_real: float = 0.0
    contraction_imag: float = 0.0
    atom_tail: float = 0.0
    lowpass_l1: float = 0.0
    lowpass_bandwidth: float = 0.0
    coeff_discarded: float = 0.0
    coeff_alias: float = 0.0
    negative_pq_mass: float = 0.0
    decay_constant: float = 0.0
    decay_tail_bound: float = 0.0
    neumann_tail: float = 0.0
    prune_loss: float = 0.0
    grid_error: float = 0.0
    total_budget: float = 0.0
    total_variation: float = 0.0
    sup_residual_in_k: float = 0.0
    mean_residual_in_k: float = 0.0
    in_k_count: int = 0
    y_count: int = 0
    term_norms: dict = field(default_factory=dict)
    term_bounds: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    intermediates: Optional[PipelineIntermediates] = field(default=None, repr=False, compare=False)
    stats: object = field(default=None, repr=False, compare=False)

    def budget_components(self) -> dict:
        return {
            "coeff_discarded": self.coeff_discarded,
            "coeff_alias": self.coeff_alias,
            "neumann_tail": self.neumann_tail,
            "prune_loss": self.prune_loss,
            "grid_error": self.grid_error,
        }

    def finalize_budget(self):
        self.total_budget = float(sum(self.budget_components().values()))

    def to_dict(self) -> dict:
        out = {
            "eps": self.eps,
            "n_torus": self.n_torus,
            "contraction_real": self.contraction_real,
            "contraction_imag": self.contraction_imag,
            "atom_tail": self.atom_tail,
            "lowpass_l1": self.lowpass_l1,
            "lowpass_bandwidth": self.lowpass_bandwidth,
            "coeff_discarded": self.coeff_discarded,
            "coeff_alias": self.coeff_alias,
            "negative_pq_mass": self.negative_pq_mass,
            "decay_constant": self.decay_constant,
            "decay_tail_bound": self.decay_tail_bound,
            "neumann_tail": self.neumann_tail,
            "prune_loss": self.prune_loss,
            "grid_error": self.grid_error,
            "total_budget": self.total_budget,
            "total_variation": self.total_variation,
            "sup_residual_in_k": self.sup_residual_in_k,
            "mean_residual_in_k": self.mean_residual_in_k,
            "in_k_count": self.in_k_count,
            "y_count": self.y_count,
            "notes": list(self.notes),
        }
        out["term_norms"] = {f"{p},{q}": v for (p, q), v in sorted(self.term_norms.items())}
        out["term_bounds"] = {f"{p},{q}": v for (p, q), v in sorted(self.term_bounds.items())}
        return out


# --- band limiting -------------------------------------------------------------


def pad_density(d: GridDensity, n: int) -> GridDensity:
    if n < d.size:
        raise ValidationError("cannot pad a density to fewer samples")
    out = np.zeros(n, dtype=complex)
    out[: d.size] = d.samples
    return GridDensity(d.x0, d.dx, out)


def _radial_cutoff(y: np.ndarray, inner: float) -> np.ndarray:
    # 1 on [0, inner], 0 beyond 2*inner, smooth between.
    t = 7.0 + 2.0 * (np.abs(y) - inner) / inner
    return smooth_step(t)


def lowpass_approximate(
    f: GridDensity, budget: float, n_pad: Optional[int] = None
) -> tuple[GridDensity, float]:
    """Band-limited L1 approximation of f by spectral cutoff.

    Returns (v, bandwidth) where v's spectrum vanishes exactly beyond the
    returned bandwidth on the grid and the grid-L1 distance ||f - v|| is below
    the budget. The returned density lives on the zero-padded grid.
    """
    if not budget > 0:
        raise ValidationError("lowpass budget must be positive")
    n_pad = _next_pow2(4 * f.size) if n_pad is None else int(n_pad)
    fp = pad_density(f, n_pad)
    y, fhat = grid_spectrum(fp)
    top = float(np.abs(fhat).max())
    if top == 0.0:
        return fp, 0.0
    nyquist = 0.5 / f.dx
    dy = 1.0 / (n_pad * f.dx)
    supp = np.abs(y)[np.abs(fhat) > 1e-15 * top]
    w = float(supp.max()) if supp.size else 0.0

    candidates = []
    if w > 0 and 2.0 * w < nyquist:
        candidates.append(w)  # plateau covers the measured support: v = f exactly
    else:
        r = 4.0 * dy
        while 2.0 * r <= nyquist:
            candidates.append(r)
            r *= 2.0

    floor = math.inf
    for r in candidates:
        v = density_from_spectrum(fhat * _radial_cutoff(y, r), fp.x0, fp.dx)
        err = float(f.dx * np.abs(fp.samples - v.samples).sum())
        if err < budget:
            return v, 2.0 * r
        floor = min(floor, err)
    raise ValidationError(
        f"lowpass budget {budget:g} is unattainable at this grid resolution; "
        f"best achieved L1 distance is {floor:g}"
    )


def l1_bound_check(v: GridDensity, support_radius: float) -> dict:
    """Explicit L1 bound for a band-limited density (dimension 1, order l=2).

    Checks ||v||_1 <= 2r * (||v^||_inf + (2 pi)^-2 ||v^''||_inf) * pi and
    raises if the inequality fails beyond 1e-6 relative slack.
    """
    y, vhat = grid_spectrum(v)
    dy = 1.0 / (v.size * v.dx)
    outside = float(dy * np.abs(vhat)[np.abs(y) > support_radius].sum())
    if outside > 1e-12:
        raise ValidationError(
            f"spectrum carries mass {outside:g} outside the stated support radius {support_radius:g}"
        )
    lhs = v.l1_norm()
    x = v.grid()
    second = GridDensity(v.x0, v.dx, v.samples * (-4.0 * np.pi**2) * x**2)
    _, v2hat = grid_spectrum(second)
    vhat_inf = float(np.abs(vhat).max())
    vpp_inf = float(np.abs(v2hat).max())
    rhs = 2.0 * support_radius * (vhat_inf + vpp_inf / (4.0 * np.pi**2)) * np.pi
    if lhs > rhs * (1.0 + 1e-6):
        raise ValidationError(f"L1 bound violated: lhs={lhs:g} > rhs={rhs:g}")
    return {"lhs": lhs, "rhs": rhs, "ratio": (lhs / rhs) if rhs > 0 else 0.0}


# --- verification sampling -------------------------------------------------------

_QR_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19)


def _float_gcd(values, rel_tol: float = 1e-9) -> Optional[float]:
    vals = sorted(abs(float(v)) for v in values if v != 0)
    if not vals:
        return None
    tol = rel_tol * vals[-1]
    g = vals[0]
    for v in vals[1:]:
        a, b = v, g
        while b > tol:
            a, b = b, a % b
        g = a
    if g <= tol:
        return None
    if any(abs(v / g - round(v / g)) > 1e-6 for v in vals):
        return None
    return g


def default_span(basis: FrequencyBasis) -> np.ndarray:
    """Per-dimension sampling span: one period of the frequency lattice when
    the coordinates are commensurable, otherwise a few reciprocal lengths."""
    spans = np.ones(basis.dim)
    if basis.size == 0:
        return spans
    gm = basis.gamma_matrix
    for d in range(basis.dim):
        coords = [abs(v) for v in gm[:, d] if v != 0]
        if not coords:
            continue
        g = _float_gcd(coords)
        span = (1.0 / g) if g else 8.0 / min(coords)
        spans[d] = float(np.clip(span, 1e-6, 1e6))
    return spans


def verification_points(
    basis: FrequencyBasis, count: int, span=None, seed: int = 0
) -> np.ndarray:
    """Seeded Kronecker quasi-random points in the fundamental box."""
    d = basis.dim
    spans = np.broadcast_to(
        default_span(basis) if span is None else np.asarray(span, dtype=float), (d,)
    )
    alphas = np.array([math.sqrt(p) % 1.0 for p in _QR_PRIMES[:d]])
    offsets = np.random.default_rng(seed).random(d)
    i = np.arange(1, count + 1)[:, None]
    u = (i * alphas[None, :] + offsets[None, :]) % 1.0
    return u * spans[None, :]


# --- Neumann assembly -------------------------------------------------------------


def neumann_assemble(
    terms: Mapping[Tuple[int, int], MixedMeasure],
    lam_real: MixedMeasure,
    lam_imag: MixedMeasure,
    eps: float,
    p_max: int,
    term_cap: float,
    prune_threshold: float = 1e-15,
) -> tuple[MixedMeasure, float, dict, dict]:
    """Sum terms (lam_R/3eps)^*p * (lam_I/3eps)^*q * terms[p,q] over p+q <= p_max.

    Returns (measure, tail bound, measured term norms, term norm bounds). The
    tail bound is the exact weight tail sum_{p+q>p_max} r_R^p r_I^q times the
    supplied cap on ||terms[p,q]||.
    """
    r_r = lam_real.total_variation() / (3.0 * eps)
    r_i = lam_imag.total_variation() / (3.0 * eps)
    if r_r >= 1.0 or r_i >= 1.0:
        raise ConfigurationError(
            f"contraction violated: residual ratios ({r_r:.3g}, {r_i:.3g}) must be < 1"
        )
    scaled_r = lam_real.scaled(1.0 / (3.0 * eps))
    scaled_i = lam_imag.scaled(1.0 / (3.0 * eps))
    basis = lam_real.basis
    delta = MixedMeasure(PointMeasure.delta(basis))
    pow_r = [delta]
    pow_i = [delta]
    for _ in range(p_max):
        pow_r.append(pow_r[-1].convolved(scaled_r, prune_threshold))
        pow_i.append(pow_i[-1].convolved(scaled_i, prune_threshold))

    out = None
    norms: dict = {}
    bounds: dict = {}
    for m in range(p_max + 1):
        for p in range(m + 1):
            q = m - p
            base = terms.get((p, q))
            if base is None:
                continue
            term = pow_r[p].convolved(pow_i[q], prune_threshold).convolved(base, prune_threshold)
            norms[(p, q)] = term.total_variation()
            bounds[(p, q)] = (r_r**p) * (r_i**q) * base.total_variation()
            out = term if out is None else out.plus(term)
    if out is None:
        out = MixedMeasure(PointMeasure.zero(basis))
    tail = neumann_weight_tail(r_r, r_i, p_max) * term_cap
    return out, tail, norms, bounds


# --- pipeline ---------------------------------------------------------------------


def _resolve_eps(h, K: CompactSet, params: SynthesisParams) -> float:
    if params.eps is not None:
        return float(params.eps)
    margin = params.domain_margin if params.domain_margin is not None else h.domain_margin(K)
    if margin is None:
        raise ValidationError(
            f"function {h.name!r} declares no domain margin; set params.eps or params.domain_margin"
        )
    return choose_epsilon(K, margin)


def _cap_torus_atoms(
    mu_point: PointMeasure, s: PointMeasure, cap: int
) -> tuple[PointMeasure, float]:
    offset, kmat, coeffs = split_torus_atoms(s)
    if len(coeffs) <= cap:
        return s, -1.0
    phased = sorted(
        ((k, c) for k, c in s.atoms.items() if any(v != 0 for v in k)),
        key=lambda kv: (-abs(kv[1]), kv[0]),
    )
    kept = dict(phased[:cap])
    for k, c in s.atoms.items():
        if all(v == 0 for v in k):
            kept[k] = c
    s2 = PointMeasure(s.basis, kept)
    tail = mu_point.plus(s2.scaled(-1)).total_variation()
    return s2, tail


def _torus_coefficients(s: PointMeasure, H: SmoothedExtension, params: SynthesisParams):
    n_theta = split_torus_atoms(s)[1].shape[0]
    k_max = params.k_max if n_theta else 1
    m_theta = params.m_theta
    while m_theta <= 2 * k_max:
        m_theta *= 2
    grid = TorusGrid(n_theta, m_theta, params.m_tau, k_max, params.p_max, params.memory_budget)
    samples = sample_torus_function(s, H, grid)
    theta = theta_coefficients(samples, grid)
    co = tau_coefficients(theta, samples)
    if (
        params.adapt
        and n_theta > 0
        and co.dropped_k_mass.max() + co.alias_estimate > params.coeff_tol
    ):
        try:
            grid2 = TorusGrid(
                n_theta,
                2 * grid.m_theta,
                grid.m_tau,
                2 * grid.k_max,
                grid.p_max,
                params.memory_budget,
            )
        except ConfigurationError:
            grid2 = None
        if grid2 is not None:
            samples = sample_torus_function(s, H, grid2)
            theta = theta_coefficients(samples, grid2)
            co = tau_coefficients(theta, samples)
    return theta, co


def _point_terms(
    co, basis: FrequencyBasis, s: PointMeasure, prune_threshold: float
) -> tuple[Dict[Tuple[int, int], PointMeasure], float]:
    """Measures sum_k c_k(p,q) delta_{rho_k} on the atom lattice of s."""
    _, kmat, _ = split_torus_atoms(s)
    mapped = co.k_vectors @ kmat if kmat.size else np.zeros((len(co.k_vectors), basis.size), dtype=np.int64)
    if co.k_vectors.shape[1] == 0:
        mapped = np.zeros((1, basis.size), dtype=np.int64)
    out: Dict[Tuple[int, int], PointMeasure] = {}
    lost = 0.0
    P = co.grid.p_max
    for p in range(P + 1):
        for q in range(P + 1):
            pm = PointMeasure.from_atoms(
                basis, ((tuple(int(v) for v in mapped[i]), co.coeff[i, p, q]) for i in range(len(mapped)))
            )
            pm, dropped = pm.pruned(prune_threshold * max(pm.total_variation(), 1.0))
            lost = max(lost, dropped)
            out[(p, q)] = pm
    return out, lost


def _density_terms(
    v: GridDensity,
    s: PointMeasure,
    H: SmoothedExtension,
    m_tau: int,
    p_max: int,
) -> tuple[Dict[Tuple[int, int], GridDensity], float, float, float]:
    """Inverse transforms of the (p,q) tau-coefficients of
    A(y, tau) = H((v+s)^(y) + E(tau)) - H(s^(y) + E(tau)).

    Returns (terms, cap on ||u_tau||_1, negative-(p,q) mass, window edge mass).
    """
    eps = H.eps
    y, vhat = grid_spectrum(v)
    shat = s.fourier(y.reshape(-1, 1))
    c_full = vhat + shat
    c_bare = shat * np.ones_like(vhat)
    tau = np.arange(m_tau) / m_tau
    e = 3.0 * eps * np.exp(2j * np.pi * tau)

    n_y = len(y)
    A = np.empty((n_y, m_tau, m_tau), dtype=complex)
    block = max(1, (1 << 22) // (m_tau * m_tau))
    for i0 in range(0, n_y, block):
        i1 = min(i0 + block, n_y)
        z1f = c_full.real[i0:i1, None, None] + e[None, :, None]
        z2f = c_full.imag[i0:i1, None, None] + e[None, None, :]
        z1b = c_bare.real[i0:i1, None, None] + e[None, :, None]
        z2b = c_bare.imag[i0:i1, None, None] + e[None, None, :]
        A[i0:i1] = H.eval(z1f, z2f) - H.eval(z1b, z2b)

    u = np.fft.ifft(A * np.exp(2j * np.pi * v.x0 * y)[:, None, None], axis=0) / v.dx
    u_cap = float((v.dx * np.abs(u).sum(axis=0)).max())

    ahat = np.fft.fft2(A, axes=(1, 2)) / (m_tau**2)
    per_y_outside = np.abs(ahat).sum(axis=(1, 2)) - np.abs(
        ahat[:, : p_max + 1, : p_max + 1]
    ).sum(axis=(1, 2))
    neg_mass = float(per_y_outside.max(initial=0.0))
    terms: Dict[Tuple[int, int], GridDensity] = {}
    edge = 0.0
    n_edge = max(n_y // 10, 1)
    for p in range(p_max + 1):
        for q in range(p_max + 1):
            kap = density_from_spectrum(ahat[:, p, q], v.x0, v.dx)
            terms[(p, q)] = kap
            mags = np.abs(kap.samples)
            edge = max(edge, float(v.dx * (mags[:n_edge].sum() + mags[-n_edge:].sum())))
    return terms, u_cap, max(neg_mass, 0.0), edge


def synthesize_mixed(
    mu, h, K: CompactSet, params: Optional[SynthesisParams] = None
) -> tuple[MixedMeasure, SynthesisReport]:
    """Full pipeline for a mixed (pure point + absolutely continuous) measure."""
    params = params or SynthesisParams()
    mu = MixedMeasure.of(mu)
    report = SynthesisReport()

    eps = _resolve_eps(h, K, params)
    report.eps = eps
    H = SmoothedExtension.build(h, K, eps, domain_margin=params.domain_margin)

    atom_budget = params.atom_budget if params.atom_budget is not None else eps
    s, atom_tail = truncate_atoms(mu.point, atom_budget)
    s, capped_tail = _cap_torus_atoms(mu.point, s, params.max_torus_atoms)
    if capped_tail >= 0.0:
        atom_tail = capped_tail
        report.notes.append(f"torus atom cap {params.max_torus_atoms} raised the atom tail to {atom_tail:g}")
    report.atom_tail = atom_tail
    report.n_torus = split_torus_atoms(s)[1].shape[0]

    if mu.density is not None:
        budget_v = params.lowpass_budget if params.lowpass_budget is not None else eps
        n_pad = _next_pow2(params.pad_factor * mu.density.size)
        v, bandwidth = lowpass_approximate(mu.density, budget_v, n_pad)
        mu = MixedMeasure(mu.point, pad_density(mu.density, n_pad))
        report.lowpass_l1 = float(mu.density.dx * np.abs(mu.density.samples - v.samples).sum())
        report.lowpass_bandwidth = bandwidth
    else:
        v = None

    lam_r, lam_i = residual_split(mu, v, s)
    r_r = lam_r.total_variation() / (3.0 * eps)
    r_i = lam_i.total_variation() / (3.0 * eps)
    report.contraction_real = r_r
    report.contraction_imag = r_i
    if r_r > CONTRACTION_LIMIT + 1e-12 or r_i > CONTRACTION_LIMIT + 1e-12:
        raise ConfigurationError(
            f"contraction violated: residual ratios ({r_r:.4g}, {r_i:.4g}) exceed 2/3; "
            f"reduce atom_budget/lowpass_budget to at most {2 * eps:.4g} in total variation "
            f"or increase eps"
        )

    theta, co = _torus_coefficients(s, H, params)
    decay = decay_check(theta)
    report.decay_constant = decay.c_hat
    report.decay_tail_bound = decay.tail_bound
    report.negative_pq_mass = co.negative_pq_mass

    point_terms, point_prune = _point_terms(co, mu.basis, s, params.prune_threshold)

    density_terms: Dict[Tuple[int, int], GridDensity] = {}
    kappa_cap = 0.0
    if v is not None:
        density_terms, kappa_cap, neg_dens, kappa_edge = _density_terms(
            v, s, H, params.m_tau, params.p_max
        )
        report.negative_pq_mass += neg_dens
        report.grid_error += kappa_edge
    term_cap = co.term_norm_cap + kappa_cap

    base: Dict[Tuple[int, int], MixedMeasure] = {}
    for m in range(params.p_max + 1):
        for p in range(m + 1):
            q = m - p
            base[(p, q)] = MixedMeasure(point_terms[(p, q)], density_terms.get((p, q)))

    nu, tail, norms, bounds = neumann_assemble(
        base, lam_r, lam_i, eps, params.p_max, term_cap, params.prune_threshold
    )
    report.neumann_tail = tail
    report.term_norms = norms
    report.term_bounds = bounds

    # r-weighted coefficient losses over the used (p, q) triangle.
    weights = np.array(
        [[(r_r**p) * (r_i**q) if p + q <= params.p_max else 0.0 for q in range(params.p_max + 1)] for p in range(params.p_max + 1)]
    )
    report.coeff_discarded = float((weights * co.dropped_k_mass).sum())
    report.coeff_alias = co.alias_estimate * float(weights.sum())
    report.prune_loss = point_prune * float(weights.sum()) + 3.0 * params.prune_threshold * (
        params.p_max + 1
    ) ** 2 * max(nu.total_variation(), 1.0)
    report.total_variation = nu.total_variation()
    report.finalize_budget()

    center_eval = _make_center_eval(v, s)
    report.intermediates = PipelineIntermediates(
        v=v,
        s=s,
        lam_real=lam_r,
        lam_imag=lam_i,
        extension=H,
        center_eval=center_eval,
        coefficients=co,
        point_terms=point_terms,
        density_terms=density_terms,
    )

    y_set = _verification_set(mu, v, params)
    stats = oracle.residual_report(
        nu,
        mu,
        h,
        K,
        y_set,
        H=H,
        center_eval=center_eval,
        quad_n=params.verify_quad_n,
        in_k_margin=params.in_k_margin if params.in_k_margin is not None else 2.0 * eps,
    )
    report.stats = stats
    report.sup_residual_in_k = stats.sup_in_k
    report.mean_residual_in_k = stats.mean_in_k
    report.in_k_count = stats.in_k_count
    report.y_count = len(y_set)
    return nu, report


def _make_center_eval(v: Optional[GridDensity], s: PointMeasure) -> Callable:
    def center(y):
        vals = s.fourier(y)
        if v is not None:
            vals = vals + v.fourier(y)
        return vals

    return center


def _verification_set(mu: MixedMeasure, v: Optional[GridDensity], params: SynthesisParams) -> np.ndarray:
    if v is not None:
        _, vhat = grid_spectrum(v)
        y, _ = grid_spectrum(v)
        top = float(np.abs(vhat).max())
        supp = np.abs(y)[np.abs(vhat) > 1e-15 * top] if top > 0 else np.array([])
        w = float(supp.max()) if supp.size else 1.0
        return np.linspace(-1.25 * w, 1.25 * w, params.y_samples).reshape(-1, 1)
    return verification_points(mu.basis, params.y_samples, params.y_span, params.seed)


def synthesize_point(
    mu: PointMeasure, h, K: CompactSet, params: Optional[SynthesisParams] = None
) -> tuple[PointMeasure, SynthesisReport]:
    """Pure-point specialization: the output is a pure point measure."""
    nu, report = synthesize_mixed(MixedMeasure(mu), h, K, params)
    return nu.point, report


def synthesize_density(
    f: GridDensity, h, K: CompactSet, params: Optional[SynthesisParams] = None
) -> tuple[GridDensity, complex, SynthesisReport]:
    """Absolutely continuous specialization.

    Returns (g, h0, report) with g^(y) + h0 ~= h(f^(y)) on the K-set; h0 is the
    mass of the single atom at the origin (h(0) when 0 lies in K, zero when the
    origin polydisk misses K's support neighborhood).
    """
    basis = FrequencyBasis(1, ())
    mu = MixedMeasure(PointMeasure.zero(basis), f)
    nu, report = synthesize_mixed(mu, h, K, params)
    h0 = nu.point.atoms.get((), 0j)
    eps = report.eps
    d0 = float(K.dist2(np.array([0j]))[0])
    if d0 > 6.0 * eps:
        report.notes.append("origin lies beyond 6*eps of K: the atom at 0 vanishes")
    g = nu.density
    if g is None:
        g = GridDensity(f.x0, f.dx, np.zeros(f.size, dtype=complex))
    return g, complex(h0), report


def regularized_inverse(
    mu, eps_inv: float, params: Optional[SynthesisParams] = None
) -> tuple[MixedMeasure, SynthesisReport]:
    """Measure whose transform is 1/mu^ where |mu^| >= eps_inv and 0 where
    |mu^| <= eps_inv/2; the band between is unconstrained."""
    if not eps_inv > 0:
        raise ValidationError("eps_inv must be positive")
    params = params or SynthesisParams()
    mu = MixedMeasure.of(mu)
    outer = mu.total_variation() + eps_inv
    if outer <= eps_inv:
        raise ValidationError("measure too small for a meaningful inverse annulus")
    inner_disc = Disc(0.0, eps_inv / 2.0)
    ring = Annulus(0.0, eps_inv, outer)
    h = Piecewise(
        (
            (inner_disc, make_function("constant", value=0.0)),
            (ring, make_function("reciprocal")),
        )
    )
    K = UnionSet((inner_disc, ring))
    eps = params.eps if params.eps is not None else 0.9 * eps_inv / 40.0
    params = replace(params, eps=eps)
    nu, report = synthesize_mixed(mu, h, K, params)
    report.notes.append(
        f"band {eps_inv / 2.0:g} < |mu_hat| < {eps_inv:g} is unconstrained by construction"
    )
    return nu, report
