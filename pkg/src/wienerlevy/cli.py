"""Batch front end.

Reads a JSON job config describing the measure, the function, the compact set,
and parameter overrides; runs one of the synthesize/verify/invert/lemma-check
commands; writes measures (JSON lines), the synthesis report (JSON), and
residual tables (CSV) to the output directory.

Exit codes: 0 success, 2 validation error, 3 measured residual above the
declared budget, 4 infeasible configuration (memory or contraction).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .analytic import (
    Annulus,
    CompactSet,
    Disc,
    Polygon,
    UnionSet,
    make_function,
)
from .errors import ConfigurationError, ValidationError
from .measures import (
    FrequencyBasis,
    GridDensity,
    MixedMeasure,
    PointMeasure,
    deserialize_measure,
    serialize_measure,
)
from .oracle import emit_plot_data, residual_report
from .synthesis import (
    SynthesisParams,
    l1_bound_check,
    lowpass_approximate,
    regularized_inverse,
    synthesize_mixed,
)
from .torus import decay_check

COMMANDS = ("synthesize", "verify", "invert", "lemma-check")

_PARAM_KEYS = {f.name for f in dataclasses.fields(SynthesisParams)}
_TOP_KEYS = {
    "command",
    "measure",
    "function",
    "compact_set",
    "params",
    "eps_inv",
    "budget",
    "result",
    "seed",
}
_MEASURE_KEYS = {"path", "basis", "atoms", "density"}
_BASIS_KEYS = {"dim", "gammas"}
_ATOM_KEYS = {"k", "re", "im", "freq"}
_DENSITY_KEYS = {"x0", "dx", "samples_re", "samples_im"}
_SET_KEYS = {"kind", "center", "radius", "r_inner", "r_outer", "vertices", "components"}


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ValidationError(f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def _parse_measure(spec, base: Path) -> MixedMeasure:
    if not isinstance(spec, dict):
        raise ValidationError("measure spec must be an object")
    _reject_unknown(spec, _MEASURE_KEYS, "measure")
    if "path" in spec:
        p = base / spec["path"]
        if not p.exists():
            raise ValidationError(f"measure file {p} does not exist")
        return deserialize_measure(p.read_text())
    if "basis" not in spec:
        raise ValidationError("inline measure needs a 'basis' object")
    _reject_unknown(spec["basis"], _BASIS_KEYS, "measure.basis")
    basis = FrequencyBasis(spec["basis"]["dim"], tuple(tuple(g) for g in spec["basis"]["gammas"]))
    atoms = {}
    for rec in spec.get("atoms", ()):
        _reject_unknown(rec, _ATOM_KEYS, "measure.atoms[]")
        key = tuple(int(v) for v in rec["k"])
        if key in atoms:
            raise ValidationError(f"duplicate atom {key}")
        atoms[key] = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
    density = None
    if spec.get("density") is not None:
        rec = spec["density"]
        _reject_unknown(rec, _DENSITY_KEYS, "measure.density")
        re = np.asarray(rec["samples_re"], dtype=float)
        im = np.asarray(rec.get("samples_im", np.zeros_like(re)), dtype=float)
        density = GridDensity(rec["x0"], rec["dx"], re + 1j * im)
    return MixedMeasure(PointMeasure(basis, atoms), density)


def _parse_set(spec) -> CompactSet:
    if not isinstance(spec, dict):
        raise ValidationError("compact set spec must be an object")
    _reject_unknown(spec, _SET_KEYS, "compact_set")
    kind = spec.get("kind")
    if kind == "disc":
        return Disc(complex(*spec.get("center", (0.0, 0.0))), spec["radius"])
    if kind == "annulus":
        return Annulus(complex(*spec.get("center", (0.0, 0.0))), spec["r_inner"], spec["r_outer"])
    if kind == "polygon":
        return Polygon(tuple(complex(*v) for v in spec["vertices"]))
    if kind == "union":
        return UnionSet(tuple(_parse_set(c) for c in spec["components"]))
    raise ValidationError(f"unknown compact set kind {kind!r}; use disc, annulus, polygon, or union")


def _parse_params(spec) -> SynthesisParams:
    if spec is None:
        return SynthesisParams()
    if not isinstance(spec, dict):
        raise ValidationError("params must be an object")
    _reject_unknown(spec, _PARAM_KEYS, "params")
    return SynthesisParams(**spec)


@dataclasses.dataclass
class JobConfig:
    command: str
    measure: MixedMeasure
    function: Optional[object]
    compact_set: Optional[CompactSet]
    params: SynthesisParams
    eps_inv: Optional[float]
    budget: Optional[float]
    result: Optional[MixedMeasure]
    raw: dict


def parse_config(text: str, base: Path = Path(".")) -> JobConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    command = raw.get("command")
    if command not in COMMANDS:
        raise ValidationError(f"command must be one of {COMMANDS}, got {command!r}")
    measure = _parse_measure(raw.get("measure", {}), base)

    fn = None
    if "function" in raw:
        fspec = dict(raw["function"])
        name = fspec.pop("name", None)
        if name is None:
            raise ValidationError("function spec needs a 'name'")
        fn = make_function(name, **fspec)
    K = _parse_set(raw["compact_set"]) if "compact_set" in raw else None
    params = _parse_params(raw.get("params"))
    if "seed" in raw:
        params = dataclasses.replace(params, seed=int(raw["seed"]))

    eps_inv = raw.get("eps_inv")
    if eps_inv is not None and not float(eps_inv) > 0:
        raise ValidationError("eps_inv must be positive")
    budget = raw.get("budget")
    result = None
    if "result" in raw:
        result = _parse_measure(raw["result"], base)

    if command in ("synthesize", "verify") and (fn is None or K is None):
        raise ValidationError(f"{command} needs both 'function' and 'compact_set'")
    if command == "invert" and eps_inv is None:
        raise ValidationError("invert needs 'eps_inv'")
    if command == "verify" and result is None:
        raise ValidationError("verify needs a 'result' measure")
    return JobConfig(command, measure, fn, K, params, eps_inv, budget, result, raw)


def _write_outputs(out: Path, nu, report, stats):
    out.mkdir(parents=True, exist_ok=True)
    (out / "nu.jsonl").write_text(serialize_measure(nu))
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    if stats is not None:
        (out / "residuals.csv").write_text(stats.to_csv())
        (out / "plot.csv").write_text(emit_plot_data(stats))


def run(job: JobConfig, out: Path) -> int:
    try:
        if job.command == "synthesize":
            nu, report = synthesize_mixed(job.measure, job.function, job.compact_set, job.params)
            _write_outputs(out, nu, report, report.stats)
            budget = job.budget if job.budget is not None else report.total_budget
            return 0 if report.sup_residual_in_k <= budget + 1e-12 else 3
        if job.command == "invert":
            nu, report = regularized_inverse(job.measure, float(job.eps_inv), job.params)
            _write_outputs(out, nu, report, report.stats)
            budget = job.budget if job.budget is not None else report.total_budget
            return 0 if report.sup_residual_in_k <= budget + 1e-12 else 3
        if job.command == "verify":
            return _run_verify(job, out)
        return _run_lemma_check(job, out)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return 4


def _run_verify(job: JobConfig, out: Path) -> int:
    from .analytic import SmoothedExtension
    from .synthesis import _resolve_eps, _verification_set

    params = job.params
    eps = _resolve_eps(job.function, job.compact_set, params)
    H = SmoothedExtension.build(job.function, job.compact_set, eps, domain_margin=params.domain_margin)
    mu = job.measure
    y_set = _verification_set(mu, None, params)
    stats = residual_report(
        job.result,
        mu,
        job.function,
        job.compact_set,
        y_set,
        H=H,
        quad_n=params.verify_quad_n,
        in_k_margin=params.in_k_margin if params.in_k_margin is not None else 2.0 * eps,
    )
    out.mkdir(parents=True, exist_ok=True)
    (out / "residuals.csv").write_text(stats.to_csv())
    (out / "plot.csv").write_text(emit_plot_data(stats))
    (out / "verify.json").write_text(json.dumps(stats.aggregate(), indent=2, sort_keys=True) + "\n")
    budget = job.budget if job.budget is not None else 1e-3
    return 0 if stats.sup_in_k <= budget + 1e-12 else 3


def _run_lemma_check(job: JobConfig, out: Path) -> int:
    from .analytic import SmoothedExtension
    from .synthesis import _torus_coefficients
    from .measures import truncate_atoms

    params = job.params
    results = {}
    ok = True
    if job.function is not None and job.compact_set is not None:
        eps = _resolve_eps_checked(job)
        H = SmoothedExtension.build(job.function, job.compact_set, eps, domain_margin=params.domain_margin)
        s, _ = truncate_atoms(job.measure.point, params.atom_budget or eps)
        theta, _ = _torus_coefficients(s, H, params)
        decay = decay_check(theta)
        results["decay"] = decay.to_dict()
        ok &= decay.max_violation <= 1.01

    if job.measure.density is not None:
        budget = params.lowpass_budget if params.lowpass_budget is not None else 1e-2
        try:
            v, bandwidth = lowpass_approximate(job.measure.density, budget)
            check = l1_bound_check(v, bandwidth)
            results["l1_bound"] = {"bandwidth": bandwidth, **check}
        except ValidationError as exc:
            results["l1_bound"] = {"error": str(exc)}
            ok = False

    out.mkdir(parents=True, exist_ok=True)
    (out / "lemma_report.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    return 0 if ok else 3


def _resolve_eps_checked(job: JobConfig) -> float:
    from .synthesis import _resolve_eps

    return _resolve_eps(job.function, job.compact_set, job.params)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wienerlevy",
        description="Synthesize measures whose Fourier transform is h(mu^) on a compact set.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON job config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="verification sampling seed")
    args = parser.parse_args(argv)

    path = Path(args.config)
    if not path.exists():
        print(f"validation error: config file {path} does not exist", file=sys.stderr)
        return 2
    try:
        job = parse_config(path.read_text(), base=path.parent)
        if job.command != args.command:
            raise ValidationError(
                f"config command {job.command!r} does not match CLI command {args.command!r}"
            )
        if args.seed is not None:
            job = dataclasses.replace(
                job, params=dataclasses.replace(job.params, seed=args.seed)
            )
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    return run(job, Path(args.out))


if __name__ == "__main__":
    sys.exit(main())
