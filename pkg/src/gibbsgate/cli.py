"""Command-line front end.

Exit codes: 0 when a verdict was produced (negative verdicts included),
2 for invalid input, 3 when a result fails its own cross-check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import constraints, counterexamples, dynamics, oscillator
from .energy import Energy, log_from_json, parse_rational
from .errors import (
    CrossCheckFailure,
    GibbsGateError,
    InvalidInput,
    NoLatticeRepresentation,
    OracleRefused,
    UnsupportedAttackPair,
)
from .report import render_report
from .spectrum import (
    DEFAULT_TOL,
    GrowthFamily,
    LogState,
    Spectrum,
    beta_profile,
    check_passivity,
    check_trace_class,
    is_gibbs,
)

EXIT_OK, EXIT_INPUT, EXIT_CROSSCHECK = 0, 2, 3
SEED_ENV = "GIBBSGATE_SEED"


# --------------------------------------------------------------------------
# Input loading


def _load(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}", path) from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}", path) from None
    if not isinstance(data, dict):
        raise InvalidInput(f"{path} must hold a JSON object", path)
    return data


def load_system(data: dict) -> tuple[Spectrum, LogState]:
    """A spectrum plus ``logp``; plain rational spectra may use ``energies``."""
    if "levels" not in data and "energies" in data:
        data = dict(data, levels=[{"coords": e} for e in data["energies"]])
    spec = Spectrum.from_json(data)
    state = LogState.from_json(data, spec.basis)
    if len(state) != len(spec):
        raise InvalidInput(f"{len(state)} log-populations for {len(spec)} levels", "logp")
    return spec, state


def _energy(data, spec: Spectrum, field: str) -> Energy:
    return Energy.from_json(data, spec.basis, field)


def parse_trunc(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        out = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise InvalidInput(f"truncation must be N[,M,K], got {text!r}", "--trunc") from None
    if not out or any(t < 1 for t in out):
        raise InvalidInput("truncations must be positive", "--trunc")
    return out


def _pair(text: str | None, field: str) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise InvalidInput(f"expected m,n, got {text!r}", field) from None
    return a, b


def _complex_matrix(data, field: str) -> np.ndarray:
    """Dense matrix from rows of numbers or ``[re, im]`` pairs."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInput("matrix entries must be numbers or [re, im] pairs", field) from None
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise InvalidInput("matrix must be a 2-d array", field)


def _rng() -> np.random.Generator:
    seed = os.environ.get(SEED_ENV)
    try:
        return np.random.default_rng(int(seed) if seed else 0)
    except ValueError:
        raise InvalidInput(f"{SEED_ENV} must be an integer", SEED_ENV) from None


# --------------------------------------------------------------------------
# Commands


def cmd_existence(args) -> dict:
    data = _load(args.input)
    kind = data.get("kind")
    if kind == "explicit":
        family = GrowthFamily.explicit(data.get("energies", []))
    else:
        family = GrowthFamily(kind, tuple(data.get("params", ())))
    beta = args.beta if args.beta is not None else data.get("beta")
    if beta is None:
        raise InvalidInput("an inverse temperature is required", "beta")
    return check_trace_class(family, beta, int(data.get("window", 1024))).to_json()


def cmd_analyze(args) -> dict:
    spec, state = load_system(_load(args.input))
    passivity = check_passivity(state, spec)
    out = {
        "type": "analysis",
        "levels": len(spec),
        "passivity": passivity.to_json(),
        "beta_profile": beta_profile(state, spec, args.tol).to_json(),
        "gibbs": is_gibbs(state, spec, args.tol).to_json(),
    }
    return out


def _check_instability(spec, state, cert) -> None:
    problems = cert.recheck()
    if problems:
        raise CrossCheckFailure("certificate failed its re-check: " + "; ".join(problems))
    if isinstance(cert, oscillator.InstabilityCertificate):
        sys_spec, sys_state, env = oscillator.lifted_system(cert)
        if len(sys_spec) * len(env) > constraints.ORACLE_MAX_JOINT:
            return
        verdict = constraints.brute_force_oracle(sys_spec, sys_state, env)
        if not isinstance(verdict, constraints.DivergentDirection) or verdict.mode != 2 \
                or oscillator.project_lifted(verdict.rate, cert) != cert.log_s:
            raise CrossCheckFailure(f"oracle does not reproduce log s: {verdict}")


def cmd_refute(args) -> dict:
    spec, state = load_system(_load(args.input))
    cert = oscillator.refute_gibbs(spec, state, args.tol)
    if isinstance(cert, (oscillator.InstabilityCertificate, oscillator.VanishingCertificate)):
        _check_instability(spec, state, cert)
    return cert.to_json()


def _environment(data: dict, spec: Spectrum, trunc):
    if "frequencies" in data:
        freqs = [_energy(f, spec, f"frequencies[{i}]") for i, f in enumerate(data["frequencies"])]
        truncs = trunc or tuple(data.get("truncations", ()))
        if len(truncs) == 1 and len(freqs) > 1:
            truncs = truncs * len(freqs)
        if len(truncs) != len(freqs):
            raise InvalidInput("one truncation per frequency required", "truncations")
        return oscillator.multimode_spectrum(freqs, truncs, spec.basis)
    if "levels" in data:
        return [(i, _energy(e, spec, f"levels[{i}]")) for i, e in enumerate(data["levels"])]
    raise InvalidInput("environment needs 'frequencies' or 'levels'", "environment")


def cmd_verify_env(args) -> dict:
    spec, state = load_system(_load(args.system))
    env = _environment(_load(args.environment), spec, parse_trunc(args.trunc))
    verdict = constraints.env_verdict(spec, state, env)
    out = verdict.to_json()
    try:
        oracle = constraints.brute_force_oracle(spec, state, env)
    except OracleRefused:
        return out
    if not constraints.same_verdict(verdict, oracle):
        raise CrossCheckFailure(f"union-find verdict {out} disagrees with elimination {oracle.to_json()}")
    return out


def cmd_counterexample(args) -> dict:
    data = _load(args.input)
    spec, state = load_system(data)
    trunc = parse_trunc(args.trunc)
    if args.mode == "one":
        if "omega" not in data:
            raise InvalidInput("single-mode construction needs 'omega'", "omega")
        omega = _energy(data["omega"], spec, "omega")
        cert = counterexamples.single_mode_counterexample(spec, omega, state, trunc=trunc[0] if trunc else 20)
    else:
        omegas = data.get("omegas")
        if not isinstance(omegas, list) or len(omegas) != 2:
            raise InvalidInput("two-mode construction needs two 'omegas'", "omegas")
        omegas = [_energy(w, spec, f"omegas[{i}]") for i, w in enumerate(omegas)]
        cert = counterexamples.two_mode_counterexample(
            spec, omegas, state,
            base_decay=parse_rational(data.get("base_decay", 1), "base_decay"),
            x=data.get("x"), y=data.get("y"),
            trunc=(trunc if trunc and len(trunc) > 1 else (trunc[0] if trunc else 12)),
        )
    if cert.system_is_gibbs:
        raise CrossCheckFailure("constructed counterexample has a Gibbs system state")
    return cert.to_json()


def cmd_commensurable(args) -> dict:
    data = _load(args.input)
    spec, state = load_system(data)
    pair = _pair(args.pair, "--pair") or tuple(data.get("pair", (1, 2)))
    return counterexamples.commensurable_forcing(spec, state, *pair).to_json()


def _truncated(data: dict, field: str) -> dynamics.TruncatedSystem:
    if "levels" in data or "energies" in data:
        spec, state = load_system(data)
        obs = _complex_matrix(data["observable"], f"{field}.observable") if "observable" in data else None
        return dynamics.system_from_state(spec, state, obs)
    for key in ("hamiltonian", "state", "observable"):
        if key not in data:
            raise InvalidInput(f"system needs '{key}'", f"{field}.{key}")
    return dynamics.TruncatedSystem(
        _complex_matrix(data["hamiltonian"], f"{field}.hamiltonian"),
        _complex_matrix(data["state"], f"{field}.state"),
        _complex_matrix(data["observable"], f"{field}.observable"),
    )


def _perturbation(data, sys, field: str, rng):
    if data is None or data == "random":
        return dynamics.random_perturbation(sys.dim, rng)
    return _complex_matrix(data, field)


def cmd_simulate(args) -> dict:
    data = _load(args.input)
    rng = _rng()
    lambdas = [float(x) for x in data.get("lambdas", (0.2, 0.1, 0.05, 0.025))]
    demo = data.get("demo")
    if demo == "degenerate":
        sys_, v = dynamics.degenerate_demo()
    elif demo == "rabi":
        sys_, v = dynamics.rabi_demo()
    elif demo == "gibbs":
        sys_, v = dynamics.gibbs_demo(data.get("energies", (0.0, 1.0, 2.0)), float(data.get("beta", 1.0)), rng)
    elif demo is not None:
        raise InvalidInput(f"unknown demo {demo!r}", "demo")
    elif "marginal" in data:
        m = data["marginal"]
        a, b = _truncated(m.get("A", {}), "marginal.A"), _truncated(m.get("B", {}), "marginal.B")
        v_a = _perturbation(m.get("V_A"), a, "marginal.V_A", rng)
        return dynamics.marginal_stability_check(a, b, v_a, lambdas).to_json()
    else:
        sys_ = _truncated(data.get("system", {}), "system")
        v = _perturbation(data.get("V"), sys_, "V", rng)
    return dynamics.first_order_stability_scan(sys_, v, lambdas).to_json()


def cmd_render(args) -> dict:
    return _load(args.input)


COMMANDS = {
    "existence": cmd_existence,
    "analyze": cmd_analyze,
    "refute": cmd_refute,
    "verify-env": cmd_verify_env,
    "counterexample": cmd_counterexample,
    "commensurable": cmd_commensurable,
    "simulate": cmd_simulate,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trunc", help="truncation levels N[,M,K]")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="tolerance for numeric betas")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = argparse.ArgumentParser(prog="gibbsgate", description="Stability certificates for diagonal states.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("existence", parents=[common], help="trace-class test for a level family")
    p.add_argument("input")
    p.add_argument("--beta")
    p = sub.add_parser("analyze", parents=[common], help="beta profile, passivity and Gibbs form")
    p.add_argument("input")
    p = sub.add_parser("refute", parents=[common], help="Gibbs certificate or instability witness")
    p.add_argument("input")
    p = sub.add_parser("verify-env", parents=[common], help="solve for an environment state")
    p.add_argument("system")
    p.add_argument("environment")
    p = sub.add_parser("counterexample", parents=[common], help="stable non-Gibbs construction")
    p.add_argument("input")
    p.add_argument("--mode", choices=("one", "two"), required=True)
    p = sub.add_parser("commensurable", parents=[common], help="single-mode forcing on a rational gap pair")
    p.add_argument("input")
    p.add_argument("--pair", help="levels m,n")
    p = sub.add_parser("simulate", parents=[common], help="first-order stability scan")
    p.add_argument("input")
    p = sub.add_parser("render", parents=[common], help="render a saved report")
    p.add_argument("input")
    return parser


def _emit(report: dict, fmt: str, out: str | None) -> None:
    # render from the serialized form so saved reports re-render identically
    text_json = json.dumps(report, indent=2, sort_keys=True) + "\n"
    body = render_report(json.loads(text_json)) if fmt == "text" else text_json
    if out:
        Path(out).write_text(body)
    else:
        sys.stdout.write(body)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "render":
        args.format = "text"
    try:
        report = COMMANDS[args.command](args)
        _emit(report, args.format, args.out)
    except InvalidInput as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"invalid input{where}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NoLatticeRepresentation, UnsupportedAttackPair, counterexamples.ConstructionFailed) as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GibbsGateError as exc:
        print(f"cross-check failure: {exc}", file=sys.stderr)
        return EXIT_CROSSCHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
