"""Plain-text rendering of report JSON.

Rendering works on the parsed JSON alone, so a saved report re-renders to
the same text the CLI printed.
"""
from __future__ import annotations

from typing import Callable

from .errors import CrossCheckFailure


def _e(coords) -> str:
    """Coordinate list or rational string as compact text."""
    if isinstance(coords, str):
        return coords
    if isinstance(coords, list):
        if len(coords) == 1:
            return str(coords[0])
        terms = [str(coords[0])] if coords[0] != "0" else []
        terms += [f"{c}*g{i}" for i, c in enumerate(coords[1:], 1) if c != "0"]
        return " + ".join(terms) or "0"
    return str(coords)


def _gibbs(r):
    if r["beta"] == "inf":
        return ["Gibbs state at beta = inf", "zero temperature / ground-state projector: only the ground level is populated"]
    return [f"Gibbs state at beta = {r['beta']}", "stable of order two is consistent with this state"]


def _structure(r):
    n, m = r["pair"]
    return [f"structure violation between levels {n} and {m}: {r['reason']}",
            "not passive, so already excluded by first-order stability"]


def _instability(r):
    n, m = r["pair"]
    return [
        f"instability on levels ({n}, {m}): beta_n = {r['beta_n']}, beta_m = {r['beta_m']}",
        f"p = {r['p']}, q = {r['q']}",
        f"omega = ({_e(r['omega1'])}, {_e(r['omega2'])}, {_e(r['omega3'])})",
        f"log s = {_e(r['log_s'])}",
        f"recursion: {r['witness']}",
        "second-order stability violated: coupling to the three-mode oscillator "
        f"({_e(r['omega1'])}, {_e(r['omega2'])}, {_e(r['omega3'])}) admits no normalizable environment state",
    ]


def _vanishing(r):
    n, m = r["pair"]
    return [
        f"level {n} is empty while level {m} is populated (beta_m = {r['beta_m']})",
        f"p = {r['p']}, q = {r['q']}, omega = ({_e(r['omega1'])}, {_e(r['omega2'])}, {_e(r['omega3'])})",
        f"second-order stability violated: {r['witness']}",
    ]


def _approximate(r):
    n, m = r["pair"]
    return [
        f"approximate instability on levels ({n}, {m}): beta_n ~ {r['beta_n']}, beta_m ~ {r['beta_m']}",
        f"p = {r['p']}, q = {r['q']}, omega3 = {_e(r['omega3'])}, log s ~ {r['log_s']}",
        "gap ratio is irrational; numeric evidence only",
    ]


def _trace(r):
    return [f"trace class: {r['verdict']}", f"beta0 estimate: {r['beta0_estimate']}", r["note"]]


def _analysis(r):
    lines = [f"levels: {r['levels']}", f"passivity: {r['passivity']['type']}"]
    if r["passivity"]["type"] != "passive":
        lines.append(f"  {r['passivity']['reason']} at {r['passivity']['pair']}")
    betas = r["beta_profile"]["betas"]
    lines.append("beta profile: " + ", ".join(f"{k}: {v}" for k, v in sorted(betas.items(), key=lambda t: int(t[0]))))
    if r["beta_profile"]["approximate"]:
        lines.append(f"  approximate entries: {r['beta_profile']['approximate']}")
    g = r["gibbs"]
    lines.append(f"gibbs: beta = {g['beta']}" if g["type"] == "gibbs" else f"not gibbs: levels {g['pair']}")
    return lines


def _inconsistency(r):
    if r["kind"] == "vanishing":
        lines = ["inconsistent: every environment population is forced to zero"]
        lines += [f"  zero at node {z['node']} from system pair {z['system_pair']}" for z in r["zero_sources"]]
        return lines
    lines = [f"inconsistent cycle, mismatch = {_e(r['mismatch'])}"]
    for e in r["cycle"]:
        lines.append(f"  {e['r']} -> {e['s']}: {_e(e['offset'])} (system pair {e['system_pair']})")
    return lines


def _rates(rates: dict) -> str:
    return ", ".join(f"mode {k}: {_e(v)}" for k, v in sorted(rates.items())) or "none"


def _normalizable(r):
    lines = [f"normalizable; rates per step: {_rates(r['rates'])}"]
    if r["truncation_only"]:
        lines.append("some modes are unconstrained; decay there is a free choice")
    return lines


def _divergent(r):
    return [f"divergent along mode {r['mode']}: log increment {_e(r['rate'])} >= 0",
            f"rates per step: {_rates(r['rates'])}",
            "no normalizable environment state exists"]


def _indeterminate(r):
    return ["indeterminate: increments vary within a mode"] + [
        f"  mode {k}: {', '.join(_e(v) for v in vs)}" for k, vs in sorted(r["observed"].items())
    ]


def _counterexample(r):
    env = r["environment"]
    v = r["verification"]
    lines = [
        f"{r['mode']}-mode environment, frequencies {', '.join(_e(w) for w in env['frequencies'])}, "
        f"truncations {env['truncations']}",
        f"constraint edges: {v['edges']}, components: {v['components']}",
        "summability: " + "; ".join(_normalizable(v["summability"])),
        f"system verdict: {v['system']['type']}",
    ]
    if "lattice" in r:
        lat = r["lattice"]
        lines.append(f"lattice x = {lat['x']}, y = {lat['y']}, det = {lat['det']}, |A| = {len(lat['representatives'])}")
    if r.get("matched"):
        lines.append(f"matched transition: {r['matched']}")
    lines.append("stable but non-Gibbs: fewer than three modes")
    return lines


def _forced(r):
    return [f"forced equal: beta = {r['beta']} on levels {r['pair']}",
            f"k = {r['k']}, ell = {r['ell']}, omega = {_e(r['omega'])}"]


def _contradiction(r):
    return [f"contradiction on levels {r['pair']}: k = {r['k']}, ell = {r['ell']}, omega = {_e(r['omega'])}",
            f"log Phi({_e(r['gap'])}) = {_e(r['log_phi_via_n'])} via level {r['pair'][1]} "
            f"but {_e(r['log_phi_via_m'])} via level {r['pair'][0]}"]


def _phi(r):
    return [f"Phi is not well defined at gap {_e(r['gap'])}: pairs {r['first']} and {r['second']} give {r['values']}"]


def _scan(r):
    lines = [f"lambda {l}: sup deviation {d} (horizon {h})"
             for l, d, h in zip(r["lambdas"], r["deviations"], r["time_horizon"])]
    v = r["verdict"]
    if v["type"] == "decays_to_zero":
        lines.append(f"verdict: decays to zero, fitted exponent {v['rate']}")
    elif v["type"] == "persistent":
        lines.append(f"verdict: persistent, floor {v['floor']}; not stable of order one")
    else:
        lines.append(f"verdict: inconclusive, {v['reason']}")
    return lines


def _marginal(r):
    if r["type"] == "marginal_verified":
        return [f"marginal check verified, max discrepancy {r['max_discrepancy']}"]
    return [f"marginal check failed, discrepancy {r['discrepancy']}"]


RENDERERS: dict[str, Callable[[dict], list[str]]] = {
    "gibbs": _gibbs,
    "structure_violation": _structure,
    "instability": _instability,
    "vanishing": _vanishing,
    "approximate_instability": _approximate,
    "trace_class": _trace,
    "analysis": _analysis,
    "inconsistency": _inconsistency,
    "normalizable": _normalizable,
    "divergent": _divergent,
    "indeterminate": _indeterminate,
    "counterexample": _counterexample,
    "forced_equal": _forced,
    "contradiction": _contradiction,
    "phi_violation": _phi,
    "stability_scan": _scan,
    "marginal_verified": _marginal,
    "marginal_failed": _marginal,
}


def render_report(report: dict) -> str:
    kind = report.get("type") if isinstance(report, dict) else None
    fn = RENDERERS.get(kind)
    if fn is None:
        raise CrossCheckFailure(f"unknown report type {kind!r}")
    try:
        lines = fn(report)
    except (KeyError, TypeError, IndexError) as exc:
        raise CrossCheckFailure(f"malformed {kind} report: missing {exc}") from None
    return "\n".join([f"[{kind}]"] + lines) + "\n"
