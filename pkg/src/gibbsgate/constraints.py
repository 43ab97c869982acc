"""Environment states compatible with a system state.

A product state f(H) x g(H') can only be stable of order one if it is a
function of the joint Hamiltonian, i.e. populations agree on degenerate
joint levels. Whenever ``E_n + E'_r == E_m + E'_s`` this forces

    f(E_n) g(E'_r) == f(E_m) g(E'_s)

which in log space is an equality with an exact offset between two
environment levels. The main path collects these as a graph and solves it
with a weighted union-find; :func:`brute_force_oracle` enumerates the joint
spectrum directly and solves by substitution, as an independent check.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .energy import NEG_INF, Basis, Energy, is_neg_inf
from .errors import InvalidInput, OracleRefused
from .oscillator import MultimodeSpectrum
from .spectrum import LogState, PassivityViolation, Spectrum, check_passivity

ORACLE_MAX_JOINT = 10_000

ZERO = Energy()


@dataclass(frozen=True)
class Edge:
    """``log g(s) - log g(r) == offset``, induced by ``E_n - E_m == E'_s - E'_r``."""

    r: int
    s: int
    offset: Energy
    sys_pair: tuple[int, int]

    def reversed(self) -> "Edge":
        return Edge(self.s, self.r, -self.offset, (self.sys_pair[1], self.sys_pair[0]))

    def to_json(self) -> dict:
        n, m = self.sys_pair
        return {
            "r": self.r,
            "s": self.s,
            "offset": _log_json(self.offset),
            "system_pair": [n, m],
            "coincidence": [[n, self.r], [m, self.s]],
        }


@dataclass(frozen=True)
class ZeroMark:
    """``g(node) == 0`` because ``f(E_n) == 0`` meets ``f(E_m) > 0`` in a coincidence."""

    node: int
    partner: int
    sys_pair: tuple[int, int]

    def to_json(self) -> dict:
        n, m = self.sys_pair
        return {"node": self.node, "system_pair": [n, m], "coincidence": [[n, self.partner], [m, self.node]]}


@dataclass(frozen=True)
class ConstraintGraph:
    nodes: tuple[int, ...]
    energies: dict = field(repr=False)
    edges: tuple[Edge, ...] = ()
    zeros: tuple[ZeroMark, ...] = ()


@dataclass(frozen=True)
class EnvAssignment:
    """Solved environment log-populations, one anchor (value 0) per component."""

    logg: dict
    components: tuple[tuple[int, ...], ...]
    anchors: tuple[int, ...]
    component_of: dict = field(repr=False)
    zero_nodes: frozenset = frozenset()

    def to_json(self) -> dict:
        return {
            "logg": {str(k): _log_json(v) for k, v in sorted(self.logg.items())},
            "anchors": list(self.anchors),
            "zero_nodes": sorted(self.zero_nodes),
        }


@dataclass(frozen=True)
class InconsistencyCertificate:
    """No environment state satisfies the coincidence constraints.

    ``kind == "cycle"``: the oriented ``cycle`` edges sum to ``mismatch != 0``.
    ``kind == "vanishing"``: every environment population is forced to zero.
    """

    kind: str
    cycle: tuple[Edge, ...] = ()
    mismatch: Energy | None = None
    zero_sources: tuple[ZeroMark, ...] = ()

    def to_json(self) -> dict:
        out = {"type": "inconsistency", "kind": self.kind}
        if self.kind == "cycle":
            out["cycle"] = [e.to_json() for e in self.cycle]
            out["mismatch"] = _log_json(self.mismatch)
        else:
            out["zero_sources"] = [z.to_json() for z in self.zero_sources[:8]]
        return out


@dataclass(frozen=True)
class Normalizable:
    truncation_only: bool
    rates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "type": "normalizable",
            "truncation_only": self.truncation_only,
            "rates": {str(k): _log_json(v) for k, v in sorted(self.rates.items())},
        }


@dataclass(frozen=True)
class DivergentDirection:
    mode: int
    rate: Energy
    rates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "type": "divergent",
            "mode": self.mode,
            "rate": _log_json(self.rate),
            "rates": {str(k): _log_json(v) for k, v in sorted(self.rates.items())},
        }


@dataclass(frozen=True)
class Indeterminate:
    observed: dict

    def to_json(self) -> dict:
        return {
            "type": "indeterminate",
            "observed": {str(k): [_log_json(v) for v in vs] for k, vs in sorted(self.observed.items())},
        }


def _log_json(x):
    if x is None:
        return None
    if is_neg_inf(x):
        return "-inf"
    return str(x.rational) if x.is_rational else x.to_json()


# --------------------------------------------------------------------------
# Graph construction


def env_levels_of(env) -> list[tuple[int, Energy]]:
    """Normalize an environment description to ``(index, energy)`` pairs."""
    if isinstance(env, MultimodeSpectrum):
        return env.levels()
    if isinstance(env, Spectrum):
        out = []
        for level in env.levels:
            out.extend((len(out), level.energy) for _ in range(level.mult))
        return out
    return [(int(i), e) for i, e in env]


def degeneracy_classes(levels: Iterable[tuple[int, Energy]]) -> list[list[int]]:
    """Group indices by exact energy; classes ordered by energy, members by index."""
    groups: dict[Energy, list[int]] = {}
    for idx, e in levels:
        groups.setdefault(e, []).append(idx)
    ordered = sorted(groups.items(), key=lambda kv: (float(kv[0]), min(kv[1])))
    return [sorted(members) for _, members in ordered]


def build_ratio_graph(sys_spec: Spectrum, sys_state: LogState, env_levels) -> ConstraintGraph:
    """Edges from every exact coincidence of a system gap with an environment gap.

    Degenerate environment levels are chained together (the n == m
    coincidences); gaps between two degenerate classes are recorded once,
    between the class representatives. Together these are equivalent to the
    full set of pairwise coincidences.
    """
    passivity = check_passivity(sys_state, sys_spec)
    if isinstance(passivity, PassivityViolation):
        raise InvalidInput(f"system state is not passive at {passivity.n},{passivity.m}", "logp")
    state = sys_state.bound(sys_spec.basis)
    levels = env_levels_of(env_levels)
    energies = {i: e for i, e in levels}
    classes = degeneracy_classes(levels)
    by_energy = {energies[c[0]]: c for c in classes}
    finite = [state.is_finite(n) for n in range(len(sys_spec))]
    e_sys = sys_spec.energies

    edges: list[Edge] = []
    zeros: list[ZeroMark] = []
    n0 = finite.index(True)
    for cls in classes:
        for a, b in zip(cls, cls[1:]):
            edges.append(Edge(a, b, ZERO, (n0, n0)))

    for n in range(len(sys_spec)):
        for m in range(n):
            gap = e_sys[n] - e_sys[m]
            offset = state[n] - state[m] if finite[n] and finite[m] else None
            if not (finite[n] or finite[m]):
                continue
            for cls in classes:
                target = by_energy.get(energies[cls[0]] + gap)
                if target is None:
                    continue
                r, s = cls[0], target[0]
                if offset is not None:
                    edges.append(Edge(r, s, offset, (n, m)))
                elif finite[m]:
                    # f(E_n) = 0 so f(E_m) g(E'_s) must vanish
                    zeros.append(ZeroMark(s, r, (n, m)))
                else:
                    zeros.append(ZeroMark(r, s, (m, n)))
    return ConstraintGraph(tuple(sorted(energies)), energies, tuple(edges), tuple(zeros))


# --------------------------------------------------------------------------
# Weighted union-find


class _OffsetUnionFind:
    """Union-find storing ``value(x) - value(parent(x))`` on every node."""

    def __init__(self, nodes: Iterable[int]):
        self.parent = {x: x for x in nodes}
        self.offset = {x: ZERO for x in self.parent}
        self.size = {x: 1 for x in self.parent}

    def find(self, x: int) -> tuple[int, Energy]:
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root = x
        # compress from the top so each node's offset becomes relative to root
        acc = ZERO
        for y in reversed(path):
            acc = acc + self.offset[y]
            self.offset[y] = acc
            self.parent[y] = root
        return root, (self.offset[path[0]] if path else ZERO)

    def union(self, r: int, s: int, delta: Energy) -> Energy | None:
        """Impose value(s) - value(r) == delta; return the mismatch on conflict."""
        rr, pr = self.find(r)
        rs, ps = self.find(s)
        if rr == rs:
            diff = ps - pr
            return None if diff == delta else diff - delta
        # value(rs) - value(rr) = delta + pr - ps
        link = delta + pr - ps
        if self.size[rr] < self.size[rs]:
            rr, rs, link = rs, rr, -link
        self.parent[rs] = rr
        self.offset[rs] = link
        self.size[rr] += self.size[rs]
        return None


def _zero_closure(graph: ConstraintGraph) -> set[int]:
    parent = {x: x for x in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in graph.edges:
        a, b = find(e.r), find(e.s)
        if a != b:
            parent[b] = a
    zero_roots = {find(z.node) for z in graph.zeros}
    return {x for x in graph.nodes if find(x) in zero_roots}


def _tree_path(adj: dict, start: int, goal: int) -> list[Edge]:
    prev: dict[int, Edge | None] = {start: None}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        if x == goal:
            break
        for e in adj.get(x, ()):
            if e.s not in prev:
                prev[e.s] = e
                queue.append(e.s)
    path = []
    x = goal
    while prev[x] is not None:
        path.append(prev[x])
        x = prev[x].r
    return path[::-1]


def solve_env_state(graph: ConstraintGraph) -> EnvAssignment | InconsistencyCertificate:
    zero = _zero_closure(graph)
    live = [x for x in graph.nodes if x not in zero]
    if not live:
        return InconsistencyCertificate("vanishing", zero_sources=graph.zeros)

    uf = _OffsetUnionFind(live)
    tree: dict[int, list[Edge]] = {}
    for e in graph.edges:
        if e.r in zero:
            continue
        mismatch = uf.union(e.r, e.s, e.offset)
        if mismatch is not None:
            cycle = _tree_path(tree, e.r, e.s) + [e.reversed()]
            return InconsistencyCertificate("cycle", tuple(cycle), mismatch)
        tree.setdefault(e.r, []).append(e)
        tree.setdefault(e.s, []).append(e.reversed())

    members: dict[int, list[int]] = {}
    potential = {}
    for x in live:
        root, pot = uf.find(x)
        members.setdefault(root, []).append(x)
        potential[x] = pot
    energies = graph.energies
    comps, anchors, component_of, logg = [], [], {}, {}
    for nodes in sorted(members.values(), key=lambda ns: (min(float(energies[x]) for x in ns), min(ns))):
        anchor = min(nodes, key=lambda x: (float(energies[x]), x))
        k = len(comps)
        comps.append(tuple(sorted(nodes)))
        anchors.append(anchor)
        base = potential[anchor]
        for x in nodes:
            logg[x] = potential[x] - base
            component_of[x] = k
    for x in zero:
        logg[x] = NEG_INF
    return EnvAssignment(logg, tuple(comps), tuple(anchors), component_of, frozenset(zero))


# --------------------------------------------------------------------------
# Summability


def _strides(truncs: Sequence[int]) -> list[int]:
    out = []
    acc = 1
    for t in reversed(truncs):
        out.append(acc)
        acc *= t
    return out[::-1]


def _classify(observed: dict[int, list], modes: int):
    if any(len(set(vs)) > 1 for vs in observed.values()):
        return Indeterminate({i: sorted(set(vs), key=float) for i, vs in observed.items() if vs})
    rates = {i: vs[0] for i, vs in observed.items() if vs}
    for i in range(modes):
        if i in rates and rates[i] >= 0:
            return DivergentDirection(i, rates[i], rates)
    return Normalizable(len(rates) < modes, rates)


def check_summability(assignment: EnvAssignment, env_family) -> Normalizable | DivergentDirection | Indeterminate:
    """Per-mode log increments of the solved state along the occupation lattice.

    Along each line of the lattice, consecutive nodes of the same component
    give an increment per step. A mode whose increments agree has a rate; a
    rate >= 0 means the populations do not decay along that mode and the
    recursion continues past the truncation. Modes never constrained within
    a component are free and only decay by choice.
    """
    if not isinstance(env_family, MultimodeSpectrum):
        return Normalizable(True, {})
    truncs = env_family.truncations
    strides = _strides(truncs)
    comp = assignment.component_of
    logg = assignment.logg
    observed: dict[int, list] = {i: [] for i in range(len(truncs))}
    for i, (t_i, st) in enumerate(zip(truncs, strides)):
        for flat, idx in enumerate(env_family.indices):
            if idx[i] != 0:
                continue
            last: dict[int, int] = {}
            for step in range(t_i):
                node = flat + step * st
                c = comp.get(node)
                if c is None:
                    continue
                prev = last.get(c)
                if prev is not None:
                    observed[i].append((logg[node] - logg[prev]) / ((node - prev) // st))
                last[c] = node
    return _classify(observed, len(truncs))


def env_verdict(sys_spec: Spectrum, sys_state: LogState, env):
    """Main path: ratio graph, union-find solve, then summability."""
    graph = build_ratio_graph(sys_spec, sys_state, env)
    solved = solve_env_state(graph)
    if isinstance(solved, InconsistencyCertificate):
        return solved
    return check_summability(solved, env)


# --------------------------------------------------------------------------
# Independent oracle


@dataclass
class OracleSolution:
    values: dict
    component_of: dict
    zero: set


def brute_force_oracle(sys_spec: Spectrum, sys_state: LogState, env_levels, env_family=None,
                       max_joint: int = ORACLE_MAX_JOINT):
    """Enumerate the joint spectrum and solve the population equalities directly.

    Every joint level (n, r) with a common total energy shares one joint
    log-population h; each member with finite f(E_n) gives
    ``log g(r) = h - log f(E_n)``. Unknowns (environment levels and class
    values) are eliminated by substitution along the bipartite
    level/class incidence.
    """
    levels = env_levels_of(env_levels)
    if env_family is None and isinstance(env_levels, MultimodeSpectrum):
        env_family = env_levels
    n_joint = len(sys_spec) * len(levels)
    if n_joint > max_joint:
        raise OracleRefused(f"{n_joint} joint levels exceed the oracle limit {max_joint}")
    state = sys_state.bound(sys_spec.basis)

    classes: dict[Energy, list[tuple[int, int]]] = {}
    for n, level in enumerate(sys_spec.levels):
        for r, e in levels:
            classes.setdefault(level.energy + e, []).append((n, r))
    class_list = list(classes.values())
    incident: dict[int, list[tuple[int, int]]] = {r: [] for r, _ in levels}
    for c, members in enumerate(class_list):
        for n, r in members:
            incident[r].append((c, n))

    # zeros: a class containing a zero-population system level has h = -inf
    zero_env: set[int] = set()
    zero_cls: set[int] = set()
    todo = deque(c for c, ms in enumerate(class_list) if any(not state.is_finite(n) for n, _ in ms)
                 and any(state.is_finite(n) for n, _ in ms))
    zero_cls.update(todo)
    while todo:
        c = todo.popleft()
        for n, r in class_list[c]:
            if state.is_finite(n) and r not in zero_env:
                zero_env.add(r)
                for c2, n2 in incident[r]:
                    if state.is_finite(n2) and c2 not in zero_cls:
                        zero_cls.add(c2)
                        todo.append(c2)
    energies = dict(levels)
    live = sorted((r for r, _ in levels if r not in zero_env), key=lambda r: (float(energies[r]), r))
    if not live:
        return InconsistencyCertificate("vanishing")

    values: dict[int, Energy] = {}
    class_val: dict[int, Energy] = {}
    component_of: dict[int, int] = {}
    k = 0
    for start in live:
        if start in values:
            continue
        values[start] = ZERO
        component_of[start] = k
        queue = deque([start])
        while queue:
            r = queue.popleft()
            for c, n in incident[r]:
                if not state.is_finite(n):
                    continue
                h = values[r] + state[n]
                if c in class_val:
                    if class_val[c] != h:
                        return InconsistencyCertificate("cycle", mismatch=h - class_val[c])
                    continue
                class_val[c] = h
                for m, s in class_list[c]:
                    if not state.is_finite(m):
                        continue
                    v = h - state[m]
                    if s in values:
                        if values[s] != v:
                            return InconsistencyCertificate("cycle", mismatch=v - values[s])
                    else:
                        values[s] = v
                        component_of[s] = k
                        queue.append(s)
        k += 1

    if not isinstance(env_family, MultimodeSpectrum):
        return Normalizable(True, {})
    return _inspect_growth(values, component_of, env_family)


def _inspect_growth(values: dict, component_of: dict, env: MultimodeSpectrum):
    """Increments measured from the first same-component node on each lattice line."""
    observed: dict[int, list] = {i: [] for i in range(env.modes)}
    lines: dict[tuple, dict[int, tuple]] = {}
    for flat, idx in enumerate(env.indices):
        if flat not in component_of:
            continue
        for i in range(env.modes):
            key = (i,) + idx[:i] + idx[i + 1:]
            first = lines.setdefault(key, {}).get(component_of[flat])
            if first is None:
                lines[key][component_of[flat]] = (idx[i], values[flat])
            else:
                steps = idx[i] - first[0]
                observed[i].append((values[flat] - first[1]) / steps)
    return _classify(observed, env.modes)


def same_verdict(a, b) -> bool:
    """Verdict-level agreement used to compare the main path with the oracle."""
    if type(a) is not type(b):
        return False
    if isinstance(a, InconsistencyCertificate):
        return a.kind == b.kind
    if isinstance(a, DivergentDirection):
        return a.mode == b.mode and a.rate == b.rate and a.rates == b.rates
    if isinstance(a, Normalizable):
        return a.truncation_only == b.truncation_only and a.rates == b.rates
    if isinstance(a, Indeterminate):
        return set(a.observed) == set(b.observed)
    return a == b
