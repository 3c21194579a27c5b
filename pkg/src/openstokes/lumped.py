"""0D resistor-inertance network oracle for the outlet flux laws.

Channel segments carry the 2D per-unit-depth Poiseuille resistance
R = 12 nu L / H^3 and fluid inertance I = L / H (unit density); each
terminal models one inlet/outlet with resistance lam/|Gamma|, inertance
gamma/|Gamma| and a far-field pressure signal, mirroring the averaged
pressure law the FEM outlets obey.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidParameterError, SingularSystemError


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    resistance: float
    inertance: float = 0.0

    def __post_init__(self):
        if not self.resistance > 0 or self.inertance < 0:
            raise InvalidParameterError("edge needs R > 0 and I >= 0")


@dataclass(frozen=True)
class Terminal:
    node: int
    k: int  # matching outlet index
    resistance: float
    inertance: float
    signal: object


@dataclass(frozen=True)
class LumpedNetwork:
    num_nodes: int
    edges: tuple
    terminals: tuple

    def __post_init__(self):
        if not self.terminals:
            raise InvalidParameterError("network needs at least one terminal")
        self._check_connected()

    def _check_connected(self):
        parent = list(range(self.num_nodes))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            parent[find(e.a)] = find(e.b)
        roots = {find(i) for i in range(self.num_nodes)}
        if len(roots) != 1:
            raise InvalidParameterError("lumped network graph is disconnected")


def _system(net, dt=None):
    """Rows: edge laws, terminal laws, Kirchhoff balance per node.

    Unknowns: node pressures, edge fluxes, terminal fluxes (positive =
    out of the network).  With dt given, inertances enter backward-Euler
    style and the right side needs the previous fluxes.
    """
    n, ne, nt = net.num_nodes, len(net.edges), len(net.terminals)
    size = n + ne + nt
    a = np.zeros((size, size))
    row = 0
    for i, e in enumerate(net.edges):
        r_eff = e.resistance + (e.inertance / dt if dt else 0.0)
        a[row, e.a] = 1.0
        a[row, e.b] = -1.0
        a[row, n + i] = -r_eff
        row += 1
    for i, t in enumerate(net.terminals):
        r_eff = t.resistance + (t.inertance / dt if dt else 0.0)
        a[row, t.node] = 1.0
        a[row, n + ne + i] = -r_eff
        row += 1
    for node in range(n):
        for i, e in enumerate(net.edges):
            if e.a == node:
                a[row + node, n + i] -= 1.0
            if e.b == node:
                a[row + node, n + i] += 1.0
        for i, t in enumerate(net.terminals):
            if t.node == node:
                a[row + node, n + ne + i] -= 1.0
    return a


def steady_fluxes(net):
    """Steady solve; returns (node_pressures, edge_fluxes, terminal_fluxes)."""
    n, ne, nt = net.num_nodes, len(net.edges), len(net.terminals)
    a = _system(net)
    rhs = np.zeros(n + ne + nt)
    for i, t in enumerate(net.terminals):
        rhs[ne + i] = t.signal.value(0.0)
    try:
        x = sla.solve(a, rhs)
    except sla.LinAlgError as exc:
        raise SingularSystemError(f"lumped steady system singular: {exc}") from exc
    return x[:n], x[n : n + ne], x[n + ne :]


def transient_fluxes(net, dt, T):
    """Backward-Euler integration; returns (times, edge_Q, terminal_Q).

    Fluxes start from rest; the steady limit matches `steady_fluxes` for
    constant sources.
    """
    if dt <= 0 or T <= 0:
        raise InvalidParameterError("dt and T must be positive")
    n, ne, nt = net.num_nodes, len(net.edges), len(net.terminals)
    steps = max(1, round(T / dt))
    a = _system(net, dt=dt)
    lu = sla.lu_factor(a)
    times = dt * np.arange(steps + 1)
    eq = np.zeros((steps + 1, ne))
    tq = np.zeros((steps + 1, nt))
    for s in range(1, steps + 1):
        rhs = np.zeros(n + ne + nt)
        for i, e in enumerate(net.edges):
            rhs[i] = -(e.inertance / dt) * eq[s - 1, i]
        for i, t in enumerate(net.terminals):
            rhs[ne + i] = t.signal.value(times[s]) - (t.inertance / dt) * tq[s - 1, i]
        x = sla.lu_solve(lu, rhs)
        eq[s] = x[n : n + ne]
        tq[s] = x[n + ne :]
    return times, eq, tq


def poiseuille_resistance(nu, length, width):
    """2D per-unit-depth fully developed channel resistance."""
    return 12.0 * nu * length / width**3


def channel_network(length, height, nu, specs):
    """Two-terminal twin of the channel scenario."""
    by_k = {s.k: s for s in specs}
    edge = Edge(0, 1, poiseuille_resistance(nu, length, height), length / height)
    terms = tuple(
        Terminal(node, k, by_k[k].lam / height, by_k[k].gamma / height, by_k[k].signal)
        for node, k in ((0, 1), (1, 2))
    )
    return LumpedNetwork(2, (edge,), terms)


def bifurcation_network(trunk_length, trunk_width, branch_length, branch_width, nu, specs):
    """Four-node twin of the bifurcation: inlet, junction, two branch ports."""
    by_k = {s.k: s for s in specs}
    edges = (
        Edge(0, 1, poiseuille_resistance(nu, trunk_length, trunk_width), trunk_length / trunk_width),
        Edge(1, 2, poiseuille_resistance(nu, branch_length, branch_width), branch_length / branch_width),
        Edge(1, 3, poiseuille_resistance(nu, branch_length, branch_width), branch_length / branch_width),
    )
    widths = {1: trunk_width, 2: branch_width, 3: branch_width}
    terms = tuple(
        Terminal(node, k, by_k[k].lam / widths[k], by_k[k].gamma / widths[k], by_k[k].signal)
        for node, k in ((0, 1), (2, 2), (3, 3))
    )
    return LumpedNetwork(4, edges, terms)
