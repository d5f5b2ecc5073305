"""Suspension flows over subshifts and their Thurston-type geometry.

A suspension flow is a base graph together with a roof function; its closed
orbits are the cycles of the graph and the period of an orbit is the sum of
the roof along the cycle.  Invariant measures of the flow are represented by
shift-invariant measures ``nu`` on the base: the flow average of ``r2/r1``
against the lift of ``nu`` under roof ``r1`` is ``(int r2 dnu)/(int r1 dnu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConvergenceFailure,
    CycleNotInGraph,
    DegenerateFlow,
    GraphMismatch,
    NegativeCurvature,
    NotTangent,
)
from .optimize import max_cycle_ratio
from .sft import (
    Cycle,
    EdgePotential,
    MarkovMeasure,
    RoofFunction,
    SubshiftGraph,
    cycle_measure,
    integrate,
)
from .thermo import (
    equilibrium_measure,
    livsic_reduce,
    pressure,
    pressure_derivative,
    pressure_second_derivative,
    topological_entropy,
)

ENTROPY_RESIDUAL = 1e-10
TANGENT_TOL = 1e-6
# certified threshold for J = 1 in rigidity checks
RIGIDITY_TOL = 1e-6


class SuspensionFlow:
    def __init__(self, base: SubshiftGraph, roof):
        if not isinstance(roof, RoofFunction):
            roof = RoofFunction(base, roof.values if isinstance(roof, EdgePotential) else roof)
        if roof.graph is not base:
            raise GraphMismatch("roof lives on a different graph")
        self.base = base
        self.roof = roof

    @cached_property
    def entropy(self) -> float:
        return _solve_entropy(self.base, self.roof)

    def scaled(self, c: float) -> "SuspensionFlow":
        return SuspensionFlow(self.base, self.roof * c)

    def __repr__(self) -> str:
        return f"SuspensionFlow(roof={self.roof.values.tolist()})"


def _solve_entropy(g: SubshiftGraph, roof: RoofFunction) -> float:
    h_top = topological_entropy(g)
    if h_top <= 1e-14:
        # a single periodic orbit carries no entropy
        return 0.0

    def f(h):
        return pressure(g, -h * roof)

    lo, hi = 1e-12, h_top / float(np.min(roof.values))
    if not (f(lo) > 0 and f(hi) <= 0) or hi > 1e12:
        raise ConvergenceFailure("could not bracket the entropy in [1e-12, 1e12]")
    h = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(h)) > ENTROPY_RESIDUAL:
        raise ConvergenceFailure(f"entropy residual {f(h):.3e} too large")
    return float(h)


def flow_entropy(flow: SuspensionFlow) -> float:
    """The unique ``h`` with ``P(-h * roof) = 0``."""
    return flow.entropy


def _same_base(f1: SuspensionFlow, f2: SuspensionFlow) -> None:
    if f1.base is not f2.base:
        raise GraphMismatch("flows have different base graphs")


def _positive_entropy(*flows: SuspensionFlow) -> None:
    for f in flows:
        if f.entropy <= 0:
            raise DegenerateFlow("entropy ratio undefined for a zero-entropy flow")


def period(flow: SuspensionFlow, a: Cycle) -> float:
    if a.graph is not flow.base:
        raise CycleNotInGraph("cycle belongs to a different graph")
    return a.total(flow.roof)


def intersection(m: MarkovMeasure, flow1: SuspensionFlow, flow2: SuspensionFlow) -> float:
    _same_base(flow1, flow2)
    return integrate(m, flow2.roof) / integrate(m, flow1.roof)


def renormalized_intersection(m: MarkovMeasure, flow1: SuspensionFlow, flow2: SuspensionFlow) -> float:
    _positive_entropy(flow1, flow2)
    return flow2.entropy / flow1.entropy * intersection(m, flow1, flow2)


def bowen_margulis(flow: SuspensionFlow) -> MarkovMeasure:
    """Base measure of the measure of maximal entropy: equilibrium state of ``-h * roof``."""
    return equilibrium_measure(flow.base, -flow.entropy * flow.roof)


@dataclass(frozen=True)
class DistanceReport:
    value: float
    cycle: Cycle
    entropies: tuple
    method: str
    ratio: float = field(default=math.nan)
    J: float = field(default=math.nan)  # renormalized intersection at the Bowen-Margulis measure of flow1

    @property
    def J_equals_one(self) -> bool:
        return abs(self.J - 1.0) <= RIGIDITY_TOL

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "optimizing_cycle": [str(s) for s in self.cycle.state_sequence()],
            "h1": self.entropies[0],
            "h2": self.entropies[1],
            "period_ratio": self.ratio,
            "method": self.method,
            "J": self.J,
            "J_equals_one": self.J_equals_one,
            "J_tol": RIGIDITY_TOL,
        }


def dth_flow(flow1: SuspensionFlow, flow2: SuspensionFlow, method: str = "howard") -> DistanceReport:
    """``log((h2/h1) * max over orbits of period2/period1)`` with the optimizing orbit."""
    _same_base(flow1, flow2)
    _positive_entropy(flow1, flow2)
    h1, h2 = flow1.entropy, flow2.entropy
    mcr = max_cycle_ratio(flow1.base, flow2.roof, flow1.roof, method=method)
    value = math.log(h2 / h1) + math.log(mcr.value)
    J = renormalized_intersection(bowen_margulis(flow1), flow1, flow2)
    return DistanceReport(value, mcr.cycle, (h1, h2), mcr.method, mcr.value, J)


def projectively_equivalent(flow1: SuspensionFlow, flow2: SuspensionFlow, tol: float = 1e-9):
    """Whether ``h1 * r1`` and ``h2 * r2`` are cohomologous.

    Returns ``(flag, c)`` where ``c = h1/h2`` is the constant with
    ``r2 ~ c * r1`` when the flag is set, else ``None``.
    """
    _same_base(flow1, flow2)
    _positive_entropy(flow1, flow2)
    h1, h2 = flow1.entropy, flow2.entropy
    diff = h2 * flow2.roof - h1 * flow1.roof
    scale = max(float(np.max(np.abs(h1 * flow1.roof.values))), 1.0)
    res = livsic_reduce(flow1.base, diff, tol=tol * scale)
    flag = res.is_coboundary and abs(res.c) <= tol * scale
    return flag, (h1 / h2 if flag else None)


class FlowTangent:
    """A tangent direction ``g`` at ``flow``, integrating to zero against Bowen-Margulis."""

    def __init__(self, flow: SuspensionFlow, direction: EdgePotential, tol: float = TANGENT_TOL):
        if direction.graph is not flow.base:
            raise GraphMismatch("direction lives on a different graph")
        m = bowen_margulis(flow)
        residual = integrate(m, direction)
        if abs(residual) > tol:
            raise NotTangent(f"direction integrates to {residual:.3e} against Bowen-Margulis")
        self.flow = flow
        self.direction = direction
        self.residual = residual

    @classmethod
    def project(cls, flow: SuspensionFlow, g: EdgePotential) -> "FlowTangent":
        """Tangent obtained by removing the roof component: ``g - c * roof``."""
        m = bowen_margulis(flow)
        c = integrate(m, g) / integrate(m, flow.roof)
        return cls(flow, g - c * flow.roof)

    def __neg__(self) -> "FlowTangent":
        return FlowTangent(self.flow, -self.direction)


def finsler_norm_flow(flow: SuspensionFlow, tangent: FlowTangent) -> float:
    """``max over invariant m of (int g dm)/(int roof dm)``, attained on a cycle."""
    if tangent.flow.base is not flow.base:
        raise GraphMismatch("tangent belongs to a different flow")
    return max_cycle_ratio(flow.base, tangent.direction, flow.roof).value


def finsler_path_derivative(flow: SuspensionFlow, tangent: FlowTangent, step: float = 1e-3) -> float:
    """Right derivative of ``s -> dth_flow(flow, roof + s*g)`` at 0.

    ``dth`` is nonnegative and vanishes at ``s = 0``, so only the one-sided
    derivative exists.  Forward difference quotients at ``step`` and
    ``step/2`` are combined by Richardson extrapolation.
    """

    def quotient(s):
        moved = SuspensionFlow(flow.base, flow.roof + s * tangent.direction)
        return dth_flow(flow, moved).value / s

    return 2.0 * quotient(step / 2) - quotient(step)


def pressure_norm_flow(
    flow: SuspensionFlow, tangent: FlowTangent, method: str = "variance", step: float = 1e-3
) -> float:
    """Pressure (variance) norm of ``tangent``.

    Computed in the entropy-one chart: ``r = h * roof`` and ``g = h * direction``,
    so ``||g||^2 = P''(-r + s g) / int r dm_{-r}``.  ``method="variance"``
    evaluates the second derivative exactly as an asymptotic variance;
    ``method="stencil"`` differentiates the exact first derivative on a
    5-point stencil at ``step`` (retried at ``step/10`` on negative curvature).
    """
    base = flow.base
    h = flow.entropy
    r = h * flow.roof
    g = h * tangent.direction
    m = equilibrium_measure(base, -r)
    if abs(integrate(m, g)) > TANGENT_TOL * max(1.0, h):
        raise NotTangent("direction is not tangent to the pressure-zero level set")
    if method == "variance":
        second = pressure_second_derivative(base, -r, g)
        second = max(second, 0.0)
    elif method == "stencil":
        second = None
        for hstep in (step, step / 10):
            d1 = [pressure_derivative(base, -r + k * hstep * g, g) for k in (-2, -1, 1, 2)]
            val = (d1[0] - 8 * d1[1] + 8 * d1[2] - d1[3]) / (12 * hstep)
            if val >= -1e-7:
                second = max(val, 0.0)
                break
        if second is None:
            raise NegativeCurvature("second derivative of pressure came out negative")
    else:
        raise ValueError(f"unknown method {method!r}")
    return math.sqrt(second / integrate(m, r))


def pressure_second_difference(g: SubshiftGraph, f: EdgePotential, direction: EdgePotential, step: float) -> float:
    """Plain 5-point second difference of ``s -> P(f + s*direction)`` at 0."""
    p = [pressure(g, f + k * step * direction) for k in (-2, -1, 0, 1, 2)]
    return (-p[0] + 16 * p[1] - 30 * p[2] + 16 * p[3] - p[4]) / (12 * step**2)


def orbit_intersection(a: Cycle, flow1: SuspensionFlow, flow2: SuspensionFlow) -> float:
    """Intersection against the periodic measure of ``a``; equals the period ratio."""
    return intersection(cycle_measure(flow1.base, a), flow1, flow2)
