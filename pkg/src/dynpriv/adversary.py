"""Eavesdropper-side reconstruction of initial conditions from observed outputs.

An observer j knows the functional form of the target's vector field and the
output trajectories of its own closed in-neighborhood, nothing else: no
private states, no mask forms or parameters. When the observer's closed
neighborhood covers the target's, the settled output plus a quadrature of
the observed field recovers the target's initial state; with the covering
assumption restored, at least one integrand channel is missing and must be
substituted, which ruins the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netgraph import Digraph

SUBSTITUTION_POLICIES = ("zero", "own_output", "visible_mean")


@dataclass(frozen=True, eq=False)
class EavesdropperView:
    """Outputs visible to one observer, extracted from a trajectory.

    Holds copies of the observed output channels only; the private states and
    the mask bank are unreachable from this object by construction.
    """

    observer: int
    graph: Digraph
    times: np.ndarray
    outputs: dict

    @classmethod
    def from_trajectory(cls, graph: Digraph, observer: int, traj) -> "EavesdropperView":
        if traj.x.shape[1] != graph.n:
            raise ValueError("eavesdropping is defined for scalar-agent trajectories")
        if not (0 <= observer < graph.n):
            raise ValueError(f"observer {observer} out of range")
        visible = sorted(graph.closed_in_neighborhood(observer))
        outputs = {k: traj.y[:, k].copy() for k in visible}
        return cls(
            observer=observer,
            graph=graph,
            times=traj.times.copy(),
            outputs=outputs,
        )


@dataclass(frozen=True)
class ReconstructionResult:
    observer: int
    target: int
    policy: str
    x_hat: float
    missing_channels: tuple


def make_linear_row_field(lap: np.ndarray, target: int):
    """Integrand of a Laplacian-coupled agent: f_i = -sum_k L[i, k] y_k."""
    lap = np.asarray(lap, dtype=float)
    row = lap[target]
    needed = tuple(int(k) for k in np.nonzero(row)[0])

    def row_field(channels: dict) -> np.ndarray:
        total = None
        for k in needed:
            term = -row[k] * channels[k]
            total = term if total is None else total + term
        return total

    return row_field, needed


def _trapezoid(times: np.ndarray, values: np.ndarray) -> float:
    dt = np.diff(times)
    return float(np.sum(0.5 * dt * (values[:-1] + values[1:])))


def reconstruct_initial(
    view: EavesdropperView,
    target: int,
    row_field,
    needed_channels,
    policy: str = "zero",
    settle_tol: float = 1e-6,
) -> ReconstructionResult:
    """Estimate the target's initial state from the observer's viewpoint.

    x_hat = y_target(T) - integral_0^T f_target(observed or substituted
    channels) dt, by composite trapezoid on the recording grid. Channels the
    observer cannot see are filled according to the substitution policy.
    Requires the observed outputs to have settled (terminal increments below
    settle_tol), since the quadrature replaces an infinite-horizon integral.
    """
    if policy not in SUBSTITUTION_POLICIES:
        raise ValueError(f"unknown substitution policy {policy!r}")
    if target not in view.outputs:
        raise ValueError(f"target {target} not observable from agent {view.observer}")
    tail_step = max(
        abs(series[-1] - series[-2]) for series in view.outputs.values()
    )
    if tail_step >= settle_tol:
        raise ValueError(
            f"outputs not settled: terminal increment {tail_step:.3e} >= {settle_tol:g}"
        )
    visible_stack = np.vstack([view.outputs[k] for k in sorted(view.outputs)])
    visible_mean = visible_stack.mean(axis=0)
    channels = {}
    missing = []
    for k in needed_channels:
        if k in view.outputs:
            channels[k] = view.outputs[k]
        else:
            missing.append(k)
            if policy == "zero":
                channels[k] = np.zeros_like(view.times)
            elif policy == "own_output":
                channels[k] = view.outputs[view.observer]
            else:
                channels[k] = visible_mean
    integrand = row_field(channels)
    x_hat = float(view.outputs[target][-1] - _trapezoid(view.times, integrand))
    return ReconstructionResult(
        observer=view.observer,
        target=target,
        policy=policy,
        x_hat=x_hat,
        missing_channels=tuple(missing),
    )


def covering_pairs(g: Digraph):
    """Ordered (observer, target) pairs where the attack is information-complete,
    i.e. the target's closed in-neighborhood sits inside the observer's."""
    closed = [g.closed_in_neighborhood(i) for i in range(g.n)]
    return [
        (j, i)
        for j in range(g.n)
        for i in range(g.n)
        if i != j and closed[i] <= closed[j]
    ]
