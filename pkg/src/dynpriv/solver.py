"""Deterministic fixed-step ODE integration producing dense trajectories.

Fixed-step RK4 (default) or explicit Euler; no adaptivity, so identical
inputs reproduce bit-identical samples. Masked outputs are recomputed from
the recorded states through the mask bank, never integrated separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .dynamics import (
    MaskedSystem,
    PinnedSync,
    SystemSpec,
    exosystem_field,
    field_masked,
    field_unmasked,
    state_dim,
)

BLOWUP_LIMIT = 1e12


class BlowUpError(RuntimeError):
    """State left the finite range during integration."""

    def __init__(self, t: float, last_time: float, last_state: np.ndarray):
        super().__init__(f"numerical blow-up at t={t:.6g}")
        self.t = t
        self.last_time = last_time
        self.last_state = last_state


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    t_final: float = 50.0
    record_stride: int = 1
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.n_steps > self.max_steps:
            raise ValueError(f"{self.n_steps} steps exceed the configured maximum")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded (t, x, y[, s]) samples on a strictly increasing time grid."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    s: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def to_csv(self, path) -> None:
        """Full-precision CSV: t, x_0.., y_0..[, s_0..], 17 significant digits."""
        d = self.dim
        header = ["t"] + [f"x_{i}" for i in range(d)] + [f"y_{i}" for i in range(d)]
        blocks = [self.times[:, None], self.x, self.y]
        if self.s is not None:
            header += [f"s_{i}" for i in range(self.s.shape[1])]
            blocks.append(self.s)
        data = np.hstack(blocks)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _make_field(system: Union[MaskedSystem, SystemSpec]):
    """Normalize to (joint field fn, state dim, exo dim, bank)."""
    if isinstance(system, MaskedSystem):
        base, bank = system.base, system.bank

        def fieldfn(t, x, s):
            return field_masked(system, t, x, s)

    else:
        base, bank = system, None

        def fieldfn(t, x, s):
            return field_unmasked(system, t, x, s)

    d = state_dim(base)
    if isinstance(base, PinnedSync):
        nu = base.nu
        drift = base.drift

        def joint(t, z):
            x, s = z[:d], z[d:]
            return np.concatenate([fieldfn(t, x, s), exosystem_field(drift, s)])

        return joint, d, nu, bank

    def plain(t, z):
        return fieldfn(t, z, None)

    return plain, d, 0, bank


def integrate(
    system: Union[MaskedSystem, SystemSpec],
    x0: np.ndarray,
    cfg: IntegratorConfig,
    s0: Optional[np.ndarray] = None,
    meta: Optional[dict] = None,
) -> Trajectory:
    """Fixed-step integration from x0 (and s0 for pinned systems).

    Raises BlowUpError carrying the last finite sample if the state exceeds
    the finite range. Given identical inputs the recorded samples are
    bit-identical across runs.
    """
    joint, d, nu, bank = _make_field(system)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d,):
        raise ValueError(f"x0 has shape {x0.shape}, system needs ({d},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    if nu:
        if s0 is None:
            raise ValueError("pinned synchronization needs an exosystem initial state")
        s0 = np.asarray(s0, dtype=float)
        if s0.shape != (nu,):
            raise ValueError(f"s0 has shape {s0.shape}, exosystem needs ({nu},)")
        z = np.concatenate([x0, s0])
    else:
        if s0 is not None:
            raise ValueError("s0 only applies to pinned synchronization")
        z = x0.copy()

    dt = cfg.dt
    n_steps = cfg.n_steps
    rec_times = [0.0]
    rec_states = [z.copy()]
    last_ok_t, last_ok_z = 0.0, z.copy()
    rk4 = cfg.method == "rk4"
    for k in range(n_steps):
        t = k * dt
        if rk4:
            k1 = joint(t, z)
            k2 = joint(t + 0.5 * dt, z + (0.5 * dt) * k1)
            k3 = joint(t + 0.5 * dt, z + (0.5 * dt) * k2)
            k4 = joint(t + dt, z + dt * k3)
            z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            z = z + dt * joint(t, z)
        t_next = (k + 1) * dt
        peak = np.max(np.abs(z))
        if not np.isfinite(peak) or peak > BLOWUP_LIMIT:
            raise BlowUpError(t_next, last_ok_t, last_ok_z)
        last_ok_t, last_ok_z = t_next, z
        if (k + 1) % cfg.record_stride == 0 or (k + 1) == n_steps:
            rec_times.append(t_next)
            rec_states.append(z.copy())

    times = np.array(rec_times)
    states = np.array(rec_states)
    x_part = states[:, :d]
    s_part = states[:, d:] if nu else None
    y_part = bank.eval_series(times, x_part) if bank is not None else x_part.copy()
    return Trajectory(times=times, x=x_part, y=y_part, s=s_part, meta=dict(meta or {}))


def solve_comparison_ode(
    a: float,
    b: float,
    c: float,
    delta1: float,
    delta2: float,
    v0: float,
    cfg: IntegratorConfig,
):
    """Scalar majorant ODE dv/dt = -a v^2 + b v e^{-delta1 t} + c e^{-delta2 t}.

    The state is clamped at 0 from below after every step (the nonnegative
    half-line is invariant for the exact flow). Returns (times, values) on
    the recording grid.
    """
    if a <= 0 or b < 0 or c < 0:
        raise ValueError("need a > 0, b >= 0, c >= 0")
    if delta1 <= 0 or delta2 <= 0:
        raise ValueError("decay rates must be positive")
    if v0 < 0:
        raise ValueError("v0 must be nonnegative")

    def f(t, v):
        return -a * v * v + b * v * np.exp(-delta1 * t) + c * np.exp(-delta2 * t)

    dt = cfg.dt
    n_steps = cfg.n_steps
    v = float(v0)
    rec_t = [0.0]
    rec_v = [v]
    rk4 = cfg.method == "rk4"
    for k in range(n_steps):
        t = k * dt
        if rk4:
            k1 = f(t, v)
            k2 = f(t + 0.5 * dt, v + 0.5 * dt * k1)
            k3 = f(t + 0.5 * dt, v + 0.5 * dt * k2)
            k4 = f(t + dt, v + dt * k3)
            v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            v = v + dt * f(t, v)
        v = max(v, 0.0)
        if not np.isfinite(v) or v > BLOWUP_LIMIT:
            raise BlowUpError((k + 1) * dt, k * dt, np.array([rec_v[-1]]))
        if (k + 1) % cfg.record_stride == 0 or (k + 1) == n_steps:
            rec_t.append((k + 1) * dt)
            rec_v.append(v)
    return np.array(rec_t), np.array(rec_v)
