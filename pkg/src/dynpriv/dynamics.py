"""Case-study vector fields and their masked wrappers.

Four base systems are provided: a saturated interaction network, the
continuous-time Friedkin-Johnsen opinion model, average consensus on a
weight-balanced digraph, and pinned synchronization of identical
vector-valued agents driven by an exosystem. The masked wrapper replaces
every transmitted state with its masked output; for Friedkin-Johnsen the
anchor term is masked too (the neighbors only ever see outputs), and for
pinned synchronization the exosystem sample enters the pinning term
unmasked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .masks import MaskBank


@dataclass(frozen=True, eq=False)
class TanhDrift:
    """Globally Lipschitz drift f(x) = a @ x + b @ tanh(x)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape or a.shape[0] != a.shape[1]:
            raise ValueError("drift matrices must be square and same shape")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True, eq=False)
class LorenzDrift:
    """Classic Lorenz system; bounded on its attractor but only locally Lipschitz."""

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    @property
    def dim(self) -> int:
        return 3


DriftKind = Union[TanhDrift, LorenzDrift]


def exosystem_field(drift: DriftKind, s: np.ndarray) -> np.ndarray:
    """Drift value ds/dt at a single exosystem state."""
    s = np.asarray(s, dtype=float)
    if isinstance(drift, TanhDrift):
        return drift.a @ s + drift.b @ np.tanh(s)
    if isinstance(drift, LorenzDrift):
        x, y, z = s
        return np.array(
            [drift.sigma * (y - x), x * (drift.rho - z) - y, x * y - drift.beta * z]
        )
    raise TypeError(f"unknown drift {type(drift).__name__}")


def _drift_batch(drift: DriftKind, states: np.ndarray) -> np.ndarray:
    """Drift applied rowwise to an (n, nu) block of agent states."""
    if isinstance(drift, TanhDrift):
        return states @ drift.a.T + np.tanh(states) @ drift.b.T
    x, y, z = states[:, 0], states[:, 1], states[:, 2]
    return np.column_stack(
        [drift.sigma * (y - x), x * (drift.rho - z) - y, x * y - drift.beta * z]
    )


@dataclass(frozen=True, eq=False)
class SaturatedNet:
    """dx/dt = -x + kappa * A @ tanh(x), A nonnegative with zero diagonal."""

    a: np.ndarray
    kappa: float
    enforce_stable: bool = False

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("interaction matrix must be square")
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        if not np.array_equal(off, a):
            raise ValueError("interaction matrix must have zero diagonal")
        if np.any(a < 0):
            raise ValueError("interaction weights must be nonnegative")
        if self.kappa <= 0:
            raise ValueError("coupling gain kappa must be positive")
        if self.enforce_stable:
            radius = float(np.max(np.abs(np.linalg.eigvals(a))))
            if radius <= 0 or self.kappa >= 1.0 / radius:
                raise ValueError("stability requires kappa < 1 / spectral_radius(a)")
        object.__setattr__(self, "a", a)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True, eq=False)
class FriedkinJohnsen:
    """dx/dt = -(L + Theta) x + Theta anchor; anchor is the initial opinion."""

    laplacian: np.ndarray
    theta: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        lap = np.asarray(self.laplacian, dtype=float)
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        anchor = np.atleast_1d(np.asarray(self.anchor, dtype=float))
        n = lap.shape[0]
        if lap.shape != (n, n) or theta.shape != (n,) or anchor.shape != (n,):
            raise ValueError("inconsistent Friedkin-Johnsen dimensions")
        if np.any(theta < 0) or np.any(theta > 1):
            raise ValueError("susceptibilities must lie in [0, 1]")
        if not np.any(theta > 0):
            raise ValueError("at least one susceptibility must be nonzero")
        object.__setattr__(self, "laplacian", lap)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "anchor", anchor)

    @property
    def dim(self) -> int:
        return self.laplacian.shape[0]


@dataclass(frozen=True, eq=False)
class AverageConsensus:
    """dx/dt = -L x with a weight-balanced Laplacian (conservation of the mean)."""

    laplacian: np.ndarray

    def __post_init__(self):
        lap = np.asarray(self.laplacian, dtype=float)
        if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
            raise ValueError("Laplacian must be square")
        if np.max(np.abs(lap.sum(axis=1))) > 1e-9 or np.max(np.abs(lap.sum(axis=0))) > 1e-9:
            raise ValueError("consensus needs a weight-balanced Laplacian")
        object.__setattr__(self, "laplacian", lap)

    @property
    def dim(self) -> int:
        return self.laplacian.shape[0]


@dataclass(frozen=True, eq=False)
class PinnedSync:
    """Diffusively coupled identical agents, some pinned to an exosystem.

    dx_i/dt = f(x_i) - sum_j L[i,j] R x_j - p_i R (x_i - s), with R symmetric
    positive definite and p_i >= 0 (positive exactly on the pinned agents).
    """

    laplacian: np.ndarray
    r: np.ndarray
    pin_gains: np.ndarray
    drift: DriftKind
    nu: int

    def __post_init__(self):
        lap = np.asarray(self.laplacian, dtype=float)
        r = np.asarray(self.r, dtype=float)
        p = np.atleast_1d(np.asarray(self.pin_gains, dtype=float))
        n = lap.shape[0]
        if lap.shape != (n, n) or p.shape != (n,):
            raise ValueError("inconsistent pinned-sync dimensions")
        if r.shape != (self.nu, self.nu):
            raise ValueError("inner coupling matrix shape must be (nu, nu)")
        if np.max(np.abs(r - r.T)) > 1e-12:
            raise ValueError("inner coupling matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(r)) <= 0:
            raise ValueError("inner coupling matrix must be positive definite")
        if np.any(p < 0):
            raise ValueError("pinning gains must be nonnegative")
        if self.drift.dim != self.nu:
            raise ValueError("drift dimension must match nu")
        object.__setattr__(self, "laplacian", lap)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "pin_gains", p)

    @property
    def n_agents(self) -> int:
        return self.laplacian.shape[0]

    @property
    def dim(self) -> int:
        return self.n_agents * self.nu


SystemSpec = Union[SaturatedNet, FriedkinJohnsen, AverageConsensus, PinnedSync]


def state_dim(spec: SystemSpec) -> int:
    return spec.dim


def field_unmasked(
    spec: SystemSpec, t: float, x: np.ndarray, s: Optional[np.ndarray] = None
) -> np.ndarray:
    """Vector field of the bare system; s is required iff the system is pinned."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, PinnedSync):
        if s is None:
            raise ValueError("pinned synchronization needs the exosystem state")
        states = x.reshape(spec.n_agents, spec.nu)
        coupling = (spec.laplacian @ states) @ spec.r
        pinning = spec.pin_gains[:, None] * ((states - s[None, :]) @ spec.r)
        return (_drift_batch(spec.drift, states) - coupling - pinning).reshape(-1)
    if s is not None:
        raise ValueError("exosystem state only applies to pinned synchronization")
    if isinstance(spec, SaturatedNet):
        return -x + spec.kappa * (spec.a @ np.tanh(x))
    if isinstance(spec, FriedkinJohnsen):
        return -(spec.laplacian @ x) - spec.theta * x + spec.theta * spec.anchor
    if isinstance(spec, AverageConsensus):
        return -(spec.laplacian @ x)
    raise TypeError(f"unknown system {type(spec).__name__}")


@dataclass(frozen=True, eq=False)
class MaskedSystem:
    """A base system whose transmitted states are replaced by masked outputs.

    frozen_anchor selects the (incorrect) Friedkin-Johnsen variant that keeps
    the anchor masked at its t=0 value instead of letting the anchor mask
    decay; it demonstrates convergence to a shifted attractor.
    """

    base: SystemSpec
    bank: MaskBank
    frozen_anchor: bool = False

    def __post_init__(self):
        if self.bank.dim != state_dim(self.base):
            raise ValueError(
                f"mask bank has {self.bank.dim} channels, system needs {state_dim(self.base)}"
            )
        if self.frozen_anchor and not isinstance(self.base, FriedkinJohnsen):
            raise ValueError("frozen_anchor only applies to Friedkin-Johnsen")


def field_masked(
    ms: MaskedSystem, t: float, x: np.ndarray, s: Optional[np.ndarray] = None
) -> np.ndarray:
    """Masked vector field: the base field evaluated on y = h(t, x)."""
    y = ms.bank.eval(t, np.asarray(x, dtype=float))
    if isinstance(ms.base, FriedkinJohnsen):
        spec = ms.base
        anchor_t = 0.0 if ms.frozen_anchor else t
        y_anchor = ms.bank.eval(anchor_t, spec.anchor)
        return -(spec.laplacian @ y) - spec.theta * y + spec.theta * y_anchor
    return field_unmasked(ms.base, t, y, s)


def estimate_lipschitz_q(
    drift: DriftKind,
    r: np.ndarray,
    box: tuple,
    samples: int,
    seed,
) -> float:
    """Sampled one-sided Lipschitz constant of the drift relative to R.

    Maximizes (x-z)^T (f(x)-f(z)) / ((x-z)^T R (x-z)) over random pairs in the
    box (half of them nearly coincident, to probe the local derivative), then
    inflates the result 20% away from zero-crossing: positive maxima are
    scaled up, negative maxima are shrunk toward zero. Both directions are
    conservative for the synchronization condition, which only gets harder as
    q grows.
    """
    if samples < 2:
        raise ValueError("need at least 2 sample pairs")
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    rng = np.random.default_rng(seed)
    nu = drift.dim
    m = int(samples)
    x = rng.uniform(lo, hi, size=(m, nu))
    z = rng.uniform(lo, hi, size=(m, nu))
    near = rng.integers(0, 2, size=m).astype(bool)
    z[near] = np.clip(
        x[near] + 1e-4 * rng.standard_normal((int(near.sum()), nu)), lo, hi
    )
    fx = _drift_batch(drift, x)
    fz = _drift_batch(drift, z)
    d = x - z
    num = np.einsum("ij,ij->i", d, fx - fz)
    den = np.einsum("ij,ij->i", d @ np.asarray(r, dtype=float), d)
    keep = den > 1e-14
    if not np.any(keep):
        raise ValueError("all sampled pairs are degenerate")
    q = float(np.max(num[keep] / den[keep]))
    return q * 1.2 if q >= 0 else q / 1.2
