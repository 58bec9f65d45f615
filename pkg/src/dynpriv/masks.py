"""Time-varying output masks applied channelwise before states are shared.

Every supported mask is a special case of the affine template

    h(t, x) = c * (1 + phi * exp(-sigma * t)) * (x + gamma * exp(-delta * t))

with per-channel parameters. The kinds differ only in which parameters are
active:

    identity            c=1, phi=0, gamma=0
    linear              gain (1 + phi e^{-sigma t}) only
    additive            offset gamma e^{-delta t} only
    affine              static gain c > 1 plus decaying offset
    vanishing_affine    decaying gain plus decaying offset

Masks are strictly increasing in x for every fixed t, hence invertible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

ROUNDTRIP_TOL = 1e-12
DEFAULT_RATE_RANGE = (0.5, 2.0)


class MaskKind(enum.Enum):
    IDENTITY = "identity"
    LINEAR = "linear"
    ADDITIVE = "additive"
    AFFINE = "affine"
    VANISHING_AFFINE = "vanishing_affine"


#: Kinds that qualify as privacy masks (parameters can enforce any metric floor).
PRIVACY_KINDS = (MaskKind.ADDITIVE, MaskKind.AFFINE, MaskKind.VANISHING_AFFINE)


@dataclass(frozen=True)
class MaskParams:
    """Per-channel mask parameters; fields unused by a kind stay None."""

    phi: Optional[float] = None
    sigma: Optional[float] = None
    gamma: Optional[float] = None
    delta: Optional[float] = None
    c: Optional[float] = None


_REQUIRED = {
    MaskKind.IDENTITY: (),
    MaskKind.LINEAR: ("phi", "sigma"),
    MaskKind.ADDITIVE: ("gamma", "delta"),
    MaskKind.AFFINE: ("c", "gamma", "delta"),
    MaskKind.VANISHING_AFFINE: ("phi", "sigma", "gamma", "delta"),
}


def _validate(kind: MaskKind, p: MaskParams) -> None:
    required = _REQUIRED[kind]
    for name in ("phi", "sigma", "gamma", "delta", "c"):
        val = getattr(p, name)
        if name in required:
            if val is None:
                raise ValueError(f"{kind.value} mask requires parameter {name}")
        elif val is not None:
            raise ValueError(f"{kind.value} mask does not take parameter {name}")
    if kind is MaskKind.LINEAR:
        if p.phi < 0 or p.sigma <= 0:
            raise ValueError("linear mask needs phi >= 0 and sigma > 0")
    elif kind is MaskKind.ADDITIVE:
        if p.gamma == 0 or p.delta <= 0:
            raise ValueError("additive mask needs gamma != 0 and delta > 0")
    elif kind is MaskKind.AFFINE:
        if p.c <= 1 or p.gamma == 0 or p.delta <= 0:
            raise ValueError("affine mask needs c > 1, gamma != 0, delta > 0")
    elif kind is MaskKind.VANISHING_AFFINE:
        if p.phi <= 0 or p.sigma <= 0 or p.gamma == 0 or p.delta <= 0:
            raise ValueError(
                "vanishing_affine mask needs phi > 0, sigma > 0, gamma != 0, delta > 0"
            )


class MaskBank:
    """One mask kind + parameter set per scalar state channel.

    The bank is immutable after construction and evaluates all channels in a
    single vectorized pass.
    """

    def __init__(self, channels) -> None:
        channels = list(channels)
        if not channels:
            raise ValueError("mask bank needs at least one channel")
        kinds = []
        params = []
        for kind, p in channels:
            _validate(kind, p)
            kinds.append(kind)
            params.append(p)
        self.kinds: tuple = tuple(kinds)
        self.params: tuple = tuple(params)
        # Compiled coefficient arrays; neutral values keep inactive terms inert.
        self._c = np.array([p.c if p.c is not None else 1.0 for p in params])
        self._phi = np.array([p.phi if p.phi is not None else 0.0 for p in params])
        self._sigma = np.array([p.sigma if p.sigma is not None else 1.0 for p in params])
        self._gamma = np.array([p.gamma if p.gamma is not None else 0.0 for p in params])
        self._delta = np.array([p.delta if p.delta is not None else 1.0 for p in params])

    @property
    def dim(self) -> int:
        return len(self.kinds)

    @classmethod
    def identity(cls, dim: int) -> "MaskBank":
        return cls([(MaskKind.IDENTITY, MaskParams())] * dim)

    @classmethod
    def auto(
        cls,
        kind: MaskKind,
        privacy_level: float,
        x0: np.ndarray,
        seed,
        rate_range: tuple = DEFAULT_RATE_RANGE,
    ) -> "MaskBank":
        """One choose_params draw per channel of x0, all of the same kind."""
        rng = np.random.default_rng(seed)
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        return cls(
            [(kind, choose_params(kind, privacy_level, xi, rng, rate_range)) for xi in x0]
        )

    def _scale(self, t) -> np.ndarray:
        return self._c * (1.0 + self._phi * np.exp(-self._sigma * np.asarray(t)))

    def _offset(self, t) -> np.ndarray:
        return self._gamma * np.exp(-self._delta * np.asarray(t))

    def eval(self, t: float, x: np.ndarray) -> np.ndarray:
        """Masked output y = h(t, x), channelwise."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"state has shape {x.shape}, bank expects ({self.dim},)")
        if t < 0:
            raise ValueError("mask time must be nonnegative")
        return self._scale(t) * (x + self._offset(t))

    def eval_series(self, times: np.ndarray, states: np.ndarray) -> np.ndarray:
        """Vectorized eval over a (len(times), dim) array of states."""
        times = np.asarray(times, dtype=float)[:, None]
        states = np.asarray(states, dtype=float)
        scale = self._c * (1.0 + self._phi * np.exp(-self._sigma * times))
        offset = self._gamma * np.exp(-self._delta * times)
        return scale * (states + offset)

    def invert(self, t: float, y: np.ndarray) -> np.ndarray:
        """Exact inverse x = h^{-1}(t, y); every kind is bijective in x."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ValueError(f"output has shape {y.shape}, bank expects ({self.dim},)")
        if t < 0:
            raise ValueError("mask time must be nonnegative")
        return y / self._scale(t) - self._offset(t)

    def min_decay_rate(self) -> float:
        """Slowest active decay rate across channels (inf for static banks)."""
        rates = []
        for kind, p in zip(self.kinds, self.params):
            if p.sigma is not None:
                rates.append(p.sigma)
            if p.delta is not None:
                rates.append(p.delta)
        return min(rates) if rates else np.inf

    def translated(self, t0: float) -> "MaskBank":
        """Bank whose clock starts at t0, i.e. h'(t, x) = h(t + t0, x).

        Translation stays inside the mask family: the decaying gain and
        offset amplitudes shrink by exp(-sigma t0) and exp(-delta t0). Used
        to probe attractivity uniformly over the mask start time.
        """
        if t0 < 0:
            raise ValueError("clock offset must be nonnegative")
        channels = []
        for kind, p in zip(self.kinds, self.params):
            phi = p.phi * float(np.exp(-p.sigma * t0)) if p.phi is not None else None
            gamma = p.gamma * float(np.exp(-p.delta * t0)) if p.gamma is not None else None
            channels.append(
                (kind, MaskParams(phi=phi, sigma=p.sigma, gamma=gamma, delta=p.delta, c=p.c))
            )
        return MaskBank(channels)


def eval_mask(bank: MaskBank, t: float, x: np.ndarray) -> np.ndarray:
    return bank.eval(t, x)


def invert_mask(bank: MaskBank, t: float, y: np.ndarray) -> np.ndarray:
    return bank.invert(t, y)


def privacy_metric(bank: MaskBank, x0: np.ndarray):
    """Per-channel t=0 gap |h(0, x0) - x0| and its minimum over channels."""
    x0 = np.asarray(x0, dtype=float)
    rho_i = np.abs(bank.eval(0.0, x0) - x0)
    return rho_i, float(np.min(rho_i))


def choose_params(
    kind: MaskKind,
    privacy_level: float,
    x0_i: float,
    rng,
    rate_range: tuple = DEFAULT_RATE_RANGE,
) -> MaskParams:
    """Draw parameters guaranteeing a t=0 gap of at least 2 * privacy_level.

    The factor-2 margin keeps the strict inequality rho > privacy_level safe
    under floating-point evaluation. For the kinds whose gap depends on the
    state, the offset sign is aligned with the agent's own x0_i so the terms
    cannot cancel.
    """
    if privacy_level <= 0:
        raise ValueError("privacy level must be positive")
    if kind not in PRIVACY_KINDS:
        raise ValueError(f"{kind.value} is not a privacy mask")
    rng = np.random.default_rng(rng) if isinstance(rng, (int, np.integer)) else rng
    lo, hi = rate_range
    delta = float(rng.uniform(lo, hi))
    gamma_mag = float(rng.uniform(2.0, 4.0)) * privacy_level
    if kind is MaskKind.ADDITIVE:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return MaskParams(gamma=sign * gamma_mag, delta=delta)
    sign = np.sign(x0_i) if x0_i != 0 else 1.0
    if kind is MaskKind.AFFINE:
        c = float(rng.uniform(1.2, 2.5))
        # gap |(c-1) x0 + c gamma| >= c |gamma| >= 2 * privacy_level when aligned
        return MaskParams(c=c, gamma=sign * gamma_mag, delta=delta)
    phi = float(rng.uniform(0.5, 2.0))
    sigma = float(rng.uniform(lo, hi))
    # gap |phi x0 + (1 + phi) gamma| >= (1 + phi) |gamma| when aligned
    return MaskParams(phi=phi, sigma=sigma, gamma=sign * gamma_mag, delta=delta)


@dataclass(frozen=True)
class MaskAxiomReport:
    """Outcome of the executable mask-axiom checks on a sampling grid.

    local                 each output channel depends only on its own state
    fixed_point_free      h(0, x) != x at every sampled state
    escapes_neighborhoods no sampled state has a ball mapped into itself at t=0
    strictly_increasing   h(t, .) strictly increasing at every sampled time
    vanishing             sup-over-states gap decreasing in t and below the
                          tail threshold at the final sampled time
    """

    local: bool
    fixed_point_free: bool
    escapes_neighborhoods: bool
    strictly_increasing: bool
    vanishing: bool
    witnesses: dict

    def as_dict(self) -> dict:
        return {
            "local": self.local,
            "fixed_point_free": self.fixed_point_free,
            "escapes_neighborhoods": self.escapes_neighborhoods,
            "strictly_increasing": self.strictly_increasing,
            "vanishing": self.vanishing,
        }


def check_mask_axioms(
    bank: MaskBank,
    times: np.ndarray,
    states: np.ndarray,
    ball_radii: tuple = (0.01, 0.1),
    tail_rel: float = 1e-8,
    tail_abs: float = 1e-12,
) -> MaskAxiomReport:
    """Numerically verify the mask axioms on a times x states grid.

    states is a shared scalar probe grid applied to every channel; it should
    be symmetric around 0 and include 0 (homogeneous masks fail exactly
    there). The vanishing check uses the supremum of the gap over the state
    grid, which is the uniform-convergence quantity that makes the masked
    dynamics collapse onto the unmasked ones; the pointwise gap need not be
    monotone when a state and its channel offset have opposite signs.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if times.size == 0 or states.size == 0:
        raise ValueError("sampling grid must be non-empty")
    if times[0] != 0.0:
        raise ValueError("time grid must start at 0 (the t=0 axioms need it)")
    d = bank.dim
    witnesses: dict = {}

    # locality: perturbing channel k moves output channel k only
    base = np.full(d, 0.37)
    local = True
    for t in (0.0, float(times[-1])):
        y_base = bank.eval(t, base)
        for k in range(d):
            probe = base.copy()
            probe[k] += 1.234
            diff = bank.eval(t, probe) - y_base
            moved = np.nonzero(diff)[0]
            if not np.array_equal(moved, [k]):
                local = False
                witnesses["local"] = {"channel": k, "t": t}
                break
        if not local:
            break

    # channelwise grids: rows = channels, cols = probe states
    probes = np.broadcast_to(states, (d, states.size))
    scale0 = bank._scale(0.0)[:, None]
    offset0 = bank._offset(0.0)[:, None]
    h0 = scale0 * (probes + offset0)

    gap0 = np.abs(h0 - probes)
    fixed = gap0 <= 1e-12 * np.maximum(1.0, np.abs(probes))
    fixed_point_free = not bool(fixed.any())
    if not fixed_point_free:
        ch, st = np.argwhere(fixed)[0]
        witnesses["fixed_point_free"] = {"channel": int(ch), "state": float(states[st])}

    # neighborhood escape at t=0: a ball B(x*, r) is preserved iff its image
    # stays inside; with h monotone in x the sup over the ball is attained at
    # the endpoints, probed slightly inside so the identity map still counts
    # as preserving.
    escapes = True
    for r in ball_radii:
        lo = scale0 * (probes - 0.999 * r + offset0)
        hi = scale0 * (probes + 0.999 * r + offset0)
        preserved = (np.abs(lo - probes) < r) & (np.abs(hi - probes) < r)
        if preserved.any():
            escapes = False
            ch, st = np.argwhere(preserved)[0]
            witnesses["escapes_neighborhoods"] = {
                "channel": int(ch),
                "state": float(states[st]),
                "radius": float(r),
            }
            break

    # strict monotonicity in x at sampled times
    order = np.argsort(states)
    increasing = True
    for t in times[:: max(1, len(times) // 8)]:
        h_t = bank._scale(t)[:, None] * (probes[:, order] + bank._offset(t)[:, None])
        if not np.all(np.diff(h_t, axis=1) > 0):
            increasing = False
            witnesses["strictly_increasing"] = {"t": float(t)}
            break

    # uniform vanishing: sup-over-states gap per channel, strictly decreasing
    # and below the tail threshold at the final grid time
    scale_t = bank._c[None, :] * (1.0 + bank._phi[None, :] * np.exp(-bank._sigma[None, :] * times[:, None]))
    offset_t = bank._gamma[None, :] * np.exp(-bank._delta[None, :] * times[:, None])
    # gaps: (times, channels, states)
    gaps = np.abs(
        scale_t[:, :, None] * (probes[None, :, :] + offset_t[:, :, None]) - probes[None, :, :]
    )
    sup_gap = gaps.max(axis=2)
    tail_ok = sup_gap[-1] < tail_rel * sup_gap[0] + tail_abs
    diffs = np.diff(sup_gap, axis=0)
    floor = tail_abs
    decreasing = np.all((diffs < 0) | (sup_gap[1:] < floor), axis=0)
    vanishing = bool(np.all(tail_ok & decreasing))
    if not vanishing:
        bad = int(np.argmin(tail_ok & decreasing))
        witnesses["vanishing"] = {
            "channel": bad,
            "initial_sup_gap": float(sup_gap[0, bad]),
            "final_sup_gap": float(sup_gap[-1, bad]),
        }

    return MaskAxiomReport(
        local=local,
        fixed_point_free=fixed_point_free,
        escapes_neighborhoods=escapes,
        strictly_increasing=increasing,
        vanishing=vanishing,
        witnesses=witnesses,
    )


def mask_norm_bounds(bank: MaskBank, t: float, x: np.ndarray):
    """Two-sided bound on ||x||_2 from the masked output at time t.

    Returns (lower, upper) with lower <= ||x|| <= upper, where
    lower = ||y|| / k - zeta(t), upper = ||y|| + zeta(t), k is the largest
    t=0 channel gain and zeta(t) = ||offset(t)||_2. Only masks of affine
    structure (additive, affine, vanishing_affine) keep the channel gains
    >= 1, which the upper bound needs.
    """
    for kind in bank.kinds:
        if kind not in PRIVACY_KINDS:
            raise ValueError(f"norm bounds need affine-structure masks, got {kind.value}")
    y = bank.eval(t, x)
    k = float(np.max(bank._scale(0.0)))
    zeta = float(np.linalg.norm(bank._offset(t)))
    y_norm = float(np.linalg.norm(y))
    return y_norm / k - zeta, y_norm + zeta
