import numpy as np
import pytest

from dynpriv.dynamics import (
    AverageConsensus,
    FriedkinJohnsen,
    LorenzDrift,
    MaskedSystem,
    PinnedSync,
    SaturatedNet,
    TanhDrift,
    estimate_lipschitz_q,
    exosystem_field,
    field_masked,
    field_unmasked,
)
from dynpriv.masks import MaskBank, MaskKind, choose_params
from dynpriv.netgraph import cycle_graph, erdos_renyi, laplacian


def _cycle_lap(n=3):
    return laplacian(cycle_graph(n))


def _tanh_drift():
    return TanhDrift(
        a=-np.eye(3),
        b=np.array([[1.2, -0.8, 0.0], [0.8, 1.2, -0.6], [0.0, 0.6, 1.2]]),
    )


def _privacy_bank(dim, seed, kind=MaskKind.VANISHING_AFFINE, lam=1.0):
    rng = np.random.default_rng(seed)
    return MaskBank([(kind, choose_params(kind, lam, rng.uniform(-3, 3), rng)) for _ in range(dim)])


def test_consensus_field_zero_on_agreement():
    spec = AverageConsensus(laplacian=_cycle_lap())
    assert np.allclose(field_unmasked(spec, 0.0, np.full(3, 4.2)), 0.0)


def test_satnet_field_zero_at_origin():
    a = np.array([[0.0, 1.0], [2.0, 0.0]])
    spec = SaturatedNet(a=a, kappa=0.3)
    assert np.allclose(field_unmasked(spec, 0.0, np.zeros(2)), 0.0)


def _gauss_solve(a, b):
    # elimination oracle with partial pivoting, independent of numpy.linalg
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    for col in range(n - 1):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def test_fj_field_zero_at_equilibrium():
    lap = _cycle_lap()
    theta = np.array([1.0, 1.0, 1.0])
    x0 = np.array([1.0, 0.0, 0.0])
    spec = FriedkinJohnsen(laplacian=lap, theta=theta, anchor=x0)
    x_star = _gauss_solve(lap + np.diag(theta), theta * x0)
    assert np.max(np.abs(field_unmasked(spec, 0.0, x_star))) <= 1e-12


def test_pinned_field_requires_exosystem():
    spec = PinnedSync(
        laplacian=_cycle_lap(),
        r=np.eye(3),
        pin_gains=np.array([1.0, 0.0, 0.0]),
        drift=_tanh_drift(),
        nu=3,
    )
    with pytest.raises(ValueError, match="exosystem"):
        field_unmasked(spec, 0.0, np.zeros(9))
    with pytest.raises(ValueError, match="exosystem"):
        field_unmasked(AverageConsensus(laplacian=_cycle_lap()), 0.0, np.zeros(3), s=np.zeros(3))


def test_pinned_field_matches_blockwise_reference():
    spec = PinnedSync(
        laplacian=_cycle_lap(),
        r=np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.5]]),
        pin_gains=np.array([2.0, 0.0, 0.0]),
        drift=_tanh_drift(),
        nu=3,
    )
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 2, 9)
    s = rng.uniform(-1, 1, 3)
    got = field_unmasked(spec, 0.0, x, s)
    lap = spec.laplacian
    for i in range(3):
        xi = x[3 * i : 3 * i + 3]
        expect = spec.drift.a @ xi + spec.drift.b @ np.tanh(xi)
        for j in range(3):
            expect = expect - lap[i, j] * (spec.r @ x[3 * j : 3 * j + 3])
        expect = expect - spec.pin_gains[i] * (spec.r @ (xi - s))
        assert np.allclose(got[3 * i : 3 * i + 3], expect)


@pytest.mark.parametrize("kind", ["satnet", "fj", "consensus", "pinned"])
def test_identity_bank_reproduces_unmasked_field(kind):
    rng = np.random.default_rng(5)
    if kind == "satnet":
        spec = SaturatedNet(a=np.array([[0.0, 1.0], [2.0, 0.0]]), kappa=0.3)
        x, s = rng.uniform(-3, 3, 2), None
    elif kind == "fj":
        spec = FriedkinJohnsen(
            laplacian=_cycle_lap(), theta=np.array([0.5, 0.2, 0.9]), anchor=rng.uniform(0, 1, 3)
        )
        x, s = rng.uniform(-3, 3, 3), None
    elif kind == "consensus":
        spec = AverageConsensus(laplacian=_cycle_lap())
        x, s = rng.uniform(-3, 3, 3), None
    else:
        spec = PinnedSync(
            laplacian=_cycle_lap(),
            r=np.eye(3),
            pin_gains=np.array([1.0, 0.0, 0.0]),
            drift=_tanh_drift(),
            nu=3,
        )
        x, s = rng.uniform(-3, 3, 9), rng.uniform(-1, 1, 3)
    ms = MaskedSystem(base=spec, bank=MaskBank.identity(x.size))
    t = 0.7
    assert np.array_equal(field_masked(ms, t, x, s), field_unmasked(spec, t, x, s))


def test_masked_consensus_conserves_mean_direction():
    lap = laplacian(erdos_renyi(8, 0.5, seed=2, symmetric=True))
    spec = AverageConsensus(laplacian=lap)
    bank = _privacy_bank(8, seed=6)
    ms = MaskedSystem(base=spec, bank=bank)
    rng = np.random.default_rng(7)
    for t in (0.0, 0.3, 5.0):
        dx = field_masked(ms, t, rng.uniform(-4, 4, 8))
        assert abs(np.ones(8) @ dx) <= 1e-12


def test_masked_field_nonzero_at_unmasked_equilibria():
    # masked dynamics cannot rest where the unmasked dynamics do
    rng = np.random.default_rng(8)
    lap = _cycle_lap()
    cases = []
    cases.append((SaturatedNet(a=np.array([[0.0, 1.0], [2.0, 0.0]]), kappa=0.3), np.zeros(2), None))
    anchor = np.full(3, 1.3)
    cases.append((FriedkinJohnsen(laplacian=lap, theta=np.array([0.5, 0.5, 0.5]), anchor=anchor), anchor, None))
    cases.append((AverageConsensus(laplacian=lap), np.full(3, -0.7), None))
    cases.append(
        (
            PinnedSync(
                laplacian=lap,
                r=np.eye(3),
                pin_gains=np.array([2.0, 0.0, 0.0]),
                drift=_tanh_drift(),
                nu=3,
            ),
            np.zeros(9),
            np.zeros(3),
        )
    )
    for spec, x_eq, s in cases:
        assert np.max(np.abs(field_unmasked(spec, 0.0, x_eq, s))) <= 1e-12
        bank = _privacy_bank(x_eq.size, seed=rng.integers(1 << 30))
        ms = MaskedSystem(base=spec, bank=bank)
        assert np.max(np.abs(field_masked(ms, 0.0, x_eq, s))) > 0


def test_fj_masked_anchor_tracks_mask_clock():
    lap = _cycle_lap()
    anchor = np.array([1.0, 2.0, 3.0])
    spec = FriedkinJohnsen(laplacian=lap, theta=np.full(3, 0.5), anchor=anchor)
    bank = _privacy_bank(3, seed=21)
    live = MaskedSystem(base=spec, bank=bank)
    frozen = MaskedSystem(base=spec, bank=bank, frozen_anchor=True)
    x = np.array([0.3, -0.1, 0.4])
    assert np.array_equal(field_masked(live, 0.0, x), field_masked(frozen, 0.0, x))
    assert not np.array_equal(field_masked(live, 5.0, x), field_masked(frozen, 5.0, x))


def test_frozen_anchor_restricted_to_fj():
    spec = AverageConsensus(laplacian=_cycle_lap())
    with pytest.raises(ValueError, match="frozen_anchor"):
        MaskedSystem(base=spec, bank=MaskBank.identity(3), frozen_anchor=True)


def test_bank_dimension_must_match_system():
    spec = AverageConsensus(laplacian=_cycle_lap())
    with pytest.raises(ValueError, match="channels"):
        MaskedSystem(base=spec, bank=MaskBank.identity(2))


def test_exosystem_lipschitz_zero_at_origin():
    assert np.allclose(exosystem_field(_tanh_drift(), np.zeros(3)), 0.0)


def test_exosystem_lorenz_hand_value():
    drift = LorenzDrift(sigma=10.0, rho=28.0, beta=8.0 / 3.0)
    ds = exosystem_field(drift, np.array([1.0, 1.0, 1.0]))
    assert np.allclose(ds, [0.0, 26.0, 1.0 - 8.0 / 3.0])


def test_exosystem_deterministic():
    drift = LorenzDrift()
    s = np.array([2.0, -1.0, 0.5])
    assert np.array_equal(exosystem_field(drift, s), exosystem_field(drift, s))


def test_lipschitz_q_linear_contraction():
    # f(x) = -x has exact pairwise ratio -1; inflation shrinks toward zero
    drift = TanhDrift(a=-np.eye(2), b=np.zeros((2, 2)))
    q = estimate_lipschitz_q(drift, np.eye(2), (np.full(2, -3.0), np.full(2, 3.0)), 500, seed=1)
    assert q == pytest.approx(-1.0 / 1.2)


def test_lipschitz_q_linear_expansion():
    # f(x) = 2x has exact ratio 2; safety factor takes it to 2.4
    drift = TanhDrift(a=2.0 * np.eye(2), b=np.zeros((2, 2)))
    q = estimate_lipschitz_q(drift, np.eye(2), (np.full(2, -3.0), np.full(2, 3.0)), 500, seed=1)
    assert q == pytest.approx(2.0 * 1.2)


def test_lipschitz_q_seeded_reproducible():
    drift = _tanh_drift()
    box = (np.full(3, -3.0), np.full(3, 3.0))
    q1 = estimate_lipschitz_q(drift, np.eye(3), box, 2000, seed=42)
    q2 = estimate_lipschitz_q(drift, np.eye(3), box, 2000, seed=42)
    assert q1 == q2
    assert np.isfinite(q1)


def test_lipschitz_q_degenerate_box_errors():
    drift = _tanh_drift()
    box = (np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError, match="degenerate"):
        estimate_lipschitz_q(drift, np.eye(3), box, 50, seed=0)


def test_satnet_validation():
    with pytest.raises(ValueError, match="zero diagonal"):
        SaturatedNet(a=np.eye(2), kappa=0.5)
    with pytest.raises(ValueError, match="nonnegative"):
        SaturatedNet(a=np.array([[0.0, -1.0], [1.0, 0.0]]), kappa=0.5)
    with pytest.raises(ValueError, match="stability"):
        SaturatedNet(a=np.array([[0.0, 1.0], [1.0, 0.0]]), kappa=2.0, enforce_stable=True)


def test_fj_validation():
    lap = _cycle_lap()
    with pytest.raises(ValueError, match="nonzero"):
        FriedkinJohnsen(laplacian=lap, theta=np.zeros(3), anchor=np.zeros(3))
    with pytest.raises(ValueError, match="0, 1"):
        FriedkinJohnsen(laplacian=lap, theta=np.array([2.0, 0.0, 0.0]), anchor=np.zeros(3))


def test_consensus_requires_balance():
    unbalanced = laplacian(cycle_graph(3))
    unbalanced[0, 1] -= 0.5  # break a column sum
    unbalanced[0, 0] += 0.5  # keep the row sum
    with pytest.raises(ValueError, match="weight-balanced"):
        AverageConsensus(laplacian=unbalanced)


def test_pinned_validation():
    with pytest.raises(ValueError, match="positive definite"):
        PinnedSync(
            laplacian=_cycle_lap(),
            r=-np.eye(3),
            pin_gains=np.zeros(3),
            drift=_tanh_drift(),
            nu=3,
        )
    with pytest.raises(ValueError, match="nonnegative"):
        PinnedSync(
            laplacian=_cycle_lap(),
            r=np.eye(3),
            pin_gains=np.array([-1.0, 0.0, 0.0]),
            drift=_tanh_drift(),
            nu=3,
        )
