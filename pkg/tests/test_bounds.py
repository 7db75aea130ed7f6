from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import closed_form_F, closed_form_mean
from frozen import BOUND_REFERENCE, PUBLISHED_LOWER, PUBLISHED_UPPER
from oracles import bound_reference
from robust_bridge.bounds import (
    SWEEP_HEADER,
    compute_bound,
    compute_F,
    invert_kappa,
    mean_curve,
    sweep_psi,
    write_sweep_csv,
)
from robust_bridge.core import DEFAULT_PARAMS, BridgeParams, Case, Coefficient, TimeGrid
from robust_bridge.errors import InvalidPsi, NotBracketed
from robust_bridge.riccati import solve_A

G4 = TimeGrid(10_000)
G5 = TimeGrid(100_000)


def test_F_closed_form():
    assert compute_F(DEFAULT_PARAMS, G5) == pytest.approx(closed_form_F(), rel=1e-7)
    assert compute_F(DEFAULT_PARAMS, G5) == pytest.approx(0.01074, abs=1e-5)


def test_F_zero_source():
    assert compute_F(DEFAULT_PARAMS.replace(a=0.0), G4) == 0.0


def test_mean_curve_closed_form():
    m = mean_curve(DEFAULT_PARAMS, G4)
    t = G4.nodes()
    assert m[-1] == 0.0 and m[0] == 0.0
    err = np.abs(m - closed_form_mean(t))
    # second order in the interior; the (1-t)^r singularity only costs accuracy near the pin
    assert np.max(err[t <= 0.99]) < 1e-6 * np.max(m)
    assert np.max(err) < 2e-4 * np.max(m)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_F_closed_form_other_r(r):
    p = BridgeParams(0.1, r, 0.5)
    assert compute_F(p, G5) == pytest.approx(closed_form_F(0.1, r), rel=1e-6)


def test_euler_scheme_first_order():
    exact = closed_form_F()
    e1 = abs(compute_F(DEFAULT_PARAMS, TimeGrid(1000), scheme="euler") - exact)
    e2 = abs(compute_F(DEFAULT_PARAMS, TimeGrid(2000), scheme="euler") - exact)
    assert 1.6 < e1 / e2 < 2.4
    with pytest.raises(ValueError):
        mean_curve(DEFAULT_PARAMS, G4, scheme="rk4")


@pytest.mark.parametrize("key", sorted(BOUND_REFERENCE))
def test_bound_matches_frozen_reference(key):
    case, psi = key
    B0, E, kappa, ratio = BOUND_REFERENCE[key]
    res = compute_bound(DEFAULT_PARAMS, case, psi, G5)
    assert res.bound_value == pytest.approx(B0, rel=1e-6)
    assert res.distorted_integral == pytest.approx(E, rel=1e-5)
    assert res.kappa == pytest.approx(kappa, rel=1e-4)
    assert res.count_ratio == pytest.approx(ratio, rel=1e-5)


def test_frozen_reference_reproducible():
    # the frozen numbers come from the adaptive oracle, not from the package
    B0, E = bound_reference(0.03673, 0.71, 0.7252, 10.0, 1)
    assert (B0, E) == pytest.approx(BOUND_REFERENCE[("upper", 10)][:2], rel=1e-9)


@pytest.mark.parametrize("psi", [5, 10, 50, 100, 400])
def test_frozen_reference_agrees_with_published_lower(psi):
    kappa, ratio = PUBLISHED_LOWER[psi]
    _, _, k, c = BOUND_REFERENCE[("lower", psi)]
    assert k == pytest.approx(kappa, rel=0.01) and c == pytest.approx(ratio, rel=0.01)


@pytest.mark.parametrize("psi", [5, 10, 13, 14, 15])
def test_frozen_reference_agrees_with_published_upper(psi):
    kappa, ratio = PUBLISHED_UPPER[psi]
    _, _, k, c = BOUND_REFERENCE[("upper", psi)]
    assert k == pytest.approx(kappa, rel=0.01) and c == pytest.approx(ratio, rel=0.01)


@pytest.mark.parametrize("case", ["lower", "upper"])
def test_psi_zero_null_distortion(case):
    res = compute_bound(DEFAULT_PARAMS, case, 0.0, G5)
    assert res.kappa == 0.0 and math.copysign(1.0, res.kappa) == 1.0
    assert res.count_ratio == pytest.approx(1.0, abs=1e-12)
    assert res.bound_value == pytest.approx(res.benchmark, rel=1e-7)


def test_blow_up_result():
    res = compute_bound(DEFAULT_PARAMS, "upper", 16.0, G4)
    assert res.blow_up
    assert all(math.isnan(x) for x in (res.bound_value, res.distorted_integral,
                                       res.kappa, res.count_ratio))
    assert res.row()[-1] == "true"


def test_supplied_riccati_is_checked():
    sol = solve_A(DEFAULT_PARAMS, "upper", 5.0, G4)
    res = compute_bound(DEFAULT_PARAMS, "upper", 5.0, G4, riccati=sol)
    assert res.riccati is sol
    with pytest.raises(ValueError):
        compute_bound(DEFAULT_PARAMS, "upper", 6.0, G4, riccati=sol)
    with pytest.raises(ValueError):
        compute_bound(DEFAULT_PARAMS, "lower", 5.0, G4, riccati=sol)


def test_negative_psi():
    with pytest.raises(InvalidPsi):
        compute_bound(DEFAULT_PARAMS, "lower", -0.5, G4)
    with pytest.raises(InvalidPsi):
        sweep_psi(DEFAULT_PARAMS, "lower", [1.0, -1.0], G4)


constant_params = st.builds(BridgeParams, a=st.floats(0.001, 1.0), r=st.floats(0.1, 4.0),
                            sigma=st.floats(0.1, 1.5))


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(constant_params, st.lists(st.floats(0.0, 60.0), min_size=2, max_size=5, unique=True))
def test_sandwich_monotone_kappa(p, psis):
    g = TimeGrid(2000)
    psis = sorted(psis)
    lo = sweep_psi(p, "lower", psis, g)
    up = sweep_psi(p, "upper", psis, g)
    F = lo[0].benchmark
    # psi = 0 bound: the exact benchmark (trapezoid of a linear A); F differs by discretisation only
    F0 = compute_bound(p, "lower", 0.0, g).bound_value
    assert F == pytest.approx(F0, rel=1e-3)
    tol = 1e-12 * F0
    # distorted means carry the same kind of discretisation error as F
    disc = 2.0 * abs(F - F0) + tol
    prev_lo, prev_up, prev_kl, prev_ku = math.inf, -math.inf, 0.0, 0.0
    for rl, ru in zip(lo, up):
        assert not rl.blow_up
        assert rl.bound_value <= F0 + tol
        assert rl.kappa >= -rl.psi * disc and rl.bound_value >= rl.distorted_integral - disc
        assert rl.bound_value <= prev_lo + tol and rl.kappa >= prev_kl - rl.psi * disc
        prev_lo, prev_kl = rl.bound_value, rl.kappa
        if ru.blow_up:
            prev_up = math.inf
            continue
        assert prev_up != math.inf, "a finite upper bound after a blow-up"
        assert ru.bound_value >= F0 - tol
        assert ru.kappa >= -ru.psi * disc and ru.distorted_integral >= ru.bound_value - disc
        assert ru.bound_value >= prev_up - tol and ru.kappa >= prev_ku - ru.psi * disc
        prev_up, prev_ku = ru.bound_value, ru.kappa


def test_sweep_order_and_blow_up_kept():
    psis = [15.0, 16.0, 0.0, 5.0]
    res = sweep_psi(DEFAULT_PARAMS, "upper", psis, G4)
    assert [r.psi for r in res] == psis
    assert [r.blow_up for r in res] == [False, True, False, False]
    assert all(r.riccati is None for r in res)
    assert sweep_psi(DEFAULT_PARAMS, "upper", [], G4) == []


def test_sweep_blow_up_location():
    psis = [round(15.0 + 0.1 * i, 10) for i in range(16)]
    res = sweep_psi(DEFAULT_PARAMS, "upper", psis, G4)
    first = next(r.psi for r in res if r.blow_up)
    assert 15.5 <= first <= 16.1
    assert all(r.blow_up for r in res if r.psi >= first)


def test_sweep_parallel_matches_serial(monkeypatch):
    psis = [1.0, 3.0, 16.0]
    serial = sweep_psi(DEFAULT_PARAMS, "upper", psis, TimeGrid(1000), workers=1)
    par = sweep_psi(DEFAULT_PARAMS, "upper", psis, TimeGrid(1000), workers=2)
    for a, b in zip(serial, par):
        assert a.row() == b.row()


def test_invert_kappa_table1():
    psi = invert_kappa(DEFAULT_PARAMS, "lower", 1.73e-1, G4, psi_max=400.0)
    assert psi == pytest.approx(100.0, rel=0.02)
    res = compute_bound(DEFAULT_PARAMS, "lower", psi, G4)
    assert abs(res.kappa - 1.73e-1) <= 1e-6


def test_invert_kappa_zero_and_unbracketed():
    assert invert_kappa(DEFAULT_PARAMS, "upper", 0.0, G4, psi_max=15.0) == 0.0
    with pytest.raises(NotBracketed):
        invert_kappa(DEFAULT_PARAMS, "upper", 10.0, G4, psi_max=15.0)
    with pytest.raises(ValueError):
        invert_kappa(DEFAULT_PARAMS, "upper", -1.0, G4, psi_max=15.0)


def test_invert_kappa_through_blow_up():
    # a psi_max past the blow-up counts as kappa = inf, so the bracket still holds
    psi = invert_kappa(DEFAULT_PARAMS, "upper", 0.5, G4, psi_max=16.0)
    assert 13.0 < psi < 14.0


def test_time_varying_coefficients_run():
    a = Coefficient.sampled([0, 0.5, 1], [0.02, 0.05, 0.01])
    s = Coefficient.sampled([0, 1], [0.6, 0.8])
    p = BridgeParams(a, 0.71, s)
    lo = compute_bound(p, "lower", 10.0, G4)
    up = compute_bound(p, "upper", 10.0, G4)
    assert lo.bound_value <= lo.benchmark <= up.bound_value
    assert lo.kappa > 0 and up.kappa > 0


def test_write_sweep_csv(tmp_path):
    res = sweep_psi(DEFAULT_PARAMS, "upper", [0.0, 10.0, 16.0], G4)
    path = tmp_path / "s.csv"
    write_sweep_csv(res, path)
    text = path.read_text()
    assert text.endswith("\n")
    lines = text.splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert lines[1].startswith("upper,0,") and lines[1].endswith(",false")
    assert lines[3] == "upper,16,nan,nan,nan,nan,true"
    fields = lines[2].split(",")
    assert float(fields[4]) == pytest.approx(0.1127, rel=1e-3)
    assert len(fields[4].replace(".", "").lstrip("0")) <= 12
