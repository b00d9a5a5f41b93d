"""Acceptance suite: one group of checks per criterion, tagged with ``criterion(k)``.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import cmath
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from calibra.calib import (
    catalog,
    comass_estimate,
    evaluate_frames,
    g2_phi,
    g2_psi,
    lagrangian_plane,
    omega_power_normalized,
    random_frame,
    slag_re,
    spin7_phi,
    symplectic_plane,
    wedge_simple,
    wirtinger_check,
)
from calibra.exceptions import NoWitnessError
from calibra.forms import evaluate, omega_k_sum_formula, power
from calibra.rng import make_rng
from calibra.slag import (
    complex_det,
    embed_complex,
    omega_residual,
    preserves_omega_form,
    random_slnc,
    recover_complex_structure,
    slag_squeezing_witness,
)
from calibra.squeeze import GroupSpec, barron_constant, rigidity_witness_symplectic, squeeze_search
from calibra.stab import PowerClass, classify_power_preserver, sample_power_preserver
from calibra.symplin import (
    Ellipsoid,
    k_width_ellipsoid,
    k_width_from_width,
    linear_symplectic_width,
    random_symplectic,
    reflection,
    standard_J,
    standard_omega,
    symplectic_spectrum,
    williamson,
)


def random_spd(m, rng):
    X = rng.standard_normal((m, m))
    return X @ X.T + 0.1 * np.eye(m)


def well_conditioned(m, rng, lo=0.5, hi=2.0):
    Q1, _ = np.linalg.qr(rng.standard_normal((m, m)))
    Q2, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return Q1 @ np.diag(rng.uniform(lo, hi, m)) @ Q2


# -- 1: exact identity for omega^k ---------------------------------------------


@pytest.mark.criterion(1)
def test_c1_omega_power_sum_identity_exact():
    t0 = time.perf_counter()
    rng = make_rng(101)
    for n in range(1, 5):
        w = standard_omega(n, exact=True)
        for k in range(1, n + 1):
            wk = power(w, k)
            for _ in range(100):
                num = rng.integers(-9, 10, size=(2 * k, 2 * n))
                den = rng.integers(1, 10, size=(2 * k, 2 * n))
                us = [[Fraction(int(a), int(b)) for a, b in zip(rn, rd)] for rn, rd in zip(num, den)]
                lhs = omega_k_sum_formula(us, w)
                rhs = evaluate(wk, us)
                assert isinstance(lhs, Fraction) and lhs == rhs
    assert time.perf_counter() - t0 < 60


# -- 2: Williamson -------------------------------------------------------------


@pytest.mark.criterion(2)
def test_c2_williamson_residuals():
    t0 = time.perf_counter()
    rng = make_rng(102)
    worst = 0.0
    for t in range(500):
        m = 2 * (1 + t % 6)
        M = random_spd(m, rng)
        W = williamson(M)
        worst = max(worst, *W.residuals(M))
    assert worst <= 1e-8
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(2)
def test_c2_spectrum_conjugation_invariance():
    t0 = time.perf_counter()
    rng = make_rng(103)
    for t in range(100):
        n = 1 + t % 6
        M = random_spd(2 * n, rng)
        S = random_symplectic(n, seed=103, stream=(t,))
        a = np.asarray(symplectic_spectrum(Ellipsoid.centered(M)).radii)
        b = np.asarray(symplectic_spectrum(Ellipsoid.centered(S.T @ M @ S)).radii)
        assert np.max(np.abs(a - b) / a) <= 1e-7
    assert time.perf_counter() - t0 < 60


# -- 3: width ------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_c3_width_and_k_width():
    rng = make_rng(104)
    for t in range(200):
        n = 1 + t % 4
        r = np.sort(rng.uniform(0.2, 3.0, n))
        E = Ellipsoid.normal_form(r).image(random_symplectic(n, seed=104, stream=(t,)))
        w = linear_symplectic_width(E)
        assert w == pytest.approx(math.pi * r[0] ** 2, rel=1e-7)
        for k in range(1, n + 1):
            assert k_width_ellipsoid(E, k) == k_width_from_width(w, k)


# -- 4: Wirtinger ----------------------------------------------------------------


def complex_frame(n, k, rng):
    """Orthonormal real frame (v1, J v1, ..., vk, J vk) of a random complex k-plane."""
    Z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    Q, _ = np.linalg.qr(Z)
    J = standard_J(n)
    cols = []
    for j in range(k):
        v = np.concatenate([Q[:, j].real, Q[:, j].imag])
        cols += [v, J @ v]
    return np.column_stack(cols)


def perturb(F, eps, rng):
    Q, R = np.linalg.qr(F + eps * rng.standard_normal(F.shape))
    return Q * np.sign(np.diag(R))


@pytest.mark.criterion(4)
@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 5) for k in range(1, n + 1)])
def test_c4_wirtinger(n, k):
    rng = make_rng(105, n, k)
    m = 2 * n
    # Haar frames, complex frames, and complex frames tilted well inside or
    # well outside the equality band.
    frames = [random_frame(m, 2 * k, rng) for _ in range(4000)]
    frames += [complex_frame(n, k, rng) for _ in range(3000)]
    base = [complex_frame(n, k, rng) for _ in range(3000)]
    frames += [perturb(F, 10.0 ** (-7 if i % 2 else -3), rng) for i, F in enumerate(base)]
    values = evaluate_frames(omega_power_normalized(n, k), np.stack(frames))
    assert np.max(np.abs(values)) <= 1 + 1e-12
    for i, F in enumerate(frames):
        res = wirtinger_check(F)
        assert res.value <= 1 + 1e-12
        if 4000 <= i < 7000:
            assert abs(res.value - 1.0) <= 1e-9 and res.is_J_invariant
        assert res.is_equality == res.is_J_invariant


# -- 5: stabilizer classification ------------------------------------------------


@pytest.mark.criterion(5)
def test_c5_tripwire_never_inconsistent():
    rng = make_rng(106)
    counts = {}
    for t in range(10_000):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n + 1))
        kind = t % 4
        if kind == 0:
            A = rng.standard_normal((2 * n, 2 * n))
        else:
            A = sample_power_preserver(n, k, rng)
            if kind == 2:
                A = A + 10.0 ** rng.uniform(-12, -3) * rng.standard_normal(A.shape)
            elif kind == 3:
                A = A * (1 + 10.0 ** rng.uniform(-12, -3))
        v = classify_power_preserver(A, k)
        assert v.classification is not PowerClass.INCONSISTENT
        key = (v.preserves_power, v.classification)
        counts[key] = counts.get(key, 0) + 1
    for key in [(True, PowerClass.SYMPLECTIC), (True, PowerClass.ANTI_SYMPLECTIC),
                (True, PowerClass.VOLUME_ONLY), (False, None)]:
        assert counts.get(key, 0) > 0


@pytest.mark.criterion(5)
def test_c5_volume_only_example():
    # x1 -> 2 x1, x2 -> x2 / 2 in block order (x1, x2, y1, y2)
    v = classify_power_preserver(np.diag([2.0, 0.5, 1.0, 1.0]), 2)
    assert v.preserves_power and v.classification is PowerClass.VOLUME_ONLY


@pytest.mark.criterion(5)
def test_c5_reflection_parity():
    for n in range(2, 7):
        R = reflection(n)
        for k in range(1, n):
            v = classify_power_preserver(R, k)
            if k % 2 == 0:
                assert (v.preserves_power, v.classification) == (True, PowerClass.ANTI_SYMPLECTIC)
            else:
                assert (v.preserves_power, v.classification) == (False, None)


# -- 6: non-squeezing floors -----------------------------------------------------


FLOOR_PAIRS = {
    "sp2-symplectic": (GroupSpec.symplectic(2), symplectic_plane(2)),
    "power32-omega2": (GroupSpec.power_stabilizer(3, 2), symplectic_plane(3, 2)),
    "slnc3-lagrangian": (GroupSpec.slnc(3), lagrangian_plane(3)),
    "iso7-3plane": (GroupSpec.isometry(7), np.eye(7)[:, :3]),
}


@pytest.mark.criterion(6)
@pytest.mark.parametrize("name", list(FLOOR_PAIRS))
def test_c6_floor(name):
    G, L = FLOOR_PAIRS[name]
    t0 = time.perf_counter()
    res = squeeze_search(G, L, r=1.0, restarts=200, budget=2000, seed=6)
    elapsed = time.perf_counter() - t0
    assert 1 - 1e-6 <= res.best_radius <= 1 + 1e-6
    assert min(res.trace) >= 1 - 1e-6
    assert elapsed < 300


@pytest.mark.criterion(6)
def test_c6_lagrangian_counterexample():
    t0 = time.perf_counter()
    res = squeeze_search(GroupSpec.symplectic(2), lagrangian_plane(2), r=1.0, restarts=200, budget=2000, seed=6)
    assert res.best_radius <= 0.1
    assert time.perf_counter() - t0 < 300


# -- 7: rigidity witnesses -------------------------------------------------------


@pytest.mark.criterion(7)
def test_c7_symplectic_witnesses():
    for t in range(50):
        rng = make_rng(107, t)
        n = 1 + t % 3
        Psi = well_conditioned(2 * n, rng, 0.3, 3.0)
        w = rigidity_witness_symplectic(Psi, seed=t)
        assert w is not None and w.lam < 1 and w.radius <= w.lam + 1e-9


@pytest.mark.criterion(7)
def test_c7_slag_witnesses():
    for t in range(50):
        rng = make_rng(108, t)
        n = 1 + t % 4
        M = random_slnc(n, rng) * rng.uniform(0.3, 0.95)
        w = slag_squeezing_witness(embed_complex(M))
        assert w.lam < 1 and w.radius <= w.lam + 1e-9


@pytest.mark.criterion(7)
def test_c7_no_witness_for_preserving_maps():
    for t in range(50):
        A = random_symplectic(1 + t % 3, seed=109, stream=(t,))
        if t % 2:
            A = reflection(A.shape[0] // 2) @ A
        assert rigidity_witness_symplectic(A, seed=t, screen=False) is None
        with pytest.raises(NoWitnessError):
            rigidity_witness_symplectic(A, seed=t)


@pytest.mark.criterion(7)
def test_c7_no_slag_witness_for_unit_det():
    for t in range(50):
        rng = make_rng(110, t)
        n = 1 + t % 4
        M = random_slnc(n, rng) * cmath.exp(1j * rng.uniform(0, 2 * math.pi) / n)
        with pytest.raises(NoWitnessError):
            slag_squeezing_witness(embed_complex(M))


# -- 8: SL(n, C) machinery -------------------------------------------------------


@pytest.mark.criterion(8)
def test_c8_pullback_and_det_paths_agree():
    rng = make_rng(111)
    for t in range(500):
        n = 1 + t % 5
        M = random_slnc(n, rng)
        A = embed_complex(M)
        assert preserves_omega_form(A)
        assert preserves_omega_form(A.T)
        # off the stabilizer: A^* Omega = det_C(A) Omega
        B = embed_complex(M * rng.uniform(0.5, 2.0))
        scale = max(1.0, np.linalg.norm(B, 2)) ** n
        assert omega_residual(B, complex_det(B)) <= 1e-8 * scale
        assert not preserves_omega_form(B) or abs(abs(complex_det(B)) - 1) <= 1e-8 * scale


@pytest.mark.criterion(8)
def test_c8_recover_complex_structure():
    from calibra.calib import holomorphic_volume_form
    from calibra.forms import ComplexKForm, pullback

    rng = make_rng(112)
    for t in range(200):
        n = 1 + t % 4
        A = well_conditioned(2 * n, rng)
        Om = holomorphic_volume_form(n)
        Ups = ComplexKForm(pullback(A, Om.re), pullback(A, Om.im))
        expected = np.linalg.solve(A, standard_J(n) @ A)
        assert np.max(np.abs(recover_complex_structure(Ups) - expected)) <= 1e-6


# -- 9: comass catalog -----------------------------------------------------------


CATALOG_FORMS = {
    "omega1_n3": omega_power_normalized(3, 1),
    "omega2_n3": omega_power_normalized(3, 2),
    "omega3_n3": omega_power_normalized(3, 3),
    "omega2_n4": omega_power_normalized(4, 2),
    "slag_n3_theta0": slag_re(3, 0.0),
    "slag_n3_theta_pi3": slag_re(3, math.pi / 3),
    "wedge_6_3": wedge_simple(6, 3),
    "g2_phi": g2_phi(),
    "g2_psi": g2_psi(),
    "spin7_phi": spin7_phi(),
}


@pytest.mark.criterion(9)
@pytest.mark.parametrize("name", list(CATALOG_FORMS))
def test_c9_comass(name):
    alpha = CATALOG_FORMS[name]
    rep = comass_estimate(alpha, restarts=64, seed=9)
    assert rep.value >= 1 - 1e-6
    rng = make_rng(113)
    frames = np.stack([random_frame(alpha.dim, alpha.degree, rng) for _ in range(10_000)])
    assert np.max(np.abs(evaluate_frames(alpha, frames))) <= 1 + 1e-6
    assert rep.value <= 1 + 1e-6


@pytest.mark.criterion(9)
def test_c9_catalog_lookup_matches():
    assert catalog("slag_re", 3, theta=math.pi / 3) == slag_re(3, math.pi / 3)
    assert catalog("g2_phi") == g2_phi()


# -- 10: Barron constant ---------------------------------------------------------


@pytest.mark.criterion(10)
def test_c10_barron_constant():
    assert barron_constant(1) == 1.0
    assert abs(barron_constant(2) - 24 ** 0.25 / math.sqrt(2)) <= 1e-12
    for k in range(2, 7):
        assert barron_constant(k) > 1
