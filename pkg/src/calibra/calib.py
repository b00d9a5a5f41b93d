"""Calibrations: a small catalog, comass estimation, and cylinder radii.

Frames are ``(dim, k)`` arrays whose columns are the vectors.  A form of
comass one is a calibration; :func:`comass_estimate` returns a certified
lower bound on the comass, never a claim of optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .exceptions import PreconditionError
from .forms import ComplexKForm, KForm, hodge_star, power, wedge_complex
from .parallel import pmap
from .rng import make_rng
from .symplin import standard_J, standard_omega

ORTHONORMAL_TOL = 1e-10

# G2 3-form, 1-based triples with signs; orientation e^1 ^ ... ^ e^7.
_G2_TERMS = (
    ((1, 2, 3), 1),
    ((1, 4, 5), 1),
    ((1, 6, 7), 1),
    ((2, 4, 6), 1),
    ((2, 5, 7), -1),
    ((3, 4, 7), -1),
    ((3, 5, 6), -1),
)


# -- catalog ------------------------------------------------------------------


def holomorphic_volume_form(n: int) -> ComplexKForm:
    """``Omega = dz^1 ^ ... ^ dz^n`` with ``dz^k = e^k + i f^k``."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    out = ComplexKForm(KForm.scalar(2 * n, 1))
    for k in range(n):
        dz = ComplexKForm(KForm(2 * n, 1, {(k,): 1.0}), KForm(2 * n, 1, {(n + k,): 1.0}))
        out = wedge_complex(out, dz)
    return out


def g2_phi() -> KForm:
    return KForm(7, 3, {tuple(i - 1 for i in idx): float(s) for idx, s in _G2_TERMS})


def g2_psi() -> KForm:
    return hodge_star(g2_phi())


def spin7_phi() -> KForm:
    """Cayley form ``e^0 ^ phi + psi`` on R^8, with ``x_0`` the first coordinate."""
    coeffs = {}
    for idx, c in g2_phi().items():
        coeffs[(0,) + tuple(i + 1 for i in idx)] = c
    for idx, c in g2_psi().items():
        coeffs[tuple(i + 1 for i in idx)] = c
    return KForm(8, 4, coeffs)


def omega_power_normalized(n: int, k: int) -> KForm:
    if not 1 <= k <= n:
        raise PreconditionError(f"k must lie in [1, {n}]")
    return power(standard_omega(n), k) * (1.0 / math.factorial(k))


def wedge_simple(dim: int, k: int) -> KForm:
    if not 1 <= k <= dim:
        raise PreconditionError(f"k must lie in [1, {dim}]")
    return KForm(dim, k, {tuple(range(k)): 1.0})


def slag_re(n: int, theta: float = 0.0) -> KForm:
    """``Re(e^{i theta} Omega)`` on R^{2n}."""
    return holomorphic_volume_form(n).real_part(theta)


CATALOG = ("omega_power_normalized", "wedge_simple", "g2_phi", "g2_psi", "spin7_phi", "slag_re", "slag_complex")


def catalog(name: str, n: Optional[int] = None, **params):
    """Look up a named calibration.

    ``n`` is the ambient dimension for ``wedge_simple``, the complex/symplectic
    half-dimension for ``omega_power_normalized``, ``slag_re`` and
    ``slag_complex``, and must be 7 (G2) or 8 (Spin(7)) when given for the
    exceptional forms.  Parameters: ``k`` for the first two, ``theta`` for
    ``slag_re``.
    """
    if name == "g2_phi" or name == "g2_psi":
        if n not in (None, 7):
            raise PreconditionError(f"{name} lives on R^7, got n = {n}")
        return g2_phi() if name == "g2_phi" else g2_psi()
    if name == "spin7_phi":
        if n not in (None, 8):
            raise PreconditionError(f"spin7_phi lives on R^8, got n = {n}")
        return spin7_phi()
    if n is None:
        raise PreconditionError(f"{name} needs a dimension n")
    if name == "omega_power_normalized":
        return omega_power_normalized(n, int(params.get("k", 1)))
    if name == "wedge_simple":
        return wedge_simple(n, int(params.get("k", 1)))
    if name == "slag_re":
        return slag_re(n, float(params.get("theta", 0.0)))
    if name == "slag_complex":
        return holomorphic_volume_form(n)
    raise PreconditionError(f"unknown catalog entry {name!r}; known: {', '.join(CATALOG)}")


# -- frames and evaluation ----------------------------------------------------


def check_orthonormal(frame, tol: float = ORTHONORMAL_TOL) -> np.ndarray:
    F = np.asarray(frame, dtype=float)
    if F.ndim != 2:
        raise PreconditionError("a frame is a 2-D array with vectors as columns")
    err = float(np.max(np.abs(F.T @ F - np.eye(F.shape[1])))) if F.size else 0.0
    if err > tol:
        raise PreconditionError(f"frame is not orthonormal (Gram error {err:.3e})")
    return F


def random_frame(dim: int, k: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((dim, k)))
    return Q * np.sign(np.diag(R))


def _terms(alpha: KForm) -> tuple[np.ndarray, np.ndarray]:
    alpha = alpha.to_float()
    idx = np.array(list(alpha.coeffs.keys()), dtype=int).reshape(len(alpha), alpha.degree)
    cs = np.array(list(alpha.coeffs.values()), dtype=float)
    return idx, cs


def evaluate_frames(alpha: KForm, frames: np.ndarray) -> np.ndarray:
    """Evaluate ``alpha`` on a stack of frames of shape ``(..., dim, k)``."""
    idx, cs = _terms(alpha)
    return _eval(idx, cs, np.asarray(frames, dtype=float))


def _eval(idx: np.ndarray, cs: np.ndarray, V: np.ndarray) -> np.ndarray:
    if len(cs) == 0:
        return np.zeros(V.shape[:-2])
    return np.linalg.det(V[..., idx, :]) @ cs


def _grad(idx: np.ndarray, cs: np.ndarray, V: np.ndarray) -> np.ndarray:
    # f is linear in each column, so df/dV[r, j] = f(V with column j := e_r).
    dim, k = V.shape
    W = np.broadcast_to(V, (k, dim, dim, k)).copy()
    for j in range(k):
        W[j, :, :, j] = np.eye(dim)
    return _eval(idx, cs, W).T


def _retract(V: np.ndarray) -> np.ndarray:
    U, _, Wt = np.linalg.svd(V, full_matrices=False)
    return U @ Wt


@dataclass
class ComassReport:
    value: float
    frame: np.ndarray
    restarts: int
    converged_fraction: float
    restart_values: list = field(default_factory=list)
    traces: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "frame": self.frame.tolist(),
            "restarts": self.restarts,
            "converged_fraction": float(self.converged_fraction),
            "restart_values": [float(v) for v in self.restart_values],
        }


def _ascend(idx, cs, V: np.ndarray, max_iters: int, gain_tol: float = 1e-12):
    f = float(_eval(idx, cs, V))
    if f < 0:
        V = V.copy()
        V[:, 0] = -V[:, 0]
        f = -f
    trace = [f]
    step = 1.0
    for _ in range(max_iters):
        G = _grad(idx, cs, V)
        S = V.T @ G
        D = G - V @ (0.5 * (S + S.T))
        if not np.any(D):
            break
        gnorm = float(np.linalg.norm(D))
        moved = False
        t = step
        for _ in range(60):
            Vn = _retract(V + (t / gnorm) * D)
            fn = float(_eval(idx, cs, Vn))
            if fn > f:
                moved = True
                break
            t *= 0.5
        if not moved:
            break
        gain = fn - f
        V, f = Vn, fn
        trace.append(f)
        step = min(2.0 * t, 1.0)
        if gain <= gain_tol * max(abs(f), 1e-300):
            break
    return V, f, trace


def comass_estimate(alpha: KForm, restarts: int = 16, seed: int = 0, max_iters: int = 500) -> ComassReport:
    """Lower bound on the comass by projected-gradient ascent over orthonormal frames.

    Restart ``i`` starts from an orthonormalized Gaussian frame drawn from
    stream ``(seed, i)``; each run climbs ``|alpha|`` with a polar
    retraction and step halving, so its trace is non-decreasing.  The best
    value is re-evaluated on its returned frame before reporting.
    ``converged_fraction`` is the share of restarts ending within ``1e-6``
    (relative) of the best value.
    """
    if restarts < 1:
        raise PreconditionError("restarts must be >= 1")
    if alpha.degree < 1 or alpha.degree > alpha.dim:
        raise PreconditionError("comass needs 1 <= degree <= dim")
    idx, cs = _terms(alpha)
    dim, k = alpha.dim, alpha.degree

    def run(i):
        V0 = random_frame(dim, k, make_rng(seed, i))
        return _ascend(idx, cs, V0, max_iters)

    results = pmap(run, range(restarts))
    values = [r[1] for r in results]
    best = int(np.argmax(values))  # first index wins ties
    frame = results[best][0]
    value = abs(float(_eval(idx, cs, frame)))
    close = sum(v >= value - 1e-6 * max(1.0, value) for v in values)
    return ComassReport(
        value=value,
        frame=frame,
        restarts=restarts,
        converged_fraction=close / restarts,
        restart_values=values,
        traces=[r[2] for r in results],
    )


def is_calibrated_subspace(alpha: KForm, frame, tol: float = 1e-9) -> bool:
    """Whether ``alpha`` takes value ``>= 1 - tol`` on the ordered orthonormal frame."""
    F = check_orthonormal(frame)
    if F.shape != (alpha.dim, alpha.degree):
        raise PreconditionError(f"frame shape {F.shape} does not fit a {alpha.degree}-form on R^{alpha.dim}")
    return float(evaluate_frames(alpha, F)) >= 1.0 - tol


@lru_cache(maxsize=None)
def _normalized_power(n: int, k: int) -> KForm:
    return omega_power_normalized(n, k)


@dataclass(frozen=True)
class WirtingerResult:
    value: float
    is_equality: bool
    is_J_invariant: bool
    J_residual: float


def wirtinger_check(frame, tol: float = 1e-9) -> WirtingerResult:
    """``|omega^k(frame)| / k!`` and the complex-plane test for its span.

    ``is_J_invariant`` uses the spectral norm of ``(I - P) J P``.  That
    residual is the sine of the largest Kähler angle deficit, while
    ``1 - value`` is quadratic in it, so the threshold is ``sqrt(2 tol)``
    to make the two flags describe the same band.
    """
    F = check_orthonormal(frame)
    m, two_k = F.shape
    if m % 2 or two_k % 2 or two_k == 0:
        raise PreconditionError("need an even number of vectors in an even-dimensional space")
    n, k = m // 2, two_k // 2
    value = abs(float(evaluate_frames(_normalized_power(n, k), F)))
    P = F @ F.T
    res = float(np.linalg.norm((np.eye(m) - P) @ standard_J(n) @ P, 2))
    return WirtingerResult(value, value >= 1.0 - tol, res <= math.sqrt(2.0 * tol), res)


def gram_schmidt_bounded(ws: Sequence[Sequence], exact: Optional[bool] = None) -> list:
    """Orthogonalize without normalizing.

    Returns ``v_j = w_j - sum_{i<j} <w_j, v_i>/<v_i, v_i> v_i``, so that
    ``v_1 ^ ... ^ v_k = w_1 ^ ... ^ w_k`` and ``|v_j| <= |w_j|``.  With
    ``exact`` (default: whenever the input holds Fractions or ints) the
    arithmetic is rational.
    """
    if exact is None:
        exact = all(isinstance(x, (int, Fraction)) for w in ws for x in w)
    if exact:
        W = [[Fraction(x) for x in w] for w in ws]
        out = []
        for w in W:
            v = list(w)
            for u in out:
                uu = sum(a * a for a in u)
                c = sum(a * b for a, b in zip(w, u)) / uu
                v = [a - c * b for a, b in zip(v, u)]
            if not any(v):
                raise PreconditionError("input vectors are linearly dependent")
            out.append(v)
        return out
    W = [np.asarray(w, dtype=float) for w in ws]
    out = []
    for w in W:
        v = w.copy()
        for u in out:
            v = v - (np.dot(w, u) / np.dot(u, u)) * u
        if np.linalg.norm(v) <= 1e-12 * max(1.0, np.linalg.norm(w)):
            raise PreconditionError("input vectors are linearly dependent")
        out.append(v)
    return out


# -- cylinders and enclosing radii --------------------------------------------


@dataclass(frozen=True)
class CalibratedCylinder:
    """``Z_L(R) = {x : |proj_L x| <= R}`` with ``L`` given by orthonormal columns."""

    L: np.ndarray
    R: float

    def __post_init__(self):
        L = check_orthonormal(np.asarray(self.L, dtype=float).reshape(len(self.L), -1))
        if not self.R > 0:
            raise PreconditionError("cylinder radius must be positive")
        object.__setattr__(self, "L", L)

    def contains(self, x) -> bool:
        return cylinder_contains(self, x)


def cylinder_contains(Z: CalibratedCylinder, x) -> bool:
    return float(np.linalg.norm(Z.L.T @ np.asarray(x, dtype=float))) <= Z.R


def symplectic_plane(n: int, k: int = 1) -> np.ndarray:
    """Orthonormal basis of ``span(e_1, f_1, ..., e_k, f_k)`` in R^{2n}."""
    I = np.eye(2 * n)
    return np.column_stack([I[:, j] for i in range(k) for j in (i, n + i)])


def lagrangian_plane(n: int) -> np.ndarray:
    """Orthonormal basis of ``span(e_1, ..., e_n)`` in R^{2n}."""
    return np.eye(2 * n)[:, :n]


def _ball_max(C: np.ndarray, d: np.ndarray, r: float) -> float:
    """``max_{|x| <= r} |C x + d|`` exactly (trust-region secular equation)."""
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    smax = float(s[0]) if s.size else 0.0
    dn = float(np.linalg.norm(d))
    if dn == 0.0:
        return r * smax
    if smax == 0.0:
        return dn
    c = U.T @ d
    perp2 = max(dn * dn - float(c @ c), 0.0)
    s2 = s * s
    cn = float(np.linalg.norm(c))
    if cn == 0.0:
        return math.sqrt((r * smax) ** 2 + perp2)

    def excess(mu):
        y = s * c / (mu - s2)
        return float(y @ y) - r * r

    lo = s2[0] * (1.0 + 1e-14) + 1e-300
    hi = s2[0] + smax * cn / r
    if excess(lo) > 0:
        if excess(hi) > 0:
            hi = s2[0] + 2.0 * smax * cn / r
        mu = optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        z = c * mu / (mu - s2)
        return math.sqrt(float(z @ z) + perp2)
    # Hard case: the top singular direction carries the leftover norm.
    top = np.isclose(s2, s2[0], rtol=1e-14, atol=0.0)
    mu = s2[0]
    y = np.zeros_like(s)
    y[~top] = s[~top] * c[~top] / (mu - s2[~top])
    rest = max(r * r - float(y @ y), 0.0)
    z = s * y + c
    j = int(np.flatnonzero(top)[0])
    z[j] = c[j] + s[j] * math.copysign(math.sqrt(rest), c[j] if c[j] else 1.0)
    return math.sqrt(float(z @ z) + perp2)


def enclosing_radius(L, A, r: float = 1.0, b=None) -> float:
    """Smallest ``R`` with ``A(B(r)) + b`` inside ``Z_L(R)``.

    Equals ``max_{|x| <= r} |L^T (A x + b)|``.  Without translation this is
    ``r sigma_max(L^T A)``; with one it is solved exactly through the
    trust-region secular equation on the SVD of ``L^T A``.
    """
    L = np.asarray(L, dtype=float)
    A = np.asarray(A, dtype=float)
    if r <= 0:
        raise PreconditionError("r must be positive")
    C = L.T @ A
    d = np.zeros(C.shape[0]) if b is None else L.T @ np.asarray(b, dtype=float)
    return _ball_max(C, d, r)


def enclosing_radius_bound(L, A, r: float = 1.0, b=None) -> float:
    """``r sigma_max(L^T A) + |L^T b|``: an upper bound, tight when ``L^T b = 0``."""
    L = np.asarray(L, dtype=float)
    C = L.T @ np.asarray(A, dtype=float)
    t = 0.0 if b is None else float(np.linalg.norm(L.T @ np.asarray(b, dtype=float)))
    return r * float(np.linalg.norm(C, 2)) + t
