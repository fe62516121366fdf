"""Quadratic CLF synthesis for linear nominal dynamics and the projected LMI check.

A quadratic ``V(x) = x^T P^{-1} x`` is a CLF for ``xdot = A x + B(u + ...)``
when ``Bperp (A P + P A^T + lam P) Bperp^T <= 0``.  Synthesis here goes through
pole placement and a Lyapunov solve instead of an SDP solver: if
``(A + B K) P + P (A + B K)^T + lam P < 0`` then the projected inequality holds
because ``Bperp B = 0``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CertificateFailed,
    NotControllable,
    NotHurwitz,
    RankDeficient,
    SolveSingular,
)

GRAM_TOL = 1e-12
CONTROLLABILITY_TOL = 1e-9
CERTIFICATE_TOL = 1e-8


@dataclass(frozen=True)
class FinslerCertificate:
    P: np.ndarray
    lam: float
    annihilator: np.ndarray
    max_eig_residual: float
    K: np.ndarray

    @property
    def valid(self):
        return self.max_eig_residual <= CERTIFICATE_TOL


# -- small dense kernels ----------------------------------------------------


def jacobi_eigenvalues(S, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||S||_F)``.  Returned in ascending order.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.zeros(0)
    A = 0.5 * (A + A.T)
    stop = tol * max(1.0, float(np.linalg.norm(A)))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(A * A) - np.sum(np.diag(A) ** 2)))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                # rotation angle that annihilates A[p, q]
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))


def characteristic_polynomial(M):
    """Coefficients ``[1, c1, ..., cn]`` of ``det(sI - M)`` (Faddeev-LeVerrier)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    coeffs = [1.0]
    N = np.eye(n)
    for k in range(1, n + 1):
        MN = M @ N
        c = -np.trace(MN) / k
        coeffs.append(c)
        N = MN + c * np.eye(n)
    return np.array(coeffs)


def routh_hurwitz(coeffs):
    """True iff every root of the polynomial ``coeffs`` (highest power first) has Re < 0."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size == 0:
        return False
    if c[0] < 0:
        c = -c
    if c.size == 1:
        return True
    if np.any(c <= 0):
        return False
    width = (c.size + 1) // 2
    rows = [np.zeros(width), np.zeros(width)]
    rows[0][: len(c[0::2])] = c[0::2]
    rows[1][: len(c[1::2])] = c[1::2]
    first = [rows[0][0], rows[1][0]]
    for _ in range(c.size - 2):
        upper, lower = rows[-2], rows[-1]
        if lower[0] == 0.0:
            return False
        nxt = np.zeros(width)
        for j in range(width - 1):
            nxt[j] = (lower[0] * upper[j + 1] - upper[0] * lower[j + 1]) / lower[0]
        rows.append(nxt)
        first.append(nxt[0])
    return all(v > 0 for v in first)


def is_hurwitz(M):
    return routh_hurwitz(characteristic_polynomial(M))


def controllability_matrix(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(A, B, tol=CONTROLLABILITY_TOL):
    sv = np.linalg.svd(controllability_matrix(A, B), compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0]))) == np.shape(A)[0]


# -- public operations ------------------------------------------------------


def annihilator(B):
    """Orthonormal rows spanning the left null space of ``B`` (shape ``(n-m, n)``)."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n, m = B.shape
    if m > n or np.linalg.det(B.T @ B) <= GRAM_TOL:
        raise RankDeficient(f"B ({n}x{m}) is not full column rank")
    U, _, _ = np.linalg.svd(B, full_matrices=True)
    Bp = U[:, m:].T.copy()
    # sign convention: first non-negligible entry of each row positive
    for row in Bp:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return Bp


def solve_lyapunov(M, Q):
    """Solve ``M P + P M^T + Q = 0`` by Kronecker vectorisation."""
    M = np.asarray(M, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = M.shape[0]
    if not is_hurwitz(M):
        raise NotHurwitz("M has an eigenvalue with non-negative real part")
    eye = np.eye(n)
    # row-major vec: vec(M P) = (M kron I) vec(P), vec(P M^T) = (I kron M) vec(P)
    L = np.kron(M, eye) + np.kron(eye, M)
    if np.linalg.cond(L) > 1e14:
        raise SolveSingular("Kronecker system is numerically singular")
    P = np.linalg.solve(L, -Q.reshape(-1)).reshape(n, n)
    P = 0.5 * (P + P.T)
    # one step of iterative refinement
    R = M @ P + P @ M.T + Q
    P = P + np.linalg.solve(L, -R.reshape(-1)).reshape(n, n)
    P = 0.5 * (P + P.T)
    resid = np.max(np.abs(M @ P + P @ M.T + Q))
    scale = max(np.max(np.abs(Q)), np.max(np.abs(M)) * np.max(np.abs(P)), 1e-300)
    if resid > 1e-9 * scale:
        raise SolveSingular(f"Lyapunov residual {resid:.3e} exceeds tolerance")
    return P


def ackermann(A, b, poles):
    """Gain row ``k`` such that ``A + b k`` has the requested real poles."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    n = A.shape[0]
    C = controllability_matrix(A, b)
    desired = np.poly(poles)
    phi = np.zeros_like(A)
    for c in desired:
        phi = phi @ A + c * np.eye(n)
    e_last = np.zeros(n)
    e_last[-1] = 1.0
    return -np.linalg.solve(C.T, e_last) @ phi


def synthesize_P(A, B, lam, seed=0):
    """Pole placement then a Lyapunov solve; returns a verified FinslerCertificate."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n, m = B.shape
    if not is_controllable(A, B):
        raise NotControllable("(A, B) fails the Kalman rank test")
    poles = [-0.5 * lam - k for k in range(1, n + 1)]
    if m == 1:
        K = ackermann(A, B[:, 0], poles)[None, :]
    else:
        rng = np.random.default_rng(seed)
        for _ in range(100):
            g = rng.standard_normal(m)
            if is_controllable(A, B @ g):
                break
        else:
            raise NotControllable("no single-input mixing of B is controllable")
        K = np.outer(g, ackermann(A, B @ g, poles))
    shifted = A + B @ K + 0.5 * lam * np.eye(n)
    P = solve_lyapunov(shifted, np.eye(n))
    residual = verify_finsler(A, B, P, lam)
    if residual > CERTIFICATE_TOL:
        raise CertificateFailed(f"projected LMI residual {residual:.3e}")
    return FinslerCertificate(P=P, lam=lam, annihilator=annihilator(B), max_eig_residual=residual, K=K)


def verify_finsler(A, B, P, lam):
    """Largest eigenvalue of ``Sym(Bperp (A P + P A^T + lam P) Bperp^T)``.

    Returns ``-inf`` when ``B`` is square (no unactuated directions) and
    ``+inf`` for non-finite input.
    """
    A = np.asarray(A, dtype=float)
    P = np.asarray(P, dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(P)) and np.all(np.isfinite(B))):
        return math.inf
    Bp = annihilator(B)
    if Bp.shape[0] == 0:
        return -math.inf
    S = Bp @ (A @ P + P @ A.T + lam * P) @ Bp.T
    return float(jacobi_eigenvalues(0.5 * (S + S.T))[-1])
