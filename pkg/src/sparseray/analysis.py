"""Metrics, penalty-landscape scans along the null line, and executable
checks for the closed-form identities the solvers rely on."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

RESIDUE_FLOOR_DB = -300.0


def residue_db(y: np.ndarray, A: np.ndarray, c: np.ndarray) -> float:
    """Data misfit ``20*log10 ||y - A c||``, floored at -300 dB."""
    r = float(np.linalg.norm(y - A @ c))
    if r <= 0:
        return RESIDUE_FLOOR_DB
    return max(20.0 * math.log10(r), RESIDUE_FLOOR_DB)


def normalized_mse(c_true: np.ndarray, c_est: np.ndarray) -> float:
    """Max-normalized mean squared error in dB.

    ``10*log10[(1/N) * || c_true/max|c_true| - c_est/max|c_est| ||^2]``;
    identical (up to positive scale) inputs return the -300 dB floor.
    """
    c_true = np.asarray(c_true)
    c_est = np.asarray(c_est)
    if c_true.shape != c_est.shape:
        raise ValueError("spectra must have the same length")
    mt = np.abs(c_true).max()
    me = np.abs(c_est).max()
    if mt == 0 or me == 0:
        raise ValueError("normalized_mse requires a nonzero max entry in both inputs")
    err = float(np.sum(np.abs(c_true / mt - c_est / me) ** 2) / c_true.size)
    if err <= 0:
        return RESIDUE_FLOOR_DB
    return max(10.0 * math.log10(err), RESIDUE_FLOOR_DB)


@dataclass
class MetricReport:
    mse_db: float
    residue_db: float
    support_precision: float
    support_recall: float
    sigma_n_est: float

    def rows(self):
        return [
            ("mse_db", self.mse_db),
            ("residue_db", self.residue_db),
            ("support_precision", self.support_precision),
            ("support_recall", self.support_recall),
            ("sigma_n_est", self.sigma_n_est),
        ]


def support_metrics(true_support, est_support) -> tuple:
    """(precision, recall) of an estimated support set."""
    t = set(int(i) for i in true_support)
    e = set(int(i) for i in est_support)
    if not e:
        return (1.0 if not t else 0.0), (1.0 if not t else 0.0)
    inter = len(t & e)
    precision = inter / len(e)
    recall = inter / len(t) if t else 1.0
    return precision, recall


# ---------------------------------------------------------------------------
# Penalty landscape along the one-dimensional null line c(v) = c_op + v*a_null
# ---------------------------------------------------------------------------

@dataclass
class LandscapeCurve:
    v_grid: np.ndarray
    penalty: np.ndarray
    method: str

    def local_minima(self, prominence: float = 1e-6):
        return count_local_minima(self.penalty, prominence=prominence)


def count_local_minima(values: np.ndarray, prominence: float = 1e-6):
    """Indices of strict interior local minima with the given prominence.

    Prominence is the smaller of the rises to the highest barrier on each
    side; it screens out float-level wobble in iteratively evaluated curves.
    """
    values = np.asarray(values, dtype=float)
    locs = []
    for i in range(1, values.size - 1):
        if values[i] < values[i - 1] and values[i] < values[i + 1]:
            rise_l = float(np.max(values[:i]) - values[i])
            rise_r = float(np.max(values[i + 1:]) - values[i])
            if min(rise_l, rise_r) > prominence:
                locs.append(i)
    return locs


def _null_vector(A: np.ndarray) -> np.ndarray:
    M, N = A.shape
    if N != M + 1:
        raise ValueError("landscape scan expects N = M + 1")
    u, s, vt = np.linalg.svd(A)
    if s.min() < 1e-10 * s.max():
        raise ValueError("A must have full row rank")
    a = vt[-1]
    lead = a[np.argmax(np.abs(a))]
    return a * np.sign(lead.real if lead.real != 0 else 1.0)


def _sbl_penalty_fixed_noise(A, c, noise_sq, n_iter=300, tol=1e-11):
    """Exact inner minimization of the hierarchical-Gaussian penalty.

    Minimizes ``sum_i tau_i c_i^2 + ln|noise_sq I + A diag(1/tau) A^T|`` over
    the precisions via the monotone reweighting ``u_i = |c_i| / sqrt(z_i)``
    with ``z_i = a_i^T S_y^{-1} a_i`` and ``u = 1/tau`` (each step minimizes a
    tangent majorant of the concave log-det, so the value never increases).
    """
    M, N = A.shape
    c2 = np.abs(c) ** 2
    u = np.ones(N)
    h_prev = np.inf
    h = np.inf
    eye = noise_sq * np.eye(M)
    for _ in range(n_iter):
        Sy = eye + (A * u) @ A.T
        Si = np.linalg.inv(Sy)
        z = np.einsum("mi,mn,ni->i", A, Si, A)
        u = np.sqrt(c2) / np.sqrt(np.maximum(z, 1e-300))
        _, ld = np.linalg.slogdet(eye + (A * u) @ A.T)
        h = float(np.sum(np.where(u > 0, c2 / np.maximum(u, 1e-300), 0.0)) + ld)
        if h_prev - h < tol * max(1.0, abs(h)):
            break
        h_prev = h
    return noise_sq * h


def _blrc_penalty_fixed_noise(A, c, noise_sq, n_grid_pts=160):
    """Exact inner minimization of the Cauchy-scale penalty.

    The scale enters through ``theta_i = 2/(c_i^2 + gamma^2)`` and the
    tightness normalizer ``phi``; the single scalar is minimized by a log-grid
    scan refined with a bounded scalar search.
    """
    from scipy.optimize import minimize_scalar

    M, N = A.shape
    c2 = np.abs(c) ** 2
    eye = noise_sq * np.eye(M)

    def h_of(log_g2):
        g2 = math.exp(log_g2)
        theta = 2.0 / (c2 + g2)
        _, ld = np.linalg.slogdet(eye + (A / theta) @ A.T)
        ln_phi = 0.5 * math.log(g2) + 1.0 + 0.5 * np.log(theta / (2.0 * math.pi)) - theta * g2 / 2.0
        return float(-np.sum(ln_phi) + np.sum(theta * c2) + ld)

    grid = np.linspace(math.log(1e-8), math.log(1e2), n_grid_pts)
    vals = np.array([h_of(g) for g in grid])
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid_pts - 1)]
    res = minimize_scalar(h_of, bounds=(lo, hi), method="bounded")
    return noise_sq * min(float(vals[i]), float(res.fun))


def landscape_scan(
    A: np.ndarray,
    c_op: np.ndarray,
    v_grid: np.ndarray,
    method: str,
    method_params: Optional[dict] = None,
    a_null: Optional[np.ndarray] = None,
) -> LandscapeCurve:
    """Penalty values along ``c(v) = c_op + v * a_null``, normalized to 1 at
    the grid point nearest ``v = 0``.

    Methods: ``lp`` (params: ``p``), ``cg`` (params: ``gamma``), ``sbl`` and
    ``blrc`` (params: ``noise_scale``, default 1.0, the fixed noise level at
    which the hierarchical penalties are evaluated; their scale /
    per-component precisions are minimized out exactly).
    """
    params = dict(method_params or {})
    A = np.asarray(A, dtype=float)
    c_op = np.asarray(c_op, dtype=float)
    if a_null is None:
        a_null = _null_vector(A)
    v_grid = np.asarray(v_grid, dtype=float)
    cv = c_op[None, :] + v_grid[:, None] * a_null[None, :]
    method_l = method.lower()
    if method_l == "lp":
        p = float(params.get("p", 0.01))
        pen = np.sum(np.abs(cv) ** p, axis=1)
        label = f"lp(p={p:g})"
    elif method_l == "cg":
        gamma = float(params.get("gamma", 0.2))
        pen = np.sum(2.0 * np.log1p(cv ** 2 / gamma ** 2), axis=1)
        label = f"cg(gamma={gamma:g})"
    elif method_l == "sbl":
        s2 = float(params.get("noise_scale", 1.0)) ** 2
        pen = np.array([_sbl_penalty_fixed_noise(A, ci, s2) for ci in cv])
        label = "sbl"
    elif method_l == "blrc":
        s2 = float(params.get("noise_scale", 1.0)) ** 2
        pen = np.array([_blrc_penalty_fixed_noise(A, ci, s2) for ci in cv])
        label = "blrc"
    else:
        raise ValueError(f"unknown landscape method '{method}'")
    iz = int(np.argmin(np.abs(v_grid)))
    ref = pen[iz]
    if ref == 0:
        raise ValueError("penalty at v=0 is zero; cannot normalize")
    return LandscapeCurve(v_grid=v_grid, penalty=pen / ref, method=label)


def reference_landscape_instance(seed: int = 1):
    """The shipped 4x5 instance with a one-dimensional null space.

    Entries are standard Gaussian; the sparsest solution has two nonzero
    components placed so that the coordinate zero-crossings along the null
    line sit at ``v = -2`` and ``v = +0.71``.

    Returns ``(A, y, c_op, a_null)``.
    """
    rng = np.random.default_rng(seed)
    M, N = 4, 5
    while True:
        A = rng.standard_normal((M, N))
        _, s, vt = np.linalg.svd(A)
        if s.min() < 1e-10:
            continue
        a_null = vt[-1]
        lead = a_null[np.argmax(np.abs(a_null))]
        a_null = a_null * np.sign(lead)
        if np.min(np.abs(a_null)) > 0.15:
            break
    order = np.argsort(-np.abs(a_null))
    i1, i2 = int(order[0]), int(order[1])
    c_op = np.zeros(N)
    c_op[i1] = 2.0 * a_null[i1]
    c_op[i2] = -0.71 * a_null[i2]
    y = A @ c_op
    return A, y, c_op, a_null


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------

def expectation_identity_check(
    A: np.ndarray,
    mean: np.ndarray,
    cov: np.ndarray,
    y: np.ndarray,
    n_samples: int,
    seed: int,
    chunk: int = 100_000,
) -> float:
    """Monte Carlo check of ``E||y - A c||^2 = ||y - A mean||^2 + Tr(A^H A cov)``.

    ``c`` is drawn Gaussian with the given mean and covariance (circular
    complex when any input is complex).  Returns the relative error between
    the sample mean and the closed form.
    """
    A = np.asarray(A)
    mean = np.asarray(mean)
    cov = np.asarray(cov)
    y = np.asarray(y)
    is_complex = any(np.iscomplexobj(x) for x in (A, mean, cov, y))
    jitter = 1e-12 * max(float(np.abs(np.diag(cov)).max()), 1.0)
    L = np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
    closed = float(np.linalg.norm(y - A @ mean) ** 2
                   + np.einsum("ij,ji->", A.conj().T @ A, cov).real)
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    n = mean.size
    while done < n_samples:
        b = min(chunk, n_samples - done)
        if is_complex:
            g = (rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n))) / math.sqrt(2.0)
        else:
            g = rng.standard_normal((b, n))
        c = mean[None, :] + g @ L.T.conj()
        r = y[None, :] - c @ A.T
        total += float(np.sum(np.abs(r) ** 2))
        done += b
    mc = total / n_samples
    if closed == 0:
        return abs(mc - closed)
    return abs(mc - closed) / abs(closed)


def quadratic_min_identity_check(
    A: np.ndarray,
    y: np.ndarray,
    sigma_diag: np.ndarray,
    sigma_n_sq: float,
) -> float:
    """Check the quadratic-minimum identity used to move penalties into
    coefficient space:

    ``y^H (s2 I + A Sigma^{-1} A^H)^{-1} y`` equals the minimum over ``c`` of
    ``(1/s2)||y - A c||^2 + c^H Sigma c`` (attained at
    ``c_o = (s2 Sigma + A^H A)^{-1} A^H y``).  Returns the relative error.
    """
    A = np.asarray(A)
    y = np.asarray(y)
    d = np.asarray(sigma_diag, dtype=float)
    if np.any(d <= 0):
        raise ValueError("sigma_diag entries must be positive")
    M = A.shape[0]
    inner = sigma_n_sq * np.eye(M) + (A / d) @ A.conj().T
    try:
        lhs = float(np.real(y.conj() @ np.linalg.solve(inner, y)))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"ill-conditioned inner matrix: {exc}") from exc
    c_o = np.linalg.solve(sigma_n_sq * np.diag(d) + A.conj().T @ A, A.conj().T @ y)
    rhs = float(np.linalg.norm(y - A @ c_o) ** 2 / sigma_n_sq
                + np.real(c_o.conj() @ (d * c_o)))
    if lhs == 0:
        return abs(lhs - rhs)
    return abs(lhs - rhs) / abs(lhs)


def gaussian_square_moments(mean: float, var: float) -> tuple:
    """Mean and variance of ``c^2`` for real scalar ``c ~ N(mean, var)``."""
    eta = var + mean ** 2
    xi = 4.0 * mean ** 2 * var + 2.0 * var ** 2
    return eta, xi


def taylor_expectation_check(
    eta_hat: Optional[float],
    xi_hat: Optional[float],
    tau: float,
    mean: float,
    var: float,
    n_points: int = 80,
) -> float:
    """Absolute error of the second-order log-moment approximation.

    Compares ``ln(1 + tau*eta) - tau^2 xi / (2 (1 + tau*eta)^2)`` against
    Gauss-Hermite quadrature of ``E[ln(1 + tau c^2)]`` for real scalar
    ``c ~ N(mean, var)``.  Pass ``None`` for ``eta_hat``/``xi_hat`` to use the
    exact Gaussian moments of ``c^2``.
    """
    if var < 0:
        raise ValueError("var must be nonnegative")
    if eta_hat is None or xi_hat is None:
        eta_hat, xi_hat = gaussian_square_moments(mean, var)
    approx = math.log1p(tau * eta_hat) - tau ** 2 * xi_hat / (2.0 * (1.0 + tau * eta_hat) ** 2)
    if var == 0:
        exact = math.log1p(tau * mean ** 2)
    else:
        nodes, weights = np.polynomial.hermite.hermgauss(n_points)
        c = mean + math.sqrt(2.0 * var) * nodes
        exact = float(np.sum(weights * np.log1p(tau * c ** 2)) / math.sqrt(math.pi))
    return abs(approx - exact)
