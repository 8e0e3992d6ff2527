"""Generic information-geometry estimation engine with the rank-1 split.

The posterior of y = A h + z in natural coordinates has

    theta_or = sigma2^{-1} A^H y,
    precision_or = sigma2^{-1} A^H A + D^{-1}.

The engine splits those into Q auxiliary pieces (b_q, C_q) plus a shared
diagonal Lambda_c,

    sum_q b_q = theta_or,     sum_q C_q + diag(Lambda_c) = precision_or,

assigns each piece to an auxiliary Gaussian with free diagonal parameters
(lambda_q, Lambda_q), and iterates: m-project each auxiliary point onto the
diagonal manifold, exchange the resulting beliefs (xi_q, Xi_q), and update
the target point (lambda_0, Lambda_0) and every auxiliary point.  The linear
e-condition

    sum_q (lambda_q, Lambda_q) + (1 - Q) (lambda_0, Lambda_0) = 0

holds after every update by construction; at a fixed point all projections
coincide with the target (the m-condition) and the target mean solves the
MMSE normal equations.

The classic per-observation instantiation uses rank-1 pieces
C_q = g_q g_q^H with g_q a scaled conjugate row of A; projections then cost
O(N) each through the rank-1 inverse update, never densifying C_q.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DivergenceError, DomainError
from .estimators import MeasurementModel
from .report import EstimateReport

__all__ = [
    "SplitScheme",
    "AuxiliaryState",
    "build_rank1_split",
    "initial_state",
    "project_auxiliary",
    "project_all",
    "update_points",
    "run_iga",
]


@dataclass(frozen=True)
class SplitScheme:
    """Additive split of the posterior natural parameters.

    ``b`` is (Q, N) with row q the mean-parameter piece b_q.  Quadratic
    pieces are either rank-1 factors ``factors`` (Q, N) with
    C_q = factors[q] factors[q]^H, or dense matrices ``dense_C`` (Q, N, N);
    exactly one of the two is set.  ``lambda_c`` is the shared diagonal.
    """

    b: np.ndarray
    lambda_c: np.ndarray
    factors: np.ndarray | None = None
    dense_C: np.ndarray | None = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.complex128)
        lc = np.asarray(self.lambda_c, dtype=np.float64).reshape(-1)
        if b.ndim != 2 or b.shape[1] != lc.size:
            raise DomainError("b must be (Q, N) matching lambda_c")
        if np.any(lc < 0):
            raise DomainError("lambda_c entries must be nonnegative")
        if (self.factors is None) == (self.dense_C is None):
            raise DomainError("exactly one of factors / dense_C must be given")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lambda_c", lc)
        if self.factors is not None:
            f = np.asarray(self.factors, dtype=np.complex128)
            if f.shape != b.shape:
                raise DomainError("factors must have shape (Q, N)")
            object.__setattr__(self, "factors", f)
        else:
            C = np.asarray(self.dense_C, dtype=np.complex128)
            if C.shape != (b.shape[0], lc.size, lc.size):
                raise DomainError("dense_C must have shape (Q, N, N)")
            object.__setattr__(self, "dense_C", C)

    @property
    def q_count(self) -> int:
        return self.b.shape[0]

    @property
    def dim(self) -> int:
        return self.b.shape[1]

    def theta_or(self) -> np.ndarray:
        """sum_q b_q, the mean natural parameter being split."""
        return self.b.sum(axis=0)

    def precision_apply(self, x: np.ndarray) -> np.ndarray:
        """(sum_q C_q + diag(lambda_c)) x without densifying rank-1 pieces."""
        if self.factors is not None:
            gx = self.factors.conj() @ x
            out = self.factors.T @ gx
        else:
            out = np.einsum("qij,j->i", self.dense_C, x)
        return out + self.lambda_c * x


@dataclass(frozen=True)
class AuxiliaryState:
    """Diagonal natural parameters of the Q auxiliary points and the target."""

    lam_q: np.ndarray  # (Q, N) complex
    Lam_q: np.ndarray  # (Q, N) real
    lam0: np.ndarray  # (N,) complex
    Lam0: np.ndarray  # (N,) real
    iteration: int = 0

    def e_condition_residual(self) -> float:
        """Max absolute violation of sum_q (.) + (1 - Q) (.)_0 = 0."""
        q = self.lam_q.shape[0]
        r1 = np.abs(self.lam_q.sum(axis=0) + (1 - q) * self.lam0).max()
        r2 = np.abs(self.Lam_q.sum(axis=0) + (1 - q) * self.Lam0).max()
        return float(max(r1, r2))


def build_rank1_split(model: MeasurementModel, y) -> SplitScheme:
    """Per-observation rank-1 split: one piece per received sample.

    With a_q the q-th column of A^H, the pieces are
    b_q = sigma2^{-1} a_q y_q and C_q = sigma2^{-1} a_q a_q^H, with
    Lambda_c = D^{-1}; the split identities then hold exactly by
    construction.  C_q is kept in factored form g_q = a_q / sigma_z.
    """
    A = model._require_dense("build_rank1_split")
    y = model.check_y(y)
    s = 1.0 / model.sigma2
    rows_conj = A.conj()  # row q of this is a_q^T
    b = s * rows_conj * y[:, None]
    factors = rows_conj / np.sqrt(model.sigma2)
    return SplitScheme(b=b, lambda_c=1.0 / model.d, factors=factors)


def initial_state(scheme: SplitScheme) -> AuxiliaryState:
    """All-zero start: lambda_c alone carries the covariance, and the
    e-condition holds trivially."""
    q, n = scheme.q_count, scheme.dim
    return AuxiliaryState(
        lam_q=np.zeros((q, n), dtype=np.complex128),
        Lam_q=np.zeros((q, n), dtype=np.float64),
        lam0=np.zeros(n, dtype=np.complex128),
        Lam0=np.zeros(n, dtype=np.float64),
        iteration=0,
    )


def _project_all_rank1(scheme: SplitScheme, state: AuxiliaryState):
    """Vectorized m-projection of all Q auxiliary points (rank-1 pieces).

    The auxiliary precision is diag(w) + g g^H with w = Lambda_q + lambda_c,
    so its inverse is one diagonal solve plus a rank-1 correction; means and
    diagonal covariances of all points come out in O(Q N).
    """
    w = state.Lam_q + scheme.lambda_c[None, :]
    if np.any(w <= 0):
        raise DomainError("auxiliary covariance lost positivity (Lambda_q + lambda_c <= 0)")
    g = scheme.factors
    m = state.lam_q + scheme.b
    g_over_w = g / w
    denom = 1.0 + np.sum((g.conj() * g).real / w, axis=1)  # (Q,)
    gHm = np.sum(g.conj() * m / w, axis=1)  # (Q,)
    mu = m / w - g_over_w * (gHm / denom)[:, None]
    var = 1.0 / w - (np.abs(g) ** 2 / w**2) / denom[:, None]
    theta0 = mu / var
    Lam0 = 1.0 / var - scheme.lambda_c[None, :]
    xi = theta0 - state.lam_q
    Xi = Lam0 - state.Lam_q
    return xi, Xi


def _project_one_dense(scheme: SplitScheme, state: AuxiliaryState, q: int):
    w = state.Lam_q[q] + scheme.lambda_c
    if np.any(w <= 0):
        raise DomainError("auxiliary covariance lost positivity (Lambda_q + lambda_c <= 0)")
    P = scheme.dense_C[q] + np.diag(w.astype(np.complex128))
    m = state.lam_q[q] + scheme.b[q]
    cf = scipy.linalg.cho_factor(0.5 * (P + P.conj().T))
    mu = scipy.linalg.cho_solve(cf, m)
    Sigma = scipy.linalg.cho_solve(cf, np.eye(scheme.dim, dtype=np.complex128))
    var = np.real(np.diag(Sigma))
    xi = mu / var - state.lam_q[q]
    Xi = (1.0 / var - scheme.lambda_c) - state.Lam_q[q]
    return xi, Xi


def project_auxiliary(scheme: SplitScheme, state: AuxiliaryState, q: int):
    """Belief (xi_q, Xi_q) of auxiliary point q after m-projection.

    Projects the point with precision Lambda_q + C_q + lambda_c and mean
    parameter lambda_q + b_q onto the diagonal manifold and returns the
    natural-parameter increments relative to (lambda_q, Lambda_q).
    """
    if not (0 <= q < scheme.q_count):
        raise DomainError(f"auxiliary index {q} out of range")
    if scheme.factors is not None:
        xi, Xi = _project_all_rank1(scheme, state)
        return xi[q], Xi[q]
    return _project_one_dense(scheme, state, q)


def project_all(scheme: SplitScheme, state: AuxiliaryState):
    """Beliefs of all Q auxiliary points, stacked as (Q, N) arrays.

    Projections for distinct q are independent; the rank-1 path computes the
    whole batch in one vectorized pass.
    """
    if scheme.factors is not None:
        return _project_all_rank1(scheme, state)
    pairs = [_project_one_dense(scheme, state, q) for q in range(scheme.q_count)]
    return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])


def update_points(state: AuxiliaryState, xi: np.ndarray, Xi: np.ndarray,
                  alpha: float, lambda_c: np.ndarray | None = None) -> AuxiliaryState:
    """Damped belief exchange.

    Undamped: lambda_0 <- sum_q xi_q, Lambda_0 <- sum_q Xi_q, and
    lambda_q <- lambda_0 - xi_q (likewise for precisions).  With damping
    alpha each parameter moves only a fraction alpha of the way; since both
    endpoints satisfy the e-condition, so does the combination.
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    lam0_new = xi.sum(axis=0)
    Lam0_new = Xi.sum(axis=0)
    lam_q_new = lam0_new[None, :] - xi
    Lam_q_new = Lam0_new[None, :] - Xi
    lam0 = alpha * lam0_new + (1 - alpha) * state.lam0
    Lam0 = alpha * Lam0_new + (1 - alpha) * state.Lam0
    lam_q = alpha * lam_q_new + (1 - alpha) * state.lam_q
    Lam_q = alpha * Lam_q_new + (1 - alpha) * state.Lam_q
    if lambda_c is not None and np.any(Lam0 + lambda_c <= 0):
        raise DivergenceError(
            "target precision lost positivity; reduce the damping coefficient alpha"
        )
    return AuxiliaryState(lam_q=lam_q, Lam_q=Lam_q, lam0=lam0, Lam0=Lam0,
                          iteration=state.iteration + 1)


def run_iga(scheme: SplitScheme, alpha: float = 0.05, t_max: int = 100,
            tol: float = 1e-8) -> EstimateReport:
    """Iterate project/update until the target mean settles.

    The target mean is mu_0 = lambda_0 / (Lambda_0 + lambda_c) and the
    reported variances are 1 / (Lambda_0 + lambda_c).  Stops when the max
    relative change of mu_0 drops below ``tol`` or after ``t_max``
    iterations; raises :class:`DivergenceError` when the normal-equation
    residual grows for 20 consecutive iterations.
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    t_start = time.perf_counter()
    state = initial_state(scheme)
    theta = scheme.theta_or()
    theta_norm = float(np.linalg.norm(theta))
    if theta_norm == 0.0:
        theta_norm = 1.0

    def residual(mu):
        return float(np.linalg.norm(scheme.precision_apply(mu) - theta)) / theta_norm

    def target_mean(st):
        return st.lam0 / (st.Lam0 + scheme.lambda_c)

    mu = target_mean(state)
    trace = [residual(mu)]
    converged = False
    rising = 0
    for _ in range(t_max):
        xi, Xi = project_all(scheme, state)
        try:
            state = update_points(state, xi, Xi, alpha, lambda_c=scheme.lambda_c)
        except DivergenceError as exc:
            exc.trace = trace
            raise
        mu_new = target_mean(state)
        trace.append(residual(mu_new))
        if trace[-1] > trace[-2]:
            rising += 1
            if rising >= 20:
                raise DivergenceError(
                    "residual increased for 20 consecutive iterations", trace=trace
                )
        else:
            rising = 0
        change = np.abs(mu_new - mu).max() / max(np.abs(mu_new).max(), 1e-300)
        mu = mu_new
        if change < tol:
            converged = True
            break
    variances = 1.0 / (state.Lam0 + scheme.lambda_c)
    return EstimateReport(
        mu=mu,
        variances=variances,
        residual_trace=trace,
        iterations=state.iteration,
        converged=converged,
        wall_time=time.perf_counter() - t_start,
        config={"algorithm": "iga", "alpha": alpha, "t_max": t_max, "tol": tol},
    )
