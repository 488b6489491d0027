"""Least-squares and L1-penalized regression with cross-validated scoring.

The penalized objective minimized by :func:`lasso_fit` is

    (1/n) * ||y - intercept - X @ beta||^2
        + lam * (alpha * ||beta||_1 + (1 - alpha)/2 * ||beta||_2^2)

with ``alpha = 1`` (pure L1) by default. The intercept is unpenalized and
handled by centering unless ``penalize_intercept=True``, which instead treats
it as an ordinary coordinate of the descent.

Coordinate descent caches the Gram matrix G = Xc.T @ Xc so a full sweep over
m coordinates costs O(m^2) regardless of n. Every fit can be certified after
the fact with :func:`kkt_violation`, which recomputes the stationarity
conditions from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

MAX_SWEEPS = 10_000
SWEEP_TOL = 1e-7
RIDGE_SCALE = 1e-10


class ConvergenceError(RuntimeError):
    """Coordinate descent hit the sweep cap before the update norm tolerance.

    Carries the last iterate so a caller can inspect how bad things are.
    """

    def __init__(self, message: str, coefficients: np.ndarray, intercept: float,
                 kkt: float, n_sweeps: int):
        super().__init__(message)
        self.coefficients = coefficients
        self.intercept = intercept
        self.kkt = kkt
        self.n_sweeps = n_sweeps


class DegeneratePathError(ValueError):
    """The response is constant, so every penalty level yields the null model."""


@dataclass(frozen=True)
class RegressionFit:
    """A fitted linear model y ~ intercept + X @ coefficients."""

    coefficients: np.ndarray  # (m,)
    intercept: float
    residual_sum_squares: float
    kind: str  # "ols" or "lasso"
    lam: float = 0.0  # 0 for OLS
    alpha: float = 1.0
    n_sweeps: int = 0
    converged: bool = True
    ridged: bool = False
    penalized_intercept: bool = False

    def __post_init__(self) -> None:
        coef = np.asarray(self.coefficients, dtype=float)
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        if self.residual_sum_squares < 0.0:
            raise ValueError(f"negative RSS {self.residual_sum_squares}")

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients + self.intercept

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.coefficients))


@dataclass(frozen=True)
class LambdaPath:
    lambdas: tuple[float, ...]  # strictly decreasing, lambdas[0] = lambda_max
    lambda_max: float

    def __post_init__(self) -> None:
        if len(self.lambdas) < 2:
            raise ValueError("a penalty path needs at least 2 points")
        if any(b >= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("penalty path must be strictly decreasing")


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if y.ndim != 1:
        raise ValueError(f"y must be 1-D, got shape {y.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] < 1:
        raise ValueError("need at least one observation")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("X and y must be finite")
    return X, y


def _solve_spd(G: np.ndarray, c: np.ndarray, force_ridge: bool) -> tuple[np.ndarray, bool]:
    """Solve G @ b = c for symmetric PSD G, ridging the diagonal if needed.

    The ridge is RIDGE_SCALE * mean(diag(G)), enough to make a rank-deficient
    Gram matrix positive definite without visibly moving a well-posed solution.
    """
    m = G.shape[0]
    if m == 0:
        return np.zeros(0), False
    if not force_ridge:
        try:
            return scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), c), False
        except np.linalg.LinAlgError:
            pass
        except scipy.linalg.LinAlgError:  # pragma: no cover - alias on most builds
            pass
    tr = float(np.trace(G))
    eps = RIDGE_SCALE * (tr / m if tr > 0 else 1.0)
    Gr = G + eps * np.eye(m)
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(Gr), c), True


def ols_fit(X: np.ndarray, y: np.ndarray) -> RegressionFit:
    """Ordinary least squares via centered normal equations.

    When the Gram matrix is singular (for example n <= m, or duplicated
    columns) a tiny ridge proportional to the average diagonal is added and
    the fit is flagged ``ridged=True``.
    """
    X, y = _check_xy(X, y)
    n, m = X.shape
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    G = Xc.T @ Xc
    c = Xc.T @ (y - y_mean)
    beta, ridged = _solve_spd(G, c, force_ridge=n <= m)
    intercept = y_mean - float(x_mean @ beta)
    r = y - X @ beta - intercept
    return RegressionFit(beta, intercept, float(r @ r), kind="ols", ridged=ridged)


def lambda_max(X: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> float:
    """Smallest penalty for which the L1 solution is all-zero.

    Computed on centered data: max_j |(2/n) x_j . (y - mean(y))| / alpha.
    """
    X, y = _check_xy(X, y)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    return float(np.max(np.abs((2.0 / n) * (Xc.T @ yc)))) / alpha


def lambda_path(
    X: np.ndarray,
    y: np.ndarray,
    n_points: int = 100,
    ratio: float = 1e-3,
    alpha: float = 1.0,
) -> LambdaPath:
    """Geometric grid of penalties from lambda_max down to lambda_max*ratio."""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    lmax = lambda_max(X, y, alpha=alpha)
    if lmax <= 0.0:
        raise DegeneratePathError(
            "response is constant after centering; no feature carries signal"
        )
    lambdas = lmax * ratio ** (np.arange(n_points) / (n_points - 1))
    return LambdaPath(tuple(float(v) for v in lambdas), lmax)


def _cd(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    alpha: float,
    beta0: np.ndarray | None,
) -> tuple[np.ndarray, int, bool]:
    """Cyclic coordinate descent on (1/n)||y - X b||^2 + penalty, no intercept.

    Returns (beta, n_sweeps, converged). Gram-cached: q = G @ beta is kept in
    sync so each coordinate costs one m-length axpy. Between full sweeps the
    descent iterates only the active (nonzero) set; convergence is declared
    only when a sweep over all coordinates meets the tolerance.
    """
    n, m = X.shape
    G = X.T @ X
    c = X.T @ y
    yty = float(y @ y)
    beta = np.zeros(m) if beta0 is None else np.array(beta0, dtype=float)
    q = G @ beta
    diag = np.diag(G).copy()
    two_n = 2.0 / n
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)

    def one_sweep(idx) -> float:
        nonlocal q
        worst = 0.0
        for j in idx:
            if diag[j] <= 0.0:
                continue  # constant column after centering: coefficient stays 0
            old = beta[j]
            rho = two_n * (c[j] - q[j] + diag[j] * old)
            z = abs(rho) - l1
            new = 0.0 if z <= 0.0 else np.sign(rho) * z / (two_n * diag[j] + l2)
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                q += G[:, j] * delta
                worst = max(worst, abs(delta))
        return worst

    def objective() -> float:
        # (1/n)||y - X b||^2 + penalty, residual norm via the cached Gram
        data = (yty - 2.0 * float(c @ beta) + float(beta @ q)) / n
        return (data + l1 * float(np.sum(np.abs(beta)))
                + 0.5 * l2 * float(beta @ beta))

    def try_jump() -> bool:
        # Descent crawls when strongly correlated columns share the active
        # set, yet the minimizer restricted to the current signs is a tiny
        # linear solve. Accept the solved point only when it keeps every
        # sign and strictly lowers the objective, so a jump stays on the
        # same descent trajectory toward the same fixed point.
        nonlocal q
        act = np.flatnonzero(beta)
        if not act.size:
            return False
        signs = np.sign(beta[act])
        H = two_n * G[np.ix_(act, act)] + l2 * np.eye(act.size)
        try:
            b = np.linalg.solve(H, two_n * c[act] - l1 * signs)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(b)) or np.any(np.sign(b) != signs):
            return False
        q_trial = G[:, act] @ b
        data = (yty - 2.0 * float(c[act] @ b) + float(b @ q_trial[act])) / n
        trial = (data + l1 * float(np.sum(np.abs(b)))
                 + 0.5 * l2 * float(b @ b))
        if not trial < objective():
            return False
        beta[:] = 0.0
        beta[act] = b
        q = q_trial
        return True

    everything = range(m)
    prev_obj = objective()
    sweeps = 0
    while sweeps < MAX_SWEEPS:
        sweeps += 1
        md = one_sweep(everything)
        obj = objective()
        if obj > prev_obj + 1e-9 * (1.0 + abs(prev_obj)):
            raise AssertionError(
                f"objective increased across a sweep: {prev_obj} -> {obj}"
            )
        prev_obj = obj
        scale = 1.0 + (float(np.max(np.abs(beta))) if m else 0.0)
        if md < SWEEP_TOL * scale:
            return beta, sweeps, True
        active = np.flatnonzero(beta)
        stalled = 0
        while sweeps < MAX_SWEEPS and active.size:
            sweeps += 1
            md = one_sweep(active)
            scale = 1.0 + float(np.max(np.abs(beta)))
            if md < SWEEP_TOL * scale:
                break
            stalled += 1
            if stalled >= 5:
                stalled = 0
                try_jump()
    return beta, sweeps, False


def lasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    alpha: float = 1.0,
    penalize_intercept: bool = False,
    warm_start: RegressionFit | None = None,
) -> RegressionFit:
    """L1-penalized (optionally elastic net) least squares by coordinate descent.

    Raises ConvergenceError if the sweep cap is reached first; the exception
    carries the final iterate and its KKT violation.
    """
    X, y = _check_xy(X, y)
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    m = X.shape[1]
    beta0 = None
    if warm_start is not None and warm_start.coefficients.shape == (m,):
        beta0 = warm_start.coefficients

    if penalize_intercept:
        # the intercept rides along as one more penalized coordinate on an
        # appended column of ones; no centering anywhere
        Xa = np.hstack([X, np.ones((X.shape[0], 1))])
        b0 = None if beta0 is None else np.append(beta0, 0.0)
        ball, sweeps, ok = _cd(Xa, y, lam, alpha, b0)
        beta, intercept = ball[:m], float(ball[m])
    else:
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
        beta, sweeps, ok = _cd(X - x_mean, y - y_mean, lam, alpha, beta0)
        intercept = y_mean - float(x_mean @ beta)

    r = y - X @ beta - intercept
    fit = RegressionFit(
        beta, intercept, float(r @ r), kind="lasso", lam=lam, alpha=alpha,
        n_sweeps=sweeps, converged=ok, penalized_intercept=penalize_intercept,
    )
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge in {MAX_SWEEPS} sweeps "
            f"(lam={lam:g}, alpha={alpha:g})",
            coefficients=beta, intercept=intercept,
            kkt=kkt_violation(X, y, fit), n_sweeps=sweeps,
        )
    return fit


def lasso_path_fits(
    X: np.ndarray,
    y: np.ndarray,
    path: LambdaPath,
    alpha: float = 1.0,
    penalize_intercept: bool = False,
    truncate_on_nonconvergence: bool = False,
    stop_r2: float | None = None,
    min_support: int = 0,
) -> list[RegressionFit]:
    """Fit every penalty on the path, warm-starting each from the previous.

    With ``truncate_on_nonconvergence`` the walk stops at the first penalty
    whose fit hits the sweep cap (rank-deficient designs can make coordinate
    descent arbitrarily slow at tiny penalties) and the converged prefix is
    returned; otherwise the ConvergenceError propagates. The prefix is never
    empty: at lambda_max the zero vector is already stationary.

    ``stop_r2`` stops the walk once a fit's training R^2 reaches that level:
    past interpolation, weaker penalties only rebalance coefficients among
    collinear columns (and descend ever more slowly), so the rest of the path
    carries no additional model-selection information. ``min_support`` holds
    that stop back until a fit has grown at least this many nonzero
    coefficients, so a caller that needs a given support size always gets the
    chance to see one when the path can provide it.
    """
    fits: list[RegressionFit] = []
    prev: RegressionFit | None = None
    yc = y - y.mean()
    tss = float(yc @ yc)
    for lam in path.lambdas:
        try:
            prev = lasso_fit(
                X, y, lam, alpha=alpha,
                penalize_intercept=penalize_intercept, warm_start=prev,
            )
        except ConvergenceError:
            if truncate_on_nonconvergence and fits:
                return fits
            raise
        fits.append(prev)
        if (
            stop_r2 is not None
            and tss > 0.0
            and len(prev.support) >= min_support
            and 1.0 - prev.residual_sum_squares / tss >= stop_r2
        ):
            return fits
    return fits


def kkt_violation(X: np.ndarray, y: np.ndarray, fit: RegressionFit) -> float:
    """Maximum stationarity violation of a penalized fit, from scratch.

    For the pure L1 objective the conditions are, with g_j = (2/n) x_j . r
    on the same centering convention the fit used:

        beta_j = 0   ->  |g_j| <= lam * alpha
        beta_j != 0  ->  g_j - lam*(1-alpha)*beta_j = lam * alpha * sign(beta_j)

    Returns the largest absolute excess over all coordinates (0 means the
    certificate holds exactly).
    """
    X, y = _check_xy(X, y)
    if fit.kind != "lasso":
        raise ValueError("kkt_violation applies to penalized fits only")
    lam, alpha = fit.lam, fit.alpha
    if fit.penalized_intercept:
        Xe = np.hstack([X, np.ones((X.shape[0], 1))])
        be = np.append(fit.coefficients, fit.intercept)
    else:
        Xe = X - X.mean(axis=0)
        be = fit.coefficients
        y = y - y.mean()
    n = Xe.shape[0]
    r = y - Xe @ be
    g = (2.0 / n) * (Xe.T @ r) - lam * (1.0 - alpha) * be
    worst = 0.0
    for j in range(Xe.shape[1]):
        if be[j] == 0.0:
            v = abs(g[j]) - lam * alpha
        else:
            v = abs(g[j] - lam * alpha * np.sign(be[j]))
        worst = max(worst, max(v, 0.0))
    return float(worst)


# ---------------------------------------------------------------------------
# cross-validation


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic k-fold split: contiguous blocks of a seeded shuffle."""
    if not 2 <= folds <= n:
        raise ValueError(f"folds must be in [2, {n}], got {folds}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(perm, folds)]


class OlsSubsetCv:
    """Cross-validated OLS scoring over column subsets, sharing one split.

    Per-fold training Gram matrices and cross products are computed once, so
    scoring a subset S costs one |S| x |S| solve per fold. Greedy feature
    searches and their brute-force oracles both call :meth:`score`, which
    keeps their arithmetic identical.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, folds: int = 3, seed: int = 0):
        X, y = _check_xy(X, y)
        self.n, self.m = X.shape
        self.folds = fold_indices(self.n, folds, seed)
        self._per_fold = []
        all_idx = np.arange(self.n)
        for test in self.folds:
            train = np.setdiff1d(all_idx, test, assume_unique=True)
            Xtr, ytr = X[train], y[train]
            xm = Xtr.mean(axis=0)
            ym = float(ytr.mean())
            Xc = Xtr - xm
            self._per_fold.append({
                "G": Xc.T @ Xc,
                "c": Xc.T @ (ytr - ym),
                "xm": xm,
                "ym": ym,
                "n_train": len(train),
                "X_test": X[test],
                "y_test": y[test],
            })

    def score(self, cols: Sequence[int]) -> float:
        """Pooled mean squared prediction error of OLS on the given columns."""
        cols = np.asarray(sorted(cols), dtype=int)
        if cols.size and (cols[0] < 0 or cols[-1] >= self.m):
            raise ValueError(f"column index out of range [0, {self.m})")
        sse = 0.0
        for f in self._per_fold:
            if cols.size:
                ix = np.ix_(cols, cols)
                beta, _ = _solve_spd(f["G"][ix], f["c"][cols],
                                     force_ridge=f["n_train"] <= cols.size)
                pred = f["ym"] + (f["X_test"][:, cols] - f["xm"][cols]) @ beta
            else:
                pred = np.full(len(f["y_test"]), f["ym"])
            sse += float(np.sum((f["y_test"] - pred) ** 2))
        return sse / self.n

    def score_removals(self, cols: Sequence[int]) -> np.ndarray:
        """Score dropping each single column of ``cols``, all at once.

        Returns scores[t] = pooled MSE of OLS on cols without cols[t]. Uses
        the block-inverse identity beta' = beta - A[:, t] * beta[t] / A[t, t]
        (A the inverse training Gram on cols) so one inverse per fold prices
        every candidate removal; algebraically identical to |cols| separate
        solves, and within float round-off of :meth:`score` on each subset.
        """
        cols = np.asarray(sorted(cols), dtype=int)
        if cols.size == 0:
            return np.zeros(0)
        if cols.size == 1:
            return np.array([self.score(())])
        sse = np.zeros(cols.size)
        eye = np.eye(cols.size)
        for f in self._per_fold:
            G = f["G"][np.ix_(cols, cols)]
            ridge = f["n_train"] <= cols.size
            if not ridge:
                try:
                    factor = scipy.linalg.cho_factor(G)
                except np.linalg.LinAlgError:
                    ridge = True
            if ridge:
                tr = float(np.trace(G))
                eps = RIDGE_SCALE * (tr / cols.size if tr > 0 else 1.0)
                factor = scipy.linalg.cho_factor(G + eps * eye)
            A = scipy.linalg.cho_solve(factor, eye)
            beta = A @ f["c"][cols]
            # column t of B is the coefficient vector after dropping cols[t]
            B = beta[:, None] - A * (beta / np.diag(A))[None, :]
            np.fill_diagonal(B, 0.0)
            resid = (f["y_test"] - f["ym"])[:, None] - (
                (f["X_test"][:, cols] - f["xm"][cols]) @ B
            )
            sse += np.sum(resid ** 2, axis=0)
        return sse / self.n


def cv_score(
    X: np.ndarray,
    y: np.ndarray,
    model: tuple,
    folds: int = 3,
    seed: int = 0,
) -> float:
    """K-fold cross-validated mean squared error, pooled over folds.

    ``model`` is ("ols", columns) or ("lasso", lam). Folds are contiguous
    blocks of a seeded shuffle, so the same (n, folds, seed) triple always
    produces the same split.
    """
    X, y = _check_xy(X, y)
    kind = model[0]
    if kind == "ols":
        cols = tuple(model[1])
        return OlsSubsetCv(X, y, folds=folds, seed=seed).score(cols)
    if kind == "lasso":
        lam = float(model[1])
        sse = 0.0
        all_idx = np.arange(X.shape[0])
        for test in fold_indices(X.shape[0], folds, seed):
            train = np.setdiff1d(all_idx, test, assume_unique=True)
            fit = lasso_fit(X[train], y[train], lam)
            sse += float(np.sum((y[test] - fit.predict(X[test])) ** 2))
        return sse / X.shape[0]
    raise ValueError(f"unknown model kind {kind!r}; expected 'ols' or 'lasso'")
