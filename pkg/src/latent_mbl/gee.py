"""Generalized estimating equations with block-partitioned Fisher scoring.

Every time point of every subject is one cell contributing a ``K``-vector
``Y``. For a mean model with Jacobian ``D`` (``K x p`` per cell) and working
covariance ``V = A^1/2 R A^1/2`` the estimating function is
``U = sum D' V^-1 (Y - pi)`` and the scoring matrix is ``M = sum D' V^-1 D``.

Mean models are duck-typed: anything with ``n_params``, ``n_responses``,
``layout``, ``param_names``, ``mean(t, d, theta)`` and
``jacobian(t, d, theta)`` works (see :mod:`latent_mbl.model`).
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .data import ConfigurationError, MblDataset
from .model import BetaCurveModel, ModelSpec, ParamVector, SharedCurvatureModel, logit

log = logging.getLogger(__name__)

STRUCTURES = ("independence", "exchangeable", "unstructured")
_ALIASES = {"indep": "independence", "exch": "exchangeable", "unstr": "unstructured"}
ALPHA_MARGIN = 1e-3
# Cells with pi (1 - pi) below this count as saturated (|eta| > ~30).
SATURATION_VAR = 1e-13


class SingularSystemError(ArithmeticError):
    def __init__(self, block: str):
        super().__init__(f"scoring matrix for block {block!r} is singular")
        self.block = block


class DivergedError(ArithmeticError):
    def __init__(self, message: str, trace: Sequence[float]):
        super().__init__(message)
        self.trace = list(trace)


class InitializationError(ValueError):
    pass


def normalize_structure(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in STRUCTURES:
        raise ConfigurationError(f"unknown correlation structure {name!r}")
    return name


@dataclass
class WorkingCorrelation:
    """Working correlation ``R(alpha)`` among the ``K`` responses of a cell."""

    structure: str = "independence"
    alpha: float | np.ndarray | None = None

    def __post_init__(self):
        self.structure = normalize_structure(self.structure)

    def matrix(self, K: int) -> np.ndarray:
        if self.structure == "independence" or self.alpha is None:
            return np.eye(K)
        if self.structure == "exchangeable":
            R = np.full((K, K), float(self.alpha))
            np.fill_diagonal(R, 1.0)
            return R
        R = np.array(self.alpha, dtype=float)
        if R.shape != (K, K):
            raise ConfigurationError(f"unstructured alpha must be {K}x{K}")
        return R

    def alpha_json(self):
        if self.alpha is None:
            return None
        return np.asarray(self.alpha).tolist()


def working_cov(pi_vec, corr: WorkingCorrelation) -> np.ndarray:
    """``V = A^1/2 R A^1/2`` with ``A = diag(pi (1 - pi))``."""
    pi_vec = np.asarray(pi_vec, dtype=float)
    sd = np.sqrt(pi_vec * (1.0 - pi_vec))
    V = sd[:, None] * corr.matrix(len(pi_vec)) * sd[None, :]
    return 0.5 * (V + V.T)


def standardized_residuals(y, pi) -> np.ndarray:
    return (y - pi) / np.sqrt(pi * (1.0 - pi))


def moment_alpha(y, pi, p: int, structure: str = "exchangeable"):
    """Pooled moment estimate of the working correlation (unprojected).

    Exchangeable: ``sum_cells sum_{k1<k2} r_k1 r_k2 / (N* - p)`` with
    ``N* = n_cells * K (K - 1) / 2``. Unstructured: the same pooling per pair,
    with denominator ``n_cells - p``.
    """
    structure = normalize_structure(structure)
    r = standardized_residuals(np.asarray(y, float), np.asarray(pi, float))
    n, K = r.shape
    if structure == "exchangeable":
        n_star = n * K * (K - 1) / 2
        if n_star <= p:
            raise ConfigurationError(f"too few observations: N*={n_star:g} <= p={p}")
        cross = 0.5 * (r.sum(axis=1) ** 2 - (r ** 2).sum(axis=1))
        return float(cross.sum() / (n_star - p))
    if structure == "unstructured":
        if n <= p or K < 2:
            raise ConfigurationError(f"too few observations: {n} cells for p={p}")
        R = r.T @ r / (n - p)
        np.fill_diagonal(R, 1.0)
        return R
    return None


def project_alpha(alpha, K: int, structure: str):
    """Clip ``alpha`` into the region where ``R(alpha)`` is positive definite."""
    if structure == "exchangeable":
        lo = -1.0 / (K - 1) + ALPHA_MARGIN
        return float(np.clip(alpha, lo, 1.0 - ALPHA_MARGIN))
    if structure == "unstructured":
        R = 0.5 * (np.asarray(alpha) + np.asarray(alpha).T)
        w, Q = np.linalg.eigh(R)
        R = (Q * np.maximum(w, ALPHA_MARGIN)) @ Q.T
        s = np.sqrt(np.diag(R))
        R = R / s[:, None] / s[None, :]
        np.fill_diagonal(R, 1.0)
        return R
    return None


def estimate_alpha(data: MblDataset, model, theta, p: int | None = None,
                   structure: str = "exchangeable"):
    """Moment estimate of ``alpha`` at coefficients ``theta`` (unprojected)."""
    pi = model.mean(data.time, data.duration, np.asarray(theta, float))
    return moment_alpha(data.y, pi, model.n_params if p is None else p, structure)


def _refresh_corr(data, model, theta, structure) -> WorkingCorrelation:
    if structure == "independence":
        return WorkingCorrelation()
    raw = estimate_alpha(data, model, theta, structure=structure)
    return WorkingCorrelation(structure, project_alpha(raw, data.n_responses, structure))


@dataclass
class BlockingScheme:
    """Ordered disjoint index blocks covering ``0..p-1``."""

    blocks: list[np.ndarray]
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=int) for b in self.blocks]
        if not self.names:
            self.names = [f"block{i + 1}" for i in range(len(self.blocks))]
        if not self.blocks or any(len(b) == 0 for b in self.blocks):
            raise ConfigurationError("blocking scheme needs at least one non-empty block")

    def validate(self, p: int) -> None:
        allidx = np.concatenate(self.blocks)
        if len(allidx) != p or not np.array_equal(np.sort(allidx), np.arange(p)):
            raise ConfigurationError(f"blocks must partition 0..{p - 1}")

    @classmethod
    def single(cls, p: int) -> "BlockingScheme":
        return cls([np.arange(p)], ["all"])

    @classmethod
    def parse(cls, text: str) -> "BlockingScheme":
        """Explicit index sets, e.g. ``0,1;2,3;4``."""
        try:
            return cls([[int(i) for i in part.split(",")] for part in text.split(";")])
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse blocks {text!r}") from exc

    def to_json(self):
        return {name: b.tolist() for name, b in zip(self.names, self.blocks)}


def preset_scheme(model, name: str) -> BlockingScheme:
    """Named blocking presets.

    For the shared-curvature model: ``B-I`` one block; ``B-II`` all linkage
    coefficients then ``beta``; ``B-III`` each response's pair then ``beta``.
    For the Beta-curve model: ``B-I`` one block; ``B-II`` (a, b) then all
    linkage coefficients; ``B-III`` (a, b), then ``c_1``, ..., ``c_K``.
    """
    lay = dict(model.layout)
    p = model.n_params
    key = name.upper().replace("_", "-")
    if key in ("B-I", "BI", "FULL"):
        return BlockingScheme.single(p)
    if isinstance(model, SharedCurvatureModel):
        links = [np.arange(lay[f"c{k + 1}"].start, lay[f"c{k + 1}"].stop)
                 for k in range(model.n_responses)]
        tail = [np.array([p - 1])] if model.fixed_beta is None else []
        tail_names = ["beta"] if tail else []
        if key in ("B-II", "BII"):
            return BlockingScheme([np.concatenate(links)] + tail, ["links"] + tail_names)
        if key in ("B-III", "BIII"):
            return BlockingScheme(links + tail,
                                  [f"c{k + 1}" for k in range(model.n_responses)] + tail_names)
    else:
        ab = np.arange(lay["a"].start, lay["b"].stop)
        links = [np.arange(lay[f"c{k + 1}"].start, lay[f"c{k + 1}"].stop)
                 for k in range(model.n_responses)]
        if key in ("B-II", "BII"):
            return BlockingScheme([ab, np.concatenate(links)], ["ab", "links"])
        if key in ("B-III", "BIII"):
            return BlockingScheme([ab] + links,
                                  ["ab"] + [f"c{k + 1}" for k in range(model.n_responses)])
    raise ConfigurationError(f"unknown blocking preset {name!r}")


def _cell_terms(data, model, theta, corr, cols=None):
    """Standardized Jacobian, residuals and ``R^-1`` for every cell."""
    pi = model.mean(data.time, data.duration, theta)
    D = model.jacobian(data.time, data.duration, theta)
    if cols is not None:
        D = D[:, :, cols]
    sd = np.sqrt(pi * (1.0 - pi))
    Dt = D / sd[:, :, None]
    rt = (data.y - pi) / sd
    Rinv = np.linalg.inv(corr.matrix(data.n_responses))
    return Dt, rt, Rinv


def scoring_terms(data: MblDataset, model, theta, corr: WorkingCorrelation, cols=None):
    """``(M, U)``: scoring matrix and estimating function, restricted to ``cols``."""
    Dt, rt, Rinv = _cell_terms(data, model, np.asarray(theta, float), corr, cols)
    n, K, q = Dt.shape
    flat = Dt.reshape(n * K, q)
    if corr.structure == "independence":
        M = flat.T @ flat
        U = flat.T @ rt.ravel()
    else:
        DR = np.matmul(Rinv, Dt).reshape(n * K, q)
        M = DR.T @ flat
        U = DR.T @ rt.ravel()
    return 0.5 * (M + M.T), U


def estimating_function(data, model, theta, corr: WorkingCorrelation) -> np.ndarray:
    return scoring_terms(data, model, theta, corr)[1]


def _solve(M, U, block: str) -> np.ndarray:
    for attempt in range(2):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                x = scipy.linalg.solve(M, U, assume_a="sym")
            if np.all(np.isfinite(x)):
                return x
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError):
            pass
        if attempt == 0:
            ridge = 1e-8 * max(np.trace(M), 1e-300) / len(M)
            log.debug("ridge %.3g added to block %s", ridge, block)
            M = M + ridge * np.eye(len(M))
    raise SingularSystemError(block)


def _quasi_likelihood(data, model, theta) -> float:
    pi = model.mean(data.time, data.duration, theta)
    return float(np.sum(data.y * np.log(pi) + (1.0 - data.y) * np.log1p(-pi)))


def _merit(data, model, theta, structure):
    """``(|U|, Q, n_saturated)`` at ``theta``; ``Q`` is the independence quasi-likelihood."""
    pi = model.mean(data.time, data.duration, theta)
    q = float(np.sum(data.y * np.log(pi) + (1.0 - data.y) * np.log1p(-pi)))
    n_sat = int(np.count_nonzero(pi * (1.0 - pi) < SATURATION_VAR))
    corr = _refresh_corr(data, model, theta, structure)
    Dt, rt, Rinv = _cell_terms(data, model, theta, corr)
    w = rt if corr.structure == "independence" else rt @ Rinv
    U = w.ravel() @ Dt.reshape(-1, Dt.shape[2])
    return float(np.linalg.norm(U)), q, n_sat


def _safeguarded(data, model, theta, delta, cols, structure, base=None):
    """Halve ``delta`` up to 10 times while the step is unacceptable.

    A step is unacceptable if it gives non-finite values, multiplies the
    estimating-function norm by more than 10, or pushes more cells to
    saturated probabilities (where the estimating function vanishes
    spuriously). If no halving is acceptable the fit has diverged.
    Returns the accepted coefficients and their merit.
    """
    base_norm, _, base_sat = base or _merit(data, model, theta, structure)
    for _ in range(11):
        trial = theta.copy()
        trial[cols] += delta
        if np.all(np.isfinite(trial)):
            merit = _merit(data, model, trial, structure)
            norm, _, n_sat = merit
            if np.isfinite(norm) and norm <= 10.0 * base_norm and n_sat <= base_sat:
                return trial, merit
        delta = 0.5 * delta
    raise DivergedError("no acceptable step after 10 halvings", [])


def gee_step_full(data: MblDataset, model, theta, structure: str = "independence",
                  safeguard: bool = True) -> np.ndarray:
    """One Fisher scoring update of all coefficients jointly."""
    return gee_step_blocked(data, model, theta, BlockingScheme.single(model.n_params),
                            structure, safeguard)


def gee_step_blocked(data: MblDataset, model, theta, scheme: BlockingScheme,
                     structure: str = "independence", safeguard: bool = True) -> np.ndarray:
    """One sweep of blocked scoring.

    Blocks are updated in order; each uses the coefficients as already
    updated earlier in the sweep and a freshly estimated ``alpha``.
    """
    structure = normalize_structure(structure)
    theta = np.array(theta, dtype=float)
    scheme.validate(model.n_params)
    merit = None
    for cols, name in zip(scheme.blocks, scheme.names):
        corr = _refresh_corr(data, model, theta, structure)
        M, U = scoring_terms(data, model, theta, corr, cols)
        delta = _solve(M, U, name)
        if safeguard:
            theta, merit = _safeguarded(data, model, theta, delta, cols, structure, merit)
        else:
            theta[cols] += delta
    return theta


def robust_variance(data: MblDataset, model, theta, corr: WorkingCorrelation) -> np.ndarray:
    """Sandwich ``M^-1 B M^-1`` with per-cell residual outer products in ``B``."""
    Dt, rt, Rinv = _cell_terms(data, model, np.asarray(theta, float), corr)
    DR = np.einsum("nkp,kl->nlp", Dt, Rinv)
    M = np.einsum("nlp,nlq->pq", DR, Dt)
    M = 0.5 * (M + M.T)
    scores = np.einsum("nlp,nl->np", DR, rt)
    B = scores.T @ scores
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            Minv = scipy.linalg.inv(M)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
        ridge = 1e-8 * max(np.trace(M), 1e-300) / len(M)
        warnings.warn(f"singular scoring matrix in sandwich; ridge {ridge:.3g} added",
                      RuntimeWarning, stacklevel=2)
        Minv = scipy.linalg.inv(M + ridge * np.eye(len(M)))
    Minv = 0.5 * (Minv + Minv.T)
    V = Minv @ B @ Minv
    return 0.5 * (V + V.T)


@dataclass
class FitResult:
    model: object
    theta: np.ndarray
    robust_cov: np.ndarray
    corr: WorkingCorrelation
    iterations: int
    converged: bool
    trace: list[float]
    scheme: BlockingScheme
    tol: float
    qic_u: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.model.n_params

    @property
    def alpha_hat(self):
        return self.corr.alpha

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.robust_cov), 0.0, None))

    @property
    def params(self) -> ParamVector:
        if not isinstance(self.model, BetaCurveModel):
            raise TypeError("params is only defined for the Beta-curve model")
        return ParamVector(self.model.spec, self.theta)

    def fitted(self, data: MblDataset) -> np.ndarray:
        return self.model.mean(data.time, data.duration, self.theta)

    def to_dict(self) -> dict:
        se = self.se
        blocks = {name: {"estimate": self.theta[sl].tolist(), "se": se[sl].tolist()}
                  for name, sl in self.model.layout}
        return {
            "model": self.model.describe(),
            "coefficients": blocks,
            "theta": self.theta.tolist(),
            "param_names": list(self.model.param_names),
            "robust_cov": self.robust_cov.tolist(),
            "correlation": {"structure": self.corr.structure, "alpha": self.corr.alpha_json()},
            "scheme": self.scheme.to_json(),
            "iterations": self.iterations,
            "converged": self.converged,
            "tol": self.tol,
            "trace": list(self.trace),
            "p": self.p,
            "qic_u": self.qic_u,
            "info": self.info,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        from .model import model_from_description

        model = model_from_description(d["model"])
        corr = d["correlation"]
        alpha = corr["alpha"]
        if isinstance(alpha, list):
            alpha = np.array(alpha)
        scheme = BlockingScheme(list(d["scheme"].values()), list(d["scheme"].keys()))
        return cls(model, np.array(d["theta"], float), np.array(d["robust_cov"], float),
                   WorkingCorrelation(corr["structure"], alpha), int(d["iterations"]),
                   bool(d["converged"]), list(d["trace"]), scheme, float(d["tol"]),
                   d.get("qic_u"), dict(d.get("info", {})))

    def report(self) -> str:
        """Plain-text coefficient table, one row per block, SEs in parentheses."""
        se = self.se
        width = max(sl.stop - sl.start for _, sl in self.model.layout)
        heads = ["Constant", "Linear", "Quadratic", "Cubic"] + [f"Order {j}" for j in range(4, width)]
        if isinstance(self.model, SharedCurvatureModel):
            heads = ["Intercept", "Slope"]
        lines = ["Parameters".ljust(12) + "".join(h.ljust(22) for h in heads[:width])]
        for name, sl in self.model.layout:
            cells = [f"{self.theta[i]:.4f} ({se[i]:.4f})" for i in range(sl.start, sl.stop)]
            cells += ["-"] * (width - len(cells))
            lines.append(name.ljust(12) + "".join(c.ljust(22) for c in cells))
        alpha = self.corr.alpha_json()
        lines.append("")
        lines.append(f"working correlation: {self.corr.structure}"
                     + (f", alpha = {alpha:.4f}" if isinstance(alpha, float) else ""))
        lines.append(f"iterations: {self.iterations}, converged: {self.converged}")
        if self.qic_u is not None:
            lines.append(f"QIC_u: {self.qic_u:.2f}")
        return "\n".join(lines) + "\n"


def fit(data: MblDataset, model, init, scheme: BlockingScheme | None = None,
        structure: str = "independence", tol: float = 0.01, max_iter: int = 200,
        safeguard: bool = True) -> FitResult:
    """Iterate blocked scoring until ``||c_j - c_{j-1}|| / ||c_j|| <= tol``.

    Raises :class:`DivergedError` on non-finite coefficients or when the
    relative difference grows five iterations in a row.
    """
    structure = normalize_structure(structure)
    theta = np.array(init.flat if isinstance(init, ParamVector) else init, dtype=float)
    if theta.shape != (model.n_params,):
        raise ConfigurationError(f"initial vector has length {theta.size}, model needs {model.n_params}")
    if data.n_responses != model.n_responses:
        raise ConfigurationError("dataset and model disagree on the number of responses")
    scheme = scheme or BlockingScheme.single(model.n_params)
    scheme.validate(model.n_params)

    trace: list[float] = []
    converged = False
    growth = 0
    it = 0
    q = _quasi_likelihood(data, model, theta)
    for it in range(1, max_iter + 1):
        try:
            new = gee_step_blocked(data, model, theta, scheme, structure, safeguard)
        except DivergedError as exc:
            raise DivergedError(str(exc), trace) from exc
        if not np.all(np.isfinite(new)):
            raise DivergedError("non-finite coefficients", trace)
        rel = float(np.linalg.norm(new - theta) / max(np.linalg.norm(new), 1e-300))
        q_new = _quasi_likelihood(data, model, new)
        # Creeping blocked sweeps can lengthen steps while still improving the fit.
        growth = growth + 1 if trace and rel > trace[-1] and q_new < q else 0
        trace.append(rel)
        theta, q = new, q_new
        if rel <= tol:
            converged = True
            break
        if growth >= 5:
            raise DivergedError("relative difference grew for 5 consecutive iterations", trace)

    corr = _refresh_corr(data, model, theta, structure)
    cov = robust_variance(data, model, theta, corr)
    return FitResult(model, theta, cov, corr, it, converged, trace, scheme, tol)


def _ols(x, y):
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def empirical_probabilities(data: MblDataset, grid, h: float):
    """Relative frequency of each response among cells with ``|t - t_j| <= h``.

    Returns ``(kept_grid, probs)``; grid points with empty windows are dropped.
    """
    kept, probs = [], []
    for tj in grid:
        inside = np.abs(data.time - tj) <= h + 1e-12
        if inside.any():
            kept.append(tj)
            probs.append(data.y[inside].mean(axis=0))
    return np.array(kept), np.array(probs).reshape(len(kept), data.n_responses)


def init_params(data: MblDataset, spec: ModelSpec, h: float = 0.1, grid=None,
                scale: str = "probability") -> ParamVector:
    """Starting values for the Beta-curve model.

    ``a_0 = log 1.5``, ``b_0 = log 3``; each response's intercept and slope are
    the least-squares fit of windowed empirical probabilities on the initial
    latent curve at ``t_j = 2j/100``, ``j = 1..49``; other coefficients 0.
    With ``scale="logit"`` the regression target is the logit of the
    empirical probabilities (clipped to ``[0.001, 0.999]``).
    """
    if scale not in ("probability", "logit"):
        raise ConfigurationError(f"unknown initialization scale {scale!r}")
    if min(spec.order_link) < 1:
        raise InitializationError("initialization needs linear linkage terms (m_k >= 1)")
    grid = np.arange(1, 50) * 2 / 100 if grid is None else np.asarray(grid, float)
    tj, emp = empirical_probabilities(data, grid, h)
    if len(tj) < 2:
        raise InitializationError("fewer than two grid points have observations in their window")
    theta = np.zeros(spec.n_params)
    lay = dict(spec.layout())
    theta[lay["a"].start] = np.log(1.5)
    theta[lay["b"].start] = np.log(3.0)
    ma = BetaCurveModel(spec).latent(tj, np.ones_like(tj), theta)
    if scale == "logit":
        emp = logit(np.clip(emp, 1e-3, 1 - 1e-3))
    for k in range(spec.n_responses):
        start = lay[f"c{k + 1}"].start
        theta[start:start + 2] = _ols(ma, emp[:, k])
    return ParamVector(spec, theta)


def logistic_irls(X, y, tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Logistic-regression coefficients by iteratively reweighted least squares."""
    from .model import expit

    beta = np.zeros(X.shape[1])
    for _ in range(max_iter):
        pi = expit(X @ beta)
        w = pi * (1.0 - pi)
        step = _solve((X * w[:, None]).T @ X, X.T @ (y - pi), "logistic")
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    return beta


def init_shared_curvature(data: MblDataset, model: SharedCurvatureModel) -> np.ndarray:
    """Per-response logistic fits of ``c_0k + c_1k t + c_1k beta t^2``.

    Each response is fitted on ``(1, t, t^2)``; ``c_1k`` is the ``t``
    coefficient and ``beta_k`` the ratio of the ``t^2`` and ``t``
    coefficients. The shared starting ``beta`` is the mean of the ``beta_k``.
    """
    t = data.time
    X = np.column_stack([np.ones_like(t), t, t ** 2])
    theta = np.zeros(model.n_params)
    betas = []
    for k in range(model.n_responses):
        g = logistic_irls(X, data.y[:, k])
        theta[2 * k], theta[2 * k + 1] = g[0], g[1]
        betas.append(g[2] / g[1])
    if model.fixed_beta is None:
        theta[-1] = float(np.mean(betas))
    return theta


def fit_beta_model(data: MblDataset, spec: ModelSpec, scheme: str | BlockingScheme = "B-III",
                   structure: str = "independence", tol: float = 0.01, max_iter: int = 200,
                   init: ParamVector | None = None, init_scale: str = "auto") -> FitResult:
    """Initialize (unless ``init`` is given) and fit the Beta-curve model.

    ``init_scale="auto"`` fits once from the probability-scale regression and
    once from the logit-scale one, and keeps the converged fit with the larger
    quasi-likelihood (the probability scale on ties). The two starts can land
    on different stationary points. The scale kept is stored in
    ``result.info["init"]`` and every start's outcome in ``result.info["starts"]``.
    """
    model = BetaCurveModel(spec)
    if isinstance(scheme, str):
        scheme = preset_scheme(model, scheme)
    if init is not None:
        res = fit(data, model, init, scheme, structure, tol, max_iter)
        res.info["init"] = "given"
        return res
    scales = ["probability", "logit"] if init_scale == "auto" else [init_scale]
    fits, outcomes, error = [], {}, None
    for scale in scales:
        start = init_params(data, spec, scale=scale)
        try:
            res = fit(data, model, start, scheme, structure, tol, max_iter)
        except (DivergedError, SingularSystemError) as exc:
            log.info("%s-scale start failed (%s)", scale, exc)
            outcomes[scale] = f"{type(exc).__name__}: {exc}"
            error = exc
            continue
        q = _quasi_likelihood(data, model, res.theta)
        outcomes[scale] = {"converged": res.converged, "quasi_likelihood": q}
        fits.append((res.converged, q, -len(fits), scale, res))
    if not fits:
        raise error
    *_, scale, best = max(fits, key=lambda f: f[:3])
    best.info["init"] = scale
    best.info["starts"] = outcomes
    return best


__all__ = [
    "BlockingScheme", "DivergedError", "FitResult", "InitializationError",
    "SingularSystemError", "WorkingCorrelation", "empirical_probabilities",
    "estimate_alpha", "estimating_function", "fit", "fit_beta_model",
    "gee_step_blocked", "gee_step_full", "init_params", "init_shared_curvature",
    "logistic_irls", "moment_alpha", "preset_scheme", "project_alpha",
    "robust_variance", "scoring_terms", "working_cov",
]
