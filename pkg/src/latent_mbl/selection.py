"""QIC_u and greedy backward reduction of polynomial orders."""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import MblDataset
from .gee import (DivergedError, FitResult, SingularSystemError, fit, fit_beta_model,
                  preset_scheme)
from .model import BetaCurveModel, ModelSpec, ParamVector
from .study import worker_count


def quasi_likelihood(data: MblDataset, pi: np.ndarray) -> float:
    """Bernoulli log quasi-likelihood summed over every (subject, time, response) cell."""
    pi = np.clip(pi, 1e-300, None)
    q = np.where(data.y == 1.0, np.log(pi), np.log1p(-np.minimum(pi, 1.0 - 1e-16)))
    return float(q.sum())


def qic_u(data: MblDataset, result: FitResult) -> float:
    """``-2 Q + 2 p`` at the fitted means, Q under the independence model."""
    if not result.converged:
        raise ValueError("QIC_u needs a converged fit")
    return -2.0 * quasi_likelihood(data, result.fitted(data)) + 2.0 * result.p


@dataclass
class FitConfig:
    scheme: str = "B-III"
    structure: str = "independence"
    tol: float = 0.01
    max_iter: int = 200

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "structure": self.structure, "tol": self.tol,
                "max_iter": self.max_iter}


@dataclass
class SelectionStep:
    round: int
    label: str
    spec: ModelSpec
    qic_u: float
    accepted: bool


@dataclass
class SelectionTrace:
    steps: list[SelectionStep]
    final_spec: ModelSpec
    final_fit: FitResult | None = field(default=None, repr=False)

    @property
    def accepted_path(self) -> list[SelectionStep]:
        return [s for s in self.steps if s.accepted]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "QIC_u", "accepted"])
        for s in self.steps:
            w.writerow([s.label, f"{s.qic_u:.2f}" if np.isfinite(s.qic_u) else "inf",
                        int(s.accepted)])
        return buf.getvalue()


# Block order used for tie-breaking: higher index wins.
def _reductions(spec: ModelSpec) -> list[tuple[int, ModelSpec]]:
    out = []
    if spec.order_a > 0:
        out.append((0, ModelSpec(spec.order_a - 1, spec.order_b, spec.order_link)))
    if spec.order_b > 0:
        out.append((1, ModelSpec(spec.order_a, spec.order_b - 1, spec.order_link)))
    for k, m in enumerate(spec.order_link):
        if m > 0:
            link = list(spec.order_link)
            link[k] -= 1
            out.append((2 + k, ModelSpec(spec.order_a, spec.order_b, tuple(link))))
    return out


def truncate(params: ParamVector, spec: ModelSpec) -> ParamVector:
    """Restrict coefficients to a spec whose orders are all no larger."""
    src = dict(params.spec.layout())
    flat = np.concatenate([params.flat[src[name]][: sl.stop - sl.start]
                           for name, sl in spec.layout()])
    return ParamVector(spec, flat)


def _fit_candidate(data, spec, init_flat, config: FitConfig):
    model = BetaCurveModel(spec)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = fit(data, model, init_flat, preset_scheme(model, config.scheme),
                      config.structure, config.tol, config.max_iter)
    except (DivergedError, SingularSystemError):
        return None, float("inf")
    if not res.converged:
        return res, float("inf")
    res.qic_u = qic_u(data, res)
    return res, res.qic_u


def backward_select(data: MblDataset, full_spec: ModelSpec, config: FitConfig | None = None,
                    init: ParamVector | None = None, workers: int | None = None) -> SelectionTrace:
    """Greedy search lowering one polynomial order per round while QIC_u does not rise.

    Without ``init`` the full model is started as in :func:`fit_beta_model`.
    Candidates start from the incumbent's estimates. Among equal QIC_u values
    the reduction of the highest-index block (last response first, ``a``
    last) wins. Failed candidate fits are recorded with QIC_u = inf.
    """
    config = config or FitConfig()
    workers = workers or worker_count()
    if init is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            best_fit = fit_beta_model(data, full_spec, config.scheme, config.structure,
                                      config.tol, config.max_iter)
        if not best_fit.converged:
            raise DivergedError("the starting model did not converge", best_fit.trace)
        best_q = best_fit.qic_u = qic_u(data, best_fit)
    else:
        best_fit, best_q = _fit_candidate(data, full_spec, init.flat, config)
        if not np.isfinite(best_q):
            raise DivergedError("the starting model failed to converge", [])
    steps = [SelectionStep(0, full_spec.label(full_spec), full_spec, best_q, True)]
    incumbent = full_spec
    rnd = 0
    while True:
        rnd += 1
        cands = _reductions(incumbent)
        if not cands:
            break
        start = ParamVector(incumbent, best_fit.theta)
        jobs = [(data, spec, truncate(start, spec).flat, config) for _, spec in cands]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
                fits = list(pool.map(_fit_candidate, *zip(*jobs)))
        else:
            fits = [_fit_candidate(*j) for j in jobs]
        qs = [q for _, q in fits]
        # min QIC_u, ties to the highest block index
        pick = min(range(len(cands)), key=lambda i: (qs[i], -cands[i][0]))
        accept = qs[pick] <= best_q
        for i, (_, spec) in enumerate(cands):
            steps.append(SelectionStep(rnd, spec.label(full_spec), spec, qs[i],
                                       accept and i == pick))
        if not accept:
            break
        incumbent = cands[pick][1]
        best_fit, best_q = fits[pick]
    return SelectionTrace(steps, incumbent, best_fit)
