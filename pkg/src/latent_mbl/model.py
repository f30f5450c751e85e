"""Latent Beta-curve trajectory model and its logit linkages.

The latent intensity at standardized time ``t`` for an episode of duration
``d`` is the unnormalized Beta kernel

    MA(t) = t**(exp(a) - 1) * (1 - t)**(exp(b) - 1)

with ``a`` and ``b`` polynomials in ``d``. Each binary response ``k`` has
``logit(pi_k) = c_0k + c_1k * MA + ... + c_mk * MA**m_k``.

Flat coefficient order is ``(a_0..a_ma, b_0..b_mb, c_01..c_m1, ..., c_0K..c_mK)``.

Two mean models share the interface used by the estimation code
(``n_params``, ``n_responses``, ``layout``, ``mean``, ``jacobian``):
:class:`BetaCurveModel` for the full family and :class:`SharedCurvatureModel`
for the reduced ``logit(pi_k) = c_0k + c_1k * (t + beta * t**2)`` form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit as _expit

# Clamp for standardized time so that log(t) and log(1 - t) stay finite.
T_EPS = 1e-6
# Linear predictors are saturated here so expit stays strictly inside (0, 1).
ETA_MAX = 35.0
LOGIT_EPS = 1e-12


class InvalidInputError(ValueError):
    """Raised for non-finite or out-of-domain model inputs."""


def expit(eta):
    """Logistic function, saturated so the result is strictly inside (0, 1)."""
    return _expit(np.clip(eta, -ETA_MAX, ETA_MAX))


def logit(p):
    p = np.clip(p, LOGIT_EPS, 1.0 - LOGIT_EPS)
    return np.log(p) - np.log1p(-p)


def horner(coeffs, x):
    """Evaluate ``sum_j coeffs[j] * x**j`` by Horner's rule (``x`` may be an array)."""
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.zeros_like(np.asarray(x, dtype=float)) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * x + c
    return out


def horner_deriv(coeffs, x):
    """Derivative of the polynomial with the given ascending coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if len(coeffs) < 2:
        return np.zeros_like(np.asarray(x, dtype=float))
    return horner(coeffs[1:] * np.arange(1, len(coeffs)), x)


def clamp_time(t):
    return np.clip(t, T_EPS, 1.0 - T_EPS)


@dataclass(frozen=True)
class ModelSpec:
    """Polynomial orders of the Beta-curve model.

    ``order_link[k]`` is ``m_k`` for response ``k`` (0-based).
    """

    order_a: int
    order_b: int
    order_link: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order_link", tuple(int(m) for m in self.order_link))
        if len(self.order_link) < 1:
            raise InvalidInputError("at least one response is required")
        if min(self.order_a, self.order_b, *self.order_link) < 0:
            raise InvalidInputError("polynomial orders must be non-negative")

    @classmethod
    def full(cls, n_responses: int, order: int = 2) -> "ModelSpec":
        return cls(order, order, (order,) * n_responses)

    @property
    def n_responses(self) -> int:
        return len(self.order_link)

    @property
    def n_params(self) -> int:
        return self.order_a + 1 + self.order_b + 1 + sum(m + 1 for m in self.order_link)

    def layout(self) -> list[tuple[str, slice]]:
        """Named contiguous index ranges of the flat coefficient vector."""
        sizes = [("a", self.order_a + 1), ("b", self.order_b + 1)]
        sizes += [(f"c{k + 1}", m + 1) for k, m in enumerate(self.order_link)]
        out, start = [], 0
        for name, n in sizes:
            out.append((name, slice(start, start + n)))
            start += n
        return out

    def param_names(self) -> list[str]:
        names = [f"a{j}" for j in range(self.order_a + 1)]
        names += [f"b{j}" for j in range(self.order_b + 1)]
        for k, m in enumerate(self.order_link):
            names += [f"c{j},{k + 1}" for j in range(m + 1)]
        return names

    def label(self, reference: "ModelSpec | None" = None) -> str:
        """Short label listing orders below ``reference``, e.g. ``m4=m6=ma=1``."""
        reference = reference or ModelSpec.full(self.n_responses)
        reduced: dict[int, list[str]] = {}
        for k, (m, m_ref) in enumerate(zip(self.order_link, reference.order_link)):
            if m < m_ref:
                reduced.setdefault(m, []).append(f"m{k + 1}")
        if self.order_a < reference.order_a:
            reduced.setdefault(self.order_a, []).append("ma")
        if self.order_b < reference.order_b:
            reduced.setdefault(self.order_b, []).append("mb")
        if not reduced:
            return "Full"
        parts = ["=".join(names) + f"={value}" for value, names in sorted(reduced.items(), reverse=True)]
        return ",".join(parts)

    def to_dict(self) -> dict:
        return {"a": self.order_a, "b": self.order_b, "link": list(self.order_link)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(int(d["a"]), int(d["b"]), tuple(int(m) for m in d["link"]))


@dataclass
class ParamVector:
    """Coefficients of a :class:`ModelSpec`, stored flat in canonical order."""

    spec: ModelSpec
    flat: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=float).copy()
        if self.flat.shape != (self.spec.n_params,):
            raise InvalidInputError(
                f"expected {self.spec.n_params} coefficients, got {self.flat.shape}"
            )

    @classmethod
    def from_blocks(cls, spec: ModelSpec, a_coeffs, b_coeffs, link_coeffs) -> "ParamVector":
        flat = np.concatenate([np.atleast_1d(np.asarray(a_coeffs, float)),
                               np.atleast_1d(np.asarray(b_coeffs, float))]
                              + [np.atleast_1d(np.asarray(c, float)) for c in link_coeffs])
        return cls(spec, flat)

    @classmethod
    def zeros(cls, spec: ModelSpec) -> "ParamVector":
        return cls(spec, np.zeros(spec.n_params))

    @property
    def block_layout(self) -> list[tuple[str, slice]]:
        return self.spec.layout()

    def block(self, name: str) -> np.ndarray:
        return self.flat[dict(self.spec.layout())[name]]

    @property
    def a_coeffs(self) -> np.ndarray:
        return self.block("a")

    @property
    def b_coeffs(self) -> np.ndarray:
        return self.block("b")

    @property
    def link_coeffs(self) -> list[np.ndarray]:
        return [self.block(f"c{k + 1}") for k in range(self.spec.n_responses)]

    def to_dict(self) -> dict:
        return {
            "orders": self.spec.to_dict(),
            "coefficients": {
                "a": self.a_coeffs.tolist(),
                "b": self.b_coeffs.tolist(),
                "link": [c.tolist() for c in self.link_coeffs],
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParamVector":
        spec = ModelSpec.from_dict(d["orders"])
        coef = d["coefficients"]
        return cls.from_blocks(spec, coef["a"], coef["b"], coef["link"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "ParamVector":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class MaCurveParams:
    """Log Beta exponents: ``r = exp(a)``, ``s = exp(b)``."""

    a: float
    b: float


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("non-finite input")


def eval_ab(d: float, params: ParamVector) -> tuple[float, float]:
    """Duration-dependent log exponents ``(a, b)``."""
    _check_finite(d, params.flat)
    return float(horner(params.a_coeffs, d)), float(horner(params.b_coeffs, d))


def eval_ma(t, ma: MaCurveParams):
    """Latent intensity at (clamped) standardized time ``t``."""
    _check_finite(t, ma.a, ma.b)
    tc = clamp_time(t)
    return tc ** (math.exp(ma.a) - 1.0) * (1.0 - tc) ** (math.exp(ma.b) - 1.0)


def eval_pi(t: float, d: float, params: ParamVector, k: int) -> float:
    """Probability of response ``k`` (1-based) at time ``t`` and duration ``d``."""
    if not 1 <= k <= params.spec.n_responses:
        raise InvalidInputError(f"response index {k} out of range")
    a, b = eval_ab(d, params)
    ma = eval_ma(t, MaCurveParams(a, b))
    return float(expit(horner(params.link_coeffs[k - 1], ma)))


def eval_mean_vector(t: float, d: float, params: ParamVector) -> np.ndarray:
    return BetaCurveModel(params.spec).mean(np.atleast_1d(t), np.atleast_1d(d), params.flat)[0]


def jacobian_mean(t: float, d: float, params: ParamVector) -> np.ndarray:
    """``K x p`` matrix of derivatives of the mean vector w.r.t. all coefficients."""
    return BetaCurveModel(params.spec).jacobian(np.atleast_1d(t), np.atleast_1d(d), params.flat)[0]


class BetaCurveModel:
    """Vectorized mean and Jacobian of the Beta-curve model over many cells."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.n_params = spec.n_params
        self.n_responses = spec.n_responses
        self.layout = spec.layout()
        self.param_names = spec.param_names()

    def __repr__(self):
        return f"BetaCurveModel({self.spec!r})"

    def _split(self, theta):
        lay = dict(self.layout)
        return (theta[lay["a"]], theta[lay["b"]],
                [theta[lay[f"c{k + 1}"]] for k in range(self.n_responses)])

    def latent(self, t, d, theta):
        a_c, b_c, _ = self._split(np.asarray(theta, float))
        tc = clamp_time(np.asarray(t, float))
        with np.errstate(over="ignore", invalid="ignore"):
            r = np.exp(horner(a_c, d))
            s = np.exp(horner(b_c, d))
            return tc ** (r - 1.0) * (1.0 - tc) ** (s - 1.0)

    def linear_predictor(self, t, d, theta):
        _, _, links = self._split(np.asarray(theta, float))
        ma = self.latent(t, d, theta)
        return np.column_stack([horner(c, ma) for c in links])

    def mean(self, t, d, theta):
        """``(n, K)`` response probabilities."""
        return expit(self.linear_predictor(t, d, theta))

    def jacobian(self, t, d, theta):
        """``(n, K, p)`` derivatives of the probabilities."""
        theta = np.asarray(theta, float)
        t = np.asarray(t, float)
        d = np.asarray(d, float)
        a_c, b_c, links = self._split(theta)
        tc = clamp_time(t)
        with np.errstate(over="ignore", invalid="ignore"):
            r = np.exp(horner(a_c, d))
            s = np.exp(horner(b_c, d))
            ma = tc ** (r - 1.0) * (1.0 - tc) ** (s - 1.0)
        n, K = len(t), self.n_responses
        eta = np.column_stack([horner(c, ma) for c in links])
        pi = expit(eta)
        w = pi * (1.0 - pi)
        # Inside the saturation band the predictor is flat.
        w = np.where(np.abs(eta) < ETA_MAX, w, 0.0)
        slope = np.column_stack([horner_deriv(c, ma) for c in links])

        lay = dict(self.layout)
        jac = np.zeros((n, K, self.n_params))
        dpow_a = d[:, None] ** np.arange(len(a_c))
        dpow_b = d[:, None] ** np.arange(len(b_c))
        with np.errstate(over="ignore", invalid="ignore"):
            dma_da = ma * r * np.log(tc)
            dma_db = ma * s * np.log1p(-tc)
        common = w * slope
        jac[:, :, lay["a"]] = (common * dma_da[:, None])[:, :, None] * dpow_a[:, None, :]
        jac[:, :, lay["b"]] = (common * dma_db[:, None])[:, :, None] * dpow_b[:, None, :]
        for k, c in enumerate(links):
            jac[:, k, lay[f"c{k + 1}"]] = w[:, k, None] * ma[:, None] ** np.arange(len(c))
        return jac

    def params(self, theta) -> ParamVector:
        return ParamVector(self.spec, theta)

    def describe(self) -> dict:
        return {"kind": "beta", "orders": self.spec.to_dict()}


class SharedCurvatureModel:
    """Reduced model ``logit(pi_k) = c_0k + c_1k * (t + beta * t**2)``.

    Flat order is ``(c_01, c_11, c_02, c_12, ..., c_0K, c_1K, beta)``. With
    ``fixed_beta`` set, ``beta`` is a constant and not estimated.
    """

    def __init__(self, n_responses: int, fixed_beta: float | None = None):
        if n_responses < 1:
            raise InvalidInputError("at least one response is required")
        self.n_responses = n_responses
        self.fixed_beta = fixed_beta
        self.n_params = 2 * n_responses + (fixed_beta is None)
        self.layout = [(f"c{k + 1}", slice(2 * k, 2 * k + 2)) for k in range(n_responses)]
        self.param_names = [f"c{j},{k + 1}" for k in range(n_responses) for j in (0, 1)]
        if fixed_beta is None:
            self.layout.append(("beta", slice(2 * n_responses, 2 * n_responses + 1)))
            self.param_names.append("beta")

    def __repr__(self):
        return f"SharedCurvatureModel({self.n_responses}, fixed_beta={self.fixed_beta})"

    def _beta(self, theta):
        return self.fixed_beta if self.fixed_beta is not None else theta[-1]

    def mean(self, t, d, theta):
        theta = np.asarray(theta, float)
        t = np.asarray(t, float)
        c = theta[: 2 * self.n_responses].reshape(self.n_responses, 2)
        x = t + self._beta(theta) * t ** 2
        return expit(c[:, 0] + x[:, None] * c[:, 1])

    def jacobian(self, t, d, theta):
        theta = np.asarray(theta, float)
        t = np.asarray(t, float)
        K = self.n_responses
        c = theta[: 2 * K].reshape(K, 2)
        x = t + self._beta(theta) * t ** 2
        eta = c[:, 0] + x[:, None] * c[:, 1]
        pi = expit(eta)
        w = np.where(np.abs(eta) < ETA_MAX, pi * (1.0 - pi), 0.0)
        jac = np.zeros((len(t), K, self.n_params))
        for k in range(K):
            jac[:, k, 2 * k] = w[:, k]
            jac[:, k, 2 * k + 1] = w[:, k] * x
            if self.fixed_beta is None:
                jac[:, k, -1] = w[:, k] * c[k, 1] * t ** 2
        return jac

    def describe(self) -> dict:
        return {"kind": "shared_curvature", "n_responses": self.n_responses,
                "fixed_beta": self.fixed_beta}


def model_from_description(desc: dict):
    if desc["kind"] == "beta":
        return BetaCurveModel(ModelSpec.from_dict(desc["orders"]))
    if desc["kind"] == "shared_curvature":
        return SharedCurvatureModel(int(desc["n_responses"]), desc.get("fixed_beta"))
    raise InvalidInputError(f"unknown model kind {desc['kind']!r}")


def parse_orders(text: str) -> ModelSpec:
    """Parse inline orders such as ``a=1,b=2,link=2:2:1``."""
    fields = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return ModelSpec(int(fields["a"]), int(fields["b"]),
                         tuple(int(m) for m in fields["link"].split(":")))
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"cannot parse orders {text!r}") from exc


def tantrum_final_params() -> ParamVector:
    """Final-model coefficients reported for the tantrum data."""
    spec = ModelSpec(1, 2, (2, 2, 2, 1, 2, 1, 2, 2))
    links: Sequence[Sequence[float]] = [
        (-6.1432, 11.3835, -8.6876),
        (-1.6569, -2.0083, 3.4437),
        (-1.5895, 4.0299, -4.0841),
        (-5.0790, 3.1491),
        (-5.2077, 5.8811, -2.6364),
        (-4.5346, 3.3092),
        (-4.2117, 6.7421, -4.9546),
        (-3.8145, -1.2724, 2.8053),
    ]
    return ParamVector.from_blocks(spec, (0.0658, 0.0045), (0.2410, 0.0454, 0.0001), links)
