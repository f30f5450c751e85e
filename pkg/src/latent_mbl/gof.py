"""Hosmer-Lemeshow statistics and predicted-versus-empirical check curves."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .data import MblDataset

CHI2_8_95 = 15.51
CHI2_64_95 = 83.68
SCALED_8CHI2_8_95 = 124.06
FIXED_EDGES = np.arange(1, 10) / 10.0


def fixed_bins(pi: np.ndarray) -> np.ndarray:
    """Bin index 0..9 for ``pi`` in ``[0, .1], (.1, .2], ..., (.9, 1]``."""
    return np.searchsorted(FIXED_EDGES, pi, side="left")


def decile_bins(pi: np.ndarray) -> np.ndarray:
    """Ten groups of (nearly) equal size by rank of ``pi``; ties keep input order."""
    order = np.argsort(pi, kind="stable")
    idx = np.empty(len(pi), dtype=int)
    for b, part in enumerate(np.array_split(order, 10)):
        idx[part] = b
    return idx


@dataclass
class HlBin:
    lower: float
    upper: float
    observed: float
    expected: float
    n: int


@dataclass
class HlReport:
    per_response: list[float]
    bins_used: list[list[HlBin]]
    degenerate: list[bool]
    binning: str = "fixed"
    thresholds: dict = field(default_factory=lambda: {
        "chi2_8_95": CHI2_8_95, "chi2_64_95": CHI2_64_95,
        "scaled_8chi2_8_95": SCALED_8CHI2_8_95})

    @property
    def total(self) -> float:
        return float(sum(self.per_response))

    @property
    def df(self) -> int:
        return 8

    @property
    def response_pass(self) -> list[bool]:
        return [x < CHI2_8_95 for x in self.per_response]

    @property
    def aggregate_pass(self) -> bool:
        return self.total < min(CHI2_64_95, SCALED_8CHI2_8_95)

    def to_dict(self) -> dict:
        return {
            "binning": self.binning,
            "df": self.df,
            "per_response": self.per_response,
            "response_below_chi2_8_95": self.response_pass,
            "degenerate": self.degenerate,
            "total": self.total,
            "total_below_chi2_64_95": self.total < CHI2_64_95,
            "total_below_scaled_8chi2_8_95": self.total < SCALED_8CHI2_8_95,
            "aggregate_pass": self.aggregate_pass,
            "thresholds": self.thresholds,
            "bins": [[vars(b) for b in bins] for bins in self.bins_used],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = ["Response".ljust(10) + "X2".rjust(14) + "  < 15.51"]
        for k, (x, ok, deg) in enumerate(zip(self.per_response, self.response_pass, self.degenerate)):
            note = "  (degenerate)" if deg else ""
            lines.append(f"{k + 1:<10d}{x:14.6g}  {'yes' if ok else 'no'}{note}")
        lines.append(f"{'Total':<10}{self.total:14.6g}")
        lines.append(f"aggregate reference points: {CHI2_64_95} (chi2_64), "
                     f"{SCALED_8CHI2_8_95} (8 chi2_8); pass: {'yes' if self.aggregate_pass else 'no'}")
        return "\n".join(lines) + "\n"


def hosmer_lemeshow_probs(y: np.ndarray, pi: np.ndarray, binning: str = "fixed") -> HlReport:
    """Pearson statistic per response from outcomes ``y`` and fitted ``pi`` (both ``(n, K)``)."""
    if binning not in ("fixed", "decile"):
        raise ValueError(f"unknown binning {binning!r}")
    y = np.asarray(y, float)
    pi = np.asarray(pi, float)
    stats, bins_used, degenerate = [], [], []
    for k in range(y.shape[1]):
        p, obs = pi[:, k], y[:, k]
        idx = fixed_bins(p) if binning == "fixed" else decile_bins(p)
        bins, x2 = [], 0.0
        for b in np.unique(idx):
            sel = idx == b
            O, E = float(obs[sel].sum()), float(p[sel].sum())
            if binning == "fixed":
                lo, hi = b / 10.0, (b + 1) / 10.0
            else:
                lo, hi = float(p[sel].min()), float(p[sel].max())
            if E > 0:
                x2 += (O - E) ** 2 / E
                bins.append(HlBin(lo, hi, O, E, int(sel.sum())))
        if len(bins) < 2:
            stats.append(0.0)
            degenerate.append(True)
        else:
            stats.append(float(x2))
            degenerate.append(False)
        bins_used.append(bins)
    return HlReport(stats, bins_used, degenerate, binning)


def hosmer_lemeshow(data: MblDataset, result, binning: str = "fixed") -> HlReport:
    return hosmer_lemeshow_probs(data.y, result.fitted(data), binning)


DEFAULT_WINDOWS = {2.0: 1.0, 8.0: 3.0}


@dataclass
class CheckCurve:
    duration: float
    response: int  # 1-based
    t: np.ndarray
    predicted: np.ndarray
    empirical: np.ndarray  # NaN where the window is empty
    n_window: np.ndarray
    d_halfwidth: float
    t_halfwidth: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "predicted", "empirical", "n_window"])
        for t, p, e, n in zip(self.t, self.predicted, self.empirical, self.n_window):
            w.writerow([f"{t:.2f}", repr(float(p)), "" if np.isnan(e) else repr(float(e)), int(n)])
        return buf.getvalue()


def check_grid() -> np.ndarray:
    return np.arange(1, 20) * 0.05


def check_curves(data: MblDataset, result, d: float, d_halfwidth: float | None = None,
                 t_halfwidth: float = 0.05) -> list[CheckCurve]:
    """Fitted probabilities at ``(t_j, d)`` beside windowed sample proportions, per response."""
    if d_halfwidth is None:
        d_halfwidth = DEFAULT_WINDOWS.get(float(d), 1.0)
    t = check_grid()
    pred = result.model.mean(t, np.full(len(t), float(d)), result.theta)
    in_d = np.abs(data.duration - d) <= d_halfwidth + 1e-12
    emp = np.full((len(t), data.n_responses), np.nan)
    counts = np.zeros(len(t), dtype=int)
    for j, tj in enumerate(t):
        sel = in_d & (np.abs(data.time - tj) <= t_halfwidth + 1e-12)
        counts[j] = sel.sum()
        if counts[j]:
            emp[j] = data.y[sel].mean(axis=0)
    return [CheckCurve(float(d), k + 1, t, pred[:, k], emp[:, k], counts, d_halfwidth, t_halfwidth)
            for k in range(data.n_responses)]


def plot_check_curves(curves: list[CheckCurve], path) -> None:
    """Small-multiples SVG: one panel per response, line = predicted, points = empirical."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "latent-mbl"
    n = len(curves)
    cols = min(4, n)
    rows = -(-n // cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 2.6 * rows), squeeze=False)
    for ax, c in zip(axes.ravel(), curves):
        ax.plot(c.t, c.predicted, "-", color="black", lw=1)
        ax.plot(c.t, c.empirical, "o", color="tab:blue", ms=3)
        ax.set_ylim(0, 1)
        ax.set_xlim(0, 1)
        ax.set_title(f"response {c.response}, d = {c.duration:g}", fontsize=9)
        ax.tick_params(labelsize=7)
    for ax in axes.ravel()[n:]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
