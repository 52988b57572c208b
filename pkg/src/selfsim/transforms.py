"""Derived measures: projections, convolutions, products, digit splits.

Constructions that stay self-similar come back as plain systems plus
weights. The ones that do not (projections of rotating systems,
convolutions of unequal-ratio systems) are represented structurally and
consumed through histogram pushforward or transform multiplication.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, SpecError
from .fourier import ConvolvedMeasure, IfsMeasure, ProjectedMeasure
from .histogram import (DyadicHistogram, _box_range, bin_weighted_intervals,
                        histogram)
from .ifs import (WORD_BUDGET, HomogeneousIfs, Similarity, check_weights,
                  cylinder_centers, ifs_from_json, uniform_weights,
                  word_weights)

_MERGE_TOL = 1e-12
_PAIR_BUDGET = 50_000_000
_EPS_BASE = 1e-14


def _merge_coincident(points: np.ndarray, weights: np.ndarray):
    """Collapse translations that agree within the exact-overlap tolerance."""
    order = np.argsort(points, kind="stable")
    pts = points[order]
    wts = weights[order]
    groups = np.concatenate(([True], np.diff(pts) > _MERGE_TOL))
    starts = np.flatnonzero(groups)
    merged_w = np.add.reduceat(wts, starts)
    sums = np.add.reduceat(pts * wts, starts)
    merged_p = sums / merged_w
    return merged_p, merged_w


def project_ifs(ifs: HomogeneousIfs, p, beta: float):
    """Project a rotation-free planar system onto the direction at angle beta.

    Returns the 1D system with translations <a_j, (cos beta, sin beta)> and
    the same contraction ratio; translations that coincide to within 1e-12
    merge with summed weights (the exact-overlap collapse).
    """
    if ifs.ambient_dim != 2:
        raise SpecError("project_ifs needs a 2D system")
    if ifs.map.alpha not in (0.0,) and abs(ifs.map.alpha) > 1e-15:
        raise SpecError("projection of rotating systems is not self-similar; "
                        "use Fourier restriction or histogram pushforward")
    p = check_weights(p, ifs.m)
    omega = np.array([math.cos(beta), math.sin(beta)])
    t = ifs.translations @ omega
    merged_t, merged_w = _merge_coincident(t, p.astype(float))
    if merged_t.size < 2:
        raise SpecError("projection collapsed every map onto one point")
    out = HomogeneousIfs(
        1, Similarity(ratio=ifs.map.ratio, sign=1), merged_t,
        label=f"{ifs.label}|proj{beta:.6g}" if ifs.label else f"proj{beta:.6g}")
    return out, check_weights(merged_w)


def histogram_project(hist2d: DyadicHistogram, beta: float,
                      n_out: int) -> DyadicHistogram:
    """Push a 2D histogram onto the direction at angle beta, re-binned dyadically.

    Each square cell maps to an interval of length 2^-n (|cos| + |sin|);
    its lower mass lands in an output cell only on containment, its upper
    mass in every touched cell, so the output stays a certified sandwich.
    """
    if hist2d.ambient_dim != 2:
        raise SpecError("histogram_project needs a 2D histogram")
    if n_out < 1:
        raise SpecError("output level must be >= 1")
    w = hist2d.cell_width
    cb, sb = math.cos(beta), math.sin(beta)
    base = hist2d.indices[:, 0] * w * cb + hist2d.indices[:, 1] * w * sb
    lo = base + w * (min(cb, 0.0) + min(sb, 0.0))
    hi = base + w * (max(cb, 0.0) + max(sb, 0.0))

    (bx0, bx1), (by0, by1) = hist2d.box()
    corners = [cx * cb + cy * sb for cx in (bx0, bx1) for cy in (by0, by1)]
    eps = _EPS_BASE * max(1.0, max(abs(c) for c in corners))
    k0, k1 = _box_range(min(corners), max(corners), n_out, eps)
    idx, lower, upper = bin_weighted_intervals(
        lo, hi, hist2d.lower, hist2d.upper, n_out, k0, k1, eps)
    return DyadicHistogram(1, n_out, hist2d.depth_used, (k0,), (k1,),
                           idx, lower, upper)


def convolve_hist(h1: DyadicHistogram, h2: DyadicHistogram, u: float,
                  n_out: int | None = None) -> DyadicHistogram:
    """Certified histogram of mu1 * T_u mu2 at a coarser output level.

    Both inputs must be 1D at the same level; the second coordinate is
    scaled by u. Pair sum-intervals feed lower mass on containment and
    upper mass on touch, exactly like first-order histogram binning.
    """
    if h1.ambient_dim != 1 or h2.ambient_dim != 1:
        raise SpecError("convolution needs 1D histograms")
    if u == 0.0:
        raise SpecError("scaling factor u must be nonzero")
    if h1.n != h2.n:
        raise SpecError("histograms must share a level; rebuild one of them")
    if n_out is None:
        n_out = h1.n - 4
    if not (1 <= n_out <= h1.n):
        raise SpecError("output level must lie in [1, input level]")
    if h1.num_cells * h2.num_cells > _PAIR_BUDGET:
        raise BudgetError(
            f"{h1.num_cells} x {h2.num_cells} cell pairs exceed the budget")

    w_in = h1.cell_width
    x_lo = h1.indices * w_in
    y_edges = np.stack([h2.indices * w_in * u, (h2.indices + 1) * w_in * u])
    y_lo = y_edges.min(axis=0)
    y_hi = y_edges.max(axis=0)

    pair_lo = (x_lo[:, None] + y_lo[None, :]).ravel()
    pair_hi = (x_lo[:, None] + w_in + y_hi[None, :]).ravel()
    low_w = (h1.lower[:, None] * h2.lower[None, :]).ravel()
    up_w = (h1.upper[:, None] * h2.upper[None, :]).ravel()

    (a0, a1) = h1.box()[0]
    (b0, b1) = h2.box()[0]
    cand = [a0 + min(u * b0, u * b1), a1 + max(u * b0, u * b1)]
    eps = _EPS_BASE * max(1.0, abs(cand[0]), abs(cand[1]))
    k0, k1 = _box_range(cand[0], cand[1], n_out, eps)
    idx, lower, upper = bin_weighted_intervals(
        pair_lo, pair_hi, low_w, up_w, n_out, k0, k1, eps)
    return DyadicHistogram(1, n_out, min(h1.depth_used, h2.depth_used),
                           (k0,), (k1,), idx, lower, upper)


@dataclass(frozen=True)
class SkipKeepPair:
    """The digit-split factors nu_k and eta_k of a self-similar measure.

    nu_k collects the length-(k-1) partial digit blocks (ratio r^k,
    translations over all such words, product weights, no merging so the
    entropy identity stays exact). eta_k is the same system run at ratio
    r^k with the original translations; the measure reconstructs as
    mu = nu_k * (image of eta_k under the recorded affine factor T^(k-1)).
    """

    k: int
    nu_ifs: HomogeneousIfs
    nu_weights: np.ndarray
    eta_ifs: HomogeneousIfs
    eta_weights: np.ndarray
    eta_scale: object

    @property
    def eta_scaled_ifs(self) -> HomogeneousIfs:
        """eta_k pushed through its affine factor, again self-similar."""
        base = self.eta_ifs
        if base.ambient_dim == 1:
            scaled = float(self.eta_scale) * base.translations
        else:
            scaled = base.translations @ np.asarray(self.eta_scale).T
        return HomogeneousIfs(base.ambient_dim, base.map, scaled,
                              label=f"{base.label}|scaled" if base.label else "")


def _power_similarity(ifs: HomogeneousIfs, k: int) -> Similarity:
    if ifs.ambient_dim == 1:
        return Similarity(ratio=ifs.map.ratio ** k, sign=ifs.map.sign ** k)
    return Similarity(ratio=ifs.map.ratio ** k, alpha=(ifs.map.alpha * k) % 1.0)


def skip_keep(ifs: HomogeneousIfs, p, k: int,
              word_budget: int | None = None) -> SkipKeepPair:
    """Split the digit expansion at stride k into the nu_k and eta_k factors."""
    if k < 2:
        raise SpecError("skip/keep stride k must be >= 2")
    p = check_weights(p, ifs.m)
    budget = WORD_BUDGET if word_budget is None else word_budget
    if ifs.m ** (k - 1) > budget:
        raise BudgetError(f"{ifs.m}^{k - 1} block words exceed the budget")
    blocks = cylinder_centers(ifs, k - 1, word_budget=budget)
    bw = word_weights(p, k - 1)
    sim_k = _power_similarity(ifs, k)
    nu = HomogeneousIfs(ifs.ambient_dim, sim_k, blocks,
                        label=f"{ifs.label}|skip{k}" if ifs.label else f"skip{k}")
    eta = HomogeneousIfs(ifs.ambient_dim, sim_k, ifs.translations,
                         label=f"{ifs.label}|keep{k}" if ifs.label else f"keep{k}")
    return SkipKeepPair(k=k, nu_ifs=nu, nu_weights=check_weights(bw),
                        eta_ifs=eta, eta_weights=p,
                        eta_scale=ifs.linear_power(k - 1))


def iterate_ifs(ifs: HomogeneousIfs, p, k: int,
                word_budget: int | None = None):
    """The k-fold iterated system: ratio r^k, one map per length-k word."""
    if k < 1:
        raise SpecError("iteration depth k must be >= 1")
    p = check_weights(p, ifs.m)
    if k == 1:
        return ifs, p
    centers = cylinder_centers(ifs, k, word_budget=word_budget)
    weights = word_weights(p, k)
    out = HomogeneousIfs(ifs.ambient_dim, _power_similarity(ifs, k), centers,
                         label=f"{ifs.label}^/{k}" if ifs.label else "")
    return out, check_weights(weights)


def product_ifs(ifs1: HomogeneousIfs, ifs2: HomogeneousIfs, p1, p2):
    """Product of two 1D systems with one signed ratio, as a planar system.

    A common negative ratio becomes the half-turn rotation alpha = 1/2.
    Unequal ratios are rejected; pre-iterate the factors with iterate_ifs
    until the ratios match when they are log-commensurable.
    """
    if ifs1.ambient_dim != 1 or ifs2.ambient_dim != 1:
        raise SpecError("product needs two 1D systems")
    if abs(ifs1.lam - ifs2.lam) > 1e-12:
        raise SpecError(
            f"signed ratios differ ({ifs1.lam} vs {ifs2.lam}); equalize them "
            "with iterate_ifs before taking the product")
    p1 = check_weights(p1, ifs1.m)
    p2 = check_weights(p2, ifs2.m)
    ax = np.repeat(ifs1.translations, ifs2.m)
    ay = np.tile(ifs2.translations, ifs1.m)
    translations = np.stack([ax, ay], axis=1)
    weights = (p1[:, None] * p2[None, :]).ravel()
    alpha = 0.0 if ifs1.lam > 0 else 0.5
    sim = Similarity(ratio=ifs1.map.ratio, alpha=alpha)
    label = f"{ifs1.label}x{ifs2.label}" if ifs1.label and ifs2.label else ""
    return HomogeneousIfs(2, sim, translations, label=label), check_weights(weights)


@dataclass(frozen=True)
class ResolvedMeasure:
    """A measure the pipelines can histogram or transform.

    kind is "ifs" (concrete system plus weights), "convolution" (two
    concrete 1D parts and a scale u), or "projection" (a rotating 2D base
    with a direction, reachable only through pushforward or restriction).
    """

    kind: str
    ifs: HomogeneousIfs | None = None
    p: np.ndarray | None = None
    beta: float | None = None
    u: float | None = None
    parts: tuple | None = None
    label: str = ""


def resolve_spec(doc: dict, base_dir: str = ".") -> ResolvedMeasure:
    """Interpret a measure document, following its derive clause if present."""
    ifs, p = ifs_from_json(doc)
    derive = doc.get("derive")
    if derive is None:
        return ResolvedMeasure(kind="ifs", ifs=ifs, p=p, label=ifs.label)
    if not isinstance(derive, dict) or "kind" not in derive:
        raise SpecError("derive clause must be an object with a kind")
    kind = derive["kind"]
    if kind == "projection":
        beta = float(derive.get("beta", 0.0))
        if abs(ifs.map.alpha or 0.0) <= 1e-15:
            out, w = project_ifs(ifs, p, beta)
            return ResolvedMeasure(kind="ifs", ifs=out, p=w, label=out.label)
        return ResolvedMeasure(kind="projection", ifs=ifs, p=p, beta=beta,
                               label=f"{ifs.label}|proj{beta:.6g}")
    if kind in ("convolution", "product"):
        other = derive.get("other")
        if other is None:
            raise SpecError(f"{kind} derivation needs an 'other' reference")
        if isinstance(other, str):
            other_doc = _load_json(os.path.join(base_dir, other))
        elif isinstance(other, dict):
            other_doc = other
        else:
            raise SpecError("'other' must be a path or an inline document")
        rm2 = resolve_spec(other_doc, base_dir=base_dir)
        if rm2.kind != "ifs":
            raise SpecError("nested derivations are not supported")
        if kind == "product":
            out, w = product_ifs(ifs, rm2.ifs, p, rm2.p)
            return ResolvedMeasure(kind="ifs", ifs=out, p=w, label=out.label)
        u = float(derive.get("u", 1.0))
        if u == 0.0:
            raise SpecError("convolution scale u must be nonzero")
        return ResolvedMeasure(kind="convolution", u=u,
                               parts=((ifs, p), (rm2.ifs, rm2.p)),
                               label=f"{ifs.label}*{rm2.ifs.label}")
    if kind == "skip_keep":
        k = int(derive.get("k", 0))
        part = derive.get("part", "skip")
        pair = skip_keep(ifs, p, k)
        if part == "skip":
            return ResolvedMeasure(kind="ifs", ifs=pair.nu_ifs,
                                   p=pair.nu_weights, label=pair.nu_ifs.label)
        if part == "keep":
            scaled = pair.eta_scaled_ifs
            return ResolvedMeasure(kind="ifs", ifs=scaled,
                                   p=pair.eta_weights, label=scaled.label)
        raise SpecError("skip_keep part must be 'skip' or 'keep'")
    raise SpecError(f"unknown derive kind {kind!r}")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read measure document {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_measure_spec(path: str) -> ResolvedMeasure:
    """Load a measure document from disk, resolving relative references."""
    doc = _load_json(path)
    return resolve_spec(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def measure_histogram(rm: ResolvedMeasure, n: int, extra_depth: int = 4,
                      guard: int = 4, word_budget: int | None = None) -> DyadicHistogram:
    """Histogram any resolved measure at level n.

    Convolutions histogram both parts at level n + guard first; rotating
    projections histogram the planar base and push it down.
    """
    if rm.kind == "ifs":
        return histogram(rm.ifs, rm.p, n, extra_depth=extra_depth,
                         word_budget=word_budget)
    if rm.kind == "convolution":
        (i1, p1), (i2, p2) = rm.parts
        h1 = histogram(i1, p1, n + guard, extra_depth=extra_depth,
                       word_budget=word_budget)
        h2 = histogram(i2, p2, n + guard, extra_depth=extra_depth,
                       word_budget=word_budget)
        return convolve_hist(h1, h2, rm.u, n_out=n)
    if rm.kind == "projection":
        base = histogram(rm.ifs, rm.p, n, extra_depth=extra_depth,
                         word_budget=word_budget)
        return histogram_project(base, rm.beta, n)
    raise SpecError(f"cannot histogram measure kind {rm.kind!r}")


def measure_spectral(rm: ResolvedMeasure):
    """Wrap a resolved measure for Fourier evaluation."""
    if rm.kind == "ifs":
        return IfsMeasure(rm.ifs, rm.p)
    if rm.kind == "convolution":
        (i1, p1), (i2, p2) = rm.parts
        return ConvolvedMeasure(IfsMeasure(i1, p1), IfsMeasure(i2, p2), rm.u)
    if rm.kind == "projection":
        return ProjectedMeasure(rm.ifs, rm.p, rm.beta)
    raise SpecError(f"cannot evaluate measure kind {rm.kind!r}")
