"""Homogeneous iterated function systems and their elementary invariants.

An IFS here is a finite family of contractions x -> Tx + a_i sharing one
linear part T. In ambient dimension 1 the linear part is a signed ratio
lam = sign * r with 0 < r < 1; in dimension 2 it is r times a rotation by
the angle 2*pi*alpha. All logarithms in this package are base 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, InvalidWordError, SpecError

WORD_BUDGET = 2 ** 24

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Similarity:
    """Shared linear part of a homogeneous IFS.

    ratio is the contraction factor r in (0, 1). Exactly one of sign
    (ambient dim 1) or alpha (ambient dim 2, rotation fraction in [0, 1))
    is set; the other must be None.
    """

    ratio: float
    sign: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if not (0.0 < self.ratio < 1.0):
            raise SpecError(f"contraction ratio must lie in (0,1), got {self.ratio}")
        if self.sign is not None and self.alpha is not None:
            raise SpecError("a similarity carries either sign (1D) or alpha (2D), not both")
        if self.sign is not None and self.sign not in (-1, 1):
            raise SpecError(f"sign must be -1 or +1, got {self.sign}")
        if self.alpha is not None and not (0.0 <= self.alpha < 1.0):
            raise SpecError(f"rotation fraction alpha must lie in [0,1), got {self.alpha}")


@dataclass(frozen=True)
class HomogeneousIfs:
    """Family {x -> Tx + a_i, i = 1..m} with common linear part T.

    translations has shape (m,) in dimension 1 and (m, 2) in dimension 2.
    Instances are immutable and safe to share across workers.
    """

    ambient_dim: int
    map: Similarity
    translations: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.ambient_dim not in (1, 2):
            raise SpecError(f"ambient_dim must be 1 or 2, got {self.ambient_dim}")
        a = np.asarray(self.translations, dtype=float)
        if self.ambient_dim == 1:
            a = np.atleast_1d(a)
            if a.ndim != 1:
                raise SpecError("1D translations must be a flat sequence")
            if self.map.sign is None:
                raise SpecError("1D similarity requires sign")
        else:
            if a.ndim != 2 or a.shape[1] != 2:
                raise SpecError("2D translations must have shape (m, 2)")
            if self.map.alpha is None:
                raise SpecError("2D similarity requires alpha")
        if a.shape[0] < 2:
            raise SpecError("an IFS needs at least two maps")
        if not np.all(np.isfinite(a)):
            raise SpecError("translations must be finite")
        if np.allclose(a, a[0], rtol=0.0, atol=0.0):
            raise SpecError("translations must not all coincide")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "translations", a)

    @property
    def m(self) -> int:
        return self.translations.shape[0]

    @property
    def ratio(self) -> float:
        return self.map.ratio

    @property
    def lam(self) -> float:
        """Signed 1D contraction factor sign * r."""
        if self.ambient_dim != 1:
            raise SpecError("lam is defined for 1D systems only")
        return self.map.sign * self.map.ratio

    def linear_power(self, k: int):
        """T^k as a scalar (1D) or a 2x2 array (2D). k >= 0."""
        if self.ambient_dim == 1:
            return self.lam ** k
        ang = 2.0 * math.pi * ((self.map.alpha * k) % 1.0)
        c, s = math.cos(ang), math.sin(ang)
        return self.map.ratio ** k * np.array([[c, -s], [s, c]])

    def apply_power(self, k: int, pts: np.ndarray) -> np.ndarray:
        """Apply T^k to an array of points (shape (...,) in 1D, (..., 2) in 2D)."""
        tk = self.linear_power(k)
        if self.ambient_dim == 1:
            return tk * np.asarray(pts, dtype=float)
        return np.asarray(pts, dtype=float) @ np.asarray(tk).T

    @property
    def mean_translation(self):
        return self.translations.mean(axis=0)

    @property
    def attractor_center(self):
        """Fixed point z* of x -> Tx + abar, the center used for enclosures."""
        abar = self.mean_translation
        if self.ambient_dim == 1:
            return abar / (1.0 - self.lam)
        t1 = self.linear_power(1)
        return np.linalg.solve(np.eye(2) - t1, abar)

    @property
    def attractor_radius(self) -> float:
        """Radius of the centered ball B(z*, R) containing the attractor."""
        d = self.translations - self.mean_translation
        if self.ambient_dim == 1:
            mx = float(np.max(np.abs(d)))
        else:
            mx = float(np.max(np.hypot(d[:, 0], d[:, 1])))
        return mx / (1.0 - self.map.ratio)

    @property
    def coarse_radius(self) -> float:
        """Uncentered bound max|a_j| / (1 - r), used for word tail radii."""
        a = self.translations
        if self.ambient_dim == 1:
            mx = float(np.max(np.abs(a)))
        else:
            mx = float(np.max(np.hypot(a[:, 0], a[:, 1])))
        return mx / (1.0 - self.map.ratio)


def check_weights(p, m: int | None = None) -> np.ndarray:
    """Validate a probability vector: strictly positive, sums to 1 within 1e-12."""
    arr = np.asarray(p, dtype=float).ravel()
    if m is not None and arr.size != m:
        raise SpecError(f"expected {m} weights, got {arr.size}")
    if arr.size < 2:
        raise SpecError("weight vector needs at least two entries")
    if not np.all(arr > 0.0):
        raise SpecError("weights must be strictly positive")
    if abs(arr.sum() - 1.0) > _WEIGHT_TOL:
        raise SpecError(f"weights must sum to 1 within {_WEIGHT_TOL}, got {arr.sum()!r}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def uniform_weights(m: int) -> np.ndarray:
    return check_weights(np.full(m, 1.0 / m))


def entropy(p) -> float:
    """Shannon entropy -sum p_i log2 p_i in bits.

    Lies in [0, log2 m], with the maximum exactly at uniform weights.
    """
    arr = check_weights(p)
    return float(-(arr * np.log2(arr)).sum())


def similarity_dimension(ifs: HomogeneousIfs, p=None) -> float:
    """h(p) / log2(1/r); uniform weights when p is omitted."""
    if p is None:
        p = uniform_weights(ifs.m)
    h = entropy(check_weights(p, ifs.m))
    return h / -math.log2(ifs.map.ratio)


def _check_word(ifs: HomogeneousIfs, word) -> np.ndarray:
    w = np.asarray(word, dtype=np.int64).ravel()
    if w.size == 0:
        raise InvalidWordError("word must be nonempty")
    if np.any(w < 1) or np.any(w > ifs.m):
        raise InvalidWordError(f"word symbols must lie in 1..{ifs.m}")
    return w


def coding_map_partial(ifs: HomogeneousIfs, word):
    """Partial coding-map sum c = sum_{n=1}^{|w|} T^{n-1} a_{w_n} plus a tail radius.

    Every infinite extension of the word lands in the closed ball
    B(c, tail_radius) with tail_radius = r^{|w|} max_j |a_j| / (1 - r).
    Returns (c, tail_radius); c is a float in 1D and an array (2,) in 2D.
    """
    w = _check_word(ifs, word)
    a = ifs.translations[w - 1]
    if ifs.ambient_dim == 1:
        powers = ifs.lam ** np.arange(w.size)
        c = float(np.dot(powers, a))
    else:
        k = np.arange(w.size)
        ang = 2.0 * math.pi * ((ifs.map.alpha * k) % 1.0)
        r_pow = ifs.map.ratio ** k
        cos_a, sin_a = np.cos(ang), np.sin(ang)
        x = r_pow * (cos_a * a[:, 0] - sin_a * a[:, 1])
        y = r_pow * (sin_a * a[:, 0] + cos_a * a[:, 1])
        c = np.array([x.sum(), y.sum()])
    tail = ifs.map.ratio ** w.size * ifs.coarse_radius
    return c, tail


def cylinder_ball(ifs: HomogeneousIfs, word):
    """Tight enclosure of the cylinder set: ball B(c_w + T^{|w|} z*, r^{|w|} R).

    Uses the centered attractor ball B(z*, R), which is what the histogram
    and separation machinery rely on. Tighter than the coding-map tail
    radius whenever the translations are not mean-centered.
    """
    w = _check_word(ifs, word)
    c, _ = coding_map_partial(ifs, w)
    shift = ifs.apply_power(w.size, np.atleast_1d(ifs.attractor_center)
                            if ifs.ambient_dim == 1 else ifs.attractor_center)
    if ifs.ambient_dim == 1:
        center = c + float(np.asarray(shift).ravel()[0])
    else:
        center = c + shift
    return center, ifs.map.ratio ** w.size * ifs.attractor_radius


def cylinder_centers(ifs: HomogeneousIfs, length: int, word_budget: int | None = None) -> np.ndarray:
    """Partial coding-map sums for every word in [m]^length, lexicographic.

    The last symbol varies fastest. Shape (m^length,) in 1D and
    (m^length, 2) in 2D. No merging is performed.
    """
    budget = WORD_BUDGET if word_budget is None else word_budget
    if length < 1:
        raise SpecError("word length must be >= 1")
    if ifs.m ** length > budget:
        raise BudgetError(f"{ifs.m}^{length} words exceed the budget {budget}")
    a = ifs.translations
    cur = a.astype(float)
    for j in range(1, length):
        step = ifs.apply_power(j, a)
        if ifs.ambient_dim == 1:
            cur = (cur[:, None] + step[None, :]).ravel()
        else:
            cur = (cur[:, None, :] + step[None, :, :]).reshape(-1, 2)
    return cur


def word_weights(p, length: int) -> np.ndarray:
    """Product weights p_w over [m]^length in the same lexicographic order."""
    arr = check_weights(p)
    cur = arr.astype(float)
    for _ in range(1, length):
        cur = (cur[:, None] * arr[None, :]).ravel()
    return cur


def unrank_word(index: int, length: int, m: int) -> tuple[int, ...]:
    """Inverse of the lexicographic enumeration used by cylinder_centers."""
    digits = []
    for _ in range(length):
        digits.append(index % m + 1)
        index //= m
    return tuple(reversed(digits))


@dataclass(frozen=True)
class SeparationCertificate:
    """Outcome of the finite-depth strong-separation check.

    status is "Separated" (a true certificate) or "Inconclusive" together
    with one overlapping pair of depth-level words. Inconclusive never
    refutes separation, the enclosures may simply be slack.
    """

    status: str
    depth: int
    overlap: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    @property
    def separated(self) -> bool:
        return self.status == "Separated"


def check_strong_separation(ifs: HomogeneousIfs, depth: int,
                            word_budget: int | None = None) -> SeparationCertificate:
    """Certify pairwise disjointness of the first-level images at finite depth.

    Each first-level set f_j(attractor) is covered by the balls of the
    depth-length cylinders starting with j. Separated means every ball
    under one first symbol is disjoint from every ball under another.
    """
    if depth < 1:
        raise SpecError("separation depth must be >= 1")
    budget = WORD_BUDGET if word_budget is None else word_budget
    if ifs.m ** depth > budget:
        raise BudgetError(f"{ifs.m}^{depth} words exceed the budget {budget}")

    if depth == 1:
        suffix = np.zeros(1) if ifs.ambient_dim == 1 else np.zeros((1, 2))
    else:
        suffix = cylinder_centers(ifs, depth - 1, word_budget=budget)
    zs = ifs.attractor_center
    shift = ifs.apply_power(depth, np.atleast_1d(zs) if ifs.ambient_dim == 1 else zs)
    rho = ifs.map.ratio ** depth * ifs.attractor_radius

    groups = []
    for j in range(ifs.m):
        a_j = ifs.translations[j]
        if ifs.ambient_dim == 1:
            centers = a_j + ifs.apply_power(1, suffix) + float(np.asarray(shift).ravel()[0])
        else:
            centers = a_j + ifs.apply_power(1, suffix) + shift
        groups.append(centers)

    gap = 2.0 * rho
    block = 4096
    for j in range(ifs.m):
        for j2 in range(j + 1, ifs.m):
            cj, ck = groups[j], groups[j2]
            for start in range(0, len(cj) if ifs.ambient_dim == 2 else cj.size, block):
                cj_blk = cj[start:start + block]
                if ifs.ambient_dim == 1:
                    close = np.abs(cj_blk[:, None] - ck[None, :]) <= gap
                else:
                    diff = cj_blk[:, None, :] - ck[None, :, :]
                    close = diff[..., 0] ** 2 + diff[..., 1] ** 2 <= gap * gap
                if np.any(close):
                    i_loc, i2 = np.argwhere(close)[0]
                    idx1 = start + int(i_loc)
                    w1 = (j + 1,) + (unrank_word(idx1, depth - 1, ifs.m) if depth > 1 else ())
                    w2 = (j2 + 1,) + (unrank_word(int(i2), depth - 1, ifs.m) if depth > 1 else ())
                    return SeparationCertificate("Inconclusive", depth, (w1, w2))
    return SeparationCertificate("Separated", depth)


def ifs_to_json(ifs: HomogeneousIfs, p=None) -> dict:
    """Serialize an IFS (and optional weights) to the document schema."""
    doc = {"ambient_dim": ifs.ambient_dim, "ratio": ifs.map.ratio}
    if ifs.ambient_dim == 1:
        doc["sign"] = int(ifs.map.sign)
        doc["translations"] = [float(x) for x in ifs.translations]
    else:
        doc["alpha"] = float(ifs.map.alpha)
        doc["translations"] = [[float(x), float(y)] for x, y in ifs.translations]
    if p is not None:
        doc["weights"] = [float(x) for x in check_weights(p, ifs.m)]
    if ifs.label:
        doc["label"] = ifs.label
    return doc


def ifs_from_json(doc) -> tuple[HomogeneousIfs, np.ndarray]:
    """Build (ifs, weights) from a parsed JSON document or a JSON string.

    Weights default to uniform when the document omits them. A "derive"
    clause, if present, is ignored here; see transforms.resolve_spec.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("IFS document must be a JSON object")
    for key in ("ambient_dim", "ratio", "translations"):
        if key not in doc:
            raise SpecError(f"IFS document missing field {key!r}")
    dim = doc["ambient_dim"]
    if dim == 1:
        sim = Similarity(ratio=float(doc["ratio"]), sign=int(doc.get("sign", 1)))
    elif dim == 2:
        sim = Similarity(ratio=float(doc["ratio"]), alpha=float(doc.get("alpha", 0.0)))
    else:
        raise SpecError(f"ambient_dim must be 1 or 2, got {dim!r}")
    ifs = HomogeneousIfs(ambient_dim=dim, map=sim,
                         translations=np.asarray(doc["translations"], dtype=float),
                         label=str(doc.get("label", "")))
    if "weights" in doc:
        p = check_weights(doc["weights"], ifs.m)
    else:
        p = uniform_weights(ifs.m)
    return ifs, p
