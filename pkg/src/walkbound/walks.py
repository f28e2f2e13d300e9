"""Directed walks on hybrid graphs: an expander edge followed by a permutation.

A length-t walk is generated by a uniform start vertex plus t uniform edge
labels, so the walk space has exactly ``N * d**t`` points; vertex sequences are
derived data (parallel edges mean several label sequences can share one vertex
sequence).  Events over walks are handled two independent ways that tests
compare: masked transition-matrix products (terminal probability vectors) and
direct enumeration of the walk space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, ParameterError, StructuralError
from .expander import ColoredRotation, TransitionMatrix, compose_permutation, transition_matrix
from .prob import FiniteSpace, RandomObject, subset_sums

WALK_ENUM_MAX = 2 ** 24     # full walk enumerations stop at this many walks
SUBSET_EXH_MAX_N = 20       # exhaustive single-set sweeps stop at 2**N subsets
RATIO_TOL = 1e-9
EXT_TOL = 1e-12
MAX_WITNESSES = 16


@dataclass(frozen=True, eq=False)
class HybridGraph:
    """A colored rotation together with a vertex permutation applied after each edge."""

    rot: ColoredRotation
    perm: np.ndarray

    def __post_init__(self):
        p = np.array(self.perm, dtype=np.int64)
        p.setflags(write=False)
        object.__setattr__(self, "perm", p)
        n = self.rot.n_vertices
        if p.shape != (n,) or not np.array_equal(np.sort(p), np.arange(n)):
            raise StructuralError("perm must be a bijection on the rotation's vertex set")

    @property
    def n_vertices(self) -> int:
        return self.rot.n_vertices

    @property
    def d(self) -> int:
        return self.rot.d

    def step(self, u: int, j: int) -> int:
        """Follow edge slot j out of u, then apply the permutation."""
        v, _ = self.rot.rotate(u, j)
        return int(self.perm[v])

    def transition(self) -> TransitionMatrix:
        return compose_permutation(transition_matrix(self.rot), self.perm)


@dataclass(frozen=True)
class Walk:
    """A realized walk: vertex sequence plus the edge labels that produced it."""

    vertices: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        object.__setattr__(self, "labels", tuple(int(j) for j in self.labels))
        if len(self.vertices) != len(self.labels) + 1:
            raise StructuralError("a t-step walk has t+1 vertices and t labels")

    @property
    def t(self) -> int:
        return len(self.labels)


def validate_walk(g: HybridGraph, w: Walk) -> None:
    cur = w.vertices[0]
    if not (0 <= cur < g.n_vertices):
        raise StructuralError("walk start is not a vertex")
    for step, j in enumerate(w.labels):
        if not (0 <= j < g.d):
            raise StructuralError(f"label {j} at step {step} is not an edge slot")
        cur = g.step(cur, j)
        if cur != w.vertices[step + 1]:
            raise StructuralError("vertex sequence does not match the labels")


def walk_count(g: HybridGraph, t: int) -> int:
    """Number of t-step walks, ``N * d**t``; errors past the 64-bit range."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    total = g.n_vertices * g.d ** t
    if total >= 1 << 63:
        raise BudgetError(f"walk count {total} exceeds the 64-bit range")
    return total


def walk_index(g: HybridGraph, w: Walk) -> int:
    """Mixed-radix index (start vertex most significant, labels in walk order)."""
    idx = w.vertices[0]
    for j in w.labels:
        idx = idx * g.d + j
    return idx


def walk_from_index(g: HybridGraph, t: int, index: int) -> Walk:
    total = walk_count(g, t)
    if not (0 <= index < total):
        raise StructuralError("walk index out of range")
    labels = []
    for _ in range(t):
        labels.append(index % g.d)
        index //= g.d
    labels.reverse()
    start = index
    vertices = [start]
    cur = start
    for j in labels:
        cur = g.step(cur, j)
        vertices.append(cur)
    return Walk(tuple(vertices), tuple(labels))


def sample_walk(g: HybridGraph, t: int, seed: int) -> Walk:
    """Uniform start vertex, then t uniform edge labels."""
    rng = np.random.default_rng(seed)
    start = int(rng.integers(g.n_vertices))
    labels = [int(j) for j in rng.integers(0, g.d, size=t)]
    vertices = [start]
    cur = start
    for j in labels:
        cur = g.step(cur, j)
        vertices.append(cur)
    return Walk(tuple(vertices), tuple(labels))


def enumerate_walk_vertices(g: HybridGraph, t: int) -> np.ndarray:
    """Vertex sequences of every walk, shape ``(N * d**t, t+1)``, row i being the
    walk with index i."""
    total = walk_count(g, t)
    if total > WALK_ENUM_MAX:
        raise BudgetError(f"enumerating {total} walks exceeds the ceiling of {WALK_ENUM_MAX}")
    idx = np.arange(total, dtype=np.int64)
    verts = np.empty((total, t + 1), dtype=np.int64)
    verts[:, 0] = idx // g.d ** t
    cur = verts[:, 0]
    for s in range(1, t + 1):
        lab = (idx // g.d ** (t - s)) % g.d
        cur = g.perm[g.rot.neighbors[cur, lab]]
        verts[:, s] = cur
    return verts


def _as_mask(n: int, subset) -> np.ndarray:
    if isinstance(subset, np.ndarray) and subset.dtype == bool:
        if subset.shape != (n,):
            raise StructuralError("constraint mask has the wrong length")
        return subset
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(list(subset), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise StructuralError("constraint contains a non-vertex")
    mask[idx] = True
    return mask


@dataclass(frozen=True, eq=False)
class TerminalVector:
    """Sub-probability masses over terminal vertices of a constrained walk event."""

    probs: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.probs))


def terminal_vector(g: HybridGraph, t: int, constraints: Sequence) -> TerminalVector:
    """Masses ``p_j = P{walk stays in the constraint sets and ends at j}`` via
    masked matrix products (uniform start, one mask per position 0..t)."""
    constraints = list(constraints)
    if len(constraints) != t + 1:
        raise StructuralError("need one constraint set per walk position (t+1 of them)")
    n = g.n_vertices
    masks = [_as_mask(n, c) for c in constraints]
    a = g.transition().entries
    v = np.where(masks[0], 1.0 / n, 0.0)
    for i in range(1, t + 1):
        v = (v @ a) * masks[i]
    return TerminalVector(v)


@dataclass(frozen=True)
class ExtensionReport:
    prob_base: float
    prob_extended: float
    prob_diff: float
    vector_diff: float

    @property
    def holds(self) -> bool:
        return self.prob_diff <= EXT_TOL and self.vector_diff <= EXT_TOL


def check_extension_identity(g: HybridGraph, t: int, base_indices) -> ExtensionReport:
    """For an explicit event S' over (t-1)-walks and its one-step extension S over
    t-walks: P(S) = P(S') and the terminal vector of S equals that of S' pushed
    through one transition step."""
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    base_indices = np.asarray(sorted(set(int(i) for i in base_indices)), dtype=np.int64)
    n = g.n_vertices
    total_base = walk_count(g, t - 1)
    total_ext = walk_count(g, t)
    if base_indices.size and (base_indices.min() < 0 or base_indices.max() >= total_base):
        raise StructuralError("base event contains an invalid walk index")
    ends = np.empty(base_indices.size, dtype=np.int64)
    for pos, idx in enumerate(base_indices):
        ends[pos] = walk_from_index(g, t - 1, int(idx)).vertices[-1]
    v_base = np.bincount(ends, minlength=n).astype(float) / total_base
    prob_base = base_indices.size / total_base
    # every extension: d fresh labels per base walk
    ext_ends = g.perm[g.rot.neighbors[ends]]            # (|S'|, d)
    v_ext = np.bincount(ext_ends.reshape(-1), minlength=n).astype(float) / total_ext
    prob_ext = base_indices.size * g.d / total_ext
    pushed = v_base @ g.transition().entries
    return ExtensionReport(
        prob_base=float(prob_base),
        prob_extended=float(prob_ext),
        prob_diff=abs(float(prob_ext) - float(prob_base)),
        vector_diff=float(np.max(np.abs(v_ext - pushed))) if n else 0.0,
    )


@dataclass(frozen=True)
class WalkIndependenceReport:
    worst_ratio: float
    witnesses: tuple
    n_single: int
    n_sampled: int
    beta: float

    @property
    def holds(self) -> bool:
        return self.worst_ratio <= 1.0 + RATIO_TOL

    def to_dict(self) -> dict:
        return {
            "worst_ratio": self.worst_ratio,
            "witnesses": [list(w) for w in self.witnesses],
            "n_single": self.n_single,
            "n_sampled": self.n_sampled,
            "beta": self.beta,
            "holds": self.holds,
        }


def _batched_family_probs(a: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Event probabilities for a batch of families; masks has shape (B, t+1, N)."""
    n = a.shape[0]
    v = masks[:, 0, :] / n
    for i in range(1, masks.shape[1]):
        v = (v @ a) * masks[:, i, :]
    return v.sum(axis=1)


def verify_walk_independence(
    g: HybridGraph,
    t: int,
    beta: float,
    mode: str = "exhaustive",
    trials: int = 10_000,
    seed: int = 0,
) -> WalkIndependenceReport:
    """Check the product bound ``P{all positions hit their sets} <=
    prod_i(alpha + beta * mu_i)`` over families of vertex sets.

    ``exhaustive`` sweeps every single-set family (all 2**N subsets, same set at
    each of the t+1 positions) and additionally samples ``trials`` multi-set
    families; ``sampled`` does only the sampling.  ``beta`` is the caller's
    measured spectral gap; marginals are uniform so ``mu = |S|/N`` exactly.
    """
    if not (0.0 <= beta <= 1.0):
        raise ParameterError(f"beta must lie in [0, 1], got {beta}")
    if mode not in ("exhaustive", "sampled"):
        raise ParameterError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    n = g.n_vertices
    alpha = 1.0 - beta
    a = g.transition().entries
    worst = 0.0
    witnesses: list = []
    n_single = 0

    def _note(ratios: np.ndarray, describe) -> None:
        nonlocal worst
        worst = max(worst, float(np.max(ratios)))
        if len(witnesses) < MAX_WITNESSES:
            for idx in np.nonzero(ratios > 1.0 + RATIO_TOL)[0]:
                if len(witnesses) >= MAX_WITNESSES:
                    break
                witnesses.append((describe(int(idx)), float(ratios[idx])))

    if mode == "exhaustive":
        if n > SUBSET_EXH_MAX_N:
            raise BudgetError(
                f"exhaustive single-set sweep needs 2**{n} subsets, over the "
                f"2**{SUBSET_EXH_MAX_N} ceiling"
            )
        n_single = 1 << n
        chunk = 1 << 16
        bit_cols = np.arange(n, dtype=np.int64)
        for lo in range(0, n_single, chunk):
            hi = min(lo + chunk, n_single)
            ids = np.arange(lo, hi, dtype=np.int64)
            masks = ((ids[:, None] >> bit_cols) & 1).astype(float)
            mu = masks.sum(axis=1) / n
            v = masks / n
            for _ in range(t):
                v = (v @ a) * masks
            probs = v.sum(axis=1)
            bound = (alpha + beta * mu) ** (t + 1)
            ratios = np.divide(probs, bound, out=np.zeros_like(probs), where=bound > 0)
            ratios[(bound == 0) & (probs > 0)] = np.inf
            _note(ratios, lambda i, lo=lo: ("single", lo + i))

    n_sampled = 0
    if trials > 0:
        rng = np.random.default_rng(seed)
        chunk = 512
        done = 0
        while done < trials:
            b = min(chunk, trials - done)
            masks = rng.integers(0, 2, size=(b, t + 1, n)).astype(float)
            probs = _batched_family_probs(a, masks)
            mus = masks.sum(axis=2) / n
            bound = np.prod(alpha + beta * mus, axis=1)
            ratios = np.divide(probs, bound, out=np.zeros_like(probs), where=bound > 0)
            ratios[(bound == 0) & (probs > 0)] = np.inf
            mask_ints = (masks.astype(np.int64) << np.arange(n, dtype=np.int64)).sum(axis=2)
            _note(
                ratios,
                lambda i, mi=mask_ints: ("multi", tuple(int(x) for x in mi[i])),
            )
            done += b
            n_sampled += b

    return WalkIndependenceReport(
        worst_ratio=float(worst),
        witnesses=tuple(witnesses),
        n_single=n_single,
        n_sampled=n_sampled,
        beta=beta,
    )


def single_set_event_probs(g: HybridGraph, t: int) -> np.ndarray:
    """Exact single-set family probabilities for every subset, by enumerating the
    walk space: out[T] = P{every walk position lands in T}.

    Independent of the matrix-product route: per-walk vertex bitmasks are counted
    and accumulated with a subset-sum transform.
    """
    n = g.n_vertices
    if n > SUBSET_EXH_MAX_N:
        raise BudgetError(f"subset table needs 2**{n} entries, over the ceiling")
    verts = enumerate_walk_vertices(g, t)
    sig = np.zeros(verts.shape[0], dtype=np.int64)
    for s in range(t + 1):
        sig |= np.int64(1) << verts[:, s]
    counts = np.bincount(sig, minlength=1 << n).astype(float)
    return subset_sums(counts, n) / verts.shape[0]


def family_event_probs(g: HybridGraph, t: int, masks: np.ndarray) -> np.ndarray:
    """Exact probabilities for a batch of families by walk enumeration; ``masks``
    has shape (B, t+1, N) boolean."""
    masks = np.asarray(masks, dtype=bool)
    if masks.ndim != 3 or masks.shape[1] != t + 1 or masks.shape[2] != g.n_vertices:
        raise StructuralError("masks must have shape (B, t+1, N)")
    verts = enumerate_walk_vertices(g, t)
    total = verts.shape[0]
    out = np.empty(masks.shape[0])
    chunk = 256
    for lo in range(0, masks.shape[0], chunk):
        hi = min(lo + chunk, masks.shape[0])
        member = masks[lo:hi, 0][:, verts[:, 0]]
        for s in range(1, t + 1):
            member &= masks[lo:hi, s][:, verts[:, s]]
        out[lo:hi] = member.sum(axis=1) / total
    return out


def family_event_probs_matrix(g: HybridGraph, t: int, masks: np.ndarray) -> np.ndarray:
    """Matrix-product route for a batch of families: same contract as
    family_event_probs, computed via terminal vectors instead of enumeration."""
    masks = np.asarray(masks)
    if masks.ndim != 3 or masks.shape[1] != t + 1 or masks.shape[2] != g.n_vertices:
        raise StructuralError("masks must have shape (B, t+1, N)")
    return _batched_family_probs(g.transition().entries, masks.astype(float))


def projection_objects(g: HybridGraph, t: int) -> tuple:
    """The uniform walk space plus its t+1 position projections as random objects."""
    total = walk_count(g, t)
    if total > WALK_ENUM_MAX:
        raise BudgetError(f"walk space of size {total} exceeds the ceiling")
    verts = enumerate_walk_vertices(g, t)
    space = FiniteSpace.uniform(range(total))
    codomain = tuple(range(g.n_vertices))
    objects = [RandomObject(space, codomain, verts[:, i].copy()) for i in range(t + 1)]
    return space, objects
