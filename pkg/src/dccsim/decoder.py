"""Maximum-likelihood decoding over gauge-group cosets.

The decoder state is a likelihood vector over the 2^c coset labels of the
current gauge group. Labels pack the X-error part in the low alpha_bits and
the Z-error part above (see csscode.CosetMap). Six update kinds drive it:

  memory     rho <- P rho, with P(f, g) = P(f + g) a coset-shift mixture.
             The dense engine conjugates by the Walsh-Hadamard transform so
             the cost is O(c 2^c); the sparse engine convolves with an
             explicit short list of shifts.
  syndrome   per-label reweighting by the bit-flip likelihood of the
             observed syndrome against the label's ideal syndrome.
  deform     merge (gauge group grows: labels project) or split (gauge group
             shrinks: labels expand uniformly over the new bits).
  clifford   an invertible linear relabeling.
  recovery   shift of the X part by the most likely X coset.
  t_gate     projection onto cleanable X cosets followed by the per-coset
             Z-block operator Gamma, applied in the transformed basis where
             it is diagonal.

Weights are renormalized to max = 1 after every update (the overall scale
carries no information and would otherwise underflow over long runs). The
dense engine is exact; the sparse engine tracks an explicit support and is
the path past label widths where 2^c arrays are infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import f2
from .csscode import CleanabilityTable, SubsystemCode
from .f2 import fwht
from .noise import CliffordAction, TPropagator


class DegeneratePosteriorError(RuntimeError):
    """Every coset got zero weight (possible only with exact syndromes)."""


class NumericError(RuntimeError):
    """An update produced weights below the negativity tolerance."""


NEG_TOL = 1e-12

# Weights this close (relatively) to the maximum count as tied; ties resolve
# to the smallest label so both engines decide identically.
TIE_TOL = 1e-12


def _argmax_smallest(labels: np.ndarray, weights: np.ndarray) -> int:
    m = weights.max()
    tied = labels[weights >= m * (1.0 - TIE_TOL)]
    return int(tied.min())


_CLIFFORD_INDEX_CACHE: dict[tuple, np.ndarray] = {}


def _clifford_gather_index(layout: "LabelLayout", action: CliffordAction) -> np.ndarray:
    """Gather index realizing rho'(v f) = rho(f) for the label relabeling v."""
    if layout.alpha_bits != layout.beta_bits:
        raise ValueError("clifford relabeling needs matching alpha/beta widths")
    key = (layout, action.img_x, action.img_z)
    cached = _CLIFFORD_INDEX_CACHE.get(key)
    if cached is not None:
        return cached
    labels = np.arange(layout.size, dtype=np.uint32)
    alpha = labels & np.uint32((1 << layout.alpha_bits) - 1)
    beta = labels >> np.uint32(layout.alpha_bits)
    p, q, r, s = action.p, action.q, action.r, action.s
    # Inverse action: the adjugate of [[p, r], [q, s]] over GF(2).
    old_alpha = (alpha * s) ^ (beta * r)
    old_beta = (alpha * q) ^ (beta * p)
    src = old_alpha | (old_beta << np.uint32(layout.alpha_bits))
    _CLIFFORD_INDEX_CACHE[key] = src
    return src


@dataclass(frozen=True)
class LabelLayout:
    alpha_bits: int
    beta_bits: int

    @property
    def c(self) -> int:
        return self.alpha_bits + self.beta_bits

    @property
    def size(self) -> int:
        return 1 << self.c

    def split(self, label: int) -> tuple[int, int]:
        return label & ((1 << self.alpha_bits) - 1), label >> self.alpha_bits

    def join(self, alpha: int, beta: int) -> int:
        return alpha | (beta << self.alpha_bits)


def _parity_fold(values: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(values.astype(np.uint64)) & np.uint64(1)).astype(np.uint8)


def _syndrome_of(labels: np.ndarray, rows: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(labels.shape, dtype=np.uint32)
    for i, row in enumerate(rows):
        out |= _parity_fold(labels & np.uint32(row)).astype(np.uint32) << np.uint32(i)
    return out


@dataclass(frozen=True)
class SyndromeMap:
    """Linear map from coset labels to ideal syndrome bits.

    rows[i] is a mask over label bits; syndrome bit i is the parity of the
    masked label. Logical labels must map to zero (measurements never read
    the encoded qubit).
    """

    rows: tuple[int, ...]
    layout: LabelLayout

    @property
    def width(self) -> int:
        return len(self.rows)

    @cached_property
    def table(self) -> np.ndarray:
        labels = np.arange(self.layout.size, dtype=np.uint32)
        return _syndrome_of(labels, self.rows)

    def syndrome_of(self, labels: np.ndarray) -> np.ndarray:
        return _syndrome_of(labels, self.rows)


@dataclass(frozen=True)
class DeformationMap:
    """Label map across a gauge-group change.

    merge (the gauge group grows): new label bit i is the parity of
    rows[i] & old_label; every old label determines one new label.
    split (the gauge group shrinks): old label bit i is the parity of
    rows[i] & new_label; each old label expands uniformly over its preimage.
    """

    direction: str              # "merge" | "split"
    rows: tuple[int, ...]
    old_layout: LabelLayout
    new_layout: LabelLayout

    def __post_init__(self) -> None:
        if self.direction not in ("merge", "split"):
            raise ValueError("direction must be 'merge' or 'split'")
        expected = self.new_layout.c if self.direction == "merge" else self.old_layout.c
        if len(self.rows) != expected:
            raise ValueError("row count does not match the target label width")

    @cached_property
    def dense_index(self) -> np.ndarray:
        if self.direction == "merge":
            labels = np.arange(self.old_layout.size, dtype=np.uint32)
        else:
            labels = np.arange(self.new_layout.size, dtype=np.uint32)
        return _syndrome_of(labels, self.rows)

    @cached_property
    def _split_solution(self) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
        """For splits: per-old-bit particular rows and the preimage kernel."""
        c_new = self.new_layout.c
        particular_rows = []
        for i in range(self.old_layout.c):
            x, _ = f2.solve_linear(list(self.rows), [1 if j == i else 0 for j in range(len(self.rows))], c_new)
            if x is None:
                raise ValueError("split map is not surjective")
            particular_rows.append(x)
        kernel = f2.nullspace(self.rows, c_new)
        return 0, tuple(particular_rows), kernel

    def split_preimage(self, old_label: int) -> list[int]:
        _, particular_rows, kernel = self._split_solution
        base = 0
        for i, row in enumerate(particular_rows):
            if (old_label >> i) & 1:
                base ^= row
        out = [base]
        for k in kernel:
            out += [v ^ k for v in out]
        return out


@dataclass(frozen=True)
class TGateUpdate:
    """Precomputed data for the transversal-T likelihood update.

    gamma_hat[beta, alpha] is the diagonal of the transformed Z-block
    operator for the cleanable X coset alpha: the masked vector
    J_e A^T beta is either a member of the self-orthogonal subgroup inside
    e(alpha), contributing (-1)^(|.|/2), or the entry is zero. Columns of
    non-cleanable alpha are unused (the projection removes them first).
    """

    layout: LabelLayout
    cleanable_mask: np.ndarray       # bool, 2^alpha_bits
    gamma_hat: np.ndarray            # float64, (2^beta_bits, 2^alpha_bits)


def build_t_gate_update(
    code: SubsystemCode, table: CleanabilityTable, prop: TPropagator, layout: LabelLayout
) -> TGateUpdate:
    cm = code.coset_map
    if (cm.alpha_bits, cm.beta_bits) != (layout.alpha_bits, layout.beta_bits):
        raise ValueError("layout does not match the code's coset map")
    n_alpha, n_beta = 1 << layout.alpha_bits, 1 << layout.beta_bits
    mask = np.zeros(n_alpha, dtype=bool)
    gamma = np.zeros((n_beta, n_alpha), dtype=np.float64)
    # A^T beta for every beta, as packed qubit-line vectors.
    at_beta = [0] * n_beta
    for beta in range(n_beta):
        v = 0
        for i, row in enumerate(cm.mat_a):
            if (beta >> i) & 1:
                v ^= row
        at_beta[beta] = v
    for alpha in table.cleanable:
        mask[alpha] = True
        cp = prop.coset(alpha)
        radical = f2.Subspace(code.n, cp.radical)
        e = cp.rep
        for beta in range(n_beta):
            g = at_beta[beta] & e
            if radical.contains(g):
                gamma[beta, alpha] = -1.0 if (g.bit_count() // 2) % 2 else 1.0
    return TGateUpdate(layout=layout, cleanable_mask=mask, gamma_hat=gamma)


def gamma_hat_direct(
    code: SubsystemCode, prop: TPropagator, alpha: int, beta: int
) -> float:
    """Reference evaluation: direct sum over f inside e(alpha)."""
    from .noise import p_f_given_e

    cm = code.coset_map
    v = 0
    for i, row in enumerate(cm.mat_a):
        if (beta >> i) & 1:
            v ^= row
    acc = 0.0
    for fvec, pf in p_f_given_e(prop, alpha).items():
        acc += pf * (-1.0) ** f2.dot(v, fvec)
    return acc


def transformed_depolarizing(coset_map, p: float) -> np.ndarray:
    """Walsh-Hadamard transform of the depolarizing coset distribution.

    For a product channel the transform factorizes per qubit: the entry at
    label f is (1 - 4p/3)^k(f), where k(f) counts the qubits touched by the
    transposed label map applied to f.
    """
    u = np.zeros(1 << coset_map.alpha_bits, dtype=np.uint64)
    for alpha in range(1 << coset_map.alpha_bits):
        v = 0
        for i, row in enumerate(coset_map.mat_b):
            if (alpha >> i) & 1:
                v ^= row
        u[alpha] = v
    w = np.zeros(1 << coset_map.beta_bits, dtype=np.uint64)
    for beta in range(1 << coset_map.beta_bits):
        v = 0
        for i, row in enumerate(coset_map.mat_a):
            if (beta >> i) & 1:
                v ^= row
        w[beta] = v
    touched = np.bitwise_count(u[np.newaxis, :] | w[:, np.newaxis])
    return np.power(1.0 - 4.0 * p / 3.0, touched).reshape(-1)


# ---------------------------------------------------------------------------
# Dense engine
# ---------------------------------------------------------------------------

class DenseLikelihood:
    """Exact likelihood vector over all 2^c labels."""

    def __init__(self, layout: LabelLayout, weights: np.ndarray | None = None):
        self.layout = layout
        if weights is None:
            weights = np.zeros(layout.size, dtype=np.float64)
            weights[0] = 1.0
        self.weights = weights

    def copy(self) -> "DenseLikelihood":
        return DenseLikelihood(self.layout, self.weights.copy())

    def _renormalize(self) -> None:
        m = self.weights.max()
        if m <= 0.0:
            raise DegeneratePosteriorError("all coset weights vanished")
        self.weights /= m

    def normalized(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def apply_memory(self, p_hat: np.ndarray) -> None:
        if p_hat.shape != self.weights.shape:
            raise ValueError("transformed coset distribution has wrong length")
        fwht(self.weights)
        self.weights *= p_hat
        fwht(self.weights)
        floor = self.weights.min()
        if floor < -NEG_TOL * max(1.0, self.weights.max()):
            raise NumericError(f"negative weight {floor} after memory update")
        np.maximum(self.weights, 0.0, out=self.weights)
        self._renormalize()

    def apply_syndrome(self, smap: SyndromeMap, observed: int, q: float) -> None:
        mismatch = np.bitwise_count(smap.table ^ np.uint32(observed))
        if q == 0.0:
            self.weights *= mismatch == 0
        else:
            self.weights *= np.power(q, mismatch) * np.power(1.0 - q, smap.width - mismatch)
        self._renormalize()

    def deform(self, dmap: DeformationMap) -> None:
        if dmap.direction == "merge":
            new = np.bincount(
                dmap.dense_index, weights=self.weights, minlength=dmap.new_layout.size
            )
        else:
            scale = 2.0 ** (dmap.old_layout.c - dmap.new_layout.c)
            new = self.weights[dmap.dense_index] * scale
        self.layout = dmap.new_layout
        self.weights = new
        self._renormalize()

    def apply_clifford(self, action: CliffordAction) -> None:
        self.weights = self.weights[_clifford_gather_index(self.layout, action)]

    def choose_recovery(self) -> int:
        lay = self.layout
        per_alpha = self.weights.reshape(1 << lay.beta_bits, 1 << lay.alpha_bits).sum(axis=0)
        alpha_star = _argmax_smallest(np.arange(1 << lay.alpha_bits, dtype=np.uint32), per_alpha)
        if alpha_star:
            labels = np.arange(lay.size, dtype=np.uint32)
            self.weights = self.weights[labels ^ np.uint32(alpha_star)]
        return alpha_star

    def apply_t_gate(self, update: TGateUpdate) -> None:
        lay = self.layout
        if update.layout != lay:
            raise ValueError("T-gate table was built for a different label layout")
        block = self.weights.reshape(1 << lay.beta_bits, 1 << lay.alpha_bits)
        block *= update.cleanable_mask[np.newaxis, :]
        if not block.any():
            raise DegeneratePosteriorError("no weight on cleanable cosets")
        fwht(block, axis=0)
        block *= update.gamma_hat
        fwht(block, axis=0)
        block /= 1 << lay.beta_bits
        floor = block.min()
        if floor < -NEG_TOL * max(1.0, block.max()):
            raise NumericError(f"negative weight {floor} after T update")
        np.maximum(block, 0.0, out=block)
        self.weights = block.reshape(-1)
        self._renormalize()

    def truncate(self, eps: float) -> None:
        pass  # dense engine never drops support

    def final_coset(self) -> int:
        return _argmax_smallest(np.arange(self.layout.size, dtype=np.uint32), self.weights)

    def entropy(self) -> float:
        p = self.normalized()
        nz = p[p > 0]
        return float(-(nz * np.log2(nz)).sum())

    def support_size(self) -> int:
        return int(np.count_nonzero(self.weights))


# ---------------------------------------------------------------------------
# Sparse engine
# ---------------------------------------------------------------------------

class SparseLikelihood:
    """Likelihood vector with explicit support (label and weight arrays)."""

    def __init__(
        self,
        layout: LabelLayout,
        labels: np.ndarray | None = None,
        weights: np.ndarray | None = None,
    ):
        self.layout = layout
        self.labels = labels if labels is not None else np.zeros(1, dtype=np.uint32)
        self.weights = weights if weights is not None else np.ones(1, dtype=np.float64)

    def copy(self) -> "SparseLikelihood":
        return SparseLikelihood(self.layout, self.labels.copy(), self.weights.copy())

    def _compact(self) -> None:
        labels, inv = np.unique(self.labels, return_inverse=True)
        weights = np.zeros(len(labels), dtype=np.float64)
        np.add.at(weights, inv, self.weights)
        keep = weights > 0.0
        self.labels, self.weights = labels[keep], weights[keep]
        if len(self.labels) == 0:
            raise DegeneratePosteriorError("all coset weights vanished")
        self.weights /= self.weights.max()

    def apply_memory(self, shifts: np.ndarray, shift_weights: np.ndarray) -> None:
        self.labels = (self.labels[:, None] ^ shifts[None, :]).reshape(-1)
        self.weights = (self.weights[:, None] * shift_weights[None, :]).reshape(-1)
        self._compact()

    def apply_syndrome(self, smap: SyndromeMap, observed: int, q: float) -> None:
        mismatch = np.bitwise_count(smap.syndrome_of(self.labels) ^ np.uint32(observed))
        if q == 0.0:
            self.weights = self.weights * (mismatch == 0)
        else:
            self.weights = self.weights * np.power(q, mismatch) * np.power(1.0 - q, smap.width - mismatch)
        self._compact()

    def deform(self, dmap: DeformationMap) -> None:
        if dmap.direction == "merge":
            self.labels = _syndrome_of(self.labels, dmap.rows)
        else:
            expansion = 1 << (dmap.new_layout.c - dmap.old_layout.c)
            new_labels = np.empty(len(self.labels) * expansion, dtype=np.uint32)
            new_weights = np.empty(len(self.labels) * expansion, dtype=np.float64)
            for i, (lab, w) in enumerate(zip(self.labels, self.weights)):
                pre = dmap.split_preimage(int(lab))
                new_labels[i * expansion : (i + 1) * expansion] = pre
                new_weights[i * expansion : (i + 1) * expansion] = w / expansion
            self.labels, self.weights = new_labels, new_weights
        self.layout = dmap.new_layout
        self._compact()

    def apply_clifford(self, action: CliffordAction) -> None:
        lay = self.layout
        if lay.alpha_bits != lay.beta_bits:
            raise ValueError("clifford relabeling needs matching alpha/beta widths")
        alpha = self.labels & np.uint32((1 << lay.alpha_bits) - 1)
        beta = self.labels >> np.uint32(lay.alpha_bits)
        p, q, r, s = action.p, action.q, action.r, action.s
        new_alpha = (alpha * p) ^ (beta * r)
        new_beta = (alpha * q) ^ (beta * s)
        self.labels = new_alpha | (new_beta << np.uint32(lay.alpha_bits))
        self._compact()

    def choose_recovery(self) -> int:
        lay = self.layout
        alpha = self.labels & np.uint32((1 << lay.alpha_bits) - 1)
        mass = np.bincount(alpha, weights=self.weights, minlength=1 << lay.alpha_bits)
        alpha_star = _argmax_smallest(np.arange(1 << lay.alpha_bits, dtype=np.uint32), mass)
        if alpha_star:
            self.labels = self.labels ^ np.uint32(alpha_star)
        return alpha_star

    def apply_t_gate(self, update: TGateUpdate) -> None:
        lay = self.layout
        if update.layout != lay:
            raise ValueError("T-gate table was built for a different label layout")
        alpha = self.labels & np.uint32((1 << lay.alpha_bits) - 1)
        beta = self.labels >> np.uint32(lay.alpha_bits)
        keep = update.cleanable_mask[alpha]
        if not keep.any():
            raise DegeneratePosteriorError("no weight on cleanable cosets")
        alpha, beta, weights = alpha[keep], beta[keep], self.weights[keep]
        n_beta = 1 << lay.beta_bits
        out_labels: list[np.ndarray] = []
        out_weights: list[np.ndarray] = []
        for a in np.unique(alpha):
            sel = alpha == a
            vec = np.zeros(n_beta, dtype=np.float64)
            np.add.at(vec, beta[sel], weights[sel])
            fwht(vec)
            vec *= update.gamma_hat[:, a]
            fwht(vec)
            vec /= n_beta
            np.maximum(vec, 0.0, out=vec)
            nz = np.flatnonzero(vec)
            out_labels.append(np.uint32(a) | (nz.astype(np.uint32) << np.uint32(lay.alpha_bits)))
            out_weights.append(vec[nz])
        self.labels = np.concatenate(out_labels)
        self.weights = np.concatenate(out_weights)
        self._compact()

    def truncate(self, eps: float) -> None:
        total = self.weights.sum()
        probs = self.weights / total
        keep = probs >= eps
        keep[np.argmax(self.weights)] = True
        self.labels, self.weights = self.labels[keep], self.weights[keep]
        self.weights /= self.weights.max()

    def final_coset(self) -> int:
        return _argmax_smallest(self.labels, self.weights)

    def entropy(self) -> float:
        p = self.weights / self.weights.sum()
        return float(-(p * np.log2(p)).sum())

    def support_size(self) -> int:
        return len(self.labels)

    def dense_weights(self) -> np.ndarray:
        out = np.zeros(self.layout.size, dtype=np.float64)
        out[self.labels] = self.weights
        return out


def init_likelihood(layout: LabelLayout, engine: str):
    if engine == "exact":
        return DenseLikelihood(layout)
    if engine == "sparse":
        return SparseLikelihood(layout)
    raise ValueError(f"unknown engine {engine!r}")
