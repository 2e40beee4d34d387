"""Subsystem CSS codes built from a pair of even, mutually orthogonal subspaces.

A code is the pair (A, B) of GF(2) subspaces on an odd number of qubits with
A and B orthogonal and all generators of even weight. X-stabilizers come from
A, Z-stabilizers from B; the gauge group is generated by dot(B) (X side) and
dot(A) (Z side), and X_L = X(1...1), Z_L = Z(1...1) are the logical operators.

Pauli errors X(a)Z(b) are tracked modulo the gauge group through packed coset
labels (matB.a in the low bits, matA.b above them), where matA and matB
generate A+<1> and B+<1>. Two errors get equal labels iff they differ by a
gauge element, which is what the decoder and the Monte Carlo both rely on.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import f2
from .f2 import Subspace

EXHAUSTIVE_DIM_LIMIT = 20
CLEANABILITY_QUBIT_LIMIT = 25


class CodeConstructionError(ValueError):
    """A make_code precondition failed; the message names the condition."""


class CapacityError(ValueError):
    """The requested table or enumeration exceeds the supported size."""


@dataclass(frozen=True)
class EvennessWitness:
    """Disjoint site sets M+ / M- certifying a mod-4 or mod-8 weight condition."""

    plus: int          # packed site mask
    minus: int
    order: int         # 4 or 8

    def __post_init__(self) -> None:
        if self.order not in (4, 8):
            raise ValueError("order must be 4 or 8")
        if self.plus & self.minus:
            raise ValueError("witness sets must be disjoint")
        if self.plus == 0 and self.minus == 0:
            raise ValueError("at least one witness set must be non-empty")

    @classmethod
    def from_sites(cls, plus: Iterable[int], minus: Iterable[int], order: int) -> "EvennessWitness":
        return cls(f2.vector_from_support(plus), f2.vector_from_support(minus), order)

    @property
    def m(self) -> int:
        """Signed size |M+| - |M-|."""
        return self.plus.bit_count() - self.minus.bit_count()

    def signed_overlap(self, v: int) -> int:
        return (v & self.plus).bit_count() - (v & self.minus).bit_count()

    def embed(self, positions: Sequence[int]) -> "EvennessWitness":
        """Witness with sites remapped by an index embedding (site i -> positions[i])."""
        return EvennessWitness(
            f2.embed(self.plus, positions), f2.embed(self.minus, positions), self.order
        )

    def to_json(self) -> dict:
        return {
            "plus": list(f2.support(self.plus)),
            "minus": list(f2.support(self.minus)),
            "order": self.order,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvennessWitness":
        return cls.from_sites(obj["plus"], obj["minus"], obj["order"])


def check_evenness(s: Subspace, witness: EvennessWitness) -> bool:
    """Whether |f & M+| - |f & M-| vanishes mod `order` for every f in S.

    Up to EXHAUSTIVE_DIM_LIMIT generators the whole space is enumerated.
    Beyond that the check uses the inclusion-exclusion expansion of weights:
    basis conditions mod `order`, pairwise intersection conditions mod
    order/2, and (for order 8) triple intersection conditions mod 2. Those
    conditions are sufficient for the whole space, not just the basis.
    """
    w = witness
    if s.dim <= EXHAUSTIVE_DIM_LIMIT:
        return all(w.signed_overlap(v) % w.order == 0 for v in s.elements())
    basis = s.basis
    if any(w.signed_overlap(b) % w.order for b in basis):
        return False
    half = w.order // 2
    for i, j in itertools.combinations(range(len(basis)), 2):
        if w.signed_overlap(basis[i] & basis[j]) % half:
            return False
    if w.order == 8:
        for i, j, k in itertools.combinations(range(len(basis)), 3):
            if w.signed_overlap(basis[i] & basis[j] & basis[k]) % 2:
                return False
    return True


@dataclass(frozen=True)
class CosetMap:
    """Label map for Pauli errors modulo the gauge group.

    mat_b rows generate B+<1> and act on the X part a; mat_a rows generate
    A+<1> and act on the Z part b. label(a, b) packs mat_b.a into the low
    len(mat_b) bits and mat_a.b above them.
    """

    n: int
    mat_a: tuple[int, ...]
    mat_b: tuple[int, ...]

    @property
    def alpha_bits(self) -> int:
        return len(self.mat_b)

    @property
    def beta_bits(self) -> int:
        return len(self.mat_a)

    @property
    def c(self) -> int:
        return self.alpha_bits + self.beta_bits

    def label_x(self, a: int) -> int:
        out = 0
        for i, row in enumerate(self.mat_b):
            out |= ((row & a).bit_count() & 1) << i
        return out

    def label_z(self, b: int) -> int:
        out = 0
        for i, row in enumerate(self.mat_a):
            out |= ((row & b).bit_count() & 1) << i
        return out

    def label(self, a: int, b: int) -> int:
        return self.label_x(a) | (self.label_z(b) << self.alpha_bits)

    def split(self, label: int) -> tuple[int, int]:
        return label & ((1 << self.alpha_bits) - 1), label >> self.alpha_bits

    def join(self, alpha: int, beta: int) -> int:
        return alpha | (beta << self.alpha_bits)


class SubsystemCode:
    """CSS code defined by (A, B); see the module docstring for conventions."""

    def __init__(self, a_space: Subspace, b_space: Subspace, coset_map: CosetMap):
        self.n = a_space.n
        self.a_space = a_space
        self.b_space = b_space
        self.coset_map = coset_map

    @cached_property
    def dot_a(self) -> Subspace:
        """Z-type gauge generators."""
        return self.a_space.dot_space()

    @cached_property
    def dot_b(self) -> Subspace:
        """X-type gauge generators."""
        return self.b_space.dot_space()

    @property
    def is_regular(self) -> bool:
        return self.a_space == self.dot_b

    def distance(self, max_weight: int | None = None) -> int | None:
        da = f2.min_odd_weight(self.a_space, max_weight)
        db = f2.min_odd_weight(self.b_space, max_weight)
        if da is None or db is None:
            return None
        return min(da, db)

    def coset_label(self, a: int, b: int) -> int:
        return self.coset_map.label(a, b)


def make_code(
    a_space: Subspace,
    b_space: Subspace,
    mat_a: Sequence[int] | None = None,
    mat_b: Sequence[int] | None = None,
) -> SubsystemCode:
    """Build a subsystem CSS code, validating the structural preconditions.

    Explicit mat_a / mat_b rows may be supplied to fix the label basis (the
    protocol uses this to nest the label spaces of deformed codes); they must
    generate A+<1> and B+<1> exactly.
    """
    n = a_space.n
    if b_space.n != n:
        raise CodeConstructionError("A and B have different qubit counts")
    if n % 2 == 0:
        raise CodeConstructionError("qubit count must be odd")
    even = Subspace.even(n)
    if not even.contains_subspace(a_space):
        raise CodeConstructionError("A is not contained in the even subspace")
    if not even.contains_subspace(b_space):
        raise CodeConstructionError("B is not contained in the even subspace")
    for x in a_space.basis:
        for z in b_space.basis:
            if f2.dot(x, z):
                raise CodeConstructionError("A and B are not mutually orthogonal")
    ones = (1 << n) - 1
    mat_a = tuple(mat_a) if mat_a is not None else a_space.basis + (ones,)
    mat_b = tuple(mat_b) if mat_b is not None else b_space.basis + (ones,)
    for rows, space, name in ((mat_a, a_space, "mat_a"), (mat_b, b_space, "mat_b")):
        target = space + Subspace(n, [ones])
        if Subspace(n, rows) != target or len(rows) != target.dim:
            raise CodeConstructionError(f"{name} rows do not form a basis of the space plus <1>")
    return SubsystemCode(a_space, b_space, CosetMap(n, mat_a, mat_b))


def verify_transversality(
    code: SubsystemCode, gate: str, witness: EvennessWitness | None = None
) -> bool:
    """Sufficient-condition check for a transversal T, S, or H gate."""
    if gate == "H":
        return code.a_space == code.b_space
    if gate not in ("T", "S"):
        raise ValueError(f"unknown gate {gate!r}")
    if witness is None:
        raise ValueError(f"gate {gate} requires an evenness witness")
    if witness.m % 2 == 0:
        return False
    if gate == "T":
        if witness.order != 8 or code.b_space != code.dot_a:
            return False
        return check_evenness(code.a_space, witness)
    if witness.order != 4 or not code.b_space.contains_subspace(code.a_space):
        return False
    return check_evenness(code.a_space, witness)


# ---------------------------------------------------------------------------
# Cleanability
# ---------------------------------------------------------------------------

def odd_dual_vectors(a_space: Subspace) -> list[int]:
    """All odd-weight vectors of A-perp (undetectable non-trivial Z errors)."""
    perp = a_space.orthogonal_complement()
    if perp.dim > 26:
        raise CapacityError("A-perp too large to enumerate")
    return [v for v in perp.elements() if v.bit_count() & 1]


def is_clean_representative(a_space: Subspace, e: int, odd_duals: Sequence[int] | None = None) -> bool:
    """No odd-weight vector of A-perp has support inside e."""
    if odd_duals is None:
        odd_duals = odd_dual_vectors(a_space)
    return all(g & ~e for g in odd_duals)


def clean_system_solvable(a_space: Subspace, e: int) -> bool:
    """Linear-system version of the representative test.

    Solves for g odd with g supported in e and g orthogonal to A; returns
    True when such g exists (so e fails the cleanability support test).
    """
    positions = f2.support(e)
    k = len(positions)
    rows = [f2.restrict(row, positions) for row in a_space.basis]
    rows.append((1 << k) - 1)
    rhs = [0] * a_space.dim + [1]
    g, _ = f2.solve_linear(rows, rhs, k)
    return g is not None


@dataclass(frozen=True)
class CleanabilityTable:
    """Per-coset cleanability of A with a stored clean representative.

    Cosets are keyed by the X label mat_b.e. Representatives are chosen of
    minimum weight with ties broken by the smallest packed bit pattern, so
    the table is deterministic.
    """

    code: SubsystemCode
    cleanable: frozenset[int]
    representative: dict[int, int]

    def is_cleanable(self, alpha: int) -> bool:
        return alpha in self.cleanable

    def rep(self, alpha: int) -> int:
        return self.representative[alpha]


def build_cleanability_table(code: SubsystemCode) -> CleanabilityTable:
    """Scan all of F2^n, marking cosets of A that admit a clean representative."""
    n = code.n
    if not code.is_regular:
        raise CodeConstructionError("cleanability table requires a regular code")
    if n > CLEANABILITY_QUBIT_LIMIT:
        raise CapacityError(f"cleanability scan over 2^{n} vectors is not supported")
    odd_duals = np.array(odd_dual_vectors(code.a_space), dtype=np.uint64)
    vectors = np.arange(1 << n, dtype=np.uint64)
    clean = np.ones(1 << n, dtype=bool)
    for g in odd_duals:
        clean &= (g & ~vectors) != 0
    # Coset label of every vector, built bit by bit.
    labels = np.zeros(1 << n, dtype=np.uint32)
    for j in range(n):
        col = np.uint32(code.coset_map.label_x(1 << j))
        labels ^= np.where((vectors >> np.uint64(j)) & np.uint64(1), col, np.uint32(0))
    weights = np.bitwise_count(vectors)
    cleanable: set[int] = set()
    representative: dict[int, int] = {}
    order = np.lexsort((vectors, weights))
    for idx in order:
        if not clean[idx]:
            continue
        alpha = int(labels[idx])
        if alpha not in cleanable:
            cleanable.add(alpha)
            representative[alpha] = int(vectors[idx])
    return CleanabilityTable(code, frozenset(cleanable), representative)


# ---------------------------------------------------------------------------
# Code JSON
# ---------------------------------------------------------------------------

def code_to_json(
    name: str,
    n: int,
    a_space: Subspace,
    b_space: Subspace,
    witness: EvennessWitness | None,
) -> dict:
    obj = {
        "n": n,
        "name": name,
        "A": [f2.row_to_hex(row, n) for row in a_space.basis],
        "B": [f2.row_to_hex(row, n) for row in b_space.basis],
    }
    if witness is not None:
        obj["witness"] = witness.to_json()
    return obj


def spaces_from_json(obj: dict) -> tuple[int, Subspace, Subspace, EvennessWitness | None]:
    n = obj["n"]
    a = Subspace(n, [f2.hex_to_row(row, n) for row in obj["A"]])
    b = Subspace(n, [f2.hex_to_row(row, n) for row in obj["B"]])
    witness = EvennessWitness.from_json(obj["witness"]) if "witness" in obj else None
    return n, a, b, witness


def dump_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
