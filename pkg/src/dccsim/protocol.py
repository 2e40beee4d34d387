"""Fault-tolerant Clifford+T Monte Carlo on the 15-qubit code family.

A trial alternates C-rounds and T-rounds. Each C-round deforms the gauge
group from the T-code through the base code to the C-code, applies memory
noise, measures the 14 face generators (X and Z type) with noisy outcomes,
updates the decoder, runs the logical-error test, and applies a random
transversal Clifford when the previous syndrome test passed. Each T-round
deforms back, measures the 9 double-edge Z generators, updates the decoder,
runs the logical-error test, and runs the syndrome test over the completed
C,T pair: on success the decoder's recovery is applied to the frame, the
frame's X coset must be cleanable, and the transversal T gate is applied
(decoder Gamma update, frame propagation, stabilizer twirl); on failure the
pair implements no gate and another pair is requested.

Label bases of the three codes are nested so that deformations are pure bit
projections/insertions: the base-code rows are a shared prefix of both the
C-code and T-code rows, with the C-code adding three Z-side rows and the
T-code adding three X-side (double-edge) rows.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import f2
from .codefamily import cached_doubled
from .csscode import CleanabilityTable, SubsystemCode, build_cleanability_table, make_code
from .decoder import (
    DeformationMap,
    LabelLayout,
    SyndromeMap,
    TGateUpdate,
    build_t_gate_update,
    init_likelihood,
    transformed_depolarizing,
)
from .noise import (
    CLIFFORD_CLASSES,
    CliffordAction,
    ErrorModel,
    PauliFrame,
    TPropagator,
    flip_syndrome,
    propagate_through_t,
    random_element,
    sample_clifford,
    sample_memory_error,
)

N_QUBITS = 15


@dataclass(frozen=True)
class StageContext:
    """One code of the deformation cycle with its label bookkeeping."""

    name: str
    code: SubsystemCode
    layout: LabelLayout
    logical_x: int
    logical_z: int

    @property
    def nontrivial_logical_labels(self) -> frozenset[int]:
        return frozenset({self.logical_x, self.logical_z, self.logical_x ^ self.logical_z})

    def frame_label(self, frame: PauliFrame) -> int:
        return self.code.coset_map.label(frame.a, frame.b)


def _express(rows: tuple[int, ...], target: int, n: int) -> int:
    combo = f2.SpanSolver(rows, n).express(target)
    if combo is None:
        raise AssertionError("vector not expressible in the chosen label rows")
    return combo


class Family15:
    """All precomputed data for the t=1 protocol (codes, maps, tables)."""

    def __init__(self) -> None:
        doubled = cached_doubled(1)
        self.doubled = doubled
        lat = doubled.lattices[1]
        layout = doubled.layout
        t_space, c_space, dot_t = doubled.t_space, doubled.c_space, doubled.dot_t_space
        ones = (1 << N_QUBITS) - 1

        faces_a = [f.bits << layout.offset("A1") for f in lat.faces]
        faces_b = [f.bits << layout.offset("B1") for f in lat.faces]
        double_faces = [a | b for a, b in zip(faces_a, faces_b)]
        bc = layout.embed((1 << 7) - 1, "B1") | layout.embed(1, "A0")
        omega_face = layout.embed(lat.boundary_bits(1), "B1") | layout.embed(1, "A0")
        edges = [
            (lat.edge_bits(e) << layout.offset("A1")) | (lat.edge_bits(e) << layout.offset("B1"))
            for e in lat.edges
        ]

        rows_t = tuple(double_faces) + (bc, ones)
        rows_c = rows_t + tuple(faces_a)
        extra_edges = []
        solver = f2.SpanSolver(rows_c, N_QUBITS)
        for e in edges:
            if solver.express(e) is None:
                extra_edges.append(e)
                solver = f2.SpanSolver(rows_c + tuple(extra_edges), N_QUBITS)
        if len(extra_edges) != 3:
            raise AssertionError("expected exactly three independent extra edge rows")
        rows_dot_t = rows_c + tuple(extra_edges)

        t_code = make_code(t_space, dot_t, mat_a=rows_t, mat_b=rows_dot_t)
        base_code = make_code(t_space, c_space, mat_a=rows_t, mat_b=rows_c)
        c_code = make_code(c_space, c_space, mat_a=rows_c, mat_b=rows_c)

        def stage(name: str, code: SubsystemCode) -> StageContext:
            cm = code.coset_map
            return StageContext(
                name=name,
                code=code,
                layout=LabelLayout(cm.alpha_bits, cm.beta_bits),
                logical_x=cm.label(ones, 0),
                logical_z=cm.label(0, ones),
            )

        self.t_stage = stage("t", t_code)
        self.base_stage = stage("base", base_code)
        self.c_stage = stage("c", c_code)

        lay_t, lay_b, lay_c = self.t_stage.layout, self.base_stage.layout, self.c_stage.layout
        base_bits_in_t = tuple(1 << k for k in range(8)) + tuple(1 << k for k in range(11, 16))
        base_bits_in_c = tuple(1 << k for k in range(13))
        self.t_to_base = DeformationMap("merge", base_bits_in_t, lay_t, lay_b)
        self.base_to_c = DeformationMap("split", base_bits_in_c, lay_b, lay_c)
        self.c_to_base = DeformationMap("merge", base_bits_in_c, lay_c, lay_b)
        self.base_to_t = DeformationMap("split", base_bits_in_t, lay_b, lay_t)

        # Measured generators. C-round: xi and zeta of the seven faces;
        # T-round: zeta of the nine double edges.
        self.faces_measured = tuple(faces_a + faces_b + [omega_face])
        self.edges_measured = tuple(edges)
        xi_rows = tuple(
            _express(rows_c, g, N_QUBITS) << lay_c.alpha_bits for g in self.faces_measured
        )
        zeta_rows = tuple(_express(rows_c, g, N_QUBITS) for g in self.faces_measured)
        self.m_c = SyndromeMap(xi_rows + zeta_rows, lay_c)
        self.m_t = SyndromeMap(
            tuple(_express(rows_dot_t, g, N_QUBITS) for g in self.edges_measured), lay_t
        )
        for smap, ctx in ((self.m_c, self.c_stage), (self.m_t, self.t_stage)):
            for label in (ctx.logical_x, ctx.logical_z):
                if any((row & label).bit_count() & 1 for row in smap.rows):
                    raise AssertionError("a measured generator reads the logical qubit")

        # Opposite-edge pairs (l, l') with l + l' = face, per square face.
        self.face_opposite_edges = tuple(
            lat.opposite_edge_pairs(i) for i in range(len(lat.faces))
        )

        self.table: CleanabilityTable = build_cleanability_table(t_code)
        self.prop = TPropagator(t_code, self.table)
        self.t_update: TGateUpdate = build_t_gate_update(t_code, self.table, self.prop, lay_t)

        # Linear section for recoveries: vectors r_k with label_x(r_k) = e_k.
        section = []
        mat_b_rows = rows_dot_t
        for k in range(lay_t.alpha_bits):
            rhs = [1 if i == k else 0 for i in range(len(mat_b_rows))]
            x, _ = f2.solve_linear(list(mat_b_rows), rhs, N_QUBITS)
            if x is None:
                raise AssertionError("label map is not surjective")
            section.append(x)
        self.recovery_section = tuple(section)

    def recovery_vector(self, alpha: int) -> int:
        v = 0
        for k, r in enumerate(self.recovery_section):
            if (alpha >> k) & 1:
                v ^= r
        return v

    # -- memory-update inputs ------------------------------------------------

    @lru_cache(maxsize=8)
    def dense_memory(self, stage_name: str, p: float) -> np.ndarray:
        """Transformed depolarizing coset distribution for a protocol stage."""
        ctx = {"t": self.t_stage, "c": self.c_stage}[stage_name]
        return transformed_depolarizing(ctx.code.coset_map, p)

    @lru_cache(maxsize=8)
    def sparse_memory(self, stage_name: str, p: float) -> tuple[np.ndarray, np.ndarray]:
        """Coset shifts and weights of the weight <= 1 restriction of the
        depolarizing channel (unnormalized; the engine renormalizes)."""
        ctx = {"t": self.t_stage, "c": self.c_stage}[stage_name]
        cm = ctx.code.coset_map
        labels = [0]
        weights = [1.0 - p]
        for j in range(N_QUBITS):
            for a, b in ((1 << j, 0), (1 << j, 1 << j), (0, 1 << j)):
                labels.append(cm.label(a, b))
                weights.append(p / 3.0)
        return np.array(labels, dtype=np.uint32), np.array(weights, dtype=np.float64)

    # -- frame-side measurements ----------------------------------------------

    def ideal_c_syndromes(self, frame: PauliFrame) -> int:
        bits = 0
        for i, g in enumerate(self.faces_measured):
            bits |= f2.dot(g, frame.b) << i                      # xi
            bits |= f2.dot(g, frame.a) << (i + len(self.faces_measured))  # zeta
        return bits

    def ideal_t_syndromes(self, frame: PauliFrame) -> int:
        bits = 0
        for i, g in enumerate(self.edges_measured):
            bits |= f2.dot(g, frame.a) << i
        return bits


@lru_cache(maxsize=1)
def family15() -> Family15:
    return Family15()


# ---------------------------------------------------------------------------
# Protocol configuration and trial execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolConfig:
    p: float
    trials: int
    t: int = 1
    max_gates: int = 100_000
    decoder: str = "sparse"        # "exact" | "sparse"
    eps: float = 1e-6
    seed: int = 0
    max_retry_rounds: int = 100
    threads: int = 1

    def __post_init__(self) -> None:
        if self.t != 1:
            raise ValueError("only the 15-qubit family (t = 1) runs end to end; "
                             "higher levels lack a measurement-repetition schedule")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.decoder not in ("exact", "sparse"):
            raise ValueError("decoder must be 'exact' or 'sparse'")

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "p": self.p,
            "trials": self.trials,
            "max_gates": self.max_gates,
            "decoder": self.decoder,
            "eps": self.eps,
            "seed": self.seed,
            "max_retry_rounds": self.max_retry_rounds,
            "threads": self.threads,
        }

    def hash(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


TERMINATIONS = ("logical_error", "cleanability_failure", "max_gates_reached", "retry_limit")


@dataclass(frozen=True)
class TrialResult:
    gates_implemented: int
    termination: str
    retries: int
    rounds: int


def syndrome_test(fam: Family15, c_bits: int, t_bits: int, action: CliffordAction) -> bool:
    """Consistency of a C,T round pair: for every square face and each of its
    opposite-edge pairs, the two edge outcomes must agree with the predicted
    post-gate Z syndromes of the face on both copies."""
    n_faces = len(fam.faces_measured)
    lat_faces = len(fam.face_opposite_edges)
    for i in range(lat_faces):
        zu = []
        for block in (0, 1):   # face on copy A, face on copy B
            idx = i + block * lat_faces
            xi = (c_bits >> idx) & 1
            zeta = (c_bits >> (idx + n_faces)) & 1
            zu.append((action.p * zeta) ^ (action.r * xi))
        for l, lp in fam.face_opposite_edges[i]:
            parity = ((t_bits >> l) & 1) ^ ((t_bits >> lp) & 1) ^ zu[0] ^ zu[1]
            if parity:
                return False
    return True


def logical_error_test(final_label: int, frame_label: int, stage: StageContext) -> bool:
    """Passes unless the decoder's best coset differs from the truth by a
    non-trivial undetectable class. Detectable disagreements are transient
    (subsequent syndromes resolve them) and do not end the encoded
    computation; an undetectable one is an unrecoverable logical error."""
    delta = final_label ^ frame_label
    return delta not in stage.nontrivial_logical_labels


def run_trial(config: ProtocolConfig, trial_index: int, observer=None) -> TrialResult:
    fam = family15()
    rng = np.random.default_rng([config.seed, trial_index])
    model = ErrorModel(config.p, config.p)
    frame = PauliFrame(N_QUBITS)
    rho = init_likelihood(fam.t_stage.layout, config.decoder)
    sparse = config.decoder == "sparse"
    if sparse:
        mem_c = fam.sparse_memory("c", config.p)
        mem_t = fam.sparse_memory("t", config.p)
    else:
        mem_c = fam.dense_memory("c", config.p)
        mem_t = fam.dense_memory("t", config.p)

    gates = retries = rounds = 0
    consecutive_fails = 0
    last_pass = True
    identity = CLIFFORD_CLASSES[0]

    while True:
        # ---- C-round ----
        rounds += 1
        rho.deform(fam.t_to_base)
        rho.deform(fam.base_to_c)
        a, b = sample_memory_error(model, N_QUBITS, rng)
        frame.apply(a, b)
        if sparse:
            rho.apply_memory(*mem_c)
        else:
            rho.apply_memory(mem_c)
        observed_c = flip_syndrome(model, fam.ideal_c_syndromes(frame), fam.m_c.width, rng)
        rho.apply_syndrome(fam.m_c, observed_c, config.p)
        if sparse:
            rho.truncate(config.eps)
        if observer is not None:
            observer("C", fam.c_stage, rho, frame)
        if not logical_error_test(rho.final_coset(), fam.c_stage.frame_label(frame), fam.c_stage):
            return TrialResult(gates, "logical_error", retries, rounds)
        if last_pass:
            action = sample_clifford(rng)
            rho.apply_clifford(action)
            action.apply_frame(frame)
            gates += 1
        else:
            action = identity
        if gates >= config.max_gates:
            return TrialResult(gates, "max_gates_reached", retries, rounds)

        # ---- T-round ----
        rounds += 1
        rho.deform(fam.c_to_base)
        rho.deform(fam.base_to_t)
        a, b = sample_memory_error(model, N_QUBITS, rng)
        frame.apply(a, b)
        if sparse:
            rho.apply_memory(*mem_t)
        else:
            rho.apply_memory(mem_t)
        observed_t = flip_syndrome(model, fam.ideal_t_syndromes(frame), fam.m_t.width, rng)
        rho.apply_syndrome(fam.m_t, observed_t, config.p)
        if sparse:
            rho.truncate(config.eps)
        if observer is not None:
            observer("T", fam.t_stage, rho, frame)
        if not logical_error_test(rho.final_coset(), fam.t_stage.frame_label(frame), fam.t_stage):
            return TrialResult(gates, "logical_error", retries, rounds)
        if syndrome_test(fam, observed_c, observed_t, action):
            last_pass = True
            consecutive_fails = 0
            alpha_star = rho.choose_recovery()
            frame.a ^= fam.recovery_vector(alpha_star)
            alpha_res = fam.t_stage.code.coset_map.label_x(frame.a)
            if not fam.table.is_cleanable(alpha_res):
                return TrialResult(gates, "cleanability_failure", retries, rounds)
            rho.apply_t_gate(fam.t_update)
            propagate_through_t(frame, fam.prop, rng)
            frame.a ^= random_element(fam.doubled.t_space, rng)
            gates += 1
            if gates >= config.max_gates:
                return TrialResult(gates, "max_gates_reached", retries, rounds)
        else:
            last_pass = False
            retries += 1
            consecutive_fails += 1
            if consecutive_fails > config.max_retry_rounds:
                return TrialResult(gates, "retry_limit", retries, rounds)


def _run_trial_star(args: tuple) -> TrialResult:
    config_json, trial_index = args
    config = ProtocolConfig(**config_json)
    return run_trial(config, trial_index)


def run_trials(config: ProtocolConfig) -> list[TrialResult]:
    if config.threads <= 1:
        return [run_trial(config, i) for i in range(config.trials)]
    from concurrent.futures import ProcessPoolExecutor

    args = [(config.to_json(), i) for i in range(config.trials)]
    with ProcessPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(_run_trial_star, args, chunksize=8))


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    p: float
    trials: int
    mean_gates: float
    p_l: float | None
    stderr: float | None
    p_l_upper: float | None
    n_logical: int
    n_cleanability: int
    n_censored: int
    n_retry_limit: int
    mean_retries: float
    wall_seconds: float

    def csv_row(self) -> dict:
        return {
            "p": self.p,
            "trials": self.trials,
            "mean_gates": f"{self.mean_gates:.6g}",
            "p_L": "" if self.p_l is None else f"{self.p_l:.6g}",
            "stderr": "" if self.stderr is None else f"{self.stderr:.3g}",
            "n_logical_failures": self.n_logical,
            "n_cleanability_failures": self.n_cleanability,
            "n_censored": self.n_censored,
            "mean_retries": f"{self.mean_retries:.6g}",
            "wall_seconds": f"{self.wall_seconds:.3f}",
        }


CSV_COLUMNS = [
    "p", "trials", "mean_gates", "p_L", "stderr", "n_logical_failures",
    "n_cleanability_failures", "n_censored", "mean_retries", "wall_seconds",
]


def jackknife_inverse_mean(values: list[int]) -> float:
    """Jackknife standard error of 1/mean over the given samples."""
    n = len(values)
    if n < 2:
        return float("nan")
    total = sum(values)
    leave_out = [(n - 1) / (total - v) for v in values]
    mean_theta = sum(leave_out) / n
    var = (n - 1) / n * sum((t - mean_theta) ** 2 for t in leave_out)
    return math.sqrt(var)


def estimate_pl(config: ProtocolConfig, results: list[TrialResult] | None = None) -> Estimate:
    start = time.monotonic()
    if results is None:
        results = run_trials(config)
        wall = time.monotonic() - start
    else:
        wall = 0.0
    failing = [r.gates_implemented for r in results
               if r.termination in ("logical_error", "cleanability_failure")]
    all_gates = [r.gates_implemented for r in results]
    counts = {t: sum(1 for r in results if r.termination == t) for t in TERMINATIONS}
    mean_gates = sum(all_gates) / len(all_gates)
    if failing:
        mean_fail = sum(failing) / len(failing)
        p_l = float("inf") if mean_fail == 0 else 1.0 / mean_fail
        stderr = jackknife_inverse_mean(failing)
        upper = None
    else:
        p_l, stderr = None, None
        upper = 1.0 / mean_gates if mean_gates else None
    return Estimate(
        p=config.p,
        trials=config.trials,
        mean_gates=mean_gates,
        p_l=p_l,
        stderr=stderr,
        p_l_upper=upper,
        n_logical=counts["logical_error"],
        n_cleanability=counts["cleanability_failure"],
        n_censored=counts["max_gates_reached"],
        n_retry_limit=counts["retry_limit"],
        mean_retries=sum(r.retries for r in results) / len(results),
        wall_seconds=wall,
    )
