import numpy as np
import pytest

from dccsim import f2
from dccsim.decoder import (
    DeformationMap,
    DegeneratePosteriorError,
    DenseLikelihood,
    LabelLayout,
    SparseLikelihood,
    SyndromeMap,
    gamma_hat_direct,
    init_likelihood,
)
from dccsim.noise import CLIFFORD_CLASSES
from dccsim.protocol import family15


def direct_memory_convolution(rho: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Oracle: rho'(f) = sum_g dist(f + g) rho(g), O(4^c)."""
    c = len(rho)
    out = np.zeros(c)
    for fl in range(c):
        out[fl] = sum(dist[fl ^ g] * rho[g] for g in range(c))
    return out


def transformed(dist: np.ndarray) -> np.ndarray:
    out = dist.copy()
    f2.fwht(out)
    return out


@pytest.fixture(scope="module")
def fam():
    return family15()


class TestInit:
    @pytest.mark.parametrize("engine", ["exact", "sparse"])
    def test_unit_mass_at_zero(self, engine):
        rho = init_likelihood(LabelLayout(1, 0), engine)
        assert rho.final_coset() == 0
        rho16 = init_likelihood(LabelLayout(8, 8), engine)
        assert rho16.final_coset() == 0
        assert rho16.entropy() == 0.0


class TestMemory:
    def test_delta_distribution_is_identity(self):
        rng = np.random.default_rng(0)
        layout = LabelLayout(3, 3)
        rho = DenseLikelihood(layout, rng.random(64) + 0.1)
        before = rho.normalized()
        delta = np.zeros(64)
        delta[0] = 1.0
        rho.apply_memory(transformed(delta))
        assert np.allclose(rho.normalized(), before, atol=1e-12)

    def test_uniform_distribution_flattens(self):
        layout = LabelLayout(2, 2)
        rho = DenseLikelihood(layout)
        rho.apply_memory(transformed(np.full(16, 1 / 16)))
        assert np.allclose(rho.normalized(), np.full(16, 1 / 16), atol=1e-12)

    @pytest.mark.parametrize("c", range(2, 11))
    def test_matches_direct_convolution(self, c):
        rng = np.random.default_rng(c)
        layout = LabelLayout(c, 0)
        start = rng.random(1 << c)
        dist = rng.random(1 << c)
        dist /= dist.sum()
        rho = DenseLikelihood(layout, start.copy())
        rho.apply_memory(transformed(dist))
        expect = direct_memory_convolution(start, dist)
        got = rho.normalized()
        assert np.max(np.abs(got - expect / expect.sum())) <= 1e-10

    def test_mass_conserved_by_convolution(self):
        rng = np.random.default_rng(99)
        start = rng.random(256)
        dist = rng.random(256)
        dist /= dist.sum()
        out = direct_memory_convolution(start, dist)
        assert abs(out.sum() - start.sum()) <= 1e-9

    def test_sparse_matches_dense(self, fam):
        rng = np.random.default_rng(1)
        shifts, weights = fam.sparse_memory("t", 0.01)
        dense_input = np.zeros(fam.t_stage.layout.size)
        w = weights / weights.sum()
        for lab, wt in zip(shifts, w):
            dense_input[lab] += wt
        dense = DenseLikelihood(fam.t_stage.layout)
        sparse = SparseLikelihood(fam.t_stage.layout)
        dense.apply_memory(transformed(dense_input))
        sparse.apply_memory(shifts, weights)
        assert np.max(np.abs(dense.normalized() - _as_dense_normalized(sparse))) <= 1e-12


def _as_dense_normalized(sparse: SparseLikelihood) -> np.ndarray:
    arr = sparse.dense_weights()
    return arr / arr.sum()


class TestSyndrome:
    def _toy_map(self):
        layout = LabelLayout(2, 2)
        return SyndromeMap(rows=(0b0001, 0b0110), layout=layout), layout

    def test_flat_at_half(self):
        smap, layout = self._toy_map()
        rng = np.random.default_rng(2)
        start = rng.random(16)
        rho = DenseLikelihood(layout, start.copy())
        rho.apply_syndrome(smap, 0b11, 0.5)
        assert np.allclose(rho.normalized(), start / start.sum(), atol=1e-12)

    def test_exact_syndrome_restricts_support(self, fam):
        rho = DenseLikelihood(fam.t_stage.layout, np.ones(fam.t_stage.layout.size))
        rho.apply_syndrome(fam.m_t, 0, 0.0)
        table = fam.m_t.table
        assert rho.support_size() == int((table == 0).sum())

    def test_posterior_odds(self):
        # One syndrome bit at q = 0.01 gives 99:1 odds between the matching
        # and non-matching label on a two-label toy.
        layout = LabelLayout(1, 0)
        smap = SyndromeMap(rows=(0b1,), layout=layout)
        rho = DenseLikelihood(layout, np.array([1.0, 1.0]))
        rho.apply_syndrome(smap, 0b1, 0.01)
        post = rho.normalized()
        assert abs(post[1] / post[0] - 99.0) <= 1e-9

    def test_degenerate_posterior_raises(self):
        layout = LabelLayout(1, 0)
        smap = SyndromeMap(rows=(0b1,), layout=layout)
        rho = DenseLikelihood(layout, np.array([1.0, 0.0]))
        with pytest.raises(DegeneratePosteriorError):
            rho.apply_syndrome(smap, 0b1, 0.0)

    def test_sparse_matches_dense(self, fam):
        rng = np.random.default_rng(3)
        layout = fam.t_stage.layout
        labels = np.array(sorted(rng.choice(layout.size, 40, replace=False)), dtype=np.uint32)
        weights = rng.random(40)
        dense_arr = np.zeros(layout.size)
        dense_arr[labels] = weights
        dense = DenseLikelihood(layout, dense_arr)
        sparse = SparseLikelihood(layout, labels.copy(), weights.copy())
        observed = int(rng.integers(0, 1 << fam.m_t.width))
        dense.apply_syndrome(fam.m_t, observed, 0.02)
        sparse.apply_syndrome(fam.m_t, observed, 0.02)
        assert np.max(np.abs(dense.normalized() - _as_dense_normalized(sparse))) <= 1e-12


class TestDepolarizingTransform:
    def test_matches_full_error_enumeration(self):
        # Oracle: accumulate the coset distribution over all 4^7 Pauli
        # errors of the 7-qubit code with explicit per-qubit probabilities,
        # transform it, and compare with the analytic product form used by
        # the production engine.
        from dccsim.csscode import make_code
        from dccsim.decoder import transformed_depolarizing
        from dccsim.f2 import Subspace

        s = Subspace(7, [0b1010101, 0b1100110, 0b1111000])
        code = make_code(s, s)
        cm = code.coset_map
        p = 0.07
        dist = np.zeros(1 << cm.c)
        for a in range(1 << 7):
            for b in range(1 << 7):
                prob = 1.0
                for j in range(7):
                    hit = ((a >> j) & 1) or ((b >> j) & 1)
                    prob *= p / 3.0 if hit else 1.0 - p
                dist[cm.label(a, b)] += prob
        assert abs(dist.sum() - 1.0) <= 1e-12
        f2.fwht(dist)
        analytic = transformed_depolarizing(cm, p)
        assert np.max(np.abs(dist - analytic)) <= 1e-12


class TestDecoderFramePropagationConsistency:
    def test_t_update_equals_propagation_distribution(self, fam):
        # The decoder's T-gate column update and the frame-side sampling
        # distribution describe the same physics: a delta at (alpha, beta0)
        # must spread over beta0 + (Z-label of f) with probabilities P(f|e).
        from dccsim.noise import p_f_given_e

        layout = fam.t_stage.layout
        cm = fam.t_stage.code.coset_map
        rng = np.random.default_rng(30)
        cleanables = sorted(fam.table.cleanable)
        for alpha in rng.choice(cleanables, 12, replace=False):
            alpha = int(alpha)
            beta0 = int(rng.integers(0, 32))
            arr = np.zeros(layout.size)
            arr[layout.join(alpha, beta0)] = 1.0
            rho = DenseLikelihood(layout, arr)
            rho.apply_t_gate(fam.t_update)
            expect = np.zeros(layout.size)
            for fvec, pf in p_f_given_e(fam.prop, alpha).items():
                expect[layout.join(alpha, beta0 ^ cm.label_z(fvec))] += pf
            assert np.max(np.abs(rho.normalized() - expect)) <= 1e-12


class TestCompleteSyndrome:
    def test_noiseless_complete_syndrome_leaves_four_cosets(self, fam):
        # A complete generating set (all X and Z stabilizers of the T-code)
        # measured exactly pins everything except the logical classes.
        code = fam.t_stage.code
        cm = code.coset_map
        rows = []
        for g in code.a_space.basis:
            combo = f2.SpanSolver(cm.mat_a, 15).express(g)
            rows.append(combo << cm.alpha_bits)
        for g in code.b_space.basis:
            rows.append(f2.SpanSolver(cm.mat_b, 15).express(g))
        smap = SyndromeMap(tuple(rows), fam.t_stage.layout)
        rho = DenseLikelihood(fam.t_stage.layout, np.ones(fam.t_stage.layout.size))
        rho.apply_syndrome(smap, 0, 0.0)
        assert rho.support_size() == 4
        stage = fam.t_stage
        survivors = set(np.flatnonzero(rho.weights).tolist())
        assert survivors == {0, stage.logical_x, stage.logical_z,
                             stage.logical_x ^ stage.logical_z}


class TestDeform:
    def test_identity_merge(self):
        layout = LabelLayout(2, 1)
        dmap = DeformationMap("merge", tuple(1 << k for k in range(3)), layout, layout)
        rng = np.random.default_rng(4)
        start = rng.random(8)
        rho = DenseLikelihood(layout, start.copy())
        rho.deform(dmap)
        assert np.allclose(rho.normalized(), start / start.sum())

    @pytest.mark.parametrize("engine", ["exact", "sparse"])
    def test_split_then_merge_roundtrip(self, fam, engine):
        rng = np.random.default_rng(5)
        rho = init_likelihood(fam.base_stage.layout, engine)
        start = rng.random(fam.base_stage.layout.size)
        if engine == "exact":
            rho.weights = start.copy()
        else:
            rho.labels = np.arange(fam.base_stage.layout.size, dtype=np.uint32)
            rho.weights = start.copy()
        rho.deform(fam.base_to_t)
        assert rho.layout == fam.t_stage.layout
        rho.deform(fam.t_to_base)
        got = rho.normalized() if engine == "exact" else _as_dense_normalized(rho)
        assert np.max(np.abs(got - start / start.sum())) <= 1e-12

    def test_c_widths_along_cycle(self, fam):
        assert fam.t_stage.layout.c == 16
        assert fam.base_stage.layout.c == 13
        assert fam.c_stage.layout.c == 16
        assert fam.base_to_t.new_layout.c - fam.base_to_t.old_layout.c == 3

    def test_merge_is_marginalization(self, fam):
        rng = np.random.default_rng(6)
        start = rng.random(fam.t_stage.layout.size)
        rho = DenseLikelihood(fam.t_stage.layout, start.copy())
        rho.deform(fam.t_to_base)
        # Oracle: accumulate by explicitly computed merged labels.
        expect = np.zeros(fam.base_stage.layout.size)
        for lab in range(fam.t_stage.layout.size):
            new = 0
            for i, row in enumerate(fam.t_to_base.rows):
                new |= ((lab & row).bit_count() & 1) << i
            expect[new] += start[lab]
        assert np.max(np.abs(rho.normalized() - expect / expect.sum())) <= 1e-12

    def test_sparse_split_uniform(self, fam):
        sparse = SparseLikelihood(fam.base_stage.layout)
        sparse.deform(fam.base_to_t)
        assert sparse.support_size() == 8
        assert np.allclose(sparse.weights, sparse.weights[0])


class TestClifford:
    @pytest.mark.parametrize("engine", ["exact", "sparse"])
    def test_h_twice_is_identity(self, fam, engine):
        rng = np.random.default_rng(7)
        layout = fam.c_stage.layout
        start = rng.random(layout.size)
        rho = DenseLikelihood(layout, start.copy())
        h = CLIFFORD_CLASSES[1]
        rho.apply_clifford(h)
        rho.apply_clifford(h)
        assert np.allclose(rho.weights, start)

    def test_s_squared_is_identity_on_labels(self, fam):
        rng = np.random.default_rng(8)
        layout = fam.c_stage.layout
        start = rng.random(layout.size)
        rho = DenseLikelihood(layout, start.copy())
        s = CLIFFORD_CLASSES[2]
        rho.apply_clifford(s)
        rho.apply_clifford(s)
        assert np.allclose(rho.weights, start)

    def test_argmax_commutes(self, fam):
        rng = np.random.default_rng(9)
        layout = fam.c_stage.layout
        start = rng.random(layout.size)
        for action in CLIFFORD_CLASSES:
            rho = DenseLikelihood(layout, start.copy())
            before = rho.final_coset()
            rho.apply_clifford(action)
            alpha, beta = layout.split(before)
            expect = layout.join(
                (alpha * action.p) ^ (beta * action.r),
                (alpha * action.q) ^ (beta * action.s),
            )
            assert rho.final_coset() == expect

    def test_sparse_matches_dense(self, fam):
        rng = np.random.default_rng(10)
        layout = fam.c_stage.layout
        labels = np.array(sorted(rng.choice(layout.size, 30, replace=False)), dtype=np.uint32)
        weights = rng.random(30)
        arr = np.zeros(layout.size)
        arr[labels] = weights
        for action in CLIFFORD_CLASSES:
            dense = DenseLikelihood(layout, arr.copy())
            sparse = SparseLikelihood(layout, labels.copy(), weights.copy())
            dense.apply_clifford(action)
            sparse.apply_clifford(action)
            assert np.max(np.abs(dense.normalized() - _as_dense_normalized(sparse))) <= 1e-12


class TestRecovery:
    def test_delta_shifts_to_zero(self, fam):
        layout = fam.t_stage.layout
        alpha0, beta0 = 0b101, 0b11
        arr = np.zeros(layout.size)
        arr[layout.join(alpha0, beta0)] = 1.0
        rho = DenseLikelihood(layout, arr)
        assert rho.choose_recovery() == alpha0
        assert rho.final_coset() == layout.join(0, beta0)

    def test_uniform_returns_zero(self, fam):
        layout = fam.t_stage.layout
        rho = DenseLikelihood(layout, np.ones(layout.size))
        assert rho.choose_recovery() == 0

    def test_heavier_coset_wins(self, fam):
        layout = fam.t_stage.layout
        arr = np.zeros(layout.size)
        arr[layout.join(3, 0)] = 0.7
        arr[layout.join(5, 1)] = 0.3
        rho = DenseLikelihood(layout, arr)
        assert rho.choose_recovery() == 3


class TestFinalCoset:
    @pytest.mark.parametrize("engine", ["exact", "sparse"])
    def test_tie_break_smallest(self, engine):
        layout = LabelLayout(2, 1)
        if engine == "exact":
            arr = np.zeros(8)
            arr[3] = arr[7] = 0.5
            rho = DenseLikelihood(layout, arr)
        else:
            rho = SparseLikelihood(
                layout, np.array([7, 3], dtype=np.uint32), np.array([0.5, 0.5])
            )
        assert rho.final_coset() == 3


class TestTruncate:
    def test_keeps_entries_above_cutoff(self):
        layout = LabelLayout(3, 0)
        rho = SparseLikelihood(
            layout, np.arange(4, dtype=np.uint32), np.array([0.4, 0.3, 0.2, 0.1])
        )
        rho.truncate(1e-6)
        assert rho.support_size() == 4

    def test_drops_tiny_entries_never_max(self):
        layout = LabelLayout(3, 0)
        rho = SparseLikelihood(
            layout, np.arange(3, dtype=np.uint32), np.array([0.999999, 1e-9, 5e-10])
        )
        rho.truncate(1e-6)
        assert rho.support_size() == 1
        assert rho.final_coset() == 0

    def test_mass_loss_bound(self):
        rng = np.random.default_rng(11)
        layout = LabelLayout(8, 0)
        weights = rng.random(200)
        rho = SparseLikelihood(layout, np.arange(200, dtype=np.uint32), weights.copy())
        eps = 1e-3
        total = weights.sum()
        rho.truncate(eps)
        kept = weights[weights / total >= eps].sum()
        assert total - kept <= eps * total * 200


class TestTGate:
    def test_gamma_hat_matches_direct_sum(self, fam):
        # Transformed-basis diagonal against the explicit sum over subsets,
        # for every cleanable coset and every Z-label block entry.
        code = fam.t_stage.code
        gh = fam.t_update.gamma_hat
        for alpha in sorted(fam.table.cleanable):
            for beta in range(32):
                direct = gamma_hat_direct(code, fam.prop, alpha, beta)
                assert abs(gh[beta, alpha] - direct) <= 1e-10

    def test_zero_coset_block_is_identity(self, fam):
        rng = np.random.default_rng(12)
        layout = fam.t_stage.layout
        arr = np.zeros(layout.size)
        betas = rng.random(32)
        for beta in range(32):
            arr[layout.join(0, beta)] = betas[beta]
        rho = DenseLikelihood(layout, arr.copy())
        rho.apply_t_gate(fam.t_update)
        got = rho.normalized()
        expect = arr / arr.sum()
        assert np.max(np.abs(got - expect)) <= 1e-12

    def test_columns_are_stochastic(self, fam):
        rng = np.random.default_rng(13)
        layout = fam.t_stage.layout
        for alpha in list(sorted(fam.table.cleanable))[::97]:
            vec = rng.random(32)
            arr = np.zeros(layout.size)
            for beta in range(32):
                arr[layout.join(alpha, beta)] = vec[beta]
            rho = DenseLikelihood(layout, arr.copy())
            rho.apply_t_gate(fam.t_update)
            out = rho.weights * (vec.sum() / rho.weights.sum())
            assert abs(out.sum() - vec.sum()) <= 1e-10 * vec.sum()

    def test_projection_drops_noncleanable(self, fam):
        layout = fam.t_stage.layout
        bad = next(a for a in range(1 << 11) if not fam.table.is_cleanable(a))
        arr = np.zeros(layout.size)
        arr[layout.join(bad, 1)] = 0.3
        arr[layout.join(0, 0)] = 0.7
        rho = DenseLikelihood(layout, arr)
        rho.apply_t_gate(fam.t_update)
        assert rho.final_coset() == 0
        back = rho.normalized().reshape(32, 2048)
        assert back[:, bad].sum() == 0.0

    def test_all_mass_noncleanable_raises(self, fam):
        layout = fam.t_stage.layout
        bad = next(a for a in range(1 << 11) if not fam.table.is_cleanable(a))
        arr = np.zeros(layout.size)
        arr[layout.join(bad, 0)] = 1.0
        rho = DenseLikelihood(layout, arr)
        with pytest.raises(DegeneratePosteriorError):
            rho.apply_t_gate(fam.t_update)

    def test_sparse_matches_dense(self, fam):
        rng = np.random.default_rng(14)
        layout = fam.t_stage.layout
        cleanables = sorted(fam.table.cleanable)
        labels = []
        for a in rng.choice(cleanables, 5, replace=False):
            for beta in rng.choice(32, 3, replace=False):
                labels.append(layout.join(int(a), int(beta)))
        labels = np.array(sorted(set(labels)), dtype=np.uint32)
        weights = rng.random(len(labels))
        arr = np.zeros(layout.size)
        arr[labels] = weights
        dense = DenseLikelihood(layout, arr.copy())
        sparse = SparseLikelihood(layout, labels.copy(), weights.copy())
        dense.apply_t_gate(fam.t_update)
        sparse.apply_t_gate(fam.t_update)
        assert np.max(np.abs(dense.normalized() - _as_dense_normalized(sparse))) <= 1e-12


class TestMassConservation:
    def test_deform_merge_preserves_total(self, fam):
        rng = np.random.default_rng(20)
        start = rng.random(fam.t_stage.layout.size)
        rho = DenseLikelihood(fam.t_stage.layout, start.copy())
        before = start.sum()
        # Inspect pre-normalization mass via the bincount the merge uses.
        merged = np.bincount(
            fam.t_to_base.dense_index, weights=start, minlength=fam.base_stage.layout.size
        )
        assert abs(merged.sum() - before) <= 1e-10 * before
        rho.deform(fam.t_to_base)

    def test_deform_split_preserves_total(self, fam):
        rng = np.random.default_rng(21)
        start = rng.random(fam.base_stage.layout.size)
        scale = 2.0 ** (fam.base_stage.layout.c - fam.t_stage.layout.c)
        expanded = start[fam.base_to_t.dense_index] * scale
        assert abs(expanded.sum() - start.sum()) <= 1e-10 * start.sum()

    def test_clifford_preserves_total(self, fam):
        rng = np.random.default_rng(22)
        start = rng.random(fam.c_stage.layout.size)
        rho = DenseLikelihood(fam.c_stage.layout, start.copy())
        for action in CLIFFORD_CLASSES:
            rho.apply_clifford(action)
        assert abs(rho.weights.sum() - start.sum()) <= 1e-10 * start.sum()

    def test_syndrome_only_downweights(self, fam):
        rng = np.random.default_rng(23)
        layout = fam.t_stage.layout
        start = rng.random(layout.size)
        mismatch = np.bitwise_count(fam.m_t.table ^ np.uint32(5))
        q = 0.03
        factors = np.power(q, mismatch) * np.power(1.0 - q, fam.m_t.width - mismatch)
        assert factors.max() <= 1.0
        after = start * factors
        assert after.sum() <= start.sum()


class TestBayesOracle:
    def test_dense_posterior_equals_history_enumeration(self, fam):
        # Memory-only chain on the T-code: two rounds of weight <= 1 errors
        # and one noisy syndrome per round, versus explicit enumeration over
        # all error histories.
        rng = np.random.default_rng(15)
        layout = fam.t_stage.layout
        shifts, raw_w = fam.sparse_memory("t", 0.01)
        probs = raw_w / raw_w.sum()
        q = 0.02
        smap = fam.m_t

        for trial in range(3):
            s1 = int(rng.integers(0, 1 << smap.width))
            s2 = int(rng.integers(0, 1 << smap.width))
            posterior = np.zeros(layout.size)
            for e1, w1 in zip(shifts, probs):
                syn1 = smap.syndrome_of(np.array([e1], dtype=np.uint32))[0]
                m1 = int(syn1 ^ s1).bit_count()
                like1 = q**m1 * (1 - q) ** (smap.width - m1)
                for e2, w2 in zip(shifts, probs):
                    f_final = int(e1 ^ e2)
                    syn2 = smap.syndrome_of(np.array([f_final], dtype=np.uint32))[0]
                    m2 = int(syn2 ^ s2).bit_count()
                    like2 = q**m2 * (1 - q) ** (smap.width - m2)
                    posterior[f_final] += w1 * like1 * w2 * like2
            posterior /= posterior.sum()

            dense_input = np.zeros(layout.size)
            for lab, w in zip(shifts, probs):
                dense_input[lab] += w
            p_hat = dense_input.copy()
            f2.fwht(p_hat)
            rho = DenseLikelihood(layout)
            rho.apply_memory(p_hat)
            rho.apply_syndrome(smap, s1, q)
            rho.apply_memory(p_hat)
            rho.apply_syndrome(smap, s2, q)
            assert np.max(np.abs(rho.normalized() - posterior)) <= 1e-9


class TestEnginesAgree:
    def test_hundred_step_scripted_run(self, fam):
        # Same weight <= 1 memory model in both engines, no truncation:
        # normalized weights must agree at every step.
        rng = np.random.default_rng(16)
        dense = DenseLikelihood(fam.t_stage.layout)
        sparse = SparseLikelihood(fam.t_stage.layout)
        stage = "t"
        for step in range(100):
            choice = rng.integers(0, 4)
            if choice == 0:
                shifts, w = fam.sparse_memory(stage, 0.01)
                dense_input = np.zeros(dense.layout.size)
                np.add.at(dense_input, shifts, w / w.sum())
                p_hat = dense_input
                f2.fwht(p_hat)
                dense.apply_memory(p_hat)
                sparse.apply_memory(shifts, w)
            elif choice == 1:
                smap = fam.m_t if stage == "t" else fam.m_c
                observed = int(rng.integers(0, 1 << smap.width))
                dense.apply_syndrome(smap, observed, 0.05)
                sparse.apply_syndrome(smap, observed, 0.05)
            elif choice == 2:
                if stage == "t":
                    maps, stage = (fam.t_to_base, fam.base_to_c), "c"
                else:
                    maps, stage = (fam.c_to_base, fam.base_to_t), "t"
                for m in maps:
                    dense.deform(m)
                    sparse.deform(m)
            else:
                if stage == "c":
                    action = CLIFFORD_CLASSES[int(rng.integers(0, 6))]
                    dense.apply_clifford(action)
                    sparse.apply_clifford(action)
                else:
                    alpha_d = dense.choose_recovery()
                    alpha_s = sparse.choose_recovery()
                    assert alpha_d == alpha_s
                    dense.apply_t_gate(fam.t_update)
                    sparse.apply_t_gate(fam.t_update)
            diff = np.max(np.abs(dense.normalized() - _as_dense_normalized(sparse)))
            assert diff <= 1e-9, f"step {step} ({choice}): {diff}"
            assert dense.final_coset() == sparse.final_coset()
