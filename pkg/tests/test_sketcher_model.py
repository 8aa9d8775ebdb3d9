import numpy as np
import pytest

from atelier.errors import InvalidInput, NumericError
from atelier.sketcher import (
    ModelParams,
    SketcherConfig,
    Suggestion,
    complete,
    forward_step,
    init_params,
    init_state,
    loss_and_grads,
)
from atelier.sketcher.model import batch_from_rows, mean_stroke_rows
from atelier.strokes import END_ROW, START_ROW, PlayerChannel, Point, Stroke5Row, from_stroke5


def tiny_config(**overrides):
    defaults = dict(hidden_size=8, num_mixtures=2, seed=3)
    defaults.update(overrides)
    return SketcherConfig(**defaults)


def random_rows(rng, n):
    rows = [START_ROW]
    for _ in range(n):
        flags = [0, 0, 0]
        flags[int(rng.integers(0, 2))] = 1
        rows.append(Stroke5Row(float(rng.normal()), float(rng.normal()), *flags))
    rows.append(END_ROW)
    return rows


class TestForwardStep:
    def test_deterministic(self):
        params = init_params(tiny_config())
        state = init_state(params)
        row = Stroke5Row(0.5, -0.2, 1, 0, 0)
        s1, m1 = forward_step(params, state, row)
        s2, m2 = forward_step(params, state, row)
        assert np.array_equal(s1.h, s2.h) and np.array_equal(s1.c, s2.c)
        assert np.array_equal(m1.pi, m2.pi)
        assert np.array_equal(m1.pen_logits, m2.pen_logits)

    def test_zero_weights_give_uniform_mixture(self):
        cfg = tiny_config(num_mixtures=5)
        params = init_params(cfg)
        for a in params.arrays():
            a[:] = 0
        _, mix = forward_step(params, init_state(params), START_ROW)
        assert np.allclose(mix.pi, 0.2)
        assert np.allclose(mix.pen_logits, mix.pen_logits[0])

    def test_mixture_invariants_over_random_inputs(self):
        params = init_params(tiny_config(hidden_size=16, num_mixtures=3))
        rng = np.random.default_rng(23)
        state = init_state(params)
        for _ in range(1000):
            flags = [0, 0, 0]
            flags[int(rng.integers(0, 3))] = 1
            row = Stroke5Row(float(rng.normal(0, 3)), float(rng.normal(0, 3)), *flags)
            state, mix = forward_step(params, state, row)
            mix.validate()

    def test_non_finite_input_rejected(self):
        params = init_params(tiny_config())
        with pytest.raises(NumericError):
            forward_step(params, init_state(params), Stroke5Row(float("nan"), 0, 1, 0, 0))


class TestLossAndGrads:
    def test_loss_is_finite_and_positive_for_random_model(self):
        params = init_params(tiny_config())
        rng = np.random.default_rng(1)
        rows, lengths = batch_from_rows([random_rows(rng, 5), random_rows(rng, 8)])
        terms, grads = loss_and_grads(params, rows, lengths)
        assert np.isfinite(terms.total)
        assert terms.total == pytest.approx(terms.offset + terms.pen)
        assert all(np.all(np.isfinite(g)) for g in grads.arrays())

    def test_masking_ignores_padding(self):
        params = init_params(tiny_config())
        rng = np.random.default_rng(2)
        seq = random_rows(rng, 5)
        rows_a, len_a = batch_from_rows([seq])
        padded = seq + [END_ROW] * 7
        rows_b, len_b = batch_from_rows([padded])
        len_b = np.array([len(seq)])
        terms_a, _ = loss_and_grads(params, rows_a, len_a, compute_grads=False)
        terms_b, _ = loss_and_grads(params, rows_b, len_b, compute_grads=False)
        assert terms_a.total == pytest.approx(terms_b.total, rel=1e-6)


class TestComplete:
    def test_deterministic_given_seed(self):
        params = init_params(tiny_config())
        rng = np.random.default_rng(3)
        prefix = random_rows(rng, 6)
        a = complete(params, prefix, amount=2, temperature=0.7, seed=42)
        b = complete(params, prefix, amount=2, temperature=0.7, seed=42)
        assert a == b

    def test_temperature_zero_ignores_seed(self):
        params = init_params(tiny_config())
        prefix = random_rows(np.random.default_rng(4), 4)
        a = complete(params, prefix, amount=1, temperature=0.0, seed=1)
        b = complete(params, prefix, amount=1, temperature=0.0, seed=999)
        assert a.rows == b.rows

    def test_amount_strokes_unless_cap(self):
        params = init_params(tiny_config())
        prefix = random_rows(np.random.default_rng(5), 6)
        suggestion = complete(params, prefix, amount=2, temperature=0.8, seed=7)
        decoded = from_stroke5(suggestion.rows, Point(0, 0), PlayerChannel.BLUE,
                               canvas_size=(1e9, 1e9))
        if not suggestion.cap_hit:
            assert len(decoded.strokes) == 2
        assert suggestion.rows[-1] == END_ROW

    def test_rows_are_valid_stroke5(self):
        params = init_params(tiny_config())
        prefix = random_rows(np.random.default_rng(6), 5)
        suggestion = complete(params, prefix, amount=3, temperature=1.0, seed=11)
        for row in suggestion.rows:
            assert sum(row.flags()) == 1

    def test_empty_prefix_unconditional(self):
        params = init_params(tiny_config())
        suggestion = complete(params, [], amount=1, temperature=0.5, seed=3)
        assert len(suggestion.rows) >= 2  # at least one sampled row + end token

    def test_bad_amount_rejected(self):
        params = init_params(tiny_config())
        with pytest.raises(InvalidInput):
            complete(params, [], amount=0, temperature=0.5, seed=1)

    def test_cap_flagged(self):
        # an untrained model with near-zero pen-up probability hits the cap
        params = init_params(tiny_config())
        k = params.num_mixtures
        params.by[6 * k] = 50.0  # pen-down logit dominates
        prefix = [START_ROW, Stroke5Row(1, 0, 0, 1, 0)]  # mean stroke len 2
        suggestion = complete(params, prefix, amount=1, temperature=0.0, seed=1)
        assert suggestion.cap_hit
        assert len(suggestion.rows) == 10 * 1 * 2 + 1

    def test_suggestion_json_round_trip(self):
        params = init_params(tiny_config())
        s = complete(params, [], amount=1, temperature=0.3, seed=9, policy="emitter")
        assert Suggestion.from_json(s.to_json()) == s


class TestMeanStrokeRows:
    def test_prefix_statistics(self):
        prefix = [START_ROW, Stroke5Row(1, 0, 1, 0, 0), Stroke5Row(1, 0, 0, 1, 0),
                  Stroke5Row(0, 1, 1, 0, 0), Stroke5Row(1, 0, 0, 1, 0), END_ROW]
        assert mean_stroke_rows(prefix) == pytest.approx(5 / 2)

    def test_fallback_without_breaks(self):
        assert mean_stroke_rows([START_ROW]) == 25.0
