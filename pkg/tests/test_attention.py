from unittest.mock import patch

import numpy as np
import pytest

from src.attention import AttentionParams, BackgroundAttentionParams, attend, attend_scores, background_vector
from src.errors import EmptyStates
from src.tensor import Tensor, dot
from tests.test_tensor import check_grads


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def test_weights_form_a_distribution(rng):
    params = AttentionParams.init(state_dim=6, query_dim=4, attn_dim=5, rng=rng)
    states = Tensor(rng.normal(size=(7, 6)))
    result = attend(states, Tensor(rng.normal(size=4)), params)
    assert result.weights.shape == (7,)
    assert result.weights.values.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(result.context.values, result.weights.values @ states.values)


def test_equal_scores_give_the_mean_state():
    states = Tensor(np.array([[1.0, 0.0], [0.0, 1.0]]))
    result = attend_scores(states, Tensor(np.zeros(2)))
    np.testing.assert_allclose(result.weights.values, [0.5, 0.5])
    np.testing.assert_allclose(result.context.values, [0.5, 0.5])


def test_single_state_gets_all_the_mass(rng):
    params = AttentionParams.init(state_dim=6, query_dim=4, attn_dim=5, rng=rng)
    states = Tensor(rng.normal(size=(1, 6)))
    result = attend(states, Tensor(rng.normal(size=4)), params)
    np.testing.assert_allclose(result.weights.values, [1.0])
    np.testing.assert_allclose(result.context.values, states.values[0])


def test_precomputed_keys_match(rng):
    params = AttentionParams.init(state_dim=6, query_dim=4, attn_dim=5, rng=rng)
    states = Tensor(rng.normal(size=(3, 6)))
    query = Tensor(rng.normal(size=4))
    keys = Tensor(states.values @ params.W_h.values.T)
    np.testing.assert_allclose(attend(states, query, params, keys=keys).weights.values,
                               attend(states, query, params).weights.values)


def test_background_vector_is_convex_combination(rng):
    params = BackgroundAttentionParams.init(state_dim=6, findings_dim=6, attn_dim=5, rng=rng)
    bg_states = Tensor(rng.normal(size=(4, 6)))
    b = background_vector(bg_states, Tensor(rng.normal(size=6)), params)
    assert b.shape == (6,)
    assert np.all(b.values <= bg_states.values.max(axis=0) + 1e-12)
    assert np.all(b.values >= bg_states.values.min(axis=0) - 1e-12)


def test_empty_states(rng):
    params = AttentionParams.init(state_dim=6, query_dim=4, attn_dim=5, rng=rng)
    with pytest.raises(EmptyStates):
        attend(Tensor(np.zeros((0, 6))), Tensor(np.zeros(4)), params)


def test_hand_set_scores():
    states = Tensor(np.array([[4.0, 0.0], [0.0, 4.0]]))
    result = attend_scores(states, Tensor(np.log([1.0, 3.0])))
    np.testing.assert_allclose(result.weights.values, [0.25, 0.75])
    np.testing.assert_allclose(result.context.values, [1.0, 3.0])


def test_permuting_states_permutes_weights(rng):
    params = AttentionParams.init(state_dim=6, query_dim=4, attn_dim=5, rng=rng)
    states = rng.normal(size=(5, 6))
    query = Tensor(rng.normal(size=4))
    perm = [3, 0, 4, 1, 2]
    original = attend(Tensor(states), query, params)
    permuted = attend(Tensor(states[perm]), query, params)
    np.testing.assert_allclose(permuted.weights.values, original.weights.values[perm], atol=1e-12)
    np.testing.assert_allclose(permuted.context.values, original.context.values, atol=1e-12)


def test_background_vector_of_one_state_is_that_state(rng):
    params = BackgroundAttentionParams.init(state_dim=6, findings_dim=6, attn_dim=5, rng=rng)
    bg_states = Tensor(rng.normal(size=(1, 6)))
    b = background_vector(bg_states, Tensor(rng.normal(size=6)), params)
    np.testing.assert_allclose(b.values, bg_states.values[0])


def test_zero_scoring_vector_gives_the_mean_background(rng):
    params = BackgroundAttentionParams.init(state_dim=6, findings_dim=6, attn_dim=5, rng=rng)
    params.v.values[...] = 0.0
    bg_states = Tensor(rng.normal(size=(4, 6)))
    b = background_vector(bg_states, Tensor(rng.normal(size=6)), params)
    np.testing.assert_allclose(b.values, bg_states.values.mean(axis=0), atol=1e-12)


def test_background_vector_gradient(rng):
    params = BackgroundAttentionParams.init(state_dim=4, findings_dim=4, attn_dim=3, rng=rng)
    # larger scoring weights keep the attention away from uniform
    params.v.values[...] = rng.normal(size=3) * 3
    bg_states = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    findings_final = Tensor(rng.normal(size=4), requires_grad=True)

    def squared_norm():
        b = background_vector(bg_states, findings_final, params)
        return dot(b, b)

    check_grads(squared_norm, bg_states, findings_final, params.W_b, params.W_n, params.v)


def test_background_vector_is_computed_once_per_report(make_model, tiny_report):
    model = make_model()
    with patch("src.summarizer.background_vector", wraps=background_vector) as spy:
        steps, _ = model.teacher_forced(tiny_report)
    assert len(steps) == len(tiny_report.impression) + 1
    assert spy.call_count == 1
