from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .constants import RECURRENT_INIT_SCALE
from .errors import EmptyStates, ShapeMismatch
from .tensor import Tensor, add, matmul, softmax, tanh, transpose


def _uniform(rng: np.random.Generator, shape, name: str) -> Tensor:
    return Tensor(rng.uniform(-RECURRENT_INIT_SCALE, RECURRENT_INIT_SCALE, size=shape), requires_grad=True, name=name)


@dataclass
class AttentionParams:
    """Additive attention over findings states: e_i = v . tanh(W_h h_i + W_s s_t + bias)."""
    W_h: Tensor
    W_s: Tensor
    v: Tensor
    bias: Tensor

    @classmethod
    def init(cls, state_dim: int, query_dim: int, attn_dim: int, rng: np.random.Generator,
             name: str = "attn") -> 'AttentionParams':
        return cls(
            W_h=_uniform(rng, (attn_dim, state_dim), f"{name}.W_h"),
            W_s=_uniform(rng, (attn_dim, query_dim), f"{name}.W_s"),
            v=_uniform(rng, (attn_dim,), f"{name}.v"),
            bias=Tensor(np.zeros(attn_dim), requires_grad=True, name=f"{name}.bias"),
        )

    def named(self, prefix: str) -> Dict[str, Tensor]:
        return {f"{prefix}.W_h": self.W_h, f"{prefix}.W_s": self.W_s,
                f"{prefix}.v": self.v, f"{prefix}.bias": self.bias}


@dataclass
class BackgroundAttentionParams:
    """Single-shot attention over background states queried by the findings summary h_N."""
    W_b: Tensor
    W_n: Tensor
    v: Tensor
    bias: Tensor

    @classmethod
    def init(cls, state_dim: int, findings_dim: int, attn_dim: int, rng: np.random.Generator,
             name: str = "bg_attn") -> 'BackgroundAttentionParams':
        return cls(
            W_b=_uniform(rng, (attn_dim, state_dim), f"{name}.W_b"),
            W_n=_uniform(rng, (attn_dim, findings_dim), f"{name}.W_n"),
            v=_uniform(rng, (attn_dim,), f"{name}.v"),
            bias=Tensor(np.zeros(attn_dim), requires_grad=True, name=f"{name}.bias"),
        )

    def named(self, prefix: str) -> Dict[str, Tensor]:
        return {f"{prefix}.W_b": self.W_b, f"{prefix}.W_n": self.W_n,
                f"{prefix}.v": self.v, f"{prefix}.bias": self.bias}


@dataclass
class AttentionResult:
    weights: Tensor
    context: Tensor


def project_states(states: Tensor, W: Tensor) -> Tensor:
    """W h_i for every row h_i; independent of the query, so computed once per example."""
    if states.values.ndim != 2 or states.shape[0] == 0:
        raise EmptyStates("attention needs at least one state")
    return matmul(states, transpose(W))


def attend_scores(states: Tensor, scores: Tensor) -> AttentionResult:
    if scores.shape != (states.shape[0],):
        raise ShapeMismatch(f"expected {states.shape[0]} scores, got shape {scores.shape}")
    weights = softmax(scores)
    return AttentionResult(weights=weights, context=matmul(weights, states))


def _additive(states: Tensor, keys: Tensor, query_proj: Tensor, bias: Tensor, v: Tensor) -> AttentionResult:
    scores = matmul(tanh(add(keys, add(query_proj, bias))), v)
    return attend_scores(states, scores)


def attend(states: Tensor, query: Tensor, params: AttentionParams,
           keys: Optional[Tensor] = None) -> AttentionResult:
    """Attention distribution over `states` for one decoder query, plus the weighted context."""
    if keys is None:
        keys = project_states(states, params.W_h)
    return _additive(states, keys, matmul(params.W_s, query), params.bias, params.v)


def background_vector(bg_states: Tensor, findings_final: Tensor, params: BackgroundAttentionParams) -> Tensor:
    """The background summary b, computed once per example and reused at every decoding step."""
    keys = project_states(bg_states, params.W_b)
    return _additive(bg_states, keys, matmul(params.W_n, findings_final), params.bias, params.v).context
