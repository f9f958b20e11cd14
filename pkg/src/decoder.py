from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .attention import AttentionParams, attend, project_states
from .constants import EOS_ID, RECURRENT_INIT_SCALE, UNK_ID
from .encoder import EncoderOutput, LstmParams, lstm_cell, lstm_update
from .errors import ShapeMismatch
from .tensor import (
    Tensor, add, concat, dot, matmul, pad, scale, scatter_add, sigmoid, softmax, tanh,
)
from .vocabulary import Vocabulary


class ExtendedVocab:
    """
    The base vocabulary plus temporary ids for source tokens it lacks.
    Temporary ids start at len(vocab) and are valid only for the example they were built from.
    """

    def __init__(self, vocab: Vocabulary, source_tokens: Sequence[str]):
        self.vocab = vocab
        self.oovs: List[str] = []
        self._oov_ids: Dict[str, int] = {}
        for token in source_tokens:
            if token not in vocab and token not in self._oov_ids:
                self._oov_ids[token] = len(vocab) + len(self.oovs)
                self.oovs.append(token)

    def __len__(self) -> int:
        return len(self.vocab) + len(self.oovs)

    def id(self, token: str) -> int:
        if token in self.vocab:
            return self.vocab.id(token)
        return self._oov_ids.get(token, UNK_ID)

    def ids(self, tokens: Sequence[str]) -> List[int]:
        return [self.id(t) for t in tokens]

    def target_ids(self, tokens: Sequence[str]) -> List[int]:
        return self.ids(tokens) + [EOS_ID]

    def token(self, idx: int) -> str:
        if idx < len(self.vocab):
            return self.vocab.token(idx)
        return self.oovs[idx - len(self.vocab)]

    def input_id(self, idx: int) -> int:
        """Id to embed when feeding a decoded token back; copied OOVs have no embedding row."""
        return idx if idx < len(self.vocab) else UNK_ID


@dataclass
class EncodedSource:
    """Everything a decoding step needs from one example's encoders."""
    enc: EncoderOutput
    keys: Tensor                # W_h h_i for every source state
    src_ids: List[int]          # source tokens in the extended vocabulary
    extended: ExtendedVocab
    background: Optional[Tensor] = None


@dataclass
class DecoderStep:
    s: Tensor
    c: Tensor
    attn: Tensor
    p_gen: Tensor
    p_vocab: Tensor
    dist: Tensor


def _uniform(rng: np.random.Generator, shape, name: str) -> Tensor:
    return Tensor(rng.uniform(-RECURRENT_INIT_SCALE, RECURRENT_INIT_SCALE, size=shape), requires_grad=True, name=name)


def _zeros(shape, name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


@dataclass
class DecoderParams:
    lstm: LstmParams                # recurrent kernel over [s_prev; y_prev]
    W_bg: Optional[Tensor]          # extra kernel columns over b (background-gated only)
    V: Tensor                       # p x (s + 2h)
    V_bias: Tensor
    V_out: Tensor                   # |V| x p
    V_out_bias: Tensor
    w_hstar: Tensor
    w_s: Tensor
    w_y: Tensor
    gen_bias: Tensor
    bridge_W: Optional[Tensor] = None
    bridge_b: Optional[Tensor] = None

    @property
    def hidden(self) -> int:
        return self.lstm.hidden

    @classmethod
    def init(cls, emb_dim: int, context_dim: int, hidden: int, proj_dim: int, vocab_size: int,
             gated: bool, rng: np.random.Generator, name: str = "decoder") -> 'DecoderParams':
        params = cls(
            lstm=LstmParams.init(emb_dim, hidden, rng, f"{name}.lstm"),
            W_bg=_uniform(rng, (4 * hidden, context_dim), f"{name}.W_bg") if gated else None,
            V=_uniform(rng, (proj_dim, hidden + context_dim), f"{name}.V"),
            V_bias=_zeros(proj_dim, f"{name}.V_bias"),
            V_out=_uniform(rng, (vocab_size, proj_dim), f"{name}.V_out"),
            V_out_bias=_zeros(vocab_size, f"{name}.V_out_bias"),
            w_hstar=_uniform(rng, (context_dim,), f"{name}.w_hstar"),
            w_s=_uniform(rng, (hidden,), f"{name}.w_s"),
            w_y=_uniform(rng, (emb_dim,), f"{name}.w_y"),
            gen_bias=_zeros((), f"{name}.gen_bias"),
        )
        if context_dim != hidden:
            params.bridge_W = _uniform(rng, (hidden, context_dim), f"{name}.bridge_W")
            params.bridge_b = _zeros(hidden, f"{name}.bridge_b")
        return params

    def named(self, prefix: str) -> Dict[str, Tensor]:
        named = self.lstm.named(f"{prefix}.lstm")
        optional = {"W_bg": self.W_bg, "bridge_W": self.bridge_W, "bridge_b": self.bridge_b}
        fields = {"V": self.V, "V_bias": self.V_bias, "V_out": self.V_out, "V_out_bias": self.V_out_bias,
                  "w_hstar": self.w_hstar, "w_s": self.w_s, "w_y": self.w_y, "gen_bias": self.gen_bias}
        fields.update({k: v for k, v in optional.items() if v is not None})
        named.update({f"{prefix}.{k}": v for k, v in fields.items()})
        return named


def build_source(enc: EncoderOutput, src_tokens: Sequence[str], extended: ExtendedVocab,
                 attn_params: AttentionParams, background: Optional[Tensor] = None) -> EncodedSource:
    if len(src_tokens) != len(enc):
        raise ShapeMismatch(f"{len(src_tokens)} source tokens for {len(enc)} encoder states")
    return EncodedSource(enc=enc, keys=project_states(enc.states, attn_params.W_h),
                         src_ids=extended.ids(src_tokens), extended=extended, background=background)


def initial_state(enc: EncoderOutput, params: DecoderParams) -> Tuple[Tensor, Tensor]:
    """s0 = h_N (through a linear bridge when sizes differ); c0 = 0."""
    s0 = enc.final
    if params.bridge_W is not None:
        s0 = add(matmul(params.bridge_W, s0), params.bridge_b)
    if s0.shape != (params.hidden,):
        raise ShapeMismatch(f"encoder final {enc.final.shape} cannot seed decoder of size {params.hidden}")
    return s0, Tensor(np.zeros(params.hidden))


def p_gen(h_star: Tensor, s_t: Tensor, y_prev_emb: Tensor, params: DecoderParams) -> Tensor:
    """Probability of generating from the vocabulary rather than copying."""
    logit = add(add(add(dot(params.w_hstar, h_star), dot(params.w_s, s_t)), dot(params.w_y, y_prev_emb)),
                params.gen_bias)
    return sigmoid(logit)


def mixture(p_gen_t: Tensor, p_vocab: Tensor, attn: Tensor, src_ids: Sequence[int],
            extended: ExtendedVocab) -> Tensor:
    """
    p_gen * P_vocab (zero beyond the base vocabulary) plus (1 - p_gen) times the attention
    mass aggregated over every source position holding each token.
    """
    size = len(extended)
    generate = pad(scale(p_vocab, p_gen_t), size)
    copy = scatter_add(scale(attn, 1.0 - p_gen_t), src_ids, size)
    return add(generate, copy)


def _output(s: Tensor, c: Tensor, y_prev_emb: Tensor, source: EncodedSource, params: DecoderParams,
            attn_params: AttentionParams) -> DecoderStep:
    attention = attend(source.enc.states, s, attn_params, keys=source.keys)
    hidden = tanh(add(matmul(params.V, concat([s, attention.context])), params.V_bias))
    p_vocab = softmax(add(matmul(params.V_out, hidden), params.V_out_bias))
    gen = p_gen(attention.context, s, y_prev_emb, params)
    dist = mixture(gen, p_vocab, attention.weights, source.src_ids, source.extended)
    return DecoderStep(s=s, c=c, attn=attention.weights, p_gen=gen, p_vocab=p_vocab, dist=dist)


def step_plain(s_prev: Tensor, c_prev: Tensor, y_prev_emb: Tensor, source: EncodedSource,
               params: DecoderParams, attn_params: AttentionParams) -> DecoderStep:
    s, c = lstm_cell(y_prev_emb, s_prev, c_prev, params.lstm)
    return _output(s, c, y_prev_emb, source, params, attn_params)


def step_background(s_prev: Tensor, c_prev: Tensor, y_prev_emb: Tensor, b: Tensor, source: EncodedSource,
                    params: DecoderParams, attn_params: AttentionParams) -> DecoderStep:
    """The recurrent kernel additionally reads b, so every decoder state is conditioned on it."""
    if params.W_bg is None:
        raise ShapeMismatch("decoder parameters have no background kernel")
    if b.shape != (params.W_bg.shape[1],):
        raise ShapeMismatch(f"background vector {b.shape} does not match kernel {params.W_bg.shape}")
    if y_prev_emb.shape != (params.lstm.input_dim,) or s_prev.shape != (params.hidden,):
        raise ShapeMismatch(f"decoder step got y{y_prev_emb.shape}, s{s_prev.shape}")
    # Same pre-activation as the plain cell, with the background term added last.
    z = add(add(matmul(params.lstm.W, concat([s_prev, y_prev_emb])), params.lstm.b), matmul(params.W_bg, b))
    s, c = lstm_update(z, c_prev)
    return _output(s, c, y_prev_emb, source, params, attn_params)
