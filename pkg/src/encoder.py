from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .constants import FORGET_BIAS_INIT, RECURRENT_INIT_SCALE
from .errors import EmptySequence, ShapeMismatch
from .tensor import Tensor, add, concat, matmul, mul, row, sigmoid, slice_, stack, tanh


@dataclass
class LstmParams:
    """Gate kernel over [s_prev; x] with gate blocks ordered input, forget, output, candidate."""
    W: Tensor
    b: Tensor

    @property
    def hidden(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] - self.hidden

    @classmethod
    def init(cls, input_dim: int, hidden: int, rng: np.random.Generator, name: str) -> 'LstmParams':
        W = rng.uniform(-RECURRENT_INIT_SCALE, RECURRENT_INIT_SCALE, size=(4 * hidden, hidden + input_dim))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = FORGET_BIAS_INIT
        return cls(Tensor(W, requires_grad=True, name=f"{name}.W"), Tensor(b, requires_grad=True, name=f"{name}.b"))

    def named(self, prefix: str) -> Dict[str, Tensor]:
        return {f"{prefix}.W": self.W, f"{prefix}.b": self.b}


def lstm_update(z: Tensor, c_prev: Tensor) -> Tuple[Tensor, Tensor]:
    """Apply gate nonlinearities to pre-activations z and advance the cell."""
    h = c_prev.shape[0]
    if z.shape != (4 * h,):
        raise ShapeMismatch(f"gate pre-activations {z.shape} do not match cell size {h}")
    i = sigmoid(slice_(z, 0, h))
    f = sigmoid(slice_(z, h, 2 * h))
    o = sigmoid(slice_(z, 2 * h, 3 * h))
    u = tanh(slice_(z, 3 * h, 4 * h))
    c = add(mul(f, c_prev), mul(i, u))
    s = mul(o, tanh(c))
    return s, c


def lstm_cell(x: Tensor, s_prev: Tensor, c_prev: Tensor, params: LstmParams) -> Tuple[Tensor, Tensor]:
    if s_prev.shape != (params.hidden,) or c_prev.shape != (params.hidden,) or x.shape != (params.input_dim,):
        raise ShapeMismatch(
            f"lstm_cell got x{x.shape}, s{s_prev.shape}, c{c_prev.shape} for params "
            f"(input {params.input_dim}, hidden {params.hidden})")
    z = add(matmul(params.W, concat([s_prev, x])), params.b)
    return lstm_update(z, c_prev)


@dataclass
class BiRnnParams:
    """Stacked bidirectional LSTM: layers[k] = (forward, backward)."""
    layers: List[Tuple[LstmParams, LstmParams]]

    @property
    def hidden(self) -> int:
        return self.layers[0][0].hidden

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden

    @classmethod
    def init(cls, input_dim: int, hidden: int, num_layers: int, rng: np.random.Generator,
             name: str) -> 'BiRnnParams':
        layers = []
        for k in range(num_layers):
            in_dim = input_dim if k == 0 else 2 * hidden
            layers.append((LstmParams.init(in_dim, hidden, rng, f"{name}.l{k}.fwd"),
                           LstmParams.init(in_dim, hidden, rng, f"{name}.l{k}.bwd")))
        return cls(layers)

    def named(self, prefix: str) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = {}
        for k, (fwd, bwd) in enumerate(self.layers):
            params.update(fwd.named(f"{prefix}.l{k}.fwd"))
            params.update(bwd.named(f"{prefix}.l{k}.bwd"))
        return params


@dataclass
class EncoderOutput:
    states: Tensor  # N x 2h
    final: Tensor   # 2h: last forward state joined with last backward state

    def __len__(self) -> int:
        return self.states.shape[0]


def _run_direction(inputs: List[Tensor], params: LstmParams, reverse: bool) -> List[Tensor]:
    zeros = Tensor(np.zeros(params.hidden))
    s, c = zeros, zeros
    outputs: List[Tensor] = [None] * len(inputs)
    positions = range(len(inputs) - 1, -1, -1) if reverse else range(len(inputs))
    for t in positions:
        s, c = lstm_cell(inputs[t], s, c, params)
        outputs[t] = s
    return outputs


def encode(embedded: Tensor, params: BiRnnParams) -> EncoderOutput:
    """Bidirectional encoding of an N x d embedded sequence; layer k+1 reads layer k's joined states."""
    if embedded.values.ndim != 2 or embedded.shape[0] == 0:
        raise EmptySequence("cannot encode an empty sequence")
    inputs = [row(embedded, t) for t in range(embedded.shape[0])]
    forward_states: List[Tensor] = []
    backward_states: List[Tensor] = []
    for fwd, bwd in params.layers:
        forward_states = _run_direction(inputs, fwd, reverse=False)
        backward_states = _run_direction(inputs, bwd, reverse=True)
        inputs = [concat([f, b]) for f, b in zip(forward_states, backward_states)]
    return EncoderOutput(states=stack(inputs), final=concat([forward_states[-1], backward_states[0]]))


def encode_background(embedded: Tensor, params: BiRnnParams) -> EncoderOutput:
    """Same computation as `encode`; callers pass the background encoder's own parameters."""
    return encode(embedded, params)
