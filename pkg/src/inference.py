from dataclasses import dataclass
from typing import Any, Callable, List, Tuple

import numpy as np

from .constants import BEAM_SIZE, EOS_ID, MAX_DECODE_LEN, PAD_ID, SOS_ID
from .models import Report
from .summarizer import SummarizationModel
from .tensor import no_grad

# (state, previous token id) -> (log-probabilities over the output ids, next state)
StepFn = Callable[[Any, int], Tuple[np.ndarray, Any]]


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...]
    logp: float
    state: Any = None
    eos_id: int = EOS_ID

    @property
    def finished(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == self.eos_id

    @property
    def score(self) -> float:
        """Log-probability per emitted token."""
        return self.logp / max(len(self.tokens), 1)

    def extend(self, token: int, logp: float, state: Any) -> 'Hypothesis':
        return Hypothesis(self.tokens + (token,), self.logp + logp, state, self.eos_id)


def _rank(hyp: Hypothesis) -> Tuple[float, Tuple[int, ...]]:
    return -hyp.score, hyp.tokens


def _top_tokens(logprobs: np.ndarray, k: int) -> List[int]:
    # Stable sort on -logp keeps the smaller id first among ties.
    return [int(i) for i in np.argsort(-logprobs, kind="stable")[:k]]


def greedy_ids(initial_state: Any, step_fn: StepFn, start_id: int = SOS_ID, eos_id: int = EOS_ID,
               max_len: int = MAX_DECODE_LEN) -> Hypothesis:
    hyp = Hypothesis((), 0.0, initial_state, eos_id)
    prev = start_id
    while len(hyp.tokens) < max_len and not hyp.finished:
        logprobs, state = step_fn(hyp.state, prev)
        prev = _top_tokens(logprobs, 1)[0]
        hyp = hyp.extend(prev, float(logprobs[prev]), state)
    return hyp


def beam_search_ids(initial_state: Any, step_fn: StepFn, start_id: int = SOS_ID, eos_id: int = EOS_ID,
                    beam: int = BEAM_SIZE, max_len: int = MAX_DECODE_LEN) -> Hypothesis:
    """
    Keep the `beam` best partial hypotheses by accumulated log-probability. Hypotheses that emit EOS
    leave the beam as finished, those that reach max_len without it as capped. The best
    length-normalized finished hypothesis wins; capped ones are only returned when nothing finished.
    """
    if beam < 1 or max_len < 1:
        raise ValueError(f"beam ({beam}) and max_len ({max_len}) must be at least 1")

    live = [Hypothesis((), 0.0, initial_state, eos_id)]
    finished: List[Hypothesis] = []
    capped: List[Hypothesis] = []
    while live:
        candidates = []
        for hyp in live:
            logprobs, state = step_fn(hyp.state, hyp.tokens[-1] if hyp.tokens else start_id)
            for token in _top_tokens(logprobs, beam):
                candidates.append(hyp.extend(token, float(logprobs[token]), state))
        candidates.sort(key=lambda h: (-h.logp, h.tokens))
        live = []
        for hyp in candidates[:beam]:
            if hyp.finished:
                finished.append(hyp)
            elif len(hyp.tokens) >= max_len:
                capped.append(hyp)
            else:
                live.append(hyp)

    if beam > 1:
        greedy = greedy_ids(initial_state, step_fn, start_id, eos_id, max_len)
        (finished if greedy.finished else capped).append(greedy)
    return min(finished or capped, key=_rank)


class ModelDecoder:
    """Adapts a SummarizationModel and one encoded report to the step-function protocol."""

    def __init__(self, model: SummarizationModel, report: Report):
        self.model = model
        with no_grad():
            self.source = model.encode(report)
            self.initial_state = model.initial_state(self.source)

    def step(self, state: Tuple[Any, Any], prev_id: int) -> Tuple[np.ndarray, Tuple[Any, Any]]:
        s, c = state
        with no_grad():
            out = self.model.step(self.source, s, c, prev_id)
        with np.errstate(divide="ignore"):
            logprobs = np.log(out.dist.values)
        logprobs[[PAD_ID, SOS_ID]] = -np.inf
        return logprobs, (out.s, out.c)

    def tokens(self, hyp: Hypothesis) -> List[str]:
        ids = hyp.tokens[:-1] if hyp.finished else hyp.tokens
        return [self.source.extended.token(i) for i in ids]


def beam_search(model: SummarizationModel, report: Report, beam: int = BEAM_SIZE,
                max_len: int = MAX_DECODE_LEN) -> List[str]:
    decoder = ModelDecoder(model, report)
    hyp = beam_search_ids(decoder.initial_state, decoder.step, beam=beam, max_len=max_len)
    return decoder.tokens(hyp)


def greedy_search(model: SummarizationModel, report: Report, max_len: int = MAX_DECODE_LEN) -> List[str]:
    decoder = ModelDecoder(model, report)
    return decoder.tokens(greedy_ids(decoder.initial_state, decoder.step, max_len=max_len))


def summarize(model: SummarizationModel, report: Report, beam: int = BEAM_SIZE,
              max_len: int = MAX_DECODE_LEN) -> str:
    """Decode an impression for the report and join its tokens with single spaces."""
    if beam == 1:
        tokens = greedy_search(model, report, max_len=max_len)
    else:
        tokens = beam_search(model, report, beam=beam, max_len=max_len)
    return " ".join(tokens)
