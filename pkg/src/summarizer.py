from typing import Dict, List, Optional, Tuple

import numpy as np

from .attention import AttentionParams, BackgroundAttentionParams, background_vector
from .constants import SOS_ID
from .decoder import (
    DecoderParams, DecoderStep, EncodedSource, ExtendedVocab, build_source, initial_state,
    step_background, step_plain,
)
from .embeddings import EmbeddingTable
from .encoder import BiRnnParams, encode, encode_background
from .errors import EmptyFindings, ShapeMismatch
from .models import ModelConfig, ModelVariant, Report
from .tensor import Tensor, row
from .vocabulary import Vocabulary


class SummarizationModel:
    """
    Pointer-generator summarizer in one of three variants:
    plain (findings only), prepend-background (background + findings as one source),
    and background-gated (separate background encoder whose attended summary b
    feeds the decoder's recurrent kernel at every step).
    """

    def __init__(self, config: ModelConfig, vocab: Vocabulary, embedding: Optional[EmbeddingTable] = None):
        self.config = config
        self.vocab = vocab
        rng = np.random.default_rng(config.init_seed)
        context_dim = 2 * config.hidden

        self.embedding = embedding or EmbeddingTable(vocab, config.emb_dim, seed=config.init_seed)
        if self.embedding.dim != config.emb_dim:
            raise ShapeMismatch(f"embedding dim {self.embedding.dim} != configured {config.emb_dim}")
        self.encoder = BiRnnParams.init(config.emb_dim, config.hidden, config.layers, rng, "encoder")
        self.bg_encoder: Optional[BiRnnParams] = None
        self.bg_attention: Optional[BackgroundAttentionParams] = None
        if self.gated:
            self.bg_encoder = BiRnnParams.init(config.emb_dim, config.hidden, config.layers, rng, "bg_encoder")
            self.bg_attention = BackgroundAttentionParams.init(context_dim, context_dim, config.attn_dim, rng)
        self.attention = AttentionParams.init(context_dim, config.dec_hidden, config.attn_dim, rng)
        self.decoder = DecoderParams.init(config.emb_dim, context_dim, config.dec_hidden, config.proj_dim,
                                          len(vocab), self.gated, rng)

    @property
    def gated(self) -> bool:
        return self.config.variant == ModelVariant.BACKGROUND_GATED

    def parameters(self) -> Dict[str, Tensor]:
        params = {"embedding": self.embedding.matrix}
        params.update(self.encoder.named("encoder"))
        if self.gated:
            params.update(self.bg_encoder.named("bg_encoder"))
            params.update(self.bg_attention.named("bg_attn"))
        params.update(self.attention.named("attn"))
        params.update(self.decoder.named("decoder"))
        return params

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.values.copy() for name, p in self.parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(state)
        if missing:
            raise ShapeMismatch(f"state is missing parameters: {sorted(missing)}")
        for name, p in params.items():
            if state[name].shape != p.shape:
                raise ShapeMismatch(f"{name}: stored shape {state[name].shape} != {p.shape}")
            p.values[...] = state[name]

    def source_tokens(self, report: Report) -> List[str]:
        if self.config.variant == ModelVariant.PREPEND_BACKGROUND:
            return list(report.background) + list(report.findings)
        return list(report.findings)

    def encode(self, report: Report) -> EncodedSource:
        if not report.findings:
            raise EmptyFindings(f"report {report.id} has no findings")
        tokens = self.source_tokens(report)
        extended = ExtendedVocab(self.vocab, tokens)
        enc = encode(self.embedding.lookup(self.vocab.encode(tokens)), self.encoder)
        b = None
        if self.gated:
            bg = encode_background(self.embedding.lookup(self.vocab.encode(report.background)), self.bg_encoder)
            b = background_vector(bg.states, enc.final, self.bg_attention)
        return build_source(enc, tokens, extended, self.attention, background=b)

    def initial_state(self, source: EncodedSource) -> Tuple[Tensor, Tensor]:
        return initial_state(source.enc, self.decoder)

    def step(self, source: EncodedSource, s_prev: Tensor, c_prev: Tensor, prev_id: int) -> DecoderStep:
        y_prev = row(self.embedding.lookup([source.extended.input_id(prev_id)]), 0)
        if self.gated:
            return step_background(s_prev, c_prev, y_prev, source.background, source, self.decoder, self.attention)
        return step_plain(s_prev, c_prev, y_prev, source, self.decoder, self.attention)

    def teacher_forced(self, report: Report) -> Tuple[List[DecoderStep], List[int]]:
        """Decode with the gold previous token at every step; targets end with EOS."""
        source = self.encode(report)
        targets = source.extended.target_ids(report.impression)
        s, c = self.initial_state(source)
        steps = []
        prev = SOS_ID
        for target in targets:
            step = self.step(source, s, c, prev)
            steps.append(step)
            s, c, prev = step.s, step.c, target
        return steps, targets

