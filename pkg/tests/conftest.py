import pytest

from src.models import ModelConfig, ModelVariant, Report
from src.summarizer import SummarizationModel
from src.vocabulary import Vocabulary


@pytest.fixture
def tiny_vocab():
    # 4 reserved + 8 tokens
    return Vocabulary(["<pad>", "<unk>", "<sos>", "<eos>",
                       "left", "right", "knee", "ankle", "no", "fracture", ".", "normal"])


@pytest.fixture
def tiny_report():
    # "zzz" is outside the vocabulary so the target exercises the copy path.
    return Report(
        id="r1",
        body_part="knee",
        background=["left", "knee", "."],
        findings=["no", "fracture", "knee", "zzz", "."],
        impression=["left", "zzz"],
    )


def _tiny_config(variant=ModelVariant.BACKGROUND_GATED, seed=0, **overrides):
    fields = dict(variant=variant, emb_dim=4, hidden=3, dec_hidden=6, layers=1, attn_dim=5, proj_dim=5,
                  init_seed=seed)
    fields.update(overrides)
    return ModelConfig(**fields)


@pytest.fixture
def make_model(tiny_vocab):
    def _make(variant=ModelVariant.BACKGROUND_GATED, seed=0, **overrides):
        return SummarizationModel(_tiny_config(variant, seed, **overrides), tiny_vocab)
    return _make


@pytest.fixture
def tiny_config():
    return _tiny_config
