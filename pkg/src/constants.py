# Reserved vocabulary entries, in id order
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
SOS_TOKEN = "<sos>"
EOS_TOKEN = "<eos>"
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, SOS_TOKEN, EOS_TOKEN)
PAD_ID, UNK_ID, SOS_ID, EOS_ID = range(4)

# Corpus filtering thresholds
MIN_FINDINGS_TOKENS = 10
MIN_IMPRESSION_TOKENS = 2

DEFAULT_VOCAB_MAX_SIZE = 50_000
DEFAULT_VOCAB_MIN_COUNT = 1
DEFAULT_SPLIT_RATIOS = (0.7, 0.1, 0.2)
DEFAULT_HOLDOUT_DEV_FRACTION = 0.1

# Architecture defaults
EMBEDDING_DIM = 100
ENCODER_HIDDEN = 100
ENCODER_LAYERS = 2
DECODER_HIDDEN = 200
ATTENTION_DIM = 200
PROJECTION_DIM = 200
EMBEDDING_INIT_SCALE = 0.1
RECURRENT_INIT_SCALE = 0.08
FORGET_BIAS_INIT = 1.0

# Decoding defaults
BEAM_SIZE = 5
MAX_DECODE_LEN = 100

# Extractive baselines
SUMMARY_SENTENCES = 3
LEXRANK_DAMPING = 0.15
LEXRANK_THRESHOLD = 0.1
POWER_ITERATION_TOL = 1e-8

BOOTSTRAP_RESAMPLES = 1000
