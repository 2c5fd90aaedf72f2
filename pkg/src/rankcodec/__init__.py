"""rankcodec: predictive lossless text compression.

A deterministic next-token predictor turns text into a stream of candidate
ranks; entropy backends (raw DEFLATE, adaptive Huffman, arithmetic coding)
turn ranks or tokens into bits; a small container format muxes the result
with an opaque image payload; metrics helpers reproduce compression-ratio,
BD-rate and weighted-loss bookkeeping.
"""

from .container import ContainerFile, ContainerHeader, bits_per_pixel, demux, mux
from .entropy_coding import (
    Backend,
    Bitstream,
    CodingStats,
    adaptive_huffman_decode,
    adaptive_huffman_encode,
    arithmetic_decode,
    arithmetic_encode,
    cross_entropy_bits,
    deflate_decode,
    deflate_encode,
)
from .errors import (
    CorruptStream,
    DegenerateCurve,
    EmptyInput,
    InvalidHeader,
    InvalidReading,
    LengthMismatch,
    NoOverlap,
    NotAContainer,
    ProtocolError,
    RankCodecError,
    RemoteUnavailable,
    Truncated,
    UnsupportedVersion,
    VocabMismatch,
)
from .metrics import (
    LossWeights,
    MetricReadings,
    RatioReport,
    RdCurve,
    aggregate_loss,
    bd_rate,
    compression_ratio,
    ratio_report,
    read_rd_curve,
)
from .predictor import (
    NgramModel,
    Predictor,
    ProbabilityDistribution,
    RemotePredictor,
    TokenSequence,
    UniformPredictor,
    Vocabulary,
    ngram_predict,
    ngram_update,
    remote_predict,
    uniform_predict,
)
from .rank_transform import RankSequence, ranks_to_tokens, tokens_to_ranks

__version__ = "0.1.0"
