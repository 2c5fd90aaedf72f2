"""Next-token probability server and tokenizer bridge."""

from .models import MockTableModel
from .protocol import encode_frame, format_probs, read_frame, write_frame
from .server import ProbabilityServer, ServerConfig
from .tokenizers import (
    ByteTokenizer,
    UntokenizableError,
    detokenize_file,
    export_tokens,
    get_tokenizer,
)

__version__ = "0.1.0"
