from .base import DecodeResult, DecoderConfig, parse_bits
from .hard import hard_decode, hard_decode_batch
from .md import level1_candidates, md_decode, md_decode_batch
from .soft import soft_decode, soft_decode_batch, soft_marginals

DECODERS = ("hard", "soft", "md")
