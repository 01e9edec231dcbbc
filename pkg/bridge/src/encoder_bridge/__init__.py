"""Bridge from image directory trees to embedding datasets and PGM corpora."""

from .bridge import BridgeConfig, embed_tree, to_pgm_tree
from .encoder import (PatchStatsEncoder, encoder_names, get_encoder,
                      register_encoder)
from .formats import write_canonical_json, write_emb1, write_pgm
from .images import (IMAGE_SUFFIXES, LUMA_WEIGHTS, UnreadableImage,
                     center_crop_square, list_tree, load_image, quantize,
                     resize_square, to_luma)

__all__ = [
    "BridgeConfig",
    "IMAGE_SUFFIXES",
    "LUMA_WEIGHTS",
    "PatchStatsEncoder",
    "UnreadableImage",
    "center_crop_square",
    "embed_tree",
    "encoder_names",
    "get_encoder",
    "list_tree",
    "load_image",
    "quantize",
    "register_encoder",
    "resize_square",
    "to_luma",
    "to_pgm_tree",
    "write_canonical_json",
    "write_emb1",
    "write_pgm",
]
