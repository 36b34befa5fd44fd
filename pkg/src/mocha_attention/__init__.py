"""Soft, hard monotonic, MoChA and MAtChA attention with online decoders."""

from mocha_attention.attention import (
    AdditiveEnergyParams,
    DecodeStep,
    NoiseConfig,
    NormalizedEnergyParams,
    additive_energy,
    initial_alpha,
    monotonic_alpha_row,
    monotonic_decode_step,
    normalized_energy,
    selection_probabilities,
    soft_attention,
)
from mocha_attention.chunkwise import (
    ChunkConfig,
    matcha_beta_row,
    matcha_decode_step,
    mocha_beta_row,
    mocha_decode_step,
)

__all__ = [
    "AdditiveEnergyParams",
    "ChunkConfig",
    "DecodeStep",
    "NoiseConfig",
    "NormalizedEnergyParams",
    "additive_energy",
    "initial_alpha",
    "matcha_beta_row",
    "matcha_decode_step",
    "mocha_beta_row",
    "mocha_decode_step",
    "monotonic_alpha_row",
    "monotonic_decode_step",
    "normalized_energy",
    "selection_probabilities",
    "soft_attention",
]
