"""The five type-1 permutations (MiMC, GMiMC, Poseidon, Poseidon2, Neptune) and a sponge."""

from .params import (
    HASHES,
    ArityError,
    ParameterError,
    PermutationSpec,
    SpongeConfig,
    default_spec,
    default_sponge,
    generate_params,
    load_params,
    load_spec,
    save_params,
)
from .sponge import Hasher, hash2, permute, permute_ints, sponge_hash, sponge_hash_ints

__all__ = [
    "HASHES",
    "ArityError",
    "Hasher",
    "ParameterError",
    "PermutationSpec",
    "SpongeConfig",
    "default_spec",
    "default_sponge",
    "generate_params",
    "hash2",
    "load_params",
    "load_spec",
    "permute",
    "permute_ints",
    "save_params",
    "sponge_hash",
    "sponge_hash_ints",
]
