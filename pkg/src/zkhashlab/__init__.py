"""ZK-friendly hashing over the BN254 scalar field.

Submodules: ``field`` (F_p arithmetic), ``permutations`` (MiMC, GMiMC,
Poseidon, Poseidon2, Neptune and a sponge), ``merkle``, ``circuit``
(arithmetic-circuit IR with R1CS and Plonkish lowering), ``hash_circuits``
(gadgets), ``mixer`` (protocol simulator), ``costmodel`` and ``bench``.
"""

__version__ = "0.1.0"
