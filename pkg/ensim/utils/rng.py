"""
Seeded random streams for simulation entities.

Every entity (radio channel, device, beacon, attacker) owns an independent
numpy Generator keyed by (role, index) under the scenario seed, so adding a
beacon never perturbs the key schedule of a device.
"""

from enum import IntEnum

from numpy.random import Generator, PCG64, SeedSequence


MAX_SEED = 2 ** 64 - 1


class StreamRole(IntEnum):
    """Spawn-key namespaces for the stream factory."""
    RADIO = 0
    DEVICE = 1
    BEACON = 2
    ATTACKER = 3


class StreamFactory:
    """
    Hands out reproducible random streams derived from one 64-bit seed.
    """

    def __init__(self, seed: int):
        """
        Initialize the factory.

        Args:
            seed: Scenario seed (0 <= seed < 2**64)

        Raises:
            ValueError: If the seed is out of range
        """
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= MAX_SEED:
            raise ValueError(f"Seed must be an unsigned 64-bit integer, got {seed!r}")
        self.seed = seed

    def stream(self, role: StreamRole, index: int = 0) -> Generator:
        """
        Create the stream for an entity.

        Args:
            role: Entity namespace
            index: Position of the entity within its namespace (sorted by id)

        Returns:
            numpy Generator seeded from (seed, role, index)
        """
        sequence = SeedSequence(entropy=self.seed, spawn_key=(int(role), index))
        return Generator(PCG64(sequence))
