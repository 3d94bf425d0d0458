"""Exception hierarchy shared by the whole package."""


class EventMCError(Exception):
    """Base class for all eventmc errors."""


class ConfigurationError(EventMCError):
    """Invalid run parameters or config file contents."""


class GeometryError(EventMCError):
    """Position outside the model, or no boundary intersection found."""


class PhysicsError(EventMCError):
    """Unphysical state encountered during transport (e.g. sigma_t <= 0)."""


class InvalidEnergyError(EventMCError):
    """Non-finite or non-positive energy passed to a lookup."""


class UnknownMaterialError(EventMCError):
    """Material id not present in the library."""


class StreamOverlapError(EventMCError):
    """A single history consumed the full RNG stride; streams would overlap."""


class RunawayHistoryError(EventMCError):
    """A single history produced an absurd number of tally contributions."""


class PopulationCollapseError(EventMCError):
    """The fission bank came up empty; the chain reaction died out."""


class StatisticsError(EventMCError):
    """Too few active batches to form the requested statistics."""


class ReproducibilityError(EventMCError):
    """Physics outputs that must be bit-identical were not (tripwire)."""
