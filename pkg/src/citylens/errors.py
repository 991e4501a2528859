"""Exception taxonomy shared by every citylens module.

Each error class corresponds to one contract violation; the HTTP layer maps
them onto status codes in one place (`citylens.service.app`).
"""


class CityError(Exception):
    """Base class for all citylens errors."""


# event store
class OutOfOrderEvent(CityError):
    """Event id is not last+1, or its timestamp regresses."""


class UnknownEntity(CityError):
    """Entity was never created, or is not live at the requested time."""


class DuplicateCreate(CityError):
    """Create for an entity that already has a Create in the log."""


class DeletedEntity(CityError):
    """Mutation addressed to an entity after its Delete."""


class SelfRelation(CityError):
    """Relation subject equals its object."""


class UnknownRelation(CityError):
    """Unrelate without a matching open relation."""


class WrongKind(CityError):
    """Entity exists but has the wrong kind for the operation."""


class InvalidRange(CityError):
    """Time range with t0 > t1, or a non-positive step."""


# geometry / spatial index
class InvalidGeometry(CityError):
    """Ring is self-intersecting, degenerate, or out of coordinate range."""


class Unassigned(CityError):
    """Point falls outside the administrative coverage."""


# scene catalog
class OrphanLayer(CityError):
    """Scene object references a layer that is not in the tree."""


class UnknownLayer(CityError):
    """Layer id not present in the tree."""


class LatitudeOutOfRange(CityError):
    """Latitude beyond the Web-Mercator limit."""


# analytics
class UnknownRegion(CityError):
    """Region selector references admin regions that do not exist."""


class OutOfRange(CityError):
    """Histogram value outside [min, max]."""


class TooFewValues(CityError):
    """Normal fit needs at least two values."""


class PointOutsideBox(CityError):
    """Heat-grid input point outside the grid box."""


# traffic
class UnknownSegment(CityError):
    """Sample for a road segment that was never registered."""


class NegativeSpeed(CityError):
    """Sample speed negative or non-finite."""


# persistence / cli
class StorageFailure(CityError):
    """Append could not be made durable; the event was not applied."""


class CorruptLog(CityError):
    """Non-final malformed line, or a line that does not replay cleanly."""


class InvalidSpec(CityError):
    """Generation spec fails validation."""


class ParseError(CityError):
    """Input document is not a parseable feature collection."""
