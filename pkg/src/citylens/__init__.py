"""citylens — a city-scale spatiotemporal entity platform.

An event-sourced store over city entities (people, households, buildings,
infrastructure), a layered scene catalog streamed as map tiles, region
statistics, and real-time/historical traffic — served over HTTP and driven
from a CLI.
"""

__version__ = "0.1.0"

from citylens.errors import CityError

__all__ = ["CityError", "__version__"]
