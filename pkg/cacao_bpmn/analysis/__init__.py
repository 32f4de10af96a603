"""Analysis of process structure and construct usage."""

from .constructs import CONSTRUCT_ROWS, ConstructCount, count_constructs
from .regions import Region, detect_regions

__all__ = [
    "CONSTRUCT_ROWS",
    "ConstructCount",
    "Region",
    "count_constructs",
    "detect_regions",
]
