import re
from typing import Dict, List

from ..internal.errors import NotADownSet, NotConvex, ValidationError
from ..internal.poset import Poset
from .logging_setup import get_logger

logger = get_logger('utils.utils')

# a comma not preceded by a backslash; "\," stays inside a label
_SEPARATOR = re.compile(r"(?<!\\),")


class Utils:

    @staticmethod
    def split_labels(text: str) -> List[str]:
        """Comma-separated parts, stripped, with empty parts dropped and "\\," unescaped."""
        parts = (part.replace("\\,", ",").strip() for part in _SEPARATOR.split(text or ""))
        return [part for part in parts if part]

    @staticmethod
    def parse_labels(text: str, poset: Poset) -> int:
        """Mask of a comma-separated element list; an empty string is the empty set."""
        labels = Utils.split_labels(text)
        for label in labels:
            if label not in poset.elements:
                raise ValidationError("declared elements", f"unknown element {label!r}")
        return poset.mask_of(labels)

    @staticmethod
    def parse_down_set(text: str, poset: Poset) -> int:
        mask = Utils.parse_labels(text, poset)
        if not poset.is_down_set(mask):
            raise NotADownSet(f"{{{text}}} is not downward closed")
        return mask

    @staticmethod
    def parse_convex(text: str, poset: Poset) -> int:
        mask = Utils.parse_labels(text, poset)
        if not poset.is_convex(mask):
            raise NotConvex(f"{{{text}}} is not convex")
        return mask

    @staticmethod
    def parse_assignment(text: str) -> Dict[str, int]:
        """'a=0,b=0,c=1' as a dict of integers."""
        out: Dict[str, int] = {}
        for part in Utils.split_labels(text):
            key, sep, value = part.partition("=")
            if not sep or not key.strip():
                raise ValidationError("assignment", f"expected label=integer, got {part!r}")
            try:
                out[key.strip()] = int(value)
            except ValueError:
                raise ValidationError("assignment", f"{value!r} is not an integer") from None
        return out
