import pytest

from src.internal.errors import NotADownSet, NotConvex, ValidationError
from src.internal.poset import Poset
from src.utils.utils import Utils


@pytest.fixture
def poset():
    return Poset(["p", "q", "r", "x,y"], [("p", "q"), ("q", "r")])


@pytest.mark.parametrize("text, parts", [
    ("", []),
    (None, []),
    ("p", ["p"]),
    (" p , q ,", ["p", "q"]),
    ("p,,q", ["p", "q"]),
    ("x\\,y,p", ["x,y", "p"]),
])
def test_split_labels(text, parts):
    assert Utils.split_labels(text) == parts


def test_parse_labels(poset):
    assert Utils.parse_labels("p, r", poset) == poset.mask_of(["p", "r"])
    assert Utils.parse_labels("x\\,y", poset) == poset.mask_of(["x,y"])
    assert Utils.parse_labels("", poset) == 0
    with pytest.raises(ValidationError, match="unknown element 'x'"):
        Utils.parse_labels("x,y", poset)


def test_down_sets_and_convex_sets(poset):
    assert Utils.parse_down_set("p,q", poset) == poset.mask_of(["p", "q"])
    with pytest.raises(NotADownSet):
        Utils.parse_down_set("q", poset)
    with pytest.raises(NotConvex):
        Utils.parse_convex("p,r", poset)


def test_parse_assignment():
    assert Utils.parse_assignment("a=0, b=-1,c=2") == {"a": 0, "b": -1, "c": 2}
    with pytest.raises(ValidationError, match="label=integer"):
        Utils.parse_assignment("a=0,b")
    with pytest.raises(ValidationError, match="not an integer"):
        Utils.parse_assignment("a=zero")
