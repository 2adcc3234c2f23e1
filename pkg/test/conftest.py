import pytest

from src.internal.exact_linalg import BINARY, INTEGERS, RATIONALS
from src.internal.graded_diff import GradedDifferentialGroup
from src.internal.poset import Poset
from src.utils.config_manager import ConfigManager


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep config and logs out of the user's directories."""
    monkeypatch.setattr("appdirs.user_config_dir", lambda *a, **k: str(tmp_path / "config"))
    monkeypatch.setattr("appdirs.user_log_dir", lambda *a, **k: str(tmp_path / "logs"))
    monkeypatch.delenv("CEFORGE_MAX_ELEMENTS", raising=False)
    ConfigManager.reset_default(ConfigManager(tmp_path / "config", persist=False))
    yield
    ConfigManager.reset_default()


@pytest.fixture
def chain2():
    """p < q over Z with d e_q = 2 e_p."""
    poset = Poset(["p", "q"], [("p", "q")])
    return GradedDifferentialGroup.from_blocks(poset, INTEGERS, {"p": 1, "q": 1}, {("p", "q"): [[2]]})


@pytest.fixture
def antichain():
    poset = Poset(["a", "b"])
    return GradedDifferentialGroup.from_blocks(poset, INTEGERS, {"a": 1, "b": 1}, {})


@pytest.fixture
def v_poset():
    """a < c, b < c over Z2 with d e_c = e_a + e_b, degrees (0, 0, 1)."""
    poset = Poset(["a", "b", "c"], [("a", "c"), ("b", "c")])
    return GradedDifferentialGroup.from_blocks(poset, BINARY, {"a": 1, "b": 1, "c": 1},
                                               {("a", "c"): [[1]], ("b", "c"): [[1]]},
                                               degrees={"a": [0], "b": [0], "c": [1]})


@pytest.fixture
def chain3():
    """p < q < r over Q with d e_q = e_p."""
    poset = Poset(["p", "q", "r"], [("p", "q"), ("q", "r")])
    return GradedDifferentialGroup.from_blocks(poset, RATIONALS, {"p": 1, "q": 1, "r": 1}, {("p", "q"): [[1]]})


@pytest.fixture
def running_examples(chain2, antichain, v_poset, chain3):
    return [chain2, antichain, v_poset, chain3]
