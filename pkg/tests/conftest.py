import pytest
from pathlib import Path
from mindblend.config import reset_config
import mindblend as _mindblend_pkg


@pytest.fixture(autouse=True)
def use_default_config(monkeypatch):
    """Force package defaults for all tests — ignore any mindblend.yaml in CWD.
    The CLI integration tests drop the variable before spawning subprocesses.
    """
    defaults = Path(_mindblend_pkg.__file__).parent / "defaults" / "mindblend.yaml"
    monkeypatch.setenv("MINDBLEND_CONFIG_PATH", str(defaults))
    reset_config()
    yield
    reset_config()
