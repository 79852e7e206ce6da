import pytest


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep a developer's ~/.config/coinflip-lab and environment out of every test."""
    monkeypatch.setattr("coinflip_lab.config.CONFIG_DIR", tmp_path / "config")
    monkeypatch.setattr("coinflip_lab.config.CONFIG_FILE", tmp_path / "config" / "config.json")
    monkeypatch.delenv("COINFLIP_LAB_THREADS", raising=False)
    return tmp_path / "config" / "config.json"
