import json
import logging

import pytest

from processors.exceptions import OrderTooLarge, ValidationError
from utils.settings_manager import DEFAULT_SETTINGS, Settings, SettingsManager


def test_defaults():
    settings = SettingsManager().load()
    assert settings == DEFAULT_SETTINGS
    assert settings.ladder_depth == 5
    assert settings.rank_tolerance == 1e-10
    assert settings.frame_tolerance == 1e-20


def test_overrides_are_applied(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"ladder_depth": 3, "rank_tolerance": 1e-9, "preshift": False}))
    settings = SettingsManager(path).load()
    assert settings.ladder_depth == 3
    assert settings.rank_tolerance == 1e-9
    assert settings.preshift is False
    assert settings.clamp_ratio == DEFAULT_SETTINGS.clamp_ratio


def test_save_and_load(tmp_path):
    manager = SettingsManager(tmp_path / "nested" / "settings.json")
    saved = Settings(ladder_depth=3, verify_workers=2)
    manager.save(saved)
    assert manager.load() == saved


@pytest.mark.parametrize(
    "overrides",
    [
        {"unknown": 1},
        {"ladder_depth": 4},
        {"ladder_depth": 9},
        {"ladder_depth": 3.0},
        {"rank_tolerance": 0.0},
        {"rank_tolerance": "small"},
        {"preshift": 1},
        {"moment_order_cap": 18},
        {"verify_workers": 0},
    ],
)
def test_invalid_overrides(overrides):
    with pytest.raises(ValidationError):
        SettingsManager.apply(DEFAULT_SETTINGS, overrides)


def test_bad_files(tmp_path):
    with pytest.raises(ValidationError):
        SettingsManager(tmp_path / "missing.json").load()
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ValidationError):
        SettingsManager(broken).load()
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(ValidationError):
        SettingsManager(listed).load()


def test_deep_ladder_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="utils.settings_manager"):
        settings = SettingsManager.apply(DEFAULT_SETTINGS, {"ladder_depth": 7})
    assert settings.ladder_depth == 7
    assert "poorly conditioned" in caplog.text


def test_order_caps():
    settings = Settings(moment_order_cap=8, derivative_order_cap=9)
    assert settings.check_moment_order(8) == 8
    assert settings.check_derivative_order(9) == 9
    with pytest.raises(OrderTooLarge, match="moment_order_cap"):
        settings.check_moment_order(10)
    with pytest.raises(OrderTooLarge, match="derivative_order_cap"):
        settings.check_derivative_order(10)
