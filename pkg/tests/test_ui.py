import logging

import pytest

from epivar import ui


@pytest.fixture
def plain(monkeypatch):
    monkeypatch.setattr(ui, "HAVE_RICH", False)


@pytest.mark.parametrize("name, level", [
    ("quiet", logging.WARNING),
    ("debug", logging.DEBUG),
    ("INFO", logging.INFO),
    ("chatty", logging.INFO),
])
def test_log_levels(name, level):
    assert ui.setup_logging(name).level == level


def test_env_picks_level(monkeypatch):
    monkeypatch.setenv("EPIVAR_LOG", "debug")
    assert ui.setup_logging().level == logging.DEBUG


def test_plain_messages(plain, capsys):
    ui.ok("done")
    ui.err("broken")
    ui.info("note")
    out = capsys.readouterr().out.splitlines()
    assert out == [f"{ui.PASS_MARK} done", f"{ui.FAIL_MARK} broken", "note"]


def test_plain_check_table(plain, capsys):
    ui.check_table("toy", [("first", "pass", "verdict=holds"), ("second", "error", "boom")])
    out = capsys.readouterr().out
    assert "\033[" not in out
    assert out.splitlines()[0] == "toy"
    assert "first" in out and "verdict=holds" in out and "boom" in out


def test_plain_banner(plain, capsys):
    ui.banner("sub")
    first, second = capsys.readouterr().out.splitlines()
    assert first.startswith("epivar ") and first.endswith(": sub")
    assert second == "=" * len(first)


def test_plain_rule(plain, capsys):
    ui.rule()
    ui.rule("summary")
    bare, titled = capsys.readouterr().out.splitlines()
    assert bare == "-" * 60
    assert len(titled) == 60 and " summary " in titled and titled.startswith("-")
