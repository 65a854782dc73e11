"""Terminal output for epivar: rich when it is installed, ANSI text otherwise.

Every user-facing line goes through info/ok/warn/err, separators through rule,
check tables through check_table. JSON payloads are printed by the CLI directly
so they stay machine-readable. Color is dropped when NO_COLOR is set or stdout
is piped.

Logging: library modules log through ``logging.getLogger(__name__)``;
``setup_logging()`` attaches one handler (RichHandler when available) to the
``epivar`` logger on stderr. EPIVAR_LOG or ``--log`` picks the level:
quiet (warnings only), info (default) or debug.
"""

import codecs
import logging
import os
import sys

ACCENT = "#F5C542"
TEXT = "#E8E6F0"
MUTED = "#6E6A86"
ALERT = "#FF5370"

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

try:
    from rich import box
    from rich.console import Console
    from rich.logging import RichHandler
    from rich.panel import Panel
    from rich.table import Table
    from rich.text import Text
    _console = Console()
    HAVE_RICH = True
except ImportError:
    _console = None
    HAVE_RICH = False


def _ansi_enabled():
    return sys.stdout.isatty() and "NO_COLOR" not in os.environ


def _encodable(symbol):
    encoding = getattr(sys.stdout, "encoding", None) or "ascii"
    try:
        codecs.encode(symbol, encoding)
    except (UnicodeEncodeError, LookupError):
        return False
    return True


PASS_MARK = "✔" if _encodable("✔") else "+"
FAIL_MARK = "✘" if _encodable("✘") else "x"

# message kind -> (prefix, ANSI SGR code or None, rich style)
KINDS = {
    "info": ("", None, TEXT),
    "ok": (PASS_MARK + " ", "92", ACCENT),
    "warn": ("! ", "93", "yellow"),
    "err": (FAIL_MARK + " ", "91", ALERT),
}
STATUS_KIND = {"pass": "ok", "fail": "err", "error": "err"}


def paint(text, code):
    if code is None or not _ansi_enabled():
        return text
    return f"\033[{code}m{text}\033[0m"


def say(kind, msg):
    prefix, code, style = KINDS[kind]
    line = prefix + str(msg)
    if HAVE_RICH:
        _console.print(line, style=style, highlight=False, markup=False)
    else:
        print(paint(line, code))


def info(msg):
    say("info", msg)


def ok(msg):
    say("ok", msg)


def warn(msg):
    say("warn", msg)


def err(msg):
    say("err", msg)


def setup_logging(level=None):
    """Configure the package logger once. `level` overrides EPIVAR_LOG."""
    requested = (level or os.environ.get("EPIVAR_LOG") or "info").strip().lower()
    logger = logging.getLogger("epivar")
    logger.setLevel(LOG_LEVELS.get(requested, logging.INFO))
    if not logger.handlers:
        if HAVE_RICH:
            handler = RichHandler(console=Console(stderr=True), show_path=False,
                                  markup=False, rich_tracebacks=False)
            handler.setFormatter(logging.Formatter("%(message)s"))
        else:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
        logger.propagate = False
    if requested not in LOG_LEVELS:
        logger.warning("EPIVAR_LOG=%r not understood; using info", requested)
    return logger


def banner(subtitle="decomposable functions, second order"):
    from . import __version__

    if HAVE_RICH:
        heading = Text.assemble(("epivar ", f"bold {ACCENT}"), (__version__, f"bold {TEXT}"))
        _console.print(Panel(Text(subtitle, style=MUTED), title=heading, title_align="left",
                             border_style=ACCENT, box=box.ROUNDED, padding=(0, 2)))
        return
    heading = f"epivar {__version__}: {subtitle}"
    print(paint(heading, "1;33"))
    print(paint("=" * len(heading), "33"))


def rule(title=""):
    if HAVE_RICH:
        _console.rule(f"[{MUTED}]{title}[/]" if title else "", style=MUTED)
        return
    print(paint((" " + title + " ").center(60, "-") if title else "-" * 60, "2"))


def check_table(title, rows):
    """Render scenario checks. `rows` is a list of (name, status, detail)."""
    if HAVE_RICH:
        table = Table(title=title, box=box.SIMPLE_HEAD, title_style=f"bold {ACCENT}",
                      header_style=MUTED)
        table.add_column("check")
        table.add_column("status")
        table.add_column("detail", overflow="fold")
        for name, status, detail in rows:
            style = KINDS[STATUS_KIND[status]][2] if status in STATUS_KIND else "yellow"
            table.add_row(name, Text(status, style=style), str(detail))
        _console.print(table)
        return
    print(paint(title, "1"))
    for name, status, detail in rows:
        code = KINDS[STATUS_KIND[status]][1] if status in STATUS_KIND else "93"
        print(f"  {name:<34} {paint(f'{status:<6}', code)} {detail}")
