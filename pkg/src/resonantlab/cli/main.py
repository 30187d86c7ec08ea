"""Command-line entry point: ``resonantlab <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 validity-monitor failure, 1 any other error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import traceback

from .. import NumericalAbort, ValidityError, __version__
from ..spectral.grid import set_workers
from .config import SCHEMA, ConfigError, load_file, resolve
from .manifest import Run
from .report import write_report

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_ABORT, EXIT_VALIDITY = 0, 1, 2, 3, 4

log = logging.getLogger("resonantlab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_globals(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    p.add_argument("--seed", default=argparse.SUPPRESS, help="global seed (default 0)")
    p.add_argument("--threads", default=argparse.SUPPRESS, help="FFT worker threads (default 1)")
    p.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resonantlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, params in SCHEMA.items():
        sp = sub.add_parser(name)
        _add_globals(sp)
        for prm in params:
            extra = f" (default {prm.default})" if not prm.required and prm.default is not None else ""
            req = " [required]" if prm.required else ""
            sp.add_argument(prm.flag, dest=prm.key, default=argparse.SUPPRESS, help=prm.help + req + extra)
    return parser


def parse_config(argv):
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    path = ns.pop("config", None)
    out_dir = ns.pop("out_dir", None)
    file_values = load_file(path, command) if path else {}
    return resolve(command, file_values, ns, out_dir)


def run(cfg) -> int:
    from .commands import COMMANDS

    set_workers(cfg.threads)
    if cfg.command == "report":
        write_report(cfg.out_dir)
        return EXIT_OK
    r = Run(cfg)
    try:
        validity = COMMANDS[cfg.command](cfg, r)
        if validity and not r.validity:
            r.validity = validity
        r.finish("completed")
        return EXIT_OK
    except ValidityError as e:
        r.finish("failed", f"validity: {e}")
        log.error("validity monitor failed: %s", e)
        return EXIT_VALIDITY
    except NumericalAbort as e:
        r.finish("failed", f"numerical abort at step {e.step}: {e}")
        log.error("numerical abort: %s", e)
        return EXIT_ABORT
    except ValueError as e:
        r.finish("failed", f"precondition: {e}")
        log.error("%s", e)
        return EXIT_CONFIG
    except BaseException as e:
        r.finish("failed", f"{type(e).__name__}: {e}")
        if not isinstance(e, Exception):
            raise
        log.error("%s", traceback.format_exc())
        return EXIT_OTHER


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
