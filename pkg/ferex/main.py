import logging
import sys

from ferex import __version__
from ferex.cli import COMMANDS, build_parser
from ferex.errors import FerexError, UsageError

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def configure_logging(level: str = "INFO") -> None:
    # stdout carries command results, so logs go to stderr
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )
    logging.getLogger().setLevel(level.upper())


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or "INFO")
    logger.debug("[CLI] ferex %s: %s", __version__, args.command)

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"ferex {args.command}: error: {e}", file=sys.stderr)
        return 2
    except FerexError as e:
        print(f"ferex {args.command}: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"ferex {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
