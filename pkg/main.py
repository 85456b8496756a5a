# main.py
# Entry point CLI: python main.py <subcommand> ...

import sys

from cli.cli_core import run_command


if __name__ == "__main__":
    sys.exit(run_command(sys.argv[1:]))
