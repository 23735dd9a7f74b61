"""
qghalfspace - Command Line Entry Point
--------------------------------------
Run this script (or the `qghs` console script) with a subcommand:

    python run.py run --config runs/two_mode.cfg --out output/two_mode
"""

import os
import sys

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.app import run_command  # noqa: E402
from config.settings import get_settings  # noqa: E402


def main() -> int:
    """Application entry point."""
    settings = get_settings()

    # Validate configuration
    validation = settings.validate_all()

    if not all(validation.values()):
        print("\nConfiguration Warning:", file=sys.stderr)
        for key, valid in validation.items():
            status = "ok" if valid else "invalid"
            print(f"    {key.upper()}: {status}", file=sys.stderr)
        print("\n    Please check your .env file.\n", file=sys.stderr)

    return run_command()


if __name__ == "__main__":
    sys.exit(main())
