"""Team contest salience - command-line entry point.

Solves two-team majoritarian multi-battle Tullock contests and verifies
the supporting results: equilibrium checks, log-concavity, the exact PSD
certificate, temporal invariance and comparative statics.

Usage:
    python app.py --help
    python app.py solve spec.json

Environment Variables:
    CONTEST_SEED, CONTEST_JOBS, CONTEST_LOG_LEVEL, CONTEST_ENUMERATION_CAP,
    CONTEST_SLOW_SECONDS (see src/utils/config.py); a local .env file is
    loaded first.
"""

import sys

from dotenv import load_dotenv

from src.cli import run

# Load environment variables
load_dotenv()


def main() -> None:
    """Main application entry point."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
