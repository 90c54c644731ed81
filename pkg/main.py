"""Application entry point for the LT-CIL command line harness."""

from app.views.cli_view import run_cli


if __name__ == "__main__":
    raise SystemExit(run_cli())
