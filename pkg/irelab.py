# irelab.py
"""Entry point: python irelab.py <command> ... (see backend/cli.py)."""

from backend.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
