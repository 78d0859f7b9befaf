#!/usr/bin/env python
"""
Toolkit Entry Point
Runs the bicwave command-line interface.

Usage:
    python run.py eig-beta --config verify_circle --out runs/verify
    python run.py band --config my_band.json --workers 8
    python run.py recipes
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from bicwave.cli import cli  # noqa: E402

if __name__ == "__main__":
    cli(prog_name="bicwave")
