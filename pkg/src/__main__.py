#!/usr/bin/env python3
"""
Entry point for the FBNR toolkit when run as a module.
Usage: python -m src <command> [options]
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
