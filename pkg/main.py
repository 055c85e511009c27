#!/usr/bin/env python3
"""
liftpool command-line launcher
Usage: python main.py <decompose|train|compare|bench|gradcheck|export> [options]
"""

import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
