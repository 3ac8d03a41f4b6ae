#!/usr/bin/env python3
"""Compare the AO solution with the exhaustive grid optimum on small two-antenna instances.

Thin wrapper around ``pinchrsma oracle-check``; any CLI flag is passed through.
"""

import sys

from pinchrsma.cli import main

if __name__ == "__main__":
    sys.exit(main(["oracle-check", *sys.argv[1:]]))
