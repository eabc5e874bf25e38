"""Convenience wrapper for running dnlsmi directly from source tree."""

import sys

from dnlsmi.cli import main

if __name__ == '__main__':
  sys.exit(main())
