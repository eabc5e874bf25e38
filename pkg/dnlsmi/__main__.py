"""__main__: executed when dnlsmi directory is called as a script."""

import sys

from .cli import main
sys.exit(main())
