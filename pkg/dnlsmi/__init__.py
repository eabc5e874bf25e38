from .dnlsmi import __version__
