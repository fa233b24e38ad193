"""mdrep: micro-Doppler signature representations and classifiers."""

__version__ = "0.1.0"
