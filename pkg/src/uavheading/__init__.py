"""UAV heading optimization for a multi-antenna ground-to-air uplink."""

__version__ = "0.1.0"
