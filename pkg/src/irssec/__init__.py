"""Max-min secrecy-rate optimization for multi-IRS assisted MISO downlinks."""

__version__ = "0.1.0"
