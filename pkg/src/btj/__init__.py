"""SL_2 over non-archimedean local fields and their Bruhat-Tits trees."""

__version__ = "0.1.0"
