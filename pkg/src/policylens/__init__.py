"""Discovery, extraction and analysis of smart-device privacy policies."""

__version__ = "0.1.0"
