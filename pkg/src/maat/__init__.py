"""Malware labeling from time series of antivirus scan reports."""

__version__ = "0.1.0"
