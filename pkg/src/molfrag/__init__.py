"""Class-correlated molecular fragment mining and fragment-based SAR modelling."""

__version__ = "0.1.0"
