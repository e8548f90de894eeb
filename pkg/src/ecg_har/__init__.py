"""ECG-only human activity recognition pipeline on a synthetic cohort."""

__version__ = "0.1.0"
