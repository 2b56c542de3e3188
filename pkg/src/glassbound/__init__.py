"""Glass-surface segmentation with internal/external boundary attention."""

__version__ = "0.1.0"
