"""Well-rounded retractions of lattices and systole flows on genus-2 Teichmueller space."""

__version__ = "0.1.0"
