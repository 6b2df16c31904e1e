"""capture-lab: finite construction schemes, capture search and forcing simulation."""

__version__ = "0.1.0"
