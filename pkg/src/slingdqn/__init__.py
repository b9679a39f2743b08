"""Double dueling deep Q-learning on a deterministic toy slingshot game."""

__version__ = "0.1.0"
