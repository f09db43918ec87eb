"""Time-bin FCQN simulator: witnesses, time-shift attack, MDI certification."""

__version__ = "0.4.0"
