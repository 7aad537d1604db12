"""Active-perception landing stack: water-surface simulator, glint-robust
target detection, and a DDPG agent that learns to land on the target."""

__version__ = "0.1.0"
