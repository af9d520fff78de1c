"""mirrorbus: deterministic face-mimicry pipeline simulation.

Topic bus with a virtual clock and a JSON/WebSocket bridge, a simulated
perception stage, the gaze/expression mirroring controller, head and agent
actuation under hard joint limits, and a harness reproducing the three
pilot interaction conditions with objective metrics.
"""

__version__ = "0.1.0"
