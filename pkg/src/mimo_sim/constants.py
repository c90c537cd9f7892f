"""Physical and mathematical constants used throughout the simulator."""

SPEED_OF_LIGHT = 299792458.0
"""Speed of light in vacuum, m/s."""

FREE_SPACE_IMPEDANCE = 376.730313668
"""Impedance of free space (eta_0), ohms."""

EULER_GAMMA = 0.5772156649015328606
"""Euler-Mascheroni constant."""
